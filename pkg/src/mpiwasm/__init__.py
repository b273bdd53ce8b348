"""mpiwasm: a standalone WebAssembly embedder for MPI programs.

Runs MPI applications compiled to wasm32, either as an in-process
simulated rank group or as one rank per process over the host MPI
library. See the `mpiwasm` and `mpiwasm-bench` console entry points.
"""

from .abi import ABI_VERSION, abi_manifest
from .errors import MpiWasmError

__all__ = ["ABI_VERSION", "abi_manifest", "MpiWasmError"]
__version__ = "0.1.0"
