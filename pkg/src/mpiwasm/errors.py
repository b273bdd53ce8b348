"""Exception hierarchy for the embedder.

Guest-facing failures (bad addresses, unknown handles) are converted to MPI
error codes at the hostcall boundary; everything here is host-side only.
"""


class MpiWasmError(Exception):
    """Base class for all embedder errors."""


class MalformedModule(MpiWasmError):
    """The byte stream is not a valid Wasm binary."""


class UnsupportedFeature(MpiWasmError):
    """Module requires a feature outside the shipped subset (threads,
    shared/64-bit memory, >65536 pages)."""


class CompilationFailed(MpiWasmError):
    pass


class CacheCorrupt(MpiWasmError):
    """Cached artifact failed its integrity check."""


class MissingExport(MpiWasmError):
    pass


class Trap(MpiWasmError):
    """Guest execution trapped (out-of-bounds access, unreachable, ...).

    Traps never terminate the embedder; they unwind the failing instance
    only.
    """


class ProcExit(MpiWasmError):
    """Guest requested termination via WASI proc_exit."""

    def __init__(self, code: int):
        super().__init__(f"proc_exit({code})")
        self.code = code


class OutOfBounds(MpiWasmError):
    """Guest span does not fit in linear memory."""


class NotInRegion(MpiWasmError):
    """Host address outside the linear-memory view."""


class ExportMissing(MpiWasmError):
    """Module lacks a required export (malloc/free)."""


class GuestAllocFailed(MpiWasmError):
    """Guest allocator returned null."""


class UnknownHandle(MpiWasmError):
    """ABI code not present in its handle table."""

    def __init__(self, kind: str, code: int):
        super().__init__(f"unknown {kind} handle {code}")
        self.kind = kind
        self.code = code


class ReleasePredefined(MpiWasmError):
    pass


class SandboxError(MpiWasmError):
    pass


class NotADirectory(SandboxError):
    pass


class DuplicateAfterSuffixing(SandboxError):
    pass


class NotCapable(SandboxError):
    """Guest path resolves outside every preopen."""


class RightsViolation(SandboxError):
    """Write access requested under a read-only preopen."""


class BackendError(MpiWasmError):
    """Transport backend failure; mapped to MPI_ERR_OTHER at the boundary."""


class GroupAborted(MpiWasmError):
    """MPI_Abort was called somewhere in the rank group."""

    def __init__(self, rank: int, errcode: int):
        super().__init__(f"rank {rank} called MPI_Abort({errcode})")
        self.rank = rank
        self.errcode = errcode
