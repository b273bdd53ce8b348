from .binary import ParsedModule, decode_module
from .wat import assemble_wat

__all__ = ["ParsedModule", "decode_module", "assemble_wat"]
