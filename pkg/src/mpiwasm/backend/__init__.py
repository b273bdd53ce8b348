from .base import Backend, CollOp
from .sim import SimBackend, SimComm, SimGroup

__all__ = ["Backend", "CollOp", "SimBackend", "SimComm", "SimGroup"]
