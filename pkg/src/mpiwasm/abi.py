"""Guest-facing MPI ABI: integer handle codes, handle tables, per-instance
translation state, and the 16-byte status wire format.

The predefined constant values below are frozen as ABI v1 and emitted as a
machine-readable manifest; the guest SDK generates its `mpi.h` from that
manifest, so host and guest can never disagree silently.
"""

from __future__ import annotations

import struct
import threading
import time
from dataclasses import dataclass, field

from .errors import ReleasePredefined, UnknownHandle
from .memory import LinearMemoryView, to_host

ABI_VERSION = 1

# communicators
MPI_COMM_WORLD = 0
MPI_COMM_SELF = 1
MPI_COMM_NULL = -1

# datatypes
MPI_BYTE = 0
MPI_CHAR = 1
MPI_INT = 2
MPI_FLOAT = 3
MPI_DOUBLE = 4
MPI_LONG = 5
MPI_UNSIGNED = 6
MPI_LONG_LONG = 7
MPI_UNSIGNED_LONG = 8
MPI_DATATYPE_NULL = -1

# reduction ops
MPI_SUM = 0
MPI_MAX = 1
MPI_MIN = 2
MPI_PROD = 3
MPI_LAND = 4
MPI_LOR = 5
MPI_BAND = 6
MPI_BOR = 7
MPI_OP_NULL = -1

# wildcards / sentinels
MPI_ANY_SOURCE = -1
MPI_ANY_TAG = -1
MPI_STATUS_IGNORE = 0  # guest address 0
MPI_REQUEST_NULL = -1
MPI_UNDEFINED = -32766

# error codes
MPI_SUCCESS = 0
MPI_ERR_TYPE = 3
MPI_ERR_COMM = 5
MPI_ERR_OP = 9
MPI_ERR_ARG = 12
MPI_ERR_OTHER = 15

STATUS_SIZE = 16  # source, tag, error, count_bytes: 4 x little-endian i32
_STATUS = struct.Struct("<iiii")

# LP64 guest model: MPI_LONG is 8 bytes even though wasm32 C `long` is 4;
# the generated header maps MPI_LONG to an explicit 64-bit typedef.
DATATYPE_SIZES = {
    MPI_BYTE: 1,
    MPI_CHAR: 1,
    MPI_INT: 4,
    MPI_FLOAT: 4,
    MPI_UNSIGNED: 4,
    MPI_DOUBLE: 8,
    MPI_LONG: 8,
    MPI_LONG_LONG: 8,
    MPI_UNSIGNED_LONG: 8,
}

DATATYPE_NAMES = {
    MPI_BYTE: "MPI_BYTE",
    MPI_CHAR: "MPI_CHAR",
    MPI_INT: "MPI_INT",
    MPI_FLOAT: "MPI_FLOAT",
    MPI_DOUBLE: "MPI_DOUBLE",
    MPI_LONG: "MPI_LONG",
    MPI_UNSIGNED: "MPI_UNSIGNED",
    MPI_LONG_LONG: "MPI_LONG_LONG",
    MPI_UNSIGNED_LONG: "MPI_UNSIGNED_LONG",
}

OP_NAMES = {
    MPI_SUM: "MPI_SUM",
    MPI_MAX: "MPI_MAX",
    MPI_MIN: "MPI_MIN",
    MPI_PROD: "MPI_PROD",
    MPI_LAND: "MPI_LAND",
    MPI_LOR: "MPI_LOR",
    MPI_BAND: "MPI_BAND",
    MPI_BOR: "MPI_BOR",
}

_MANIFEST_CONSTANTS = [
    ("MPI_COMM_WORLD", MPI_COMM_WORLD),
    ("MPI_COMM_SELF", MPI_COMM_SELF),
    ("MPI_COMM_NULL", MPI_COMM_NULL),
    ("MPI_BYTE", MPI_BYTE),
    ("MPI_CHAR", MPI_CHAR),
    ("MPI_INT", MPI_INT),
    ("MPI_FLOAT", MPI_FLOAT),
    ("MPI_DOUBLE", MPI_DOUBLE),
    ("MPI_LONG", MPI_LONG),
    ("MPI_UNSIGNED", MPI_UNSIGNED),
    ("MPI_LONG_LONG", MPI_LONG_LONG),
    ("MPI_UNSIGNED_LONG", MPI_UNSIGNED_LONG),
    ("MPI_DATATYPE_NULL", MPI_DATATYPE_NULL),
    ("MPI_SUM", MPI_SUM),
    ("MPI_MAX", MPI_MAX),
    ("MPI_MIN", MPI_MIN),
    ("MPI_PROD", MPI_PROD),
    ("MPI_LAND", MPI_LAND),
    ("MPI_LOR", MPI_LOR),
    ("MPI_BAND", MPI_BAND),
    ("MPI_BOR", MPI_BOR),
    ("MPI_OP_NULL", MPI_OP_NULL),
    ("MPI_ANY_SOURCE", MPI_ANY_SOURCE),
    ("MPI_ANY_TAG", MPI_ANY_TAG),
    ("MPI_REQUEST_NULL", MPI_REQUEST_NULL),
    ("MPI_UNDEFINED", MPI_UNDEFINED),
    ("MPI_SUCCESS", MPI_SUCCESS),
    ("MPI_ERR_TYPE", MPI_ERR_TYPE),
    ("MPI_ERR_COMM", MPI_ERR_COMM),
    ("MPI_ERR_OP", MPI_ERR_OP),
    ("MPI_ERR_ARG", MPI_ERR_ARG),
    ("MPI_ERR_OTHER", MPI_ERR_OTHER),
]


def abi_manifest() -> str:
    """The ABI constants table: one key=value per line, version first.

    Single source of truth for the guest SDK's header generator.
    """
    lines = [f"ABI_VERSION={ABI_VERSION}", f"STATUS_SIZE={STATUS_SIZE}"]
    lines += [f"{name}={value}" for name, value in _MANIFEST_CONSTANTS]
    lines += [
        f"SIZEOF_{DATATYPE_NAMES[code]}={size}" for code, size in sorted(DATATYPE_SIZES.items())
    ]
    return "\n".join(lines) + "\n"


def datatype_size(code: int) -> int:
    try:
        return DATATYPE_SIZES[code]
    except KeyError:
        raise UnknownHandle("datatype", code) from None


class HandleTable:
    """Map from guest i32 codes to host-side objects.

    Codes increase monotonically and are never reused within an instance.
    Lookups are lock-free (GIL-atomic dict reads); register/release take
    the exclusive lock so a monitor worker can sample safely.
    """

    def __init__(self, kind: str, predefined: dict[int, object] | None = None):
        self.kind = kind
        self.entries: dict[int, object] = dict(predefined or {})
        self.predefined = frozenset(self.entries)
        self.next_code = max(self.entries, default=-1) + 1
        self._lock = threading.Lock()

    def translate(self, code: int):
        try:
            return self.entries[code]
        except KeyError:
            raise UnknownHandle(self.kind, code) from None

    def __contains__(self, code: int) -> bool:
        return code in self.entries

    def register(self, handle) -> int:
        with self._lock:
            code = self.next_code
            self.next_code += 1
            self.entries[code] = handle
            return code

    def release(self, code: int):
        with self._lock:
            if code in self.predefined:
                raise ReleasePredefined(f"cannot release predefined {self.kind} {code}")
            try:
                return self.entries.pop(code)
            except KeyError:
                raise UnknownHandle(self.kind, code) from None


@dataclass
class Counters:
    translations: int = 0
    copies: int = 0
    hostcalls: int = 0
    compiles: int = 0
    translation_ns: list[int] = field(default_factory=list)


@dataclass
class Env:
    """Per-instance global translation state."""

    memory: LinearMemoryView | None = None
    comms: HandleTable = None
    datatypes: HandleTable = None
    ops: HandleTable = None
    requests: HandleTable = None
    rank: int = -1
    world_size: int = 0
    counters: Counters = field(default_factory=Counters)
    initialized: bool = False
    finalized: bool = False
    instrument: bool = False
    init_clock: float | None = None  # MPI_Wtime epoch

    def __post_init__(self):
        if self.comms is None:
            self.comms = HandleTable(
                "comm", {MPI_COMM_WORLD: "world", MPI_COMM_SELF: "self"}
            )
        if self.datatypes is None:
            self.datatypes = HandleTable("datatype", dict(DATATYPE_NAMES))
        if self.ops is None:
            self.ops = HandleTable("op", dict(OP_NAMES))
        if self.requests is None:
            self.requests = HandleTable("request", {})


def translate_datatype(env: Env, code: int):
    """Translate a guest datatype code to its host handle.

    Records wall-clock latency per call when instrumentation is on.
    """
    if env.instrument:
        t0 = time.perf_counter_ns()
        handle = env.datatypes.translate(code)
        env.counters.translation_ns.append(time.perf_counter_ns() - t0)
    else:
        handle = env.datatypes.translate(code)
    env.counters.translations += 1
    return handle


def translate_comm(env: Env, code: int):
    env.counters.translations += 1
    return env.comms.translate(code)


def register_comm(env: Env, handle) -> int:
    return env.comms.register(handle)


def release_comm(env: Env, code: int):
    return env.comms.release(code)


def translate_op(env: Env, code: int):
    env.counters.translations += 1
    return env.ops.translate(code)


def write_status(
    env: Env, addr: int, source: int, tag: int, error: int, count_bytes: int
) -> None:
    """Write the 16-byte status record; address 0 means MPI_STATUS_IGNORE."""
    if addr == MPI_STATUS_IGNORE:
        return
    span = to_host(env.memory, addr, STATUS_SIZE)
    _STATUS.pack_into(env.memory.buffer, span.offset, source, tag, error, count_bytes)


def read_status(env: Env, addr: int) -> tuple[int, int, int, int]:
    span = to_host(env.memory, addr, STATUS_SIZE)
    return _STATUS.unpack_from(env.memory.buffer, span.offset)
