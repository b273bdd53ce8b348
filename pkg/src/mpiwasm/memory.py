"""Guest <-> host address translation over one instance's linear memory.

A guest address is a 32-bit offset; the view records the memory's base host
address and current length. Translation is offset arithmetic done in wide
(unbounded) Python integers, so `offset + len` can never wrap. No payload
bytes are copied here: a HostSpan exposes the underlying buffer through a
memoryview.

Memory growth can move the buffer, so views must be re-taken at every
host-call entry; a HostSpan must not outlive the call that created it.
"""

from __future__ import annotations

import ctypes
import struct
from dataclasses import dataclass

from .errors import NotInRegion, OutOfBounds

GUEST_ADDR_MAX = 1 << 32

_SCALARS = {
    "i32": struct.Struct("<i"),
    "u32": struct.Struct("<I"),
    "i64": struct.Struct("<q"),
    "f32": struct.Struct("<f"),
    "f64": struct.Struct("<d"),
}


def _buffer_address(buf: bytearray) -> int:
    # transient export; released as soon as the c_char view is collected
    return ctypes.addressof(ctypes.c_char.from_buffer(buf))


@dataclass
class LinearMemoryView:
    """Snapshot of one instance's linear memory location and extent."""

    buffer: bytearray
    base: int
    length: int

    @classmethod
    def of(cls, buf: bytearray) -> "LinearMemoryView":
        return cls(buffer=buf, base=_buffer_address(buf), length=len(buf))


def view_of(instance) -> LinearMemoryView:
    """Take a fresh view; call at every host-call entry (growth may move
    or extend the buffer)."""
    return LinearMemoryView.of(instance.mem)


@dataclass
class HostSpan:
    """A validated, in-bounds window of a linear memory. Zero-copy."""

    view: LinearMemoryView
    offset: int
    length: int

    @property
    def start(self) -> int:
        return self.view.base + self.offset

    def data(self) -> memoryview:
        """Writable zero-copy window over the span's bytes."""
        return memoryview(self.view.buffer)[self.offset : self.offset + self.length]

    def read(self) -> bytes:
        """Materialize the span's bytes (copies; callers must account)."""
        return bytes(self.view.buffer[self.offset : self.offset + self.length])

    def write(self, payload) -> None:
        if len(payload) != self.length:
            raise OutOfBounds(f"payload {len(payload)} != span {self.length}")
        self.view.buffer[self.offset : self.offset + self.length] = payload


def to_host(view: LinearMemoryView, addr: int, length: int) -> HostSpan:
    """Translate (guest address, length) to a host span.

    All arithmetic is wide: 0xFFFFFFFF + 2 does not wrap, it rejects.
    """
    if addr < 0 or length < 0 or addr >= GUEST_ADDR_MAX:
        raise OutOfBounds(f"invalid guest range addr={addr:#x} len={length}")
    if addr + length > view.length:
        raise OutOfBounds(
            f"guest range [{addr:#x}, {addr:#x}+{length}) exceeds memory of {view.length} bytes"
        )
    return HostSpan(view, addr, length)


def to_guest(view: LinearMemoryView, host_addr: int) -> int:
    """Translate a host address inside the view back to a guest offset."""
    if not view.base <= host_addr < view.base + view.length:
        raise NotInRegion(f"host address {host_addr:#x} outside linear memory")
    return host_addr - view.base


def read_scalar(view: LinearMemoryView, addr: int, kind: str):
    st = _SCALARS[kind]
    span = to_host(view, addr, st.size)
    return st.unpack_from(view.buffer, span.offset)[0]


def write_scalar(view: LinearMemoryView, addr: int, kind: str, value) -> None:
    st = _SCALARS[kind]
    span = to_host(view, addr, st.size)
    st.pack_into(view.buffer, span.offset, value)
