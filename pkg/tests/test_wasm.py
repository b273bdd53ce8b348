"""Binary decoding, validation limits, and the WAT assembler round trip."""

import struct

import pytest
from hypothesis import given, strategies as st

from mpiwasm.errors import MalformedModule, UnsupportedFeature
from mpiwasm.wasm.binary import decode_module
from mpiwasm.wasm.wat import assemble_wat

HEADER = b"\x00asm\x01\x00\x00\x00"


def section(sid: int, payload: bytes) -> bytes:
    return bytes([sid, len(payload)]) + payload


class TestHeader:
    def test_empty_module(self):
        mod = decode_module(HEADER)
        assert mod.types == [] and mod.exports == []

    def test_bad_magic(self):
        with pytest.raises(MalformedModule):
            decode_module(b"\x00wat\x01\x00\x00\x00")

    def test_bad_version(self):
        with pytest.raises(MalformedModule):
            decode_module(b"\x00asm\x02\x00\x00\x00")

    def test_truncated(self):
        with pytest.raises(MalformedModule):
            decode_module(HEADER[:5])

    @given(st.binary(max_size=64))
    def test_garbage_never_crashes(self, data):
        try:
            decode_module(HEADER + data)
        except (MalformedModule, UnsupportedFeature):
            pass


class TestMemoryLimits:
    def make(self, flags: bytes) -> bytes:
        return HEADER + section(5, b"\x01" + flags)

    def test_plain_memory(self):
        mod = decode_module(self.make(b"\x00\x01"))
        assert mod.mem_limits.minimum == 1 and mod.mem_limits.maximum is None

    def test_bounded_memory(self):
        mod = decode_module(self.make(b"\x01\x01\x02"))
        assert (mod.mem_limits.minimum, mod.mem_limits.maximum) == (1, 2)

    def test_shared_memory_rejected(self):
        with pytest.raises(UnsupportedFeature):
            decode_module(self.make(b"\x03\x01\x02"))

    def test_memory64_rejected(self):
        with pytest.raises(UnsupportedFeature):
            decode_module(self.make(b"\x04\x01"))

    def test_too_many_pages(self):
        big = struct.pack("<B", 0) + b"\x81\x80\x84\x00"  # 65537 pages, LEB
        with pytest.raises(UnsupportedFeature):
            decode_module(HEADER + section(5, b"\x01" + big))

    def test_two_memories_rejected(self):
        with pytest.raises((MalformedModule, UnsupportedFeature)):
            decode_module(HEADER + section(5, b"\x02\x00\x01\x00\x01"))


class TestWatRoundTrip:
    def test_types_imports_exports(self):
        mod = decode_module(assemble_wat("""
            (module
              (import "env" "MPI_Init" (func $i (param i32 i32) (result i32)))
              (memory (export "memory") 2 4)
              (func (export "main") (result i32) (i32.const 7)))
        """))
        assert [(imp.module, imp.name) for imp in mod.imports] == [("env", "MPI_Init")]
        assert {e.name for e in mod.exports} == {"memory", "main"}
        assert (mod.mem_limits.minimum, mod.mem_limits.maximum) == (2, 4)

    def test_data_segments(self):
        mod = decode_module(assemble_wat(
            '(module (memory 1) (data (i32.const 16) "ab\\00c"))'
        ))
        assert mod.datas[0].data == b"ab\x00c"

    def test_globals(self):
        mod = decode_module(assemble_wat(
            "(module (global $g (mut i32) (i32.const 41)))"
        ))
        assert len(mod.globals) == 1

    def test_folded_and_flat_bodies_agree(self):
        folded = assemble_wat(
            "(module (func (export \"f\") (result i32) (i32.add (i32.const 2) (i32.const 3))))"
        )
        flat = assemble_wat(
            "(module (func (export \"f\") (result i32) i32.const 2 i32.const 3 i32.add))"
        )
        assert decode_module(folded).bodies[0].code == decode_module(flat).bodies[0].code
