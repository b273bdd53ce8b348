"""Handle tables, the constants manifest, and the status wire format."""

import struct

import pytest
from hypothesis import given, strategies as st

from mpiwasm import abi
from mpiwasm.errors import ReleasePredefined, UnknownHandle
from mpiwasm.memory import LinearMemoryView

EXPECTED_MANIFEST = """\
ABI_VERSION=1
STATUS_SIZE=16
MPI_COMM_WORLD=0
MPI_COMM_SELF=1
MPI_COMM_NULL=-1
MPI_BYTE=0
MPI_CHAR=1
MPI_INT=2
MPI_FLOAT=3
MPI_DOUBLE=4
MPI_LONG=5
MPI_UNSIGNED=6
MPI_LONG_LONG=7
MPI_UNSIGNED_LONG=8
MPI_DATATYPE_NULL=-1
MPI_SUM=0
MPI_MAX=1
MPI_MIN=2
MPI_PROD=3
MPI_LAND=4
MPI_LOR=5
MPI_BAND=6
MPI_BOR=7
MPI_OP_NULL=-1
MPI_ANY_SOURCE=-1
MPI_ANY_TAG=-1
MPI_REQUEST_NULL=-1
MPI_UNDEFINED=-32766
MPI_SUCCESS=0
MPI_ERR_TYPE=3
MPI_ERR_COMM=5
MPI_ERR_OP=9
MPI_ERR_ARG=12
MPI_ERR_OTHER=15
SIZEOF_MPI_BYTE=1
SIZEOF_MPI_CHAR=1
SIZEOF_MPI_INT=4
SIZEOF_MPI_FLOAT=4
SIZEOF_MPI_DOUBLE=8
SIZEOF_MPI_LONG=8
SIZEOF_MPI_UNSIGNED=4
SIZEOF_MPI_LONG_LONG=8
SIZEOF_MPI_UNSIGNED_LONG=8
"""


def test_manifest_golden():
    assert abi.abi_manifest() == EXPECTED_MANIFEST


def test_manifest_is_parseable_key_values():
    for line in abi.abi_manifest().strip().splitlines():
        key, _, value = line.partition("=")
        assert key and int(value) is not None


def test_datatype_sizes():
    assert abi.datatype_size(abi.MPI_INT) == 4
    assert abi.datatype_size(abi.MPI_DOUBLE) == 8
    assert abi.datatype_size(abi.MPI_LONG) == 8  # LP64 guest model
    with pytest.raises(UnknownHandle):
        abi.datatype_size(99)


class TestHandleTable:
    def test_predefined_lookup(self):
        env = abi.Env()
        assert env.comms.translate(abi.MPI_COMM_WORLD) == "world"
        assert env.comms.translate(abi.MPI_COMM_SELF) == "self"

    def test_unknown_raises(self):
        env = abi.Env()
        with pytest.raises(UnknownHandle):
            env.comms.translate(1234)

    def test_register_release(self):
        env = abi.Env()
        code = env.comms.register("subcomm")
        assert env.comms.translate(code) == "subcomm"
        assert env.comms.release(code) == "subcomm"
        with pytest.raises(UnknownHandle):
            env.comms.translate(code)

    def test_predefined_unreleasable(self):
        env = abi.Env()
        with pytest.raises(ReleasePredefined):
            env.comms.release(abi.MPI_COMM_WORLD)

    @given(st.integers(min_value=1, max_value=60))
    def test_codes_never_reused(self, n):
        table = abi.HandleTable("t", {0: "pre"})
        seen = {0}
        for i in range(n):
            code = table.register(f"obj{i}")
            assert code not in seen
            seen.add(code)
            if i % 3 == 0:
                table.release(code)
        # releases never free codes for reuse
        assert table.register("last") == max(seen) + 1


class TestStatusWire:
    def test_round_trip(self):
        env = abi.Env()
        env.memory = LinearMemoryView.of(bytearray(64))
        abi.write_status(env, 16, 3, 42, 0, 24)
        assert abi.read_status(env, 16) == (3, 42, 0, 24)

    def test_wire_layout(self):
        env = abi.Env()
        env.memory = LinearMemoryView.of(bytearray(64))
        abi.write_status(env, 32, -1, -1, 15, 8)
        assert env.memory.buffer[32:48] == struct.pack("<iiii", -1, -1, 15, 8)

    def test_ignore_sentinel_writes_nothing(self):
        env = abi.Env()
        env.memory = LinearMemoryView.of(bytearray(64))
        # MPI_STATUS_IGNORE is guest address 0: no bytes written there,
        # but only when addressed through write_status
        before = bytes(env.memory.buffer)
        abi.write_status(env, abi.MPI_STATUS_IGNORE, 1, 2, 3, 4)
        assert bytes(env.memory.buffer) == before


def test_translation_instrumentation():
    env = abi.Env(instrument=True)
    for _ in range(10):
        abi.translate_datatype(env, abi.MPI_INT)
    assert len(env.counters.translation_ns) == 10
    assert env.counters.translations == 10
    assert all(ns >= 0 for ns in env.counters.translation_ns)


def test_translation_uninstrumented_records_no_samples():
    env = abi.Env()
    abi.translate_datatype(env, abi.MPI_INT)
    assert env.counters.translation_ns == []
    assert env.counters.translations == 1
