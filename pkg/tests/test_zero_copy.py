"""Buffer discipline: the hostcall layer hands out views, never copies."""

import struct

from mpiwasm import abi
from mpiwasm.backend.base import Backend
from mpiwasm.backend.sim import SimGroup
from mpiwasm.hostcalls import Hostcalls
from mpiwasm.memory import LinearMemoryView

from conftest import Rank, run_group


class RecordingBackend(Backend):
    """Pretends every operation succeeds and keeps the spans it was given."""

    name = "recording"

    def __init__(self):
        self.spans = []

    def init(self):
        return 0, 1

    def finalize(self):
        pass

    def resolve_comm(self, handle):
        return handle

    def comm_rank(self, comm):
        return 0

    def comm_size(self, comm):
        return 1

    def send(self, comm, span, dst, tag):
        self.spans.append(span)

    def recv(self, comm, span, src, tag):
        self.spans.append(span)
        return 0, tag, span.length, False

    def bcast(self, comm, span, root):
        self.spans.append(span)

    def allreduce(self, comm, send_span, recv_span, count, dtype_code, op_code):
        self.spans.extend([send_span, recv_span])

    def barrier(self, comm):
        pass


def make_recording_rank(mem_bytes=1 << 16):
    env = abi.Env()
    buf = bytearray(mem_bytes)
    env.memory = LinearMemoryView.of(buf)
    backend = RecordingBackend()
    hc = Hostcalls(env, backend)
    assert hc.hc_init(0, 0) == 0
    return buf, backend, hc


class TestHostLayerAliasing:
    def test_send_span_aliases_guest_memory(self):
        buf, backend, hc = make_recording_rank()
        buf[100:108] = b"ABCDEFGH"
        assert hc.hc_send(100, 8, abi.MPI_BYTE, 0, 0, 0) == 0
        [span] = backend.spans
        assert span.read() == b"ABCDEFGH"
        # mutate through the span: the guest buffer changes, proving the
        # span is a view, not a staged copy
        span.data()[0] = ord("z")
        assert buf[100] == ord("z")

    def test_recv_span_aliases_guest_memory(self):
        buf, backend, hc = make_recording_rank()
        assert hc.hc_recv(200, 2, abi.MPI_INT, 0, 0, 0, 0) == 0
        [span] = backend.spans
        span.write(struct.pack("<2i", 7, 8))
        assert struct.unpack_from("<2i", buf, 200) == (7, 8)

    def test_span_length_counts_datatype_width(self):
        _, backend, hc = make_recording_rank()
        assert hc.hc_send(0, 6, abi.MPI_DOUBLE, 0, 0, 0) == 0
        assert backend.spans[0].length == 48

    def test_collective_spans_alias_guest_memory(self):
        buf, backend, hc = make_recording_rank()
        assert hc.hc_allreduce(0, 64, 4, abi.MPI_INT, abi.MPI_SUM, 0) == 0
        send_span, recv_span = backend.spans
        send_span.data()[0] = 5
        recv_span.data()[0] = 6
        assert (buf[0], buf[64]) == (5, 6)

    def test_mock_transport_sees_zero_copies(self):
        # a backend that never stages (like the native one) leaves the copy
        # counter untouched: the host layer itself contributes none
        _, backend, hc = make_recording_rank()
        assert hc.hc_send(0, 1024, abi.MPI_BYTE, 0, 0, 0) == 0
        assert hc.hc_recv(2048, 1024, abi.MPI_BYTE, 0, 0, 0, 0) == 0
        assert hc.env.counters.copies == 0


class TestSimCopyAccounting:
    def test_two_copies_per_message(self):
        def body(ctx, rank):
            n_msgs = 5
            if rank == 0:
                for i in range(n_msgs):
                    assert ctx.hc.hc_send(0, 64, abi.MPI_BYTE, 1, i, 0) == 0
            else:
                for i in range(n_msgs):
                    assert ctx.hc.hc_recv(0, 64, abi.MPI_BYTE, 0, i, 0, 0) == 0
            return ctx.env.counters.copies

        results = run_group(2, body)
        assert results[0] == 5 and results[1] == 5

    def test_bcast_one_copy_per_rank(self):
        def body(ctx, rank):
            assert ctx.hc.hc_bcast(0, 128, abi.MPI_BYTE, 0, 0) == 0
            return ctx.env.counters.copies

        assert set(run_group(4, body).values()) == {1}

    def test_counter_scales_with_messages_not_bytes(self):
        def body_for(size):
            def body(ctx, rank):
                if rank == 0:
                    assert ctx.hc.hc_send(0, size, abi.MPI_BYTE, 1, 0, 0) == 0
                else:
                    assert ctx.hc.hc_recv(0, size, abi.MPI_BYTE, 0, 0, 0, 0) == 0
                return ctx.env.counters.copies

            return body

        for size in (1, 1 << 10, 1 << 16):
            results = run_group(2, body_for(size), mem_bytes=1 << 17)
            assert sum(results.values()) == 2
