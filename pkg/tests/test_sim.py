"""Simulated transport: matching semantics, collectives, comm management."""

import struct
import threading
import time

import pytest

from mpiwasm import abi
from mpiwasm.backend.sim import SimBackend, SimGroup, _Envelope
from mpiwasm.errors import BackendError, GroupAborted

from conftest import run_group


def env_of(src, dst, tag, epoch, payload=b""):
    return _Envelope(src, dst, tag, epoch, payload)


class TestMailbox:
    def test_fifo_per_channel(self):
        g = SimGroup(2)
        for i in range(5):
            g.post(g.mailboxes, env_of(0, 1, 7, 0, bytes([i])))
        got = [g.match(g.mailboxes, (0,), 1, 7, 0).payload for _ in range(5)]
        assert got == [bytes([i]) for i in range(5)]

    def test_any_tag_takes_oldest(self):
        g = SimGroup(2)
        g.post(g.mailboxes, env_of(0, 1, 5, 0, b"a"))
        g.post(g.mailboxes, env_of(0, 1, 9, 0, b"b"))
        assert g.match(g.mailboxes, (0,), 1, abi.MPI_ANY_TAG, 0).payload == b"a"

    def test_tag_filter_skips_nonmatching(self):
        g = SimGroup(2)
        g.post(g.mailboxes, env_of(0, 1, 5, 0, b"skip"))
        g.post(g.mailboxes, env_of(0, 1, 9, 0, b"hit"))
        assert g.match(g.mailboxes, (0,), 1, 9, 0).payload == b"hit"
        # the skipped message is still there
        assert g.match(g.mailboxes, (0,), 1, 5, 0).payload == b"skip"

    def test_epoch_isolation(self):
        g = SimGroup(2)
        g.post(g.mailboxes, env_of(0, 1, 7, 3, b"other comm"))
        with pytest.raises(BackendError):
            g.match(g.mailboxes, (0,), 1, 7, 0, timeout=0.05)

    def test_abort_unblocks_match(self):
        g = SimGroup(2)

        def late_abort():
            time.sleep(0.05)
            g.abort(1, 42)

        t = threading.Thread(target=late_abort)
        t.start()
        with pytest.raises(GroupAborted) as exc_info:
            g.match(g.mailboxes, (0,), 1, 7, 0, timeout=10)
        t.join()
        assert exc_info.value.errcode == 42

    def test_epoch_allocation_never_collides(self):
        g = SimGroup(4)
        # 0 = world, 1..4 = self comms
        a = g.alloc_epochs(3)
        b = g.alloc_epochs(2)
        assert a == [5, 6, 7] and b == [8, 9]


def p2p_body(send_tags):
    """Returns a body where rank 0 sends tagged ints and rank 1 receives."""

    def body(ctx, rank):
        if rank == 0:
            for tag, value in send_tags:
                struct.pack_into("<i", ctx.buf, 0, value)
                assert ctx.hc.hc_send(0, 1, abi.MPI_INT, 1, tag, abi.MPI_COMM_WORLD) == 0
            return None
        out = []
        for tag, _ in send_tags:
            assert ctx.hc.hc_recv(64, 1, abi.MPI_INT, 0, tag, abi.MPI_COMM_WORLD, 128) == 0
            out.append(struct.unpack_from("<i", ctx.buf, 64)[0])
        return out

    return body


class TestPointToPoint:
    def test_tagged_delivery_in_order(self):
        results = run_group(2, p2p_body([(3, 30), (4, 40), (3, 31)]))
        assert results[1] == [30, 40, 31]

    def test_any_source_and_status(self):
        def body(ctx, rank):
            if rank == 2:
                got = []
                for _ in range(2):
                    rc = ctx.hc.hc_recv(
                        0, 1, abi.MPI_INT, abi.MPI_ANY_SOURCE, 9, abi.MPI_COMM_WORLD, 256
                    )
                    assert rc == abi.MPI_SUCCESS
                    src, tag, err, nbytes = struct.unpack_from("<iiii", ctx.buf, 256)
                    assert (tag, err, nbytes) == (9, 0, 4)
                    got.append((src, struct.unpack_from("<i", ctx.buf, 0)[0]))
                return sorted(got)
            struct.pack_into("<i", ctx.buf, 0, 100 + rank)
            assert ctx.hc.hc_send(0, 1, abi.MPI_INT, 2, 9, abi.MPI_COMM_WORLD) == 0
            return None

        results = run_group(3, body)
        assert results[2] == [(0, 100), (1, 101)]

    def test_truncation_reported(self):
        def body(ctx, rank):
            if rank == 0:
                struct.pack_into("<8i", ctx.buf, 0, *range(8))
                assert ctx.hc.hc_send(0, 8, abi.MPI_INT, 1, 0, abi.MPI_COMM_WORLD) == 0
                return None
            rc = ctx.hc.hc_recv(512, 2, abi.MPI_INT, 0, 0, abi.MPI_COMM_WORLD, 600)
            src, tag, err, nbytes = struct.unpack_from("<iiii", ctx.buf, 600)
            # capacity bytes land, the rest is dropped and flagged
            return rc, err, nbytes, struct.unpack_from("<2i", ctx.buf, 512)

        rc, err, nbytes, head = run_group(2, body)[1]
        assert rc == abi.MPI_ERR_OTHER and err == abi.MPI_ERR_OTHER
        assert nbytes == 8 and head == (0, 1)


class TestCollectives:
    def test_float_allreduce_is_rank_order_fold(self):
        # floating point addition is not associative; the sim commits to
        # folding contributions in rank order, so the result is exactly
        # ((v0 + v1) + v2) + v3
        vals = [0.1, 1e16, -1e16, 0.2]
        expected = ((vals[0] + vals[1]) + vals[2]) + vals[3]

        def body(ctx, rank):
            struct.pack_into("<d", ctx.buf, 0, vals[rank])
            rc = ctx.hc.hc_allreduce(0, 64, 1, abi.MPI_DOUBLE, abi.MPI_SUM, abi.MPI_COMM_WORLD)
            assert rc == abi.MPI_SUCCESS
            return struct.unpack_from("<d", ctx.buf, 64)[0]

        results = run_group(4, body)
        assert all(v == expected for v in results.values())

    def test_int_prod_wraps_like_c(self):
        def body(ctx, rank):
            struct.pack_into("<i", ctx.buf, 0, 0x10000 * (rank + 1))
            rc = ctx.hc.hc_allreduce(0, 64, 1, abi.MPI_INT, abi.MPI_PROD, abi.MPI_COMM_WORLD)
            assert rc == abi.MPI_SUCCESS
            return struct.unpack_from("<i", ctx.buf, 64)[0]

        raw = 0x10000 * 0x20000
        expected = ((raw + (1 << 31)) % (1 << 32)) - (1 << 31)
        assert set(run_group(2, body).values()) == {expected}

    def test_reduce_only_root_gets_result(self):
        def body(ctx, rank):
            struct.pack_into("<i", ctx.buf, 0, rank + 1)
            struct.pack_into("<i", ctx.buf, 64, -7)
            rc = ctx.hc.hc_reduce(0, 64, 1, abi.MPI_INT, abi.MPI_SUM, 2, abi.MPI_COMM_WORLD)
            assert rc == abi.MPI_SUCCESS
            return struct.unpack_from("<i", ctx.buf, 64)[0]

        results = run_group(3, body)
        assert results[2] == 6
        assert results[0] == results[1] == -7  # untouched on non-roots

    def test_bitwise_on_float_rejected(self):
        def body(ctx, rank):
            return ctx.hc.hc_reduce(
                0, 64, 1, abi.MPI_DOUBLE, abi.MPI_BAND, 0, abi.MPI_COMM_WORLD
            )

        # the folding root reports the failure; non-roots only contribute
        results = run_group(2, body)
        assert results[0] == abi.MPI_ERR_OTHER and results[1] == abi.MPI_SUCCESS


class TestCommManagement:
    def test_split_orders_by_key(self):
        def body(ctx, rank):
            # one color, descending keys: comm rank order reverses
            assert ctx.hc.hc_comm_split(abi.MPI_COMM_WORLD, 0, 10 - rank, 32) == 0
            sub = struct.unpack_from("<i", ctx.buf, 32)[0]
            assert ctx.hc.hc_comm_rank(sub, 40) == 0
            return struct.unpack_from("<i", ctx.buf, 40)[0]

        results = run_group(4, body)
        assert results == {0: 3, 1: 2, 2: 1, 3: 0}

    def test_dup_isolates_traffic(self):
        def body(ctx, rank):
            assert ctx.hc.hc_comm_dup(abi.MPI_COMM_WORLD, 32) == 0
            dup = struct.unpack_from("<i", ctx.buf, 32)[0]
            if rank == 0:
                struct.pack_into("<i", ctx.buf, 0, 1)
                assert ctx.hc.hc_send(0, 1, abi.MPI_INT, 1, 5, abi.MPI_COMM_WORLD) == 0
                struct.pack_into("<i", ctx.buf, 0, 2)
                assert ctx.hc.hc_send(0, 1, abi.MPI_INT, 1, 5, dup) == 0
                return None
            # receive on the dup first: must get the dup message even though
            # the world message was posted earlier
            assert ctx.hc.hc_recv(64, 1, abi.MPI_INT, 0, 5, dup, 0) == 0
            first = struct.unpack_from("<i", ctx.buf, 64)[0]
            assert ctx.hc.hc_recv(64, 1, abi.MPI_INT, 0, 5, abi.MPI_COMM_WORLD, 0) == 0
            return first, struct.unpack_from("<i", ctx.buf, 64)[0]

        assert run_group(2, body)[1] == (2, 1)

    def test_self_comm(self):
        def body(ctx, rank):
            assert ctx.hc.hc_comm_size(abi.MPI_COMM_SELF, 8) == 0
            assert ctx.hc.hc_comm_rank(abi.MPI_COMM_SELF, 12) == 0
            return struct.unpack_from("<2i", ctx.buf, 8)

        assert set(run_group(3, body).values()) == {(1, 0)}


def test_backend_abort_raises_group_aborted():
    group = SimGroup(1)
    backend = SimBackend(group, 0)
    with pytest.raises(GroupAborted):
        backend.abort(3)
    assert group.abort_state == (0, 3)
