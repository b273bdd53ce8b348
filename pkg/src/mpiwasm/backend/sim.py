"""In-process simulated multi-rank transport.

Each rank runs on its own thread with its own Env and linear memory; ranks
exchange messages through per-ordered-pair FIFO mailboxes guarded by one
group-wide condition variable. Collectives are reference algorithms built
on the same mailboxes (root-sequential, rank-ordered), chosen for
reproducibility rather than speed: wildcard-free scripts give bit-identical
results regardless of thread scheduling because matching is channel FIFO,
not arrival race.

Copy accounting: a delivered message costs exactly two bulk copies, one
into the envelope at send and one out at receive.
"""

from __future__ import annotations

import array
import threading
from collections import deque
from dataclasses import dataclass

from ..errors import BackendError, GroupAborted
from .. import abi
from .base import Backend

# tag space for collective phases; user tags are nonnegative
_COLL_TAG_BASE = -(1 << 20)


@dataclass(frozen=True)
class SimComm:
    """Communicator identity shared by its member ranks.

    `epoch` distinguishes comms created by split/dup so messages on
    different comms never match; `ranks` maps comm rank -> world rank.
    """

    epoch: int
    ranks: tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.ranks)

    def rank_of(self, world_rank: int) -> int:
        try:
            return self.ranks.index(world_rank)
        except ValueError:
            raise BackendError(f"rank {world_rank} not in communicator") from None


@dataclass
class _Envelope:
    src: int  # world rank
    dst: int  # world rank
    tag: int
    epoch: int
    payload: object  # bytes for user messages, anything for collectives


class SimGroup:
    """Shared state for one in-process rank group."""

    def __init__(self, size: int):
        if size < 1:
            raise BackendError("group size must be >= 1")
        self.size = size
        self.cond = threading.Condition()
        self.mailboxes: dict[tuple[int, int, int], deque] = {}
        self.coll_boxes: dict[tuple[int, int, int], deque] = {}
        self.abort_state: tuple[int, int] | None = None  # (rank, errcode)
        self.world = SimComm(0, tuple(range(size)))
        # epochs: 0 world, 1..size self comms, then dynamic
        self._next_epoch = size + 1

    def self_comm(self, world_rank: int) -> SimComm:
        return SimComm(1 + world_rank, (world_rank,))

    def alloc_epochs(self, n: int) -> list[int]:
        with self.cond:
            out = list(range(self._next_epoch, self._next_epoch + n))
            self._next_epoch += n
            return out

    def abort(self, rank: int, errcode: int) -> None:
        with self.cond:
            if self.abort_state is None:
                self.abort_state = (rank, errcode)
            self.cond.notify_all()

    def check_abort(self) -> None:
        if self.abort_state is not None:
            raise GroupAborted(*self.abort_state)

    # mailbox primitives; `boxes` selects user vs collective space
    def post(self, boxes, env: _Envelope) -> None:
        key = (env.src, env.dst, env.epoch)
        with self.cond:
            self.check_abort()
            boxes.setdefault(key, deque()).append(env)
            self.cond.notify_all()

    def match(self, boxes, srcs, dst: int, tag: int, epoch: int, timeout: float | None = None):
        """Block until a message from one of `srcs` (scanned in order)
        matches `tag` (MPI_ANY_TAG allowed); FIFO per channel."""

        def find():
            for src in srcs:
                q = boxes.get((src, dst, epoch))
                if not q:
                    continue
                for i, env in enumerate(q):
                    if tag == abi.MPI_ANY_TAG or env.tag == tag:
                        del q[i]
                        return env
            return None

        with self.cond:
            while True:
                self.check_abort()
                env = find()
                if env is not None:
                    return env
                if not self.cond.wait(timeout=timeout):
                    raise BackendError(
                        f"sim recv timed out (dst={dst} srcs={list(srcs)} tag={tag} epoch={epoch})"
                    )


# elementwise reduction support
_TYPECODES = {
    abi.MPI_BYTE: "B",
    abi.MPI_CHAR: "b",
    abi.MPI_INT: "i",
    abi.MPI_FLOAT: "f",
    abi.MPI_DOUBLE: "d",
    abi.MPI_LONG: "q",
    abi.MPI_UNSIGNED: "I",
    abi.MPI_LONG_LONG: "q",
    abi.MPI_UNSIGNED_LONG: "Q",
}

_INT_CODES = set("bBiIqQ")


def _reduce_fold(op_code: int, acc, vals, typecode: str):
    integral = typecode in _INT_CODES
    if op_code == abi.MPI_SUM:
        return [a + b for a, b in zip(acc, vals)]
    if op_code == abi.MPI_MAX:
        return [max(a, b) for a, b in zip(acc, vals)]
    if op_code == abi.MPI_MIN:
        return [min(a, b) for a, b in zip(acc, vals)]
    if op_code == abi.MPI_PROD:
        return [a * b for a, b in zip(acc, vals)]
    if op_code == abi.MPI_LAND:
        return [1 if (a and b) else 0 for a, b in zip(acc, vals)]
    if op_code == abi.MPI_LOR:
        return [1 if (a or b) else 0 for a, b in zip(acc, vals)]
    if not integral:
        raise BackendError("bitwise reduction on non-integer datatype")
    if op_code == abi.MPI_BAND:
        return [a & b for a, b in zip(acc, vals)]
    if op_code == abi.MPI_BOR:
        return [a | b for a, b in zip(acc, vals)]
    raise BackendError(f"unknown reduction op {op_code}")


def _clamp(values, typecode: str) -> array.array:
    out = array.array(typecode)
    if typecode in _INT_CODES:
        bits = out.itemsize * 8
        if typecode.isupper() or typecode == "B":
            mask = (1 << bits) - 1
            values = [v & mask for v in values]
        else:
            mask = (1 << bits) - 1
            half = 1 << (bits - 1)
            values = [((v & mask) - (1 << bits)) if (v & mask) >= half else (v & mask) for v in values]
    out.extend(values)
    return out


class SimBackend(Backend):
    name = "sim"

    def __init__(self, group: SimGroup, world_rank: int, env=None):
        self.group = group
        self.world_rank = world_rank
        self.env = env  # set by the hostcall layer at init
        self.coll_seq: dict[int, int] = {}
        self.sim_wall: float | None = None

    # ---- lifecycle --------------------------------------------------------

    def init(self) -> tuple[int, int]:
        return self.world_rank, self.group.size

    def finalize(self) -> None:
        pass

    def abort(self, errcode: int) -> None:
        self.group.abort(self.world_rank, errcode)
        raise GroupAborted(self.world_rank, errcode)

    # ---- comms ------------------------------------------------------------

    def resolve_comm(self, handle) -> SimComm:
        if handle == "world":
            return self.group.world
        if handle == "self":
            return self.group.self_comm(self.world_rank)
        if isinstance(handle, SimComm):
            return handle
        raise BackendError(f"not a sim communicator: {handle!r}")

    def comm_rank(self, comm: SimComm) -> int:
        return comm.rank_of(self.world_rank)

    def comm_size(self, comm: SimComm) -> int:
        return comm.size

    # ---- point to point ---------------------------------------------------

    def _count_copy(self) -> None:
        if self.env is not None:
            self.env.counters.copies += 1

    def send(self, comm: SimComm, span, dst: int, tag: int) -> None:
        payload = span.read()  # the one permitted copy in
        self._count_copy()
        self.group.post(
            self.group.mailboxes,
            _Envelope(self.world_rank, comm.ranks[dst], tag, comm.epoch, payload),
        )

    def recv(self, comm: SimComm, span, src: int, tag: int, timeout: float | None = None):
        if src == abi.MPI_ANY_SOURCE:
            srcs = comm.ranks
        else:
            srcs = (comm.ranks[src],)
        env = self.group.match(self.group.mailboxes, srcs, self.world_rank, tag, comm.epoch, timeout)
        payload = env.payload
        n = len(payload)
        truncated = n > span.length
        written = min(n, span.length)
        span.view.buffer[span.offset : span.offset + written] = payload[:written]
        self._count_copy()  # the one permitted copy out
        return comm.rank_of(env.src), env.tag, n, truncated

    # ---- collective plumbing ---------------------------------------------

    def _coll_tag(self, comm: SimComm) -> int:
        seq = self.coll_seq.get(comm.epoch, 0)
        self.coll_seq[comm.epoch] = seq + 1
        return _COLL_TAG_BASE - seq

    def _coll_send(self, comm: SimComm, dst: int, tag: int, payload) -> None:
        self.group.post(
            self.group.coll_boxes,
            _Envelope(self.world_rank, comm.ranks[dst], tag, comm.epoch, payload),
        )

    def _coll_recv(self, comm: SimComm, src: int, tag: int):
        env = self.group.match(
            self.group.coll_boxes, (comm.ranks[src],), self.world_rank, tag, comm.epoch
        )
        return env.payload

    # ---- collectives ------------------------------------------------------

    def barrier(self, comm: SimComm) -> None:
        tag = self._coll_tag(comm)
        me = comm.rank_of(self.world_rank)
        if me == 0:
            for r in range(1, comm.size):
                self._coll_recv(comm, r, tag)
            for r in range(1, comm.size):
                self._coll_send(comm, r, tag, None)
        else:
            self._coll_send(comm, 0, tag, None)
            self._coll_recv(comm, 0, tag)

    def bcast(self, comm: SimComm, span, root: int) -> None:
        tag = self._coll_tag(comm)
        me = comm.rank_of(self.world_rank)
        if me == root:
            payload = span.read()
            self._count_copy()
            for r in range(comm.size):
                if r != root:
                    self._coll_send(comm, r, tag, payload)
        else:
            payload = self._coll_recv(comm, root, tag)
            if len(payload) != span.length:
                raise BackendError("bcast length mismatch")
            span.write(payload)
            self._count_copy()

    def _fold_rank_order(self, contributions, count, dtype_code, op_code):
        typecode = _TYPECODES[dtype_code]
        acc = list(array.array(typecode, contributions[0]))
        for contrib in contributions[1:]:
            vals = array.array(typecode, contrib)
            if len(vals) != count or len(acc) != count:
                raise BackendError("reduce length mismatch")
            acc = _reduce_fold(op_code, acc, list(vals), typecode)
        return _clamp(acc, typecode).tobytes()

    def reduce(self, comm: SimComm, send_span, recv_span, count, dtype_code, op_code, root) -> None:
        tag = self._coll_tag(comm)
        me = comm.rank_of(self.world_rank)
        my_payload = send_span.read()
        self._count_copy()
        if me == root:
            contributions = []
            for r in range(comm.size):
                if r == me:
                    contributions.append(my_payload)
                else:
                    contributions.append(self._coll_recv(comm, r, tag))
            result = self._fold_rank_order(contributions, count, dtype_code, op_code)
            recv_span.write(result)
            self._count_copy()
        else:
            self._coll_send(comm, root, tag, my_payload)

    def allreduce(self, comm: SimComm, send_span, recv_span, count, dtype_code, op_code) -> None:
        # reduce to comm rank 0, then bcast
        tag = self._coll_tag(comm)
        me = comm.rank_of(self.world_rank)
        my_payload = send_span.read()
        self._count_copy()
        if me == 0:
            contributions = [my_payload] + [self._coll_recv(comm, r, tag) for r in range(1, comm.size)]
            result = self._fold_rank_order(contributions, count, dtype_code, op_code)
            for r in range(1, comm.size):
                self._coll_send(comm, r, tag, result)
        else:
            self._coll_send(comm, 0, tag, my_payload)
            result = self._coll_recv(comm, 0, tag)
        recv_span.write(result)
        self._count_copy()

    def gather(self, comm: SimComm, send_span, recv_span, root) -> None:
        tag = self._coll_tag(comm)
        me = comm.rank_of(self.world_rank)
        chunk = send_span.length
        my_payload = send_span.read()
        self._count_copy()
        if me == root:
            buf = recv_span.data()
            for r in range(comm.size):
                part = my_payload if r == me else self._coll_recv(comm, r, tag)
                if len(part) != chunk:
                    raise BackendError("gather length mismatch")
                buf[r * chunk : (r + 1) * chunk] = part
            self._count_copy()
        else:
            self._coll_send(comm, root, tag, my_payload)

    def allgather(self, comm: SimComm, send_span, recv_span) -> None:
        tag = self._coll_tag(comm)
        me = comm.rank_of(self.world_rank)
        chunk = send_span.length
        my_payload = send_span.read()
        self._count_copy()
        if me == 0:
            parts = [my_payload] + [self._coll_recv(comm, r, tag) for r in range(1, comm.size)]
            combined = b"".join(parts)
            for r in range(1, comm.size):
                self._coll_send(comm, r, tag, combined)
        else:
            self._coll_send(comm, 0, tag, my_payload)
            combined = self._coll_recv(comm, 0, tag)
        if len(combined) != comm.size * chunk:
            raise BackendError("allgather length mismatch")
        recv_span.write(combined)
        self._count_copy()

    def scatter(self, comm: SimComm, send_span, recv_span, chunk, root) -> None:
        tag = self._coll_tag(comm)
        me = comm.rank_of(self.world_rank)
        if me == root:
            data = send_span.read()
            self._count_copy()
            for r in range(comm.size):
                if r != me:
                    self._coll_send(comm, r, tag, data[r * chunk : (r + 1) * chunk])
            recv_span.write(data[me * chunk : (me + 1) * chunk])
            self._count_copy()
        else:
            part = self._coll_recv(comm, root, tag)
            recv_span.write(part)
            self._count_copy()

    def alltoall(self, comm: SimComm, send_span, recv_span, chunk) -> None:
        tag = self._coll_tag(comm)
        me = comm.rank_of(self.world_rank)
        data = send_span.read()
        self._count_copy()
        for r in range(comm.size):
            if r != me:
                self._coll_send(comm, r, tag, data[r * chunk : (r + 1) * chunk])
        buf = recv_span.data()
        for r in range(comm.size):
            part = data[me * chunk : (me + 1) * chunk] if r == me else self._coll_recv(comm, r, tag)
            buf[r * chunk : (r + 1) * chunk] = part
        self._count_copy()

    # ---- communicator management -----------------------------------------

    def comm_split(self, comm: SimComm, color: int, key: int):
        tag = self._coll_tag(comm)
        me = comm.rank_of(self.world_rank)
        # allgather (color, key, comm rank) through rank 0
        mine = (color, key, me)
        if me == 0:
            triples = [mine] + [self._coll_recv(comm, r, tag) for r in range(1, comm.size)]
            distinct = sorted({c for c, _k, _r in triples if c != abi.MPI_UNDEFINED})
            epochs = dict(zip(distinct, self.group.alloc_epochs(len(distinct))))
            for r in range(1, comm.size):
                self._coll_send(comm, r, tag, (triples, epochs))
        else:
            self._coll_send(comm, 0, tag, mine)
            triples, epochs = self._coll_recv(comm, 0, tag)
        if color == abi.MPI_UNDEFINED:
            return None
        members = sorted(
            ((k, r) for c, k, r in triples if c == color),
        )
        world_ranks = tuple(comm.ranks[r] for _k, r in members)
        return SimComm(epochs[color], world_ranks)

    def comm_dup(self, comm: SimComm):
        tag = self._coll_tag(comm)
        me = comm.rank_of(self.world_rank)
        if me == 0:
            epoch = self.group.alloc_epochs(1)[0]
            for r in range(1, comm.size):
                self._coll_send(comm, r, tag, epoch)
        else:
            epoch = self._coll_recv(comm, 0, tag)
        return SimComm(epoch, comm.ranks)

    def comm_free(self, comm: SimComm) -> None:
        pass  # nothing host-side to release in the sim
