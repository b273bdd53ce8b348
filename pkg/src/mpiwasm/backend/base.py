"""Transport backend interface.

Two implementations ship: `sim` (in-process N-rank execution, the default
and the one the test suite relies on) and `native` (delegation to the host
MPI library via mpi4py, one embedder process per rank under mpirun).

Buffers cross this interface as HostSpans. The native backend hands the
span's memoryview straight to the MPI library (zero copies in the host
layer); the sim backend stages exactly one copy in on send and one copy out
on receive.
"""

from __future__ import annotations

import enum


class CollOp(enum.Enum):
    BARRIER = "barrier"
    BCAST = "bcast"
    REDUCE = "reduce"
    ALLREDUCE = "allreduce"
    GATHER = "gather"
    ALLGATHER = "allgather"
    SCATTER = "scatter"
    ALLTOALL = "alltoall"


class Backend:
    """Abstract transport; concrete classes override everything."""

    name = "abstract"

    def init(self) -> tuple[int, int]:
        """Join the computation; returns (world rank, world size)."""
        raise NotImplementedError

    def finalize(self) -> None:
        raise NotImplementedError

    def abort(self, errcode: int) -> None:
        raise NotImplementedError

    def resolve_comm(self, handle):
        """Map a handle-table entry ('world', 'self', or a backend comm
        object) to the backend's communicator."""
        raise NotImplementedError

    def comm_rank(self, comm) -> int:
        raise NotImplementedError

    def comm_size(self, comm) -> int:
        raise NotImplementedError

    def send(self, comm, span, dst: int, tag: int) -> None:
        raise NotImplementedError

    def recv(self, comm, span, src: int, tag: int) -> tuple[int, int, int, bool]:
        """Blocking receive into `span`.

        Returns (source comm-rank, tag, received byte count written,
        truncated flag). Matching honors wildcards and per-channel FIFO.
        """
        raise NotImplementedError

    def sendrecv(self, comm, send_span, dst: int, stag: int, recv_span, src: int, rtag: int):
        """Combined send+receive; the default works only on eager
        transports (send cannot block)."""
        self.send(comm, send_span, dst, stag)
        return self.recv(comm, recv_span, src, rtag)

    def barrier(self, comm) -> None:
        raise NotImplementedError

    def bcast(self, comm, span, root: int) -> None:
        raise NotImplementedError

    def reduce(self, comm, send_span, recv_span, count: int, dtype_code: int, op_code: int, root: int) -> None:
        """recv_span is only dereferenced at root; non-roots may pass a
        zero-length span."""
        raise NotImplementedError

    def allreduce(self, comm, send_span, recv_span, count: int, dtype_code: int, op_code: int) -> None:
        raise NotImplementedError

    def gather(self, comm, send_span, recv_span, root: int) -> None:
        raise NotImplementedError

    def allgather(self, comm, send_span, recv_span) -> None:
        raise NotImplementedError

    def scatter(self, comm, send_span, recv_span, chunk: int, root: int) -> None:
        raise NotImplementedError

    def alltoall(self, comm, send_span, recv_span, chunk: int) -> None:
        raise NotImplementedError

    def comm_split(self, comm, color: int, key: int):
        """Returns the new backend comm, or None when color is
        MPI_UNDEFINED."""
        raise NotImplementedError

    def comm_dup(self, comm):
        raise NotImplementedError

    def comm_free(self, comm) -> None:
        raise NotImplementedError
