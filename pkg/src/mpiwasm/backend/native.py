"""Delegation to the host MPI library through mpi4py.

One embedder process per rank, launched under the host's mpirun. Payload
buffers are handed to MPI as memoryviews straight over linear memory, so
the host layer adds zero copies; mpi4py's buffer-protocol calls (Send,
Recv, ...) pass them through untouched.

mpi4py is an optional dependency; constructing NativeBackend without it
raises BackendError.
"""

from __future__ import annotations

from ..errors import BackendError
from .. import abi
from .base import Backend

_MPI4PY_DTYPES = {
    abi.MPI_BYTE: "BYTE",
    abi.MPI_CHAR: "CHAR",
    abi.MPI_INT: "INT",
    abi.MPI_FLOAT: "FLOAT",
    abi.MPI_DOUBLE: "DOUBLE",
    abi.MPI_LONG: "INT64_T",  # LP64 guest long
    abi.MPI_UNSIGNED: "UNSIGNED",
    abi.MPI_LONG_LONG: "LONG_LONG",
    abi.MPI_UNSIGNED_LONG: "UINT64_T",
}

_MPI4PY_OPS = {
    abi.MPI_SUM: "SUM",
    abi.MPI_MAX: "MAX",
    abi.MPI_MIN: "MIN",
    abi.MPI_PROD: "PROD",
    abi.MPI_LAND: "LAND",
    abi.MPI_LOR: "LOR",
    abi.MPI_BAND: "BAND",
    abi.MPI_BOR: "BOR",
}


class NativeBackend(Backend):
    name = "native"

    def __init__(self):
        try:
            from mpi4py import MPI
        except ImportError:
            raise BackendError(
                "native backend requires mpi4py (pip install mpiwasm[native])"
            ) from None
        self.MPI = MPI

    def _dtype(self, code: int):
        try:
            return getattr(self.MPI, _MPI4PY_DTYPES[code])
        except KeyError:
            raise BackendError(f"unknown datatype code {code}") from None

    def _op(self, code: int):
        try:
            return getattr(self.MPI, _MPI4PY_OPS[code])
        except KeyError:
            raise BackendError(f"unknown reduction op {code}") from None

    # ---- lifecycle --------------------------------------------------------

    def init(self) -> tuple[int, int]:
        comm = self.MPI.COMM_WORLD
        return comm.Get_rank(), comm.Get_size()

    def finalize(self) -> None:
        pass  # mpi4py finalizes at interpreter exit

    def abort(self, errcode: int) -> None:
        self.MPI.COMM_WORLD.Abort(errcode)

    # ---- comms ------------------------------------------------------------

    def resolve_comm(self, handle):
        if handle == "world":
            return self.MPI.COMM_WORLD
        if handle == "self":
            return self.MPI.COMM_SELF
        return handle

    def comm_rank(self, comm) -> int:
        return comm.Get_rank()

    def comm_size(self, comm) -> int:
        return comm.Get_size()

    # ---- point to point ---------------------------------------------------

    def send(self, comm, span, dst: int, tag: int) -> None:
        comm.Send([span.data(), self.MPI.BYTE], dest=dst, tag=tag)

    def recv(self, comm, span, src: int, tag: int):
        status = self.MPI.Status()
        mpi_src = self.MPI.ANY_SOURCE if src == abi.MPI_ANY_SOURCE else src
        mpi_tag = self.MPI.ANY_TAG if tag == abi.MPI_ANY_TAG else tag
        comm.Recv([span.data(), self.MPI.BYTE], source=mpi_src, tag=mpi_tag, status=status)
        n = status.Get_count(self.MPI.BYTE)
        return status.Get_source(), status.Get_tag(), n, n > span.length

    def sendrecv(self, comm, send_span, dst, stag, recv_span, src, rtag):
        status = self.MPI.Status()
        mpi_src = self.MPI.ANY_SOURCE if src == abi.MPI_ANY_SOURCE else src
        mpi_tag = self.MPI.ANY_TAG if rtag == abi.MPI_ANY_TAG else rtag
        comm.Sendrecv(
            [send_span.data(), self.MPI.BYTE], dest=dst, sendtag=stag,
            recvbuf=[recv_span.data(), self.MPI.BYTE], source=mpi_src, recvtag=mpi_tag,
            status=status,
        )
        n = status.Get_count(self.MPI.BYTE)
        return status.Get_source(), status.Get_tag(), n, n > recv_span.length

    # ---- collectives ------------------------------------------------------

    def barrier(self, comm) -> None:
        comm.Barrier()

    def bcast(self, comm, span, root: int) -> None:
        comm.Bcast([span.data(), self.MPI.BYTE], root=root)

    def reduce(self, comm, send_span, recv_span, count, dtype_code, op_code, root) -> None:
        dt, op = self._dtype(dtype_code), self._op(op_code)
        rbuf = [recv_span.data(), count, dt] if comm.Get_rank() == root else None
        comm.Reduce([send_span.data(), count, dt], rbuf, op=op, root=root)

    def allreduce(self, comm, send_span, recv_span, count, dtype_code, op_code) -> None:
        dt, op = self._dtype(dtype_code), self._op(op_code)
        comm.Allreduce([send_span.data(), count, dt], [recv_span.data(), count, dt], op=op)

    def gather(self, comm, send_span, recv_span, root) -> None:
        rbuf = [recv_span.data(), self.MPI.BYTE] if comm.Get_rank() == root else None
        comm.Gather([send_span.data(), self.MPI.BYTE], rbuf, root=root)

    def allgather(self, comm, send_span, recv_span) -> None:
        comm.Allgather([send_span.data(), self.MPI.BYTE], [recv_span.data(), self.MPI.BYTE])

    def scatter(self, comm, send_span, recv_span, chunk, root) -> None:
        sbuf = [send_span.data(), self.MPI.BYTE] if comm.Get_rank() == root else None
        comm.Scatter(sbuf, [recv_span.data(), self.MPI.BYTE], root=root)

    def alltoall(self, comm, send_span, recv_span, chunk) -> None:
        comm.Alltoall([send_span.data(), self.MPI.BYTE], [recv_span.data(), self.MPI.BYTE])

    # ---- communicator management -----------------------------------------

    def comm_split(self, comm, color: int, key: int):
        mpi_color = self.MPI.UNDEFINED if color == abi.MPI_UNDEFINED else color
        new = comm.Split(color=mpi_color, key=key)
        if new == self.MPI.COMM_NULL:
            return None
        return new

    def comm_dup(self, comm):
        return comm.Dup()

    def comm_free(self, comm) -> None:
        comm.Free()
