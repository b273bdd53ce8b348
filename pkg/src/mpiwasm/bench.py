"""Microbenchmark harness and datatype-translation latency probe.

Benchmarks drive the hostcall surface directly over the sim backend, one
thread per rank, so timings cover the embedder's translation, bounds
checking, and transport work with no module compilation in the timed
region (rank contexts are fully set up before the clock starts).

CSV schema (stable, golden-tested):
    suite,msg_bytes,ranks,iter,usec_avg,usec_min,usec_max
and for the translation probe:
    probe,datatype,msg_bytes,count,median_ns,p99_ns
"""

from __future__ import annotations

import argparse
import csv
import statistics
import struct
import sys
import threading
import time

from . import abi
from .backend.sim import SimBackend, SimGroup
from .hostcalls import Hostcalls
from .memory import LinearMemoryView

BENCH_HEADER = ["suite", "msg_bytes", "ranks", "iter", "usec_avg", "usec_min", "usec_max"]
PROBE_HEADER = ["probe", "datatype", "msg_bytes", "count", "median_ns", "p99_ns"]

SUITES = ("pingpong", "sendrecv", "bcast", "allreduce", "allgather", "alltoall")

DEFAULT_SIZES = [1 << i for i in range(23)]  # 1 B .. 4 MiB

# guest-memory layout used by every suite
_SEND = 64
_STATUS = 16


class _Rank:
    """One benchmark rank: raw linear memory plus a bound hostcall set."""

    def __init__(self, group: SimGroup, rank: int, mem_bytes: int):
        self.env = abi.Env()
        self.buf = bytearray(mem_bytes)
        self.env.memory = LinearMemoryView.of(self.buf)
        self.backend = SimBackend(group, rank, self.env)
        self.hc = Hostcalls(self.env, self.backend)
        rc = self.hc.hc_init(0, 0)
        assert rc == abi.MPI_SUCCESS


def _run_group(n: int, mem_bytes: int, body):
    """Spin up n ranks and run body(rank_ctx, rank); returns rank 0's
    body result. Exceptions on any rank propagate."""
    group = SimGroup(n)
    results: dict[int, object] = {}
    errors: list[BaseException] = []

    def main(rank: int):
        try:
            ctx = _Rank(group, rank, mem_bytes)
            results[rank] = body(ctx, rank)
        except BaseException as exc:
            errors.append(exc)
            group.abort(rank, 1)

    threads = [threading.Thread(target=main, args=(r,)) for r in range(n)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if errors:
        raise errors[0]
    return results[0]


def _stats_row(suite: str, size: int, ranks: int, times_us: list[float]):
    return [
        suite, size, ranks, len(times_us),
        f"{statistics.fmean(times_us):.3f}",
        f"{min(times_us):.3f}",
        f"{max(times_us):.3f}",
    ]


def _mem_needed(size: int, ranks: int) -> int:
    # send area + the largest receive area any suite uses
    return _SEND + size * (ranks + 1) + 4096


def bench_pingpong(size: int, iters: int, sendrecv: bool = False):
    recv_at = _SEND + size

    def body(ctx: _Rank, rank: int):
        hc, peer = ctx.hc, 1 - rank
        times = []
        for _ in range(iters):
            t0 = time.perf_counter()
            if sendrecv:
                rc = hc.hc_sendrecv(
                    _SEND, size, abi.MPI_BYTE, peer, 1,
                    recv_at, size, abi.MPI_BYTE, peer, 1, 0, 0,
                )
                assert rc == abi.MPI_SUCCESS
            elif rank == 0:
                assert hc.hc_send(_SEND, size, abi.MPI_BYTE, 1, 1, 0) == 0
                assert hc.hc_recv(recv_at, size, abi.MPI_BYTE, 1, 1, 0, 0) == 0
            else:
                assert hc.hc_recv(recv_at, size, abi.MPI_BYTE, 0, 1, 0, 0) == 0
                assert hc.hc_send(_SEND, size, abi.MPI_BYTE, 0, 1, 0) == 0
            times.append((time.perf_counter() - t0) * 1e6)
        return times

    return _run_group(2, _mem_needed(size, 2), body)


def bench_collective(suite: str, size: int, ranks: int, iters: int):
    recv_at = _SEND + size * ranks  # send area holds per-peer chunks when needed

    def body(ctx: _Rank, rank: int):
        hc = ctx.hc
        times = []
        count = max(size // 4, 1)  # i32 elements for the reduction check
        for it in range(iters):
            hc.hc_barrier(0)
            t0 = time.perf_counter()
            if suite == "bcast":
                assert hc.hc_bcast(_SEND, size, abi.MPI_BYTE, 0, 0) == 0
            elif suite == "allreduce":
                if size >= 4:
                    struct.pack_into("<i", ctx.buf, _SEND, rank + 1)
                    assert hc.hc_allreduce(_SEND, recv_at, count, abi.MPI_INT, abi.MPI_SUM, 0) == 0
                else:
                    assert hc.hc_allreduce(_SEND, recv_at, size, abi.MPI_BYTE, abi.MPI_MAX, 0) == 0
            elif suite == "allgather":
                assert hc.hc_allgather(_SEND, size, abi.MPI_BYTE, recv_at, size, abi.MPI_BYTE, 0) == 0
            elif suite == "alltoall":
                assert hc.hc_alltoall(_SEND, size, abi.MPI_BYTE, recv_at, size, abi.MPI_BYTE, 0) == 0
            else:
                raise ValueError(suite)
            times.append((time.perf_counter() - t0) * 1e6)
            if suite == "allreduce" and size >= 4:
                got = struct.unpack_from("<i", ctx.buf, recv_at)[0]
                assert got == ranks * (ranks + 1) // 2, got
        return times

    mem = _SEND + size * ranks * 2 + 4096
    return _run_group(ranks, mem, body)


def run_bench(suite: str, sizes: list[int], iters: int, ranks: int):
    """Yield CSV rows for one suite across message sizes."""
    for size in sizes:
        if suite == "pingpong":
            times = bench_pingpong(size, iters)
            n = 2
        elif suite == "sendrecv":
            times = bench_pingpong(size, iters, sendrecv=True)
            n = 2
        else:
            times = bench_collective(suite, size, ranks, iters)
            n = ranks
        yield _stats_row(suite, size, n, times)


def run_translation_probe(datatypes: list[int], sizes: list[int], iters: int):
    """Yield per (datatype, message size) translation-latency rows.

    Translation cost does not depend on the message size; the size axis is
    kept so results line up with the send-path measurements they model.
    """
    for dtype in datatypes:
        name = abi.DATATYPE_NAMES[dtype]
        for size in sizes:
            env = abi.Env(instrument=True)
            env.memory = LinearMemoryView.of(bytearray(16))
            for _ in range(iters):
                abi.translate_datatype(env, dtype)
            samples = sorted(env.counters.translation_ns)
            median = statistics.median(samples)
            p99 = samples[min(len(samples) - 1, int(len(samples) * 0.99))]
            yield ["translation", name, size, len(samples), f"{median:.0f}", f"{p99:.0f}"]


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="mpiwasm-bench",
        description="Message-passing microbenchmarks and the datatype-translation probe.",
    )
    parser.add_argument("--suite", default="pingpong",
                        help=f"comma list from {{{','.join(SUITES)}}} or 'all'")
    parser.add_argument("--sizes", default=None,
                        help="comma list of message sizes in bytes "
                             "(default: powers of two, 1 B to 4 MiB)")
    parser.add_argument("--iters", type=int, default=20)
    parser.add_argument("--np", type=int, default=4, help="ranks for collectives")
    parser.add_argument("--probe", action="store_true",
                        help="run the translation-latency probe instead")
    parser.add_argument("--out", default=None, help="write CSV here instead of stdout")
    args = parser.parse_args(argv)

    sizes = (
        [int(s) for s in args.sizes.split(",")] if args.sizes else list(DEFAULT_SIZES)
    )
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(out)
        if args.probe:
            writer.writerow(PROBE_HEADER)
            for row in run_translation_probe(
                sorted(abi.DATATYPE_NAMES), sizes, max(args.iters, 1000)
            ):
                writer.writerow(row)
            return 0
        suites = SUITES if args.suite == "all" else tuple(args.suite.split(","))
        for suite in suites:
            if suite not in SUITES:
                parser.error(f"unknown suite {suite!r}")
        writer.writerow(BENCH_HEADER)
        for suite in suites:
            for row in run_bench(suite, sizes, args.iters, args.np):
                writer.writerow(row)
        return 0
    finally:
        if args.out:
            out.close()


if __name__ == "__main__":
    sys.exit(main())
