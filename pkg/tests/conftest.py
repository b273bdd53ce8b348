"""Shared helpers: direct-drive rank groups and fixture assembly."""

from __future__ import annotations

import threading
from pathlib import Path

import pytest

from mpiwasm import abi
from mpiwasm.backend.sim import SimBackend, SimGroup
from mpiwasm.hostcalls import Hostcalls
from mpiwasm.memory import LinearMemoryView
from mpiwasm.wasm.wat import assemble_wat

FIXTURES = Path(__file__).parent / "fixtures"


class Rank:
    """A hostcall-driven rank with raw guest memory; no wasm module."""

    def __init__(self, group: SimGroup, rank: int, mem_bytes: int = 1 << 16):
        self.env = abi.Env()
        self.buf = bytearray(mem_bytes)
        self.env.memory = LinearMemoryView.of(self.buf)
        self.backend = SimBackend(group, rank, self.env)
        self.hc = Hostcalls(self.env, self.backend)


def run_group(n: int, body, mem_bytes: int = 1 << 16, init: bool = True):
    """Run body(rank_ctx, rank) on n threads; returns {rank: result}.

    Any rank's exception aborts the group and is re-raised here.
    """
    group = SimGroup(n)
    results: dict[int, object] = {}
    errors: list[BaseException] = []

    def main(rank: int):
        try:
            ctx = Rank(group, rank, mem_bytes)
            if init:
                assert ctx.hc.hc_init(0, 0) == abi.MPI_SUCCESS
            results[rank] = body(ctx, rank)
        except BaseException as exc:
            errors.append(exc)
            group.abort(rank, 1)

    threads = [threading.Thread(target=main, args=(r,)) for r in range(n)]
    for t in threads:
        t.start()
    for t in threads:
        t.join(timeout=120)
    if errors:
        raise errors[0]
    return results


@pytest.fixture
def single_rank():
    group = SimGroup(1)
    ctx = Rank(group, 0)
    assert ctx.hc.hc_init(0, 0) == abi.MPI_SUCCESS
    return ctx


def load_fixture(name: str) -> bytes:
    return assemble_wat((FIXTURES / name).read_text())
