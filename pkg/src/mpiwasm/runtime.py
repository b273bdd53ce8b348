"""Per-rank wiring: artifact + backend + MPI/WASI import resolution.

`run_rank` builds everything one executing rank needs (Env, hostcall
surface, WASI state, instance) and runs the module's `_start`.
`spawn_sim_group` does that N times on threads sharing one SimGroup, which
is how `--backend sim --np N` executes a program in a single process.
"""

from __future__ import annotations

import logging
import sys
import threading

from . import abi
from .backend.sim import SimBackend, SimGroup
from .engine.compiler import ModuleArtifact
from .engine.instance import Instance, InstanceConfig
from .errors import GroupAborted, MpiWasmError, ProcExit, Trap
from .hostcalls import HOSTCALL_EXPORTS, Hostcalls, make_stub
from .memory import view_of
from .wasi import WASI_EXPORTS, Wasi, make_wasi_stub

log = logging.getLogger("mpiwasm.runtime")


def _sext32(v: int) -> int:
    v &= 0xFFFFFFFF
    return v - (1 << 32) if v >= (1 << 31) else v


def _bind_hostcall(method, n_results: int):
    # interpreter values are unsigned; MPI arguments are signed i32
    def call(args):
        result = method(*[_sext32(a) for a in args])
        if n_results == 0:
            return []
        if isinstance(result, float):
            return [result]
        return [result & 0xFFFFFFFF]

    return call


def _bind_wasi(method, n_results: int):
    def call(args):
        result = method(*args)
        return [] if n_results == 0 else [(result or 0) & 0xFFFFFFFF]

    return call


def make_resolver(hostcalls: Hostcalls, wasi: Wasi):
    """Import resolver covering `env` (MPI) and `wasi_snapshot_preview1`.

    Names outside the shipped surface resolve to logging stubs, so modules
    linking against a larger libc/MPI surface still instantiate.
    """

    def resolver(namespace, name, functype, _instance):
        n_results = len(functype.results)
        if namespace == "env":
            entry = HOSTCALL_EXPORTS.get(name)
            if entry is None:
                return make_stub(name, n_results)
            method_name, _nparams, _res = entry
            return _bind_hostcall(getattr(hostcalls, method_name), n_results)
        if namespace == "wasi_snapshot_preview1":
            entry = WASI_EXPORTS.get(name)
            if entry is None:
                return make_wasi_stub(name, n_results)
            method_name, _kinds, _nres = entry
            return _bind_wasi(getattr(wasi, method_name), n_results)
        return make_stub(f"{namespace}.{name}", n_results)

    return resolver


class RankRuntime:
    """Everything one rank needs to execute a module."""

    def __init__(self, artifact: ModuleArtifact, backend, config: InstanceConfig,
                 stdout=None, stderr=None):
        self.env = abi.Env(instrument=config.instrument)
        self.backend = backend
        if hasattr(backend, "env"):
            backend.env = self.env
        self.instance: Instance | None = None

        def refresh():
            view = view_of(self.instance)
            self.env.memory = view
            return view

        self.hostcalls = Hostcalls(self.env, backend, refresh=refresh)
        self.wasi = Wasi(
            argv=config.argv,
            env_vars=[kv.split("=", 1) for kv in config.env_vars],
            preopens=config.preopens,
            refresh=refresh,
            stdout=stdout,
            stderr=stderr,
        )
        resolver = make_resolver(self.hostcalls, self.wasi)
        self.instance = Instance(artifact, resolver, config)
        self.hostcalls.instance = self.instance

    def run(self, diagnostics=sys.stderr) -> int:
        try:
            return self.instance.run_start()
        except ProcExit as exit_:
            return exit_.code
        except GroupAborted as aborted:
            if aborted.rank == self.env.rank:
                print(f"mpiwasm: rank {self.env.rank}: {aborted}", file=diagnostics)
            return aborted.errcode or 1
        except Trap as trap:
            print(f"mpiwasm: rank {self.env.rank}: guest trapped: {trap}",
                  file=diagnostics)
            if isinstance(self.backend, SimBackend):
                self.backend.group.abort(self.env.rank, 1)
            return 1


def run_rank(artifact, backend, config, diagnostics=sys.stderr,
             stdout=None, stderr=None) -> int:
    config.validate()
    rt = RankRuntime(artifact, backend, config, stdout=stdout, stderr=stderr)
    return rt.run(diagnostics)


def spawn_sim_group(artifact: ModuleArtifact, np: int, config: InstanceConfig,
                    diagnostics=sys.stderr, runtimes_out: list | None = None) -> int:
    """Run `np` instances of the module on threads sharing one rank group.

    Returns rank 0's exit code. A trap or abort on any rank unblocks the
    whole group.
    """
    config.validate()
    group = SimGroup(np)
    exit_codes: dict[int, int] = {}
    failures: list[BaseException] = []

    def rank_main(rank: int):
        try:
            backend = SimBackend(group, rank)
            rt = RankRuntime(artifact, backend, config)
            if runtimes_out is not None:
                runtimes_out.append(rt)
            exit_codes[rank] = rt.run(diagnostics)
        except MpiWasmError as exc:
            print(f"mpiwasm: rank {rank}: {exc}", file=diagnostics)
            group.abort(rank, 1)
            exit_codes[rank] = 1
        except BaseException as exc:  # host bug: surface, never hang peers
            failures.append(exc)
            group.abort(rank, 1)
            exit_codes[rank] = 1

    threads = [
        threading.Thread(target=rank_main, args=(r,), name=f"mpiwasm-rank-{r}")
        for r in range(np)
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if failures:
        raise failures[0]
    return exit_codes.get(0, 1)
