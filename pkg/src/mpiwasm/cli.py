"""The `mpiwasm` executable: run one Wasm MPI program.

Usage shape:

    mpiwasm [--backend sim|native] [--np N] [-d DIR[:ro]]...
            [--cache-dir P] [--no-cache] [--instrument]
            MODULE.wasm [-- guest args]

Under the sim backend the whole rank group runs in this process and the
exit code is rank 0's; under the native backend the process is one rank
and must be launched by the host's mpirun, which supplies the rank count.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .abi import abi_manifest
from .engine.cache import ArtifactCache, compile_or_fetch_bytes
from .engine.instance import InstanceConfig
from .errors import MpiWasmError, SandboxError
from .runtime import run_rank, spawn_sim_group
from .sandbox import map_preopens, parse_preopen_arg

log = logging.getLogger("mpiwasm.cli")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mpiwasm",
        description="Execute an MPI program compiled to WebAssembly.",
    )
    parser.add_argument("--backend", choices=("sim", "native"), default="sim",
                        help="transport: in-process simulated ranks, or the host MPI library")
    parser.add_argument("--np", type=int, default=None, metavar="N",
                        help="rank count (sim backend only; required there)")
    parser.add_argument("-d", dest="preopens", action="append", default=[],
                        metavar="DIR[:ro]",
                        help="grant the guest access to DIR under /<basename>; "
                             "append :ro for read-only")
    parser.add_argument("--cache-dir", type=Path, default=None,
                        help="compiled-artifact cache directory "
                             "(default: $MPIWASM_CACHE_DIR)")
    parser.add_argument("--no-cache", action="store_true",
                        help="always compile, never touch the cache")
    parser.add_argument("--instrument", action="store_true",
                        help="record per-call translation latencies")
    parser.add_argument("--emit-abi-manifest", action="store_true",
                        help="print the frozen ABI constants table and exit")
    parser.add_argument("module", nargs="?", type=Path, metavar="MODULE.wasm")
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if "--" in argv:
        split = argv.index("--")
        argv, guest_args = argv[:split], argv[split + 1 :]
    else:
        guest_args = []

    parser = build_parser()
    args = parser.parse_args(argv)

    if args.emit_abi_manifest:
        sys.stdout.write(abi_manifest())
        return 0
    if args.module is None:
        parser.error("MODULE.wasm is required")
    if args.backend == "sim" and args.np is None:
        parser.error("--backend sim requires --np")
    if args.backend == "native" and args.np is not None:
        parser.error("--backend native takes its rank count from the MPI "
                     "launcher; drop --np")
    if args.np is not None and args.np < 1:
        parser.error("--np must be >= 1")

    try:
        preopens = map_preopens([parse_preopen_arg(a) for a in args.preopens])
    except SandboxError as exc:
        parser.error(str(exc))

    cache_dir = args.cache_dir or (
        Path(os.environ["MPIWASM_CACHE_DIR"]) if os.environ.get("MPIWASM_CACHE_DIR") else None
    )
    cache = None
    if cache_dir is not None and not args.no_cache:
        cache = ArtifactCache(cache_dir)

    try:
        data = args.module.read_bytes()
    except OSError as exc:
        print(f"mpiwasm: cannot read {args.module}: {exc}", file=sys.stderr)
        return 1

    config = InstanceConfig(
        preopens=preopens,
        argv=[args.module.name, *guest_args],
        env_vars=[],
        backend=args.backend,
        cache_dir=cache_dir,
        cache_enabled=cache is not None,
        instrument=args.instrument,
    )

    try:
        artifact = compile_or_fetch_bytes(data, cache)
        if args.backend == "sim":
            return spawn_sim_group(artifact, args.np, config)
        from .backend.native import NativeBackend

        return run_rank(artifact, NativeBackend(), config)
    except MpiWasmError as exc:
        print(f"mpiwasm: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
