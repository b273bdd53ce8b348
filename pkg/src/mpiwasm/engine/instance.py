"""Module instantiation and execution.

An Instance owns one linear memory (a bytearray), the resolved function
list, globals, and the function table. Host imports are provided by a
resolver callable; the MPI and WASI layers plug in through it.
"""

from __future__ import annotations

import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import (
    ExportMissing,
    GuestAllocFailed,
    MissingExport,
    MpiWasmError,
    ProcExit,
    Trap,
)
from ..sandbox import Preopen
from ..wasm.binary import PAGE_SIZE
from .compiler import CompiledModule, ModuleArtifact
from . import interp

log = logging.getLogger("mpiwasm.engine")


@dataclass
class InstanceConfig:
    preopens: list[Preopen] = field(default_factory=list)
    argv: list[str] = field(default_factory=list)
    env_vars: list[str] = field(default_factory=list)  # KEY=VALUE
    backend: str = "sim"
    cache_dir: Path | None = None
    cache_enabled: bool = True
    instrument: bool = False

    def validate(self) -> None:
        for p in self.preopens:
            if not Path(p.host_path).is_dir():
                raise MpiWasmError(f"preopen {p.host_path} is not a directory")


class HostFunc:
    """Adapter wrapping a host callable as an instance function slot."""

    __slots__ = ("fn", "name")

    def __init__(self, fn, name: str):
        self.fn = fn
        self.name = name

    def __call__(self, args: list):
        return self.fn(args)


class Instance:
    def __init__(self, artifact: ModuleArtifact, resolver, config: InstanceConfig | None = None):
        """resolver(namespace, name, functype, instance) -> callable(args)->list

        The resolver is called once per function import during construction.
        """
        self.module: CompiledModule = artifact.native_object
        self.artifact = artifact
        self.config = config or InstanceConfig()
        mod = self.module
        if mod.mem_limits is not None:
            self.mem = bytearray(mod.mem_limits.minimum * PAGE_SIZE)
            self.mem_max_pages = (
                mod.mem_limits.maximum if mod.mem_limits.maximum is not None else 65536
            )
        else:
            self.mem = bytearray(0)
            self.mem_max_pages = 0
        self.globals = [init for (_vt, _mut, init) in mod.globals]
        self.table: list[int | None] = [None] * mod.table_min
        for offset, func_indices in mod.elems:
            if offset + len(func_indices) > len(self.table):
                self.table.extend([None] * (offset + len(func_indices) - len(self.table)))
            for i, fi in enumerate(func_indices):
                self.table[offset + i] = fi
        # exit code recorded when the guest calls proc_exit
        self.exit_code: int | None = None

        self.funcs: list = []
        for namespace, name, type_idx in mod.func_imports:
            fn = resolver(namespace, name, mod.types[type_idx], self)
            self.funcs.append(HostFunc(fn, f"{namespace}.{name}"))
        for f in mod.functions:
            self.funcs.append(self._make_local(f))

        for offset, data in mod.datas:
            if offset is None:
                continue  # passive segments initialize via memory.init (unsupported)
            if offset + len(data) > len(self.mem):
                raise Trap("data segment out of bounds")
            self.mem[offset : offset + len(data)] = data

        if mod.start is not None:
            self.funcs[mod.start]([])

    def _make_local(self, func):
        def call(args, _func=func):
            return interp.execute(self, _func, args)

        return call

    # ---- memory -----------------------------------------------------------

    def grow_memory(self, delta_pages: int) -> int:
        old_pages = len(self.mem) // PAGE_SIZE
        if delta_pages == 0:
            return old_pages
        new_pages = old_pages + delta_pages
        if new_pages > self.mem_max_pages or new_pages > 65536:
            return -1
        self.mem.extend(bytes(delta_pages * PAGE_SIZE))
        return old_pages

    # ---- exports ----------------------------------------------------------

    def export_func(self, name: str):
        entry = self.module.exports.get(name)
        if entry is None or entry[0] != "func":
            raise MissingExport(f"module does not export function {name!r}")
        return self.funcs[entry[1]]

    def has_export(self, name: str, kind: str = "func") -> bool:
        entry = self.module.exports.get(name)
        return entry is not None and entry[0] == kind

    def guest_alloc(self, size: int) -> int:
        """Invoke the module's exported malloc. Size 0 passes through."""
        if not self.has_export("malloc"):
            raise ExportMissing("module does not export malloc")
        result = self.export_func("malloc")([size & 0xFFFFFFFF])
        addr = result[0] if result else 0
        if size > 0 and addr == 0:
            raise GuestAllocFailed(f"guest malloc({size}) returned null")
        return addr

    def guest_free(self, addr: int) -> None:
        if not self.has_export("free"):
            raise ExportMissing("module does not export free")
        self.export_func("free")([addr & 0xFFFFFFFF])

    # ---- running ----------------------------------------------------------

    def run_start(self) -> int:
        """Run the exported `_start` to completion; returns the exit code."""
        if not self.has_export("_start"):
            raise MissingExport("module does not export _start")
        if not self.has_export("memory", "memory"):
            raise MissingExport("module does not export memory")
        try:
            self.export_func("_start")([])
        except ProcExit as exit_:
            self.exit_code = exit_.code
            return exit_.code
        self.exit_code = 0
        return 0


def instantiate_and_run(
    artifact: ModuleArtifact,
    resolver,
    config: InstanceConfig | None = None,
    diagnostics=sys.stderr,
) -> int:
    """Instantiate and execute a module's `_start`.

    Traps are reported to `diagnostics` and yield exit code 1; the embedder
    process stays intact and can instantiate further modules.
    """
    if config is not None:
        config.validate()
    try:
        instance = Instance(artifact, resolver, config)
        return instance.run_start()
    except ProcExit as exit_:
        return exit_.code
    except Trap as trap:
        print(f"mpiwasm: guest trapped: {trap}", file=diagnostics)
        return 1
    except MissingExport:
        raise
