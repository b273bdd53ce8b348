from .compiler import (
    CompiledModule,
    ModuleArtifact,
    ValidatedModule,
    compile_module,
    compute_module_hash,
    engine_fingerprint,
    load_module,
)
from .cache import ArtifactCache, compile_or_fetch
from .instance import Instance, InstanceConfig, instantiate_and_run

__all__ = [
    "ArtifactCache",
    "CompiledModule",
    "Instance",
    "InstanceConfig",
    "ModuleArtifact",
    "ValidatedModule",
    "compile_module",
    "compile_or_fetch",
    "compute_module_hash",
    "engine_fingerprint",
    "instantiate_and_run",
    "load_module",
]
