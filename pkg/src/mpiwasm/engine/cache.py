"""On-disk artifact cache for compiled modules.

Layout: `<cache_dir>/<64-hex-chars>.art`. Each file carries a magic line,
the engine fingerprint, and a SHA-256 integrity digest ahead of the pickled
payload; a corrupt or truncated artifact is detected, recompiled, and
overwritten. Writes go through a temp file plus atomic rename so the
directory may be shared by concurrent processes.
"""

from __future__ import annotations

import hashlib
import os
import pickle
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import CacheCorrupt
from . import compiler
from .compiler import ModuleArtifact, ValidatedModule

_MAGIC = b"MPIWASM-ART1\n"


def serialize_artifact(artifact: ModuleArtifact) -> bytes:
    payload = pickle.dumps(
        (artifact.module_hash, artifact.engine_fingerprint, artifact.native_object),
        protocol=pickle.HIGHEST_PROTOCOL,
    )
    digest = hashlib.sha256(payload).hexdigest().encode("ascii")
    return _MAGIC + digest + b"\n" + payload


def deserialize_artifact(data: bytes) -> ModuleArtifact:
    if not data.startswith(_MAGIC):
        raise CacheCorrupt("bad artifact magic")
    rest = data[len(_MAGIC) :]
    nl = rest.find(b"\n")
    if nl != 64:
        raise CacheCorrupt("bad integrity header")
    digest, payload = rest[:64], rest[65:]
    if hashlib.sha256(payload).hexdigest().encode("ascii") != digest:
        raise CacheCorrupt("artifact integrity check failed")
    try:
        module_hash, fingerprint, native = pickle.loads(payload)
    except Exception as exc:
        raise CacheCorrupt(f"artifact payload undecodable: {exc}") from exc
    return ModuleArtifact(module_hash, fingerprint, native)


@dataclass
class CacheStats:
    hits: int = 0
    misses: int = 0
    recompiles: int = 0  # corruption-recovery compiles (also counted in misses)


@dataclass
class ArtifactCache:
    directory: Path
    enabled: bool = True
    stats: CacheStats = field(default_factory=CacheStats)

    def path_for(self, module_hash: str) -> Path:
        return Path(self.directory) / f"{module_hash}.art"

    def load(self, module_hash: str) -> ModuleArtifact | None:
        """Return the cached artifact, None on miss, CacheCorrupt on damage."""
        path = self.path_for(module_hash)
        try:
            data = path.read_bytes()
        except OSError:
            return None
        artifact = deserialize_artifact(data)
        if artifact.module_hash != module_hash:
            raise CacheCorrupt("artifact hash mismatch")
        return artifact

    def store(self, artifact: ModuleArtifact) -> Path:
        directory = Path(self.directory)
        directory.mkdir(parents=True, exist_ok=True)
        data = serialize_artifact(artifact)
        fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as f:
                f.write(data)
            target = self.path_for(artifact.module_hash)
            os.replace(tmp, target)  # atomic: concurrent writers race safely
            return target
        except BaseException:
            try:
                os.unlink(tmp)
            except OSError:
                pass
            raise


def compile_or_fetch_bytes(data: bytes, cache: ArtifactCache | None) -> ModuleArtifact:
    """Like compile_or_fetch, keyed on raw module bytes.

    A cache hit skips decoding and validation entirely; that work was paid
    when the artifact was first compiled, and the content hash guarantees
    the bytes have not changed since.
    """
    if cache is None or not cache.enabled:
        return compiler.compile_module(compiler.load_module(data))
    module_hash = compiler.compute_module_hash(data, compiler.engine_fingerprint())
    corrupt = False
    try:
        cached = cache.load(module_hash)
    except CacheCorrupt:
        cached = None
        corrupt = True
    if cached is not None:
        cache.stats.hits += 1
        return cached
    cache.stats.misses += 1
    if corrupt:
        cache.stats.recompiles += 1
    artifact = compiler.compile_module(compiler.load_module(data))
    cache.store(artifact)
    return artifact


def compile_or_fetch(module: ValidatedModule, cache: ArtifactCache | None) -> ModuleArtifact:
    """Fetch the compiled artifact from the cache or compile and store it.

    A corrupt cached artifact falls back to recompilation and is
    overwritten; the result is indistinguishable from a cold miss.
    """
    if cache is None or not cache.enabled:
        return compiler.compile_module(module)
    module_hash = compiler.compute_module_hash(module.raw, compiler.engine_fingerprint())
    corrupt = False
    try:
        cached = cache.load(module_hash)
    except CacheCorrupt:
        cached = None
        corrupt = True
    if cached is not None:
        cache.stats.hits += 1
        return cached
    cache.stats.misses += 1
    if corrupt:
        cache.stats.recompiles += 1
    artifact = compiler.compile_module(module)
    cache.store(artifact)
    return artifact
