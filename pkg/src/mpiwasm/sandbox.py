"""Preopen policy and guest path resolution.

Each granted host directory appears in the guest's view as a top-level
name equal to its final path component, so the guest never learns the
rest of the host path. Rights (read-only vs read-write) are enforced here
regardless of what the OS would permit. All resolution re-checks
containment after symlink expansion, so a link pointing outside its
preopen is rejected rather than followed.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

from .errors import (
    DuplicateAfterSuffixing,
    NotADirectory,
    NotCapable,
    RightsViolation,
)

_MAX_SUFFIX = 99


@dataclass(frozen=True)
class Preopen:
    host_path: str  # absolute, normalized
    guest_name: str  # single path component
    read_only: bool


def parse_preopen_arg(arg: str) -> tuple[str, bool]:
    """Split a `-d DIR[:ro]` argument into (host path, read_only)."""
    if arg.endswith(":ro"):
        return arg[: -len(":ro")], True
    return arg, False


def map_preopens(specs: list[tuple[str, bool]]) -> list[Preopen]:
    """Build the preopen table from (host path, read_only) pairs.

    Guest names are the host basenames; collisions get `.2`, `.3`, ...
    appended in grant order.
    """
    table: list[Preopen] = []
    taken: set[str] = set()
    for host_path, read_only in specs:
        host_path = os.path.realpath(host_path)
        if not os.path.isdir(host_path):
            raise NotADirectory(f"preopen target is not a directory: {host_path}")
        base = os.path.basename(host_path.rstrip(os.sep)) or "root"
        name = base
        suffix = 2
        while name in taken:
            if suffix > _MAX_SUFFIX:
                raise DuplicateAfterSuffixing(f"too many preopens named {base!r}")
            name = f"{base}.{suffix}"
            suffix += 1
        taken.add(name)
        table.append(Preopen(host_path, name, read_only))
    return table


def _normalize(guest_path: str) -> list[str]:
    """Flatten a guest path to components, resolving `.` and `..`
    lexically; `..` above the root is an escape attempt."""
    parts: list[str] = []
    if "\0" in guest_path:
        # NUL never names a real file and breaks host path syscalls
        raise NotCapable("path contains a NUL byte")
    for comp in guest_path.split("/"):
        if comp in ("", "."):
            continue
        if comp == "..":
            if not parts:
                raise NotCapable(f"path escapes the sandbox root: {guest_path!r}")
            parts.pop()
        else:
            parts.append(comp)
    return parts


def resolve_path(preopens: list[Preopen], guest_path: str, for_write: bool = False) -> tuple[str, Preopen]:
    """Map a guest path to (host path, owning preopen).

    The guest path must name a preopen or something beneath one. The
    resolved host path is verified to stay inside the preopen's subtree
    even after symlink expansion.
    """
    parts = _normalize(guest_path)
    if not parts:
        raise NotCapable("the virtual root itself is not accessible")
    for pre in preopens:
        if parts[0] == pre.guest_name:
            break
    else:
        raise NotCapable(f"no preopen grants access to {guest_path!r}")
    if for_write and pre.read_only:
        raise RightsViolation(f"{guest_path!r} is under a read-only grant")
    host = os.path.join(pre.host_path, *parts[1:])
    # containment after symlink resolution: check the deepest existing
    # ancestor so creating new files under the tree still works
    probe = host
    while not os.path.exists(probe):
        parent = os.path.dirname(probe)
        if parent == probe:
            break
        probe = parent
    real = os.path.realpath(probe)
    if real != pre.host_path and not real.startswith(pre.host_path + os.sep):
        raise NotCapable(f"{guest_path!r} resolves outside its grant")
    return host, pre


def resolve_under(preopens: list[Preopen], dir_pre: Preopen, rel_path: str, for_write: bool = False) -> str:
    """Resolve a path relative to an already-opened preopen directory."""
    host, _pre = resolve_path(
        preopens, f"{dir_pre.guest_name}/{rel_path}", for_write=for_write
    )
    return host
