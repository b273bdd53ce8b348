"""Minimal `wasi_snapshot_preview1` surface.

Enough for CLI-style guests: argument and environment marshalling,
clocks, randomness, stdio, and file access gated through the preopen
sandbox. Anything else resolves to a stub returning ENOSYS so linking
never fails.

All functions return a WASI errno (0 = success); guest-side failures
never raise into the embedder except proc_exit, which unwinds the
instance.
"""

from __future__ import annotations

import errno as _host_errno
import logging
import os
import time
from dataclasses import dataclass

from .errors import NotCapable, OutOfBounds, ProcExit, RightsViolation, SandboxError
from .memory import to_host, read_scalar, write_scalar
from .sandbox import Preopen, resolve_path

log = logging.getLogger("mpiwasm.wasi")

# errno values from the preview1 witx
ESUCCESS = 0
EACCES = 2
EBADF = 8
EINVAL = 28
EIO = 29
ENOENT = 44
ENOSYS = 52
ENOTDIR = 54
EROFS = 69
ENOTCAPABLE = 76

# fd_fdstat filetypes
_FT_DIR = 3
_FT_REGULAR = 4
_FT_CHARDEV = 2

# path_open oflags
_O_CREAT = 1 << 0
_O_DIRECTORY = 1 << 1
_O_EXCL = 1 << 2
_O_TRUNC = 1 << 3

# rights bits (subset)
_RIGHT_FD_READ = 1 << 1
_RIGHT_FD_WRITE = 1 << 6

_CLOCK_REALTIME = 0
_CLOCK_MONOTONIC = 1


@dataclass
class _FdEntry:
    kind: str  # "stdio", "preopen", "file"
    preopen: Preopen | None = None
    host_fd: int | None = None
    stream: object = None  # stdio write target
    writable: bool = False
    readable: bool = False


def _host_err(exc: OSError) -> int:
    return {
        _host_errno.ENOENT: ENOENT,
        _host_errno.EACCES: EACCES,
        _host_errno.ENOTDIR: ENOTDIR,
        _host_errno.EEXIST: 20,  # EEXIST
        _host_errno.EISDIR: 31,  # EISDIR
    }.get(exc.errno, EIO)


class Wasi:
    """One instance's WASI state: argv/env, the fd table, preopens."""

    def __init__(self, argv, env_vars, preopens, refresh, stdout=None, stderr=None):
        self.argv = [a.encode() for a in argv]
        self.env_vars = [f"{k}={v}".encode() for k, v in env_vars]
        self.preopens = list(preopens)
        self.refresh = refresh
        self.stdout = stdout
        self.stderr = stderr
        self.fds: dict[int, _FdEntry] = {
            0: _FdEntry("stdio", readable=True),
            1: _FdEntry("stdio", stream=stdout, writable=True),
            2: _FdEntry("stdio", stream=stderr, writable=True),
        }
        for i, pre in enumerate(self.preopens):
            self.fds[3 + i] = _FdEntry("preopen", preopen=pre, readable=True,
                                       writable=not pre.read_only)
        self._next_fd = 3 + len(self.preopens)

    def _mem(self):
        return self.refresh()

    def _alloc_fd(self, entry: _FdEntry) -> int:
        fd = self._next_fd
        self._next_fd += 1
        self.fds[fd] = entry
        return fd

    # ---- process ------------------------------------------------------------

    def proc_exit(self, code: int):
        raise ProcExit(code & 0xFFFFFFFF)

    # ---- args / environ -------------------------------------------------------

    def _sizes_get(self, items, count_addr, buf_size_addr) -> int:
        mem = self._mem()
        write_scalar(mem, count_addr, "u32", len(items))
        write_scalar(mem, buf_size_addr, "u32", sum(len(x) + 1 for x in items))
        return ESUCCESS

    def _vec_get(self, items, ptrs_addr, buf_addr) -> int:
        mem = self._mem()
        off = buf_addr
        for i, item in enumerate(items):
            write_scalar(mem, ptrs_addr + 4 * i, "u32", off)
            span = to_host(mem, off, len(item) + 1)
            span.write(item + b"\0")
            off += len(item) + 1
        return ESUCCESS

    def args_sizes_get(self, count_addr, buf_size_addr) -> int:
        return self._sizes_get(self.argv, count_addr, buf_size_addr)

    def args_get(self, ptrs_addr, buf_addr) -> int:
        return self._vec_get(self.argv, ptrs_addr, buf_addr)

    def environ_sizes_get(self, count_addr, buf_size_addr) -> int:
        return self._sizes_get(self.env_vars, count_addr, buf_size_addr)

    def environ_get(self, ptrs_addr, buf_addr) -> int:
        return self._vec_get(self.env_vars, ptrs_addr, buf_addr)

    # ---- clocks / random -------------------------------------------------------

    def clock_time_get(self, clock_id, _precision, time_addr) -> int:
        if clock_id == _CLOCK_REALTIME:
            ns = time.time_ns()
        elif clock_id == _CLOCK_MONOTONIC:
            ns = time.monotonic_ns()
        else:
            return EINVAL
        write_scalar(self._mem(), time_addr, "i64", ns & ((1 << 63) - 1))
        return ESUCCESS

    def random_get(self, buf_addr, buf_len) -> int:
        span = to_host(self._mem(), buf_addr, buf_len)
        span.write(os.urandom(buf_len))
        return ESUCCESS

    # ---- descriptors ------------------------------------------------------------

    def fd_prestat_get(self, fd, buf_addr) -> int:
        entry = self.fds.get(fd)
        if entry is None or entry.kind != "preopen":
            return EBADF
        mem = self._mem()
        name = b"/" + entry.preopen.guest_name.encode()
        write_scalar(mem, buf_addr, "u32", 0)  # tag: preopen dir
        write_scalar(mem, buf_addr + 4, "u32", len(name))
        return ESUCCESS

    def fd_prestat_dir_name(self, fd, path_addr, path_len) -> int:
        entry = self.fds.get(fd)
        if entry is None or entry.kind != "preopen":
            return EBADF
        name = b"/" + entry.preopen.guest_name.encode()
        if path_len < len(name):
            return EINVAL
        to_host(self._mem(), path_addr, len(name)).write(name)
        return ESUCCESS

    def fd_fdstat_get(self, fd, stat_addr) -> int:
        entry = self.fds.get(fd)
        if entry is None:
            return EBADF
        mem = self._mem()
        span = to_host(mem, stat_addr, 24)
        filetype = {"stdio": _FT_CHARDEV, "preopen": _FT_DIR, "file": _FT_REGULAR}[entry.kind]
        rights = (_RIGHT_FD_READ if entry.readable else 0) | (
            _RIGHT_FD_WRITE if entry.writable else 0
        )
        span.write(b"\0" * 24)
        write_scalar(mem, stat_addr, "u32", filetype)  # filetype u8 + pad
        write_scalar(mem, stat_addr + 8, "i64", rights)
        write_scalar(mem, stat_addr + 16, "i64", rights)
        return ESUCCESS

    def fd_close(self, fd) -> int:
        entry = self.fds.get(fd)
        if entry is None:
            return EBADF
        if entry.kind == "file":
            try:
                os.close(entry.host_fd)
            except OSError as exc:
                return _host_err(exc)
            del self.fds[fd]
            return ESUCCESS
        if entry.kind == "preopen":
            return ESUCCESS  # preopens stay open for the instance's life
        return ESUCCESS

    # ---- io ------------------------------------------------------------------

    def _iovs(self, mem, iovs_addr, iovs_len):
        out = []
        for i in range(iovs_len):
            base = read_scalar(mem, iovs_addr + 8 * i, "u32")
            length = read_scalar(mem, iovs_addr + 8 * i + 4, "u32")
            out.append(to_host(mem, base, length))
        return out

    def fd_write(self, fd, iovs_addr, iovs_len, nwritten_addr) -> int:
        entry = self.fds.get(fd)
        if entry is None:
            return EBADF
        if not entry.writable:
            return EACCES
        mem = self._mem()
        spans = self._iovs(mem, iovs_addr, iovs_len)
        total = 0
        for span in spans:
            data = span.read()
            if entry.kind == "stdio":
                if entry.stream is not None:
                    entry.stream.write(data)
                else:
                    os.write(1 if fd == 1 else 2, data)
            else:
                try:
                    os.write(entry.host_fd, data)
                except OSError as exc:
                    return _host_err(exc)
            total += len(data)
        write_scalar(mem, nwritten_addr, "u32", total)
        return ESUCCESS

    def fd_read(self, fd, iovs_addr, iovs_len, nread_addr) -> int:
        entry = self.fds.get(fd)
        if entry is None or not entry.readable:
            return EBADF
        mem = self._mem()
        if entry.kind != "file":  # stdin: report EOF
            write_scalar(mem, nread_addr, "u32", 0)
            return ESUCCESS
        total = 0
        for span in self._iovs(mem, iovs_addr, iovs_len):
            try:
                data = os.read(entry.host_fd, span.length)
            except OSError as exc:
                return _host_err(exc)
            span.view.buffer[span.offset : span.offset + len(data)] = data
            total += len(data)
            if len(data) < span.length:
                break
        write_scalar(mem, nread_addr, "u32", total)
        return ESUCCESS

    def fd_seek(self, fd, offset, whence, newoffset_addr) -> int:
        entry = self.fds.get(fd)
        if entry is None or entry.kind != "file":
            return EBADF
        if whence not in (0, 1, 2):
            return EINVAL
        if offset >= 1 << 63:
            offset -= 1 << 64
        try:
            pos = os.lseek(entry.host_fd, offset, whence)
        except OSError as exc:
            return _host_err(exc)
        write_scalar(self._mem(), newoffset_addr, "i64", pos)
        return ESUCCESS

    def path_open(
        self, dirfd, _dirflags, path_addr, path_len, oflags,
        rights_base, _rights_inheriting, _fdflags, fd_out_addr,
    ) -> int:
        entry = self.fds.get(dirfd)
        if entry is None or entry.kind != "preopen":
            return EBADF
        mem = self._mem()
        try:
            rel = to_host(mem, path_addr, path_len).read().decode()
        except (OutOfBounds, UnicodeDecodeError):
            return EINVAL
        wants_write = bool(rights_base & _RIGHT_FD_WRITE) or bool(
            oflags & (_O_CREAT | _O_TRUNC)
        )
        guest_path = f"{entry.preopen.guest_name}/{rel.lstrip('/')}"
        try:
            host, pre = resolve_path(self.preopens, guest_path, for_write=wants_write)
        except RightsViolation:
            return EACCES
        except NotCapable:
            return ENOTCAPABLE
        except SandboxError:
            return ENOTCAPABLE
        flags = os.O_RDWR if wants_write else os.O_RDONLY
        if oflags & _O_CREAT:
            flags |= os.O_CREAT
        if oflags & _O_EXCL:
            flags |= os.O_EXCL
        if oflags & _O_TRUNC:
            flags |= os.O_TRUNC
        if oflags & _O_DIRECTORY:
            return ENOSYS  # directory handles beyond preopens not supported
        try:
            host_fd = os.open(host, flags, 0o644)
        except OSError as exc:
            return _host_err(exc)
        fd = self._alloc_fd(
            _FdEntry("file", host_fd=host_fd, readable=True, writable=wants_write)
        )
        write_scalar(mem, fd_out_addr, "u32", fd)
        return ESUCCESS


# import name -> (method, param kinds, result count). "I" marks an i64
# parameter; everything else is i32.
WASI_EXPORTS = {
    "proc_exit": ("proc_exit", "i", 0),
    "args_sizes_get": ("args_sizes_get", "ii", 1),
    "args_get": ("args_get", "ii", 1),
    "environ_sizes_get": ("environ_sizes_get", "ii", 1),
    "environ_get": ("environ_get", "ii", 1),
    "clock_time_get": ("clock_time_get", "iIi", 1),
    "random_get": ("random_get", "ii", 1),
    "fd_prestat_get": ("fd_prestat_get", "ii", 1),
    "fd_prestat_dir_name": ("fd_prestat_dir_name", "iii", 1),
    "fd_fdstat_get": ("fd_fdstat_get", "ii", 1),
    "fd_close": ("fd_close", "i", 1),
    "fd_write": ("fd_write", "iiii", 1),
    "fd_read": ("fd_read", "iiii", 1),
    "fd_seek": ("fd_seek", "iIii", 1),
    "path_open": ("path_open", "iiiiiIIii", 1),
}


def make_wasi_stub(name: str, n_results: int):
    warned = []

    def stub(args):
        if not warned:
            log.warning("unimplemented WASI function called: %s", name)
            warned.append(True)
        return [ENOSYS] * n_results

    return stub
