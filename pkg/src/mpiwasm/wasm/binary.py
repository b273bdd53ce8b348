"""Wasm binary decoder with lightweight structural validation.

Decodes the MVP binary format (version 1) plus sign-extension and
bulk-memory instructions. Full type-checking validation is not performed;
structural properties the embedder relies on are enforced here:

* single linear memory, max pages <= 65536, no shared / 64-bit memory
* all type, function, global and export indices in range
* code bodies decode to known opcodes with well-formed immediates
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

from ..errors import MalformedModule, UnsupportedFeature
from . import opcodes as op

WASM_MAGIC = b"\x00asm"
WASM_VERSION = b"\x01\x00\x00\x00"
PAGE_SIZE = 65536
MAX_PAGES = 65536

SEC_CUSTOM = 0
SEC_TYPE = 1
SEC_IMPORT = 2
SEC_FUNCTION = 3
SEC_TABLE = 4
SEC_MEMORY = 5
SEC_GLOBAL = 6
SEC_EXPORT = 7
SEC_START = 8
SEC_ELEMENT = 9
SEC_CODE = 10
SEC_DATA = 11
SEC_DATACOUNT = 12


class _Reader:
    __slots__ = ("data", "pos")

    def __init__(self, data: bytes, pos: int = 0):
        self.data = data
        self.pos = pos

    def eof(self) -> bool:
        return self.pos >= len(self.data)

    def byte(self) -> int:
        try:
            b = self.data[self.pos]
        except IndexError:
            raise MalformedModule("unexpected end of input") from None
        self.pos += 1
        return b

    def bytes(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise MalformedModule("unexpected end of input")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        result = 0
        shift = 0
        while True:
            b = self.byte()
            result |= (b & 0x7F) << shift
            if not b & 0x80:
                break
            shift += 7
            if shift > 35:
                raise MalformedModule("u32 LEB too long")
        if result >= 1 << 32:
            raise MalformedModule("u32 out of range")
        return result

    def s_leb(self, bits: int) -> int:
        result = 0
        shift = 0
        while True:
            b = self.byte()
            result |= (b & 0x7F) << shift
            shift += 7
            if not b & 0x80:
                if b & 0x40 and shift < bits + 7:
                    result |= -1 << shift
                break
            if shift > bits + 7:
                raise MalformedModule("signed LEB too long")
        lo, hi = -(1 << (bits - 1)), 1 << (bits - 1)
        if not lo <= result < hi:
            raise MalformedModule(f"s{bits} out of range")
        return result

    def f32(self) -> float:
        return struct.unpack("<f", self.bytes(4))[0]

    def f64(self) -> float:
        return struct.unpack("<d", self.bytes(8))[0]

    def name(self) -> str:
        n = self.u32()
        try:
            return self.bytes(n).decode("utf-8")
        except UnicodeDecodeError:
            raise MalformedModule("invalid utf-8 name") from None


@dataclass(frozen=True)
class FuncType:
    params: tuple[int, ...]
    results: tuple[int, ...]


@dataclass(frozen=True)
class Limits:
    minimum: int
    maximum: int | None


@dataclass(frozen=True)
class Import:
    module: str
    name: str
    kind: str  # func | table | memory | global
    desc: object  # type index / Limits / (valtype, mutable)


@dataclass(frozen=True)
class Export:
    name: str
    kind: str
    index: int


@dataclass
class GlobalDef:
    valtype: int
    mutable: bool
    init: list


@dataclass
class DataSegment:
    offset_expr: list | None  # None => passive
    data: bytes


@dataclass
class ElemSegment:
    offset_expr: list
    func_indices: list[int]


@dataclass
class FuncBody:
    type_idx: int
    local_types: list[int]  # expanded, excludes params
    code: list  # list of (opcode, arg) including END/ELSE markers


@dataclass
class ParsedModule:
    """A decoded, structurally validated module (the spec's ValidatedModule)."""

    types: list[FuncType] = field(default_factory=list)
    imports: list[Import] = field(default_factory=list)
    func_type_indices: list[int] = field(default_factory=list)
    tables: list[Limits] = field(default_factory=list)
    mem_limits: Limits | None = None
    mem_imported: bool = False
    globals: list[GlobalDef] = field(default_factory=list)
    exports: list[Export] = field(default_factory=list)
    start: int | None = None
    elems: list[ElemSegment] = field(default_factory=list)
    bodies: list[FuncBody] = field(default_factory=list)
    datas: list[DataSegment] = field(default_factory=list)

    @property
    def func_imports(self) -> list[Import]:
        return [i for i in self.imports if i.kind == "func"]

    @property
    def num_imported_funcs(self) -> int:
        return len(self.func_imports)

    @property
    def num_imported_globals(self) -> int:
        return sum(1 for i in self.imports if i.kind == "global")

    def import_names(self) -> list[tuple[str, str]]:
        return [(i.module, i.name) for i in self.imports]

    def export_map(self) -> dict[str, Export]:
        return {e.name: e for e in self.exports}

    def func_type(self, func_idx: int) -> FuncType:
        n = self.num_imported_funcs
        if func_idx < n:
            return self.types[self.func_imports[func_idx].desc]
        return self.types[self.func_type_indices[func_idx - n]]


def _read_limits(r: _Reader, what: str) -> Limits:
    flag = r.byte()
    if flag in (0x02, 0x03):
        raise UnsupportedFeature(f"shared {what} not supported")
    if flag in (0x04, 0x05):
        raise UnsupportedFeature(f"64-bit {what} not supported")
    if flag not in (0x00, 0x01):
        raise MalformedModule(f"bad limits flag 0x{flag:02x}")
    minimum = r.u32()
    maximum = r.u32() if flag == 0x01 else None
    return Limits(minimum, maximum)


def _check_mem_limits(limits: Limits) -> None:
    if limits.minimum > MAX_PAGES or (limits.maximum is not None and limits.maximum > MAX_PAGES):
        raise UnsupportedFeature(
            f"memory exceeds {MAX_PAGES} pages (4 GiB): {limits}"
        )


def _read_valtype(r: _Reader) -> int:
    vt = r.byte()
    if vt not in op.VALTYPE_NAMES:
        if vt in (0x7B, 0x70, 0x6F):
            raise UnsupportedFeature(f"value type 0x{vt:02x} not supported")
        raise MalformedModule(f"bad value type 0x{vt:02x}")
    return vt


def _read_expr(r: _Reader) -> list:
    """Decode an instruction sequence up to and including its final `end`."""
    code = []
    depth = 0
    while True:
        opcode = r.byte()
        if opcode == 0xFC:
            sub = r.u32()
            opcode = 0xFC00 | sub
            if opcode == op.MEMORY_COPY:
                arg = (r.byte(), r.byte())
            elif opcode == op.MEMORY_FILL:
                arg = r.byte()
            elif opcode == op.MEMORY_INIT:
                arg = (r.u32(), r.byte())
            elif opcode == op.DATA_DROP:
                arg = r.u32()
            else:
                raise UnsupportedFeature(f"0xFC opcode {sub} not supported")
            code.append((opcode, arg))
            continue
        if opcode == 0xFD:
            raise UnsupportedFeature("SIMD instructions not supported")
        imm = op.IMMEDIATES.get(opcode)
        if imm is None and opcode not in op.OPCODE_NAMES and opcode not in (op.END, op.ELSE):
            raise MalformedModule(f"unknown opcode 0x{opcode:02x}")
        if imm == op.IMM_BLOCKTYPE:
            bt = r.s_leb(33)
            arg = bt  # 0x40-empty is -64 in s33; valtypes are negative too
            depth += 1
        elif imm == op.IMM_U32:
            arg = r.u32()
        elif imm == op.IMM_MEMARG:
            align = r.u32()
            offset = r.u32()
            arg = offset  # align hint unused by the interpreter
        elif imm == op.IMM_I32:
            arg = r.s_leb(32)
        elif imm == op.IMM_I64:
            arg = r.s_leb(64)
        elif imm == op.IMM_F32:
            arg = r.f32()
        elif imm == op.IMM_F64:
            arg = r.f64()
        elif imm == op.IMM_BR_TABLE:
            n = r.u32()
            targets = tuple(r.u32() for _ in range(n))
            default = r.u32()
            arg = (targets, default)
        elif imm == op.IMM_CALL_INDIRECT:
            type_idx = r.u32()
            table_idx = r.u32()
            arg = (type_idx, table_idx)
        elif imm == op.IMM_MEMORY:
            if r.byte() != 0x00:
                raise MalformedModule("multi-memory not supported")
            arg = None
        elif imm == op.IMM_SELECT_T:
            n = r.u32()
            for _ in range(n):
                _read_valtype(r)
            opcode = op.SELECT
            arg = None
        else:
            arg = None
        code.append((opcode, arg))
        if opcode == op.END:
            if depth == 0:
                return code
            depth -= 1


def decode_module(data: bytes) -> ParsedModule:
    """Decode and validate a Wasm binary, returning a ParsedModule.

    Raises MalformedModule for encoding errors, UnsupportedFeature for
    threads/shared memory, memory64, SIMD, or memories beyond the 4 GiB cap.
    """
    if not isinstance(data, (bytes, bytearray, memoryview)):
        raise MalformedModule("module input must be bytes")
    data = bytes(data)
    if len(data) < 8 or data[:4] != WASM_MAGIC:
        raise MalformedModule("bad magic")
    if data[4:8] != WASM_VERSION:
        raise MalformedModule(f"unsupported wasm version {data[4:8]!r}")

    mod = ParsedModule()
    r = _Reader(data, 8)
    last_section = 0
    while not r.eof():
        sec_id = r.byte()
        size = r.u32()
        body = _Reader(r.bytes(size))
        if sec_id != SEC_CUSTOM:
            # Datacount (12) sorts between element (9) and code (10)
            order = {SEC_DATACOUNT: 9.5}.get(sec_id, sec_id)
            prev = {SEC_DATACOUNT: 9.5}.get(last_section, last_section)
            if order <= prev:
                raise MalformedModule(f"section {sec_id} out of order")
            last_section = sec_id

        if sec_id == SEC_CUSTOM:
            continue
        elif sec_id == SEC_TYPE:
            for _ in range(body.u32()):
                if body.byte() != 0x60:
                    raise MalformedModule("bad functype tag")
                params = tuple(_read_valtype(body) for _ in range(body.u32()))
                results = tuple(_read_valtype(body) for _ in range(body.u32()))
                mod.types.append(FuncType(params, results))
        elif sec_id == SEC_IMPORT:
            for _ in range(body.u32()):
                module = body.name()
                name = body.name()
                kind = body.byte()
                if kind == 0x00:
                    ti = body.u32()
                    if ti >= len(mod.types):
                        raise MalformedModule("import type index out of range")
                    mod.imports.append(Import(module, name, "func", ti))
                elif kind == 0x01:
                    if body.byte() != 0x70:
                        raise MalformedModule("bad table elem type")
                    mod.imports.append(Import(module, name, "table", _read_limits(body, "table")))
                elif kind == 0x02:
                    limits = _read_limits(body, "memory")
                    _check_mem_limits(limits)
                    if mod.mem_limits is not None:
                        raise MalformedModule("multiple memories")
                    mod.mem_limits = limits
                    mod.mem_imported = True
                    mod.imports.append(Import(module, name, "memory", limits))
                elif kind == 0x03:
                    vt = _read_valtype(body)
                    mut = body.byte()
                    mod.imports.append(Import(module, name, "global", (vt, bool(mut))))
                else:
                    raise MalformedModule(f"bad import kind {kind}")
        elif sec_id == SEC_FUNCTION:
            for _ in range(body.u32()):
                ti = body.u32()
                if ti >= len(mod.types):
                    raise MalformedModule("function type index out of range")
                mod.func_type_indices.append(ti)
        elif sec_id == SEC_TABLE:
            for _ in range(body.u32()):
                if body.byte() != 0x70:
                    raise MalformedModule("bad table elem type")
                mod.tables.append(_read_limits(body, "table"))
        elif sec_id == SEC_MEMORY:
            for _ in range(body.u32()):
                limits = _read_limits(body, "memory")
                _check_mem_limits(limits)
                if mod.mem_limits is not None:
                    raise MalformedModule("multiple memories")
                mod.mem_limits = limits
        elif sec_id == SEC_GLOBAL:
            for _ in range(body.u32()):
                vt = _read_valtype(body)
                mut = bool(body.byte())
                init = _read_expr(body)
                mod.globals.append(GlobalDef(vt, mut, init))
        elif sec_id == SEC_EXPORT:
            kinds = {0x00: "func", 0x01: "table", 0x02: "memory", 0x03: "global"}
            for _ in range(body.u32()):
                name = body.name()
                kind = body.byte()
                if kind not in kinds:
                    raise MalformedModule(f"bad export kind {kind}")
                mod.exports.append(Export(name, kinds[kind], body.u32()))
        elif sec_id == SEC_START:
            mod.start = body.u32()
        elif sec_id == SEC_ELEMENT:
            for _ in range(body.u32()):
                flag = body.u32()
                if flag != 0x00:
                    raise UnsupportedFeature(f"element segment flag {flag} not supported")
                offset = _read_expr(body)
                funcs = [body.u32() for _ in range(body.u32())]
                mod.elems.append(ElemSegment(offset, funcs))
        elif sec_id == SEC_DATACOUNT:
            body.u32()
        elif sec_id == SEC_CODE:
            for i in range(body.u32()):
                size = body.u32()
                fb = _Reader(body.bytes(size))
                local_types: list[int] = []
                for _ in range(fb.u32()):
                    n = fb.u32()
                    vt = _read_valtype(fb)
                    if len(local_types) + n > 1_000_000:
                        raise MalformedModule("too many locals")
                    local_types.extend([vt] * n)
                code = _read_expr(fb)
                if not fb.eof():
                    raise MalformedModule("trailing bytes in code body")
                if i >= len(mod.func_type_indices):
                    raise MalformedModule("more code bodies than functions")
                mod.bodies.append(FuncBody(mod.func_type_indices[i], local_types, code))
        elif sec_id == SEC_DATA:
            for _ in range(body.u32()):
                flag = body.u32()
                if flag == 0x00:
                    offset = _read_expr(body)
                    mod.datas.append(DataSegment(offset, body.bytes(body.u32())))
                elif flag == 0x01:
                    mod.datas.append(DataSegment(None, body.bytes(body.u32())))
                else:
                    raise UnsupportedFeature(f"data segment flag {flag} not supported")
        else:
            raise MalformedModule(f"unknown section id {sec_id}")
        if sec_id != SEC_CUSTOM and not body.eof():
            raise MalformedModule(f"trailing bytes in section {sec_id}")

    if len(mod.bodies) != len(mod.func_type_indices):
        raise MalformedModule("function/code section count mismatch")

    total_funcs = mod.num_imported_funcs + len(mod.bodies)
    for e in mod.exports:
        if e.kind == "func" and e.index >= total_funcs:
            raise MalformedModule(f"export {e.name!r} func index out of range")
        if e.kind == "memory" and (mod.mem_limits is None or e.index != 0):
            raise MalformedModule(f"export {e.name!r} memory index out of range")
    if mod.start is not None and mod.start >= total_funcs:
        raise MalformedModule("start function index out of range")
    return mod
