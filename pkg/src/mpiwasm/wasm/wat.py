"""Assembler for the WebAssembly text format (WAT).

Covers the subset used by hand-written fixtures and sample guests: module
fields type/import/func/memory/global/export/data/start, plain and folded
instruction forms, named locals/functions/labels, inline exports, and the
numeric/memory/control instruction set from the opcode tables. Tables and
element segments are not supported.
"""

from __future__ import annotations

import re
import struct

from ..errors import MalformedModule
from . import opcodes as op

VALTYPES = {"i32": 0x7F, "i64": 0x7E, "f32": 0x7D, "f64": 0x7C}

_TOKEN_RE = re.compile(
    r"""
    \s+
  | ;;[^\n]*
  | (?P<lpar>\()
  | (?P<rpar>\))
  | (?P<string>"(?:\\.|[^"\\])*")
  | (?P<atom>[^()\s;"]+)
    """,
    re.VERBOSE,
)


def _tokenize(text: str):
    # strip block comments first (non-nesting is fine for our fixtures)
    text = re.sub(r"\(;.*?;\)", " ", text, flags=re.DOTALL)
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise MalformedModule(f"WAT: bad token at offset {pos}: {text[pos:pos+20]!r}")
        pos = m.end()
        if m.lastgroup:
            yield m.lastgroup, m.group(m.lastgroup)


def _parse_sexpr(text: str):
    stack: list[list] = [[]]
    for kind, tok in _tokenize(text):
        if kind == "lpar":
            stack.append([])
        elif kind == "rpar":
            if len(stack) == 1:
                raise MalformedModule("WAT: unbalanced ')'")
            node = stack.pop()
            stack[-1].append(node)
        else:
            stack[-1].append(tok)
    if len(stack) != 1:
        raise MalformedModule("WAT: unbalanced '('")
    return stack[0]


_STRING_ESCAPES = {"n": b"\n", "t": b"\t", "r": b"\r", '"': b'"', "'": b"'", "\\": b"\\"}


def _decode_string(tok: str) -> bytes:
    body = tok[1:-1]
    out = bytearray()
    i = 0
    while i < len(body):
        c = body[i]
        if c != "\\":
            out.extend(c.encode("utf-8"))
            i += 1
            continue
        nxt = body[i + 1]
        if nxt in _STRING_ESCAPES:
            out.extend(_STRING_ESCAPES[nxt])
            i += 2
        elif nxt == "u":
            m = re.match(r"u\{([0-9a-fA-F]+)\}", body[i + 1 :])
            if not m:
                raise MalformedModule(f"WAT: bad escape in {tok}")
            out.extend(chr(int(m.group(1), 16)).encode("utf-8"))
            i += 1 + m.end()
        else:
            out.append(int(body[i + 1 : i + 3], 16))
            i += 3
    return bytes(out)


def _parse_int(tok: str) -> int:
    tok = tok.replace("_", "")
    neg = tok.startswith("-")
    if neg or tok.startswith("+"):
        tok = tok[1:]
    value = int(tok, 16) if tok.lower().startswith("0x") else int(tok, 10)
    return -value if neg else value


def _parse_float(tok: str) -> float:
    t = tok.replace("_", "")
    if "nan" in t:
        return float("-nan") if t.startswith("-") else float("nan")
    if "inf" in t:
        return float("-inf") if t.startswith("-") else float("inf")
    if t.lower().startswith(("0x", "-0x", "+0x")):
        return float.fromhex(t if "p" in t.lower() else t + "p0")
    return float(t)


# ---------------------------------------------------------------------------
# binary emission helpers


def _leb_u(value: int) -> bytes:
    out = bytearray()
    while True:
        b = value & 0x7F
        value >>= 7
        if value:
            out.append(b | 0x80)
        else:
            out.append(b)
            return bytes(out)


def _leb_s(value: int) -> bytes:
    out = bytearray()
    while True:
        b = value & 0x7F
        value >>= 7
        done = (value == 0 and not b & 0x40) or (value == -1 and b & 0x40)
        out.append(b if done else b | 0x80)
        if done:
            return bytes(out)


def _name(s: str) -> bytes:
    raw = s.encode("utf-8")
    return _leb_u(len(raw)) + raw


def _section(sec_id: int, payload: bytes) -> bytes:
    return bytes([sec_id]) + _leb_u(len(payload)) + payload


def _vec(items: list[bytes]) -> bytes:
    return _leb_u(len(items)) + b"".join(items)


# ---------------------------------------------------------------------------


class _Cursor:
    """Walks a flat list of nodes (atoms and sublists)."""

    def __init__(self, nodes: list):
        self.nodes = nodes
        self.i = 0

    def peek(self):
        return self.nodes[self.i] if self.i < len(self.nodes) else None

    def next(self):
        node = self.nodes[self.i]
        self.i += 1
        return node

    def done(self) -> bool:
        return self.i >= len(self.nodes)

    def take_keyword_list(self, keyword: str):
        node = self.peek()
        if isinstance(node, list) and node and node[0] == keyword:
            return self.next()
        return None


class _ModuleAssembler:
    def __init__(self):
        self.types: list[tuple[tuple[int, ...], tuple[int, ...]]] = []
        self.type_names: dict[str, int] = {}
        self.imports: list[bytes] = []
        self.func_names: dict[str, int] = {}
        self.func_type_idx: list[int] = []  # local funcs only
        self.func_bodies: list[list] = []  # unassembled node lists
        self.func_param_names: list[dict[str, int]] = []
        self.func_param_counts: list[int] = []
        self.num_imported_funcs = 0
        self.mem_limits: tuple[int, int | None] | None = None
        self.table_limits: tuple[int, int | None] | None = None
        self.elems: list[bytes] = []
        self.global_names: dict[str, int] = {}
        self.globals: list[bytes] = []
        self.num_imported_globals = 0
        self.exports: list[bytes] = []
        self.datas: list[bytes] = []
        self.start: int | None = None

    def intern_type(self, params: tuple[int, ...], results: tuple[int, ...]) -> int:
        key = (params, results)
        for i, t in enumerate(self.types):
            if t == key:
                return i
        self.types.append(key)
        return len(self.types) - 1

    # ---- signature parsing ------------------------------------------------

    def parse_sig(self, cur: _Cursor) -> tuple[int, dict[str, int]]:
        """Parse (type $t)? (param ...)* (result ...)* and return type index
        plus named-parameter map."""
        params: list[int] = []
        results: list[int] = []
        param_names: dict[str, int] = {}
        tnode = cur.take_keyword_list("type")
        explicit = None
        if tnode is not None:
            ref = tnode[1]
            explicit = self.type_names[ref] if ref.startswith("$") else _parse_int(ref)
        while True:
            node = cur.take_keyword_list("param")
            if node is None:
                break
            rest = node[1:]
            if rest and rest[0].startswith("$"):
                param_names[rest[0]] = len(params)
                params.append(VALTYPES[rest[1]])
            else:
                params.extend(VALTYPES[t] for t in rest)
        while True:
            node = cur.take_keyword_list("result")
            if node is None:
                break
            results.extend(VALTYPES[t] for t in node[1:])
        if explicit is not None:
            return explicit, param_names
        return self.intern_type(tuple(params), tuple(results)), param_names

    # ---- module fields ----------------------------------------------------

    def add_field(self, node: list) -> None:
        head = node[0]
        if head == "type":
            cur = _Cursor(node[1:])
            name = None
            if isinstance(cur.peek(), str) and cur.peek().startswith("$"):
                name = cur.next()
            fn = cur.next()
            if not (isinstance(fn, list) and fn[0] == "func"):
                raise MalformedModule("WAT: (type ...) must contain (func ...)")
            idx, _ = _ModuleAssembler.parse_sig(self, _Cursor(fn[1:]))
            # parse_sig interns; for a bare (type) field force a fresh entry
            if name:
                self.type_names[name] = idx
        elif head == "import":
            self._add_import(node)
        elif head == "func":
            self._add_func(node)
        elif head == "memory":
            self._add_memory(node)
        elif head == "table":
            self._add_table(node)
        elif head == "elem":
            self._add_elem(node)
        elif head == "global":
            self._add_global(node)
        elif head == "export":
            self._add_export(node)
        elif head == "data":
            self._add_data(node)
        elif head == "start":
            ref = node[1]
            self.start = self.func_names[ref] if ref.startswith("$") else _parse_int(ref)
        else:
            raise MalformedModule(f"WAT: unsupported module field {head!r}")

    def _add_import(self, node: list) -> None:
        module = _decode_string(node[1]).decode()
        name = _decode_string(node[2]).decode()
        desc = node[3]
        kind = desc[0]
        cur = _Cursor(desc[1:])
        sym = None
        if isinstance(cur.peek(), str) and cur.peek().startswith("$"):
            sym = cur.next()
        if kind == "func":
            if self.func_bodies:
                raise MalformedModule("WAT: imports must precede function definitions")
            type_idx, _ = self.parse_sig(cur)
            if sym:
                self.func_names[sym] = self.num_imported_funcs
            self.imports.append(_name(module) + _name(name) + b"\x00" + _leb_u(type_idx))
            self.num_imported_funcs += 1
        elif kind == "memory":
            minimum = _parse_int(cur.next())
            maximum = _parse_int(cur.next()) if not cur.done() else None
            self.mem_limits = (minimum, maximum)
            limits = (b"\x01" + _leb_u(minimum) + _leb_u(maximum)) if maximum is not None else (b"\x00" + _leb_u(minimum))
            self.imports.append(_name(module) + _name(name) + b"\x02" + limits)
            self.mem_imported = True
        elif kind == "global":
            gt = cur.next()
            if isinstance(gt, list) and gt[0] == "mut":
                enc = bytes([VALTYPES[gt[1]], 0x01])
            else:
                enc = bytes([VALTYPES[gt], 0x00])
            if sym:
                self.global_names[sym] = self.num_imported_globals
            self.imports.append(_name(module) + _name(name) + b"\x03" + enc)
            self.num_imported_globals += 1
        else:
            raise MalformedModule(f"WAT: unsupported import kind {kind!r}")

    def _inline_exports(self, cur: _Cursor) -> list[str]:
        names = []
        while True:
            node = cur.take_keyword_list("export")
            if node is None:
                return names
            names.append(_decode_string(node[1]).decode())

    def _add_func(self, node: list) -> None:
        cur = _Cursor(node[1:])
        if isinstance(cur.peek(), str) and cur.peek().startswith("$"):
            self.func_names[cur.next()] = self.num_imported_funcs + len(self.func_bodies)
        exports = self._inline_exports(cur)
        if cur.take_keyword_list("import"):
            raise MalformedModule("WAT: inline func imports not supported")
        type_idx, param_names = self.parse_sig(cur)
        func_idx = self.num_imported_funcs + len(self.func_bodies)
        for exp in exports:
            self.exports.append(_name(exp) + b"\x00" + _leb_u(func_idx))
        self.func_type_idx.append(type_idx)
        self.func_param_names.append(param_names)
        self.func_param_counts.append(len(self.types[type_idx][0]))
        self.func_bodies.append(cur.nodes[cur.i :])

    def _add_memory(self, node: list) -> None:
        cur = _Cursor(node[1:])
        if isinstance(cur.peek(), str) and cur.peek().startswith("$"):
            cur.next()
        for exp in self._inline_exports(cur):
            self.exports.append(_name(exp) + b"\x02" + _leb_u(0))
        minimum = _parse_int(cur.next())
        maximum = _parse_int(cur.next()) if not cur.done() else None
        self.mem_limits = (minimum, maximum)

    def _add_table(self, node: list) -> None:
        cur = _Cursor(node[1:])
        if isinstance(cur.peek(), str) and cur.peek().startswith("$"):
            cur.next()
        for exp in self._inline_exports(cur):
            self.exports.append(_name(exp) + b"\x01" + _leb_u(0))
        minimum = _parse_int(cur.next())
        maximum = None
        if not cur.done() and cur.peek() != "funcref":
            maximum = _parse_int(cur.next())
        self.table_limits = (minimum, maximum)

    def _add_elem(self, node: list) -> None:
        cur = _Cursor(node[1:])
        offset_node = cur.next()
        if isinstance(offset_node, list) and offset_node[0] == "offset":
            expr = _FuncAssembler(self, {}, []).assemble_expr(offset_node[1:])
        else:
            expr = _FuncAssembler(self, {}, []).assemble_expr([offset_node])
        resolver = _FuncAssembler(self, {}, [])
        funcs = [resolver.func_index(tok) for tok in cur.nodes[cur.i:] if tok != "func"]
        self.elems.append(b"\x00" + expr + b"\x0b" + _vec([_leb_u(f) for f in funcs]))

    def _add_global(self, node: list) -> None:
        cur = _Cursor(node[1:])
        if isinstance(cur.peek(), str) and cur.peek().startswith("$"):
            self.global_names[cur.next()] = self.num_imported_globals + len(self.globals)
        exports = self._inline_exports(cur)
        gidx = self.num_imported_globals + len(self.globals)
        for exp in exports:
            self.exports.append(_name(exp) + b"\x03" + _leb_u(gidx))
        gt = cur.next()
        if isinstance(gt, list) and gt[0] == "mut":
            enc = bytes([VALTYPES[gt[1]], 0x01])
        else:
            enc = bytes([VALTYPES[gt], 0x00])
        init = _FuncAssembler(self, {}, []).assemble_expr(cur.nodes[cur.i :])
        self.globals.append(enc + init + b"\x0b")

    def _add_export(self, node: list) -> None:
        exp = _decode_string(node[1]).decode()
        desc = node[2]
        kind = desc[0]
        ref = desc[1]
        kinds = {"func": 0x00, "table": 0x01, "memory": 0x02, "global": 0x03}
        if ref.startswith("$"):
            index = {"func": self.func_names, "global": self.global_names}[kind][ref]
        else:
            index = _parse_int(ref)
        self.exports.append(_name(exp) + bytes([kinds[kind]]) + _leb_u(index))

    def _add_data(self, node: list) -> None:
        cur = _Cursor(node[1:])
        offset_node = cur.next()
        if isinstance(offset_node, list) and offset_node[0] == "offset":
            expr = _FuncAssembler(self, {}, []).assemble_expr(offset_node[1:])
        else:
            expr = _FuncAssembler(self, {}, []).assemble_expr([offset_node])
        payload = bytearray()
        while not cur.done():
            payload.extend(_decode_string(cur.next()))
        self.datas.append(b"\x00" + expr + b"\x0b" + _leb_u(len(payload)) + bytes(payload))

    # ---- final encoding ---------------------------------------------------

    def encode(self) -> bytes:
        out = bytearray(b"\x00asm\x01\x00\x00\x00")
        if self.types:
            entries = [
                b"\x60" + _vec([bytes([p]) for p in params]) + _vec([bytes([r]) for r in results])
                for params, results in self.types
            ]
            out += _section(1, _vec(entries))
        if self.imports:
            out += _section(2, _vec(self.imports))
        if self.func_type_idx:
            out += _section(3, _vec([_leb_u(t) for t in self.func_type_idx]))
        if self.table_limits is not None:
            minimum, maximum = self.table_limits
            limits = (b"\x01" + _leb_u(minimum) + _leb_u(maximum)) if maximum is not None else (b"\x00" + _leb_u(minimum))
            out += _section(4, _vec([b"\x70" + limits]))
        if self.mem_limits is not None and not getattr(self, "mem_imported", False):
            minimum, maximum = self.mem_limits
            enc = (b"\x01" + _leb_u(minimum) + _leb_u(maximum)) if maximum is not None else (b"\x00" + _leb_u(minimum))
            out += _section(5, _vec([enc]))
        if self.globals:
            out += _section(6, _vec(self.globals))
        if self.exports:
            out += _section(7, _vec(self.exports))
        if self.start is not None:
            out += _section(8, _leb_u(self.start))
        if self.elems:
            out += _section(9, _vec(self.elems))
        if self.func_bodies:
            bodies = []
            for i, nodes in enumerate(self.func_bodies):
                fa = _FuncAssembler(self, self.func_param_names[i], [], self.func_param_counts[i])
                body = fa.assemble_body(nodes)
                bodies.append(_leb_u(len(body)) + body)
            out += _section(10, _vec(bodies))
        if self.datas:
            out += _section(11, _vec(self.datas))
        return bytes(out)


class _FuncAssembler:
    def __init__(self, mod: _ModuleAssembler, param_names: dict[str, int], label_stack: list, num_params: int = 0):
        self.mod = mod
        self.local_names = dict(param_names)
        self.num_params = max(num_params, len(param_names))
        self.labels: list[str | None] = label_stack
        self.out = bytearray()

    # locals are declared before any instruction
    def collect_locals(self, cur: _Cursor, num_params: int) -> bytes:
        local_types: list[int] = []
        while True:
            node = cur.take_keyword_list("local")
            if node is None:
                break
            rest = node[1:]
            if rest and rest[0].startswith("$"):
                self.local_names[rest[0]] = num_params + len(local_types)
                local_types.append(VALTYPES[rest[1]])
            else:
                local_types.extend(VALTYPES[t] for t in rest)
        # run-length encode
        groups: list[bytes] = []
        i = 0
        while i < len(local_types):
            j = i
            while j < len(local_types) and local_types[j] == local_types[i]:
                j += 1
            groups.append(_leb_u(j - i) + bytes([local_types[i]]))
            i = j
        return _vec(groups)

    def assemble_body(self, nodes: list) -> bytes:
        cur = _Cursor(nodes)
        locals_enc = self.collect_locals(cur, self.num_params)
        # account for positional params in a function with unnamed params:
        # local indices already offset via local_names built from num_params
        self.emit_nodes(cur.nodes[cur.i :])
        self.out.append(0x0B)
        return locals_enc + bytes(self.out)

    def assemble_expr(self, nodes: list) -> bytes:
        self.emit_nodes(nodes)
        return bytes(self.out)

    # ---- emission ---------------------------------------------------------

    def emit_nodes(self, nodes: list) -> None:
        cur = _Cursor(nodes)
        while not cur.done():
            node = cur.next()
            if isinstance(node, list):
                self.emit_folded(node)
            else:
                self.emit_plain(node, cur)

    def local_index(self, tok: str) -> int:
        if tok.startswith("$"):
            return self.local_names[tok]
        return _parse_int(tok)

    def label_depth(self, tok: str) -> int:
        if tok.startswith("$"):
            for depth, name in enumerate(reversed(self.labels)):
                if name == tok:
                    return depth
            raise MalformedModule(f"WAT: unknown label {tok}")
        return _parse_int(tok)

    def func_index(self, tok: str) -> int:
        if tok.startswith("$"):
            try:
                return self.mod.func_names[tok]
            except KeyError:
                raise MalformedModule(f"WAT: unknown function {tok}") from None
        return _parse_int(tok)

    def global_index(self, tok: str) -> int:
        if tok.startswith("$"):
            return self.mod.global_names[tok]
        return _parse_int(tok)

    def emit_blocktype(self, cur: _Cursor) -> None:
        node = cur.take_keyword_list("result")
        if node is None:
            self.out.append(0x40)
        elif len(node) == 2:
            self.out.append(VALTYPES[node[1]])
        else:
            raise MalformedModule("WAT: multi-value blocks not supported")

    def emit_plain(self, name: str, cur: _Cursor) -> None:
        if name in ("block", "loop", "if"):
            label = None
            if isinstance(cur.peek(), str) and cur.peek().startswith("$"):
                label = cur.next()
            self.out.append(op.NAMES[name])
            self.emit_blocktype(cur)
            self.labels.append(label)
            return
        if name == "else":
            self.out.append(op.ELSE)
            return
        if name == "end":
            self.out.append(op.END)
            self.labels.pop()
            return
        self.emit_simple(name, cur)

    def emit_memarg(self, cur: _Cursor, natural_align: int) -> None:
        offset = 0
        align = natural_align
        while isinstance(cur.peek(), str) and cur.peek().startswith(("offset=", "align=")):
            key, _, val = cur.next().partition("=")
            if key == "offset":
                offset = _parse_int(val)
            else:
                align = _parse_int(val).bit_length() - 1
        self.out += _leb_u(align) + _leb_u(offset)

    def emit_simple(self, name: str, cur: _Cursor) -> None:
        """Emit an instruction that is not a block construct. Consumes its
        immediates from `cur`."""
        opcode = op.NAMES.get(name)
        if opcode is None:
            raise MalformedModule(f"WAT: unknown instruction {name!r}")
        if opcode in (op.MEMORY_COPY, op.MEMORY_FILL):
            self.out.append(0xFC)
            self.out += _leb_u(opcode & 0xFF)
            self.out += b"\x00\x00" if opcode == op.MEMORY_COPY else b"\x00"
            return
        self.out.append(opcode)
        imm = op.IMMEDIATES.get(opcode)
        if imm is None:
            return
        if imm == op.IMM_U32:
            tok = cur.next()
            if opcode in (op.LOCAL_GET, op.LOCAL_SET, op.LOCAL_TEE):
                self.out += _leb_u(self.local_index(tok))
            elif opcode == op.CALL:
                self.out += _leb_u(self.func_index(tok))
            elif opcode in (op.GLOBAL_GET, op.GLOBAL_SET):
                self.out += _leb_u(self.global_index(tok))
            elif opcode in (op.BR, op.BR_IF):
                self.out += _leb_u(self.label_depth(tok))
            else:
                self.out += _leb_u(_parse_int(tok))
        elif imm == op.IMM_BR_TABLE:
            targets = []
            while isinstance(cur.peek(), str) and (cur.peek().startswith("$") or cur.peek().lstrip("+-").isdigit()):
                targets.append(self.label_depth(cur.next()))
            if not targets:
                raise MalformedModule("WAT: br_table needs targets")
            self.out += _vec([_leb_u(t) for t in targets[:-1]]) + _leb_u(targets[-1])
        elif imm == op.IMM_MEMARG:
            widths = {  # natural alignment exponents
                op.I32_LOAD: 2, op.I64_LOAD: 3, op.F32_LOAD: 2, op.F64_LOAD: 3,
                op.I32_LOAD8_S: 0, op.I32_LOAD8_U: 0, op.I32_LOAD16_S: 1, op.I32_LOAD16_U: 1,
                op.I64_LOAD8_S: 0, op.I64_LOAD8_U: 0, op.I64_LOAD16_S: 1, op.I64_LOAD16_U: 1,
                op.I64_LOAD32_S: 2, op.I64_LOAD32_U: 2,
                op.I32_STORE: 2, op.I64_STORE: 3, op.F32_STORE: 2, op.F64_STORE: 3,
                op.I32_STORE8: 0, op.I32_STORE16: 1,
                op.I64_STORE8: 0, op.I64_STORE16: 1, op.I64_STORE32: 2,
            }
            self.emit_memarg(cur, widths[opcode])
        elif imm == op.IMM_I32:
            value = _parse_int(cur.next())
            if value >= 1 << 31:  # accept unsigned spellings like 0x80000000
                value -= 1 << 32
            self.out += _leb_s(value)
        elif imm == op.IMM_I64:
            value = _parse_int(cur.next())
            if value >= 1 << 63:
                value -= 1 << 64
            self.out += _leb_s(value)
        elif imm == op.IMM_CALL_INDIRECT:
            tnode = cur.take_keyword_list("type")
            if tnode is None:
                raise MalformedModule("WAT: call_indirect requires (type ...)")
            ref = tnode[1]
            idx = self.mod.type_names[ref] if ref.startswith("$") else _parse_int(ref)
            self.out += _leb_u(idx) + b"\x00"
        elif imm == op.IMM_F32:
            self.out += struct.pack("<f", _parse_float(cur.next()))
        elif imm == op.IMM_F64:
            self.out += struct.pack("<d", _parse_float(cur.next()))
        elif imm == op.IMM_MEMORY:
            self.out.append(0x00)
        else:
            raise MalformedModule(f"WAT: immediate kind {imm} not supported for {name}")

    def emit_folded(self, node: list) -> None:
        head = node[0]
        cur = _Cursor(node[1:])
        if head in ("block", "loop"):
            label = None
            if isinstance(cur.peek(), str) and cur.peek().startswith("$"):
                label = cur.next()
            self.out.append(op.NAMES[head])
            self.emit_blocktype(cur)
            self.labels.append(label)
            self.emit_nodes(cur.nodes[cur.i :])
            self.out.append(op.END)
            self.labels.pop()
            return
        if head == "if":
            label = None
            if isinstance(cur.peek(), str) and cur.peek().startswith("$"):
                label = cur.next()
            # blocktype must be emitted after the condition; buffer it
            rnode = cur.take_keyword_list("result")
            cond: list = []
            while not cur.done() and not (
                isinstance(cur.peek(), list) and cur.peek() and cur.peek()[0] == "then"
            ):
                cond.append(cur.next())
            self.emit_nodes(cond)
            self.out.append(op.IF)
            if rnode is None:
                self.out.append(0x40)
            else:
                self.out.append(VALTYPES[rnode[1]])
            self.labels.append(label)
            then_node = cur.take_keyword_list("then")
            if then_node is None:
                raise MalformedModule("WAT: folded if requires (then ...)")
            self.emit_nodes(then_node[1:])
            else_node = cur.take_keyword_list("else")
            if else_node is not None:
                self.out.append(op.ELSE)
                self.emit_nodes(else_node[1:])
            self.out.append(op.END)
            self.labels.pop()
            return
        # generic folded instruction: immediates first, then operand exprs,
        # then the instruction itself
        imm_atoms: list = []
        operands: list = []
        for child in node[1:]:
            # a (type ...) sublist before any operand is an immediate,
            # e.g. in call_indirect
            if isinstance(child, list) and child and child[0] == "type" and not operands:
                imm_atoms.append(child)
            elif isinstance(child, list):
                operands.append(child)
            elif operands:
                raise MalformedModule(f"WAT: atom after operands in ({head} ...)")
            else:
                imm_atoms.append(child)
        for operand in operands:
            self.emit_folded(operand)
        self.emit_simple(head, _Cursor(imm_atoms))


def assemble_wat(text: str) -> bytes:
    """Assemble WAT source to a Wasm binary."""
    top = _parse_sexpr(text)
    if len(top) == 1 and isinstance(top[0], list) and top[0] and top[0][0] == "module":
        fields = top[0][1:]
    else:
        fields = top
    asm = _ModuleAssembler()
    nodes = [n for n in fields if isinstance(n, list)]
    # two passes so forward references to functions resolve: first collect
    # names/signatures, then bodies are assembled in encode()
    order = {"type": 0, "import": 1, "memory": 2, "table": 2, "global": 3, "func": 4, "export": 5, "start": 5, "data": 5, "elem": 5}
    for node in sorted(nodes, key=lambda n: order.get(n[0], 6)):
        asm.add_field(node)
    return asm.encode()
