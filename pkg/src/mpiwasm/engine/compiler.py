"""Ahead-of-time translation of decoded modules to executable form.

"Compilation" here flattens every function body into a jump-resolved
instruction tuple the interpreter can execute without re-scanning for block
structure, and pre-evaluates constant initializers. The result is the
artifact payload stored by the on-disk cache; loading a cached artifact
skips this pass entirely.
"""

from __future__ import annotations

import hashlib
import platform
import sys
from dataclasses import dataclass, field

from ..errors import CompilationFailed, MalformedModule
from ..wasm import binary
from ..wasm import opcodes as op

# incremented on every real compile; cache hits leave it untouched
compile_count = 0

_ENGINE_VERSION = "0.1.0"
_OPT_TIER = "flat-1"


def engine_fingerprint() -> str:
    """Engine version + target triple + optimization tier.

    Part of the cache key: a cached artifact is invalid across engine or
    target changes even for identical module bytes.
    """
    return (
        f"mpiwasm/{_ENGINE_VERSION};{sys.platform}-{platform.machine()};"
        f"py{sys.version_info.major}.{sys.version_info.minor};{_OPT_TIER}"
    )


def compute_module_hash(data: bytes, fingerprint: str) -> str:
    """Deterministic 256-bit content hash of (module bytes, fingerprint)."""
    h = hashlib.sha256()
    h.update(data)
    h.update(b"\x00")
    h.update(fingerprint.encode("utf-8"))
    return h.hexdigest()


@dataclass(frozen=True)
class ValidatedModule:
    """Raw bytes plus the decoded, structurally validated module."""

    raw: bytes
    parsed: binary.ParsedModule

    def import_names(self) -> list[tuple[str, str]]:
        return self.parsed.import_names()


def load_module(data: bytes) -> ValidatedModule:
    """Decode and validate a Wasm binary.

    Raises MalformedModule / UnsupportedFeature per the decoder contract.
    """
    return ValidatedModule(bytes(data), binary.decode_module(data))


@dataclass
class CompiledFunction:
    type_idx: int
    num_params: int
    num_locals: int  # params + declared locals
    code: tuple  # flattened (opcode, arg) tuples


@dataclass
class CompiledModule:
    types: list[binary.FuncType]
    func_imports: list[tuple[str, str, int]]  # (module, name, type_idx)
    mem_import: tuple[str, str] | None
    mem_limits: binary.Limits | None
    functions: list[CompiledFunction]  # local functions only
    globals: list[tuple[int, bool, object]]  # (valtype, mutable, init value)
    exports: dict[str, tuple[str, int]]  # name -> (kind, index)
    table_min: int
    elems: list[tuple[int, list[int]]]  # (offset, func indices)
    datas: list[tuple[int | None, bytes]]  # (offset or None for passive, data)
    start: int | None

    def func_type(self, func_idx: int) -> binary.FuncType:
        if func_idx < len(self.func_imports):
            return self.types[self.func_imports[func_idx][2]]
        return self.types[self.functions[func_idx - len(self.func_imports)].type_idx]


@dataclass(frozen=True)
class ModuleArtifact:
    """Compiled code for one module, keyed by content hash in the cache."""

    module_hash: str
    engine_fingerprint: str
    native_object: CompiledModule = field(repr=False)


def _const_eval(expr: list, globals_so_far: list) -> object:
    """Evaluate a constant initializer expression (consts + global.get)."""
    stack: list = []
    for opcode, arg in expr:
        if opcode in (op.I32_CONST, op.I64_CONST):
            stack.append(arg & (0xFFFFFFFF if opcode == op.I32_CONST else 0xFFFFFFFFFFFFFFFF))
        elif opcode in (op.F32_CONST, op.F64_CONST):
            stack.append(arg)
        elif opcode == op.GLOBAL_GET:
            stack.append(globals_so_far[arg][2])
        elif opcode == op.END:
            break
        else:
            raise MalformedModule(f"non-constant initializer opcode 0x{opcode:02x}")
    if len(stack) != 1:
        raise MalformedModule("initializer must produce exactly one value")
    return stack[0]


def _block_arity(types: list[binary.FuncType], blocktype: int) -> int:
    if blocktype == -64:  # 0x40: empty
        return 0
    if blocktype < 0:  # value type
        return 1
    return len(types[blocktype].results)


def _flatten(code: list, types: list[binary.FuncType]) -> tuple:
    """Resolve structured control flow into jump targets.

    Produces instruction args:
      BLOCK -> (end_idx, arity)
      LOOP  -> (loop_idx, 0)           # br target re-enters the loop header
      IF    -> (else_or_end_idx, end_idx, arity)
      ELSE  -> end_idx                 # forward jump when `then` falls through
    Other instructions keep their decoded immediates. The trailing function
    `end` is preserved as the return marker.
    """
    instrs = [list(i) for i in code]
    stack: list[tuple[int, int]] = []  # (instr index, opcode)
    for idx, (opcode, arg) in enumerate(code):
        if opcode in (op.BLOCK, op.LOOP, op.IF):
            stack.append((idx, opcode))
        elif opcode == op.ELSE:
            if not stack or stack[-1][1] != op.IF:
                raise MalformedModule("else without if")
            if_idx = stack[-1][0]
            instrs[if_idx].append(idx)  # remember else position
        elif opcode == op.END:
            if not stack:
                break  # function-level end
            open_idx, open_op = stack.pop()
            bt = code[open_idx][1]
            arity = _block_arity(types, bt)
            if open_op == op.BLOCK:
                instrs[open_idx][1] = (idx, arity)
            elif open_op == op.LOOP:
                instrs[open_idx][1] = (open_idx, 0)
            else:  # IF
                else_idx = instrs[open_idx][2] if len(instrs[open_idx]) > 2 else None
                target = else_idx if else_idx is not None else idx
                instrs[open_idx] = [op.IF, (target, idx, arity)]
                if else_idx is not None:
                    instrs[else_idx] = [op.ELSE, idx]
    if stack:
        raise MalformedModule("unterminated block")
    return tuple((i[0], i[1]) for i in instrs)


def compile_module(module: ValidatedModule) -> ModuleArtifact:
    """Translate a validated module into its executable artifact."""
    global compile_count
    compile_count += 1
    parsed = module.parsed
    try:
        globals_out: list[tuple[int, bool, object]] = []
        for g in parsed.globals:
            globals_out.append((g.valtype, g.mutable, _const_eval(g.init, globals_out)))
        functions = [
            CompiledFunction(
                type_idx=body.type_idx,
                num_params=len(parsed.types[body.type_idx].params),
                num_locals=len(parsed.types[body.type_idx].params) + len(body.local_types),
                code=_flatten(body.code, parsed.types),
            )
            for body in parsed.bodies
        ]
        func_imports = [(i.module, i.name, i.desc) for i in parsed.func_imports]
        mem_import = None
        for i in parsed.imports:
            if i.kind == "memory":
                mem_import = (i.module, i.name)
        datas = [
            (None if d.offset_expr is None else int(_const_eval(d.offset_expr, globals_out)), d.data)
            for d in parsed.datas
        ]
        elems = [
            (int(_const_eval(e.offset_expr, globals_out)), e.func_indices) for e in parsed.elems
        ]
        compiled = CompiledModule(
            types=list(parsed.types),
            func_imports=func_imports,
            mem_import=mem_import,
            mem_limits=parsed.mem_limits,
            functions=functions,
            globals=globals_out,
            exports={e.name: (e.kind, e.index) for e in parsed.exports},
            table_min=parsed.tables[0].minimum if parsed.tables else 0,
            elems=elems,
            datas=datas,
            start=parsed.start,
        )
    except MalformedModule:
        raise
    except Exception as exc:  # pragma: no cover - defensive
        raise CompilationFailed(str(exc)) from exc
    fingerprint = engine_fingerprint()
    return ModuleArtifact(
        module_hash=compute_module_hash(module.raw, fingerprint),
        engine_fingerprint=fingerprint,
        native_object=compiled,
    )
