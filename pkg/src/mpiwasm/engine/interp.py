"""Stack-machine interpreter for flattened function code.

Value conventions: i32/i64 travel as unsigned Python ints (masked), floats
as Python floats. Signedness is applied per instruction. Traps raise
`Trap`; they unwind the Python call stack of the failing instance only.
"""

from __future__ import annotations

import math
import struct

from ..errors import Trap
from ..wasm import opcodes as op

_F32 = struct.Struct("<f")
_F64 = struct.Struct("<d")

M32 = 0xFFFFFFFF
M64 = 0xFFFFFFFFFFFFFFFF
SIGN32 = 0x80000000
SIGN64 = 0x8000000000000000


def _s32(v: int) -> int:
    return v - 0x100000000 if v & SIGN32 else v


def _s64(v: int) -> int:
    return v - 0x10000000000000000 if v & SIGN64 else v


def _f32_round(x: float) -> float:
    try:
        return _F32.unpack(_F32.pack(x))[0]
    except OverflowError:
        return math.inf if x > 0 else -math.inf


def _div_trunc(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return -q if (a < 0) != (b < 0) else q


def _rem_trunc(a: int, b: int) -> int:
    r = abs(a) % abs(b)
    return -r if a < 0 else r


def _trunc_checked(x: float, lo: int, hi: int, name: str) -> int:
    if math.isnan(x):
        raise Trap(f"invalid conversion to integer ({name})")
    t = math.trunc(x)
    if not lo <= t <= hi:
        raise Trap(f"integer overflow in {name}")
    return t


def _nearest(x: float) -> float:
    if math.isnan(x) or math.isinf(x):
        return x
    r = math.floor(x)
    d = x - r
    if d > 0.5:
        r += 1
    elif d == 0.5 and r % 2 != 0:
        r += 1
    return float(r)


def _fmin(a: float, b: float) -> float:
    if math.isnan(a) or math.isnan(b):
        return math.nan
    if a == b == 0.0:
        return a if math.copysign(1.0, a) < 0 else b
    return min(a, b)


def _fmax(a: float, b: float) -> float:
    if math.isnan(a) or math.isnan(b):
        return math.nan
    if a == b == 0.0:
        return a if math.copysign(1.0, a) > 0 else b
    return max(a, b)


def execute(instance, func, args: list) -> list:
    """Run one compiled function to completion; returns its result values."""
    code = func.code
    locals_ = list(args) + [0] * (func.num_locals - func.num_params)
    n_results = len(instance.module.types[func.type_idx].results)
    stack: list = []
    ctrl: list = []  # (branch target pc, arity, value-stack height)
    push = stack.append
    pop = stack.pop
    mem = instance.mem
    pc = 0
    ncode = len(code)
    while pc < ncode:
        opcode, arg = code[pc]
        pc += 1
        # --- most frequent first: consts, locals, arithmetic -------------
        if opcode == op.I32_CONST:
            push(arg & M32)
        elif opcode == op.LOCAL_GET:
            push(locals_[arg])
        elif opcode == op.LOCAL_SET:
            locals_[arg] = pop()
        elif opcode == op.LOCAL_TEE:
            locals_[arg] = stack[-1]
        elif 0x45 <= opcode <= 0xC4:
            # numeric / conversion block, dispatched below
            _numeric(opcode, stack, push, pop)
        elif op.I32_LOAD <= opcode <= op.I64_STORE32:
            mem = instance.mem  # may have grown/moved
            a = pop() if opcode >= op.I32_STORE else None
            if opcode >= op.I32_STORE:
                val = a
                addr = pop() + arg
            else:
                addr = pop() + arg
            if opcode == op.I32_LOAD:
                if addr + 4 > len(mem):
                    raise Trap("out-of-bounds memory access")
                push(int.from_bytes(mem[addr : addr + 4], "little"))
            elif opcode == op.I64_LOAD:
                if addr + 8 > len(mem):
                    raise Trap("out-of-bounds memory access")
                push(int.from_bytes(mem[addr : addr + 8], "little"))
            elif opcode == op.F32_LOAD:
                if addr + 4 > len(mem):
                    raise Trap("out-of-bounds memory access")
                push(_F32.unpack_from(mem, addr)[0])
            elif opcode == op.F64_LOAD:
                if addr + 8 > len(mem):
                    raise Trap("out-of-bounds memory access")
                push(_F64.unpack_from(mem, addr)[0])
            elif opcode in (op.I32_LOAD8_U, op.I64_LOAD8_U):
                if addr >= len(mem):
                    raise Trap("out-of-bounds memory access")
                push(mem[addr])
            elif opcode in (op.I32_LOAD8_S, op.I64_LOAD8_S):
                if addr >= len(mem):
                    raise Trap("out-of-bounds memory access")
                v = mem[addr]
                v = v - 0x100 if v & 0x80 else v
                push(v & (M32 if opcode == op.I32_LOAD8_S else M64))
            elif opcode in (op.I32_LOAD16_U, op.I64_LOAD16_U):
                if addr + 2 > len(mem):
                    raise Trap("out-of-bounds memory access")
                push(int.from_bytes(mem[addr : addr + 2], "little"))
            elif opcode in (op.I32_LOAD16_S, op.I64_LOAD16_S):
                if addr + 2 > len(mem):
                    raise Trap("out-of-bounds memory access")
                v = int.from_bytes(mem[addr : addr + 2], "little")
                v = v - 0x10000 if v & 0x8000 else v
                push(v & (M32 if opcode == op.I32_LOAD16_S else M64))
            elif opcode == op.I64_LOAD32_U:
                if addr + 4 > len(mem):
                    raise Trap("out-of-bounds memory access")
                push(int.from_bytes(mem[addr : addr + 4], "little"))
            elif opcode == op.I64_LOAD32_S:
                if addr + 4 > len(mem):
                    raise Trap("out-of-bounds memory access")
                v = int.from_bytes(mem[addr : addr + 4], "little")
                v = v - 0x100000000 if v & SIGN32 else v
                push(v & M64)
            elif opcode == op.I32_STORE:
                if addr + 4 > len(mem):
                    raise Trap("out-of-bounds memory access")
                mem[addr : addr + 4] = (val & M32).to_bytes(4, "little")
            elif opcode == op.I64_STORE:
                if addr + 8 > len(mem):
                    raise Trap("out-of-bounds memory access")
                mem[addr : addr + 8] = (val & M64).to_bytes(8, "little")
            elif opcode == op.F32_STORE:
                if addr + 4 > len(mem):
                    raise Trap("out-of-bounds memory access")
                _F32.pack_into(mem, addr, _f32_round(val))
            elif opcode == op.F64_STORE:
                if addr + 8 > len(mem):
                    raise Trap("out-of-bounds memory access")
                _F64.pack_into(mem, addr, val)
            elif opcode in (op.I32_STORE8, op.I64_STORE8):
                if addr >= len(mem):
                    raise Trap("out-of-bounds memory access")
                mem[addr] = val & 0xFF
            elif opcode in (op.I32_STORE16, op.I64_STORE16):
                if addr + 2 > len(mem):
                    raise Trap("out-of-bounds memory access")
                mem[addr : addr + 2] = (val & 0xFFFF).to_bytes(2, "little")
            else:  # I64_STORE32
                if addr + 4 > len(mem):
                    raise Trap("out-of-bounds memory access")
                mem[addr : addr + 4] = (val & M32).to_bytes(4, "little")
        elif opcode == op.CALL:
            fn = instance.funcs[arg]
            ftype = instance.module.func_type(arg)
            n = len(ftype.params)
            call_args = stack[len(stack) - n :] if n else []
            del stack[len(stack) - n :]
            results = fn(call_args)
            if results:
                stack.extend(results)
            mem = instance.mem
        elif opcode == op.BLOCK:
            ctrl.append((arg[0] + 1, arg[1], len(stack)))
            # arg[0] is the END index; branch lands after it
        elif opcode == op.LOOP:
            ctrl.append((arg[0], 0, len(stack)))
        elif opcode == op.IF:
            target, end_idx, arity = arg
            cond = pop()
            if cond:
                ctrl.append((end_idx + 1, arity, len(stack)))
            elif target == end_idx:
                pc = end_idx + 1  # no else: skip body and END
            else:
                ctrl.append((end_idx + 1, arity, len(stack)))
                pc = target + 1
        elif opcode == op.ELSE:
            # reached by falling out of the `then` arm
            ctrl.pop()
            pc = arg + 1
        elif opcode == op.END:
            if ctrl:
                ctrl.pop()
            # function-level end falls out of the loop via pc
        elif opcode == op.BR or opcode == op.BR_IF:
            if opcode == op.BR_IF and not pop():
                continue
            target, arity, height = ctrl[-1 - arg]
            del ctrl[len(ctrl) - 1 - arg :]
            if arity:
                kept = stack[len(stack) - arity :]
                del stack[height:]
                stack.extend(kept)
            else:
                del stack[height:]
            pc = target
        elif opcode == op.BR_TABLE:
            targets, default = arg
            i = pop()
            depth = targets[i] if i < len(targets) else default
            target, arity, height = ctrl[-1 - depth]
            del ctrl[len(ctrl) - 1 - depth :]
            if arity:
                kept = stack[len(stack) - arity :]
                del stack[height:]
                stack.extend(kept)
            else:
                del stack[height:]
            pc = target
        elif opcode == op.RETURN:
            return stack[len(stack) - n_results :] if n_results else []
        elif opcode == op.CALL_INDIRECT:
            type_idx, _table = arg
            elem = pop()
            table = instance.table
            if elem >= len(table) or table[elem] is None:
                raise Trap("undefined table element")
            func_idx = table[elem]
            if instance.module.func_type(func_idx) != instance.module.types[type_idx]:
                raise Trap("indirect call type mismatch")
            ftype = instance.module.types[type_idx]
            n = len(ftype.params)
            call_args = stack[len(stack) - n :] if n else []
            del stack[len(stack) - n :]
            results = instance.funcs[func_idx](call_args)
            if results:
                stack.extend(results)
            mem = instance.mem
        elif opcode == op.DROP:
            pop()
        elif opcode == op.SELECT:
            c = pop()
            b = pop()
            a = pop()
            push(a if c else b)
        elif opcode == op.GLOBAL_GET:
            push(instance.globals[arg])
        elif opcode == op.GLOBAL_SET:
            instance.globals[arg] = pop()
        elif opcode == op.MEMORY_SIZE:
            push(len(instance.mem) // 65536)
        elif opcode == op.MEMORY_GROW:
            push(instance.grow_memory(pop()) & M32)
            mem = instance.mem
        elif opcode == op.I64_CONST:
            push(arg & M64)
        elif opcode == op.F32_CONST or opcode == op.F64_CONST:
            push(arg)
        elif opcode == op.NOP:
            pass
        elif opcode == op.UNREACHABLE:
            raise Trap("unreachable executed")
        elif opcode == op.MEMORY_COPY:
            n = pop()
            src = pop()
            dst = pop()
            mem = instance.mem
            if src + n > len(mem) or dst + n > len(mem):
                raise Trap("out-of-bounds memory access")
            mem[dst : dst + n] = mem[src : src + n]
        elif opcode == op.MEMORY_FILL:
            n = pop()
            val = pop() & 0xFF
            dst = pop()
            mem = instance.mem
            if dst + n > len(mem):
                raise Trap("out-of-bounds memory access")
            mem[dst : dst + n] = bytes([val]) * n
        else:
            raise Trap(f"unsupported opcode 0x{opcode:02x}")
    return stack[len(stack) - n_results :] if n_results else []


def _numeric(opcode: int, stack: list, push, pop) -> None:
    # i32 compare/arith
    if opcode <= 0x4F:
        if opcode == 0x45:  # i32.eqz
            push(1 if pop() == 0 else 0)
            return
        b = pop()
        a = pop()
        if opcode == 0x46:
            push(1 if a == b else 0)
        elif opcode == 0x47:
            push(1 if a != b else 0)
        elif opcode == 0x48:
            push(1 if _s32(a) < _s32(b) else 0)
        elif opcode == 0x49:
            push(1 if a < b else 0)
        elif opcode == 0x4A:
            push(1 if _s32(a) > _s32(b) else 0)
        elif opcode == 0x4B:
            push(1 if a > b else 0)
        elif opcode == 0x4C:
            push(1 if _s32(a) <= _s32(b) else 0)
        elif opcode == 0x4D:
            push(1 if a <= b else 0)
        elif opcode == 0x4E:
            push(1 if _s32(a) >= _s32(b) else 0)
        else:
            push(1 if a >= b else 0)
    elif opcode <= 0x5A:  # i64 compare
        if opcode == 0x50:
            push(1 if pop() == 0 else 0)
            return
        b = pop()
        a = pop()
        if opcode == 0x51:
            push(1 if a == b else 0)
        elif opcode == 0x52:
            push(1 if a != b else 0)
        elif opcode == 0x53:
            push(1 if _s64(a) < _s64(b) else 0)
        elif opcode == 0x54:
            push(1 if a < b else 0)
        elif opcode == 0x55:
            push(1 if _s64(a) > _s64(b) else 0)
        elif opcode == 0x56:
            push(1 if a > b else 0)
        elif opcode == 0x57:
            push(1 if _s64(a) <= _s64(b) else 0)
        elif opcode == 0x58:
            push(1 if a <= b else 0)
        elif opcode == 0x59:
            push(1 if _s64(a) >= _s64(b) else 0)
        else:
            push(1 if a >= b else 0)
    elif opcode <= 0x66:  # float compare
        b = pop()
        a = pop()
        if opcode in (0x5B, 0x61):
            push(1 if a == b else 0)
        elif opcode in (0x5C, 0x62):
            push(1 if a != b else 0)
        elif opcode in (0x5D, 0x63):
            push(1 if a < b else 0)
        elif opcode in (0x5E, 0x64):
            push(1 if a > b else 0)
        elif opcode in (0x5F, 0x65):
            push(1 if a <= b else 0)
        else:
            push(1 if a >= b else 0)
    elif opcode <= 0x78:  # i32 arithmetic
        if opcode == 0x67:  # clz
            v = pop()
            push(32 - v.bit_length() if v else 32)
            return
        if opcode == 0x68:  # ctz
            v = pop()
            push((v & -v).bit_length() - 1 if v else 32)
            return
        if opcode == 0x69:  # popcnt
            push(bin(pop()).count("1"))
            return
        b = pop()
        a = pop()
        if opcode == 0x6A:
            push((a + b) & M32)
        elif opcode == 0x6B:
            push((a - b) & M32)
        elif opcode == 0x6C:
            push((a * b) & M32)
        elif opcode == 0x6D:
            if b == 0:
                raise Trap("integer divide by zero")
            q = _div_trunc(_s32(a), _s32(b))
            if q == 0x80000000:
                raise Trap("integer overflow")
            push(q & M32)
        elif opcode == 0x6E:
            if b == 0:
                raise Trap("integer divide by zero")
            push(a // b)
        elif opcode == 0x6F:
            if b == 0:
                raise Trap("integer divide by zero")
            push(_rem_trunc(_s32(a), _s32(b)) & M32)
        elif opcode == 0x70:
            if b == 0:
                raise Trap("integer divide by zero")
            push(a % b)
        elif opcode == 0x71:
            push(a & b)
        elif opcode == 0x72:
            push(a | b)
        elif opcode == 0x73:
            push(a ^ b)
        elif opcode == 0x74:
            push((a << (b % 32)) & M32)
        elif opcode == 0x75:
            push((_s32(a) >> (b % 32)) & M32)
        elif opcode == 0x76:
            push(a >> (b % 32))
        elif opcode == 0x77:
            n = b % 32
            push(((a << n) | (a >> (32 - n))) & M32 if n else a)
        else:  # rotr
            n = b % 32
            push(((a >> n) | (a << (32 - n))) & M32 if n else a)
    elif opcode <= 0x8A:  # i64 arithmetic
        if opcode == 0x79:
            v = pop()
            push(64 - v.bit_length() if v else 64)
            return
        if opcode == 0x7A:
            v = pop()
            push((v & -v).bit_length() - 1 if v else 64)
            return
        if opcode == 0x7B:
            push(bin(pop()).count("1"))
            return
        b = pop()
        a = pop()
        if opcode == 0x7C:
            push((a + b) & M64)
        elif opcode == 0x7D:
            push((a - b) & M64)
        elif opcode == 0x7E:
            push((a * b) & M64)
        elif opcode == 0x7F:
            if b == 0:
                raise Trap("integer divide by zero")
            q = _div_trunc(_s64(a), _s64(b))
            if q == SIGN64:
                raise Trap("integer overflow")
            push(q & M64)
        elif opcode == 0x80:
            if b == 0:
                raise Trap("integer divide by zero")
            push(a // b)
        elif opcode == 0x81:
            if b == 0:
                raise Trap("integer divide by zero")
            push(_rem_trunc(_s64(a), _s64(b)) & M64)
        elif opcode == 0x82:
            if b == 0:
                raise Trap("integer divide by zero")
            push(a % b)
        elif opcode == 0x83:
            push(a & b)
        elif opcode == 0x84:
            push(a | b)
        elif opcode == 0x85:
            push(a ^ b)
        elif opcode == 0x86:
            push((a << (b % 64)) & M64)
        elif opcode == 0x87:
            push((_s64(a) >> (b % 64)) & M64)
        elif opcode == 0x88:
            push(a >> (b % 64))
        elif opcode == 0x89:
            n = b % 64
            push(((a << n) | (a >> (64 - n))) & M64 if n else a)
        else:
            n = b % 64
            push(((a >> n) | (a << (64 - n))) & M64 if n else a)
    elif opcode <= 0xA6:  # float arithmetic
        f32 = opcode <= 0x98
        if opcode in (0x8B, 0x99):
            push(abs(pop()))
        elif opcode in (0x8C, 0x9A):
            v = pop()
            push(-v if v == v else math.nan)
        elif opcode in (0x8D, 0x9B):
            v = pop()
            push(float(math.ceil(v)) if math.isfinite(v) else v)
        elif opcode in (0x8E, 0x9C):
            v = pop()
            push(float(math.floor(v)) if math.isfinite(v) else v)
        elif opcode in (0x8F, 0x9D):
            v = pop()
            push(float(math.trunc(v)) if math.isfinite(v) else v)
        elif opcode in (0x90, 0x9E):
            push(_nearest(pop()))
        elif opcode in (0x91, 0x9F):
            v = pop()
            push(math.sqrt(v) if v >= 0 else math.nan)
        else:
            b = pop()
            a = pop()
            if opcode in (0x92, 0xA0):
                r = a + b
            elif opcode in (0x93, 0xA1):
                r = a - b
            elif opcode in (0x94, 0xA2):
                r = a * b
            elif opcode in (0x95, 0xA3):
                if b == 0:
                    r = math.nan if (a == 0 or math.isnan(a)) else math.copysign(math.inf, a) * math.copysign(1.0, b)
                else:
                    r = a / b
            elif opcode in (0x96, 0xA4):
                r = _fmin(a, b)
            elif opcode in (0x97, 0xA5):
                r = _fmax(a, b)
            else:
                r = math.copysign(a, b)
            push(_f32_round(r) if f32 else r)
            return
        if f32:
            stack[-1] = _f32_round(stack[-1])
    else:  # conversions 0xA7..0xC4
        if opcode == 0xA7:
            push(pop() & M32)
        elif opcode == 0xA8:
            push(_trunc_checked(pop(), -(1 << 31), (1 << 31) - 1, "i32.trunc_f32_s") & M32)
        elif opcode == 0xA9:
            push(_trunc_checked(pop(), 0, M32, "i32.trunc_f32_u"))
        elif opcode == 0xAA:
            push(_trunc_checked(pop(), -(1 << 31), (1 << 31) - 1, "i32.trunc_f64_s") & M32)
        elif opcode == 0xAB:
            push(_trunc_checked(pop(), 0, M32, "i32.trunc_f64_u"))
        elif opcode == 0xAC:
            push(_s32(pop()) & M64)
        elif opcode == 0xAD:
            push(pop() & M64)
        elif opcode == 0xAE:
            push(_trunc_checked(pop(), -(1 << 63), (1 << 63) - 1, "i64.trunc_f32_s") & M64)
        elif opcode == 0xAF:
            push(_trunc_checked(pop(), 0, M64, "i64.trunc_f32_u"))
        elif opcode == 0xB0:
            push(_trunc_checked(pop(), -(1 << 63), (1 << 63) - 1, "i64.trunc_f64_s") & M64)
        elif opcode == 0xB1:
            push(_trunc_checked(pop(), 0, M64, "i64.trunc_f64_u"))
        elif opcode == 0xB2:
            push(_f32_round(float(_s32(pop()))))
        elif opcode == 0xB3:
            push(_f32_round(float(pop())))
        elif opcode == 0xB4:
            push(_f32_round(float(_s64(pop()))))
        elif opcode == 0xB5:
            push(_f32_round(float(pop())))
        elif opcode == 0xB6:
            push(_f32_round(pop()))
        elif opcode == 0xB7:
            push(float(_s32(pop())))
        elif opcode == 0xB8:
            push(float(pop()))
        elif opcode == 0xB9:
            push(float(_s64(pop())))
        elif opcode == 0xBA:
            push(float(pop()))
        elif opcode == 0xBB:
            push(pop())
        elif opcode == 0xBC:
            push(int.from_bytes(_F32.pack(pop()), "little"))
        elif opcode == 0xBD:
            push(int.from_bytes(_F64.pack(pop()), "little"))
        elif opcode == 0xBE:
            push(_F32.unpack((pop() & M32).to_bytes(4, "little"))[0])
        elif opcode == 0xBF:
            push(_F64.unpack((pop() & M64).to_bytes(8, "little"))[0])
        elif opcode == 0xC0:
            v = pop() & 0xFF
            push((v - 0x100 if v & 0x80 else v) & M32)
        elif opcode == 0xC1:
            v = pop() & 0xFFFF
            push((v - 0x10000 if v & 0x8000 else v) & M32)
        elif opcode == 0xC2:
            v = pop() & 0xFF
            push((v - 0x100 if v & 0x80 else v) & M64)
        elif opcode == 0xC3:
            v = pop() & 0xFFFF
            push((v - 0x10000 if v & 0x8000 else v) & M64)
        elif opcode == 0xC4:
            v = pop() & M32
            push((v - 0x100000000 if v & SIGN32 else v) & M64)
        else:
            raise Trap(f"unsupported opcode 0x{opcode:02x}")
