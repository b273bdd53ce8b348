"""Wasm MVP opcode tables (plus sign-extension and bulk-memory ops).

Opcodes are plain ints; 0xFC-prefixed instructions are folded into synthetic
codes 0xFC00 | subopcode so a decoded instruction is always (int, arg).
"""

# Control
UNREACHABLE = 0x00
NOP = 0x01
BLOCK = 0x02
LOOP = 0x03
IF = 0x04
ELSE = 0x05
END = 0x0B
BR = 0x0C
BR_IF = 0x0D
BR_TABLE = 0x0E
RETURN = 0x0F
CALL = 0x10
CALL_INDIRECT = 0x11

DROP = 0x1A
SELECT = 0x1B
SELECT_T = 0x1C

LOCAL_GET = 0x20
LOCAL_SET = 0x21
LOCAL_TEE = 0x22
GLOBAL_GET = 0x23
GLOBAL_SET = 0x24

I32_LOAD = 0x28
I64_LOAD = 0x29
F32_LOAD = 0x2A
F64_LOAD = 0x2B
I32_LOAD8_S = 0x2C
I32_LOAD8_U = 0x2D
I32_LOAD16_S = 0x2E
I32_LOAD16_U = 0x2F
I64_LOAD8_S = 0x30
I64_LOAD8_U = 0x31
I64_LOAD16_S = 0x32
I64_LOAD16_U = 0x33
I64_LOAD32_S = 0x34
I64_LOAD32_U = 0x35
I32_STORE = 0x36
I64_STORE = 0x37
F32_STORE = 0x38
F64_STORE = 0x39
I32_STORE8 = 0x3A
I32_STORE16 = 0x3B
I64_STORE8 = 0x3C
I64_STORE16 = 0x3D
I64_STORE32 = 0x3E
MEMORY_SIZE = 0x3F
MEMORY_GROW = 0x40

I32_CONST = 0x41
I64_CONST = 0x42
F32_CONST = 0x43
F64_CONST = 0x44

# Synthetic codes for the 0xFC prefix
MEMORY_INIT = 0xFC08
DATA_DROP = 0xFC09
MEMORY_COPY = 0xFC0A
MEMORY_FILL = 0xFC0B

VALTYPE_NAMES = {0x7F: "i32", 0x7E: "i64", 0x7D: "f32", 0x7C: "f64"}

# Immediate encoding per opcode; anything not listed takes no immediate.
IMM_BLOCKTYPE = "blocktype"
IMM_U32 = "u32"
IMM_MEMARG = "memarg"
IMM_I32 = "i32"
IMM_I64 = "i64"
IMM_F32 = "f32"
IMM_F64 = "f64"
IMM_BR_TABLE = "br_table"
IMM_CALL_INDIRECT = "call_indirect"
IMM_MEMORY = "memory"
IMM_SELECT_T = "select_t"

IMMEDIATES = {
    BLOCK: IMM_BLOCKTYPE,
    LOOP: IMM_BLOCKTYPE,
    IF: IMM_BLOCKTYPE,
    BR: IMM_U32,
    BR_IF: IMM_U32,
    BR_TABLE: IMM_BR_TABLE,
    CALL: IMM_U32,
    CALL_INDIRECT: IMM_CALL_INDIRECT,
    SELECT_T: IMM_SELECT_T,
    LOCAL_GET: IMM_U32,
    LOCAL_SET: IMM_U32,
    LOCAL_TEE: IMM_U32,
    GLOBAL_GET: IMM_U32,
    GLOBAL_SET: IMM_U32,
    MEMORY_SIZE: IMM_MEMORY,
    MEMORY_GROW: IMM_MEMORY,
    I32_CONST: IMM_I32,
    I64_CONST: IMM_I64,
    F32_CONST: IMM_F32,
    F64_CONST: IMM_F64,
}
for _op in range(I32_LOAD, I64_STORE32 + 1):
    IMMEDIATES[_op] = IMM_MEMARG

# name -> opcode, for the WAT assembler and diagnostics
NAMES = {
    "unreachable": UNREACHABLE,
    "nop": NOP,
    "block": BLOCK,
    "loop": LOOP,
    "if": IF,
    "else": ELSE,
    "end": END,
    "br": BR,
    "br_if": BR_IF,
    "br_table": BR_TABLE,
    "return": RETURN,
    "call": CALL,
    "call_indirect": CALL_INDIRECT,
    "drop": DROP,
    "select": SELECT,
    "local.get": LOCAL_GET,
    "local.set": LOCAL_SET,
    "local.tee": LOCAL_TEE,
    "global.get": GLOBAL_GET,
    "global.set": GLOBAL_SET,
    "i32.load": I32_LOAD,
    "i64.load": I64_LOAD,
    "f32.load": F32_LOAD,
    "f64.load": F64_LOAD,
    "i32.load8_s": I32_LOAD8_S,
    "i32.load8_u": I32_LOAD8_U,
    "i32.load16_s": I32_LOAD16_S,
    "i32.load16_u": I32_LOAD16_U,
    "i64.load8_s": I64_LOAD8_S,
    "i64.load8_u": I64_LOAD8_U,
    "i64.load16_s": I64_LOAD16_S,
    "i64.load16_u": I64_LOAD16_U,
    "i64.load32_s": I64_LOAD32_S,
    "i64.load32_u": I64_LOAD32_U,
    "i32.store": I32_STORE,
    "i64.store": I64_STORE,
    "f32.store": F32_STORE,
    "f64.store": F64_STORE,
    "i32.store8": I32_STORE8,
    "i32.store16": I32_STORE16,
    "i64.store8": I64_STORE8,
    "i64.store16": I64_STORE16,
    "i64.store32": I64_STORE32,
    "memory.size": MEMORY_SIZE,
    "memory.grow": MEMORY_GROW,
    "memory.copy": MEMORY_COPY,
    "memory.fill": MEMORY_FILL,
    "i32.const": I32_CONST,
    "i64.const": I64_CONST,
    "f32.const": F32_CONST,
    "f64.const": F64_CONST,
    "i32.eqz": 0x45,
    "i32.eq": 0x46,
    "i32.ne": 0x47,
    "i32.lt_s": 0x48,
    "i32.lt_u": 0x49,
    "i32.gt_s": 0x4A,
    "i32.gt_u": 0x4B,
    "i32.le_s": 0x4C,
    "i32.le_u": 0x4D,
    "i32.ge_s": 0x4E,
    "i32.ge_u": 0x4F,
    "i64.eqz": 0x50,
    "i64.eq": 0x51,
    "i64.ne": 0x52,
    "i64.lt_s": 0x53,
    "i64.lt_u": 0x54,
    "i64.gt_s": 0x55,
    "i64.gt_u": 0x56,
    "i64.le_s": 0x57,
    "i64.le_u": 0x58,
    "i64.ge_s": 0x59,
    "i64.ge_u": 0x5A,
    "f32.eq": 0x5B,
    "f32.ne": 0x5C,
    "f32.lt": 0x5D,
    "f32.gt": 0x5E,
    "f32.le": 0x5F,
    "f32.ge": 0x60,
    "f64.eq": 0x61,
    "f64.ne": 0x62,
    "f64.lt": 0x63,
    "f64.gt": 0x64,
    "f64.le": 0x65,
    "f64.ge": 0x66,
    "i32.clz": 0x67,
    "i32.ctz": 0x68,
    "i32.popcnt": 0x69,
    "i32.add": 0x6A,
    "i32.sub": 0x6B,
    "i32.mul": 0x6C,
    "i32.div_s": 0x6D,
    "i32.div_u": 0x6E,
    "i32.rem_s": 0x6F,
    "i32.rem_u": 0x70,
    "i32.and": 0x71,
    "i32.or": 0x72,
    "i32.xor": 0x73,
    "i32.shl": 0x74,
    "i32.shr_s": 0x75,
    "i32.shr_u": 0x76,
    "i32.rotl": 0x77,
    "i32.rotr": 0x78,
    "i64.clz": 0x79,
    "i64.ctz": 0x7A,
    "i64.popcnt": 0x7B,
    "i64.add": 0x7C,
    "i64.sub": 0x7D,
    "i64.mul": 0x7E,
    "i64.div_s": 0x7F,
    "i64.div_u": 0x80,
    "i64.rem_s": 0x81,
    "i64.rem_u": 0x82,
    "i64.and": 0x83,
    "i64.or": 0x84,
    "i64.xor": 0x85,
    "i64.shl": 0x86,
    "i64.shr_s": 0x87,
    "i64.shr_u": 0x88,
    "i64.rotl": 0x89,
    "i64.rotr": 0x8A,
    "f32.abs": 0x8B,
    "f32.neg": 0x8C,
    "f32.ceil": 0x8D,
    "f32.floor": 0x8E,
    "f32.trunc": 0x8F,
    "f32.nearest": 0x90,
    "f32.sqrt": 0x91,
    "f32.add": 0x92,
    "f32.sub": 0x93,
    "f32.mul": 0x94,
    "f32.div": 0x95,
    "f32.min": 0x96,
    "f32.max": 0x97,
    "f32.copysign": 0x98,
    "f64.abs": 0x99,
    "f64.neg": 0x9A,
    "f64.ceil": 0x9B,
    "f64.floor": 0x9C,
    "f64.trunc": 0x9D,
    "f64.nearest": 0x9E,
    "f64.sqrt": 0x9F,
    "f64.add": 0xA0,
    "f64.sub": 0xA1,
    "f64.mul": 0xA2,
    "f64.div": 0xA3,
    "f64.min": 0xA4,
    "f64.max": 0xA5,
    "f64.copysign": 0xA6,
    "i32.wrap_i64": 0xA7,
    "i32.trunc_f32_s": 0xA8,
    "i32.trunc_f32_u": 0xA9,
    "i32.trunc_f64_s": 0xAA,
    "i32.trunc_f64_u": 0xAB,
    "i64.extend_i32_s": 0xAC,
    "i64.extend_i32_u": 0xAD,
    "i64.trunc_f32_s": 0xAE,
    "i64.trunc_f32_u": 0xAF,
    "i64.trunc_f64_s": 0xB0,
    "i64.trunc_f64_u": 0xB1,
    "f32.convert_i32_s": 0xB2,
    "f32.convert_i32_u": 0xB3,
    "f32.convert_i64_s": 0xB4,
    "f32.convert_i64_u": 0xB5,
    "f32.demote_f64": 0xB6,
    "f64.convert_i32_s": 0xB7,
    "f64.convert_i32_u": 0xB8,
    "f64.convert_i64_s": 0xB9,
    "f64.convert_i64_u": 0xBA,
    "f64.promote_f32": 0xBB,
    "i32.reinterpret_f32": 0xBC,
    "i64.reinterpret_f64": 0xBD,
    "f32.reinterpret_i32": 0xBE,
    "f64.reinterpret_i64": 0xBF,
    "i32.extend8_s": 0xC0,
    "i32.extend16_s": 0xC1,
    "i64.extend8_s": 0xC2,
    "i64.extend16_s": 0xC3,
    "i64.extend32_s": 0xC4,
}

OPCODE_NAMES = {v: k for k, v in NAMES.items()}
OPCODE_NAMES[ELSE] = "else"
OPCODE_NAMES[END] = "end"
