"""EVM opcode table: byte <-> (mnemonic, immediate length)."""

from __future__ import annotations

from dataclasses import dataclass

# Canonical instruction listing.  PUSH1..PUSH32 carry 1..32 immediate
# bytes; everything else has none.  Bytes not listed here decode to
# INVALID (matching the EVM's treatment of undefined instructions).
_TABLE: dict[int, tuple[str, int]] = {
    0x00: ("STOP", 0),
    0x01: ("ADD", 0),
    0x02: ("MUL", 0),
    0x03: ("SUB", 0),
    0x04: ("DIV", 0),
    0x05: ("SDIV", 0),
    0x06: ("MOD", 0),
    0x07: ("SMOD", 0),
    0x08: ("ADDMOD", 0),
    0x09: ("MULMOD", 0),
    0x0A: ("EXP", 0),
    0x0B: ("SIGNEXTEND", 0),
    0x10: ("LT", 0),
    0x11: ("GT", 0),
    0x12: ("SLT", 0),
    0x13: ("SGT", 0),
    0x14: ("EQ", 0),
    0x15: ("ISZERO", 0),
    0x16: ("AND", 0),
    0x17: ("OR", 0),
    0x18: ("XOR", 0),
    0x19: ("NOT", 0),
    0x1A: ("BYTE", 0),
    0x1B: ("SHL", 0),
    0x1C: ("SHR", 0),
    0x1D: ("SAR", 0),
    0x20: ("SHA3", 0),
    0x30: ("ADDRESS", 0),
    0x31: ("BALANCE", 0),
    0x32: ("ORIGIN", 0),
    0x33: ("CALLER", 0),
    0x34: ("CALLVALUE", 0),
    0x35: ("CALLDATALOAD", 0),
    0x36: ("CALLDATASIZE", 0),
    0x37: ("CALLDATACOPY", 0),
    0x38: ("CODESIZE", 0),
    0x39: ("CODECOPY", 0),
    0x3A: ("GASPRICE", 0),
    0x3B: ("EXTCODESIZE", 0),
    0x3C: ("EXTCODECOPY", 0),
    0x3D: ("RETURNDATASIZE", 0),
    0x3E: ("RETURNDATACOPY", 0),
    0x3F: ("EXTCODEHASH", 0),
    0x40: ("BLOCKHASH", 0),
    0x41: ("COINBASE", 0),
    0x42: ("TIMESTAMP", 0),
    0x43: ("NUMBER", 0),
    0x44: ("DIFFICULTY", 0),
    0x45: ("GASLIMIT", 0),
    0x46: ("CHAINID", 0),
    0x47: ("SELFBALANCE", 0),
    0x48: ("BASEFEE", 0),
    0x50: ("POP", 0),
    0x51: ("MLOAD", 0),
    0x52: ("MSTORE", 0),
    0x53: ("MSTORE8", 0),
    0x54: ("SLOAD", 0),
    0x55: ("SSTORE", 0),
    0x56: ("JUMP", 0),
    0x57: ("JUMPI", 0),
    0x58: ("PC", 0),
    0x59: ("MSIZE", 0),
    0x5A: ("GAS", 0),
    0x5B: ("JUMPDEST", 0),
    0x5F: ("PUSH0", 0),
    0xF0: ("CREATE", 0),
    0xF1: ("CALL", 0),
    0xF2: ("CALLCODE", 0),
    0xF3: ("RETURN", 0),
    0xF4: ("DELEGATECALL", 0),
    0xF5: ("CREATE2", 0),
    0xFA: ("STATICCALL", 0),
    0xFD: ("REVERT", 0),
    0xFE: ("INVALID", 0),
    0xFF: ("SELFDESTRUCT", 0),
}
for _k in range(1, 33):
    _TABLE[0x5F + _k] = (f"PUSH{_k}", _k)
for _k in range(1, 17):
    _TABLE[0x7F + _k] = (f"DUP{_k}", 0)
    _TABLE[0x8F + _k] = (f"SWAP{_k}", 0)
for _k in range(0, 5):
    _TABLE[0xA0 + _k] = (f"LOG{_k}", 0)


@dataclass(frozen=True)
class Opcode:
    mnemonic: str
    byte: int
    immediate_len: int

    def __post_init__(self):
        if not 0 <= self.byte <= 0xFF:
            raise ValueError(f"opcode byte out of range: {self.byte}")
        if not 0 <= self.immediate_len <= 32:
            raise ValueError(f"immediate length out of range: {self.immediate_len}")


# Total decoding function over 0x00-0xFF; unknown bytes keep their raw
# byte value so re-encoding is lossless even for undefined instructions.
OPCODES: dict[int, Opcode] = {
    b: Opcode(_TABLE.get(b, ("INVALID", 0))[0], b, _TABLE.get(b, ("INVALID", 0))[1])
    for b in range(256)
}

BY_MNEMONIC: dict[str, Opcode] = {}
for _op in OPCODES.values():
    BY_MNEMONIC.setdefault(_op.mnemonic, _op)


def opcode_for(byte: int) -> Opcode:
    return OPCODES[byte]


def opcode_named(mnemonic: str) -> Opcode:
    try:
        return BY_MNEMONIC[mnemonic]
    except KeyError:
        raise KeyError(f"unknown mnemonic {mnemonic!r}") from None
