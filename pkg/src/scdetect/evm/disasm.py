"""Linear-sweep disassembler and its inverse."""

from __future__ import annotations

from dataclasses import dataclass

from .opcodes import Opcode, opcode_for


class IllegalProgram(Exception):
    """A non-final instruction is marked truncated; cannot re-encode."""


@dataclass(frozen=True)
class Instruction:
    offset: int
    opcode: Opcode
    immediate: bytes = b""
    truncated: bool = False

    @property
    def size(self) -> int:
        return 1 + self.opcode.immediate_len

    @property
    def immediate_value(self) -> int:
        return int.from_bytes(self.immediate, "big") if self.immediate else 0

    def __str__(self) -> str:
        if self.immediate:
            return f"{self.opcode.mnemonic} 0x{self.immediate.hex()}"
        return self.opcode.mnemonic


@dataclass(frozen=True)
class Program:
    instructions: tuple[Instruction, ...] = ()
    byte_len: int = 0

    def __iter__(self):
        return iter(self.instructions)

    def __len__(self):
        return len(self.instructions)


def disassemble(bytecode: bytes) -> Program:
    """Decode any byte string; a PUSH running past the end is zero-padded
    and flagged truncated (the EVM reads past code end as zeros)."""
    instructions = []
    i = 0
    n = len(bytecode)
    while i < n:
        op = opcode_for(bytecode[i])
        imm = bytecode[i + 1 : i + 1 + op.immediate_len]
        truncated = len(imm) < op.immediate_len
        if truncated:
            imm = imm + b"\x00" * (op.immediate_len - len(imm))
        instructions.append(Instruction(i, op, bytes(imm), truncated))
        i += 1 + op.immediate_len
    return Program(tuple(instructions), n)


def assemble(program: Program) -> bytes:
    """Inverse of disassemble; trailing padding of a truncated final
    instruction is not emitted."""
    out = bytearray()
    last = len(program.instructions) - 1
    for k, ins in enumerate(program.instructions):
        if ins.truncated and k != last:
            raise IllegalProgram(f"non-final truncated instruction at offset {ins.offset}")
        out.append(ins.opcode.byte)
        out += ins.immediate
    if program.instructions and program.instructions[last].truncated:
        del out[program.byte_len :]
    return bytes(out)


def program_from_instructions(instructions: list[Instruction]) -> Program:
    """Rebuild a Program with consistent offsets from an instruction list.

    Truncated instructions are rejected: their real byte count is not
    recoverable from the padded immediate.  Rebuild those via disassemble.
    """
    fixed = []
    off = 0
    for ins in instructions:
        if ins.truncated:
            raise IllegalProgram("cannot rebuild a program from truncated instructions")
        fixed.append(Instruction(off, ins.opcode, ins.immediate, False))
        off += ins.size
    return Program(tuple(fixed), off)


def parse_hex(text: str) -> bytes:
    """Accept hex with or without 0x prefix, any case, ignoring whitespace."""
    cleaned = "".join(text.split())
    if cleaned.lower().startswith("0x"):
        cleaned = cleaned[2:]
    return bytes.fromhex(cleaned)


def to_hex(data: bytes) -> str:
    return data.hex()


def format_listing(program: Program) -> str:
    """One instruction per line: `<offset-hex>: <MNEMONIC> [<immediate-hex>]`."""
    lines = []
    for ins in program:
        if ins.immediate:
            lines.append(f"{ins.offset:04x}: {ins.opcode.mnemonic} 0x{ins.immediate.hex()}")
        else:
            lines.append(f"{ins.offset:04x}: {ins.opcode.mnemonic}")
    return "\n".join(lines)
