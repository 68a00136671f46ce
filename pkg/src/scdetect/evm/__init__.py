from .opcodes import Opcode, OPCODES, opcode_for, opcode_named
from .disasm import (
    IllegalProgram,
    Instruction,
    Program,
    assemble,
    disassemble,
    format_listing,
    parse_hex,
    program_from_instructions,
    to_hex,
)
from .interp import ExecResult, Status, execute

__all__ = [
    "Opcode",
    "OPCODES",
    "opcode_for",
    "opcode_named",
    "IllegalProgram",
    "Instruction",
    "Program",
    "assemble",
    "disassemble",
    "format_listing",
    "parse_hex",
    "program_from_instructions",
    "to_hex",
    "ExecResult",
    "Status",
    "execute",
]
