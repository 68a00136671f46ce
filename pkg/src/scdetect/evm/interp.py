"""Mini EVM interpreter.

Supports the stack / arithmetic / control / memory subset plus zero-valued
environment stubs.  No storage, no real calls, no gas: a step limit bounds
execution instead.  Used as the I/O-equivalence oracle for the bytecode
obfuscator.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .disasm import Program

WORD = 1 << 256
MASK = WORD - 1
STACK_LIMIT = 1024


class Status(enum.Enum):
    Stopped = "stopped"
    Returned = "returned"
    Reverted = "reverted"
    InvalidJump = "invalid_jump"
    StackError = "stack_error"
    StepLimit = "step_limit"


@dataclass(frozen=True)
class ExecResult:
    status: Status
    return_data: bytes = b""
    steps: int = 0


def _to_signed(x: int) -> int:
    return x - WORD if x >= WORD >> 1 else x


def execute(program: Program, calldata: bytes = b"", step_limit: int = 100_000) -> ExecResult:
    """Run a program to completion or failure; never raises on bad code.

    Execution past the end of the code behaves as STOP.  JUMP/JUMPI must
    land on a JUMPDEST.  Unknown or unsupported opcodes halt with a
    Reverted-like failure.
    """
    if step_limit < 1:
        raise ValueError("step_limit must be >= 1")

    by_offset = {ins.offset: ins for ins in program}
    jumpdests = {ins.offset for ins in program if ins.opcode.mnemonic == "JUMPDEST"}

    stack: list[int] = []
    memory = bytearray()
    pc = 0
    steps = 0

    def mem_grow(end: int):
        if end > len(memory):
            memory.extend(b"\x00" * (end - len(memory)))

    def push(v: int) -> bool:
        if len(stack) >= STACK_LIMIT:
            return False
        stack.append(v & MASK)
        return True

    while True:
        if pc >= program.byte_len or pc not in by_offset:
            # falling off the end (or into immediate bytes via a verified
            # JUMPDEST can't happen) stops cleanly
            return ExecResult(Status.Stopped, b"", steps)
        if steps >= step_limit:
            return ExecResult(Status.StepLimit, b"", steps)
        steps += 1

        ins = by_offset[pc]
        name = ins.opcode.mnemonic
        next_pc = pc + ins.size

        if name == "STOP":
            return ExecResult(Status.Stopped, b"", steps)
        if name == "JUMPDEST":
            pc = next_pc
            continue
        if name.startswith("PUSH"):
            if not push(ins.immediate_value):
                return ExecResult(Status.StackError, b"", steps)
            pc = next_pc
            continue

        if name.startswith("DUP"):
            k = int(name[3:])
            if len(stack) < k:
                return ExecResult(Status.StackError, b"", steps)
            if not push(stack[-k]):
                return ExecResult(Status.StackError, b"", steps)
            pc = next_pc
            continue
        if name.startswith("SWAP"):
            k = int(name[4:])
            if len(stack) < k + 1:
                return ExecResult(Status.StackError, b"", steps)
            stack[-1], stack[-k - 1] = stack[-k - 1], stack[-1]
            pc = next_pc
            continue

        binary = {
            "ADD": lambda a, b: a + b,
            "SUB": lambda a, b: a - b,
            "MUL": lambda a, b: a * b,
            "DIV": lambda a, b: a // b if b else 0,
            "MOD": lambda a, b: a % b if b else 0,
            "LT": lambda a, b: int(a < b),
            "GT": lambda a, b: int(a > b),
            "SLT": lambda a, b: int(_to_signed(a) < _to_signed(b)),
            "SGT": lambda a, b: int(_to_signed(a) > _to_signed(b)),
            "EQ": lambda a, b: int(a == b),
            "AND": lambda a, b: a & b,
            "OR": lambda a, b: a | b,
            "XOR": lambda a, b: a ^ b,
            "SHL": lambda a, b: b << a if a < 256 else 0,
            "SHR": lambda a, b: b >> a if a < 256 else 0,
        }
        if name in binary:
            if len(stack) < 2:
                return ExecResult(Status.StackError, b"", steps)
            a, b = stack.pop(), stack.pop()
            stack.append(binary[name](a, b) & MASK)
            pc = next_pc
            continue

        if name == "ISZERO":
            if not stack:
                return ExecResult(Status.StackError, b"", steps)
            stack.append(int(stack.pop() == 0))
            pc = next_pc
            continue
        if name == "NOT":
            if not stack:
                return ExecResult(Status.StackError, b"", steps)
            stack.append(stack.pop() ^ MASK)
            pc = next_pc
            continue
        if name == "POP":
            if not stack:
                return ExecResult(Status.StackError, b"", steps)
            stack.pop()
            pc = next_pc
            continue

        if name == "JUMP":
            if not stack:
                return ExecResult(Status.StackError, b"", steps)
            dest = stack.pop()
            if dest not in jumpdests:
                return ExecResult(Status.InvalidJump, b"", steps)
            pc = dest
            continue
        if name == "JUMPI":
            if len(stack) < 2:
                return ExecResult(Status.StackError, b"", steps)
            dest, cond = stack.pop(), stack.pop()
            if cond:
                if dest not in jumpdests:
                    return ExecResult(Status.InvalidJump, b"", steps)
                pc = dest
            else:
                pc = next_pc
            continue
        if name == "PC":
            if not push(pc):
                return ExecResult(Status.StackError, b"", steps)
            pc = next_pc
            continue

        if name == "MSTORE" or name == "MSTORE8":
            if len(stack) < 2:
                return ExecResult(Status.StackError, b"", steps)
            off, val = stack.pop(), stack.pop()
            if off > 1 << 24:  # unrealistic offsets would exhaust memory
                return ExecResult(Status.Reverted, b"", steps)
            if name == "MSTORE":
                mem_grow(off + 32)
                memory[off : off + 32] = val.to_bytes(32, "big")
            else:
                mem_grow(off + 1)
                memory[off] = val & 0xFF
            pc = next_pc
            continue
        if name == "MLOAD":
            if not stack:
                return ExecResult(Status.StackError, b"", steps)
            off = stack.pop()
            if off > 1 << 24:
                return ExecResult(Status.Reverted, b"", steps)
            mem_grow(off + 32)
            stack.append(int.from_bytes(memory[off : off + 32], "big"))
            pc = next_pc
            continue

        if name == "CALLDATALOAD":
            if not stack:
                return ExecResult(Status.StackError, b"", steps)
            off = stack.pop()
            if off > 1 << 24:
                stack.append(0)
            else:
                chunk = bytes(calldata[off : off + 32])
                stack.append(int.from_bytes(chunk + b"\x00" * (32 - len(chunk)), "big"))
            pc = next_pc
            continue
        if name == "CALLDATASIZE":
            if not push(len(calldata)):
                return ExecResult(Status.StackError, b"", steps)
            pc = next_pc
            continue

        # zero-valued environment stubs, so corpus programs that probe the
        # environment still run deterministically
        if name in ("CALLVALUE", "TIMESTAMP", "NUMBER", "CALLER", "ADDRESS",
                    "ORIGIN", "GASPRICE", "GAS", "COINBASE", "CHAINID", "MSIZE"):
            if not push(len(memory) if name == "MSIZE" else 0):
                return ExecResult(Status.StackError, b"", steps)
            pc = next_pc
            continue
        # call-shaped stub: consume the 7 arguments, report success
        if name == "CALL":
            if len(stack) < 7:
                return ExecResult(Status.StackError, b"", steps)
            del stack[-7:]
            stack.append(1)
            pc = next_pc
            continue

        if name == "RETURN" or name == "REVERT":
            if len(stack) < 2:
                return ExecResult(Status.StackError, b"", steps)
            off, length = stack.pop(), stack.pop()
            if off > 1 << 24 or length > 1 << 24:
                return ExecResult(Status.Reverted, b"", steps)
            mem_grow(off + length)
            data = bytes(memory[off : off + length])
            status = Status.Returned if name == "RETURN" else Status.Reverted
            return ExecResult(status, data, steps)

        # INVALID and every unsupported opcode halt with failure
        return ExecResult(Status.Reverted, b"", steps)
