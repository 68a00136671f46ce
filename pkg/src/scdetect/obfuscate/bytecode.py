"""Semantics-preserving bytecode transforms with interpreter verification.

Four transforms: junk insertion, false branches on unconditional jumps,
commutative operand reordering, and a trailing incomplete instruction.
Each is verified by running original and transformed programs on random
calldata and comparing (status, return_data).
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from ..evm.disasm import Instruction, Program, assemble, disassemble
from ..evm.interp import execute
from ..evm.opcodes import opcode_named
from .lift import Item, LabelDef, LabelPush, LiftedProgram, check_liftable, lift, lower

COMMUTATIVE = {"ADD", "MUL", "AND", "OR", "XOR", "EQ"}

BYTECODE_PASSES = ("junk", "false_branch", "reorder", "incomplete")


def _ins(name: str, value: int | None = None) -> Instruction:
    op = opcode_named(name)
    imm = value.to_bytes(op.immediate_len, "big") if op.immediate_len else b""
    return Instruction(0, op, imm)


def _junk_sequences(rng: random.Random) -> list[Instruction]:
    """Stack-neutral from an empty stack; safe at any block boundary."""
    choice = rng.randrange(4)
    if choice == 0:
        return [_ins("PUSH1", 0), _ins("POP")]
    if choice == 1:
        return [_ins("PUSH1", rng.randrange(256)), _ins("POP")]
    if choice == 2:
        return [_ins("PUSH1", rng.randrange(256)), _ins("PUSH1", rng.randrange(256)),
                _ins("ADD"), _ins("POP")]
    return [_ins("PUSH1", 1), _ins("ISZERO"), _ins("POP")]


def _boundary_sites(items: tuple[Item, ...]) -> list[int]:
    """Indices where a junk insertion starts a fresh block: program start,
    right after a JUMPDEST, and right after a JUMP/terminator."""
    sites = [0]
    for i, it in enumerate(items):
        if isinstance(it, Instruction) and it.opcode.mnemonic in (
            "JUMPDEST", "JUMP", "STOP", "RETURN", "REVERT", "INVALID",
        ):
            sites.append(i + 1)
    return sites


def obf_junk(lifted: LiftedProgram, seed: int, density: float = 0.5) -> LiftedProgram:
    """Insert stack-neutral junk at block boundaries, deterministically per
    seed; density is the fraction of candidate sites used."""
    if not 0 < density <= 1:
        raise ValueError("density must be in (0, 1]")
    rng = random.Random(seed)
    sites = _boundary_sites(lifted.items)
    chosen = {s for s in sites if rng.random() < density}
    out: list[Item] = []
    for i, it in enumerate(lifted.items):
        if i in chosen:
            out.extend(_junk_sequences(rng))
        out.append(it)
    if len(lifted.items) in chosen:
        out.extend(_junk_sequences(rng))
    return LiftedProgram(tuple(out))


def obf_false_branch(lifted: LiftedProgram, seed: int) -> LiftedProgram:
    """Turn each label-targeted JUMP into a constant-true JUMPI plus an
    unreachable self-loop decoy block."""
    rng = random.Random(seed)
    del rng  # selection is currently unconditional; seed kept for interface parity
    used = [it.label for it in lifted.items if isinstance(it, (LabelDef, LabelPush))]
    next_label = max(used, default=-1) + 1

    out: list[Item] = []
    i = 0
    items = lifted.items
    while i < len(items):
        it = items[i]
        nxt = items[i + 1] if i + 1 < len(items) else None
        if (
            isinstance(it, LabelPush)
            and isinstance(nxt, Instruction)
            and nxt.opcode.mnemonic == "JUMP"
        ):
            decoy = next_label
            next_label += 1
            out.append(it)
            out.append(_ins("PUSH1", 1))
            out.append(_ins("SWAP1"))
            out.append(_ins("JUMPI"))
            out.append(LabelDef(decoy))
            out.append(_ins("JUMPDEST"))
            out.append(LabelPush(decoy))
            out.append(_ins("JUMP"))
            i += 2
            continue
        out.append(it)
        i += 1
    return LiftedProgram(tuple(out))


def obf_reorder(lifted: LiftedProgram, seed: int) -> LiftedProgram:
    """Swap the two constant-PUSH operands of commutative binary ops."""
    rng = random.Random(seed)
    del rng  # the rewrite set is fully determined by the pattern
    items = list(lifted.items)
    i = 0
    while i + 2 < len(items):
        a, b, op = items[i], items[i + 1], items[i + 2]
        if (
            isinstance(a, Instruction) and a.opcode.mnemonic.startswith("PUSH")
            and a.opcode.immediate_len > 0
            and isinstance(b, Instruction) and b.opcode.mnemonic.startswith("PUSH")
            and b.opcode.immediate_len > 0
            and isinstance(op, Instruction) and op.opcode.mnemonic in COMMUTATIVE
        ):
            items[i], items[i + 1] = b, a
            i += 3
            continue
        i += 1
    return LiftedProgram(tuple(items))


def obf_incomplete(program: Program, seed: int) -> Program:
    """Append a PUSHk opcode with fewer than k immediate bytes after the
    final instruction; the tail is unreachable but derails naive sweeps."""
    rng = random.Random(seed)
    k = rng.randint(2, 32)
    n_bytes = rng.randint(1, k - 1)
    tail = bytes([opcode_named(f"PUSH{k}").byte]) + bytes(rng.randrange(256) for _ in range(n_bytes))
    return disassemble(assemble(program) + tail)


@dataclass(frozen=True)
class ObfuscationReport:
    transform: str
    size_before: int
    size_after: int
    verified: bool
    trials: int


def random_calldata(rng: random.Random, max_len: int = 64) -> bytes:
    return bytes(rng.randrange(256) for _ in range(rng.randrange(max_len + 1)))


def verify_equivalence(
    original: Program,
    transformed: Program,
    seed: int,
    trials: int = 10,
    step_limit: int = 100_000,
) -> bool:
    """True iff (status, return_data) match on every trial calldata."""
    rng = random.Random(seed ^ 0x5EED)
    for _ in range(trials):
        calldata = random_calldata(rng)
        a = execute(original, calldata, step_limit)
        b = execute(transformed, calldata, step_limit)
        if (a.status, a.return_data) != (b.status, b.return_data):
            return False
    return True


def apply_bytecode_passes(
    program: Program,
    passes: tuple[str, ...],
    seed: int,
    junk_density: float = 0.5,
) -> Program:
    """Compose the requested transforms; raises Unliftable when the program
    uses computed jump targets."""
    unknown = set(passes) - set(BYTECODE_PASSES)
    if unknown:
        raise ValueError(f"unknown bytecode passes: {sorted(unknown)}")
    check_liftable(program)
    lifted = lift(program)
    if "reorder" in passes:
        lifted = obf_reorder(lifted, seed)
    if "false_branch" in passes:
        lifted = obf_false_branch(lifted, seed)
    if "junk" in passes:
        lifted = obf_junk(lifted, seed, junk_density)
    out = lower(lifted)
    if "incomplete" in passes:
        out = obf_incomplete(out, seed)
    return out


def obfuscate_bytecode(
    program: Program,
    passes: tuple[str, ...],
    seed: int,
    trials: int = 10,
    junk_density: float = 0.5,
    step_limit: int = 100_000,
) -> tuple[Program, ObfuscationReport]:
    transformed = apply_bytecode_passes(program, passes, seed, junk_density)
    ok = verify_equivalence(program, transformed, seed, trials, step_limit)
    report = ObfuscationReport(
        transform="+".join(passes),
        size_before=program.byte_len,
        size_after=transformed.byte_len,
        verified=ok,
        trials=trials,
    )
    return transformed, report
