"""Label-based lifting of programs so inserted bytes relocate jump targets.

A LiftedProgram replaces the conservative push-then-jump pattern with
symbolic label references; lowering re-lays-out the code, widening label
PUSHes as needed until offsets stabilize.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from ..evm.disasm import Instruction, Program, program_from_instructions
from ..evm.opcodes import opcode_named


class Unresolvable(Exception):
    """Label layout failed to reach a fixed point."""


class Unliftable(Exception):
    """The program jumps through computed targets; refusing to transform."""


@dataclass(frozen=True)
class LabelDef:
    label: int


@dataclass(frozen=True)
class LabelPush:
    label: int
    min_width: int = 1  # never narrower than the original PUSH


Item = Union[Instruction, LabelDef, LabelPush]


@dataclass(frozen=True)
class LiftedProgram:
    items: tuple[Item, ...]

    @property
    def push_refs(self) -> frozenset[int]:
        return frozenset(i for i, it in enumerate(self.items) if isinstance(it, LabelPush))


def check_liftable(program: Program) -> None:
    """Reject programs whose JUMP/JUMPI targets are not produced by an
    immediately preceding PUSH of a JUMPDEST offset."""
    jumpdests = {i.offset for i in program if i.opcode.mnemonic == "JUMPDEST"}
    prev = None
    for ins in program:
        if ins.opcode.mnemonic in ("JUMP", "JUMPI"):
            if prev is None or not prev.opcode.mnemonic.startswith("PUSH") or prev.opcode.mnemonic == "PUSH0":
                raise Unliftable(f"computed jump target at offset {ins.offset}")
            if prev.immediate_value not in jumpdests:
                raise Unliftable(f"jump at offset {ins.offset} targets no JUMPDEST")
        prev = ins
    return None


def lift(program: Program) -> LiftedProgram:
    """Insert a LabelDef before every JUMPDEST and symbolize each PUSH of a
    JUMPDEST offset that immediately precedes a JUMP/JUMPI."""
    jumpdest_label = {
        ins.offset: n
        for n, ins in enumerate(i for i in program if i.opcode.mnemonic == "JUMPDEST")
    }
    instructions = list(program)
    items: list[Item] = []
    for idx, ins in enumerate(instructions):
        if ins.opcode.mnemonic == "JUMPDEST":
            items.append(LabelDef(jumpdest_label[ins.offset]))
            items.append(ins)
            continue
        nxt = instructions[idx + 1] if idx + 1 < len(instructions) else None
        if (
            ins.opcode.mnemonic.startswith("PUSH")
            and ins.opcode.immediate_len > 0
            and nxt is not None
            and nxt.opcode.mnemonic in ("JUMP", "JUMPI")
            and ins.immediate_value in jumpdest_label
        ):
            items.append(LabelPush(jumpdest_label[ins.immediate_value], ins.opcode.immediate_len))
            continue
        items.append(ins)
    return LiftedProgram(tuple(items))


def _layout(items: tuple[Item, ...], widths: dict[int, int]) -> dict[int, int]:
    """Byte offset of every label under the given label-push widths."""
    offsets: dict[int, int] = {}
    pos = 0
    for idx, it in enumerate(items):
        if isinstance(it, LabelDef):
            if it.label in offsets:
                raise Unresolvable(f"label {it.label} defined twice")
            offsets[it.label] = pos
        elif isinstance(it, LabelPush):
            pos += 1 + widths[idx]
        else:
            pos += it.size
    return offsets


def lower(lifted: LiftedProgram, max_iterations: int = 16) -> Program:
    """Fix a layout, resolve labels, widen label PUSHes to fit, and iterate
    to a fixed point (widening can move later labels)."""
    items = lifted.items
    widths = {i: it.min_width for i, it in enumerate(items) if isinstance(it, LabelPush)}

    for _ in range(max_iterations):
        offsets = _layout(items, widths)
        changed = False
        for idx, it in enumerate(items):
            if not isinstance(it, LabelPush):
                continue
            if it.label not in offsets:
                raise Unresolvable(f"label {it.label} is never defined")
            need = max(1, (offsets[it.label].bit_length() + 7) // 8)
            if need > widths[idx]:
                widths[idx] = need
                changed = True
        if not changed:
            out = []
            for idx, it in enumerate(items):
                if isinstance(it, LabelDef):
                    continue
                if isinstance(it, LabelPush):
                    w = widths[idx]
                    out.append(
                        Instruction(0, opcode_named(f"PUSH{w}"), offsets[it.label].to_bytes(w, "big"))
                    )
                else:
                    out.append(it)
            return program_from_instructions(out)

    raise Unresolvable(f"layout did not stabilize within {max_iterations} iterations")
