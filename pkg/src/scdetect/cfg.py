"""Basic-block CFG recovery from runtime bytecode, with DOT and COO export.

Node ids are byte offsets of block starts; the synthetic exit block gets
the id one past the last code byte.  Jump targets are resolved only for
the push-then-jump pattern; unresolved jumps edge to the exit block.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .evm.disasm import Instruction, Program
from .preprocess import normalize_mnemonic

TERMINATORS = {"STOP", "RETURN", "REVERT", "INVALID"}
BRANCHES = {"JUMP", "JUMPI"}

EXIT_LABEL = "EXIT_BLOCK"


class BlockKind(Enum):
    Normal = "normal"
    Exit = "exit"


@dataclass(frozen=True)
class BasicBlock:
    id: int
    start_offset: int
    end_offset: int
    opcode_text: str
    kind: BlockKind = BlockKind.Normal


@dataclass(frozen=True)
class Cfg:
    blocks: tuple[BasicBlock, ...]
    edges: tuple[tuple[int, int], ...]

    @property
    def exit_block(self) -> BasicBlock:
        return next(b for b in self.blocks if b.kind is BlockKind.Exit)

    def block(self, block_id: int) -> BasicBlock:
        return next(b for b in self.blocks if b.id == block_id)

    def successors(self, block_id: int) -> list[int]:
        return [d for s, d in self.edges if s == block_id]


def _split_blocks(program: Program) -> list[list[Instruction]]:
    blocks: list[list[Instruction]] = []
    current: list[Instruction] = []
    for ins in program:
        if ins.opcode.mnemonic == "JUMPDEST" and current:
            blocks.append(current)
            current = []
        current.append(ins)
        if ins.opcode.mnemonic in TERMINATORS | BRANCHES:
            blocks.append(current)
            current = []
    if current:
        blocks.append(current)
    return blocks


def build_cfg(program: Program) -> Cfg:
    exit_id = program.byte_len
    exit_block = BasicBlock(exit_id, exit_id, exit_id, EXIT_LABEL, BlockKind.Exit)

    groups = _split_blocks(program)
    if not groups:
        return Cfg((exit_block,), ())

    blocks = []
    for group in groups:
        start = group[0].offset
        end = group[-1].offset
        text = " ".join(normalize_mnemonic(i.opcode.mnemonic) for i in group)
        blocks.append(BasicBlock(start, start, end, text))

    block_starts = {b.start_offset for b in blocks}
    jumpdests = {i.offset for i in program if i.opcode.mnemonic == "JUMPDEST"}

    edges: set[tuple[int, int]] = set()
    for idx, group in enumerate(groups):
        src = group[0].offset
        last = group[-1]
        name = last.opcode.mnemonic
        next_block = groups[idx + 1][0].offset if idx + 1 < len(groups) else exit_id

        if name in TERMINATORS:
            edges.add((src, exit_id))
            continue

        if name in BRANCHES:
            target = None
            if len(group) >= 2 and group[-2].opcode.mnemonic.startswith("PUSH"):
                cand = group[-2].immediate_value
                if cand in jumpdests and cand in block_starts:
                    target = cand
            edges.add((src, target if target is not None else exit_id))
            if name == "JUMPI":
                edges.add((src, next_block))
            continue

        # plain fall-through; running past the end of code behaves as STOP
        edges.add((src, next_block))

    return Cfg(tuple(blocks) + (exit_block,), tuple(sorted(edges)))


# --- exports --------------------------------------------------------------

def export_coo(cfg: Cfg) -> np.ndarray:
    """Edges as a (2, E) integer matrix: row 0 sources, row 1 targets."""
    edges = sorted(cfg.edges)
    if not edges:
        return np.zeros((2, 0), dtype=np.int64)
    return np.array(edges, dtype=np.int64).T


def export_dot(cfg: Cfg) -> str:
    lines = ["digraph G {"]
    for b in sorted(cfg.blocks, key=lambda b: b.id):
        label = b.opcode_text if b.kind is BlockKind.Normal else EXIT_LABEL
        lines.append(f'  {b.id} [label="{label}"];')
    for s, d in sorted(cfg.edges):
        lines.append(f"  {s} -> {d};")
    lines.append("}")
    return "\n".join(lines)


_DOT_NODE = re.compile(r'^\s*(\d+)\s*\[label="([^"]*)"\]\s*;?\s*$')
_DOT_EDGE = re.compile(r"^\s*(\d+)\s*->\s*(\d+)\s*;?\s*$")


class DotParseError(Exception):
    pass


def parse_dot(text: str) -> Cfg:
    """Parse the DOT subset emitted by export_dot."""
    blocks = []
    edges = []
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped or stripped.startswith("digraph") or stripped == "}":
            continue
        node = _DOT_NODE.match(line)
        if node:
            bid, label = int(node.group(1)), node.group(2)
            kind = BlockKind.Exit if label == EXIT_LABEL else BlockKind.Normal
            blocks.append(BasicBlock(bid, bid, bid, label, kind))
            continue
        edge = _DOT_EDGE.match(line)
        if edge:
            edges.append((int(edge.group(1)), int(edge.group(2))))
            continue
        raise DotParseError(f"unparseable line: {line!r}")
    return Cfg(tuple(blocks), tuple(sorted(edges)))
