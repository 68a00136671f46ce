"""Dataset records, line-delimited persistence, and the synthetic corpus
generator with planted per-label signals."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass

import numpy as np

from .evm.disasm import Program, disassemble, parse_hex, to_hex
from .evm.interp import Status, execute
from .evm.opcodes import opcode_named


class ParseError(Exception):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class BadLabelLength(Exception):
    def __init__(self, line: int, got: int, expected: int):
        super().__init__(f"line {line}: got {got} labels, expected {expected}")
        self.line = line


@dataclass(frozen=True)
class ContractSample:
    id: str
    bytecode_hex: str
    labels: tuple[int, ...]
    source: str | None = None

    @property
    def program(self) -> Program:
        return disassemble(parse_hex(self.bytecode_hex))


def save_dataset(path: str, samples: list[ContractSample]) -> None:
    with open(path, "w") as f:
        for s in samples:
            record = {"id": s.id, "bytecode_hex": s.bytecode_hex, "labels": list(s.labels)}
            if s.source is not None:
                record["source"] = s.source
            f.write(json.dumps(record, sort_keys=True) + "\n")


def load_dataset(path: str, labels: int | None = None) -> list[ContractSample]:
    samples = []
    with open(path) as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(lineno, f"bad JSON: {e}") from None
            try:
                sample_labels = tuple(int(x) for x in record["labels"])
                sample = ContractSample(
                    id=str(record["id"]),
                    bytecode_hex=str(record["bytecode_hex"]),
                    labels=sample_labels,
                    source=record.get("source"),
                )
            except (KeyError, TypeError, ValueError) as e:
                raise ParseError(lineno, f"bad record: {e}") from None
            if labels is not None and len(sample.labels) != labels:
                raise BadLabelLength(lineno, len(sample.labels), labels)
            try:
                parse_hex(sample.bytecode_hex)
            except ValueError:
                raise ParseError(lineno, "bytecode_hex does not decode") from None
            samples.append(sample)
    return samples


# --- synthetic corpus -----------------------------------------------------

class _Asm:
    """Tiny two-pass assembler with labels (label pushes are fixed PUSH2)."""

    def __init__(self):
        self.items: list = []

    def op(self, name: str, imm: int | None = None):
        self.items.append(("op", name, imm))
        return self

    def label(self, name: str):
        self.items.append(("label", name))
        return self

    def push_label(self, name: str):
        self.items.append(("push_label", name))
        return self

    def build(self) -> bytes:
        offsets: dict[str, int] = {}
        pos = 0
        for item in self.items:
            kind = item[0]
            if kind == "label":
                offsets[item[1]] = pos
            elif kind == "push_label":
                pos += 3
            else:
                pos += 1 + opcode_named(item[1]).immediate_len
        out = bytearray()
        for item in self.items:
            kind = item[0]
            if kind == "label":
                continue
            if kind == "push_label":
                out.append(opcode_named("PUSH2").byte)
                out += offsets[item[1]].to_bytes(2, "big")
                continue
            _, name, imm = item
            op = opcode_named(name)
            out.append(op.byte)
            if op.immediate_len:
                out += (imm or 0).to_bytes(op.immediate_len, "big")
        return bytes(out)


def _filler(a: _Asm, rng: random.Random):
    kind = rng.randrange(7)
    if kind == 0:
        a.op("PUSH1", rng.randrange(256)).op("PUSH1", rng.randrange(256)).op("SUB").op("POP")
    elif kind == 1:
        a.op("PUSH1", rng.randrange(256)).op("DUP1").op("LT").op("POP")
    elif kind == 2:
        a.op("CALLVALUE").op("POP")
    elif kind == 3:
        a.op("PUSH1", rng.randrange(256)).op("PUSH1", rng.randrange(256)).op("AND").op("POP")
    elif kind == 4:
        a.op("PUSH1", rng.randrange(256)).op("DUP1").op("SWAP1").op("POP").op("POP")
    elif kind == 5:
        a.op("CALLER").op("POP").op("NUMBER").op("POP")
    else:
        a.op("PUSH1", rng.randrange(256)).op("PUSH1", rng.randrange(256)).op("OR").op("POP")


def _guard(a: _Asm, rng: random.Random, uid: int):
    # require-style guard: constant-true branch over a dead revert path,
    # as compilers emit for checks that fold at compile time
    name = f"ok{uid}"
    a.op("PUSH1", 1).push_label(name).op("JUMPI")
    a.op("PUSH1", 0).op("PUSH1", 0).op("REVERT")
    a.label(name).op("JUMPDEST")


def _metadata_blob(rng: random.Random) -> bytes:
    # unreachable trailing blob emulating the compiler metadata that real
    # deployments carry after the terminal instruction; JUMP/JUMPI bytes are
    # excluded so jump-target analysis stays decidable
    out = bytearray([0xA2, 0x64])
    for _ in range(rng.randrange(4, 13)):
        b = rng.randrange(256)
        while b in (0x56, 0x57):
            b = rng.randrange(256)
        out.append(b)
    # pad any PUSH whose immediate would run off the end, so transforms can
    # still append or insert behind the blob
    pos = 0
    while pos < len(out):
        b = out[pos]
        pos += 1 + (b - 0x5F if 0x60 <= b <= 0x7F else 0)
    out += bytes(pos - len(out))
    return bytes(out)


def _fragment(a: _Asm, label: int, rng: random.Random, uid: int):
    if label == 0:
        # call-shaped pattern whose result is stored
        for _ in range(7):
            a.op("PUSH1", 0)
        a.op("CALL").op("PUSH1", 0).op("MSTORE")
    elif label == 1:
        a.op("PUSH1", rng.randrange(1, 256)).op("PUSH1", rng.randrange(1, 256))
        a.op("MUL").op("PUSH1", rng.randrange(256)).op("ADD").op("POP")
    elif label == 2:
        a.op("TIMESTAMP").op("PUSH1", 32).op("MSTORE")
    elif label == 3:
        top, done = f"loop{uid}", f"done{uid}"
        a.op("PUSH1", 0)
        a.label(top).op("JUMPDEST")
        a.op("DUP1").op("CALLDATASIZE").op("GT").op("ISZERO")
        a.push_label(done).op("JUMPI")
        a.op("DUP1").op("CALLDATALOAD").op("POP")
        a.op("PUSH1", 1).op("ADD")
        a.push_label(top).op("JUMP")
        a.label(done).op("JUMPDEST").op("POP")
    elif label == 4:
        a.op("PC").op("POP").op("GAS").op("POP")
    else:
        raise ValueError(f"no fragment for label {label}")


def _jump_over(a: _Asm, uid: int):
    # unconditional jump so bytecode transforms have branch sites
    name = f"skip{uid}"
    a.push_label(name).op("JUMP")
    a.label(name).op("JUMPDEST")


_SOURCE_LINES = {
    0: "{ind}VAR_W.call.value(amount)();",
    1: "{ind}balance = balance + amount * rate;",
    2: "{ind}if (block.timestamp > deadline) {{ expired = true; }}",
    3: "{ind}for (uint i = 0; i < entries.length; i++) {{ total += entries[i]; }}",
    4: "{ind}uint leftover = msg.gas;",
}

_FILLER_LINES = [
    "{ind}uint checked = amount;",
    "{ind}require(amount > 0);",
    "{ind}count = count + 1;",
    "{ind}// bookkeeping step",
]


def _pseudo_source(labels: tuple[int, ...], rng: random.Random, uid: int) -> str:
    lines = [
        "pragma solidity ^0.4.26;",
        f"contract Widget{uid} {{",
        "    uint balance;",
        "    uint count;",
        f"    function handle{uid}(uint amount) public {{",
    ]
    body = []
    for j, on in enumerate(labels):
        if on:
            body.append(_SOURCE_LINES[j].format(ind="        ").replace("VAR_W", f"w{uid}"))
    for _ in range(rng.randrange(1, 3)):
        body.append(rng.choice(_FILLER_LINES).format(ind="        "))
    rng.shuffle(body)
    lines.extend(body)
    lines.append("    }")
    lines.append("}")
    return "\n".join(lines)


def gen_synthetic(
    n: int,
    seed: int = 0,
    n_labels: int = 5,
    positive_prior: float = 0.5,
    with_source: bool = True,
) -> list[ContractSample]:
    """Deterministic corpus of small executable programs with matching
    pseudo-source; each label plants a detectable bytecode pattern."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n_labels < 1 or n_labels > 5:
        raise ValueError("n_labels must be in 1..5")
    rng = random.Random(seed)
    samples = []
    for idx in range(n):
        labels = tuple(int(rng.random() < positive_prior) for _ in range(n_labels))
        a = _Asm()
        _filler(a, rng)
        if rng.random() < 0.5:
            _jump_over(a, idx * 10 + 9)
        if rng.random() < 0.4:
            _guard(a, rng, idx * 10 + 8)
        order = [j for j, on in enumerate(labels) if on]
        rng.shuffle(order)
        for j in order:
            _fragment(a, j, rng, idx * 10 + j)
            if rng.random() < 0.6:
                _filler(a, rng)
            if rng.random() < 0.2:
                a.op("JUMPDEST")  # stray landing pad; splits the block
        if rng.random() < 0.5:
            a.op("PUSH1", rng.randrange(256)).op("PUSH1", 0).op("MSTORE")
            a.op("PUSH1", 32).op("PUSH1", 0).op("RETURN")
        else:
            a.op("STOP")
        bytecode = a.build()
        if rng.random() < 0.8:
            bytecode += _metadata_blob(rng)

        result = execute(disassemble(bytecode), b"\x07\x03", step_limit=100_000)
        if result.status not in (Status.Stopped, Status.Returned):
            raise AssertionError(
                f"generated program {idx} does not terminate cleanly: {result.status}"
            )

        samples.append(
            ContractSample(
                id=f"syn-{seed}-{idx}",
                bytecode_hex=to_hex(bytecode),
                labels=labels,
                source=_pseudo_source(labels, rng, idx) if with_source else None,
            )
        )
    return samples


def labels_matrix(samples: list[ContractSample]) -> np.ndarray:
    return np.array([s.labels for s in samples], dtype=bool)
