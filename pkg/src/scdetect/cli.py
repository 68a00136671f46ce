"""Command-line entry point.

Exit codes: 0 success, 1 operational failure (bad input data, failed
verification), 2 usage errors (argparse's default).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from .cfg import build_cfg, export_coo, export_dot
from .config import ConfigError, load_config
from .data import BadLabelLength, ParseError, gen_synthetic, load_dataset, save_dataset
from .detector import CheckpointMismatch, EmptyTestSet, MultimodalVulnerabilityDetector
from .evm.disasm import disassemble, format_listing, parse_hex
from .obfuscate import (
    BYTECODE_PASSES,
    SOURCE_PASSES,
    Unliftable,
    Unresolvable,
    obf_source,
    obfuscate_bytecode,
)
from .preprocess import EmptyInput, normalize_opcodes, normalize_source
from .robustness import NoUsableSamples, run_robustness


class CliError(Exception):
    pass


def _read_bytecode(args) -> bytes:
    if args.hex is not None:
        text = args.hex
    else:
        with open(args.file) as f:
            text = f.read().strip()
    try:
        return parse_hex(text)
    except ValueError as e:
        raise CliError(f"bad bytecode hex: {e}") from None


def _add_bytecode_input(p: argparse.ArgumentParser):
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--hex", help="bytecode as a hex string")
    group.add_argument("--file", help="file containing bytecode hex")


def _overrides(pairs: list[str]) -> dict:
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise CliError(f"expected key=value, got {pair!r}")
        key, _, val = pair.partition("=")
        out[key.strip()] = val.strip()
    return out


def _coerced_config(path: str | None, pairs: list[str]):
    raw = _overrides(pairs)
    cfg = load_config(path)  # type-checks the file first
    typed = {}
    for key, val in raw.items():
        if not hasattr(cfg, key):
            raise CliError(f"unknown config key {key!r}")
        kind = type(getattr(cfg, key))
        try:
            typed[key] = kind(val)
        except ValueError:
            raise CliError(f"bad value for {key!r}: {val!r}") from None
    return load_config(path, **typed)


def cmd_disasm(args) -> int:
    program = disassemble(_read_bytecode(args))
    print(format_listing(program))
    return 0


def cmd_normalize(args) -> int:
    if args.source:
        with open(args.source) as f:
            print(normalize_source(f.read()).text)
        return 0
    program = disassemble(_read_bytecode(args))
    print(" ".join(normalize_opcodes(program).mnemonics))
    return 0


def cmd_cfg(args) -> int:
    graph = build_cfg(disassemble(_read_bytecode(args)))
    if args.format == "coo":
        coo = export_coo(graph)
        print(json.dumps(coo.tolist()))
    else:
        print(export_dot(graph))
    return 0


def cmd_obfuscate(args) -> int:
    seed = args.seed
    if args.source:
        passes = tuple(args.passes.split(",")) if args.passes else SOURCE_PASSES
        with open(args.source) as f:
            print(obf_source(f.read(), seed, passes))
        return 0
    passes = tuple(args.passes.split(",")) if args.passes else BYTECODE_PASSES
    program = disassemble(_read_bytecode(args))
    transformed, report = obfuscate_bytecode(program, passes, seed, trials=args.trials)
    if not report.verified:
        print("equivalence verification FAILED", file=sys.stderr)
        return 1
    from .evm.disasm import assemble, to_hex

    print(to_hex(assemble(transformed)))
    print(
        f"# {report.transform}: {report.size_before} -> {report.size_after} bytes, "
        f"verified over {report.trials} trials",
        file=sys.stderr,
    )
    return 0


def cmd_gen_data(args) -> int:
    samples = gen_synthetic(
        args.n, seed=args.seed, n_labels=args.labels, with_source=not args.no_source
    )
    save_dataset(args.out, samples)
    print(f"wrote {len(samples)} samples to {args.out}")
    return 0


def cmd_train(args) -> int:
    cfg = _coerced_config(args.config, args.set)
    samples = load_dataset(args.data, labels=cfg.labels)
    detector = MultimodalVulnerabilityDetector(**dataclasses.asdict(cfg), verbose=not args.quiet)
    detector.fit(samples)
    detector.save(args.out)
    last = detector.history_[-1]
    hs = last["holdout_hs"]
    hs_txt = f"{hs:.4f}" if hs is not None else "n/a"
    print(f"trained {last['epoch'] + 1} epochs, final loss {last['loss']:.4f}, "
          f"holdout HS {hs_txt}; checkpoint -> {args.out}")
    return 0


def cmd_eval(args) -> int:
    detector = MultimodalVulnerabilityDetector.load(args.checkpoint)
    samples = load_dataset(args.data, labels=detector.config_.labels)
    report = detector.evaluate(samples)
    print(json.dumps(dataclasses.asdict(report)))
    print(report.summary(), file=sys.stderr)
    return 0


def cmd_robustness(args) -> int:
    detector = MultimodalVulnerabilityDetector.load(args.checkpoint)
    samples = load_dataset(args.data, labels=detector.config_.labels)
    report = run_robustness(detector, samples, seed=args.seed, trials=args.trials)
    print(json.dumps(dataclasses.asdict(report)))
    print(report.summary(), file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scdetect", description="multimodal smart-contract vulnerability detection"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("disasm", help="disassemble bytecode to a listing")
    _add_bytecode_input(p)
    p.set_defaults(func=cmd_disasm)

    p = sub.add_parser("normalize", help="normalize source text or opcode stream")
    p.add_argument("--source", help="source file to normalize")
    p.add_argument("--hex", help="bytecode as a hex string")
    p.add_argument("--file", help="file containing bytecode hex")
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("cfg", help="recover a control-flow graph")
    _add_bytecode_input(p)
    p.add_argument("--format", choices=("dot", "coo"), default="dot")
    p.set_defaults(func=cmd_cfg)

    p = sub.add_parser("obfuscate", help="apply semantics-preserving transforms")
    p.add_argument("--source", help="source file to transform instead of bytecode")
    p.add_argument("--hex", help="bytecode as a hex string")
    p.add_argument("--file", help="file containing bytecode hex")
    p.add_argument("--passes", help="comma-separated pass names")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=10)
    p.set_defaults(func=cmd_obfuscate)

    p = sub.add_parser("gen-data", help="generate a synthetic labelled dataset")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--labels", type=int, default=5)
    p.add_argument("--no-source", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train a detector on a JSONL dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key (repeatable)")
    p.add_argument("--out", required=True, help="checkpoint output path")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--checkpoint", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("robustness", help="measure detection drop under obfuscation")
    p.add_argument("--data", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=10)
    p.set_defaults(func=cmd_robustness)

    return parser


_FAILURES = (
    CliError,
    ConfigError,
    ParseError,
    BadLabelLength,
    CheckpointMismatch,
    EmptyTestSet,
    EmptyInput,
    Unliftable,
    Unresolvable,
    NoUsableSamples,
    FileNotFoundError,
    ValueError,
)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "normalize" and not (args.source or args.hex or args.file):
        print("normalize: provide --source, --hex, or --file", file=sys.stderr)
        return 2
    if args.command == "obfuscate" and not (args.source or args.hex or args.file):
        print("obfuscate: provide --source, --hex, or --file", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except _FAILURES as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
