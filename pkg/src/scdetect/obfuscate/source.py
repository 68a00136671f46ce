"""Token-level source obfuscation: identifier hashing, comment deletion,
layout collapsing, and integer constant expansion."""

from __future__ import annotations

import hashlib
import random
import re

from ..preprocess import _collect_declarations, _split_strings, _strip_comments, _IDENT

SOURCE_PASSES = ("rename", "comments", "layout", "constants")


class LexError(Exception):
    pass


def _check_lexes(source: str) -> None:
    if source.count('"') % 2 == 1 or source.count("'") % 2 == 1:
        raise LexError("unterminated string literal")
    if source.count("/*") != source.count("*/"):
        raise LexError("unterminated block comment")


def hashed_name(seed: int, name: str, width: int = 34) -> str:
    """Stable hex identifier for (seed, name); SHA-1 style digest prefix."""
    digest = hashlib.sha1(f"{seed}:{name}".encode()).hexdigest()
    return "Ox" + digest[:width]


def _rename_identifiers(source: str, seed: int) -> str:
    code_only = "".join(
        seg for ln in source.split("\n") for is_str, seg in _split_strings(ln) if not is_str
    )
    names = _collect_declarations(code_only)
    mapping: dict[str, str] = {}
    taken: set[str] = set()
    for name in names:
        width = 34
        candidate = hashed_name(seed, name, width)
        while candidate in taken:  # widen the prefix until distinct
            width += 2
            candidate = hashed_name(seed, name, width)
        taken.add(candidate)
        mapping[name] = candidate

    def rewrite(seg: str) -> str:
        return _IDENT.sub(lambda m: mapping.get(m.group(0), m.group(0)), seg)

    return "\n".join(
        "".join(seg if is_str else rewrite(seg) for is_str, seg in _split_strings(ln))
        for ln in source.split("\n")
    )


def expand_constant(n: int, rng: random.Random) -> str:
    """An arithmetic expression over +,-,*,/ that evaluates to exactly n
    under standard precedence, with non-negative intermediates."""
    form = rng.randrange(3)
    if form == 0 and n >= 2:
        a = rng.randint(2, 9)
        b = n // a
        c = n - a * b
        return f"({a} * {b} + {c})"
    if form == 1:
        k = rng.randint(2, 9)
        return f"({n} * {k} / {k})"
    r = rng.randint(0, 9)
    return f"({n + r} - {r})"


_INT_LITERAL = re.compile(r"(?<![\w.])\d+(?![\w.])")


def _expand_constants(source: str, rng: random.Random) -> str:
    def rewrite(seg: str) -> str:
        return _INT_LITERAL.sub(lambda m: expand_constant(int(m.group(0)), rng), seg)

    return "\n".join(
        "".join(seg if is_str else rewrite(seg) for is_str, seg in _split_strings(ln))
        for ln in source.split("\n")
    )


def _collapse_layout(source: str) -> str:
    """Dense continuous text: drop newlines and indentation."""
    out = re.sub(r"\s+", " ", source)
    return out.strip()


def obf_source(source: str, seed: int, passes: tuple[str, ...]) -> str:
    unknown = set(passes) - set(SOURCE_PASSES)
    if unknown:
        raise ValueError(f"unknown source passes: {sorted(unknown)}")
    _check_lexes(source)
    out = source
    if "comments" in passes:
        out = _strip_comments(out)
    if "rename" in passes:
        out = _rename_identifiers(out, seed)
    if "constants" in passes:
        out = _expand_constants(out, random.Random(seed))
    if "layout" in passes:
        out = _collapse_layout(out)
    return out
