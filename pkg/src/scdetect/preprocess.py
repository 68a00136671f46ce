"""Input normalization and tokenization for the three modalities."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .evm.disasm import Program

PAD_ID, CLS_ID, SEP_ID, UNK_ID = 0, 1, 2, 3
RESERVED_IDS = 4

DEFAULT_STOPWORDS = ("function", "contract")

_SUFFIXED = re.compile(r"^(PUSH|SWAP|DUP|LOG)\d+$")


def normalize_mnemonic(mnemonic: str) -> str:
    """PUSH1-PUSH32 -> PUSH, SWAP1-SWAP16 -> SWAP, DUP1-DUP16 -> DUP,
    LOG1-LOG4 -> LOG; everything else unchanged."""
    m = _SUFFIXED.match(mnemonic)
    return m.group(1) if m else mnemonic


@dataclass(frozen=True)
class NormalizedOpcodes:
    mnemonics: tuple[str, ...]


def normalize_opcodes(program: Program) -> NormalizedOpcodes:
    """Drop immediates and strip numeric suffixes from the opcode stream."""
    return NormalizedOpcodes(tuple(normalize_mnemonic(i.opcode.mnemonic) for i in program))


# --- source normalization -------------------------------------------------

@dataclass(frozen=True)
class NormalizedSource:
    text: str


_TYPE_KEYWORD = re.compile(r"^(u?int\d*|bool|address|string|bytes\d*|byte|var)$")
_MODIFIER_KEYWORDS = {
    "public", "private", "internal", "external", "constant", "payable",
    "memory", "storage", "calldata", "view", "pure", "indexed",
}
_SOLIDITY_KEYWORDS = {
    "pragma", "solidity", "function", "contract", "library", "interface",
    "returns", "return", "if", "else", "for", "while", "do", "break",
    "continue", "new", "delete", "emit", "event", "modifier", "struct",
    "enum", "mapping", "require", "assert", "revert", "throw", "using",
    "is", "this", "true", "false", "msg", "block", "tx", "now", "sender",
    "value", "timestamp", "push", "length", "import", "assembly",
} | _MODIFIER_KEYWORDS

_IDENT = re.compile(r"[A-Za-z_$][A-Za-z0-9_$]*")
_STRING_OR_COMMENT = re.compile(
    r'("(?:[^"\\]|\\.)*")|(\'(?:[^\'\\]|\\.)*\')|(//[^\n]*)|(/\*.*?\*/)',
    re.DOTALL,
)


def _strip_comments(source: str) -> str:
    def repl(m: re.Match) -> str:
        if m.group(3) is not None:
            return ""
        if m.group(4) is not None:
            # keep line structure so line-based cleanup still applies
            return "\n" * m.group(4).count("\n")
        return m.group(0)

    return _STRING_OR_COMMENT.sub(repl, source)


def _split_strings(line: str) -> list[tuple[bool, str]]:
    """Split a line into (is_string_literal, text) segments."""
    segments = []
    pos = 0
    for m in _STRING_OR_COMMENT.finditer(line):
        if m.start() > pos:
            segments.append((False, line[pos : m.start()]))
        segments.append((m.group(3) is None and m.group(4) is None, m.group(0)))
        pos = m.end()
    if pos < len(line):
        segments.append((False, line[pos:]))
    return segments


def _is_type_token(tok: str) -> bool:
    return bool(_TYPE_KEYWORD.match(tok))


def _collect_declarations(code: str) -> dict[str, str]:
    """Map user-declared identifiers to FUN<k>/VAR<k>/CON<k> in
    first-declaration order, one counter per class."""
    mapping: dict[str, str] = {}
    counters = {"FUN": 0, "VAR": 0, "CON": 0}

    def assign(name: str, cls: str):
        if name in mapping or name in _SOLIDITY_KEYWORDS:
            return
        if re.fullmatch(r"(FUN|VAR|CON)\d+", name):
            # already-normalized names keep their class; re-number in order
            cls = name[:3]
        counters[cls] += 1
        mapping[name] = f"{cls}{counters[cls]}"

    raw = [(m.group(0), m.start()) for m in _IDENT.finditer(code)]
    for idx, (tok, start) in enumerate(raw):
        nxt = raw[idx + 1][0] if idx + 1 < len(raw) else None
        if tok == "function" and nxt:
            assign(nxt, "FUN")
        elif tok in ("contract", "library", "interface") and nxt:
            assign(nxt, "CON")
        elif (_is_type_token(tok) or tok == "mapping") and nxt:
            # skip modifier keywords between the type and the name
            j = idx + 1
            while j < len(raw) and raw[j][0] in _MODIFIER_KEYWORDS:
                j += 1
            if j < len(raw):
                cand, cand_start = raw[j]
                between = code[start + len(tok) : cand_start]
                # a declaration has only modifiers/whitespace (or the
                # mapping's parenthesized key/value) before the name
                if tok == "mapping" or not re.search(r"[^\sA-Za-z]", between):
                    if not _is_type_token(cand) and cand not in _SOLIDITY_KEYWORDS:
                        assign(cand, "VAR")
    return mapping


def normalize_source(source: str, stopwords: tuple[str, ...] = DEFAULT_STOPWORDS) -> NormalizedSource:
    """Strip comments, pragma lines, non-ASCII bytes, blank lines, and
    stopword keywords; rename user identifiers to FUN<k>/VAR<k>/CON<k>.
    String literals pass through untouched."""
    text = _strip_comments(source)
    text = text.encode("ascii", errors="ignore").decode("ascii")
    # drop the directive only, not the rest of its line: collapsed-layout
    # sources put the whole contract on the pragma's line
    text = re.sub(r"\bpragma\b[^;\n]*;?", "", text)

    lines = text.split("\n")
    code_only = "\n".join(
        "".join(seg for is_str, seg in _split_strings(ln) if not is_str) for ln in lines
    )
    mapping = _collect_declarations(code_only)

    stop = set(stopwords)

    def rewrite_segment(seg: str) -> str:
        def sub_ident(m: re.Match) -> str:
            tok = m.group(0)
            if tok in stop:
                return ""
            return mapping.get(tok, tok)

        out = _IDENT.sub(sub_ident, seg)
        out = re.sub(r"[ \t]+", " ", out)
        return out

    result_lines = []
    for ln in lines:
        rebuilt = "".join(
            seg if is_str else rewrite_segment(seg) for is_str, seg in _split_strings(ln)
        ).strip()
        if rebuilt:
            result_lines.append(rebuilt)
    return NormalizedSource("\n".join(result_lines))


# --- tokenization ---------------------------------------------------------

_FNV_OFFSET = 14695981039346656037
_FNV_PRIME = 1099511628211
_U64 = (1 << 64) - 1


def stable_hash(token: str) -> int:
    """64-bit FNV-1a over the UTF-8 bytes; identical on every platform."""
    h = _FNV_OFFSET
    for b in token.encode("utf-8"):
        h = ((h ^ b) * _FNV_PRIME) & _U64
    return h


_WORD_OR_PUNCT = re.compile(r"[A-Za-z0-9_]+|[^A-Za-z0-9_\s]")


def split_tokens(text: str) -> list[str]:
    """Whitespace/punctuation splitter; punctuation chars are tokens."""
    return _WORD_OR_PUNCT.findall(text)


def hash_tokenize(text: str, vocab_size: int = 4096) -> list[int]:
    """Map each token to a bucket id in [4, vocab_size); ids 0..3 are
    reserved for pad/cls/sep/unk."""
    if vocab_size < 16:
        raise ValueError("vocab_size must be >= 16")
    span = vocab_size - RESERVED_IDS
    return [RESERVED_IDS + stable_hash(tok) % span for tok in split_tokens(text)]


# --- sliding-window chunking ---------------------------------------------

class EmptyInput(Exception):
    pass


@dataclass(frozen=True)
class ChunkedTokens:
    chunks: tuple[tuple[int, ...], ...]
    window: int
    stride: int
    pad_id: int = PAD_ID
    cls_id: int = CLS_ID
    sep_id: int = SEP_ID


def chunk_count(length: int, window: int, stride: int) -> int:
    if length <= window:
        return 1
    return -(-(length - window) // stride) + 1


def chunk_tokens(token_ids: list[int], window: int, stride: int) -> ChunkedTokens:
    """Fixed-length overlapping chunks starting at multiples of stride;
    the final chunk is zero-padded; CLS/SEP wrap every chunk."""
    if window < 1 or not 1 <= stride <= window:
        raise ValueError(f"need 1 <= stride <= window, got window={window} stride={stride}")
    if not token_ids:
        raise EmptyInput("cannot chunk an empty token sequence")
    n = chunk_count(len(token_ids), window, stride)
    chunks = []
    for k in range(n):
        body = token_ids[k * stride : k * stride + window]
        body = list(body) + [PAD_ID] * (window - len(body))
        chunks.append((CLS_ID, *body, SEP_ID))
    return ChunkedTokens(tuple(chunks), window, stride)
