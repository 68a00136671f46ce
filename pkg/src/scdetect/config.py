"""Flat key=value configuration with desk-scale defaults."""

from __future__ import annotations

from dataclasses import dataclass, fields


class ConfigError(Exception):
    pass


@dataclass
class Config:
    model_dim: int = 32
    heads: int = 4
    s_max: int = 16
    labels: int = 5
    lr: float = 1e-3
    batch: int = 8
    epochs: int = 50
    seed: int = 0
    tau: float = 0.5
    window: int = 64
    stride: int = 32
    vocab: int = 4096
    src_layers: int = 2
    op_blocks: int = 2
    gnn_layers: int = 3
    hidden: int = 64
    ff_mult: int = 2
    op_len_cap: int = 256
    stopwords: str = "function,contract"
    modalities: str = "source,opcode,graph"
    target_hs: float = 1.0  # early-stop threshold on the held-out split

    def __post_init__(self):
        if self.model_dim % self.heads != 0:
            raise ConfigError(f"heads ({self.heads}) must divide model_dim ({self.model_dim})")
        if not 0 < self.tau < 1:
            raise ConfigError(f"tau must be in (0, 1), got {self.tau}")
        if self.labels < 1:
            raise ConfigError(f"labels must be >= 1, got {self.labels}")
        if not 1 <= self.stride <= self.window:
            raise ConfigError(f"need 1 <= stride <= window, got {self.stride}/{self.window}")

    @property
    def stopword_list(self) -> tuple[str, ...]:
        return tuple(s for s in self.stopwords.split(",") if s)

    @property
    def modality_list(self) -> tuple[str, ...]:
        names = tuple(s for s in self.modalities.split(",") if s)
        bad = set(names) - {"source", "opcode", "graph"}
        if bad:
            raise ConfigError(f"unknown modalities: {sorted(bad)}")
        if not names:
            raise ConfigError("at least one modality is required")
        return names


def parse_config(text: str, **overrides) -> Config:
    """Parse `key = value` lines; '#' starts a comment."""
    known = {f.name: f.type for f in fields(Config)}
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            if known[key] in ("int", int):
                values[key] = int(val)
            elif known[key] in ("float", float):
                values[key] = float(val)
            else:
                values[key] = val
        except ValueError:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {val!r}") from None
    values.update(overrides)
    return Config(**values)


def load_config(path: str | None, **overrides) -> Config:
    if path is None:
        return Config(**overrides)
    with open(path) as f:
        return parse_config(f.read(), **overrides)
