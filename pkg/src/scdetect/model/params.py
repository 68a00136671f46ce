"""Named parameter registry shared by encoders, fusion, and classifier."""

from __future__ import annotations

import numpy as np

from ..autodiff import Array2D, Param


class ParamStore:
    """Creates, names, and tracks every trainable Param so checkpointing
    and optimizer sweeps see a single flat dict."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.params: dict[str, Param] = {}

    def _register(self, name: str, data: np.ndarray) -> Param:
        if name in self.params:
            raise ValueError(f"duplicate parameter name {name!r}")
        p = Param(Array2D(data), name)
        self.params[name] = p
        return p

    def xavier(self, name: str, rows: int, cols: int) -> Param:
        std = np.sqrt(2.0 / (rows + cols))
        return self._register(name, self.rng.normal(0.0, std, size=(rows, cols)))

    def zeros(self, name: str, rows: int, cols: int) -> Param:
        return self._register(name, np.zeros((rows, cols)))

    def as_arrays(self) -> dict[str, np.ndarray]:
        return {name: p.value.data.copy() for name, p in self.params.items()}

    def load_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        missing = set(self.params) - set(arrays)
        extra = set(arrays) - set(self.params)
        if missing or extra:
            raise KeyError(f"checkpoint mismatch: missing={sorted(missing)} extra={sorted(extra)}")
        for name, p in self.params.items():
            arr = np.asarray(arrays[name], dtype=np.float64)
            if arr.shape != p.shape:
                raise ValueError(
                    f"shape mismatch for {name!r}: checkpoint {arr.shape} vs model {p.shape}"
                )
            p.value.data = arr.copy()

    def values(self) -> list[Param]:
        return list(self.params.values())
