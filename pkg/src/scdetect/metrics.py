"""Multi-label evaluation metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import ShapeMismatch


@dataclass(frozen=True)
class MetricsReport:
    hs: float
    hamming_loss: float
    precision: float
    recall: float
    f1: float
    per_label: tuple[dict, ...]
    n: int
    L: int

    def summary(self) -> str:
        return (
            f"n={self.n} L={self.L} HS={self.hs:.4f} HL={self.hamming_loss:.4f} "
            f"P={self.precision:.4f} R={self.recall:.4f} F1={self.f1:.4f}"
        )


def _as_bool(y) -> np.ndarray:
    arr = np.asarray(y)
    return arr.astype(bool)


def _check_shapes(y_true: np.ndarray, y_pred: np.ndarray):
    if y_true.shape != y_pred.shape or y_true.ndim != 2:
        raise ShapeMismatch(f"label matrices disagree: {y_true.shape} vs {y_pred.shape}")


def hamming_score(y_true, y_pred) -> float:
    """Fraction of label slots predicted correctly."""
    yt, yp = _as_bool(y_true), _as_bool(y_pred)
    _check_shapes(yt, yp)
    return float((yt == yp).mean())


def hamming_score_iou(y_true, y_pred) -> float:
    """Sample-wise intersection-over-union variant, averaged over samples.
    Samples where both label sets are empty count as 1."""
    yt, yp = _as_bool(y_true), _as_bool(y_pred)
    _check_shapes(yt, yp)
    inter = (yt & yp).sum(axis=1)
    union = (yt | yp).sum(axis=1)
    scores = np.where(union > 0, inter / np.maximum(union, 1), 1.0)
    return float(scores.mean())


def prf1(y_true, y_pred, average: str = "micro") -> tuple[float, float, float]:
    """Precision/recall/F1 over label slots; micro by default, macro behind
    the flag.  Zero denominators yield 0."""
    yt, yp = _as_bool(y_true), _as_bool(y_pred)
    _check_shapes(yt, yp)

    def _prf(tp, fp, fn):
        p = tp / (tp + fp) if tp + fp else 0.0
        r = tp / (tp + fn) if tp + fn else 0.0
        f = 2 * p * r / (p + r) if p + r else 0.0
        return p, r, f

    if average == "micro":
        tp = int((yt & yp).sum())
        fp = int((~yt & yp).sum())
        fn = int((yt & ~yp).sum())
        return _prf(tp, fp, fn)
    if average == "macro":
        per = [
            _prf(int((yt[:, j] & yp[:, j]).sum()),
                 int((~yt[:, j] & yp[:, j]).sum()),
                 int((yt[:, j] & ~yp[:, j]).sum()))
            for j in range(yt.shape[1])
        ]
        return tuple(float(np.mean([x[k] for x in per])) for k in range(3))
    raise ValueError(f"unknown average {average!r}")


def hs_degradation(hs_base: float, hs_obf: float) -> float:
    """Clean-minus-obfuscated Hamming Score; may be negative."""
    for v in (hs_base, hs_obf):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"Hamming Score out of [0, 1]: {v}")
    return hs_base - hs_obf


def metrics_report(y_true, y_pred, average: str = "micro") -> MetricsReport:
    yt, yp = _as_bool(y_true), _as_bool(y_pred)
    _check_shapes(yt, yp)
    hs = hamming_score(yt, yp)
    p, r, f = prf1(yt, yp, average)
    per_label = tuple(
        {
            "tp": int((yt[:, j] & yp[:, j]).sum()),
            "tn": int((~yt[:, j] & ~yp[:, j]).sum()),
            "fp": int((~yt[:, j] & yp[:, j]).sum()),
            "fn": int((yt[:, j] & ~yp[:, j]).sum()),
        }
        for j in range(yt.shape[1])
    )
    return MetricsReport(
        hs=hs,
        hamming_loss=1.0 - hs,
        precision=p,
        recall=r,
        f1=f,
        per_label=per_label,
        n=yt.shape[0],
        L=yt.shape[1],
    )
