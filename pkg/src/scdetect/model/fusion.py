"""Hierarchical cross-modal fusion and the multi-label head.

Three levels: per-modality self-attention, shared pairwise cross-attention
averaged with a 1/(N-1) normalizer, and softmax-weighted adaptive
combination of mean-pooled, projected modality vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff import (
    Array2D,
    Param,
    add,
    add_bias_row,
    clip,
    col_mean,
    constant,
    log,
    matmul,
    mul,
    relu,
    row_softmax,
    scale,
    scale_rows,
    sigmoid,
    slice_cols,
    sub,
    sum_all,
    transpose,
)
from .attention import AttentionParams, init_attention, multi_head_attention
from .params import ParamStore

EPS = 1e-12


@dataclass
class FusionParams:
    self_attn: list[AttentionParams]  # one per modality
    cross_attn: AttentionParams       # shared across ordered pairs
    weights: Param                    # 1 x N modality logits
    proj_w: list[Param]               # d x d per modality
    proj_b: list[Param]               # 1 x d per modality


@dataclass
class ClassifierParams:
    w1: Param
    b1: Param
    w2: Param
    b2: Param
    tau: float = 0.5


@dataclass(frozen=True)
class Prediction:
    probabilities: np.ndarray
    labels: np.ndarray


def init_fusion(store: ParamStore, n_modalities: int, dim: int) -> FusionParams:
    return FusionParams(
        self_attn=[init_attention(store, f"fuse.self{i}", dim) for i in range(n_modalities)],
        cross_attn=init_attention(store, "fuse.cross", dim),
        weights=store.zeros("fuse.weights", 1, n_modalities),
        proj_w=[store.xavier(f"fuse.proj_w{i}", dim, dim) for i in range(n_modalities)],
        proj_b=[store.zeros(f"fuse.proj_b{i}", 1, dim) for i in range(n_modalities)],
    )


def init_classifier(store: ParamStore, dim: int, hidden: int, labels: int, tau: float) -> ClassifierParams:
    return ClassifierParams(
        w1=store.xavier("clf.w1", dim, hidden),
        b1=store.zeros("clf.b1", 1, hidden),
        w2=store.xavier("clf.w2", hidden, labels),
        b2=store.zeros("clf.b2", 1, labels),
        tau=tau,
    )


def self_attend(m: Array2D, params: AttentionParams, heads: int) -> Array2D:
    return multi_head_attention(m, m, params, heads)


def cross_attend(z_i: Array2D, z_j: Array2D, params: AttentionParams, heads: int) -> Array2D:
    """Queries from modality i, keys/values from modality j."""
    return multi_head_attention(z_i, z_j, params, heads)


def aggregate(z: list[Array2D], cross: dict[tuple[int, int], Array2D]) -> list[Array2D]:
    """H_i = Z_i + (1/(N-1)) * sum_{j != i} C_{i->j}; identity when N = 1
    (the normalizer is undefined there)."""
    n = len(z)
    if n == 1:
        return [z[0]]
    out = []
    for i in range(n):
        acc = None
        for j in range(n):
            if j == i:
                continue
            c = cross[(i, j)]
            acc = c if acc is None else add(acc, c)
        out.append(add(z[i], scale(acc, 1.0 / (n - 1))))
    return out


def adaptive_fuse(h: list[Array2D], params: FusionParams) -> Array2D:
    """Mean-pool each modality over its rows, project with ReLU into the
    common space, and combine with softmax(w) weights."""
    alpha = row_softmax(params.weights.value)
    fused = None
    for i, h_i in enumerate(h):
        pooled = col_mean(h_i)
        projected = relu(add_bias_row(matmul(pooled, params.proj_w[i].value), params.proj_b[i].value))
        weighted = scale_rows(projected, slice_cols(alpha, i, i + 1))
        fused = weighted if fused is None else add(fused, weighted)
    return fused


def fuse_modalities(modalities: list[Array2D], params: FusionParams, heads: int) -> Array2D:
    """Full three-level fusion producing the 1 x d fused vector."""
    n = len(modalities)
    if n != len(params.self_attn):
        raise ValueError(f"got {n} modalities for {len(params.self_attn)} parameter sets")
    z = [self_attend(m, params.self_attn[i], heads) for i, m in enumerate(modalities)]
    cross = {}
    for i in range(n):
        for j in range(n):
            if i != j:
                cross[(i, j)] = cross_attend(z[i], z[j], params.cross_attn, heads)
    h = aggregate(z, cross)
    return adaptive_fuse(h, params)


def classify_scores(fused: Array2D, params: ClassifierParams) -> Array2D:
    hidden = relu(add_bias_row(matmul(fused, params.w1.value), params.b1.value))
    return sigmoid(add_bias_row(matmul(hidden, params.w2.value), params.b2.value))


def classify(fused: Array2D, params: ClassifierParams) -> Prediction:
    p = classify_scores(fused, params).data[0]
    return Prediction(probabilities=p.copy(), labels=p >= params.tau)


def bce_loss(p: Array2D, y: np.ndarray) -> Array2D:
    """Mean binary cross-entropy over the label slots; probabilities are
    clamped away from {0, 1} before the logs."""
    target = constant(np.asarray(y, dtype=np.float64).reshape(1, -1))
    if target.shape != p.shape:
        raise ValueError(f"labels shape {target.shape} != probabilities shape {p.shape}")
    ones = constant(np.ones_like(target.data))
    pc = clip(p, EPS, 1.0 - EPS)
    pos = mul(target, log(pc))
    neg = mul(sub(ones, target), log(sub(ones, pc)))
    return scale(sum_all(add(pos, neg)), -1.0 / p.cols)
