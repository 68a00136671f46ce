"""Multi-head scaled dot-product attention shared by the source encoder
and the fusion stages."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..autodiff import Array2D, Param, concat_cols, matmul, row_softmax, scale, slice_cols, transpose
from .params import ParamStore


@dataclass
class AttentionParams:
    w_q: Param
    w_k: Param
    w_v: Param
    w_o: Param


def init_attention(store: ParamStore, prefix: str, dim: int) -> AttentionParams:
    return AttentionParams(
        store.xavier(f"{prefix}.w_q", dim, dim),
        store.xavier(f"{prefix}.w_k", dim, dim),
        store.xavier(f"{prefix}.w_v", dim, dim),
        store.xavier(f"{prefix}.w_o", dim, dim),
    )


def multi_head_attention(
    queries: Array2D, keys_values: Array2D, params: AttentionParams, heads: int
) -> Array2D:
    """Queries attend over keys/values; output has the query length.
    Per head: softmax(Q K^T / sqrt(d_head)) V; heads are concatenated and
    projected by the output matrix."""
    dim = params.w_q.value.cols
    if dim % heads != 0:
        raise ValueError(f"heads ({heads}) must divide model dim ({dim})")
    d_head = dim // heads

    q = matmul(queries, params.w_q.value)
    k = matmul(keys_values, params.w_k.value)
    v = matmul(keys_values, params.w_v.value)

    outputs = []
    for h in range(heads):
        lo, hi = h * d_head, (h + 1) * d_head
        qh, kh, vh = slice_cols(q, lo, hi), slice_cols(k, lo, hi), slice_cols(v, lo, hi)
        scores = scale(matmul(qh, transpose(kh)), 1.0 / math.sqrt(d_head))
        outputs.append(matmul(row_softmax(scores), vh))
    return matmul(concat_cols(outputs), params.w_o.value)
