"""The three modality encoders: chunked-source transformer, exponentially
gated recurrent opcode encoder, and GATv2-style graph encoder.

Each produces an S x d token matrix with S <= s_max, so the fusion stage
sees a uniform interface.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff import (
    Array2D,
    add,
    add_bias_row,
    col_mean,
    col_max,
    concat_cols,
    concat_rows,
    constant,
    div,
    exp,
    leaky_relu,
    matmul,
    maximum,
    mul,
    relu,
    scale_rows,
    segment_softmax,
    segment_sum,
    sigmoid,
    slice_cols,
    slice_rows,
    sub,
    take_rows,
    tanh,
    layer_norm,
)
from ..cfg import BlockKind, Cfg
from ..evm.opcodes import OPCODES
from ..preprocess import ChunkedTokens, hash_tokenize, normalize_mnemonic
from .attention import init_attention, multi_head_attention
from .params import ParamStore


class EmptyInput(Exception):
    pass


class DanglingEdge(Exception):
    pass


# fixed vocabulary of normalized mnemonics, shared by the opcode encoder
# and the graph node featurizer
OPCODE_VOCAB: tuple[str, ...] = tuple(
    sorted({normalize_mnemonic(op.mnemonic) for op in OPCODES.values()})
)
OPCODE_INDEX: dict[str, int] = {m: i for i, m in enumerate(OPCODE_VOCAB)}


def mnemonic_ids(mnemonics: tuple[str, ...]) -> list[int]:
    return [OPCODE_INDEX[m] for m in mnemonics]


def _cap_rows_maxpool(rows: list[Array2D], s_max: int) -> Array2D:
    """Stack 1xd rows; overflow past s_max-1 collapses to one max-pooled row."""
    if len(rows) <= s_max:
        return concat_rows(rows)
    head = rows[: s_max - 1]
    overflow = col_max(concat_rows(rows[s_max - 1 :]))
    return concat_rows(head + [overflow])


# --- source encoder -------------------------------------------------------

@dataclass
class SourceEncoderParams:
    token_emb: object
    pos_emb: object
    layers: list[dict]
    placeholder: object  # stands in for a missing source modality


def init_source_encoder(
    store: ParamStore, dim: int, vocab: int, window: int, n_layers: int, ff_mult: int
) -> SourceEncoderParams:
    layers = []
    for i in range(n_layers):
        prefix = f"src.layer{i}"
        layers.append({
            "attn": init_attention(store, f"{prefix}.attn", dim),
            "ff_w1": store.xavier(f"{prefix}.ff_w1", dim, dim * ff_mult),
            "ff_b1": store.zeros(f"{prefix}.ff_b1", 1, dim * ff_mult),
            "ff_w2": store.xavier(f"{prefix}.ff_w2", dim * ff_mult, dim),
            "ff_b2": store.zeros(f"{prefix}.ff_b2", 1, dim),
        })
    return SourceEncoderParams(
        token_emb=store.xavier("src.token_emb", vocab, dim),
        pos_emb=store.xavier("src.pos_emb", window + 2, dim),
        layers=layers,
        placeholder=store.xavier("src.placeholder", 1, dim),
    )


def encode_source(chunks: ChunkedTokens, params: SourceEncoderParams, heads: int, s_max: int) -> Array2D:
    """Transformer-encode each chunk, keep its CLS row, and stack the chunk
    vectors as the modality token sequence."""
    if not chunks.chunks:
        raise EmptyInput("no chunks to encode")
    cls_rows = []
    for chunk in chunks.chunks:
        x = add(take_rows(params.token_emb.value, list(chunk)), params.pos_emb.value)
        for layer in params.layers:
            x = layer_norm(add(x, multi_head_attention(x, x, layer["attn"], heads)))
            hidden = relu(add_bias_row(matmul(x, layer["ff_w1"].value), layer["ff_b1"].value))
            ff = add_bias_row(matmul(hidden, layer["ff_w2"].value), layer["ff_b2"].value)
            x = layer_norm(add(x, ff))
        cls_rows.append(slice_rows(x, 0, 1))
    return _cap_rows_maxpool(cls_rows, s_max)


# --- opcode encoder -------------------------------------------------------

@dataclass
class OpcodeEncoderParams:
    emb: object
    blocks: list[dict]


def init_opcode_encoder(store: ParamStore, dim: int, n_blocks: int) -> OpcodeEncoderParams:
    blocks = []
    for i in range(n_blocks):
        prefix = f"op.block{i}"
        gates = {}
        for gate in ("z", "i", "f", "o"):
            gates[f"w_{gate}"] = store.xavier(f"{prefix}.w_{gate}", dim, dim)
            gates[f"r_{gate}"] = store.xavier(f"{prefix}.r_{gate}", dim, dim)
            gates[f"b_{gate}"] = store.zeros(f"{prefix}.b_{gate}", 1, dim)
        blocks.append(gates)
    return OpcodeEncoderParams(emb=store.xavier("op.emb", len(OPCODE_VOCAB), dim), blocks=blocks)


def _slstm_block(inputs: list[Array2D], gates: dict, dim: int) -> list[Array2D]:
    """Exponential-gated recurrent cell with the log-space stabilizer:
    m_t = max(f_pre + m_{t-1}, i_pre) keeps exp() bounded while the ratio
    c_t / n_t stays exact."""
    h = constant(np.zeros((1, dim)))
    c = constant(np.zeros((1, dim)))
    n = None
    m = None
    outputs = []
    for x in inputs:
        def pre(gate):
            return add_bias_row(
                add(matmul(x, gates[f"w_{gate}"].value), matmul(h, gates[f"r_{gate}"].value)),
                gates[f"b_{gate}"].value,
            )

        z_pre, i_pre, f_pre, o_pre = pre("z"), pre("i"), pre("f"), pre("o")
        if m is None:
            m_new = i_pre
            i_gate = exp(sub(i_pre, m_new))
            c = mul(i_gate, tanh(z_pre))
            n = i_gate
        else:
            log_f = add(f_pre, m)
            m_new = maximum(log_f, i_pre)
            i_gate = exp(sub(i_pre, m_new))
            f_gate = exp(sub(log_f, m_new))
            c = add(mul(f_gate, c), mul(i_gate, tanh(z_pre)))
            n = add(mul(f_gate, n), i_gate)
        m = m_new
        h = mul(sigmoid(o_pre), div(c, n))
        outputs.append(h)
    return outputs


def encode_opcode(ids: list[int], params: OpcodeEncoderParams, s_max: int) -> Array2D:
    """Embed the mnemonic sequence, run the recurrent blocks, and emit
    hidden states subsampled to equally spaced positions plus the final
    state."""
    if not ids:
        raise EmptyInput("empty mnemonic sequence")
    dim = params.emb.value.cols
    emb = take_rows(params.emb.value, ids)
    states = [slice_rows(emb, t, t + 1) for t in range(len(ids))]
    for gates in params.blocks:
        states = _slstm_block(states, gates, dim)

    t_len = len(states)
    if t_len <= s_max:
        picked = states
    else:
        idx = np.linspace(0, t_len - 2, s_max - 1).round().astype(int)
        picked = [states[i] for i in sorted(set(idx.tolist()))] + [states[-1]]
    return concat_rows(picked)


# --- graph encoder --------------------------------------------------------

@dataclass
class GraphEncoderParams:
    op_emb: object
    exit_vec: object
    layers: list[dict]
    proj: list[dict]
    op_vocab: int = 256


def init_graph_encoder(
    store: ParamStore, dim: int, n_layers: int, heads: int, op_vocab: int = 256
) -> GraphEncoderParams:
    if dim % heads != 0:
        raise ValueError(f"graph heads ({heads}) must divide model dim ({dim})")
    d_head = dim // heads
    layers = []
    proj = []
    for i in range(n_layers):
        prefix = f"gnn.layer{i}"
        head_params = []
        for h in range(heads):
            head_params.append({
                "w_s": store.xavier(f"{prefix}.h{h}.w_s", dim, d_head),
                "w_t": store.xavier(f"{prefix}.h{h}.w_t", dim, d_head),
                "att": store.xavier(f"{prefix}.h{h}.att", d_head, 1),
            })
        layers.append({"heads": head_params})
        proj.append({
            "w_p": store.xavier(f"{prefix}.w_p", d_head * heads, dim),
            "b_p": store.zeros(f"{prefix}.b_p", 1, dim),
        })
    return GraphEncoderParams(
        op_emb=store.xavier("gnn.op_emb", op_vocab, dim),
        exit_vec=store.xavier("gnn.exit_vec", 1, dim),
        layers=layers,
        proj=proj,
        op_vocab=op_vocab,
    )


def node_features(cfg: Cfg, params: GraphEncoderParams) -> Array2D:
    """Mean-pooled opcode embeddings per block, hash-tokenized over the
    opcode vocabulary; the exit block gets its dedicated learned vector."""
    rows = []
    for block in cfg.blocks:
        if block.kind is BlockKind.Exit:
            rows.append(params.exit_vec.value)
            continue
        ids = hash_tokenize(block.opcode_text, params.op_vocab)
        rows.append(col_mean(take_rows(params.op_emb.value, ids)))
    return concat_rows(rows)


def _edge_index(cfg: Cfg) -> tuple[list[int], list[int], int]:
    """Map block ids to dense indices, add self-loops, return (src, dst)."""
    id_to_idx = {b.id: i for i, b in enumerate(cfg.blocks)}
    n = len(cfg.blocks)
    src, dst = [], []
    for s, d in cfg.edges:
        if s not in id_to_idx or d not in id_to_idx:
            raise DanglingEdge(f"edge ({s}, {d}) references a missing block")
        src.append(id_to_idx[s])
        dst.append(id_to_idx[d])
    for i in range(n):
        src.append(i)
        dst.append(i)
    return src, dst, n


def gatv2_layer(
    h: Array2D, src: list[int], dst: list[int], n: int, layer: dict, proj: dict, slope: float = 0.2
) -> Array2D:
    """One GATv2 pass: nonlinearity before the attention vector, softmax
    over each node's in-neighbors, heads concatenated then projected."""
    head_outs = []
    for hp in layer["heads"]:
        g_dst = matmul(h, hp["w_s"].value)
        g_src = matmul(h, hp["w_t"].value)
        combined = add(take_rows(g_dst, dst), take_rows(g_src, src))
        scores = matmul(leaky_relu(combined, slope), hp["att"].value)
        alpha = segment_softmax(scores, dst, n)
        messages = scale_rows(take_rows(g_src, src), alpha)
        head_outs.append(segment_sum(messages, dst, n))
    stacked = concat_cols(head_outs)
    return add_bias_row(matmul(stacked, proj["w_p"].value), proj["b_p"].value)


def encode_graph(cfg: Cfg, feats: Array2D, params: GraphEncoderParams, s_max: int) -> Array2D:
    """Stacked GATv2 layers, then a token sequence of the highest
    out-degree nodes plus the mean node vector."""
    if feats.rows != len(cfg.blocks):
        raise DanglingEdge(
            f"feature rows ({feats.rows}) != block count ({len(cfg.blocks)})"
        )
    src, dst, n = _edge_index(cfg)
    h = feats
    for layer, proj in zip(params.layers, params.proj):
        h = gatv2_layer(h, src, dst, n, layer, proj)

    out_degree = [0] * n
    id_to_idx = {b.id: i for i, b in enumerate(cfg.blocks)}
    for s, _ in cfg.edges:
        out_degree[id_to_idx[s]] += 1
    order = sorted(range(n), key=lambda i: (-out_degree[i], cfg.blocks[i].id))
    top = sorted(order[: min(n, s_max - 1)]) if s_max > 1 else []

    rows = [slice_rows(h, i, i + 1) for i in top]
    rows.append(col_mean(h))
    return concat_rows(rows)
