from .params import ParamStore
from .attention import AttentionParams, init_attention, multi_head_attention
from .encoders import (
    OPCODE_INDEX,
    OPCODE_VOCAB,
    DanglingEdge,
    EmptyInput,
    GraphEncoderParams,
    OpcodeEncoderParams,
    SourceEncoderParams,
    encode_graph,
    encode_opcode,
    encode_source,
    init_graph_encoder,
    init_opcode_encoder,
    init_source_encoder,
    mnemonic_ids,
    node_features,
)
from .fusion import (
    ClassifierParams,
    FusionParams,
    Prediction,
    adaptive_fuse,
    aggregate,
    bce_loss,
    classify,
    classify_scores,
    cross_attend,
    fuse_modalities,
    init_classifier,
    init_fusion,
    self_attend,
)

__all__ = [
    "ParamStore",
    "AttentionParams",
    "init_attention",
    "multi_head_attention",
    "OPCODE_INDEX",
    "OPCODE_VOCAB",
    "DanglingEdge",
    "EmptyInput",
    "GraphEncoderParams",
    "OpcodeEncoderParams",
    "SourceEncoderParams",
    "encode_graph",
    "encode_opcode",
    "encode_source",
    "init_graph_encoder",
    "init_opcode_encoder",
    "init_source_encoder",
    "mnemonic_ids",
    "node_features",
    "ClassifierParams",
    "FusionParams",
    "Prediction",
    "adaptive_fuse",
    "aggregate",
    "bce_loss",
    "classify",
    "classify_scores",
    "cross_attend",
    "fuse_modalities",
    "init_classifier",
    "init_fusion",
    "self_attend",
]
