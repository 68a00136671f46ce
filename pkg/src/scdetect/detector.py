"""sklearn-style estimator tying encoders, fusion, and the classifier head
together, with adaptive-moment training on the autodiff engine."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .autodiff import Array2D, backward
from .cfg import Cfg, build_cfg
from .checkpoint import load_checkpoint, save_checkpoint
from .config import Config
from .data import ContractSample, labels_matrix
from .metrics import MetricsReport, hamming_score, metrics_report
from .model.encoders import (
    encode_graph,
    encode_opcode,
    encode_source,
    init_graph_encoder,
    init_opcode_encoder,
    init_source_encoder,
    mnemonic_ids,
    node_features,
)
from .model.fusion import (
    bce_loss,
    classify_scores,
    fuse_modalities,
    init_classifier,
    init_fusion,
)
from .model.params import ParamStore
from .preprocess import ChunkedTokens, chunk_tokens, hash_tokenize, normalize_opcodes, normalize_source


class EmptyTestSet(Exception):
    pass


class CheckpointMismatch(Exception):
    pass


@dataclass
class SampleInputs:
    """Preprocessed modality inputs, cached per contract."""

    chunks: ChunkedTokens | None
    opcode_ids: list[int]
    cfg: Cfg


def prepare_sample(sample: ContractSample, cfg: Config) -> SampleInputs:
    program = sample.program
    mnemonics = normalize_opcodes(program).mnemonics
    ids = mnemonic_ids(mnemonics) if mnemonics else mnemonic_ids(("STOP",))
    if len(ids) > cfg.op_len_cap:
        keep = np.linspace(0, len(ids) - 1, cfg.op_len_cap).round().astype(int)
        ids = [ids[i] for i in keep]
    chunks = None
    if sample.source is not None and "source" in cfg.modality_list:
        text = normalize_source(sample.source, cfg.stopword_list).text
        token_ids = hash_tokenize(text, cfg.vocab)
        if token_ids:
            chunks = chunk_tokens(token_ids, cfg.window, cfg.stride)
    return SampleInputs(chunks=chunks, opcode_ids=ids, cfg=build_cfg(program))


class _Adam:
    """First-order adaptive-moment updates over a named parameter dict."""

    def __init__(self, params: dict, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = {k: np.zeros(p.shape) for k, p in params.items()}
        self.v = {k: np.zeros(p.shape) for k, p in params.items()}
        self.t = 0

    def step(self, grads: dict):
        self.t += 1
        b1c = 1 - self.beta1**self.t
        b2c = 1 - self.beta2**self.t
        for k, p in self.params.items():
            g = grads[k]
            self.m[k] = self.beta1 * self.m[k] + (1 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1 - self.beta2) * g * g
            p.value.data -= self.lr * (self.m[k] / b1c) / (np.sqrt(self.v[k] / b2c) + self.eps)


class MultimodalVulnerabilityDetector(BaseEstimator, ClassifierMixin):
    """Trimodal (source / opcode / CFG) multi-label detector.

    fit expects a list of ContractSample (labels may come from the samples
    or an explicit n x L matrix); predict emits thresholded label matrices.
    """

    def __init__(
        self,
        model_dim: int = 32,
        heads: int = 4,
        s_max: int = 16,
        labels: int = 5,
        lr: float = 1e-3,
        batch: int = 8,
        epochs: int = 50,
        seed: int = 0,
        tau: float = 0.5,
        window: int = 64,
        stride: int = 32,
        vocab: int = 4096,
        src_layers: int = 2,
        op_blocks: int = 2,
        gnn_layers: int = 3,
        hidden: int = 64,
        ff_mult: int = 2,
        op_len_cap: int = 256,
        stopwords: str = "function,contract",
        modalities: str = "source,opcode,graph",
        target_hs: float = 1.0,
        holdout_frac: float = 0.1,
        verbose: bool = False,
    ):
        self.model_dim = model_dim
        self.heads = heads
        self.s_max = s_max
        self.labels = labels
        self.lr = lr
        self.batch = batch
        self.epochs = epochs
        self.seed = seed
        self.tau = tau
        self.window = window
        self.stride = stride
        self.vocab = vocab
        self.src_layers = src_layers
        self.op_blocks = op_blocks
        self.gnn_layers = gnn_layers
        self.hidden = hidden
        self.ff_mult = ff_mult
        self.op_len_cap = op_len_cap
        self.stopwords = stopwords
        self.modalities = modalities
        self.target_hs = target_hs
        self.holdout_frac = holdout_frac
        self.verbose = verbose

    # -- construction ------------------------------------------------------

    def _config(self) -> Config:
        keys = {f: getattr(self, f) for f in (
            "model_dim", "heads", "s_max", "labels", "lr", "batch", "epochs",
            "seed", "tau", "window", "stride", "vocab", "src_layers",
            "op_blocks", "gnn_layers", "hidden", "ff_mult", "op_len_cap",
            "stopwords", "modalities", "target_hs",
        )}
        return Config(**keys)

    def _build(self, cfg: Config):
        rng = np.random.default_rng(cfg.seed)
        store = ParamStore(rng)
        names = cfg.modality_list
        self.store_ = store
        self.config_ = cfg
        self.modalities_ = names
        self.src_params_ = (
            init_source_encoder(store, cfg.model_dim, cfg.vocab, cfg.window, cfg.src_layers, cfg.ff_mult)
            if "source" in names else None
        )
        self.op_params_ = (
            init_opcode_encoder(store, cfg.model_dim, cfg.op_blocks) if "opcode" in names else None
        )
        self.gnn_params_ = (
            init_graph_encoder(store, cfg.model_dim, cfg.gnn_layers, cfg.heads)
            if "graph" in names else None
        )
        self.fusion_params_ = init_fusion(store, len(names), cfg.model_dim)
        self.clf_params_ = init_classifier(store, cfg.model_dim, cfg.hidden, cfg.labels, cfg.tau)

    # -- forward -----------------------------------------------------------

    def _forward(self, inputs: SampleInputs) -> Array2D:
        cfg = self.config_
        streams = []
        for name in self.modalities_:
            if name == "source":
                if inputs.chunks is None:
                    streams.append(self.src_params_.placeholder.value)
                else:
                    streams.append(
                        encode_source(inputs.chunks, self.src_params_, cfg.heads, cfg.s_max)
                    )
            elif name == "opcode":
                streams.append(encode_opcode(inputs.opcode_ids, self.op_params_, cfg.s_max))
            else:
                feats = node_features(inputs.cfg, self.gnn_params_)
                streams.append(encode_graph(inputs.cfg, feats, self.gnn_params_, cfg.s_max))
        fused = fuse_modalities(streams, self.fusion_params_, cfg.heads)
        return classify_scores(fused, self.clf_params_)

    # -- estimator API -----------------------------------------------------

    def fit(self, X: list[ContractSample], y=None):
        cfg = self._config()
        self._build(cfg)
        y = labels_matrix(X) if y is None else np.asarray(y, dtype=bool)
        if y.shape != (len(X), cfg.labels):
            raise ValueError(f"label matrix shape {y.shape} != ({len(X)}, {cfg.labels})")

        inputs = [prepare_sample(s, cfg) for s in X]
        order = np.random.default_rng(cfg.seed + 1).permutation(len(X))
        n_holdout = max(1, int(len(X) * self.holdout_frac)) if len(X) > 3 else 0
        holdout = list(order[:n_holdout])
        train = list(order[n_holdout:])

        optimizer = _Adam(self.store_.params, cfg.lr)
        shuffle_rng = np.random.default_rng(cfg.seed + 2)
        self.history_ = []

        for epoch in range(cfg.epochs):
            shuffle_rng.shuffle(train)
            total_loss = 0.0
            grad_acc = {k: np.zeros(p.shape) for k, p in self.store_.params.items()}
            pending = 0
            for i in train:
                p = self._forward(inputs[i])
                loss = bce_loss(p, y[i].astype(float))
                backward(loss)
                total_loss += loss.item()
                for k, prm in self.store_.params.items():
                    grad_acc[k] += prm.grad
                pending += 1
                if pending == cfg.batch:
                    optimizer.step({k: g / pending for k, g in grad_acc.items()})
                    grad_acc = {k: np.zeros(p.shape) for k, p in self.store_.params.items()}
                    pending = 0
            if pending:
                optimizer.step({k: g / pending for k, g in grad_acc.items()})

            mean_loss = total_loss / max(1, len(train))
            hs = None
            if holdout:
                pred = np.stack([
                    self._forward(inputs[i]).data[0] >= cfg.tau for i in holdout
                ])
                hs = hamming_score(y[holdout], pred)
            self.history_.append({"epoch": epoch, "loss": mean_loss, "holdout_hs": hs})
            if self.verbose:
                hs_txt = f"{hs:.4f}" if hs is not None else "n/a"
                print(f"epoch {epoch:3d}  loss {mean_loss:.4f}  holdout HS {hs_txt}")
            if hs is not None and hs >= cfg.target_hs:
                break
        return self

    def predict_proba(self, X: list[ContractSample]) -> np.ndarray:
        cfg = self.config_
        return np.stack([self._forward(prepare_sample(s, cfg)).data[0] for s in X])

    def predict(self, X: list[ContractSample]) -> np.ndarray:
        return self.predict_proba(X) >= self.config_.tau

    def evaluate(self, X: list[ContractSample], y=None) -> MetricsReport:
        if not X:
            raise EmptyTestSet("cannot evaluate on an empty test set")
        y = labels_matrix(X) if y is None else np.asarray(y, dtype=bool)
        if y.shape[1] != self.config_.labels:
            raise CheckpointMismatch(
                f"test set has {y.shape[1]} labels, model expects {self.config_.labels}"
            )
        return metrics_report(y, self.predict(X))

    # -- persistence -------------------------------------------------------

    def save(self, path: str) -> None:
        save_checkpoint(path, self.store_.as_arrays(), meta=asdict(self.config_))

    @classmethod
    def load(cls, path: str) -> "MultimodalVulnerabilityDetector":
        arrays, meta = load_checkpoint(path)
        det = cls(**{k: v for k, v in meta.items()})
        det._build(det._config())
        try:
            det.store_.load_arrays(arrays)
        except (KeyError, ValueError) as e:
            raise CheckpointMismatch(str(e)) from None
        return det
