"""GCN, GAT, PD-GCN and PD-GAT node classifiers with full-batch training."""
from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from scipy.stats import rankdata

from ..directional import edge_features
from ..errors import NumericalError, UsageError
from ..graph import Graph, require_connected
from ..laplacian import LaplacianParams
from ..rewire import rewire
from ..synthgen import Dataset
from . import tensor as T
from .layers import AttentionStructure, gcn_operator, pd_gat_layer, pd_operator, _attend

ARCHS = ("mlp", "gcn", "gat", "pd-gcn", "pd-gat")

# seed sub-streams
_STREAM_INIT, _STREAM_DROPOUT = 10, 11


@dataclass
class ModelConfig:
    arch: str = "pd-gcn"
    layers: int = 2
    hidden: int = 64
    heads: int = 8
    alpha: float = 1.0
    gamma: float = 1.0
    sep: bool = False
    residual: bool = False
    dropout: float = 0.1
    lr: float = 0.01
    weight_decay: float = 0.001
    epochs: int = 300
    seed: int = 0
    leaky_slope: float = 0.2
    rewire: bool = False
    rewire_alpha: float = 1.0
    rewire_gamma: float = 1.0
    metric: str = "accuracy"

    def __post_init__(self):
        if self.arch not in ARCHS:
            raise UsageError(f"arch must be one of {ARCHS}, got {self.arch!r}")
        if self.layers < 1:
            raise UsageError("need at least one layer")
        if not 0.0 <= self.dropout < 1.0:
            raise UsageError("dropout must lie in [0, 1)")
        if self.arch in ("gat", "pd-gat") and self.hidden % self.heads:
            raise UsageError("hidden must be divisible by heads")
        if self.metric not in ("accuracy", "roc_auc"):
            raise UsageError("metric must be accuracy or roc_auc")
        LaplacianParams(self.alpha, self.gamma)

    @property
    def params(self) -> LaplacianParams:
        return LaplacianParams(self.alpha, self.gamma)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise UsageError(f"unknown model config keys: {sorted(unknown)}")
        return cls(**d)


def glorot(rng, fan_in, fan_out, shape=None):
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return T.parameter(rng.uniform(-limit, limit, size=shape or (fan_in, fan_out)))


class GraphModel:
    """Parameters plus the precomputed graph structures for one architecture."""

    def __init__(self, cfg: ModelConfig, graph: Graph, in_dim: int, n_classes: int):
        self.cfg = cfg
        self.graph = graph
        self.in_dim = in_dim
        self.n_classes = n_classes
        self.rewire_report = None
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, _STREAM_INIT]))
        if cfg.rewire and cfg.arch != "mlp":
            require_connected(graph)
            self.graph, self.rewire_report = rewire(
                graph, LaplacianParams(cfg.rewire_alpha, cfg.rewire_gamma))
        g = self.graph
        if cfg.arch == "gcn":
            self.op = gcn_operator(g)
        elif cfg.arch == "pd-gcn":
            self.op = pd_operator(g, cfg.params)
        elif cfg.arch == "gat":
            self.st = AttentionStructure.build(g)
        elif cfg.arch == "pd-gat":
            require_connected(g)
            self.features = edge_features(g, cfg.params)
            self.st = AttentionStructure.build(g, self.features, self_loops=not cfg.sep)
        self.dims = [in_dim] + [cfg.hidden] * (cfg.layers - 1) + [n_classes]
        self.weights = [self._init_layer(rng, a, b, last=(k == cfg.layers - 1))
                        for k, (a, b) in enumerate(zip(self.dims[:-1], self.dims[1:]))]

    # -- parameters ------------------------------------------------------

    def _init_layer(self, rng, d_in, d_out, last):
        cfg = self.cfg
        w = {}
        if cfg.arch in ("mlp", "gcn", "pd-gcn"):
            w["w"] = glorot(rng, d_in, d_out)
        elif cfg.arch == "gat":
            heads = 1 if last else cfg.heads
            dh = d_out // heads
            w["w"] = glorot(rng, d_in, d_out)
            w["a_dst"] = glorot(rng, 2 * dh, 1, (heads, dh))
            w["a_src"] = glorot(rng, 2 * dh, 1, (heads, dh))
        else:
            heads, hidden = cfg.heads, cfg.hidden
            dh = hidden // heads
            w["w_n"] = glorot(rng, d_in, hidden)
            w["w_msg"] = glorot(rng, d_in, hidden)
            w["a_dst"] = glorot(rng, 3 * dh, 1, (heads, dh))
            w["a_src"] = glorot(rng, 3 * dh, 1, (heads, dh))
            w["a_e"] = glorot(rng, 3 * dh, 1, (heads, dh))
            w["w_e"] = glorot(rng, 2, hidden)
            if cfg.sep:
                w["w_ego"] = glorot(rng, d_in, hidden)
            w["w_out"] = glorot(rng, 2 * hidden if cfg.sep else hidden, d_out)
        if cfg.residual and not last:
            if d_in != d_out:
                w["w_res"] = glorot(rng, d_in, d_out)
        return w

    def parameters(self) -> list:
        return [t for layer in self.weights for _, t in sorted(layer.items())]

    def get_state(self) -> list:
        return [t.data.copy() for t in self.parameters()]

    def set_state(self, state) -> None:
        for t, v in zip(self.parameters(), state):
            t.data = v.copy()

    # -- forward ---------------------------------------------------------

    def forward(self, x, training=False, rng=None) -> T.Tensor:
        """Logits for every node."""
        cfg = self.cfg
        h = T.as_tensor(x)
        for k, w in enumerate(self.weights):
            last = k == len(self.weights) - 1
            h_in = T.dropout(h, cfg.dropout, rng, training)
            if cfg.arch == "mlp":
                out = T.matmul(h_in, w["w"])
            elif cfg.arch in ("gcn", "pd-gcn"):
                out = T.spmm(self.op, T.matmul(h_in, w["w"]))
            elif cfg.arch == "gat":
                heads = 1 if last else cfg.heads
                out = _attend(h_in, self.st, w["w"], w["a_dst"], w["a_src"], None, heads,
                              leaky_slope=cfg.leaky_slope, att_dropout=cfg.dropout,
                              rng=rng, training=training)
            else:
                out = pd_gat_layer(h_in, self.st, w, cfg.heads, sep=cfg.sep,
                                   leaky_slope=cfg.leaky_slope, att_dropout=cfg.dropout,
                                   rng=rng, training=training)
            if not last:
                if cfg.arch != "pd-gat":  # PD-GAT applies its activation inside the heads
                    out = T.relu(out)
                if cfg.residual:
                    skip = T.matmul(h, w["w_res"]) if "w_res" in w else h
                    out = T.add(out, skip)
            h = out
        return h

    def predict_proba(self, x) -> np.ndarray:
        return T.softmax(self.forward(x, training=False)).data


# -- training ----------------------------------------------------------------

@dataclass
class TrainReport:
    train_loss: list = field(default_factory=list)
    train_metric: list = field(default_factory=list)
    val_metric: list = field(default_factory=list)
    test_metric: list = field(default_factory=list)
    best_epoch: int = -1
    val_at_best: float = math.nan
    test_at_best: float = math.nan
    metric: str = "accuracy"
    wall_time: float = 0.0
    config: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self, include_timing=False) -> dict:
        d = asdict(self)
        if not include_timing:
            d.pop("wall_time")
        return d

    def to_json(self, include_timing=False) -> str:
        return json.dumps(self.to_dict(include_timing), indent=2, sort_keys=True)

    def curves_csv(self) -> str:
        lines = ["epoch,train_loss,train_metric,val_metric,test_metric"]
        for e, row in enumerate(zip(self.train_loss, self.train_metric,
                                    self.val_metric, self.test_metric)):
            lines.append(f"{e}," + ",".join(repr(float(v)) for v in row))
        return "\n".join(lines) + "\n"


class Adam:
    def __init__(self, params, lr=0.01, betas=(0.9, 0.999), eps=1e-8, weight_decay=0.0):
        self.params = params
        self.lr, self.b1, self.b2, self.eps, self.wd = lr, betas[0], betas[1], eps, weight_decay
        self.m = [np.zeros_like(p.data) for p in params]
        self.v = [np.zeros_like(p.data) for p in params]
        self.t = 0

    def step(self):
        self.t += 1
        c1 = 1.0 - self.b1 ** self.t
        c2 = 1.0 - self.b2 ** self.t
        for p, m, v in zip(self.params, self.m, self.v):
            g = np.zeros_like(p.data) if p.grad is None else p.grad
            if self.wd:
                g = g + self.wd * p.data  # L2 penalty
            m *= self.b1
            m += (1 - self.b1) * g
            v *= self.b2
            v += (1 - self.b2) * g * g
            p.data = p.data - self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def one_hot(labels, c) -> np.ndarray:
    z = np.zeros((len(labels), c))
    z[np.arange(len(labels)), labels] = 1.0
    return z


def accuracy(scores, labels, mask) -> float:
    mask = np.asarray(mask, dtype=bool)
    pred = np.argmax(scores, axis=1)  # first maximum wins ties
    return float(np.mean(pred[mask] == np.asarray(labels)[mask]))


def roc_auc(scores, labels) -> float:
    """Two-class AUC from ranks (ties get average rank)."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    pos = labels == 1
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        return math.nan
    ranks = rankdata(scores)
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def evaluate(model: GraphModel, data: Dataset, mask, metric="accuracy", probs=None) -> float:
    if probs is None:
        probs = model.predict_proba(data.features)
    mask = np.asarray(mask, dtype=bool)
    if metric == "accuracy":
        return accuracy(probs, data.labels, mask)
    if metric == "roc_auc":
        if probs.shape[1] != 2:
            raise UsageError("roc_auc needs a two-class task")
        return roc_auc(probs[mask, 1], data.labels[mask])
    raise UsageError(f"unknown metric {metric!r}")


def _metric(probs, data, mask, metric):
    if metric == "accuracy":
        return accuracy(probs, data.labels, mask)
    return roc_auc(probs[mask, 1], data.labels[mask])


def train(cfg: ModelConfig, data: Dataset, return_model=False):
    """Full-batch Adam training with best-epoch selection on validation (ties: earliest)."""
    start = time.perf_counter()
    if not data.train_mask.any():
        raise UsageError("empty training mask")
    if cfg.metric == "roc_auc" and data.num_classes != 2:
        raise UsageError("roc_auc needs a two-class task")
    model = GraphModel(cfg, data.graph, data.features.shape[1], data.num_classes)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, _STREAM_DROPOUT]))
    targets = one_hot(data.labels, data.num_classes)
    params = model.parameters()
    opt = Adam(params, lr=cfg.lr, weight_decay=cfg.weight_decay)
    report = TrainReport(metric=cfg.metric, config=asdict(cfg))
    if model.rewire_report is not None:
        report.diagnostics["rewire"] = {"gradient_node": model.rewire_report.gradient_node,
                                        "added_edges": len(model.rewire_report.added_edges)}
    best_state, best_score = None, -math.inf
    for epoch in range(cfg.epochs):
        for p in params:
            p.zero_grad()
        probs = T.softmax(model.forward(data.features, training=True, rng=rng))
        loss = T.cross_entropy(probs, targets, data.train_mask)
        if not np.isfinite(loss.data):
            report.diagnostics.update({"failed_epoch": epoch, "loss": repr(float(loss.data))})
            raise NumericalError(f"non-finite loss at epoch {epoch}")
        loss.backward()
        opt.step()
        report.train_loss.append(float(loss.data))
        eval_probs = model.predict_proba(data.features)
        report.train_metric.append(_metric(eval_probs, data, data.train_mask, cfg.metric))
        val = _metric(eval_probs, data, data.val_mask, cfg.metric) if data.val_mask.any() else math.nan
        report.val_metric.append(val)
        report.test_metric.append(_metric(eval_probs, data, data.test_mask, cfg.metric)
                                  if data.test_mask.any() else math.nan)
        # without validation nodes the training metric selects the epoch
        score = val if data.val_mask.any() else report.train_metric[-1]
        if report.best_epoch < 0 or score > best_score:
            report.best_epoch, report.val_at_best, best_score = epoch, val, score
            report.test_at_best = report.test_metric[-1]
            if return_model:
                best_state = model.get_state()
    report.wall_time = time.perf_counter() - start
    if return_model:
        if best_state is not None:
            model.set_state(best_state)
        return report, model
    return report
