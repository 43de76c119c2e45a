"""Synthetic homophily graphs grown by class-aware preferential attachment."""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DataError, UsageError
from .graph import Graph, read_edge_list, write_edge_list

# sub-stream ids for seed splitting
_STREAM_GRAPH, _STREAM_FEATURES, _STREAM_SPLIT = 0, 1, 2


def substream(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), stream]))


@dataclass(frozen=True)
class SynthConfig:
    n: int
    c: int
    mu: float
    m: int = 2
    feature_dim: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.c < 2:
            raise UsageError("need at least two classes")
        if self.m < 1:
            raise UsageError("m must be a positive integer")
        if self.n < self.m + 1:
            raise UsageError("n must be at least m + 1")
        if not 0.0 <= self.mu <= 1.0:
            raise UsageError("mu must lie in [0, 1]")
        if self.feature_dim < 1:
            raise UsageError("feature_dim must be positive")


@dataclass
class Dataset:
    graph: Graph
    features: np.ndarray
    labels: np.ndarray
    train_mask: np.ndarray
    val_mask: np.ndarray
    test_mask: np.ndarray
    num_classes: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.num_classes:
            self.num_classes = int(self.labels.max()) + 1
        n = self.graph.n
        for name in ("features", "labels", "train_mask", "val_mask", "test_mask"):
            if len(getattr(self, name)) != n:
                raise DataError(f"{name} has {len(getattr(self, name))} rows, graph has {n} nodes")
        total = self.train_mask.astype(int) + self.val_mask + self.test_mask
        if np.any(total > 1):
            raise DataError("split masks overlap")


def class_distance(c: int, z1: int, z2: int) -> int:
    """Distance between two classes placed on a ring of ``c`` positions."""
    if z1 == z2:
        raise UsageError("class distance is only defined for distinct classes")
    if not (0 <= z1 < c and 0 <= z2 < c):
        raise UsageError("class ids must lie in [0, c)")
    diff = abs(z1 - z2)
    return min(diff, c - diff)


def distance_weights(c: int) -> np.ndarray:
    """Weights ``w[d]`` for ring distances ``d = 1..c//2``, ``w ~ exp(-d)``, summing to 1.

    Index 0 is unused and set to 0.
    """
    d = np.arange(1, c // 2 + 1)
    w = np.exp(-d.astype(float))
    return np.concatenate([[0.0], w / w.sum()])


def generate_graph(cfg: SynthConfig, rng: np.random.Generator) -> tuple[Graph, np.ndarray, list]:
    n, c, m, mu = cfg.n, cfg.c, cfg.m, cfg.mu
    w = distance_weights(c)
    labels = np.empty(n, dtype=np.int64)
    degree = np.zeros(n, dtype=float)
    edges = []
    log = []
    seed_nodes = m + 1
    labels[:seed_nodes] = rng.integers(0, c, size=seed_nodes)
    for u in range(seed_nodes):
        for v in range(u + 1, seed_nodes):
            edges.append((u, v))
    degree[:seed_nodes] = m
    for i in range(seed_nodes, n):
        zi = int(rng.integers(0, c))
        labels[i] = zi
        zj = labels[:i]
        diff = np.abs(zj - zi)
        dist = np.minimum(diff, c - diff)
        weight = np.where(dist == 0, mu, (1.0 - mu) * w[dist])
        p = degree[:i] * weight
        total = p.sum()
        nonzero = int(np.count_nonzero(p))
        if total <= 0 or nonzero < m:
            # not enough eligible targets; fall back to uniform attachment
            log.append({"node": i, "eligible": nonzero, "fallback": "uniform"})
            chosen = rng.choice(i, size=m, replace=False)
        else:
            chosen = rng.choice(i, size=m, replace=False, p=p / total)
        for j in np.sort(chosen):
            edges.append((int(j), i))
            degree[j] += 1
        degree[i] = m
    return Graph.from_edges(n, edges), labels, log


def sample_features(labels, cfg: SynthConfig, rng: np.random.Generator | None = None) -> np.ndarray:
    """Unit-covariance Gaussians with class means on the unit circle (first two dims)."""
    if rng is None:
        rng = substream(cfg.seed, _STREAM_FEATURES)
    labels = np.asarray(labels)
    means = np.zeros((cfg.c, cfg.feature_dim))
    angle = 2.0 * np.pi * np.arange(cfg.c) / cfg.c
    means[:, 0] = np.cos(angle)
    if cfg.feature_dim > 1:
        means[:, 1] = np.sin(angle)
    return means[labels] + rng.standard_normal((len(labels), cfg.feature_dim))


def random_split(n: int, rng: np.random.Generator, train=0.6, val=0.2):
    perm = rng.permutation(n)
    n_train = int(round(train * n))
    n_val = int(round(val * n))
    masks = [np.zeros(n, dtype=bool) for _ in range(3)]
    masks[0][perm[:n_train]] = True
    masks[1][perm[n_train:n_train + n_val]] = True
    masks[2][perm[n_train + n_val:]] = True
    return tuple(masks)


def generate(cfg: SynthConfig) -> Dataset:
    """Graph, features, labels and a 60/20/20 split, all derived from ``cfg.seed``."""
    graph, labels, log = generate_graph(cfg, substream(cfg.seed, _STREAM_GRAPH))
    feats = sample_features(labels, cfg, substream(cfg.seed, _STREAM_FEATURES))
    train, val, test = random_split(cfg.n, substream(cfg.seed, _STREAM_SPLIT))
    meta = {"config": asdict(cfg), "generation_log": log}
    return Dataset(graph, feats, labels, train, val, test, cfg.c, meta)


# -- bundle I/O --------------------------------------------------------------

def save_bundle(data: Dataset, directory) -> None:
    os.makedirs(directory, exist_ok=True)
    write_edge_list(data.graph, os.path.join(directory, "graph.edges"))
    with open(os.path.join(directory, "features.csv"), "w", newline="\n") as fh:
        for row in data.features:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")
    with open(os.path.join(directory, "labels.txt"), "w", newline="\n") as fh:
        fh.write("".join(f"{int(z)}\n" for z in data.labels))
    splits = {name: np.flatnonzero(mask).tolist() for name, mask
              in (("train", data.train_mask), ("val", data.val_mask), ("test", data.test_mask))}
    with open(os.path.join(directory, "splits.json"), "w", newline="\n") as fh:
        json.dump(splits, fh)
    meta = dict(data.meta)
    meta.setdefault("num_classes", data.num_classes)
    with open(os.path.join(directory, "meta.json"), "w", newline="\n") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)


def load_bundle(directory) -> Dataset:
    try:
        graph = read_edge_list(os.path.join(directory, "graph.edges"))
        feats = np.loadtxt(os.path.join(directory, "features.csv"), delimiter=",", ndmin=2)
        labels = np.loadtxt(os.path.join(directory, "labels.txt"), dtype=np.int64, ndmin=1)
        with open(os.path.join(directory, "splits.json")) as fh:
            splits = json.load(fh)
        meta = {}
        meta_path = os.path.join(directory, "meta.json")
        if os.path.exists(meta_path):
            with open(meta_path) as fh:
                meta = json.load(fh)
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read dataset bundle {directory}: {exc}") from exc
    n = len(labels)
    if graph.n < n:  # trailing isolated nodes never appear in an edge list
        graph = Graph(n, np.concatenate([graph.row_offsets,
                                         np.full(n - graph.n, graph.row_offsets[-1])]),
                      graph.col_indices)
    masks = []
    for name in ("train", "val", "test"):
        mask = np.zeros(n, dtype=bool)
        mask[np.asarray(splits.get(name, []), dtype=np.int64)] = True
        masks.append(mask)
    c = int(meta.get("num_classes", meta.get("config", {}).get("c", labels.max() + 1)))
    return Dataset(graph, feats, labels, *masks, num_classes=c, meta=meta)
