"""Homophily measures for labelled graphs."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import UsageError
from .graph import Graph


@dataclass
class HomophilyReport:
    h_edge: float
    h_node: float
    h_class: float
    h_edge_adjusted: float
    label_informativeness: float
    h_agg: float
    flags: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        # JSON has no NaN; degenerate metrics are reported as null plus a flag
        return {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in d.items()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _xlogx(p):
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    pos = p > 0
    out[pos] = p[pos] * np.log(p[pos])
    return out


def edge_homophily(g: Graph, labels) -> float:
    z = np.asarray(labels)
    if g.edge_count == 0:
        return math.nan
    return float(np.count_nonzero(z[g.row_ids] == z[g.col_indices]) / (2 * g.edge_count))


def aggregation_homophily(g: Graph, labels, c: int) -> float:
    """Share of nodes whose mean post-aggregation similarity to their own class
    is at least the mean similarity to other classes.

    Similarity is ``S = (A + I) Z ((A + I) Z)^T``; class means are taken through
    per-class column sums so ``S`` is never formed.
    """
    z = np.asarray(labels)
    n = g.n
    onehot = np.zeros((n, c))
    onehot[np.arange(n), z] = 1.0
    agg = g.adjacency @ onehot + onehot  # (A + I) Z
    class_sum = np.zeros((c, c))
    np.add.at(class_sum, z, agg)  # row k: sum of agg rows of class-k nodes
    counts = np.bincount(z, minlength=c).astype(float)
    total = class_sum.sum(axis=0)
    same_sum = class_sum[z]
    same_mean = np.einsum("ij,ij->i", agg, same_sum) / counts[z]
    other_count = n - counts[z]
    other_sum = np.einsum("ij,ij->i", agg, total[None, :] - same_sum)
    with np.errstate(invalid="ignore", divide="ignore"):
        other_mean = other_sum / other_count
    # no nodes of another class: the comparison holds vacuously
    ok = np.where(other_count == 0, True, same_mean >= other_mean - 1e-12 * np.abs(same_mean))
    return float(np.count_nonzero(ok) / n)


def metrics(g: Graph, labels, c: int | None = None) -> HomophilyReport:
    z = np.asarray(labels, dtype=np.int64)
    if z.shape != (g.n,):
        raise UsageError(f"labels must have length {g.n}")
    if c is None:
        c = int(z.max()) + 1
    if z.min() < 0 or z.max() >= c:
        raise UsageError(f"labels must lie in [0, {c})")
    flags = []
    n, two_e = g.n, 2 * g.edge_count
    r, col = g.row_ids, g.col_indices
    same = z[r] == z[col]
    deg = g.degrees

    h_edge = edge_homophily(g, z)

    same_per_node = np.bincount(r, weights=same, minlength=n)
    has_nb = deg > 0
    if not np.all(has_nb):
        flags.append(f"h_node skipped {int(np.count_nonzero(~has_nb))} isolated node(s)")
    h_node = float(np.mean(same_per_node[has_nb] / deg[has_nb])) if has_nb.any() else math.nan

    counts = np.bincount(z, minlength=c)
    deg_per_class = np.bincount(z, weights=deg, minlength=c)
    same_per_class = np.bincount(z, weights=same_per_node, minlength=c)
    present = deg_per_class > 0
    h_c = np.zeros(c)
    h_c[present] = same_per_class[present] / deg_per_class[present]
    if c < 2:
        flags.append("single class: class homophily undefined")
        h_class = math.nan
    else:
        h_class = float(np.sum(np.maximum(h_c - counts / n, 0.0)) / (c - 1))

    p_c = deg_per_class / two_e if two_e else np.zeros(c)
    sq = float(np.sum(p_c ** 2))
    if 1.0 - sq <= 1e-15:
        flags.append("single effective class: adjusted edge homophily undefined")
        h_adj = math.nan
    else:
        h_adj = (h_edge - sq) / (1.0 - sq)

    joint = np.zeros((c, c))
    np.add.at(joint, (z[r], z[col]), 1.0)
    joint = joint / two_e if two_e else joint
    denom = float(np.sum(_xlogx(p_c)))
    if denom == 0.0:
        flags.append("single effective class: label informativeness undefined")
        li = math.nan
    else:
        li = 2.0 - float(np.sum(_xlogx(joint))) / denom

    h_agg = aggregation_homophily(g, z, c)
    return HomophilyReport(h_edge, h_node, h_class, h_adj, li, h_agg, flags)
