"""The parameterized normalized Laplacian family and its adjacency counterpart.

For ``alpha in [0, 1]`` and ``gamma in (0, 1]``::

    D_g     = gamma * D + (1 - gamma) * I
    L(a, g) = gamma * D_g^{-a} L D_g^{a - 1}
    P(a, g) = I - L(a, g)

``L(1, 1)`` is the random-walk Laplacian and ``L(1/2, 1)`` the symmetric one.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ParameterError, UsageError
from .graph import Graph, LaplacianOperator, combinatorial_laplacian


@dataclass(frozen=True)
class LaplacianParams:
    alpha: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        a, g = float(self.alpha), float(self.gamma)
        if not 0.0 <= a <= 1.0:
            raise ParameterError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not 0.0 < g <= 1.0:
            raise ParameterError(f"gamma must lie in (0, 1], got {self.gamma}")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "gamma", g)


def _params(p) -> LaplacianParams:
    if isinstance(p, LaplacianParams):
        return p
    if isinstance(p, dict):
        return LaplacianParams(**p)
    return LaplacianParams(*p)


def diag_gamma(g: Graph, p) -> np.ndarray:
    """Entries of ``gamma * D + (1 - gamma) * I``; strictly positive for connected graphs."""
    p = _params(p)
    d = p.gamma * g.degrees + (1.0 - p.gamma)
    if np.any(d <= 0):
        # only reachable with gamma == 1 and an isolated node
        raise ParameterError("gamma = 1 with an isolated node gives a singular diagonal")
    return d


def diag_power(entries: np.ndarray, power: float) -> np.ndarray:
    """Entrywise ``entries ** power`` through exp/log (entries are positive)."""
    if power == 0:
        return np.ones_like(entries, dtype=float)
    return np.exp(power * np.log(entries))


def param_laplacian(g: Graph, p) -> LaplacianOperator:
    p = _params(p)
    dg = diag_gamma(g, p)
    return LaplacianOperator(g, left=diag_power(dg, -p.alpha),
                             right=diag_power(dg, p.alpha - 1.0), scale=p.gamma)


def param_adjacency(g: Graph, p) -> LaplacianOperator:
    p = _params(p)
    dg = diag_gamma(g, p)
    return LaplacianOperator(g, left=diag_power(dg, -p.alpha),
                             right=diag_power(dg, p.alpha - 1.0), scale=-p.gamma, shift=1.0)


def param_adjacency_matrix(g: Graph, p) -> sp.csr_matrix:
    """Sparse ``P(alpha, gamma)`` with an explicit diagonal (the aggregation matrix of PD-GCN)."""
    p = _params(p)
    dg = diag_gamma(g, p)
    left = diag_power(dg, -p.alpha)
    right = diag_power(dg, p.alpha - 1.0)
    r, c = g.row_ids, g.col_indices
    off = p.gamma * left[r] * right[c]
    diag = 1.0 - p.gamma * left * g.degrees * right
    rows = np.concatenate([r, np.arange(g.n)])
    cols = np.concatenate([c, np.arange(g.n)])
    vals = np.concatenate([off, diag])
    return sp.csr_matrix((vals, (rows, cols)), shape=(g.n, g.n))


def limit_check(g: Graph, alpha: float, gammas) -> np.ndarray:
    """Max-abs deviation of ``L(alpha, gamma) / gamma`` from ``L`` for each gamma.

    As gamma shrinks the scaled operator converges to the combinatorial
    Laplacian, so the returned sequence should be non-increasing.
    """
    gammas = np.asarray(gammas, dtype=float)
    if np.any(np.diff(gammas) >= 0):
        raise UsageError("gammas must be strictly decreasing")
    lap = combinatorial_laplacian(g).toarray()
    out = np.empty(len(gammas))
    for k, gam in enumerate(gammas):
        scaled = param_laplacian(g, LaplacianParams(alpha, gam)).toarray() / gam
        out[k] = np.max(np.abs(scaled - lap))
    return out
