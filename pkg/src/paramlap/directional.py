"""Directional aggregation matrices and per-edge features for attention."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import UsageError
from .graph import Graph
from .laplacian import LaplacianParams, _params
from .spectral import spectral_view


def gradient_field(g: Graph, phi) -> sp.csr_matrix:
    """Sparse ``grad[i, j] = phi[j] - phi[i]`` on the edge pattern."""
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (g.n,):
        raise UsageError(f"phi must have length {g.n}")
    vals = phi[g.col_indices] - phi[g.row_ids]
    return sp.csr_matrix((vals, g.col_indices, g.row_offsets), shape=(g.n, g.n))


def b_av(field: sp.csr_matrix) -> sp.csr_matrix:
    """Directional average matrix ``|grad|``."""
    return abs(field)


def b_dx(field: sp.csr_matrix) -> sp.csr_matrix:
    """Directional derivative matrix ``grad - diag(grad @ 1)``; rows sum to zero."""
    rowsum = np.asarray(field.sum(axis=1)).ravel()
    return sp.csr_matrix(field - sp.diags(rowsum))


@dataclass(frozen=True)
class EdgeFeatureTable:
    """Two features per directed edge, aligned with the graph's CSR order.

    ``self_dx`` keeps the diagonal of ``B_dx`` for attention self-pairs.
    """

    rows: np.ndarray
    cols: np.ndarray
    features: np.ndarray  # (2|E|, 2): (b_av, b_dx)
    self_dx: np.ndarray
    params: LaplacianParams | None = None

    def self_features(self) -> np.ndarray:
        return np.column_stack([np.zeros_like(self.self_dx), self.self_dx])

    def to_csv(self) -> str:
        lines = ["i,j,b_av,b_dx"]
        lines += [f"{i},{j},{a!r},{d!r}" for i, j, (a, d)
                  in zip(self.rows.tolist(), self.cols.tolist(), self.features.tolist())]
        return "\n".join(lines) + "\n"


def features_from_phi(g: Graph, phi, params=None) -> EdgeFeatureTable:
    phi = np.asarray(phi, dtype=float)
    field = gradient_field(g, phi)
    grad = field.data  # CSR order matches g.col_indices
    rowsum = np.asarray(field.sum(axis=1)).ravel()
    feats = np.column_stack([np.abs(grad), grad])
    return EdgeFeatureTable(g.row_ids.copy(), g.col_indices.copy(), feats, -rowsum, params)


def edge_features(g: Graph, p, mode: str = "dense") -> EdgeFeatureTable:
    """Edge features from the first non-trivial eigenvector of ``L(alpha, gamma)``."""
    p = _params(p)
    view = spectral_view(g, p, mode=mode)
    return features_from_phi(g, view.phi1, p)
