"""Topology-guided rewiring toward the gradient node of the spectral embedding."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .graph import Graph, require_connected
from .laplacian import LaplacianParams, _params
from .spectral import SIGN_TIE_RTOL, EigvecView, spectral_view

# slack on the half-span test so exact ties (e.g. symmetric paths) are not lost to rounding
THRESHOLD_RTOL = 1e-10


@dataclass
class RewireReport:
    gradient_node: int
    added_edges: list
    params: dict
    span: float
    threshold: float
    degenerate: bool = False
    notes: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def gradient_node(view_or_phi) -> int:
    """Index of the largest entry of phi_1; ties go to the lowest id."""
    phi = view_or_phi.phi1 if isinstance(view_or_phi, EigvecView) else np.asarray(view_or_phi)
    top = phi.max()
    tol = abs(top) * SIGN_TIE_RTOL
    return int(np.flatnonzero(phi >= top - tol)[0])


def rewire_candidates(g: Graph, phi) -> tuple[int, np.ndarray, float, float]:
    """Nodes to link to the gradient node under a fixed embedding ``phi``.

    A node qualifies when it is not the gradient node, not already adjacent
    to it, and sits at least half the embedding span below it.
    """
    phi = np.asarray(phi, dtype=float)
    v = gradient_node(phi)
    span = float(phi.max() - phi.min())
    threshold = 0.5 * span
    below = phi[v] - phi >= threshold - THRESHOLD_RTOL * span
    below[v] = False
    below[g.neighbors(v)] = False
    return v, np.flatnonzero(below), span, threshold


def rewire_with_phi(g: Graph, phi, params=None) -> tuple[Graph, RewireReport]:
    v, cand, span, threshold = rewire_candidates(g, phi)
    added = [(int(v), int(u)) for u in cand]
    out = g.add_edges(np.array(added, dtype=np.int64).reshape(-1, 2)) if added else g
    p = {} if params is None else {"alpha": params.alpha, "gamma": params.gamma}
    return out, RewireReport(int(v), [list(e) for e in added], p, span, threshold)


def rewire(g: Graph, p=LaplacianParams(1.0, 1.0)) -> tuple[Graph, RewireReport]:
    """Connect the gradient node to every distant, non-adjacent node.

    The embedding is computed once on the input graph.
    """
    require_connected(g)
    p = _params(p)
    view = spectral_view(g, p)
    out, report = rewire_with_phi(g, view.phi1, p)
    if view.degenerate:
        report.degenerate = True
        report.notes.append("first non-trivial eigenvalue is repeated; embedding is one representative")
    return out, report
