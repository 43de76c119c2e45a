"""Graph layers built on the differentiation core."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..directional import EdgeFeatureTable
from ..errors import DataError, UsageError
from ..graph import Graph
from ..laplacian import param_adjacency_matrix
from . import tensor as T


def gcn_operator(g: Graph) -> sp.csr_matrix:
    """``D~^{-1/2} (A + I) D~^{-1/2}`` with ``D~`` the degrees of the self-looped graph."""
    a = g.adjacency.astype(float) + sp.identity(g.n, format="csr")
    s = 1.0 / np.sqrt(g.degrees + 1.0)
    return sp.csr_matrix(sp.diags(s) @ a @ sp.diags(s))


def pd_operator(g: Graph, params) -> sp.csr_matrix:
    return param_adjacency_matrix(g, params)


def gcn_layer(h, g_or_op, w, activation=True) -> T.Tensor:
    """``sigma(S H W)`` with the self-looped symmetric GCN operator."""
    op = gcn_operator(g_or_op) if isinstance(g_or_op, Graph) else g_or_op
    out = T.spmm(op, T.matmul(h, w))
    return T.relu(out) if activation else out


def pd_gcn_layer(h, p_op, w, activation=True) -> T.Tensor:
    """``sigma(P H W)`` with ``P = I - L(alpha, gamma)``; ``p_op`` is a sparse matrix or operator."""
    if not sp.issparse(p_op):
        p_op = p_op.tosparse()
    out = T.spmm(p_op, T.matmul(h, w))
    return T.relu(out) if activation else out


@dataclass(frozen=True)
class AttentionStructure:
    """Directed edge lists used by attention layers.

    ``dst`` is the aggregating node (softmax group) and ``src`` the neighbour.
    Self pairs are included unless built with ``self_loops=False``.
    """

    n: int
    dst: np.ndarray
    src: np.ndarray
    gather_dst: sp.csr_matrix  # (E, n) row selector
    gather_src: sp.csr_matrix
    scatter: sp.csr_matrix  # (n, E) segment sum over dst
    edge_feats: np.ndarray | None = None

    @classmethod
    def build(cls, g: Graph, feats: EdgeFeatureTable | None = None, self_loops=True):
        dst = np.asarray(g.row_ids)
        src = np.asarray(g.col_indices)
        ef = None
        if feats is not None:
            if len(feats.rows) != len(dst) or not (np.array_equal(feats.rows, dst)
                                                   and np.array_equal(feats.cols, src)):
                raise DataError("edge feature table does not cover the graph's directed edges")
            ef = feats.features
        if self_loops:
            idx = np.arange(g.n)
            dst = np.concatenate([dst, idx])
            src = np.concatenate([src, idx])
            if ef is not None:
                ef = np.concatenate([ef, feats.self_features()])
            order = np.lexsort((src, dst))
            dst, src = dst[order], src[order]
            if ef is not None:
                ef = ef[order]
        e = len(dst)
        ones = np.ones(e)
        gd = sp.csr_matrix((ones, (np.arange(e), dst)), shape=(e, g.n))
        gs = sp.csr_matrix((ones, (np.arange(e), src)), shape=(e, g.n))
        return cls(g.n, dst, src, gd, gs, sp.csr_matrix(gd.T), ef)


def gat_attention(h_i, h_j, w, a, leaky_slope=0.2) -> T.Tensor:
    """Unnormalized score ``LeakyReLU(a^T [W h_i || W h_j])`` for row-aligned pairs."""
    z = T.concat([T.matmul(h_i, w), T.matmul(h_j, w)], axis=1)
    return T.leaky_relu(T.matmul(z, a), leaky_slope)


def pd_gat_attention(h_i, h_j, f_ij, w_n, w_e, a, leaky_slope=0.2) -> T.Tensor:
    """Score ``LeakyReLU(a^T [W_n h_i || W_n h_j || W_e f_ij])`` for row-aligned pairs."""
    z = T.concat([T.matmul(h_i, w_n), T.matmul(h_j, w_n), T.matmul(f_ij, w_e)], axis=1)
    return T.leaky_relu(T.matmul(z, a), leaky_slope)


def _attend(h, st: AttentionStructure, w_att, a_dst, a_src, w_msg, heads,
            w_e=None, a_e=None, leaky_slope=0.2, att_dropout=0.0, rng=None, training=False):
    """Multi-head attention aggregation, heads laid out as contiguous column blocks."""
    proj = T.matmul(h, w_att)
    score = T.add(T.spmm(st.gather_dst, T.head_dot(proj, a_dst)),
                  T.spmm(st.gather_src, T.head_dot(proj, a_src)))
    if w_e is not None:
        if st.edge_feats is None:
            raise DataError("attention structure carries no edge features")
        score = T.add(score, T.head_dot(T.matmul(st.edge_feats, w_e), a_e))
    score = T.leaky_relu(score, leaky_slope)
    att = T.segment_softmax(score, st.dst, st.n)
    att = T.dropout(att, att_dropout, rng, training)
    msg = proj if w_msg is None else T.matmul(h, w_msg)
    return T.spmm(st.scatter, T.head_scale(att, T.spmm(st.gather_src, msg)))


def gat_layer(h, st: AttentionStructure, w, a_dst, a_src, heads=1, activation=True,
              leaky_slope=0.2, att_dropout=0.0, rng=None, training=False) -> T.Tensor:
    """Concatenated heads of ``sigma(sum_j att_ij W h_j)``; one ``W`` per head, stacked in columns."""
    if w.shape[1] % heads:
        raise UsageError("output width must be divisible by the number of heads")
    out = _attend(h, st, w, a_dst, a_src, None, heads, leaky_slope=leaky_slope,
                  att_dropout=att_dropout, rng=rng, training=training)
    return T.relu(out) if activation else out


def pd_gat_layer(h, st: AttentionStructure, weights: dict, heads: int, sep=False,
                 leaky_slope=0.2,
                 att_dropout=0.0, rng=None, training=False) -> T.Tensor:
    """Parameterized-diffusion attention layer.

    ``weights`` holds ``w_n`` (attention projection), ``w_msg`` (message
    projection), ``a_dst``/``a_src``/``a_e`` (per-head attention vectors),
    ``w_e`` (edge-feature projection) and ``w_out`` (trailing projection). With
    ``sep=True`` the aggregation skips the node itself and the ego embedding
    ``relu(H W_ego)`` is concatenated before ``w_out``.
    """
    if weights["w_msg"].shape[1] % heads:
        raise UsageError("hidden width must be divisible by the number of heads")
    agg = _attend(h, st, weights["w_n"], weights["a_dst"], weights["a_src"], weights["w_msg"],
                  heads, w_e=weights["w_e"], a_e=weights["a_e"], leaky_slope=leaky_slope,
                  att_dropout=att_dropout, rng=rng, training=training)
    z = T.relu(agg)
    if sep:
        z = T.concat([T.relu(T.matmul(h, weights["w_ego"])), z], axis=1)
    return T.matmul(z, weights["w_out"])
