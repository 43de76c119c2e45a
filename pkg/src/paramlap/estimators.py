"""scikit-learn style wrappers.

The graph is transductive: ``X`` always holds the features of every node, in
node order, and unlabeled nodes carry ``y == -1``.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import DataError, UsageError
from .graph import Graph
from .laplacian import LaplacianParams
from .rewire import rewire
from .spectral import eig_sym, eigvec_view
from .synthgen import Dataset


def as_graph(graph, n=None) -> Graph:
    """Accept a ``Graph``, a scipy sparse adjacency or an ``(E, 2)`` edge array."""
    if isinstance(graph, Graph):
        g = graph
    elif sp.issparse(graph):
        g = Graph.from_scipy(graph)
    elif graph is None:
        raise UsageError("a graph is required")
    else:
        edges = np.asarray(graph)
        if edges.ndim != 2 or (edges.size and edges.shape[1] != 2):
            raise DataError("edge array must have shape (E, 2)")
        g = Graph.from_edges(n if n is not None else int(edges.max()) + 1 if edges.size else 0, edges)
    if n is not None and g.n != n:
        raise DataError(f"graph has {g.n} nodes but X has {n} rows")
    return g


class PDGNNClassifier(ClassifierMixin, BaseEstimator):
    """Transductive node classifier over one of the graph architectures."""

    def __init__(self, arch="pd-gcn", alpha=1.0, gamma=1.0, layers=2, hidden=64, heads=8,
                 sep=False, residual=False, dropout=0.1, lr=0.01, weight_decay=0.001,
                 epochs=300, random_state=0):
        self.arch = arch
        self.alpha = alpha
        self.gamma = gamma
        self.layers = layers
        self.hidden = hidden
        self.heads = heads
        self.sep = sep
        self.residual = residual
        self.dropout = dropout
        self.lr = lr
        self.weight_decay = weight_decay
        self.epochs = epochs
        self.random_state = random_state

    def _config(self):
        from .nn.models import ModelConfig
        return ModelConfig(arch=self.arch, layers=self.layers, hidden=self.hidden, heads=self.heads,
                           alpha=self.alpha, gamma=self.gamma, sep=self.sep, residual=self.residual,
                           dropout=self.dropout, lr=self.lr, weight_decay=self.weight_decay,
                           epochs=self.epochs, seed=int(self.random_state or 0))

    def fit(self, X, y, graph=None, val_mask=None):
        """Train on nodes with ``y >= 0``; ``val_mask`` nodes pick the best epoch instead of training."""
        from .nn.models import train
        X = check_array(X, dtype=np.float64)
        y = np.asarray(y)
        if y.shape != (X.shape[0],):
            raise DataError("y must have one entry per row of X")
        labeled = y >= 0
        if not labeled.any():
            raise DataError("no labeled nodes")
        self.classes_, codes = np.unique(y[labeled], return_inverse=True)
        labels = np.zeros(len(y), dtype=np.int64)
        labels[labeled] = codes
        g = as_graph(graph, X.shape[0])
        empty = np.zeros(len(y), dtype=bool)
        val = empty if val_mask is None else np.asarray(val_mask, dtype=bool) & labeled
        train_mask = labeled & ~val
        data = Dataset(g, X, labels, train_mask, val, empty, num_classes=len(self.classes_))
        self.report_, self.model_ = train(self._config(), data, return_model=True)
        self.n_features_in_ = X.shape[1]
        self.n_nodes_ = X.shape[0]
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=np.float64)
        if X.shape != (self.n_nodes_, self.n_features_in_):
            raise DataError(f"X must be {self.n_nodes_} x {self.n_features_in_} (all graph nodes)")
        return self.model_.predict_proba(X)

    def predict(self, X):
        check_is_fitted(self, "model_")
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]


class ParameterizedSpectralEmbedding(TransformerMixin, BaseEstimator, auto_wrap_output_keys=None):
    """Node embedding by the first ``n_components`` non-trivial eigenvectors of ``L(alpha, gamma)``.

    ``fit`` takes the graph; ``transform`` appends the embedding to ``X``
    (or returns it alone when ``X`` is None).
    """

    def __init__(self, n_components=2, alpha=1.0, gamma=1.0, mode="dense"):
        self.n_components = n_components
        self.alpha = alpha
        self.gamma = gamma
        self.mode = mode

    def fit(self, X=None, y=None, graph=None):
        n = None if X is None else check_array(X).shape[0]
        g = as_graph(graph, n)
        if not 1 <= self.n_components < g.n:
            raise UsageError("n_components must lie in [1, n)")
        LaplacianParams(self.alpha, self.gamma)
        k = self.n_components if self.mode == "iterative" else None
        d = eig_sym(g, self.gamma, k=k, mode=self.mode)
        view = eigvec_view(d, self.alpha)
        self.eigenvalues_ = view.eigenvalues[1:self.n_components + 1]
        self.embedding_ = view.vectors[:, 1:self.n_components + 1]
        self.n_nodes_ = g.n
        return self

    def transform(self, X=None):
        check_is_fitted(self, "embedding_")
        if X is None:
            return self.embedding_.copy()
        X = check_array(X, dtype=np.float64)
        if X.shape[0] != self.n_nodes_:
            raise DataError(f"X must have {self.n_nodes_} rows")
        return np.hstack([X, self.embedding_])

    def fit_transform(self, X=None, y=None, graph=None):
        return self.fit(X, y, graph=graph).transform(X)


class TopologyRewirer(BaseEstimator):
    """Adds edges from the gradient node of ``phi1(alpha, gamma)`` to the far half of the embedding."""

    def __init__(self, alpha=1.0, gamma=1.0):
        self.alpha = alpha
        self.gamma = gamma

    def fit(self, graph, y=None):
        g = as_graph(graph)
        self.graph_, self.report_ = rewire(g, LaplacianParams(self.alpha, self.gamma))
        self.gradient_node_ = self.report_.gradient_node
        self.added_edges_ = np.asarray(self.report_.added_edges, dtype=np.int64).reshape(-1, 2)
        return self

    def transform(self, graph=None):
        """The rewired graph; passing a different graph is an error since the rule is graph specific."""
        check_is_fitted(self, "graph_")
        if graph is not None and as_graph(graph).n != self.graph_.n:
            raise DataError("transform must be called on the fitted graph")
        return self.graph_

    def fit_transform(self, graph, y=None):
        return self.fit(graph).transform()
