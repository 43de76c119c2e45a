"""Eigenpairs of the parameterized Laplacian, node distances and property verifiers.

Everything is computed from the symmetric member ``L(1/2, gamma)``; the
eigenvectors of any other ``alpha`` are obtained by the diagonal similarity
``D_g^{1/2 - alpha} U``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import NumericalError, UsageError
from .graph import Graph, require_connected
from .laplacian import LaplacianParams, _params, diag_gamma, diag_power, param_laplacian

DENSE_TOL = 1e-10
ITERATIVE_TOL = 1e-8
DEGENERACY_GAP = 1e-9
SIGN_TIE_RTOL = 1e-9


def fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip columns so the entry of largest magnitude is positive.

    Entries within a relative ``SIGN_TIE_RTOL`` of the column maximum count as
    tied and the lowest index wins, which keeps symmetric vectors such as
    ``(1, 0, -1)`` stable under rounding noise.
    """
    v = np.array(vectors, dtype=float, copy=True)
    single = v.ndim == 1
    if single:
        v = v[:, None]
    mag = np.abs(v)
    top = mag.max(axis=0)
    for c in range(v.shape[1]):
        if top[c] == 0:
            continue
        idx = int(np.flatnonzero(mag[:, c] >= top[c] * (1 - SIGN_TIE_RTOL))[0])
        if v[idx, c] < 0:
            v[:, c] = -v[:, c]
    return v[:, 0] if single else v


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenpairs of ``L(1/2, gamma)``, ascending, trivial pair at index 0.

    ``k`` counts the non-trivial pairs; ``k == n - 1`` means the spectrum is complete.
    """

    gamma: float
    eigenvalues: np.ndarray
    eigvecs_sym: np.ndarray
    diag_gamma: np.ndarray
    k: int
    mode: str
    residuals: np.ndarray = field(repr=False)

    @property
    def params(self) -> LaplacianParams:
        return LaplacianParams(0.5, self.gamma)

    @property
    def n(self) -> int:
        return self.eigvecs_sym.shape[0]

    @property
    def complete(self) -> bool:
        return self.k == self.n - 1

    @property
    def degenerate(self) -> bool:
        """True when the first non-trivial eigenvalue is (numerically) repeated."""
        ev = self.eigenvalues
        return len(ev) > 2 and ev[2] - ev[1] < DEGENERACY_GAP


def null_vector(dg: np.ndarray) -> np.ndarray:
    v = np.sqrt(dg)
    return v / np.linalg.norm(v)


def eig_sym(g: Graph, gamma: float = 1.0, k: int | None = None, mode: str = "dense",
            tol: float | None = None, seed: int = 0, max_iter: int | None = None
            ) -> SpectralDecomposition:
    """Eigendecomposition of the symmetric member ``L(1/2, gamma)``.

    ``mode="dense"`` returns the full spectrum and is the reference path.
    ``mode="iterative"`` runs Lanczos with full reorthogonalization on
    ``2I - L(1/2, gamma)`` with the known null vector deflated, returning the
    ``k`` smallest non-trivial pairs.
    """
    require_connected(g)
    p = LaplacianParams(0.5, gamma)
    dg = diag_gamma(g, p)
    op = param_laplacian(g, p)
    n = g.n
    if mode == "dense":
        tol = DENSE_TOL if tol is None else tol
        m = op.toarray()
        m = 0.5 * (m + m.T)
        evals, evecs = np.linalg.eigh(m)
        if k is not None and not 1 <= k <= n - 1:
            raise UsageError(f"k must lie in [1, {n - 1}]")
        keep = n if k is None else k + 1
        evals, evecs = evals[:keep], evecs[:, :keep]
    elif mode == "iterative":
        tol = ITERATIVE_TOL if tol is None else tol
        if k is None or not 1 <= k <= n - 1:
            raise UsageError(f"iterative mode needs 1 <= k <= {n - 1}")
        q0 = null_vector(dg)
        vals, vecs = _lanczos_smallest(op.matvec, q0, k, tol, seed,
                                       max_iter if max_iter is not None else 10 * n)
        evals = np.concatenate([[0.0], vals])
        evecs = np.column_stack([q0, vecs])
    else:
        raise UsageError(f"unknown mode {mode!r}")
    evecs = fix_signs(evecs)
    res = np.linalg.norm(op.matvec(evecs) - evecs * evals[None, :], axis=0)
    if np.any(res > tol * max(1.0, np.sqrt(n))):
        raise NumericalError(f"eigen-residual {res.max():.2e} above tolerance {tol:.0e}")
    return SpectralDecomposition(float(gamma), evals, evecs, dg, len(evals) - 1, mode, res)


def _lanczos_smallest(apply_lap, q0, k, tol, seed, max_iter):
    """k smallest eigenpairs of the Laplacian on the complement of ``q0``.

    Works with ``B = 2I - L`` whose wanted eigenvalues are the largest ones.
    """
    n = q0.shape[0]
    dim = n - 1  # Krylov space lives in the complement of q0
    steps = min(max_iter, dim)
    rng = np.random.default_rng(seed)
    Q = np.zeros((n, steps + 1))
    alphas, betas = [], []
    v = rng.standard_normal(n)
    v -= q0 * (q0 @ v)
    v /= np.linalg.norm(v)
    Q[:, 0] = v
    for j in range(steps):
        w = 2.0 * Q[:, j] - apply_lap(Q[:, j])
        a = Q[:, j] @ w
        w -= a * Q[:, j]
        if j:
            w -= betas[-1] * Q[:, j - 1]
        # full reorthogonalization (twice is enough) against q0 and all Lanczos vectors
        basis = np.column_stack([q0, Q[:, :j + 1]])
        for _ in range(2):
            w -= basis @ (basis.T @ w)
        b = np.linalg.norm(w)
        alphas.append(a)
        m = j + 1
        exhausted = b < 1e-13 or m == dim
        if m >= k and (exhausted or m % 5 == 0 or m == steps):
            T = np.diag(alphas) + np.diag(betas, 1) + np.diag(betas, -1)
            theta, S = np.linalg.eigh(T)
            theta, S = theta[::-1][:k], S[:, ::-1][:, :k]
            est = np.abs(b * S[-1, :])
            if exhausted or np.all(est < 0.1 * tol):
                vecs = Q[:, :m] @ S
                vecs /= np.linalg.norm(vecs, axis=0)
                vals = 2.0 - theta
                order = np.argsort(vals, kind="stable")
                vals, vecs = vals[order], vecs[:, order]
                res = np.linalg.norm(apply_lap(vecs) - vecs * vals, axis=0)
                if np.all(res < tol) or exhausted:
                    return vals, vecs
        if b < 1e-13:
            break
        betas.append(b)
        Q[:, j + 1] = w / b
    raise NumericalError(f"Lanczos did not converge to {tol:.0e} within {steps} steps")


@dataclass(frozen=True)
class EigvecView:
    """Eigenvectors of ``L(alpha, gamma)``: unit-norm, sign-fixed columns."""

    alpha: float
    gamma: float
    eigenvalues: np.ndarray
    vectors: np.ndarray
    complete: bool
    degenerate: bool

    @property
    def phi1(self) -> np.ndarray:
        return self.vectors[:, 1]


def eigvec_view(d: SpectralDecomposition, alpha: float) -> EigvecView:
    LaplacianParams(alpha, d.gamma)  # validates alpha
    vecs = diag_power(d.diag_gamma, 0.5 - alpha)[:, None] * d.eigvecs_sym
    vecs = vecs / np.linalg.norm(vecs, axis=0)
    return EigvecView(float(alpha), d.gamma, d.eigenvalues, fix_signs(vecs),
                      d.complete, d.degenerate)


def spectral_view(g: Graph, p, mode: str = "dense", k: int | None = None) -> EigvecView:
    """Shortcut: decomposition plus the ``alpha`` view in one call."""
    p = _params(p)
    if mode == "iterative" and k is None:
        k = min(2, g.n - 1)
    return eigvec_view(eig_sym(g, p.gamma, k=k, mode=mode), p.alpha)


# -- distances ---------------------------------------------------------------

def diffusion_distance(view: EigvecView, evals, i: int, j: int, t: float) -> float:
    """Diffusion distance after time ``t`` from the full non-trivial spectrum."""
    if not view.complete:
        raise UsageError("diffusion distance needs the complete spectrum (dense mode)")
    if t <= 0:
        raise UsageError("t must be positive")
    lam = np.asarray(evals)[1:]
    diff = view.vectors[i, 1:] - view.vectors[j, 1:]
    return float(math.sqrt(np.sum(np.exp(-2.0 * t * lam) * diff * diff)))


def _scaled_sq_diffusion(view, evals, i, j, t):
    # d_t^2 * exp(2 t lambda_1): same ordering as d_t, no underflow for large t
    lam = np.asarray(evals)[1:]
    diff = view.vectors[i, 1:] - view.vectors[j, 1:]
    return float(np.sum(np.exp(-2.0 * t * (lam - lam[0])) * diff * diff))


class SpectralDistance(NamedTuple):
    value: float
    degenerate: bool


def spectral_distance(view: EigvecView, i: int, j: int) -> SpectralDistance:
    phi = view.phi1
    return SpectralDistance(float(abs(phi[i] - phi[j])), view.degenerate)


def order_constant(view: EigvecView, evals, i: int, j: int, m: int) -> float:
    """Time threshold beyond which diffusion distances follow spectral ordering.

    Requires ``d_s(m, j) < d_s(i, j)``. For every integer ``t >= floor(C) + 1``
    (and ``t > 0``) the diffusion distance satisfies ``d_t(m, j) < d_t(i, j)``.
    Returns ``-inf`` when the higher modes contribute nothing.
    """
    if not view.complete:
        raise UsageError("order constant needs the complete spectrum (dense mode)")
    evals = np.asarray(evals)
    v = view.vectors
    near = (v[m, 1] - v[j, 1]) ** 2
    far = (v[i, 1] - v[j, 1]) ** 2
    if not near < far:
        raise UsageError("precondition d_s(m, j) < d_s(i, j) violated")
    if evals[2] - evals[1] < DEGENERACY_GAP:
        raise UsageError("first non-trivial eigenvalue is repeated; constant undefined")
    rest = np.sum(np.abs((v[m, 2:] - v[j, 2:]) ** 2 - (v[i, 2:] - v[j, 2:]) ** 2))
    if rest == 0:
        return -math.inf
    return math.log((far - near) / rest) / (2.0 * (evals[1] - evals[2]))


def first_valid_time(c: float) -> int:
    """Smallest admissible integer time ``max(floor(C) + 1, 1)``."""
    if c == -math.inf:
        return 1
    return max(math.floor(c) + 1, 1)


# -- verifiers ---------------------------------------------------------------

@dataclass
class MonotonicityReport:
    gammas: list
    eigenvalues: np.ndarray  # (len(gammas), n), trivial column included
    min_forward_difference: float
    range_ok: bool
    min_gap: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "gammas": [float(x) for x in self.gammas],
            "eigenvalues": self.eigenvalues.tolist(),
            "min_forward_difference": float(self.min_forward_difference),
            "min_spectral_gap": float(self.min_gap),
            "range_ok": bool(self.range_ok),
            "passed": bool(self.passed),
        }


def verify_monotonicity(g: Graph, gammas) -> MonotonicityReport:
    """Check that every non-trivial eigenvalue strictly increases with gamma."""
    gammas = [float(x) for x in gammas]
    if any(b <= a for a, b in zip(gammas, gammas[1:])):
        raise UsageError("gamma grid must be strictly increasing")
    ev = np.array([eig_sym(g, gm).eigenvalues for gm in gammas])
    range_ok = bool(np.all(ev >= -DENSE_TOL) and np.all(ev <= 2 + DENSE_TOL)
                    and np.all(ev[:, 0] <= DENSE_TOL))
    fwd = np.diff(ev[:, 1:], axis=0)
    min_fwd = float(fwd.min()) if fwd.size else math.inf
    min_gap = float(ev[:, 1].min()) if ev.shape[1] > 1 else math.inf
    passed = range_ok and min_fwd > 1e-12 and min_gap > DENSE_TOL
    return MonotonicityReport(gammas, ev, min_fwd, range_ok, min_gap, passed)


@dataclass
class OrderReport:
    checked: int = 0
    passed: int = 0
    skipped_degenerate: bool = False
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.checked == self.passed

    def to_dict(self) -> dict:
        return {"checked": self.checked, "passed": self.passed,
                "skipped_degenerate": self.skipped_degenerate,
                "failures": self.failures[:20], "ok": self.ok}


def verify_order_preservation(g: Graph, gamma: float = 1.0, samples: int = 100,
                              seed: int = 0, min_gap: float = 1e-6,
                              horizon: int = 10) -> OrderReport:
    """Sample node triples and check diffusion ordering after the time threshold.

    Uses eigenvectors of ``L(1, gamma)``. Triples whose spectral distances
    differ by no more than ``min_gap`` are resampled.
    """
    report = OrderReport()
    d = eig_sym(g, gamma)
    view = eigvec_view(d, 1.0)
    if view.degenerate:
        report.skipped_degenerate = True
        return report
    rng = np.random.default_rng(seed)
    n = g.n
    attempts = 0
    while report.checked < samples and attempts < 50 * samples:
        attempts += 1
        i, j, m = (int(x) for x in rng.choice(n, size=3, replace=False))
        ds_i, ds_m = spectral_distance(view, i, j).value, spectral_distance(view, m, j).value
        if abs(ds_i - ds_m) <= min_gap:
            continue
        if ds_m > ds_i:
            i, m = m, i
        c = order_constant(view, d.eigenvalues, i, j, m)
        t0 = first_valid_time(c)
        report.checked += 1
        ok = all(_scaled_sq_diffusion(view, d.eigenvalues, m, j, t)
                 < _scaled_sq_diffusion(view, d.eigenvalues, i, j, t)
                 for t in range(t0, t0 + horizon))
        if ok:
            report.passed += 1
        else:
            report.failures.append({"i": i, "j": j, "m": m, "C": c})
    return report
