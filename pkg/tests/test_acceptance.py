"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""
import json
import math
import time

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.stats import spearmanr

from conftest import check_grads, model_grad_error, record
from paramlap.cli import main
from paramlap.experiments import SweepProtocol, run_sweep
from paramlap.graph import (bfs_distances, complete_graph, path_graph, random_connected_graph,
                            random_walk_laplacian, symmetric_laplacian)
from paramlap.homophily import edge_homophily, metrics
from paramlap.laplacian import LaplacianParams, limit_check, param_adjacency_matrix, param_laplacian
from paramlap.nn import tensor as T
from paramlap.nn.layers import gat_attention, pd_gat_attention
from paramlap.nn.models import ModelConfig, one_hot
from paramlap.rewire import rewire_with_phi
from paramlap.spectral import eig_sym, spectral_view, verify_monotonicity, verify_order_preservation
from paramlap.synthgen import SynthConfig, generate

GAMMAS = [round(0.1 * k, 1) for k in range(1, 11)]


def graphs(count, n, p, seed, max_degree=None):
    return [random_connected_graph(n, p, seed=seed + k, max_degree=max_degree) for k in range(count)]


def test_criterion_01_special_cases():
    start = time.perf_counter()
    worst_rw = worst_sym = 0.0
    for g in graphs(20, 50, 0.1, seed=1000):
        worst_rw = max(worst_rw, np.max(np.abs(param_laplacian(g, (1, 1)).toarray() - random_walk_laplacian(g))))
        worst_sym = max(worst_sym, np.max(np.abs(param_laplacian(g, (0.5, 1)).toarray() - symmetric_laplacian(g))))
    elapsed = time.perf_counter() - start
    ok = worst_rw < 1e-12 and worst_sym < 1e-12 and elapsed < 5
    assert record(1, ok, f"max|L(1,1)-L_rw|={worst_rw:.1e} max|L(1/2,1)-L_sym|={worst_sym:.1e} "
                         f"time={elapsed:.2f}s")


def test_criterion_02_nonnegative_adjacency():
    start = time.perf_counter()
    min_entry, row_err = math.inf, 0.0
    for g in graphs(20, 50, 0.1, seed=2000):
        for a in (0.0, 0.25, 0.5, 0.75, 1.0):
            for gm in GAMMAS:
                pm = param_adjacency_matrix(g, LaplacianParams(a, gm))
                min_entry = min(min_entry, pm.min())
                if a == 1.0:
                    row_err = max(row_err, np.max(np.abs(np.asarray(pm.sum(axis=1)).ravel() - 1)))
    elapsed = time.perf_counter() - start
    ok = min_entry >= -1e-14 and row_err < 1e-12 and elapsed < 10
    assert record(2, ok, f"min P entry={min_entry:.1e} alpha=1 row-sum err={row_err:.1e} "
                         f"time={elapsed:.2f}s")


def test_criterion_03_spectrum_range_and_monotonicity():
    start = time.perf_counter()
    reports = [verify_monotonicity(g, GAMMAS) for g in graphs(20, 50, 0.1, seed=3000)]
    p3_err = max(abs(eig_sym(path_graph(3), gm).eigenvalues[1] - gm) for gm in GAMMAS)
    elapsed = time.perf_counter() - start
    min_fwd = min(r.min_forward_difference for r in reports)
    lo = min(r.eigenvalues.min() for r in reports)
    hi = max(r.eigenvalues.max() for r in reports)
    ok = all(r.passed for r in reports) and p3_err < 1e-10 and elapsed < 30
    assert record(3, ok, f"eigenvalues in [{lo:.1e}, {hi:.4f}] min forward diff={min_fwd:.2e} "
                         f"P3 |lambda1-gamma|={p3_err:.1e} time={elapsed:.2f}s")


def test_criterion_04_small_gamma_limit():
    gammas = [1e-2, 1e-3, 1e-4]
    worst_last, monotone, max_deg, failures = 0.0, True, 0, []
    for k, g in enumerate(graphs(20, 50, 0.1, seed=4000, max_degree=10)):
        max_deg = max(max_deg, int(g.degrees.max()))
        for alpha in (0.0, 0.5, 1.0):
            dev = limit_check(g, alpha, gammas)
            monotone &= bool(np.all(np.diff(dev) <= 0))
            worst_last = max(worst_last, dev[-1])
            if dev[-1] >= 1e-3:
                failures.append((k, int(g.degrees.max())))
    ok = monotone and worst_last < 1e-3
    assert record(4, ok, f"non-increasing={monotone} worst deviation at 1e-4={worst_last:.2e} "
                         f"(max degree {max_deg}; {len(failures)} graph/alpha cases >= 1e-3)")


def test_criterion_05_order_preservation():
    start = time.perf_counter()
    checked = passed = skipped = 0
    for k, g in enumerate(graphs(50, 30, 0.12, seed=5000)):
        rep = verify_order_preservation(g, 1.0, samples=100, seed=k, min_gap=1e-6, horizon=10)
        checked += rep.checked
        passed += rep.passed
        skipped += rep.skipped_degenerate
    elapsed = time.perf_counter() - start
    ok = checked > 0 and passed == checked and elapsed < 120
    assert record(5, ok, f"{passed}/{checked} triples ordered for t in [floor(C)+1, floor(C)+10], "
                         f"{skipped} degenerate graphs skipped, time={elapsed:.1f}s")


def test_criterion_06_gradients():
    rng = np.random.default_rng(6)
    worst = 0.0
    x = rng.standard_normal((5, 4))
    x = np.where(np.abs(x) < 0.1, 0.5, x)
    s = sp.random(5, 5, density=0.5, random_state=6, format="csr")
    seg = np.array([0, 0, 1, 1, 2])
    probs = rng.random((5, 3)) + 0.1
    probs /= probs.sum(1, keepdims=True)
    y = one_hot(np.array([0, 1, 2, 1, 0]), 3)
    cases = [
        (T.add, [x, rng.standard_normal((1, 4))]),
        (T.mul, [x, rng.standard_normal((5, 1))]),
        (T.matmul, [x, rng.standard_normal((4, 2))]),
        (lambda a: T.spmm(s, a), [x]),
        (T.relu, [x]),
        (lambda a: T.leaky_relu(a, 0.2), [x]),
        (lambda a: T.dropout(a, 0.3, np.random.default_rng(1), True), [x]),
        (lambda a, b: T.concat([a, b]), [x, rng.standard_normal((5, 2))]),
        (T.total, [x]),
        (T.head_dot, [x, rng.standard_normal((2, 2))]),
        (T.head_scale, [rng.standard_normal((5, 2)), x]),
        (T.softmax, [x]),
        (lambda a: T.segment_softmax(a, seg, 3), [rng.standard_normal((5, 2))]),
        (lambda p: T.cross_entropy(p, y, np.ones(5, dtype=bool)), [probs]),
        (lambda a, b, w, v: gat_attention(a, b, w, v), [x, x[::-1].copy(), rng.standard_normal((4, 3)),
                                                        rng.standard_normal((6, 1))]),
        (lambda a, b, f, w, we, v: pd_gat_attention(a, b, f, w, we, v),
         [x, x[::-1].copy(), rng.standard_normal((5, 2)), rng.standard_normal((4, 3)),
          rng.standard_normal((2, 3)), rng.standard_normal((9, 1))]),
    ]
    for fn, arrays in cases:
        worst = max(worst, check_grads(fn, arrays, tol=math.inf))
    data = generate(SynthConfig(20, 3, 0.5, feature_dim=3, seed=6))
    model_err = {}
    for arch in ("pd-gcn", "pd-gat"):
        cfg = ModelConfig(arch=arch, layers=2, hidden=4, heads=2, gamma=0.5, dropout=0.0, seed=6)
        model_err[arch] = model_grad_error(cfg, data)
    ok = worst < 1e-4 and all(v < 1e-4 for v in model_err.values())
    assert record(6, ok, f"{len(cases)} ops worst rel err={worst:.1e}; models "
                         + " ".join(f"{k}={v:.1e}" for k, v in model_err.items()))


@pytest.fixture(scope="module")
def desk_sweep():
    start = time.perf_counter()
    result = run_sweep(SweepProtocol())
    return result, time.perf_counter() - start


def test_criterion_07_pd_gcn_beats_gcn(desk_sweep):
    result, elapsed = desk_sweep
    s = result.summary()
    base = result.baseline_means()
    lines, ok = [], elapsed < 1800
    for mu in result.protocol.mus:
        best = s["best_mean_accuracy"][repr(float(mu))]
        gcn = base[("gcn", mu)]
        margin = best - gcn
        need = 0.02 if mu in (0.1, 0.3) else 0.0
        ok &= margin >= need
        lines.append(f"mu={mu}: {best:.4f} vs {gcn:.4f} ({margin:+.4f})")
    assert record(7, ok, "; ".join(lines) + f"; sweep time={elapsed:.0f}s")


def test_criterion_08_optimal_gamma_trend(desk_sweep):
    result, _ = desk_sweep
    s = result.summary()
    rho = s["spearman_mu_vs_optimal_gamma"]
    per_gamma = s["spearman_mu_vs_accuracy_per_gamma"]
    worst = min(per_gamma.values())
    ok = rho >= 0.6 and worst >= 0.8
    assert record(8, ok, f"rho(mu, optimal gamma)={rho:.3f} optimal={s['optimal_gamma']} "
                         f"min per-gamma rho(mu, acc)={worst:.3f}")


def test_criterion_09_homophily():
    k3 = complete_graph(3)
    fixtures = [
        (metrics(k3, [0, 1, 2]), 0.0),
        (metrics(k3, [0, 0, 0]), 1.0),
        (metrics(path_graph(3), [0, 0, 1]), 0.5),
    ]
    exact = all(r.h_edge == v and r.h_node == v for r, v in fixtures)
    mus = [0.1, 0.3, 0.5, 0.7, 0.9]
    h = [np.mean([edge_homophily(d.graph, d.labels)
                  for d in (generate(SynthConfig(600, 5, mu, seed=s)) for s in range(3))]) for mu in mus]
    rho = spearmanr(mus, h).statistic
    ok = exact and rho >= 0.9
    assert record(9, ok, f"fixtures exact={exact} generator h_edge={[round(float(x), 3) for x in h]} rho={rho:.3f}")


def test_criterion_10_rewiring():
    added_total, ok = 0, True
    for g in graphs(20, 40, 0.08, seed=10_000):
        phi = spectral_view(g, (1, 1)).phi1
        out, rep = rewire_with_phi(g, phi)
        out.check_invariants()
        v = rep.gradient_node
        edges = np.array(rep.added_edges).reshape(-1, 2)
        touches = bool(np.all(edges[:, 0] == v))
        again, rep2 = rewire_with_phi(out, phi)
        idempotent = rep2.added_edges == [] and again.edge_count == out.edge_count
        below = np.flatnonzero(phi[v] - phi >= 0.5 * (phi.max() - phi.min()) * (1 - 1e-10))
        one_hop = bool(np.all(bfs_distances(out, v)[below] == 1))
        ok &= touches and idempotent and one_hop
        added_total += len(edges)
    assert record(10, ok, f"20 graphs, {added_total} edges added; invariants, gradient-node incidence, "
                          f"idempotence and one-hop reach {'hold' if ok else 'violated'}")


def _snapshot(directory):
    return {p.relative_to(directory).as_posix(): p.read_bytes()
            for p in sorted(directory.rglob("*")) if p.is_file() and p.name != "timing.json"}


def test_criterion_11_determinism(tmp_path):
    cfg = tmp_path / "gen.json"
    cfg.write_text(json.dumps({"n": 80, "c": 3, "mu": 0.6, "seed": 3}))
    model = tmp_path / "model.json"
    model.write_text(json.dumps({"arch": "pd-gat", "hidden": 8, "heads": 2, "epochs": 10, "gamma": 0.5}))
    sweep = tmp_path / "sweep.json"
    sweep.write_text(json.dumps({"mus": [0.2, 0.8], "gammas": [0.5, 1.0], "seeds": [0], "n": 60, "c": 3,
                                 "model": {"epochs": 10, "hidden": 8}}))
    data = tmp_path / "data"
    assert main(["gen", str(cfg), "--out-dir", str(data)]) == 0
    commands = {
        "gen": ["gen", str(cfg)],
        "spectral": ["spectral", str(data), "--largest-component", "--gamma", "0.4"],
        "distances": ["distances", str(data), "--largest-component", "--pairs", "0:1,3:7"],
        "verify": ["verify", str(data), "--largest-component", "--samples", "20"],
        "metrics": ["metrics", str(data)],
        "rewire": ["rewire", str(data), "--largest-component"],
        "train": ["train", str(data), "--config", str(model)],
        "sweep": ["sweep", str(sweep)],
    }
    differing = []
    for name, argv in commands.items():
        runs = []
        for k in (1, 2):
            out = tmp_path / f"{name}{k}"
            assert main(argv + ["--out-dir", str(out)]) == 0
            runs.append(_snapshot(out))
        if runs[0] != runs[1] or not runs[0]:
            differing.append(name)
    ok = not differing
    assert record(11, ok, f"{len(commands)} commands rerun byte-identical"
                          + (f"; differing: {differing}" if differing else ""))
