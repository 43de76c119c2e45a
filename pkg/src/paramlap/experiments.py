"""The gamma-sweep experiment over synthetic homophily levels."""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from scipy.stats import spearmanr

from .errors import ParamLapError, UsageError
from .nn.models import ModelConfig, train
from .synthgen import SynthConfig, generate


@dataclass
class SweepProtocol:
    mus: list = field(default_factory=lambda: [0.1, 0.3, 0.5, 0.7, 0.9])
    gammas: list = field(default_factory=lambda: [round(0.1 * k, 1) for k in range(1, 11)])
    seeds: list = field(default_factory=lambda: [0, 1, 2])
    arch: str = "pd-gcn"
    alpha: float = 1.0
    baselines: list = field(default_factory=lambda: ["gcn"])
    n: int = 600
    c: int = 5
    m: int = 2
    feature_dim: int = 2
    model: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.mus or not self.gammas or not self.seeds:
            raise UsageError("mus, gammas and seeds must be non-empty")
        if self.arch not in ("pd-gcn", "pd-gat"):
            raise UsageError("the swept architecture must be pd-gcn or pd-gat")
        for key in ("arch", "alpha", "gamma", "seed"):
            if key in self.model:
                raise UsageError(f"model overrides may not set {key!r}; use the protocol fields")

    @classmethod
    def from_dict(cls, d: dict) -> "SweepProtocol":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise UsageError(f"unknown protocol keys: {sorted(unknown)}")
        return cls(**d)


def _cells(protocol: SweepProtocol):
    cells = []
    for mu in protocol.mus:
        for seed in protocol.seeds:
            for arch in protocol.baselines:
                cells.append((arch, mu, None, seed))
            for gamma in protocol.gammas:
                cells.append((protocol.arch, mu, gamma, seed))
    return cells


def _run_cell(args):
    protocol, (arch, mu, gamma, seed) = args
    data = generate(SynthConfig(protocol.n, protocol.c, mu, protocol.m,
                                protocol.feature_dim, seed))
    overrides = dict(protocol.model)
    cfg = ModelConfig(arch=arch, alpha=protocol.alpha if gamma is not None else 1.0,
                      gamma=gamma if gamma is not None else 1.0, seed=seed, **overrides)
    try:
        report = train(cfg, data)
    except ParamLapError as exc:
        return {"arch": arch, "mu": mu, "gamma": gamma, "seed": seed,
                "test_accuracy": math.nan, "val_accuracy": math.nan,
                "best_epoch": -1, "failed": True, "error": str(exc)}
    return {"arch": arch, "mu": mu, "gamma": gamma, "seed": seed,
            "test_accuracy": report.test_at_best, "val_accuracy": report.val_at_best,
            "best_epoch": report.best_epoch, "failed": False, "error": ""}


@dataclass
class SweepResult:
    protocol: SweepProtocol
    rows: list

    def _frame(self, arch, mu, gamma):
        return [r["test_accuracy"] for r in self.rows
                if r["arch"] == arch and r["mu"] == mu and r["gamma"] == gamma and not r["failed"]]

    def aggregate(self) -> dict:
        """Mean/std of test accuracy per (mu, gamma) for the swept arch."""
        p = self.protocol
        out = {}
        for mu in p.mus:
            for gamma in p.gammas:
                acc = self._frame(p.arch, mu, gamma)
                out[(mu, gamma)] = (float(np.mean(acc)) if acc else math.nan,
                                    float(np.std(acc)) if acc else math.nan, len(acc))
        return out

    def baseline_means(self) -> dict:
        p = self.protocol
        return {(arch, mu): float(np.mean(self._frame(arch, mu, None)))
                for arch in p.baselines for mu in p.mus if self._frame(arch, mu, None)}

    def optimal_gamma(self) -> dict:
        """Per-mu argmax of mean accuracy; ties go to the smaller gamma."""
        agg = self.aggregate()
        best = {}
        for mu in self.protocol.mus:
            cands = [(g, agg[(mu, g)][0]) for g in sorted(self.protocol.gammas)
                     if not math.isnan(agg[(mu, g)][0])]
            if cands:
                top = max(v for _, v in cands)
                best[mu] = next(g for g, v in cands if v == top)
        return best

    def summary(self) -> dict:
        p = self.protocol
        agg = self.aggregate()
        opt = self.optimal_gamma()
        mus = [mu for mu in p.mus if mu in opt]
        rho_opt = _spearman(mus, [opt[mu] for mu in mus])
        rho_fixed = {}
        for gamma in p.gammas:
            vals = [agg[(mu, gamma)][0] for mu in p.mus]
            rho_fixed[repr(float(gamma))] = _spearman(p.mus, vals)
        base = self.baseline_means()
        best_mean = {repr(float(mu)): agg[(mu, opt[mu])][0] for mu in mus}
        return {
            "arch": p.arch,
            "optimal_gamma": {repr(float(mu)): float(opt[mu]) for mu in mus},
            "best_mean_accuracy": best_mean,
            "spearman_mu_vs_optimal_gamma": rho_opt,
            "spearman_mu_vs_accuracy_per_gamma": rho_fixed,
            "baseline_mean_accuracy": {f"{a}@{float(mu)!r}": v for (a, mu), v in sorted(base.items())},
            "failed_cells": sum(r["failed"] for r in self.rows),
            "mean_std": [{"mu": mu, "gamma": g, "mean": m, "std": s, "count": k}
                         for (mu, g), (m, s, k) in agg.items()],
        }

    def to_csv(self) -> str:
        lines = ["arch,mu,gamma,seed,test_accuracy,val_accuracy,best_epoch,failed"]
        for r in self.rows:
            gamma = "" if r["gamma"] is None else repr(float(r["gamma"]))
            lines.append(f"{r['arch']},{float(r['mu'])!r},{gamma},{r['seed']},"
                         f"{float(r['test_accuracy'])!r},{float(r['val_accuracy'])!r},"
                         f"{r['best_epoch']},{int(r['failed'])}")
        return "\n".join(lines) + "\n"

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True)


def _spearman(x, y) -> float:
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if len(x) < 2 or np.all(y == y[0]) or np.any(np.isnan(y)):
        return math.nan
    return float(spearmanr(x, y).statistic)


def run_sweep(protocol: SweepProtocol, threads: int = 1) -> SweepResult:
    """Train every grid cell; rows come back in grid order regardless of ``threads``."""
    cells = _cells(protocol)
    jobs = [(protocol, cell) for cell in cells]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_run_cell, jobs))
    else:
        rows = [_run_cell(job) for job in jobs]
    return SweepResult(protocol, rows)


def protocol_to_json(protocol: SweepProtocol) -> str:
    return json.dumps(asdict(protocol), indent=2, sort_keys=True)
