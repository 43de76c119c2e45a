"""Command-line entry point: ``paramlap <command> [options]``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time

import numpy as np

from .errors import DataError, ParamLapError, UsageError
from .graph import is_connected, largest_component, read_edge_list, write_edge_list
from .homophily import metrics
from .laplacian import LaplacianParams, param_adjacency
from .rewire import rewire
from .spectral import (diffusion_distance, eig_sym, eigvec_view, spectral_distance,
                       verify_monotonicity, verify_order_preservation)
from .synthgen import SynthConfig, generate, load_bundle, save_bundle

log = logging.getLogger("paramlap")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _read_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path} is not valid JSON: {exc}") from exc


def _write(out_dir, name, text):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, name), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def _clean(obj):
    """Replace non-finite floats by None so output stays strict JSON."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _load_graph(path, use_largest=False):
    g = read_edge_list(path) if not os.path.isdir(path) else load_bundle(path).graph
    if use_largest:
        g, _ = largest_component(g)
    return g


def _grid(text, default):
    if text is None:
        return default
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad numeric grid {text!r}") from None


# -- commands ----------------------------------------------------------------

def cmd_gen(args):
    cfg = _read_json(args.config)
    if "mu" not in cfg:
        raise UsageError("config must set mu")
    if args.seed is not None:
        cfg["seed"] = args.seed
    try:
        synth = SynthConfig(**cfg)
    except TypeError as exc:
        raise DataError(f"bad generator config: {exc}") from exc
    except UsageError as exc:
        raise DataError(f"bad generator config: {exc}") from exc
    data = generate(synth)
    save_bundle(data, args.out_dir)
    log.info("wrote %d-node dataset to %s", synth.n, args.out_dir)


def cmd_spectral(args):
    g = _load_graph(args.graph, args.largest_component)
    mode = args.mode
    d = eig_sym(g, args.gamma, k=args.k, mode=mode, seed=args.seed or 0)
    view = eigvec_view(d, args.alpha)
    header = ",".join(repr(float(v)) for v in view.eigenvalues)
    rows = [",".join(repr(float(x)) for x in row) for row in view.vectors]
    _write(args.out_dir, "eigenvectors.csv", header + "\n" + "\n".join(rows) + "\n")
    _write(args.out_dir, "eigenvalues.csv",
           "index,eigenvalue\n" + "".join(f"{i},{float(v)!r}\n" for i, v in enumerate(view.eigenvalues)))
    meta = {"alpha": args.alpha, "gamma": args.gamma, "mode": mode, "k": d.k, "n": g.n,
            "degenerate_lambda1": bool(view.degenerate)}
    _write(args.out_dir, "spectral.json", _dump_json(meta))
    if args.dump_operator:
        _write(args.out_dir, "param_adjacency.csv",
               "\n".join(",".join(repr(float(x)) for x in row)
                         for row in param_adjacency(g, LaplacianParams(args.alpha, args.gamma)).toarray()) + "\n")


def cmd_distances(args):
    g = _load_graph(args.graph, args.largest_component)
    d = eig_sym(g, args.gamma)
    view = eigvec_view(d, args.alpha)
    times = _grid(args.times, [1.0])
    pairs = []
    for token in args.pairs.split(","):
        try:
            i, j = (int(x) for x in token.split(":"))
        except ValueError:
            raise UsageError(f"bad pair {token!r}; use i:j") from None
        if not (0 <= i < g.n and 0 <= j < g.n):
            raise UsageError(f"pair {token} outside [0, {g.n})")
        pairs.append((i, j))
    lines = ["i,j,spectral_distance,degenerate," + ",".join(f"d_t@{t!r}" for t in times)]
    for i, j in pairs:
        ds = spectral_distance(view, i, j)
        dt = [diffusion_distance(view, d.eigenvalues, i, j, t) for t in times]
        lines.append(f"{i},{j},{ds.value!r},{int(ds.degenerate)}," + ",".join(repr(x) for x in dt))
    _write(args.out_dir, "distances.csv", "\n".join(lines) + "\n")


def verify_graph(g, alphas, gammas, samples=100, seed=0) -> dict:
    """Non-negativity, spectrum monotonicity and order-preservation checks on one graph."""
    from .laplacian import param_adjacency as padj
    if not is_connected(g):
        raise DataError("graph is disconnected; the checks assume a connected graph")
    t1 = {"min_entry": math.inf, "max_row_sum_error_alpha1": 0.0}
    for a in alphas:
        for gm in gammas:
            p = padj(g, LaplacianParams(a, gm)).toarray()
            t1["min_entry"] = min(t1["min_entry"], float(p.min()))
            if a == 1.0:
                t1["max_row_sum_error_alpha1"] = max(t1["max_row_sum_error_alpha1"],
                                                     float(np.max(np.abs(p.sum(axis=1) - 1.0))))
    t1["passed"] = t1["min_entry"] >= -1e-14 and t1["max_row_sum_error_alpha1"] < 1e-12
    mono = verify_monotonicity(g, sorted(gammas))
    t2 = mono.to_dict()
    order = {}
    t3_pass = True
    for gm in gammas:
        rep = verify_order_preservation(g, gm, samples=samples, seed=seed)
        order[repr(float(gm))] = rep.to_dict()
        t3_pass &= rep.ok
    return {"n": g.n, "edges": g.edge_count,
            "nonnegativity": t1, "monotonicity": t2,
            "order_preservation": {"per_gamma": order, "passed": bool(t3_pass)},
            "passed": bool(t1["passed"] and t2["passed"] and t3_pass)}


def cmd_verify(args):
    g = _load_graph(args.graph, args.largest_component)
    alphas = _grid(args.alphas, [0.0, 0.25, 0.5, 0.75, 1.0])
    gammas = _grid(args.gammas, [round(0.1 * k, 1) for k in range(1, 11)])
    report = verify_graph(g, alphas, gammas, samples=args.samples, seed=args.seed or 0)
    _write(args.out_dir, "verify.json", _dump_json(_clean(report)))
    if not report["passed"]:
        print("verification failed", file=sys.stderr)
        return 3
    return 0


def cmd_metrics(args):
    if os.path.isdir(args.graph):
        data = load_bundle(args.graph)
        g, labels, c = data.graph, data.labels, data.num_classes
    else:
        if not args.labels:
            raise UsageError("--labels is required with an edge-list graph")
        g = read_edge_list(args.graph)
        labels = np.loadtxt(args.labels, dtype=np.int64, ndmin=1)
        c = args.classes
        if len(labels) > g.n:
            from .graph import Graph
            g = Graph(len(labels), np.concatenate([g.row_offsets, np.full(len(labels) - g.n, g.row_offsets[-1])]),
                      g.col_indices)
    report = metrics(g, labels, c)
    _write(args.out_dir, "homophily.json", _dump_json(report.to_dict()))


def cmd_rewire(args):
    g = _load_graph(args.graph, args.largest_component)
    out, report = rewire(g, LaplacianParams(args.alpha, args.gamma))
    write_edge_list(out, os.path.join(_mkdir(args.out_dir), "rewired.edges"))
    _write(args.out_dir, "rewire.json", report.to_json() + "\n")


def _mkdir(path):
    os.makedirs(path, exist_ok=True)
    return path


def cmd_train(args):
    from .nn.models import ModelConfig, train
    data = load_bundle(args.data)
    cfg_dict = _read_json(args.config) if args.config else {}
    if args.seed is not None:
        cfg_dict["seed"] = args.seed
    cfg = ModelConfig.from_dict(cfg_dict)
    _write(args.out_dir, "config.json", _dump_json(cfg_dict))
    report = train(cfg, data)
    _write(args.out_dir, "report.json", _dump_json(_clean(report.to_dict())))
    _write(args.out_dir, "curves.csv", report.curves_csv())
    _write(args.out_dir, "timing.json", _dump_json({"wall_time": report.wall_time}))


def cmd_sweep(args):
    from .experiments import SweepProtocol, protocol_to_json, run_sweep
    proto = SweepProtocol.from_dict(_read_json(args.config))
    _write(args.out_dir, "protocol.json", protocol_to_json(proto) + "\n")
    start = time.perf_counter()
    result = run_sweep(proto, threads=args.threads)
    _write(args.out_dir, "sweep.csv", result.to_csv())
    _write(args.out_dir, "summary.json", _dump_json(_clean(result.summary())))
    _write(args.out_dir, "timing.json", _dump_json({"wall_time": time.perf_counter() - start}))


COMMANDS = {
    "gen": cmd_gen, "spectral": cmd_spectral, "distances": cmd_distances,
    "verify": cmd_verify, "metrics": cmd_metrics, "rewire": cmd_rewire,
    "train": cmd_train, "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed")
    common.add_argument("--out-dir", default="out", help="directory for result files")
    common.add_argument("--threads", type=int, default=1, help="worker processes (sweep)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="paramlap", description=__doc__.splitlines()[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def graph_cmd(name, help_):
        p = sub.add_parser(name, help=help_, parents=[common])
        p.add_argument("graph", help="edge-list file or dataset bundle directory")
        p.add_argument("--largest-component", action="store_true",
                       help="restrict to the largest connected component")
        return p

    p = sub.add_parser("gen", help="generate a synthetic dataset bundle", parents=[common])
    p.add_argument("config", help="JSON generator config (n, c, mu, m, feature_dim, seed)")

    p = graph_cmd("spectral", "dump eigenpairs of L(alpha, gamma)")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--mode", choices=("dense", "iterative"), default="dense")
    p.add_argument("-k", type=int, default=None, help="non-trivial pairs (iterative mode)")
    p.add_argument("--dump-operator", action="store_true", help="also write P(alpha, gamma) as CSV")

    p = graph_cmd("distances", "diffusion and spectral distances for node pairs")
    p.add_argument("--pairs", required=True, help="comma-separated i:j pairs")
    p.add_argument("--times", default=None, help="comma-separated diffusion times")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=1.0)

    p = graph_cmd("verify", "check operator non-negativity, spectrum monotonicity and order preservation")
    p.add_argument("--alphas", default=None)
    p.add_argument("--gammas", default=None)
    p.add_argument("--samples", type=int, default=100, help="node triples per gamma")

    p = graph_cmd("metrics", "homophily report")
    p.add_argument("--labels", default=None, help="labels file (one integer per line)")
    p.add_argument("--classes", type=int, default=None)

    p = graph_cmd("rewire", "topology-guided rewiring")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=1.0)

    p = sub.add_parser("train", help="train one model on a dataset bundle", parents=[common])
    p.add_argument("data", help="dataset bundle directory")
    p.add_argument("--config", default=None, help="JSON model config")

    p = sub.add_parser("sweep", help="gamma sweep over homophily levels", parents=[common])
    p.add_argument("config", help="JSON sweep protocol")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        rc = COMMANDS[args.command](args)
        echo = {k: v for k, v in sorted(vars(args).items()) if k not in ("out_dir", "verbose")}
        _write(args.out_dir, "invocation.json", _dump_json(echo))
    except ParamLapError as exc:
        print(f"paramlap {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    return rc or 0


if __name__ == "__main__":
    sys.exit(main())
