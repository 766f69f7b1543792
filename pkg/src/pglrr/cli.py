"""Command-line front end.

Stages are split so the expensive kernel computation is done once::

    pglrr synth   --out data/ --seed 0
    pglrr embed   --manifest data/manifest.json --out emb/
    pglrr cluster --embedding emb/ --lam 1.0 --beta 1e-3 --out run/
    pglrr eval    --result run/result --manifest data/manifest.json
    pglrr sweep   --embedding emb/ --lambdas 0.1 1 10 --betas 0 1e-3 --out sweep/

Exit codes: 0 success, 1 runtime or numerical failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .clustering import clustering_accuracy
from .data_io import (
    SynthSpec,
    load_artifact,
    load_dataset,
    read_manifest,
    read_matrix,
    save_artifact,
    synth_generate,
    write_matrix,
)
from .errors import InvalidK, PGLRRError
from .gram import build_gram_stack
from .pipeline import SOLVERS, cluster_coefficients, solve
from .solvers import SolverConfig, build_laplacian

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2
CONFIG_ECHO = "config.json"


class UsageError(Exception):
    pass


def _view_dims(text: str) -> tuple[int, int]:
    try:
        d, p = (int(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected D:P, got {text!r}")
    return d, p


def _write_echo(out_dir: Path, command: str, params: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    doc = {"command": command, "version": __version__, "parameters": params}
    (out_dir / CONFIG_ECHO).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _echo_params(args: argparse.Namespace) -> dict:
    # output dir left out so copies of one run stay byte-identical
    skip = {"func", "command", "out"}
    out = {}
    for key, val in sorted(vars(args).items()):
        if key in skip:
            continue
        if isinstance(val, Path):
            val = str(val)
        elif isinstance(val, (list, tuple)):
            val = [list(v) if isinstance(v, tuple) else v for v in val]
        out[key] = val
    return out


def _solver_config(args: argparse.Namespace, lam: float, beta: float) -> SolverConfig:
    try:
        return SolverConfig(
            lam=lam,
            beta=beta,
            mu0=args.mu0,
            mu_max=args.mu_max,
            rho=args.rho,
            epsilon=args.epsilon,
            max_iters=args.max_iters,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _load_embedding(path: Path):
    gram = load_artifact(path / "gram", kind="gram_stack")
    lap_dir = path / "laplacian"
    lap = load_artifact(lap_dir, kind="laplacian") if lap_dir.exists() else None
    labels_path = path / "labels.pgmx"
    truth = read_matrix(labels_path)[:, 0].astype(np.int64) if labels_path.exists() else None
    return gram, lap, truth


def _resolve_k(k: Optional[int], n: int, truth) -> int:
    if k is None:
        if truth is None:
            raise UsageError("--k is required when the embedding carries no labels")
        k = len(np.unique(truth))
    if not 2 <= k <= n:
        raise UsageError(f"--k must satisfy 2 <= k <= N={n}, got {k}")
    return k


def _check_solver(solver: str, beta: float) -> None:
    if solver == "closed-form" and beta:
        raise UsageError("the closed-form solver requires --beta 0; use --solver alm")


# -- commands ---------------------------------------------------------------


def cmd_synth(args: argparse.Namespace) -> int:
    spec = SynthSpec(
        k=args.k,
        view_dims=tuple(args.views),
        samples_per_cluster=args.samples_per_cluster,
        frames=args.frames,
        noise_sigma=args.noise,
        seed=args.seed,
        name=args.name,
    )
    try:
        spec.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    manifest = synth_generate(spec, args.out)
    _write_echo(args.out, "synth", _echo_params(args))
    print(f"wrote {spec.k * spec.samples_per_cluster} samples to {manifest}")
    return EXIT_OK


def cmd_embed(args: argparse.Namespace) -> int:
    points, truth, _ = load_dataset(args.manifest, subspace_dims=args.p)
    gram = build_gram_stack(points)
    out: Path = args.out
    save_artifact(out / "gram", gram)
    save_artifact(out / "laplacian", build_laplacian(points))
    if truth is not None:
        write_matrix(out / "labels.pgmx", truth.astype(np.float64))
    params = _echo_params(args)
    params["view_dims"] = [list(v) for v in gram.view_dims]
    _write_echo(out, "embed", params)
    print(f"embedded {gram.n_samples} samples, {gram.n_views} view(s), dims {params['view_dims']}")
    return EXIT_OK


def cmd_cluster(args: argparse.Namespace) -> int:
    _check_solver(args.solver, args.beta)
    gram, lap, truth = _load_embedding(args.embedding)
    k = _resolve_k(args.k, gram.n_samples, truth)
    cfg = _solver_config(args, args.lam, args.beta)
    coef = solve(gram, lap, cfg, args.solver)
    result = cluster_coefficients(coef, k, seed=args.seed, truth=truth)

    out: Path = args.out
    save_artifact(out / "coefficients", coef)
    save_artifact(out / "result", result)
    (out / "labels.txt").write_text("".join(f"{x}\n" for x in result.labels))
    params = _echo_params(args)
    params["k"] = k
    _write_echo(out, "cluster", params)

    print(f"solver: {args.solver}")
    print(f"iterations: {coef.iterations}")
    print(f"converged: {str(coef.converged).lower()}")
    print(f"final_gap: {coef.final_gap:.6g}")
    print(f"objective: {coef.objective:.10g}")
    if result.accuracy is not None:
        print(f"accuracy: {result.accuracy:.4f}")
    if not coef.converged:
        print(
            f"warning: solver stopped after {coef.iterations} iterations without converging",
            file=sys.stderr,
        )
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    result = load_artifact(args.result, kind="clustering_result")
    truth = read_manifest(args.manifest).labels
    if truth is None:
        raise UsageError(f"manifest {args.manifest} carries no labels")
    acc = clustering_accuracy(result.labels, truth)
    print(f"{acc:.4f}")
    if args.out is not None:
        _write_echo(args.out, "eval", _echo_params(args))
        (args.out / "accuracy.txt").write_text(f"{acc:.4f}\n")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    for beta in args.betas:
        _check_solver(args.solver, beta)
    gram, lap, truth = _load_embedding(args.embedding)
    k = _resolve_k(args.k, gram.n_samples, truth)
    grid = [(lam, beta) for lam in args.lambdas for beta in args.betas]
    configs = [_solver_config(args, lam, beta) for lam, beta in grid]

    def run(cfg: SolverConfig):
        coef = solve(gram, lap, cfg, args.solver)
        return coef, cluster_coefficients(coef, k, seed=args.seed, truth=truth)

    with ThreadPoolExecutor(max_workers=args.jobs) as pool:
        results = list(pool.map(run, configs))

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["lambda", "beta", "accuracy", "iterations", "converged"])
    for (lam, beta), (coef, res) in zip(grid, results):
        acc = "" if res.accuracy is None else f"{res.accuracy:.4f}"
        writer.writerow([repr(lam), repr(beta), acc, coef.iterations, str(coef.converged).lower()])
    report = buf.getvalue()

    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.csv").write_text(report)
    params = _echo_params(args)
    params["k"] = k
    _write_echo(out, "sweep", params)
    sys.stdout.write(report)
    return EXIT_OK


# -- parser -----------------------------------------------------------------


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=int, default=None, help="cluster count (default: from labels)")
    p.add_argument("--seed", type=int, default=0, help="k-means seed")
    p.add_argument("--solver", choices=SOLVERS, default="alm")
    p.add_argument("--mu0", type=float, default=1e-6)
    p.add_argument("--mu-max", type=float, default=1e10)
    p.add_argument("--rho", type=float, default=1.1)
    p.add_argument("--epsilon", type=float, default=1e-8)
    p.add_argument("--max-iters", type=int, default=500)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pglrr", description="LRR clustering of multi-view data on product Grassmann manifolds"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic union-of-subspaces dataset")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--k", type=int, default=3, help="number of clusters")
    p.add_argument(
        "--views", type=_view_dims, nargs="+", default=[(30, 5), (30, 5)],
        metavar="D:P", help="ambient and subspace dim for each view",
    )
    p.add_argument("--samples-per-cluster", type=int, default=20)
    p.add_argument("--frames", type=int, default=40, help="frames per sample and view")
    p.add_argument("--noise", type=float, default=0.02, help="Gaussian noise sigma")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--name", default="synthetic")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("embed", help="build Grassmann points, kernel matrices and Laplacian")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--p", type=int, nargs="+", default=None, help="override subspace dim per view")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("cluster", help="solve LRR on an embedding and cluster")
    p.add_argument("--embedding", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--lam", type=float, required=True, help="reconstruction-error weight")
    p.add_argument("--beta", type=float, default=0.0, help="Laplacian weight")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("eval", help="score a clustering result against manifest labels")
    p.add_argument("--result", type=Path, required=True)
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="grid search over lambda and beta")
    p.add_argument("--embedding", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--lambdas", type=float, nargs="+", required=True)
    p.add_argument("--betas", type=float, nargs="+", default=[0.0])
    p.add_argument("--jobs", type=int, default=1)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, InvalidK) as exc:
        print(f"pglrr {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PGLRRError, OSError) as exc:
        print(f"pglrr {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
