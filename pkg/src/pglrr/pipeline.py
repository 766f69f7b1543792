"""End-to-end clustering: Grassmann points -> kernel -> LRR -> affinity -> NCut."""
from __future__ import annotations

from dataclasses import replace
from typing import Optional, Sequence

from .clustering import ClusteringResult, clustering_accuracy, ncut_cluster, symmetrize_affinity
from .gram import GramStack, build_gram_stack, spectral_decompose
from .manifold import ProductGrassmannPoint
from .solvers import (
    CoefficientMatrix,
    LaplacianPair,
    SolverConfig,
    build_laplacian,
    lappglrr_objective,
    lappglrr_solve,
    pglrr_closed_form,
    threshold_from_lambda,
)

SOLVERS = ("closed-form", "alm")


def solve(
    gram: GramStack,
    lap: Optional[LaplacianPair],
    cfg: SolverConfig,
    solver: str = "alm",
) -> CoefficientMatrix:
    """Dispatch to the closed form (PGLRR) or the ALM solver (LapPGLRR).

    The closed form has no graph term, so it is only accepted with ``beta == 0``.
    """
    if solver == "closed-form":
        if cfg.beta:
            raise ValueError("the closed-form solver does not support beta > 0; use 'alm'")
        coef = pglrr_closed_form(spectral_decompose(gram), threshold_from_lambda(cfg.lam))
        # report the same objective the ALM solver does so runs are comparable
        return replace(coef, objective=lappglrr_objective(coef.Z, gram.total, None, cfg.lam, 0.0))
    if solver == "alm":
        if cfg.beta and lap is None:
            raise ValueError("beta > 0 requires a Laplacian")
        return lappglrr_solve(gram, lap, cfg)
    raise ValueError(f"unknown solver {solver!r}; expected one of {SOLVERS}")


def cluster_coefficients(
    coef: CoefficientMatrix, k: int, seed: int = 0, truth: Optional[Sequence[int]] = None
) -> ClusteringResult:
    affinity = symmetrize_affinity(coef.Z)
    labels = ncut_cluster(affinity, k, seed=seed)
    acc = None if truth is None else clustering_accuracy(labels, truth)
    return ClusteringResult(labels=labels, affinity=affinity, k=k, accuracy=acc)


def cluster_points(
    points: Sequence[ProductGrassmannPoint],
    k: int,
    cfg: SolverConfig,
    solver: str = "alm",
    seed: int = 0,
    truth: Optional[Sequence[int]] = None,
) -> tuple[CoefficientMatrix, ClusteringResult]:
    """Run the whole clustering procedure on in-memory points."""
    gram = build_gram_stack(points)
    lap = build_laplacian(points) if cfg.beta else None
    coef = solve(gram, lap, cfg, solver)
    return coef, cluster_coefficients(coef, k, seed=seed, truth=truth)

