"""LRR solvers on the product Grassmann manifold.

Two problems are handled, both expressed purely through the summed kernel
``delta`` (see :mod:`pglrr.gram`):

* PGLRR, ``min ||Z||_* + lam * ||E||_F^2``, solved in closed form from the
  eigendecomposition of ``delta``.
* LapPGLRR, the same with an added ``2 * beta * tr(Z L Z^T)`` graph term,
  solved by an augmented Lagrangian scheme with splitting ``J = Z``.

Throughout, ``lam`` is the weight on the reconstruction error.  The closed
form is naturally parameterised by an eigenvalue threshold instead; use
:func:`threshold_from_lambda` to move between the two.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from .errors import NumericalFailure
from .gram import GramStack, SpectralDecomposition
from .manifold import check_uniform_views, pgm_dist_sq


@dataclass(frozen=True)
class CoefficientMatrix:
    Z: np.ndarray
    iterations: int
    converged: bool
    final_gap: float
    objective: float


@dataclass(frozen=True)
class LaplacianPair:
    W: np.ndarray
    L: np.ndarray


@dataclass(frozen=True)
class SolverConfig:
    lam: float
    beta: float = 0.0
    mu0: float = 1e-6
    mu_max: float = 1e10
    rho: float = 1.1
    epsilon: float = 1e-8
    max_iters: int = 500

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        if not self.beta >= 0:
            raise ValueError(f"beta must be nonnegative, got {self.beta}")
        if not (self.mu0 > 0 and self.mu_max > 0 and self.epsilon > 0):
            raise ValueError("mu0, mu_max and epsilon must be positive")
        if not self.rho > 1:
            raise ValueError(f"rho must exceed 1, got {self.rho}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be at least 1, got {self.max_iters}")


@dataclass(frozen=True)
class IterationState:
    """Snapshot handed to the ALM callback after each Z-update.

    ``A`` and ``mu`` are the values used for that Z-update, i.e. before the
    multiplier and penalty steps.
    """

    iteration: int
    Z: np.ndarray
    J: np.ndarray
    A: np.ndarray
    mu: float
    gap: float


def threshold_from_lambda(lam: float) -> float:
    """Eigenvalue threshold of the closed form equivalent to error weight ``lam``.

    With error weight ``lam`` the per-eigenvalue problem is
    ``lam * s * (z - 1)^2 + |z|``, minimised at ``z = 1 - 1 / (2 lam s)``.
    """
    return 1.0 / (2.0 * lam)


def laplacian_from_weights(W: np.ndarray) -> LaplacianPair:
    W = np.asarray(W, dtype=np.float64).copy()
    np.fill_diagonal(W, 0.0)
    L = np.diag(W.sum(axis=1)) - W
    return LaplacianPair(W=W, L=L)


def laplacian_from_gram(G: GramStack) -> LaplacianPair:
    """Graph Laplacian with weights equal to product-Grassmann distances.

    Uses ``d_g^2 = (p_i + p_j) / 2 - Delta_ij`` per view.  Prefer
    :func:`build_laplacian` when the points are at hand: this form loses
    accuracy for nearly coincident subspaces.
    """
    dist_sq = np.zeros_like(G.total)
    for m, (_, p) in enumerate(G.view_dims):
        dist_sq += p - G.per_view[m]
    dist_sq = np.maximum(dist_sq, 0.0)
    W = np.sqrt(np.triu(dist_sq, 1))
    return laplacian_from_weights(W + W.T)


def build_laplacian(points) -> LaplacianPair:
    """Laplacian ``D - W`` with ``W_ij`` the product-Grassmann distance of samples i, j."""
    points = list(points)
    check_uniform_views(points)
    n = len(points)
    W = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            W[i, j] = W[j, i] = np.sqrt(pgm_dist_sq(points[i], points[j]))
    return laplacian_from_weights(W)


def closed_form_objective(Z: np.ndarray, delta: np.ndarray, threshold: float) -> float:
    """``0.5 * ||Z delta^(1/2) - delta^(1/2)||_F^2 + threshold * ||Z||_*``."""
    fit = np.trace(Z @ delta @ Z.T) - 2.0 * np.trace(Z @ delta) + np.trace(delta)
    return 0.5 * float(fit) + threshold * nuclear_norm(Z)


def pglrr_closed_form(decomp: SpectralDecomposition, threshold: float) -> CoefficientMatrix:
    """Closed-form PGLRR minimiser ``U diag(1 - threshold / s_i)_+ U^T``.

    ``threshold`` is the eigenvalue cut-off; eigen-directions with
    ``s_i <= threshold`` are dropped.  For an error weight ``lam`` pass
    ``threshold_from_lambda(lam)``.
    """
    if not threshold > 0:
        raise ValueError(f"threshold must be positive, got {threshold}")
    s = decomp.eigvals
    keep = s > threshold
    shrink = np.zeros_like(s)
    shrink[keep] = 1.0 - threshold / s[keep]
    U = decomp.eigvecs
    Z = (U * shrink) @ U.T
    Z = (Z + Z.T) / 2
    objective = 0.5 * float(np.sum(s * (shrink - 1.0) ** 2)) + threshold * float(shrink.sum())
    return CoefficientMatrix(Z=Z, iterations=0, converged=True, final_gap=0.0, objective=objective)


def nuclear_norm(M: np.ndarray) -> float:
    return float(np.linalg.svd(M, compute_uv=False).sum())


def svt(M: np.ndarray, tau: float) -> np.ndarray:
    """Singular value thresholding, the proximal map of ``tau * ||.||_*``."""
    if tau < 0:
        raise ValueError(f"tau must be nonnegative, got {tau}")
    try:
        U, s, Vt = np.linalg.svd(M, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD did not converge: {exc}") from exc
    s = np.maximum(s - tau, 0.0)
    r = int(np.count_nonzero(s))
    return (U[:, :r] * s[:r]) @ Vt[:r]


def update_J(Z: np.ndarray, A: np.ndarray, mu: float) -> np.ndarray:
    return svt(Z + A / mu, 1.0 / mu)


def update_Z(
    delta: np.ndarray,
    L: Optional[np.ndarray],
    J: np.ndarray,
    A: np.ndarray,
    cfg: SolverConfig,
    mu: float,
) -> np.ndarray:
    """Exact minimiser of the smooth ALM subproblem in ``Z``.

    Solves ``Z (2 lam delta + 4 beta L + mu I) = 2 lam delta + mu J - A``,
    written as a correction ``Z = J + X`` so that the large ``mu J`` terms
    cancel analytically instead of in floating point.
    """
    smooth = 2.0 * cfg.lam * delta
    if L is not None and cfg.beta:
        smooth = smooth + 4.0 * cfg.beta * L
    system = smooth + mu * np.eye(delta.shape[0])
    rhs = 2.0 * cfg.lam * delta - A - J @ smooth
    try:
        factor = scipy.linalg.cho_factor(system, lower=False, check_finite=True)
        X = scipy.linalg.cho_solve(factor, rhs.T).T
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalFailure(f"Z-update linear solve failed: {exc}") from exc
    return J + X


def lappglrr_objective(
    Z: np.ndarray, delta: np.ndarray, L: Optional[np.ndarray], lam: float, beta: float
) -> float:
    """``-2 lam tr(Z delta) + lam tr(Z delta Z^T) + 2 beta tr(Z L Z^T) + ||Z||_*``."""
    val = -2.0 * lam * np.trace(Z @ delta) + lam * np.trace(Z @ delta @ Z.T)
    if L is not None and beta:
        val += 2.0 * beta * np.trace(Z @ L @ Z.T)
    return float(val) + nuclear_norm(Z)


def lappglrr_solve(
    G: GramStack | np.ndarray,
    lap: Optional[LaplacianPair],
    cfg: SolverConfig,
    callback: Optional[Callable[[IterationState], None]] = None,
) -> CoefficientMatrix:
    """Augmented Lagrangian solver for Laplacian-regularised LRR.

    Starts from ``Z = J = A = 0`` and alternates the J-update (SVT), the
    Z-update (linear solve), the multiplier step ``A += mu (Z - J)`` and
    ``mu = min(rho mu, mu_max)`` until ``max|Z - J| < epsilon``.  Hitting
    ``max_iters`` is not an error; the result carries ``converged=False``.
    """
    delta = G.total if isinstance(G, GramStack) else np.asarray(G, dtype=np.float64)
    n = delta.shape[0]
    L = lap.L if lap is not None else None
    if L is not None and L.shape != delta.shape:
        raise ValueError(f"Laplacian shape {L.shape} does not match kernel {delta.shape}")

    Z = np.zeros((n, n))
    J = np.zeros((n, n))
    A = np.zeros((n, n))
    mu = cfg.mu0
    gap = np.inf
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        J = update_J(Z, A, mu)
        Z = update_Z(delta, L, J, A, cfg, mu)
        diff = Z - J
        gap = float(np.abs(diff).max())
        if callback is not None:
            callback(IterationState(iteration=it, Z=Z, J=J, A=A, mu=mu, gap=gap))
        A = A + mu * diff
        mu = min(cfg.rho * mu, cfg.mu_max)
        if not np.all(np.isfinite(Z)):
            raise NumericalFailure(f"non-finite iterate at iteration {it}")
        if gap < cfg.epsilon:
            converged = True
            break

    return CoefficientMatrix(
        Z=Z,
        iterations=it,
        converged=converged,
        final_gap=gap,
        objective=lappglrr_objective(Z, delta, L, cfg.lam, cfg.beta),
    )
