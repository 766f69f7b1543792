"""Grassmann and product-Grassmann points, projection embedding and distances.

A subspace is carried around as a ``d x p`` orthonormal basis.  Everything
downstream depends only on the projector ``X X^T``, so bases are never
canonicalised for sign or in-block rotation.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateInput, DimensionError

ORTHONORMAL_TOL = 1e-10
RANK_TOL = 1e-12


@dataclass(frozen=True)
class GrassmannPoint:
    """A p-dimensional subspace of R^d, held as an orthonormal basis."""

    basis: np.ndarray

    def __post_init__(self):
        basis = np.asarray(self.basis, dtype=np.float64)
        if basis.ndim != 2:
            raise DimensionError(f"basis must be 2-D, got shape {basis.shape}")
        d, p = basis.shape
        if p < 1 or d < p:
            raise DimensionError(f"need 1 <= p <= d, got d={d}, p={p}")
        err = np.abs(basis.T @ basis - np.eye(p)).max()
        if err > ORTHONORMAL_TOL:
            raise DimensionError(f"basis columns are not orthonormal (max error {err:.3g})")
        basis.setflags(write=False)
        object.__setattr__(self, "basis", basis)

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def subspace_dim(self) -> int:
        return self.basis.shape[1]


@dataclass(frozen=True)
class ProductGrassmannPoint:
    """One sample: an ordered tuple of Grassmann points, one per view."""

    views: tuple

    def __post_init__(self):
        views = tuple(self.views)
        if not views:
            raise DimensionError("a product Grassmann point needs at least one view")
        for v in views:
            if not isinstance(v, GrassmannPoint):
                raise TypeError(f"views must be GrassmannPoint, got {type(v).__name__}")
        object.__setattr__(self, "views", views)

    @property
    def n_views(self) -> int:
        return len(self.views)

    @property
    def view_dims(self) -> list[tuple[int, int]]:
        return [(v.ambient_dim, v.subspace_dim) for v in self.views]

    @classmethod
    def from_bases(cls, bases: Sequence[np.ndarray]) -> "ProductGrassmannPoint":
        return cls(tuple(GrassmannPoint(b) for b in bases))


def grassmann_from_matrix(S: np.ndarray, p: int) -> GrassmannPoint:
    """Span of the top-``p`` left singular vectors of a ``d x n`` frame matrix.

    Each column of ``S`` is one vectorised frame (row-major flattening of the
    image).  Raises ``DegenerateInput`` rather than padding when ``S`` has
    numerical rank below ``p``.
    """
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2:
        raise DimensionError(f"frame matrix must be 2-D, got shape {S.shape}")
    d, n = S.shape
    if p < 1:
        raise DimensionError(f"subspace dimension must be positive, got {p}")
    if n < p or d < p:
        raise DimensionError(f"cannot extract a {p}-dim subspace from a {d}x{n} matrix")
    if not np.all(np.isfinite(S)):
        raise DegenerateInput("frame matrix contains non-finite entries")
    U, s, _ = np.linalg.svd(S, full_matrices=False)
    if s[0] == 0.0 or s[p - 1] <= RANK_TOL * s[0]:
        raise DegenerateInput(f"frame matrix has numerical rank < {p}")
    return GrassmannPoint(U[:, :p])


def suggest_subspace_dim(S: np.ndarray, energy: float = 0.9) -> int:
    """Smallest p whose leading singular values hold ``energy`` of the total mass."""
    if not 0.0 < energy <= 1.0:
        raise ValueError(f"energy must lie in (0, 1], got {energy}")
    s = np.linalg.svd(np.asarray(S, dtype=np.float64), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        raise DegenerateInput("cannot pick a subspace dimension for a zero matrix")
    cum = np.cumsum(s)
    # compare against cum[-1] so energy=1.0 is reachable regardless of summation order
    return int(np.searchsorted(cum, energy * cum[-1], side="left")) + 1


def embed(X: GrassmannPoint) -> np.ndarray:
    """Projection embedding ``X X^T`` (symmetric, idempotent, trace p)."""
    P = X.basis @ X.basis.T
    return (P + P.T) / 2


def _check_same_ambient(X: GrassmannPoint, Y: GrassmannPoint) -> None:
    if X.ambient_dim != Y.ambient_dim:
        raise DimensionError(
            f"ambient dimensions differ: {X.ambient_dim} vs {Y.ambient_dim}"
        )


def grassmann_dist_sq(X: GrassmannPoint, Y: GrassmannPoint) -> float:
    """Squared projection distance ``0.5 * ||X X^T - Y Y^T||_F^2``.

    Evaluated as ``0.5 * (||(I - XX^T) Y||^2 + ||(I - YY^T) X||^2)`` which is
    algebraically identical but avoids the cancellation in ``p - ||X^T Y||^2``
    and never forms a ``d x d`` matrix.
    """
    _check_same_ambient(X, Y)
    a, b = X.basis, Y.basis
    cross = a.T @ b
    ry = b - a @ cross
    rx = a - b @ cross.T
    return 0.5 * (float(np.sum(ry * ry)) + float(np.sum(rx * rx)))


def pgm_dist_sq(A: ProductGrassmannPoint, B: ProductGrassmannPoint) -> float:
    """Sum of per-view squared Grassmann distances (all view weights 1)."""
    if A.view_dims != B.view_dims:
        raise DimensionError(f"view structures differ: {A.view_dims} vs {B.view_dims}")
    return float(sum(grassmann_dist_sq(x, y) for x, y in zip(A.views, B.views)))


def check_uniform_views(points: Sequence[ProductGrassmannPoint]) -> list[tuple[int, int]]:
    """Return the shared view structure of a dataset, or raise ``DimensionError``."""
    dims = points[0].view_dims
    for i, pt in enumerate(points):
        if pt.view_dims != dims:
            raise DimensionError(
                f"sample {i} has view structure {pt.view_dims}, expected {dims}"
            )
    return dims
