"""Per-view kernel matrices of a product-Grassmann dataset.

For samples ``i, j`` in view ``m`` the kernel entry is
``tr((Xj^T Xi)(Xi^T Xj)) = ||Xi^T Xj||_F^2``, the Frobenius inner product of
the two projection embeddings.  The summed kernel is the only dataset
statistic the LRR solvers consume.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import DimensionError, EmptyDataset, NumericalFailure
from .manifold import GrassmannPoint, ProductGrassmannPoint, check_uniform_views


@dataclass(frozen=True)
class GramStack:
    per_view: np.ndarray  # (M, N, N)
    total: np.ndarray  # (N, N)
    view_dims: tuple  # ((d_m, p_m), ...)

    @property
    def n_samples(self) -> int:
        return self.total.shape[0]

    @property
    def n_views(self) -> int:
        return self.per_view.shape[0]


@dataclass(frozen=True)
class SpectralDecomposition:
    eigvecs: np.ndarray
    eigvals: np.ndarray  # descending, clamped at 0


def gram_entry(Xi: GrassmannPoint, Xj: GrassmannPoint) -> float:
    if Xi.ambient_dim != Xj.ambient_dim:
        raise DimensionError(
            f"ambient dimensions differ: {Xi.ambient_dim} vs {Xj.ambient_dim}"
        )
    c = Xi.basis.T @ Xj.basis
    return float(np.sum(c * c))


def _view_gram(bases: list[np.ndarray]) -> np.ndarray:
    """Kernel matrix for one view; all bases share shape ``(d, p)``."""
    n = len(bases)
    p = bases[0].shape[1]
    stacked = np.concatenate(bases, axis=1)  # d x (N p)
    cross = stacked.T @ stacked
    blocks = cross.reshape(n, p, n, p)
    full = np.einsum("ipjq,ipjq->ij", blocks, blocks)
    # mirror the upper triangle so the result is bit-exactly symmetric
    upper = np.triu(full)
    return upper + np.triu(full, 1).T


def build_gram_stack(points: Sequence[ProductGrassmannPoint]) -> GramStack:
    points = list(points)
    if len(points) < 2:
        raise EmptyDataset(f"need at least 2 samples, got {len(points)}")
    dims = check_uniform_views(points)
    per_view = np.stack(
        [_view_gram([pt.views[m].basis for pt in points]) for m in range(len(dims))]
    )
    total = per_view.sum(axis=0)
    per_view.setflags(write=False)
    total.setflags(write=False)
    return GramStack(per_view=per_view, total=total, view_dims=tuple(map(tuple, dims)))


def spectral_decompose(G: GramStack | np.ndarray) -> SpectralDecomposition:
    """Eigen-decomposition of the summed kernel, eigenvalues descending.

    Accepts a :class:`GramStack` or a bare symmetric matrix.  Negative
    round-off eigenvalues are clamped to zero.
    """
    delta = G.total if isinstance(G, GramStack) else np.asarray(G, dtype=np.float64)
    try:
        w, U = scipy.linalg.eigh(delta)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalFailure(f"eigendecomposition failed: {exc}") from exc
    order = np.argsort(w)[::-1]
    return SpectralDecomposition(
        eigvecs=np.ascontiguousarray(U[:, order]), eigvals=np.maximum(w[order], 0.0)
    )
