"""Affinity construction, normalized-cut spectral clustering and accuracy."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment
from sklearn.cluster import KMeans

from .errors import InvalidK, LengthMismatch

DEGREE_EPS = 1e-12
KMEANS_RESTARTS = 20


@dataclass(frozen=True)
class ClusteringResult:
    labels: np.ndarray
    affinity: np.ndarray
    k: int
    accuracy: Optional[float] = None


def symmetrize_affinity(Z) -> np.ndarray:
    """``(|Z| + |Z^T|) / 2``; accepts a raw matrix or a ``CoefficientMatrix``."""
    Z = np.abs(np.asarray(getattr(Z, "Z", Z), dtype=np.float64))
    # a + b == b + a in IEEE arithmetic, so this is exactly symmetric
    return (Z + Z.T) / 2


def relabel_by_first_appearance(labels: Sequence[int]) -> np.ndarray:
    labels = np.asarray(labels)
    _, first = np.unique(labels, return_index=True)
    order = labels[np.sort(first)]
    mapping = {old: new for new, old in enumerate(order)}
    return np.array([mapping[x] for x in labels], dtype=np.int64)


def spectral_embedding(affinity: np.ndarray, k: int) -> np.ndarray:
    """Row-normalised top-``k`` eigenvectors of ``D^-1/2 W D^-1/2``."""
    W = np.asarray(affinity, dtype=np.float64) + DEGREE_EPS * np.eye(affinity.shape[0])
    inv_sqrt = 1.0 / np.sqrt(W.sum(axis=1))
    op = inv_sqrt[:, None] * W * inv_sqrt[None, :]
    op = (op + op.T) / 2
    n = op.shape[0]
    _, vecs = scipy.linalg.eigh(op, subset_by_index=[n - k, n - 1])
    vecs = vecs[:, ::-1]
    # fix eigenvector signs: largest-magnitude entry positive
    pivot = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[pivot, np.arange(k)])
    signs[signs == 0] = 1.0
    vecs = vecs * signs
    norms = np.linalg.norm(vecs, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return vecs / norms


def ncut_cluster(affinity: np.ndarray, k: int, seed: int = 0) -> np.ndarray:
    """Normalized-cut labels for a symmetric nonnegative affinity.

    Spectral embedding followed by k-means (20 seeded restarts, best
    inertia kept).  Labels are renumbered in order of first appearance so
    identical partitions give identical label vectors.
    """
    affinity = np.asarray(affinity, dtype=np.float64)
    n = affinity.shape[0]
    if affinity.shape != (n, n):
        raise ValueError(f"affinity must be square, got {affinity.shape}")
    if not 2 <= k <= n:
        raise InvalidK(f"need 2 <= k <= N, got k={k}, N={n}")
    if np.any(affinity < 0):
        raise ValueError("affinity must be nonnegative")
    emb = spectral_embedding(affinity, k)
    km = KMeans(n_clusters=k, n_init=KMEANS_RESTARTS, random_state=seed)
    return relabel_by_first_appearance(km.fit_predict(emb))


def contingency(pred: Sequence[int], truth: Sequence[int]) -> np.ndarray:
    _, p_idx = np.unique(np.asarray(pred), return_inverse=True)
    _, t_idx = np.unique(np.asarray(truth), return_inverse=True)
    table = np.zeros((p_idx.max() + 1, t_idx.max() + 1), dtype=np.int64)
    np.add.at(table, (p_idx, t_idx), 1)
    return table


def clustering_accuracy(pred: Sequence[int], truth: Sequence[int]) -> float:
    """Fraction of points correct under the best one-to-one label matching."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise LengthMismatch(f"{pred.shape[0]} predictions vs {truth.shape[0]} labels")
    if pred.size == 0:
        raise LengthMismatch("cannot score an empty labelling")
    table = contingency(pred, truth)
    rows, cols = linear_sum_assignment(table, maximize=True)
    return float(table[rows, cols].sum()) / pred.size
