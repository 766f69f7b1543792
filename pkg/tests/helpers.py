import os
from pathlib import Path

import numpy as np

from pglrr import ProductGrassmannPoint

from oracles import random_basis


def random_dataset(rng, n, view_dims):
    return [
        ProductGrassmannPoint.from_bases([random_basis(rng, d, p) for d, p in view_dims])
        for _ in range(n)
    ]


def random_psd(rng, n, rank=None):
    B = rng.standard_normal((n, rank or n))
    return B @ B.T


def random_laplacian(rng, n):
    W = rng.random((n, n))
    W = (W + W.T) / 2
    np.fill_diagonal(W, 0.0)
    return W, np.diag(W.sum(axis=1)) - W


def tree_bytes(root):
    root = Path(root)
    out = {}
    for dirpath, _, files in os.walk(root):
        for f in sorted(files):
            p = Path(dirpath) / f
            out[str(p.relative_to(root))] = p.read_bytes()
    return out
