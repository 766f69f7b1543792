"""Reference computations that share no code path with the package."""
import itertools

import numpy as np


def random_basis(rng, d, p):
    return np.linalg.qr(rng.standard_normal((d, p)))[0]


def random_orthogonal(rng, p):
    q, r = np.linalg.qr(rng.standard_normal((p, p)))
    return q * np.sign(np.diag(r))


def projector(basis):
    return basis @ basis.T


def embedding_dist_sq(X, Y):
    diff = projector(X) - projector(Y)
    return 0.5 * np.sum(diff * diff)


def embedding_inner(X, Y):
    return np.sum(projector(X) * projector(Y))


def top_left_projector(S, p):
    U, _, _ = np.linalg.svd(S, full_matrices=True)
    return U[:, :p] @ U[:, :p].T


def soft_threshold_svd(M, tau):
    U, s, Vt = np.linalg.svd(M, full_matrices=True)
    S = np.zeros(M.shape)
    k = min(M.shape)
    S[:k, :k] = np.diag(np.maximum(s - tau, 0.0))
    return U @ S @ Vt


def nuclear(M):
    return np.linalg.svd(M, compute_uv=False).sum()


def threshold_problem_objective(Z, delta, t):
    """0.5 * ||(Z - I) delta^(1/2)||_F^2 + t * ||Z||_* via an explicit square root."""
    w, V = np.linalg.eigh(delta)
    root = (V * np.sqrt(np.maximum(w, 0.0))) @ V.T
    R = Z @ root - root
    return 0.5 * np.sum(R * R) + t * nuclear(Z)


def proximal_gradient(delta, t, iters=20000, tol=1e-15):
    """FISTA on 0.5 * ||(Z - I) delta^(1/2)||^2 + t ||Z||_*."""
    n = delta.shape[0]
    step = 1.0 / np.linalg.eigvalsh(delta).max()
    Z = np.zeros((n, n))
    Y = Z.copy()
    tk = 1.0
    for _ in range(iters):
        grad = (Y - np.eye(n)) @ delta
        Z_new = soft_threshold_svd(Y - step * grad, step * t)
        tk_new = (1 + np.sqrt(1 + 4 * tk * tk)) / 2
        Y = Z_new + ((tk - 1) / tk_new) * (Z_new - Z)
        if np.abs(Z_new - Z).max() < tol:
            Z = Z_new
            break
        Z, tk = Z_new, tk_new
    return Z


def laplacian_double_sum(W, Z):
    n = W.shape[0]
    total = 0.0
    for i in range(n):
        for j in range(n):
            diff = Z[:, i] - Z[:, j]
            total += W[i, j] * diff @ diff
    return total


def brute_force_accuracy(pred, truth):
    pred = list(pred)
    truth = list(truth)
    p_labels = sorted(set(pred))
    t_labels = sorted(set(truth))
    best = 0
    # injective maps from the smaller label set into the larger one
    if len(p_labels) <= len(t_labels):
        for image in itertools.permutations(t_labels, len(p_labels)):
            m = dict(zip(p_labels, image))
            best = max(best, sum(m[a] == b for a, b in zip(pred, truth)))
    else:
        for image in itertools.permutations(p_labels, len(t_labels)):
            m = dict(zip(t_labels, image))
            best = max(best, sum(m[b] == a for a, b in zip(pred, truth)))
    return best / len(pred)


def finite_difference_grad(f, Z, h=1e-6):
    G = np.zeros_like(Z)
    for idx in np.ndindex(Z.shape):
        E = np.zeros_like(Z)
        E[idx] = h
        G[idx] = (f(Z + E) - f(Z - E)) / (2 * h)
    return G
