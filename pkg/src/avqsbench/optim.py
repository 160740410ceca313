"""Deterministic optimization helpers over the probability simplex."""

from __future__ import annotations

from typing import Callable

import numpy as np
from scipy.optimize import minimize


def project_to_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {p : p >= 0, sum p = 1} (sort-based)."""
    v = np.asarray(v, dtype=float)
    n = v.size
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    rho = np.nonzero(u * np.arange(1, n + 1) > (css - 1))[0][-1]
    theta = (css[rho] - 1.0) / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def _softmax_embed(z: np.ndarray) -> np.ndarray:
    """Map R^{n-1} onto the interior of the n-simplex (last logit fixed at 0)."""
    full = np.concatenate([z, [0.0]])
    full -= full.max()
    e = np.exp(full)
    return e / e.sum()


def maximize_over_simplex(
    fn: Callable[[np.ndarray], float],
    n: int,
    restarts: int = 8,
    seed: int = 0,
    maxiter: int | None = None,
) -> tuple[np.ndarray, float, dict]:
    """Derivative-free maximization of fn over the n-simplex.

    Runs Nelder-Mead in softmax coordinates from the uniform point plus
    seeded random restarts; deterministic for a fixed seed.
    """
    if n < 1:
        raise ValueError("simplex dimension must be >= 1")
    if n == 1:
        p = np.ones(1)
        return p, float(fn(p)), {"restarts": 0, "iterations": 0, "seed": seed}
    rng = np.random.default_rng(seed)
    inits = [np.zeros(n - 1)]
    inits += [1.5 * rng.standard_normal(n - 1) for _ in range(max(restarts - 1, 0))]
    best_p, best_v = None, -np.inf
    total_iters = 0
    options = {
        "xatol": 1e-10,
        "fatol": 1e-13,
        "maxiter": maxiter or 800 * n,
        "maxfev": maxiter or 800 * n,
    }
    for z0 in inits:
        res = minimize(lambda z: -fn(_softmax_embed(z)), z0, method="Nelder-Mead", options=options)
        total_iters += int(res.nit)
        if -res.fun > best_v:
            best_v = float(-res.fun)
            best_p = _softmax_embed(res.x)
    return best_p, best_v, {"restarts": len(inits), "iterations": total_iters, "seed": seed}


def minimize_over_simplex(
    fn: Callable[[np.ndarray], float],
    n: int,
    grad: Callable[[np.ndarray], np.ndarray] | None = None,
    init: np.ndarray | None = None,
    iters: int = 500,
    tol: float = 1e-6,
    step0: float | None = None,
) -> tuple[np.ndarray, float, dict]:
    """Projected (sub)gradient descent of fn over the n-simplex.

    With no gradient callback, a forward-difference estimate along the
    coordinate axes is used (projection keeps iterates feasible).  The best
    iterate seen is returned; stops early once the best value stalls below
    ``tol`` improvement for a stretch of iterations.
    """
    if n == 1:
        p = np.ones(1)
        return p, float(fn(p)), {"iterations": 0}
    p = project_to_simplex(np.full(n, 1.0 / n) if init is None else np.asarray(init, dtype=float))
    best_p, best_v = p.copy(), float(fn(p))
    if step0 is None:
        step0 = max(abs(best_v), 0.1)
    stall = 0
    used = 0
    h = 1e-6
    for t in range(iters):
        used = t + 1
        if grad is not None:
            g = np.asarray(grad(p), dtype=float)
        else:
            base = fn(p)
            g = np.empty(n)
            for i in range(n):
                q = p.copy()
                q[i] += h
                g[i] = (fn(project_to_simplex(q)) - base) / h
        norm = np.linalg.norm(g)
        if norm < 1e-14:
            break
        p = project_to_simplex(p - (step0 / np.sqrt(t + 1.0)) * g / norm)
        v = float(fn(p))
        if v < best_v - tol:
            best_v, best_p = v, p.copy()
            stall = 0
        else:
            if v < best_v:
                best_v, best_p = v, p.copy()
            stall += 1
            if stall >= 50:
                break
    return best_p, best_v, {"iterations": used}


def hermitian_from_params(theta: np.ndarray, dim: int) -> np.ndarray:
    """Pack a real parameter vector of length dim^2 into a Hermitian matrix."""
    theta = np.asarray(theta, dtype=float)
    if theta.size != dim * dim:
        raise ValueError(f"need {dim * dim} parameters for a {dim}x{dim} Hermitian matrix")
    h = np.zeros((dim, dim), dtype=complex)
    h[np.diag_indices(dim)] = theta[:dim]
    off = theta[dim:].reshape(2, -1)
    iu = np.triu_indices(dim, k=1)
    h[iu] = off[0] + 1j * off[1]
    h[(iu[1], iu[0])] = off[0] - 1j * off[1]
    return h


def unitary_from_hermitian(h: np.ndarray) -> np.ndarray:
    """exp(iH) for Hermitian H via eigendecomposition."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(1j * w)) @ v.conj().T
