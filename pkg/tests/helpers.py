"""Shared brute-force oracles for the test suite.

Everything here is deliberately independent of the package's own evaluation
paths: operators are embedded by explicit index arithmetic, projectors come
from a class-sum polynomial rather than character sums, and averages are
computed by full enumeration.
"""

from __future__ import annotations

import itertools
from math import prod

import numpy as np

from avqsbench.schur_weyl import YoungFrame, young_frames


def embed_operator(op: np.ndarray, dims, targets) -> np.ndarray:
    """Full-space matrix acting as ``op`` on the target factors, identity
    elsewhere, built by explicit basis-index permutation."""
    dims = tuple(dims)
    n = len(dims)
    targets = sorted(targets)
    rest = [i for i in range(n) if i not in targets]
    d_rest = prod(dims[i] for i in rest) if rest else 1
    front = np.kron(op, np.eye(d_rest))
    # permutation matrix sending the original order to (targets, rest)
    order = targets + rest
    total = prod(dims)
    digits = np.array(np.unravel_index(np.arange(total), dims))
    front_shape = tuple(dims[i] for i in order)
    front_index = np.ravel_multi_index(tuple(digits[order, :]), front_shape)
    perm = np.zeros((total, total))
    perm[front_index, np.arange(total)] = 1.0
    return perm.T @ front @ perm


def swap_class_sum(l: int, d: int) -> np.ndarray:
    """Sum of all transposition operators on the l-fold tensor power."""
    dim = d**l
    shape = (d,) * l
    digits = np.array(np.unravel_index(np.arange(dim), shape))
    cols = np.arange(dim)
    total = np.zeros((dim, dim))
    for i in range(l):
        for j in range(i + 1, l):
            order = list(range(l))
            order[i], order[j] = j, i
            rows = np.ravel_multi_index(tuple(digits[order, :]), shape)
            total[rows, cols] += 1.0
    return total


def content_sum(frame: YoungFrame) -> int:
    """Sum of (column - row) over the cells; the transposition class sum
    acts as this scalar on the frame's isotypic block."""
    return sum(j - i for i, row_len in enumerate(frame.parts) for j in range(row_len))


def lagrange_projectors(l: int, d: int) -> dict[tuple[int, ...], np.ndarray]:
    """Isotypic projectors from Lagrange interpolation in the transposition
    class sum; valid whenever the content sums of the admissible frames are
    pairwise distinct (asserted)."""
    frames = young_frames(l, d)
    contents = [content_sum(f) for f in frames]
    assert len(set(contents)) == len(contents), "content sums collide; oracle not applicable"
    t = swap_class_sum(l, d)
    eye = np.eye(d**l)
    out = {}
    for f, c in zip(frames, contents):
        proj = eye.copy()
        for c_other in contents:
            if c_other != c:
                proj = proj @ (t - c_other * eye) / (c - c_other)
        out[f.parts] = proj
    return out


def kron_power(mat: np.ndarray, copies: int) -> np.ndarray:
    out = mat
    for _ in range(copies - 1):
        out = np.kron(out, mat)
    return out


def random_kraus_channel(rng, d_in: int, d_out: int, n_kraus: int) -> list[np.ndarray]:
    """Trace-preserving Kraus family from a Haar-ish random isometry."""
    g = rng.standard_normal((d_out * n_kraus, d_in)) + 1j * rng.standard_normal(
        (d_out * n_kraus, d_in)
    )
    q, _ = np.linalg.qr(g)
    return [q[i * d_out : (i + 1) * d_out, :] for i in range(n_kraus)]


def random_instrument_kraus(rng, d_in: int, d_out: int, n_outcomes: int) -> list[np.ndarray]:
    """One Kraus operator per outcome, jointly trace preserving."""
    return random_kraus_channel(rng, d_in, d_out, n_outcomes)


def all_words(n_symbols: int, l: int):
    return list(itertools.product(range(n_symbols), repeat=l))
