"""Dense d-mode tensor arithmetic on numpy arrays.

A tensor is a plain ``numpy.ndarray`` of float64 with ``ndim >= 1``. All of
the package shares one linearization convention:

    vec(T) flattens in C order (last mode varies fastest), so that
    vec(x_1 o x_2 o ... o x_d) == kron(x_1, x_2, ..., x_d)

with ``kron`` in numpy's convention (first argument varies slowest). Every
inner product, measurement row, unfolding and file format in this package
inherits this ordering; nothing else about the math depends on the choice.
"""

from __future__ import annotations

from functools import reduce
from typing import Sequence

import numpy as np


def as_tensor(t) -> np.ndarray:
    """Coerce input to a float64 ndarray with at least one mode."""
    arr = np.asarray(t, dtype=np.float64)
    if arr.ndim == 0:
        raise ValueError("a tensor needs at least one mode")
    return arr


def vec(t: np.ndarray) -> np.ndarray:
    """Flatten a tensor to a vector in the documented (C, last-mode-fastest) order."""
    return np.asarray(t, dtype=np.float64).reshape(-1)


def unvec(v: np.ndarray, dims: Sequence[int]) -> np.ndarray:
    """Inverse of :func:`vec` for the given mode sizes."""
    v = np.asarray(v, dtype=np.float64)
    n = int(np.prod(dims))
    if v.size != n:
        raise ValueError(f"vector of length {v.size} does not fill dims {tuple(dims)}")
    return v.reshape(tuple(dims))


def inner(s: np.ndarray, t: np.ndarray) -> float:
    """Euclidean inner product of the vectorizations."""
    s = np.asarray(s, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    if s.shape != t.shape:
        raise ValueError(f"shape mismatch: {s.shape} vs {t.shape}")
    return float(np.dot(s.reshape(-1), t.reshape(-1)))


def frob_norm(t: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(t, dtype=np.float64).reshape(-1)))


def unfold(t: np.ndarray, mode: int) -> np.ndarray:
    """Mode-``mode`` unfolding: an ``n_k x (N / n_k)`` matrix.

    Row i is the slice of ``t`` with index i in the chosen mode, flattened in
    the tensor's own C order over the remaining modes.
    """
    t = np.asarray(t, dtype=np.float64)
    if not 0 <= mode < t.ndim:
        raise ValueError(f"mode {mode} out of range for a {t.ndim}-mode tensor")
    return np.moveaxis(t, mode, 0).reshape(t.shape[mode], -1)


def fold(mat: np.ndarray, mode: int, dims: Sequence[int]) -> np.ndarray:
    """Inverse of :func:`unfold` with target mode sizes ``dims``."""
    dims = tuple(int(d) for d in dims)
    mat = np.asarray(mat, dtype=np.float64)
    if not 0 <= mode < len(dims):
        raise ValueError(f"mode {mode} out of range for dims {dims}")
    lead = (dims[mode],) + dims[:mode] + dims[mode + 1:]
    if mat.shape != (dims[mode], int(np.prod(dims)) // dims[mode]):
        raise ValueError(f"matrix shape {mat.shape} does not fold into dims {dims} at mode {mode}")
    return np.moveaxis(mat.reshape(lead), 0, mode)


def mode_product(t: np.ndarray, mat: np.ndarray, mode: int) -> np.ndarray:
    """Contract matrix ``mat`` (m x n_k) against mode ``mode`` of ``t``.

    Output has the tensor's dims with ``n_k`` replaced by ``m``:
    out[i_1 .. j .. i_d] = sum_k mat[j, k] * t[i_1 .. k .. i_d].
    """
    t = np.asarray(t, dtype=np.float64)
    mat = np.asarray(mat, dtype=np.float64)
    if mat.ndim != 2:
        raise ValueError("mode_product expects a matrix")
    if mat.shape[1] != t.shape[mode]:
        raise ValueError(
            f"matrix has {mat.shape[1]} columns, mode {mode} has size {t.shape[mode]}"
        )
    dims = list(t.shape)
    dims[mode] = mat.shape[0]
    return fold(mat @ unfold(t, mode), mode, dims)


def rank1(factors: Sequence[np.ndarray]) -> np.ndarray:
    """Outer product x_1 o x_2 o ... o x_d as a dense tensor."""
    if len(factors) == 0:
        raise ValueError("rank1 needs at least one factor")
    vecs = [np.asarray(f, dtype=np.float64).reshape(-1) for f in factors]
    return reduce(np.multiply.outer, vecs)


def kron_factors_to_row(factors: Sequence[np.ndarray]) -> np.ndarray:
    """Materialize kron(x_1, ..., x_d); equals vec(rank1(factors))."""
    vecs = [np.asarray(f, dtype=np.float64).reshape(-1) for f in factors]
    return reduce(np.kron, vecs)


def kron_contract(factors: Sequence[np.ndarray], t: np.ndarray) -> float:
    """<x_1 kron ... kron x_d, vec(t)> without materializing the Kronecker row.

    Contracts one mode at a time, so the cost is O(N) for an N-entry tensor
    (the materialized dot product would pay O(N) just to build the row, and
    O(N * d) overall in intermediate storage).
    """
    t = np.asarray(t, dtype=np.float64)
    if len(factors) != t.ndim:
        raise ValueError(f"{len(factors)} factors for a {t.ndim}-mode tensor")
    out = t
    for f in factors:
        f = np.asarray(f, dtype=np.float64).reshape(-1)
        if f.size != out.shape[0]:
            raise ValueError(f"factor of length {f.size} against mode of size {out.shape[0]}")
        out = np.tensordot(f, out, axes=(0, 0))
    return float(out)
