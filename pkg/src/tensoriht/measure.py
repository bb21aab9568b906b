"""Linear measurement ensembles mapping tensors to R^m, with row trimming.

Two storage layouts share one interface:

* ``DenseEnsemble`` holds an explicit m x N matrix of i.i.d. rows.
* ``FaceSplitEnsemble`` holds d factor matrices A_k (m x n_k); measurement
  row j is the Kronecker product of the j-th factor rows, never materialized
  (storage m * sum(n_k) instead of m * prod(n_k)).

Scale convention: the 1/sqrt(m) normalization that makes random ensembles
near-isometric on low-rank tensors is stored INSIDE the ensemble and applied
by ``apply``/``adjoint``/``row``. Recovery code therefore uses step size
mu = 1; do not rescale measurements again on top of this.

``trim`` drops the m_trim rows with the largest scores and rescales the
survivors by sqrt(m / (m - m_trim)), so that for quadratic objectives the
trimmed gradient matches rescaling the summed gradient by m / |kept|.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import ConfigError
from .tensors import kron_factors_to_row

MATERIALIZE_CAP = 10**7  # max entries of an explicitly formed matrix

_DISTRIBUTIONS = ("gaussian", "rademacher", "sphere")


def _sample_block(rng: np.random.Generator, rows: int, cols: int, dist: str) -> np.ndarray:
    if dist == "gaussian":
        return rng.standard_normal((rows, cols))
    if dist == "rademacher":
        return rng.integers(0, 2, size=(rows, cols)).astype(np.float64) * 2.0 - 1.0
    if dist == "sphere":
        # Gaussian rows renormalized to norm sqrt(cols) exactly
        block = rng.standard_normal((rows, cols))
        norms = np.linalg.norm(block, axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0
        return block * (np.sqrt(cols) / norms)
    raise ConfigError(f"unknown row distribution {dist!r}; choose from {_DISTRIBUTIONS}")


@dataclass(frozen=True, eq=False)
class DenseEnsemble:
    """Explicit m x N measurement matrix; operator is scale * matrix."""

    matrix: np.ndarray  # raw rows, unit-variance entries (or sphere-normalized)
    dims: tuple[int, ...]
    scale: float

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    @property
    def size(self) -> int:
        return int(np.prod(self.dims))

    def apply(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        if t.shape != self.dims:
            raise ValueError(f"tensor dims {t.shape}, ensemble dims {self.dims}")
        return self.scale * (self.matrix @ t.reshape(-1))

    def adjoint(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.m,):
            raise ValueError(f"vector length {v.shape}, expected ({self.m},)")
        return (self.scale * (self.matrix.T @ v)).reshape(self.dims)

    def row(self, j: int) -> np.ndarray:
        return self.scale * self.matrix[j]

    def row_norms_sq(self) -> np.ndarray:
        return self.scale**2 * np.einsum("ij,ij->i", self.matrix, self.matrix)

    def materialize(self, cap: int = MATERIALIZE_CAP) -> np.ndarray:
        _check_cap(self.m, self.size, cap)
        return self.scale * self.matrix

    def storage_floats(self) -> int:
        return self.matrix.size


@dataclass(frozen=True, eq=False)
class FaceSplitEnsemble:
    """Row-wise Kronecker product of d factor matrices A_k (m x n_k)."""

    factors: tuple[np.ndarray, ...]
    dims: tuple[int, ...]
    scale: float

    @property
    def m(self) -> int:
        return self.factors[0].shape[0]

    @property
    def size(self) -> int:
        return int(np.prod(self.dims))

    def apply(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        if t.shape != self.dims:
            raise ValueError(f"tensor dims {t.shape}, ensemble dims {self.dims}")
        return self.scale * _facesplit_apply(self.factors, t)

    def adjoint(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.m,):
            raise ValueError(f"vector length {v.shape}, expected ({self.m},)")
        return self.scale * _facesplit_adjoint(self.factors, self.dims, v)

    def row(self, j: int) -> np.ndarray:
        return self.scale * kron_factors_to_row([a[j] for a in self.factors])

    def row_norms_sq(self) -> np.ndarray:
        # Kronecker row norm is the product of factor row norms
        out = np.ones(self.m)
        for a in self.factors:
            out = out * np.einsum("ij,ij->i", a, a)
        return self.scale**2 * out

    def materialize(self, cap: int = MATERIALIZE_CAP) -> np.ndarray:
        _check_cap(self.m, self.size, cap)
        out = reduce(_rowwise_kron, self.factors)
        return self.scale * out

    def storage_floats(self) -> int:
        return sum(a.size for a in self.factors)


@dataclass(frozen=True, eq=False)
class TrimmedView:
    """Parent ensemble restricted to `kept` rows, rescaled by sqrt(m / |kept|).

    apply/adjoint route through the parent's full operator (dropped rows are
    masked out), so the view costs O(m + N) extra work and no row copies.
    """

    parent: DenseEnsemble | FaceSplitEnsemble
    kept: np.ndarray  # sorted indices of surviving rows
    rescale: float

    @property
    def m(self) -> int:
        return int(self.kept.size)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.parent.dims

    def apply(self, t: np.ndarray) -> np.ndarray:
        return self.rescale * self.parent.apply(t)[self.kept]

    def adjoint(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.m,):
            raise ValueError(f"vector length {v.shape}, expected ({self.m},)")
        full = np.zeros(self.parent.m)
        full[self.kept] = v
        return self.rescale * self.parent.adjoint(full)

    def restrict(self, v: np.ndarray) -> np.ndarray:
        """Measurement-space counterpart of the trimming: rescale * v[kept]."""
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.parent.m,):
            raise ValueError(f"vector length {v.shape}, expected ({self.parent.m},)")
        return self.rescale * v[self.kept]

    def row(self, j: int) -> np.ndarray:
        return self.rescale * self.parent.row(int(self.kept[j]))

    def row_norms_sq(self) -> np.ndarray:
        return self.rescale**2 * self.parent.row_norms_sq()[self.kept]

    def materialize(self, cap: int = MATERIALIZE_CAP) -> np.ndarray:
        return self.rescale * self.parent.materialize(cap)[self.kept]


MeasurementOperator = DenseEnsemble | FaceSplitEnsemble | TrimmedView


def _check_cap(m: int, n: int, cap: int) -> None:
    if m * n > cap:
        raise ValueError(f"materializing {m} x {n} = {m * n} entries exceeds cap {cap}")


def _rowwise_kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (a[:, :, None] * b[:, None, :]).reshape(a.shape[0], -1)


def _facesplit_apply(factors, t: np.ndarray) -> np.ndarray:
    # contract one mode at a time: row j of the result accumulates
    # <a_1j kron ... kron a_dj, vec(t)>; total cost O(m * N)
    m = factors[0].shape[0]
    out = factors[0] @ t.reshape(t.shape[0], -1)
    out = out.reshape((m,) + t.shape[1:])
    for a in factors[1:]:
        out = np.einsum("jk,jk...->j...", a, out)
    return out


def _facesplit_adjoint(factors, dims, v: np.ndarray) -> np.ndarray:
    # sum_j v_j * (a_1j o ... o a_dj), built rightmost mode first so the
    # peak intermediate is m x (N / n_1)
    w = v[:, None] * factors[-1]
    for a in reversed(factors[1:-1]):
        w = np.einsum("jk,j...->jk...", a, w)
    if len(factors) == 1:
        return v @ factors[0]
    return np.tensordot(factors[0], w, axes=(0, 0)).reshape(dims)


def sample_dense(m: int, dims, dist: str = "gaussian", seed: int = 0) -> DenseEnsemble:
    """i.i.d. random m x N matrix with the 1/sqrt(m) scale baked in."""
    dims = tuple(int(d) for d in dims)
    m = int(m)
    if m < 1:
        raise ConfigError(f"need m >= 1, got {m}")
    n = int(np.prod(dims))
    if m * n > 2**33:
        raise ValueError(f"dense ensemble of {m} x {n} entries is too large to store")
    rng = np.random.default_rng(seed)
    matrix = _sample_block(rng, m, n, dist)
    return DenseEnsemble(matrix=matrix, dims=dims, scale=1.0 / np.sqrt(m))


def sample_facesplit(m: int, dims, dist: str = "gaussian", seed: int = 0) -> FaceSplitEnsemble:
    """d independent factor matrices A_k (m x n_k), rows combined by Kronecker products."""
    dims = tuple(int(d) for d in dims)
    m = int(m)
    if m < 1:
        raise ConfigError(f"need m >= 1, got {m}")
    rng = np.random.default_rng(seed)
    factors = tuple(_sample_block(rng, m, n, dist) for n in dims)
    return FaceSplitEnsemble(factors=factors, dims=dims, scale=1.0 / np.sqrt(m))


def trim(a: DenseEnsemble | FaceSplitEnsemble, scores: np.ndarray, m_trim: int) -> TrimmedView:
    """Drop the m_trim rows with the largest |scores|; keep the rest, rescaled.

    Ties in |scores| are broken toward keeping the lower index (stable sort),
    so traces are reproducible. m_trim counts DROPPED rows; to keep exactly k
    rows instead, pass m_trim = m - k.
    """
    scores = np.asarray(scores, dtype=np.float64)
    m = a.m
    if scores.shape != (m,):
        raise ValueError(f"scores length {scores.shape}, expected ({m},)")
    m_trim = int(m_trim)
    if not 0 <= m_trim < m:
        raise ConfigError(f"m_trim must satisfy 0 <= m_trim < m = {m}, got {m_trim}")
    order = np.argsort(np.abs(scores), kind="stable")
    kept = np.sort(order[: m - m_trim])
    rescale = float(np.sqrt(m / (m - m_trim)))
    return TrimmedView(parent=a, kept=kept, rescale=rescale)


def nonzero_row_indices(a: MeasurementOperator) -> np.ndarray:
    """Rows with nonzero norm; zero rows get a warning (Kaczmarz skips them)."""
    rn = a.row_norms_sq()
    bad = np.flatnonzero(rn == 0.0)
    if bad.size:
        warnings.warn(f"{bad.size} zero measurement rows will be skipped", RuntimeWarning)
    return np.flatnonzero(rn > 0.0)
