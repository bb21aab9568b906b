"""Rank thresholding operators: Tucker (ST-HOSVD, HOOI) and CP (ALS) fitting.

These are the projection steps used inside the recovery loops. They are
best-effort low-rank approximations: orthonormal-factor Tucker fits carry the
usual sqrt(d) quasi-optimality guarantee, ALS carries none, and the recovery
diagnostics therefore measure the realized projection quality per call
instead of assuming a bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensors import fold, frob_norm, mode_product, unfold


@dataclass(frozen=True)
class HosvdRank:
    """Tucker rank vector (r_1, ..., r_d)."""

    ranks: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "ranks", tuple(int(r) for r in self.ranks))
        if any(r < 1 for r in self.ranks):
            raise ValueError(f"ranks must be >= 1, got {self.ranks}")

    def validate(self, dims) -> None:
        if len(self.ranks) != len(dims):
            raise ValueError(f"rank vector {self.ranks} for {len(dims)} modes")
        for r, n in zip(self.ranks, dims):
            if r > n:
                raise ValueError(f"rank {r} exceeds mode size {n}")


@dataclass(frozen=True)
class CpRank:
    """Scalar CP rank r (number of rank-1 terms)."""

    rank: int

    def __post_init__(self):
        object.__setattr__(self, "rank", int(self.rank))
        if self.rank < 1:
            raise ValueError(f"CP rank must be >= 1, got {self.rank}")

    def validate(self, dims) -> None:
        pass  # CP rank may legitimately exceed any single mode size


RankSpec = HosvdRank | CpRank


@dataclass
class TuckerFactors:
    """Core tensor plus per-mode orthonormal factor matrices."""

    core: np.ndarray
    factors: list[np.ndarray]
    errors: list[float] = field(default_factory=list)  # fit error per sweep (HOOI)

    def reconstruct(self) -> np.ndarray:
        out = self.core
        for k, u in enumerate(self.factors):
            out = mode_product(out, u, k)
        return out


@dataclass
class CpFactors:
    """Per-mode factor matrices with r columns; term j is the outer product of column j."""

    factors: list[np.ndarray]
    errors: list[float] = field(default_factory=list)  # fit error per sweep

    def reconstruct(self) -> np.ndarray:
        w = self.factors[0]
        for u in self.factors[1:]:
            w = w[..., None, :] * u  # broadcast to (..., n_k, r)
        return w.sum(axis=-1)


def st_hosvd(t: np.ndarray, ranks) -> TuckerFactors:
    """Sequentially truncated Tucker fit: per-mode SVD truncation of the running core.

    Exact when t has Tucker rank <= ranks; otherwise sqrt(d)-quasi-optimal.
    Truncation keeps the first r_k singular directions as returned by the SVD.
    """
    t = np.asarray(t, dtype=np.float64)
    spec = ranks if isinstance(ranks, HosvdRank) else HosvdRank(tuple(ranks))
    spec.validate(t.shape)
    core = t
    factors = []
    for k, r in enumerate(spec.ranks):
        m = unfold(core, k)
        u, _, _ = np.linalg.svd(m, full_matrices=False)
        uk = u[:, :r]
        factors.append(uk)
        dims = list(core.shape)
        dims[k] = r
        core = fold(uk.T @ m, k, dims)
    return TuckerFactors(core, factors)


def hooi(t: np.ndarray, ranks, max_sweeps: int = 50, tol: float = 1e-8) -> TuckerFactors:
    """Alternating subspace refinement of the ST-HOSVD fit.

    Each sweep maximizes the projected core energy one mode at a time, so the
    fit error is non-increasing; stops on a relative error change below tol
    or on the sweep budget.
    """
    t = np.asarray(t, dtype=np.float64)
    spec = ranks if isinstance(ranks, HosvdRank) else HosvdRank(tuple(ranks))
    spec.validate(t.shape)
    init = st_hosvd(t, spec)
    factors = list(init.factors)
    d = t.ndim
    norm_t = frob_norm(t)
    errors = []
    prev = None
    for _ in range(max_sweeps):
        for k in range(d):
            g = t
            for j in range(d):
                if j != k:
                    g = mode_product(g, factors[j].T, j)
            u, _, _ = np.linalg.svd(unfold(g, k), full_matrices=False)
            factors[k] = u[:, : spec.ranks[k]]
        core = t
        for j in range(d):
            core = mode_product(core, factors[j].T, j)
        # orthonormal factors: ||t - reconstruction||^2 == ||t||^2 - ||core||^2
        err = float(np.sqrt(max(norm_t**2 - frob_norm(core) ** 2, 0.0)))
        errors.append(err)
        if prev is not None and abs(prev - err) <= tol * max(norm_t, 1e-300):
            break
        prev = err
    return TuckerFactors(core, factors, errors=errors)


def _khatri_rao(mats: list[np.ndarray]) -> np.ndarray:
    """Columnwise Kronecker product, first matrix varying slowest."""
    out = mats[0]
    for m in mats[1:]:
        out = (out[:, None, :] * m[None, :, :]).reshape(-1, out.shape[1])
    return out


def _cp_init(t: np.ndarray, r: int, rng: np.random.Generator) -> list[np.ndarray]:
    # leading left singular vectors per unfolding; Gaussian fill when r exceeds them
    factors = []
    for k in range(t.ndim):
        u, _, _ = np.linalg.svd(unfold(t, k), full_matrices=False)
        q = min(r, u.shape[1])
        uk = np.empty((t.shape[k], r))
        uk[:, :q] = u[:, :q]
        if q < r:
            uk[:, q:] = rng.standard_normal((t.shape[k], r - q))
        factors.append(uk)
    return factors


def cp_als(
    t: np.ndarray,
    r: int,
    max_sweeps: int = 50,
    tol: float = 1e-8,
    seed: int = 0,
) -> CpFactors:
    """Alternating least squares CP fit with ridge-regularized normal equations.

    Deterministic given seed. The ridge term 1e-10 * trace keeps singular
    Gram matrices solvable, so the per-sweep fit error is non-increasing only
    up to that regularization slack.
    """
    t = np.asarray(t, dtype=np.float64)
    r = int(r)
    if r < 1:
        raise ValueError(f"CP rank must be >= 1, got {r}")
    rng = np.random.default_rng(seed)
    d = t.ndim
    factors = _cp_init(t, r, rng)
    unfoldings = [unfold(t, k) for k in range(d)]
    grams = [u.T @ u for u in factors]
    norm_t = frob_norm(t)
    errors = []
    prev = None
    out = CpFactors(factors, errors=errors)
    for _ in range(max_sweeps):
        for k in range(d):
            others = [factors[j] for j in range(d) if j != k]
            kr = _khatri_rao(others)
            v = unfoldings[k] @ kr
            h = np.ones((r, r))
            for j in range(d):
                if j != k:
                    h = h * grams[j]
            trace = float(np.trace(h))
            if trace <= 0.0:
                factors[k] = np.zeros_like(factors[k])
            else:
                factors[k] = np.linalg.solve(h + 1e-10 * trace * np.eye(r), v.T).T
            if k != d - 1:
                norms = np.linalg.norm(factors[k], axis=0)
                norms[norms == 0.0] = 1.0
                factors[k] = factors[k] / norms  # next solve reabsorbs the scale
            grams[k] = factors[k].T @ factors[k]
        err = frob_norm(t - out.reconstruct())
        errors.append(err)
        if prev is not None and abs(prev - err) <= tol * max(norm_t, 1e-300):
            break
        prev = err
    return out


def threshold(
    t: np.ndarray,
    spec: RankSpec,
    max_sweeps: int = 50,
    tol: float = 1e-8,
    seed: int = 0,
) -> np.ndarray:
    """Best-effort projection of t onto tensors of rank <= spec."""
    if isinstance(spec, HosvdRank):
        return hooi(t, spec, max_sweeps=max_sweeps, tol=tol).reconstruct()
    if isinstance(spec, CpRank):
        return cp_als(t, spec.rank, max_sweeps=max_sweeps, tol=tol, seed=seed).reconstruct()
    raise TypeError(f"unknown rank spec {spec!r}")


def unfolding_tail_bound(t: np.ndarray, ranks) -> float:
    """max_k tail singular energy of the mode-k unfoldings past rank r_k.

    A lower bound on the best achievable Tucker-rank-r fit error, used to
    audit the sqrt(d) quasi-optimality of :func:`st_hosvd`.
    """
    t = np.asarray(t, dtype=np.float64)
    spec = ranks if isinstance(ranks, HosvdRank) else HosvdRank(tuple(ranks))
    spec.validate(t.shape)
    best = 0.0
    for k, r in enumerate(spec.ranks):
        s = np.linalg.svd(unfold(t, k), compute_uv=False)
        best = max(best, float(np.sqrt(np.sum(s[r:] ** 2))))
    return best
