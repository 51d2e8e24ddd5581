"""Multidimensional scaling: classical (Torgerson) and SMACOF with isotonic
regression for the non-metric variant.

The classical solution double-centers the squared dissimilarities into a Gram
matrix, eigendecomposes it, and reads coordinates off the leading axes.  The
iterative solver starts from that solution and alternates a monotone
(isotonic) refit of the disparities with a Guttman majorization step; both
half-steps can only lower the raw stress, so the reported stress trace is
non-increasing by construction.

The tie order for the isotonic fit is frozen once (stable sort of the input
dissimilarities, ties kept in index order), which keeps the monotone cone
identical across iterations; refreshing the order every iteration would lose
the descent guarantee in tied inputs for no practical gain.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConvergenceError,
    DegenerateInputError,
    DimensionMismatchError,
    NonFiniteError,
)
from .linalg import sym_eig


@dataclass(frozen=True)
class DissimilarityMatrix:
    """Symmetric nonnegative pair dissimilarities with a zero diagonal."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise DimensionMismatchError(f"expected a square matrix, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise NonFiniteError("dissimilarities must be finite")
        if np.any(v < 0):
            raise DegenerateInputError("dissimilarities must be nonnegative")
        if np.any(np.diagonal(v) != 0.0):
            raise DegenerateInputError("self-dissimilarity must be zero")
        if not np.array_equal(v, v.T):
            raise DegenerateInputError("dissimilarity matrix must be exactly symmetric")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @classmethod
    def from_euclidean(cls, points: np.ndarray) -> "DissimilarityMatrix":
        """Exact-symmetric Euclidean distance matrix of a point set."""
        return cls(pairwise_distances(np.asarray(points, dtype=np.float64)))


def pairwise_distances(coords: np.ndarray) -> np.ndarray:
    """Euclidean distance matrix, exactly symmetric by construction."""
    n = coords.shape[0]
    out = np.zeros((n, n))
    il, jl = np.tril_indices(n, k=-1)
    d = np.sqrt(np.sum((coords[il] - coords[jl]) ** 2, axis=1))
    out[il, jl] = d
    out[jl, il] = d
    return out


@dataclass(frozen=True)
class Embedding:
    """Result of an MDS run: centered coordinates plus solver diagnostics."""

    coords: np.ndarray
    stress: float
    iterations: int
    converged: bool
    warning: str | None = field(default=None)
    stress_trace: tuple[float, ...] | None = field(default=None)

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=np.float64)
        if c.ndim != 2:
            raise DimensionMismatchError(f"coords must be 2-D, got shape {c.shape}")
        n, p = c.shape
        if p > n - 1:
            raise DimensionMismatchError(
                f"{p} embedding axes need at least {p + 1} points, got {n}"
            )
        if not np.all(np.isfinite(c)):
            raise NonFiniteError("embedding coordinates must be finite")
        if np.max(np.abs(c.mean(axis=0)), initial=0.0) > 1e-9:
            raise DegenerateInputError("embedding coordinates must be centered")
        object.__setattr__(self, "coords", c)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def dims(self) -> int:
        return self.coords.shape[1]


def double_center(d: DissimilarityMatrix) -> np.ndarray:
    """Gram matrix recovered from distances: B = -1/2 J (D*D) J.

    J = I - (1/n) 1 1^T removes row and column means, so B has zero row sums
    and equals X^T-style inner products when D is exactly Euclidean for some
    centered X.
    """
    sq = d.values**2
    row = sq.mean(axis=1, keepdims=True)
    col = sq.mean(axis=0, keepdims=True)
    b = -0.5 * (sq - row - col + sq.mean())
    return (b + b.T) / 2.0  # exact symmetry against fp drift


def classical_mds(d: DissimilarityMatrix, p: int) -> Embedding:
    """Torgerson embedding: leading eigenpairs of the double-centered Gram.

    Negative and numerically-zero eigenvalues are clamped before the square
    root; if fewer than ``p`` clearly positive axes exist the remaining
    columns are zero and a warning is recorded on the result.
    """
    if p < 1:
        raise DimensionMismatchError(f"embedding dimension must be >= 1, got {p}")
    if p > d.n - 1:
        raise DimensionMismatchError(
            f"cannot embed {d.n} points into {p} dimensions (need p <= n-1)"
        )
    b = double_center(d)
    evals, vecs = sym_eig(b)
    floor = 1e-12 * max(evals[0], 0.0)
    positive = int(np.sum(evals > floor))
    clamped = np.clip(evals[:p], 0.0, None)
    clamped[clamped <= floor] = 0.0
    coords = vecs[:, :p] * np.sqrt(clamped)
    warning = None
    if positive < p:
        warning = (
            f"only {positive} positive axes available for a {p}-dimensional "
            "embedding; trailing coordinates are zero"
        )
    stress = 0.0
    denom = _lower(d.values)
    denom_sq = float(np.sum(denom**2))
    if denom_sq > 0.0:
        emb_d = _lower(pairwise_distances(coords))
        stress = float(np.sqrt(np.sum((emb_d - denom) ** 2) / denom_sq))
    return Embedding(coords, stress, 0, True, warning)


def _lower(matrix: np.ndarray) -> np.ndarray:
    il, jl = np.tril_indices(matrix.shape[0], k=-1)
    return matrix[il, jl]


def isotonic_regression(
    targets: np.ndarray,
    order: np.ndarray | None = None,
    weights: np.ndarray | None = None,
) -> np.ndarray:
    """Weighted least-squares fit of a sequence nondecreasing in ``order``.

    ``order`` is a permutation of indices giving the scan sequence; identity
    when omitted.  Pool-adjacent-violators with running sums decides the
    blocks, then block values are recomputed from the raw data and any
    rounding-induced inversions merged, so the output is exactly
    nondecreasing along ``order``.
    """
    y = np.asarray(targets, dtype=np.float64).reshape(-1)
    n = y.size
    if weights is None:
        w = np.ones(n)
    else:
        w = np.asarray(weights, dtype=np.float64).reshape(-1)
        if w.shape != y.shape:
            raise DimensionMismatchError("weights must match targets in length")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise DegenerateInputError("weights must be finite and nonnegative")
    if order is None:
        order = np.arange(n)
    else:
        order = np.asarray(order)
        if not np.array_equal(np.sort(order), np.arange(n)):
            raise DimensionMismatchError("order must be a permutation of all indices")
    ys, ws = y[order], w[order]

    # pooling pass with running block sums
    starts: list[int] = []
    sums_wy: list[float] = []
    sums_w: list[float] = []
    means: list[float] = []
    for i in range(n):
        swy, sw = ws[i] * ys[i], ws[i]
        mean = swy / sw if sw > 0.0 else ys[i]
        start = i
        while means and means[-1] > mean:
            swy += sums_wy.pop()
            sw += sums_w.pop()
            start = starts.pop()
            means.pop()
            mean = swy / sw if sw > 0.0 else np.mean(ys[start : i + 1])
        starts.append(start)
        sums_wy.append(swy)
        sums_w.append(sw)
        means.append(mean)

    bounds = starts + [n]
    fitted_blocks = _canonical_block_means(ys, ws, bounds)
    # rounding during pooling can leave ulp-scale inversions; merge them away
    while True:
        bad = next(
            (
                k
                for k in range(1, len(fitted_blocks))
                if fitted_blocks[k] < fitted_blocks[k - 1]
            ),
            None,
        )
        if bad is None:
            break
        bounds = bounds[:bad] + bounds[bad + 1 :]
        fitted_blocks = _canonical_block_means(ys, ws, bounds)

    fitted_seq = np.empty(n)
    for k in range(len(fitted_blocks)):
        fitted_seq[bounds[k] : bounds[k + 1]] = fitted_blocks[k]
    out = np.empty(n)
    out[order] = fitted_seq
    return out


def _canonical_block_means(ys, ws, bounds):
    means = []
    for k in range(len(bounds) - 1):
        lo, hi = bounds[k], bounds[k + 1]
        sw = float(np.sum(ws[lo:hi]))
        if sw > 0.0:
            means.append(float(np.sum(ws[lo:hi] * ys[lo:hi])) / sw)
        else:
            means.append(float(np.mean(ys[lo:hi])))
    return means


def nonmetric_stress(
    d: DissimilarityMatrix, emb: Embedding, disparities: np.ndarray
) -> float:
    """Normalized residual between embedding distances and the disparities.

    Square root of the sum over the strict lower triangle of
    ``(embedding_distance - disparity)^2`` divided by the sum of squared
    input dissimilarities.  The denominator depends only on the input matrix,
    so iterative refinement can compare values across iterations.
    """
    disp = np.asarray(disparities, dtype=np.float64)
    if disp.shape != d.values.shape:
        raise DimensionMismatchError(
            f"disparities shape {disp.shape} != matrix shape {d.values.shape}"
        )
    if not np.allclose(disp, disp.T, atol=0.0, rtol=0.0, equal_nan=False):
        raise DegenerateInputError("disparities must be symmetric")
    if emb.n != d.n:
        raise DimensionMismatchError(
            f"embedding has {emb.n} points, matrix has {d.n}"
        )
    denom = float(np.sum(_lower(d.values) ** 2))
    if denom == 0.0:
        raise DegenerateInputError("all-zero dissimilarities give undefined stress")
    resid = _lower(pairwise_distances(emb.coords)) - _lower(disp)
    return float(np.sqrt(np.sum(resid**2) / denom))


def _guttman_step(coords: np.ndarray, disp_lower: np.ndarray,
                  il: np.ndarray, jl: np.ndarray) -> np.ndarray:
    n = coords.shape[0]
    diff = coords[il] - coords[jl]
    dist = np.sqrt(np.sum(diff**2, axis=1))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(dist > 0.0, disp_lower / dist, 0.0)
    b = np.zeros((n, n))
    b[il, jl] = -ratio
    b[jl, il] = -ratio
    np.fill_diagonal(b, -b.sum(axis=1))
    return (b @ coords) / n


def smacof_embed(
    d: DissimilarityMatrix,
    p: int,
    mode: str = "nonmetric",
    max_iter: int = 500,
    rel_tol: float = 1e-9,
) -> Embedding:
    """Iterative stress majorization starting from the classical solution.

    In ``nonmetric`` mode the disparities are refitted each iteration by
    isotonic regression of the current embedding distances in the (frozen)
    dissimilarity order; in ``metric`` mode the disparities are the input
    dissimilarities themselves.  Stops when the relative stress drop falls
    below ``rel_tol`` or after ``max_iter`` Guttman updates.
    """
    if mode not in ("metric", "nonmetric"):
        raise ValueError(f"mode must be 'metric' or 'nonmetric', got {mode!r}")
    if max_iter < 0:
        raise ValueError("max_iter must be >= 0")
    init = classical_mds(d, p)
    if max_iter == 0:
        return init

    n = d.n
    il, jl = np.tril_indices(n, k=-1)
    d_lower = d.values[il, jl]
    denom = float(np.sum(d_lower**2))
    if denom == 0.0:
        raise DegenerateInputError("all-zero dissimilarities give undefined stress")
    order = np.argsort(d_lower, kind="stable")

    def eval_stress(coords, it):
        diff = coords[il] - coords[jl]
        emb_lower = np.sqrt(np.sum(diff**2, axis=1))
        if mode == "nonmetric":
            disp_lower = isotonic_regression(emb_lower, order)
        else:
            disp_lower = d_lower
        stress = float(np.sqrt(np.sum((emb_lower - disp_lower) ** 2) / denom))
        if not np.isfinite(stress):
            raise ConvergenceError(f"non-finite stress at iteration {it}")
        return stress, disp_lower

    coords = init.coords
    prev_stress = None
    stress = init.stress
    trace: list[float] = []
    iterations = 0
    converged = False
    for it in range(1, max_iter + 1):
        stress, disp_lower = eval_stress(coords, it)
        trace.append(stress)
        if prev_stress is not None and (
            prev_stress - stress <= rel_tol * max(prev_stress, 1e-300)
        ):
            converged = True
            break
        coords = _guttman_step(coords, disp_lower, il, jl)
        if not np.all(np.isfinite(coords)):
            raise ConvergenceError(f"non-finite coordinates at iteration {it}")
        iterations = it
        prev_stress = stress

    if not converged:
        # loop ran out right after a Guttman move; report the stress of the
        # final coordinates rather than the pre-move value
        stress, _ = eval_stress(coords, iterations)
        trace.append(stress)

    return Embedding(coords, stress, iterations, converged, init.warning, tuple(trace))
