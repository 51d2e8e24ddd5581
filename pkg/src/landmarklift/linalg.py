"""Dense symmetric eigensolver and small-matrix helpers.

The eigensolver is a cyclic Jacobi iteration with a round-robin pivot
schedule: each round rotates n/2 disjoint index pairs at once, so the row and
column updates vectorize across pairs instead of looping over individual
Givens rotations.  Disjoint pivots are zeroed exactly within their round,
and a full sweep (n-1 rounds) visits every off-diagonal pair once.
"""

from __future__ import annotations

import numpy as np

from .errors import (
    ConvergenceError,
    DegenerateInputError,
    DimensionMismatchError,
    NonFiniteError,
)


def _round_robin_pairs(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Round-robin schedule covering all index pairs in n-1 (or n) rounds.

    Returns one (p, q) index-array pair per round; within a round all pairs
    are disjoint.  Odd n gets a bye slot that is dropped from the arrays.
    """
    m = n if n % 2 == 0 else n + 1
    others = list(range(1, m))
    rounds = []
    for _ in range(m - 1):
        row = [0] + others
        ps, qs = [], []
        for i in range(m // 2):
            a, b = row[i], row[m - 1 - i]
            if a >= n or b >= n:  # bye slot for odd n
                continue
            ps.append(min(a, b))
            qs.append(max(a, b))
        rounds.append((np.array(ps, dtype=np.intp), np.array(qs, dtype=np.intp)))
        others = others[-1:] + others[:-1]
    return rounds


def _offdiag_norm(a: np.ndarray) -> float:
    # Summing the off-diagonal entries directly avoids the cancellation that
    # ||A||^2 - ||diag||^2 suffers once the off-diagonal part is tiny.
    off = a.copy()
    np.fill_diagonal(off, 0.0)
    return float(np.linalg.norm(off))


def sym_eig(
    matrix: np.ndarray,
    tol: float = 1e-12,
    max_sweeps: int = 100,
) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    matrix : (n, n) array, symmetric within roundoff (symmetrized defensively).
    tol : convergence threshold on the off-diagonal Frobenius norm, relative
        to the Frobenius norm of the input.
    max_sweeps : cap on full sweeps before giving up.

    Returns
    -------
    eigenvalues : (n,) array, sorted descending.
    eigenvectors : (n, n) array with orthonormal columns;
        ``matrix @ v[:, k] == eigenvalues[k] * v[:, k]``.

    Raises
    ------
    ConvergenceError: if the sweep cap is hit, with the residual in the message.
    """
    a = np.asarray(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFiniteError("matrix entries must be finite")
    n = a.shape[0]
    a = 0.5 * (a + a.T)  # defensive symmetrization
    v = np.eye(n)
    if n == 1:
        return a[0].copy(), v

    scale = float(np.linalg.norm(a))
    if scale == 0.0:
        return np.zeros(n), v

    rounds = _round_robin_pairs(n)
    converged = False
    for _ in range(max_sweeps):
        if _offdiag_norm(a) <= tol * scale:
            converged = True
            break
        for p, q in rounds:
            apq = a[p, q]
            active = apq != 0.0
            if not np.any(active):
                continue
            p, q, apq = p[active], q[active], apq[active]
            # Smaller root of t^2 + 2*tau*t - 1 = 0 gives the rotation angle
            # that zeroes each pivot; disjoint pairs do not interact.
            with np.errstate(divide="ignore", over="ignore"):
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
            tau_safe = np.clip(tau, -1e8, 1e8)
            t = np.where(tau >= 0.0, 1.0, -1.0) / (
                np.abs(tau_safe) + np.sqrt(tau_safe**2 + 1.0)
            )
            # asymptote for huge tau; exact to double precision there
            big = np.abs(tau) > 1e8
            if np.any(big):
                t = np.where(big, 0.5 / tau, t)
            c = 1.0 / np.sqrt(t**2 + 1.0)
            s = t * c
            cc, ss = c[:, None], s[:, None]
            rp, rq = a[p, :], a[q, :]
            a[p, :] = cc * rp - ss * rq
            a[q, :] = ss * rp + cc * rq
            cp, cq = a[:, p], a[:, q]
            a[:, p] = cp * c - cq * s
            a[:, q] = cp * s + cq * c
            vp, vq = v[:, p], v[:, q]
            v[:, p] = vp * c - vq * s
            v[:, q] = vp * s + vq * c
    else:
        converged = _offdiag_norm(a) <= tol * scale
    if not converged:
        raise ConvergenceError(
            f"Jacobi eigensolver did not converge in {max_sweeps} sweeps "
            f"(off-diagonal residual {_offdiag_norm(a):.3e}, matrix norm {scale:.3e})"
        )

    eigenvalues = np.diag(a).copy()
    order = np.argsort(eigenvalues)[::-1]
    return eigenvalues[order], v[:, order]


def det3(m: np.ndarray) -> float:
    """Determinant of a 3x3 matrix by cofactor expansion."""
    return float(
        m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
        - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
        + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0])
    )


def svd3(h: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Singular value decomposition of a 3x3 matrix via the Jacobi eigensolver.

    Returns ``(u, sigma, vt)`` with ``h == u @ diag(sigma) @ vt`` and sigma
    sorted descending.  Rank-deficient inputs get their null directions
    completed to an orthonormal basis.
    """
    h = np.asarray(h, dtype=np.float64)
    if h.shape != (3, 3):
        raise DimensionMismatchError(f"expected a 3x3 matrix, got shape {h.shape}")
    evals, v = sym_eig(h.T @ h)
    sigma = np.sqrt(np.clip(evals, 0.0, None))
    cutoff = max(sigma[0], 1.0) * 1e-13
    u = np.zeros((3, 3))
    filled = []
    for k in range(3):
        if sigma[k] > cutoff:
            w = h @ v[:, k] / sigma[k]
            # clustered singular values leave these slightly non-orthogonal;
            # re-orthogonalize within the already-found left subspace
            for f in filled:
                w = w - (u[:, f] @ w) * u[:, f]
            u[:, k] = w / np.linalg.norm(w)
            filled.append(k)
    for k in range(3):
        if sigma[k] > cutoff:
            continue
        # complete the left basis: pick the seed axis least aligned with
        # existing columns, then orthogonalize
        seeds = np.eye(3)
        overlaps = [max(abs(u[:, f] @ seeds[:, i]) for f in filled) if filled else 0.0 for i in range(3)]
        w = seeds[:, int(np.argmin(overlaps))]
        for f in filled:
            w = w - (u[:, f] @ w) * u[:, f]
        norm = np.linalg.norm(w)
        u[:, k] = w / norm
        filled.append(k)
    return u, sigma, v.T


def orthonormalize_rows(vectors: np.ndarray, passes: int = 2) -> np.ndarray:
    """Orthonormalize the rows of ``vectors`` by modified Gram-Schmidt.

    Two passes keep the Gram matrix within ~1e-14 of identity for the mildly
    ill-conditioned random bases used by the synthetic shape model.

    Raises:
        DegenerateInputError: if a row is linearly dependent on earlier rows.
    """
    q = np.array(vectors, dtype=np.float64)
    k = q.shape[0]
    for _ in range(passes):
        for i in range(k):
            for j in range(i):
                q[i] -= (q[j] @ q[i]) * q[j]
            norm = np.linalg.norm(q[i])
            if norm < 1e-12:
                raise DegenerateInputError(f"basis vector {i} is linearly dependent")
            q[i] /= norm
    return q
