"""Dense linear-algebra core.

Matrices are plain 2-D numpy arrays (rows = fan-out, cols = fan-in).
Products run through numpy's BLAS; the decompositions used as test oracles
(one-sided Jacobi SVD, power iteration, Gram-Schmidt) are written out here so
they stay independent of the LAPACK routines numpy would otherwise use.
"""

from __future__ import annotations

import functools

import numpy as np

from .errors import DegenerateInputError, NumericalError, ShapeError
from .rng import DOMAIN_ESTIMATE, Rng, stream_key


def as_matrix(a, name: str = "matrix", dtype=np.float64) -> np.ndarray:
    """Coerce ``a`` to a 2-D float array, raising :class:`ShapeError` otherwise."""
    arr = np.asarray(a, dtype=dtype)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeError(f"{name} must be non-empty, got shape {arr.shape}")
    return arr


def check_finite(a: np.ndarray, what: str = "matrix") -> None:
    if not np.all(np.isfinite(a)):
        raise NumericalError(f"{what} contains non-finite values")


def random_normal(rows: int, cols: int, rng: Rng, scale: float = 1.0) -> np.ndarray:
    return scale * rng.normal((rows, cols))


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul expects 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul shape mismatch: {a.shape} @ {b.shape}")
    return a @ b


def transpose(a: np.ndarray) -> np.ndarray:
    """Contiguous transpose (a copy, never a view)."""
    return np.ascontiguousarray(a.T)


def frobenius_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a))


def spectral_norm_estimate(a: np.ndarray, iters: int = 100, rng: Rng | None = None) -> float:
    """Largest singular value by power iteration on ``a.T @ a``.

    Returns ``||a v||`` for the final unit iterate ``v``, which never exceeds
    the true spectral norm and approaches it from below.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    a = np.asarray(a, dtype=np.float64)
    if rng is None:
        rng = Rng(0, stream_key(0, 0, DOMAIN_ESTIMATE))
    v = rng.normal(a.shape[1])
    v /= np.linalg.norm(v)
    for _ in range(iters):
        w = a.T @ (a @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
    return float(np.linalg.norm(a @ v))


def gram_schmidt(a: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis for the columns of ``a`` (rows >= cols).

    Modified Gram-Schmidt followed by a second full MGS pass for
    reorthogonalisation. A column whose projected norm falls to ``tol``
    times its original norm raises :class:`DegenerateInputError`.
    """
    a = as_matrix(a, "gram_schmidt input")
    m, n = a.shape
    if n > m:
        raise ShapeError(f"gram_schmidt needs cols <= rows, got {a.shape}")
    q = a.copy()
    orig = np.linalg.norm(a, axis=0)
    for sweep in range(2):
        for j in range(n):
            nrm = np.linalg.norm(q[:, j])
            if sweep == 0 and (orig[j] == 0.0 or nrm <= tol * orig[j]):
                raise DegenerateInputError(
                    f"column {j} is linearly dependent on earlier columns "
                    f"(projected norm {nrm:.3e})",
                    column=j,
                )
            q[:, j] /= nrm
            if j + 1 < n:
                q[:, j + 1 :] -= np.outer(q[:, j], q[:, j] @ q[:, j + 1 :])
    return q


@functools.lru_cache(maxsize=64)
def _tournament(n: int) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
    """Round-robin schedule: n-1 (or n) rounds of disjoint column pairs."""
    players = list(range(n + (n % 2)))
    size = len(players)
    rounds = []
    for _ in range(size - 1):
        p, q = [], []
        for i in range(size // 2):
            x, y = players[i], players[size - 1 - i]
            if x < n and y < n:
                p.append(min(x, y))
                q.append(max(x, y))
        rounds.append((np.array(p, dtype=np.intp), np.array(q, dtype=np.intp)))
        players = [players[0], players[-1]] + players[1:-1]
    return tuple(rounds)


def jacobi_svd(a: np.ndarray, compute_uv: bool = False, tol: float = 1e-12, max_sweeps: int = 60):
    """One-sided Jacobi SVD.

    Returns the singular values in descending order, or ``(u, s, vt)`` with
    thin factors when ``compute_uv`` is true. Disjoint column pairs are
    rotated together (round-robin ordering), so each sweep is ``n - 1``
    vectorised updates.
    """
    a = as_matrix(a, "jacobi_svd input")
    check_finite(a, "jacobi_svd input")
    flip = a.shape[0] < a.shape[1]
    work = np.array(a.T if flip else a, dtype=np.float64, order="F")
    m, n = work.shape
    if n > 512:
        raise ShapeError(f"jacobi_svd is an oracle for min(rows, cols) <= 512, got {a.shape}")
    v = np.eye(n) if compute_uv else None

    rounds = _tournament(n)
    for _ in range(max_sweeps):
        rotated = False
        for p, q in rounds:
            if p.size == 0:
                continue
            ap, aq = work[:, p], work[:, q]
            alpha = np.einsum("ij,ij->j", ap, ap)
            beta = np.einsum("ij,ij->j", aq, aq)
            gamma = np.einsum("ij,ij->j", ap, aq)
            active = (alpha > 0) & (beta > 0) & (np.abs(gamma) > tol * np.sqrt(alpha) * np.sqrt(beta))
            if not active.any():
                continue
            rotated = True
            pa, qa = p[active], q[active]
            al, be, ga = alpha[active], beta[active], gamma[active]
            zeta = (be - al) / (2.0 * ga)
            t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            xp, xq = ap[:, active], aq[:, active]
            work[:, pa] = c * xp - s * xq
            work[:, qa] = s * xp + c * xq
            if v is not None:
                vp, vq = v[:, pa], v[:, qa]
                v[:, pa] = c * vp - s * vq
                v[:, qa] = s * vp + c * vq
        if not rotated:
            break
    else:
        raise NumericalError(f"jacobi_svd did not converge in {max_sweeps} sweeps")

    sv = np.linalg.norm(work, axis=0)
    order = np.argsort(-sv, kind="stable")
    sv = sv[order]
    if not compute_uv:
        return sv
    work = work[:, order]
    v = v[:, order]
    u = np.zeros_like(work)
    nz = sv > 0
    u[:, nz] = work[:, nz] / sv[nz]
    if flip:
        return v, sv, u.T
    return u, sv, v.T
