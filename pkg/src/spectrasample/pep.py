"""Real solutions of polynomial eigenvalue problems ``P(t) x = 0``.

``P(t) = B0 + t B1 + ... + t^d Bd`` with symmetric ``Bk``. Only real,
finite eigenvalues are returned.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.linalg import lapack

__all__ = [
    "PepSolution",
    "SolverFailure",
    "deflate",
    "polyval",
    "linearize_pencil",
    "solve_real",
    "solve_definite_linear",
]

EPS_IM = 1e-8
EPS_RES_REL = 1e-8
# Eigenvalues with |t| above this are treated as infinite (singular Bd).
T_INFINITE = 1e12
MERGE_TOL = 1e-9


class SolverFailure(RuntimeError):
    def __init__(self, message, shape=None):
        if shape is not None:
            message = f"{message} (pencil {shape[0]}x{shape[1]})"
        super().__init__(message)
        self.shape = shape


@dataclass
class PepSolution:
    """Sorted real eigenvalues with unit eigenvectors (rows) and residuals."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    fallback: bool = False

    def __len__(self):
        return len(self.eigenvalues)

    @classmethod
    def empty(cls, m, fallback=False):
        return cls(np.empty(0), np.empty((0, m)), np.empty(0), fallback)


def deflate(coeffs) -> np.ndarray:
    """Drop trailing coefficient matrices that are exactly zero."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.ndim != 3 or coeffs.shape[1] != coeffs.shape[2]:
        raise ValueError(f"expected a (d+1, m, m) stack, got {coeffs.shape}")
    d = coeffs.shape[0] - 1
    while d > 0 and not np.any(coeffs[d]):
        d -= 1
    return coeffs[: d + 1]


def polyval(coeffs, t) -> np.ndarray:
    """``sum_k t^k B_k`` by Horner's rule."""
    out = np.array(coeffs[-1], dtype=float)
    for b in coeffs[-2::-1]:
        out = out * t + b
    return out


def linearize_pencil(coeffs):
    """Companion pencil ``C0 - lam C1`` of size ``m d``.

    ``C0 = diag(Bd, I, ..., I)``; ``C1`` has ``B_{d-1} ... B0`` across its
    first block row and ``-I`` on the block subdiagonal. With this layout
    the pencil eigenvalue ``lam`` and the polynomial eigenvalue ``t`` are
    related by ``t = -1 / lam``, and the eigenvector blocks are
    ``z_k = t^{-(k-1)} x``.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    d = coeffs.shape[0] - 1
    if d < 1:
        raise ValueError("degree must be >= 1")
    m = coeffs.shape[1]
    size = m * d
    c0 = np.eye(size)
    c0[:m, :m] = coeffs[d]
    c1 = np.zeros((size, size))
    for j in range(d):
        c1[:m, j * m:(j + 1) * m] = coeffs[d - 1 - j]
    for k in range(1, d):
        c1[k * m:(k + 1) * m, (k - 1) * m:k * m] = -np.eye(m)
    return c0, c1


def _real_vector(z):
    k = np.argmax(np.abs(z))
    z = z * (np.conj(z[k]) / abs(z[k]))
    x = np.real(z)
    return x / np.linalg.norm(x)


def _refine(coeffs, t, x):
    """One inverse-iteration step on ``P(t)``."""
    p = polyval(coeffs, t)
    try:
        with np.errstate(all="ignore"):
            y = np.linalg.solve(p, x)
    except np.linalg.LinAlgError:
        return x, p
    ny = np.linalg.norm(y)
    if not np.isfinite(ny) or ny == 0:
        return x, p
    return y / ny, p


def _finish(coeffs, ts, xs, fallback=False, refine=True):
    m = coeffs.shape[1]
    if len(ts) == 0:
        return PepSolution.empty(m, fallback)
    order = np.argsort(ts)
    ts = np.asarray(ts)[order]
    xs = np.asarray(xs)[order]
    res = np.empty(len(ts))
    for i, (t, x) in enumerate(zip(ts, xs)):
        if refine:
            x, p = _refine(coeffs, t, x)
            xs[i] = x
        else:
            p = polyval(coeffs, t)
        res[i] = np.linalg.norm(p @ x)
    # collapse repeated eigenvalues, keeping the best-resolved vector
    keep = []
    for i in range(len(ts)):
        if keep and abs(ts[i] - ts[keep[-1]]) <= MERGE_TOL * (1.0 + abs(ts[i])):
            if res[i] < res[keep[-1]]:
                keep[-1] = i
            continue
        keep.append(i)
    keep = np.array(keep, dtype=int)
    return PepSolution(ts[keep], xs[keep], res[keep], fallback)


def solve_real(coeffs, eps_im=EPS_IM) -> PepSolution:
    """All real finite eigenpairs of ``P(t) x = 0`` via the companion pencil.

    The generalized problem is solved with QZ in homogeneous form, so
    neither ``B0`` nor ``Bd`` has to be invertible.
    """
    coeffs = deflate(coeffs)
    m = coeffs.shape[1]
    d = coeffs.shape[0] - 1
    if d == 0:
        return PepSolution.empty(m)
    c0, c1 = linearize_pencil(coeffs)
    try:
        w, vr = linalg.eig(c0, c1, right=True, homogeneous_eigvals=True,
                           check_finite=False)
    except linalg.LinAlgError as exc:
        raise SolverFailure(f"QZ did not converge: {exc}", c0.shape) from exc
    alpha, beta = w
    ts, xs = [], []
    for j in range(alpha.size):
        # pencil eigenvalue alpha/beta; polynomial eigenvalue t = -beta/alpha
        if abs(alpha[j]) * T_INFINITE <= abs(beta[j]) or alpha[j] == 0:
            continue
        t = -beta[j] / alpha[j]
        if abs(t.imag) > eps_im * (1.0 + abs(t.real)):
            continue
        z = vr[:, j].reshape(d, m)
        block = z[np.argmax(np.linalg.norm(z, axis=1))]
        ts.append(t.real)
        xs.append(_real_vector(block))
    return _finish(coeffs, ts, xs)


def _cholesky(b, rcond_min):
    try:
        low = np.linalg.cholesky(b)
    except np.linalg.LinAlgError:
        return None
    if rcond_min > 0:
        anorm = np.max(np.sum(np.abs(b), axis=0))
        rcond, info = lapack.dpocon(low, anorm, uplo="L")
        if info != 0 or rcond < rcond_min:
            return None
    return low


def definite_linear_roots(b0, b1, shifts=(0.0,), rcond_min=1e-8):
    """Core of :func:`solve_definite_linear` without residual bookkeeping.

    Every ``s`` in ``shifts`` is tried in order as the factorization point
    ``B0 + s B1``. With ``rcond_min = 0`` the condition check is skipped and
    a single ``dsygv`` call does the work. Returns ``(ts, xs)`` with ``ts``
    ascending and unit eigenvectors as the columns of ``xs``, or ``None``
    when no candidate factors. Numerically infinite roots are dropped.
    """
    for shift in shifts:
        b = b0 + shift * b1 if shift else b0
        if rcond_min > 0:
            low = _cholesky(b, rcond_min)
            if low is None:
                continue
            # L^{-1} (-B1) L^{-T}; only the lower triangle is returned
            red, info = lapack.dsygst(-b1, low, itype=1, lower=1)
            if info != 0:
                continue
            mu, y = np.linalg.eigh(red, UPLO="L")
            x, info = lapack.dtrtrs(low, y, lower=1, trans=1)
        else:
            mu, x, info = lapack.dsygv(-b1, b, itype=1)
            if info != 0:
                continue
        break
    else:
        return None
    scale = max(abs(mu[0]), abs(mu[-1])) if mu.size else 0.0
    keep = np.abs(mu) > 64 * np.finfo(float).eps * scale
    if not keep.all():
        mu, x = mu[keep], x[:, keep]
    x /= np.sqrt(np.einsum("ij,ij->j", x, x))
    ts = 1.0 / mu + shift
    order = np.argsort(ts)
    return ts[order], x[:, order]


def solve_definite_linear(b0, b1, shifts=(), rcond_min=1e-8) -> PepSolution:
    """Roots of ``(B0 + t B1) x = 0`` when ``B0`` is positive definite.

    With ``B0 = L L^T`` the problem becomes the symmetric eigenproblem
    ``-L^{-1} B1 L^{-T} y = (1/t) y``. If ``B0`` fails to factor (or is
    too ill-conditioned), each ``s`` in ``shifts`` is tried in turn with
    ``B0 + s B1`` in its place and roots shifted back; if all fail the
    QZ path of :func:`solve_real` is used and ``fallback`` is set.
    """
    b0 = np.asarray(b0, dtype=float)
    b1 = np.asarray(b1, dtype=float)
    coeffs = np.stack([b0, b1])
    roots = definite_linear_roots(b0, b1, (0.0, *shifts), rcond_min)
    if roots is None:
        sol = solve_real(coeffs)
        sol.fallback = True
        return sol
    ts, x = roots
    return _finish(coeffs, ts, x.T.copy(), refine=False)
