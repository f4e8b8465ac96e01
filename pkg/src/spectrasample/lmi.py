"""Linear matrix inequalities and the spectrahedra they cut out.

A spectrahedron is ``S = {x : F(x) = A0 + x1 A1 + ... + xn An  >= 0}``.
The matrices are stored dense as one ``(n + 1, m, m)`` array.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import linalg
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

__all__ = [
    "LMI",
    "Status",
    "Membership",
    "LmiFormatError",
    "DegenerateNormalError",
    "symmetrize",
    "evaluate",
    "min_eigenvalue",
    "membership",
    "boundary_normal",
    "generate_random",
    "canonical_cube",
    "canonical_ball",
    "read_lmi",
    "write_lmi",
    "dumps_lmi",
    "loads_lmi",
]

SYM_TOL = 1e-12
DEFAULT_EPS_REL = 1e-10
DENSE_EIG_LIMIT = 64


class LmiFormatError(ValueError):
    """Malformed LMI file; ``index`` names the offending matrix if known."""

    def __init__(self, message, index=None):
        if index is not None:
            message = f"matrix {index}: {message}"
        super().__init__(message)
        self.index = index


class DegenerateNormalError(ArithmeticError):
    """The determinant gradient vanishes (boundary point of rank <= m - 2)."""


def symmetrize(a):
    a = np.asarray(a, dtype=float)
    return 0.5 * (a + np.swapaxes(a, -1, -2))


@dataclass(frozen=True, eq=False)
class LMI:
    """``F(x) = A0 + sum_i x_i A_i`` with symmetric ``m x m`` coefficients.

    ``mats[0]`` is the constant term. The array is symmetrized and made
    read-only on construction, so instances can be shared freely.
    """

    mats: np.ndarray

    def __post_init__(self):
        mats = np.asarray(self.mats, dtype=float)
        if mats.ndim != 3 or mats.shape[0] < 2 or mats.shape[1] != mats.shape[2]:
            raise ValueError(
                f"expected an (n+1, m, m) stack with n >= 1, got shape {mats.shape}"
            )
        mats = symmetrize(mats)
        mats.setflags(write=False)
        object.__setattr__(self, "mats", mats)

    @property
    def n(self) -> int:
        return self.mats.shape[0] - 1

    @property
    def m(self) -> int:
        return self.mats.shape[1]

    @property
    def a0(self) -> np.ndarray:
        return self.mats[0]

    @property
    def coeffs(self) -> np.ndarray:
        return self.mats[1:]

    def __call__(self, x):
        return evaluate(self, x)

    def direction_matrix(self, v):
        """``sum_i v_i A_i``: the linear part of ``F`` along ``v``."""
        v = _as_point(self, v)
        m = self.m
        return (v @ self.mats[1:].reshape(self.n, m * m)).reshape(m, m)

    def __eq__(self, other):
        return isinstance(other, LMI) and np.array_equal(self.mats, other.mats)

    def __hash__(self):
        return hash(self.mats.tobytes())


class Status(enum.Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"
    EXTERIOR = "exterior"


@dataclass(frozen=True)
class Membership:
    status: Status
    lambda_min: float
    eps: float

    @property
    def inside(self) -> bool:
        """True for interior and boundary points."""
        return self.status is not Status.EXTERIOR


def _as_point(lmi, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (lmi.n,):
        raise ValueError(f"point has shape {x.shape}, LMI expects ({lmi.n},)")
    return x


def evaluate(lmi: LMI, x) -> np.ndarray:
    """Return ``F(x)``; exactly symmetric."""
    x = _as_point(lmi, x)
    return symmetrize(lmi.mats[0] + np.tensordot(x, lmi.mats[1:], axes=1))


def min_eigenvalue(a) -> float:
    """Smallest eigenvalue of a symmetric matrix.

    Dense LAPACK up to ``m = 64``; Lanczos above, with a dense fallback
    if ARPACK does not converge.
    """
    a = np.asarray(a, dtype=float)
    m = a.shape[0]
    if m <= DENSE_EIG_LIMIT:
        return float(linalg.eigvalsh(a, subset_by_index=[0, 0])[0])
    try:
        vals = eigsh(a, k=1, which="SA", tol=1e-12, return_eigenvectors=False)
        return float(vals[0])
    except ArpackNoConvergence:
        return float(linalg.eigvalsh(a, subset_by_index=[0, 0])[0])


def classify(lambda_min, eps) -> Status:
    if lambda_min > eps:
        return Status.INTERIOR
    if lambda_min < -eps:
        return Status.EXTERIOR
    return Status.BOUNDARY


def membership(lmi: LMI, x, eps_psd=None) -> Membership:
    """Classify ``x`` by the sign of the smallest eigenvalue of ``F(x)``.

    ``eps_psd`` defaults to ``1e-10 * max|F(x)|``.
    """
    f = evaluate(lmi, x)
    if eps_psd is None:
        eps_psd = DEFAULT_EPS_REL * float(np.max(np.abs(f)))
    elif eps_psd < 0:
        raise ValueError("eps_psd must be non-negative")
    lam = min_eigenvalue(f)
    return Membership(classify(lam, eps_psd), lam, float(eps_psd))


def contains(lmi: LMI, points, eps_rel=DEFAULT_EPS_REL) -> np.ndarray:
    """Vectorized non-exterior test for a ``(k, n)`` batch of points."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    f = lmi.mats[0] + np.tensordot(points, lmi.mats[1:], axes=1)
    f = symmetrize(f)
    lam = np.linalg.eigvalsh(f)[:, 0]
    scale = np.max(np.abs(f), axis=(1, 2))
    return lam >= -eps_rel * scale


def boundary_normal(lmi: LMI, v) -> np.ndarray:
    """Unit normal at a boundary point from a kernel vector ``v`` of ``F``.

    The gradient of ``det F`` there is parallel to ``(v^T A_i v)_i``; the
    positive scalar in front of it is never needed since the result is
    normalized. The sign is unspecified.
    """
    v = np.asarray(v, dtype=float)
    if v.shape != (lmi.m,):
        raise ValueError(f"kernel vector has shape {v.shape}, expected ({lmi.m},)")
    norm_v = np.linalg.norm(v)
    if not norm_v > 0:
        raise DegenerateNormalError("kernel vector is zero")
    v = v / norm_v
    g = np.einsum("i,kij,j->k", v, lmi.mats[1:], v)
    norm_g = np.linalg.norm(g)
    if norm_g < 1e-12:
        raise DegenerateNormalError(
            f"determinant gradient vanishes (|g| = {norm_g:.3g}); rank of F <= m - 2?"
        )
    return g / norm_g


def generate_random(n: int, m: int, seed) -> LMI:
    """Random bounded spectrahedron with the origin strictly inside.

    ``A0 = Z Z^T + I`` with ``Z ~ U[0, 1]``; ``A_i = diag(Q~, -Q~)`` where
    ``Q~ = Q + Q^T`` and ``Q ~ U[-1, 1]`` of size ``m / 2``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if m < 2 or m % 2:
        raise ValueError(f"m must be a positive even integer, got {m}")
    rng = np.random.default_rng(seed)
    z = rng.uniform(0.0, 1.0, size=(m, m))
    mats = np.zeros((n + 1, m, m))
    mats[0] = z @ z.T + np.eye(m)
    h = m // 2
    for i in range(1, n + 1):
        q = rng.uniform(-1.0, 1.0, size=(h, h))
        q = q + q.T
        mats[i, :h, :h] = q
        mats[i, h:, h:] = -q
    return LMI(mats)


def canonical_cube(n: int, half_width: float = 1.0) -> LMI:
    """``[-s, s]^n`` as a diagonal LMI: slot ``2i`` is ``s - x_i``, ``2i+1`` is ``s + x_i``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    m = 2 * n
    mats = np.zeros((n + 1, m, m))
    mats[0] = half_width * np.eye(m)
    for i in range(n):
        mats[i + 1, 2 * i, 2 * i] = -1.0
        mats[i + 1, 2 * i + 1, 2 * i + 1] = 1.0
    return LMI(mats)


def canonical_ball(n: int, radius: float = 1.0) -> LMI:
    """``||x|| <= r`` via the arrow matrix ``[[r I, x], [x^T, r]]``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    m = n + 1
    mats = np.zeros((n + 1, m, m))
    mats[0] = radius * np.eye(m)
    for i in range(n):
        mats[i + 1, i, n] = mats[i + 1, n, i] = 1.0
    return LMI(mats)


# -- file format -------------------------------------------------------------


def dumps_lmi(lmi: LMI) -> str:
    """Canonical JSON text: one matrix row per line, shortest float reprs."""
    blocks = []
    for a in lmi.mats:
        rows = ",\n    ".join(json.dumps([float(v) for v in row]) for row in a)
        blocks.append("   [" + rows + "]")
    return (
        f'{{"n": {lmi.n}, "m": {lmi.m}, "matrices": [\n'
        + ",\n".join(blocks)
        + "\n]}\n"
    )


def loads_lmi(text: str) -> LMI:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise LmiFormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise LmiFormatError("top level must be an object")
    for key in ("n", "m", "matrices"):
        if key not in obj:
            raise LmiFormatError(f"missing key {key!r}")
    n, m, raw = obj["n"], obj["m"], obj["matrices"]
    if not (isinstance(n, int) and n >= 1 and isinstance(m, int) and m >= 1):
        raise LmiFormatError(f"n and m must be positive integers, got n={n!r}, m={m!r}")
    if not isinstance(raw, list) or len(raw) != n + 1:
        got = len(raw) if isinstance(raw, list) else type(raw).__name__
        raise LmiFormatError(f"expected n + 1 = {n + 1} matrices, got {got}")
    mats = np.empty((n + 1, m, m))
    for k, block in enumerate(raw):
        try:
            a = np.array(block, dtype=float)
        except (TypeError, ValueError) as exc:
            raise LmiFormatError(f"not a numeric array ({exc})", k) from exc
        if a.shape != (m, m):
            raise LmiFormatError(f"shape {a.shape}, expected ({m}, {m})", k)
        if not np.all(np.isfinite(a)):
            raise LmiFormatError("non-finite entry", k)
        gap = np.abs(a - a.T)
        if np.any(gap > SYM_TOL * np.maximum(1.0, np.abs(a))):
            i, j = np.unravel_index(np.argmax(gap), gap.shape)
            raise LmiFormatError(f"not symmetric at ({i}, {j})", k)
        mats[k] = a
    return LMI(mats)


def read_lmi(path) -> LMI:
    return loads_lmi(Path(path).read_text())


def write_lmi(lmi: LMI, path) -> None:
    Path(path).write_text(dumps_lmi(lmi))
