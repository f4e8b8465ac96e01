"""Polynomial trajectories through a spectrahedron: boundary hits and bounces."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import pep
from .lmi import LMI, DegenerateNormalError, Status, boundary_normal, membership

__all__ = [
    "PolyCurve",
    "HitResult",
    "Reflection",
    "PreconditionError",
    "UnboundedDirectionError",
    "ReflectionError",
    "compose",
    "intersection",
    "hit_from_coeffs",
    "line_hit",
    "reflection",
    "reflect",
]

# Roots closer to 0 than this are the start point itself (after a bounce).
T_FLOOR = 1e-10


class PreconditionError(ValueError):
    pass


class UnboundedDirectionError(ArithmeticError):
    pass


class ReflectionError(ArithmeticError):
    pass


@dataclass(frozen=True)
class PolyCurve:
    """``phi(t) = sum_k coeffs[k] t^k`` in R^n; ``coeffs`` has shape ``(d+1, n)``."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.coeffs, dtype=float))
        if c.ndim != 2:
            raise ValueError("coeffs must be a (d+1, n) array")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def line(cls, point, direction):
        return cls(np.stack([np.asarray(point, float), np.asarray(direction, float)]))

    @classmethod
    def boltzmann(cls, point, velocity, c, temperature):
        """Exact trajectory for the potential ``<c, x> / T``: ``p + v t - c t^2 / 2T``."""
        c = np.asarray(c, dtype=float)
        return cls(np.stack([
            np.asarray(point, float),
            np.asarray(velocity, float),
            -c / (2.0 * temperature),
        ]))

    @property
    def degree(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.coeffs.shape[1]

    @property
    def start(self) -> np.ndarray:
        return self.coeffs[0]

    def __call__(self, t):
        out = self.coeffs[-1].copy()
        for c in self.coeffs[-2::-1]:
            out = out * t + c
        return out

    def derivative(self, t):
        d = self.degree
        if d == 0:
            return np.zeros(self.dim)
        out = d * self.coeffs[d]
        for k in range(d - 1, 0, -1):
            out = out * t + k * self.coeffs[k]
        return out


@dataclass(frozen=True)
class HitResult:
    t_minus: float
    t_plus: float
    kernel_plus: np.ndarray
    kernel_minus: np.ndarray


@dataclass(frozen=True)
class Reflection:
    t_plus: float
    s_plus: np.ndarray
    hit_point: np.ndarray
    normal: np.ndarray


def compose(lmi: LMI, curve: PolyCurve, f0=None) -> np.ndarray:
    """Matrix polynomial ``F(phi(t)) = sum_k t^k B_k``, trailing zeros trimmed.

    ``f0`` may carry a cached ``F(phi(0))`` to use as ``B0``.
    """
    if curve.dim != lmi.n:
        raise ValueError(f"curve lives in R^{curve.dim}, LMI in R^{lmi.n}")
    coeffs = np.tensordot(curve.coeffs, lmi.mats[1:], axes=1)
    coeffs[0] = lmi.mats[0] + coeffs[0] if f0 is None else f0
    return pep.deflate(coeffs)


def intersection(lmi: LMI, curve: PolyCurve, f0=None, check=True, shifts=(),
                 two_sided=True) -> HitResult:
    """Parameters of the nearest boundary crossings on either side of ``t = 0``.

    ``check=False`` skips the interior test of the start point; walks use it
    when restarting from a boundary point after a bounce, where the root at
    ``t = 0`` is discarded by a small floor. ``shifts`` are forwarded to
    :func:`pep.solve_definite_linear` for line trajectories. With
    ``two_sided=False`` only the forward hit is required and ``t_minus`` may
    be ``-inf``.
    """
    if check and membership(lmi, curve.start).status is not Status.INTERIOR:
        raise PreconditionError("trajectory must start in the interior of S")
    return hit_from_coeffs(compose(lmi, curve, f0), shifts, two_sided)


def _pick(ts, xs, m, two_sided, floor=T_FLOOR):
    pos = np.flatnonzero(ts > floor)
    neg = np.flatnonzero(ts < -floor)
    if pos.size == 0 or (two_sided and neg.size == 0):
        raise UnboundedDirectionError("trajectory never leaves S; is S bounded?")
    ip = pos[0]
    if neg.size:
        im = neg[-1]
        t_minus, k_minus = float(ts[im]), xs[:, im]
    else:
        t_minus, k_minus = -np.inf, np.full(m, np.nan)
    return HitResult(t_minus, float(ts[ip]), xs[:, ip], k_minus)


def line_hit(b0, b1, shifts=(0.0,), two_sided=True, rcond_min=1e-8,
             floor=T_FLOOR) -> HitResult:
    """Hit parameters for the line pencil ``B0 + t B1``.

    ``shifts`` lists the factorization points tried in order (see
    :func:`pep.definite_linear_roots`); QZ is the last resort. Roots with
    ``|t| <= floor`` are ignored.
    """
    roots = pep.definite_linear_roots(b0, b1, shifts, rcond_min)
    if roots is None:
        sol = pep.solve_real(np.stack([b0, b1]))
        roots = sol.eigenvalues, sol.eigenvectors.T
    return _pick(roots[0], roots[1], b0.shape[0], two_sided, floor)


def hit_from_coeffs(coeffs, shifts=(), two_sided=True) -> HitResult:
    """Nearest roots of ``det(sum_k t^k B_k)`` around 0 from a composed pencil."""
    if coeffs.shape[0] == 2:
        return line_hit(coeffs[0], coeffs[1], (0.0, *shifts), two_sided)
    sol = pep.solve_real(coeffs)
    return _pick(sol.eigenvalues, sol.eigenvectors.T, coeffs.shape[1], two_sided)


def reflect(u, w):
    """Mirror ``u`` in the hyperplane with normal ``w``; invariant under ``w -> -w``."""
    w = np.asarray(w, dtype=float)
    return u - 2.0 * np.dot(u, w) / np.dot(w, w) * w


def reflection(lmi: LMI, curve: PolyCurve, hit: HitResult | None = None, **kwargs) -> Reflection:
    """First boundary hit for ``t > 0`` and the specularly reflected velocity."""
    if hit is None:
        hit = intersection(lmi, curve, **kwargs)
    try:
        w = boundary_normal(lmi, hit.kernel_plus)
    except DegenerateNormalError as exc:
        raise ReflectionError(str(exc)) from exc
    u = curve.derivative(hit.t_plus)
    return Reflection(hit.t_plus, reflect(u, w), curve(hit.t_plus), w)
