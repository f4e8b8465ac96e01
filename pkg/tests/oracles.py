"""Independent reference computations used to freeze or cross-check values.

None of these touch the code paths they check: determinants instead of
eigensolvers, rejection sampling instead of random walks, closed forms
instead of sampling.
"""

import math

import numpy as np


def det_poly(coeffs, t):
    out = np.array(coeffs[-1], dtype=float)
    for b in coeffs[-2::-1]:
        out = out * t + b
    return np.linalg.det(out)


def root_bound(coeffs):
    """Upper bound on |t| for real roots of det P(t) (companion norm bound)."""
    lead_inv = np.linalg.inv(coeffs[-1])
    return 1.0 + max(np.linalg.norm(lead_inv @ b, 2) for b in coeffs[:-1])


def det_roots(coeffs, pieces=64):
    """Real roots of theta(t) = det P(t) via piecewise Chebyshev interpolation.

    theta has degree m*d; on each sub-interval it is interpolated exactly
    from m*d + 1 Chebyshev nodes, roots of the interpolant inside the
    sub-interval are kept and polished by secant steps on theta itself.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    deg = coeffs.shape[1] * (coeffs.shape[0] - 1)
    r = root_bound(coeffs)
    edges = np.linspace(-r, r, pieces + 1)
    k = np.arange(deg + 1)
    nodes = np.cos((2 * k + 1) * np.pi / (2 * (deg + 1)))
    roots = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
        vals = [det_poly(coeffs, mid + half * x) for x in nodes]
        cheb = np.polynomial.chebyshev.chebfit(nodes, vals, deg)
        for z in np.polynomial.chebyshev.chebroots(cheb):
            if abs(z.imag) < 1e-6 and -1 - 1e-9 <= z.real <= 1 + 1e-9:
                roots.append(_polish(coeffs, mid + half * z.real, half))
    roots.sort()
    out = []
    for t in roots:
        if not out or abs(t - out[-1]) > 1e-7 * (1 + abs(t)):
            out.append(t)
    return np.array(out)


def _polish(coeffs, t, scale):
    h = 1e-7 * max(scale, 1e-3)
    t0, t1 = t - h, t
    f0, f1 = det_poly(coeffs, t0), det_poly(coeffs, t1)
    for _ in range(30):
        if f1 == f0:
            break
        t2 = t1 - f1 * (t1 - t0) / (f1 - f0)
        t0, f0, t1, f1 = t1, f1, t2, det_poly(coeffs, t2)
        if abs(t1 - t0) < 1e-15 * (1 + abs(t1)):
            break
    return t1


def fd_det_gradient(lmi, x, h=1e-5):
    """Central finite differences of x -> det F(x)."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        fp = lmi.mats[0] + np.tensordot(x + e, lmi.mats[1:], axes=1)
        fm = lmi.mats[0] + np.tensordot(x - e, lmi.mats[1:], axes=1)
        g[i] = (np.linalg.det(fp) - np.linalg.det(fm)) / (2 * h)
    return g


def ball_volume(n, r=1.0):
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1) * r ** n


def disc_band_outside_fraction(b):
    """Fraction of the unit disc with |x1| >= b (two circular segments)."""
    segment = math.acos(b) - b * math.sqrt(1 - b * b)
    return 2 * segment / math.pi


def rejection_area(lmi, box, n_points, seed):
    """Monte Carlo area of a 2D spectrahedron inside an axis box, with stderr."""
    rng = np.random.default_rng(seed)
    (x0, x1), (y0, y1) = box
    pts = np.column_stack([rng.uniform(x0, x1, n_points), rng.uniform(y0, y1, n_points)])
    inside = np.zeros(n_points, dtype=bool)
    for s in range(0, n_points, 50_000):
        chunk = pts[s:s + 50_000]
        f = lmi.mats[0] + np.tensordot(chunk, lmi.mats[1:], axes=1)
        inside[s:s + 50_000] = np.linalg.eigvalsh(f)[:, 0] >= 0
    area = (x1 - x0) * (y1 - y0)
    p = inside.mean()
    return area * p, area * math.sqrt(p * (1 - p) / n_points), pts[inside]
