"""Multiphase Monte Carlo volume of a spectrahedron.

``S`` is intersected with a decreasing sequence of concentric balls
``S_0 = S, S_1 = S cap r_1 B, ..., S_k = r B`` where ``r B`` lies inside
``S``. Each ratio ``vol(S_i) / vol(S_{i-1})`` is the fraction of uniform
points of ``S_{i-1}`` that land in the ball of radius ``r_i``, and

    vol(S) = vol(r B) / prod_i ratio_i.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import gammaln
from scipy.stats import binomtest

from .lmi import LMI, Status, contains, evaluate, membership
from .trajectory import PreconditionError, UnboundedDirectionError, line_hit
from .walks import Ball, Walker, WalkerConfig, WalkKind, estimate_diameter

__all__ = [
    "VolumeConfig",
    "VolumeSchedule",
    "VolumeReport",
    "UnboundedBodyError",
    "ScheduleError",
    "ball_volume",
    "inner_radius",
    "build_schedule",
    "estimate_volume",
]

LINE_WALKS = (WalkKind.BILLIARD, WalkKind.HNR, WalkKind.CHNR)


class UnboundedBodyError(RuntimeError):
    """A pilot walk found a direction along which ``S`` never ends."""


class ScheduleError(RuntimeError):
    pass


def ball_volume(n: int, radius: float = 1.0) -> float:
    """``pi^(n/2) r^n / Gamma(n/2 + 1)``."""
    return math.exp(0.5 * n * math.log(math.pi) + n * math.log(radius) - gammaln(0.5 * n + 1))


@dataclass
class VolumeConfig:
    error: float = 0.1
    walk: WalkKind = WalkKind.BILLIARD
    seed: int | None = 0
    walk_length: int | None = None
    burn_in: int = 100
    ratio_band: tuple[float, float] = (0.25, 0.40)
    pilot_size: int = 600
    min_points: int = 1000
    points_constant: float = 400.0
    chains: int = 1
    center: np.ndarray | None = None
    max_retries: int = 3

    def __post_init__(self):
        self.walk = WalkKind(self.walk)
        if not 0 < self.error < 1:
            raise ValueError("error must lie in (0, 1)")
        if self.walk not in LINE_WALKS:
            raise ValueError(f"volume needs a uniform sampler (hnr, chnr, billiard), got {self.walk.value}")
        lo, hi = self.ratio_band
        if not 0 < lo < hi < 1:
            raise ValueError("ratio_band must satisfy 0 < lo < hi < 1")
        if self.chains < 1:
            raise ValueError("chains must be >= 1")

    def points_per_phase(self, k: int) -> int:
        if k == 0:
            return 0
        return max(self.min_points, math.ceil(self.points_constant / (self.error**2 * k)))


@dataclass
class VolumeSchedule:
    center: np.ndarray
    radii: list  # r_1 > r_2 > ... > r_k = r; S_0 = S carries no ball
    inner_radius: float
    outer_radius: float
    ratio_band: tuple[float, float]
    points_per_phase: int
    diameter: float

    @property
    def k(self) -> int:
        return len(self.radii)


@dataclass
class VolumeReport:
    volume: float
    k: int
    ratios: list
    samples: int
    seed: int | None
    radii: list = field(default_factory=list)
    inner_radius: float = 0.0
    outer_radius: float = 0.0

    def phase_volumes(self):
        """Estimated ``vol(S_i)`` for ``i = 0..k``; non-increasing by construction."""
        out = [self.volume]
        for q in self.ratios:
            out.append(out[-1] * q)
        return out

    def to_json(self) -> str:
        d = asdict(self)
        return json.dumps(d, sort_keys=True)


def _sphere_points(rng, n, count):
    g = rng.standard_normal((count, n))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def inner_radius(lmi: LMI, center, rng, n_dirs=None, n_check=2000, iters=40) -> float:
    """Radius of a ball around ``center`` contained in ``S``.

    Starts from the shortest boundary distance over the coordinate axes and
    random directions, then bisects until every test point on the sphere of
    that radius passes the membership test.
    """
    n = lmi.n
    f = evaluate(lmi, center)
    n_dirs = 2 * n + 64 if n_dirs is None else n_dirs
    dirs = np.concatenate([np.eye(n), -np.eye(n), _sphere_points(rng, n, n_dirs)])
    r_hi = np.inf
    for v in dirs:
        try:
            hit = line_hit(f, lmi.direction_matrix(v), two_sided=False, rcond_min=0.0)
        except UnboundedDirectionError:
            continue
        r_hi = min(r_hi, hit.t_plus)
    if not np.isfinite(r_hi):
        raise UnboundedBodyError("no boundary found in any probe direction")
    probe = _sphere_points(rng, n, n_check)

    def ok(r):
        return bool(np.all(contains(lmi, center + r * probe)))

    if ok(r_hi):
        return float(r_hi)
    lo, hi = 0.0, r_hi
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    if lo == 0.0:
        raise ScheduleError("could not fit a ball around the center inside S")
    return float(lo)


class _Sampler:
    """Draws uniform points from ``S cap ball`` for the schedule phases."""

    def __init__(self, lmi, config: VolumeConfig, center, diameter, seed_seq):
        self.lmi = lmi
        self.config = config
        self.center = center
        self.diameter = diameter
        self.seed_seq = seed_seq

    def draw(self, radius, count, start):
        """``count`` points; ``radius=None`` means no ball. Returns ``(pts, failures)``."""
        cfg = self.config
        chains = min(cfg.chains, max(count, 1))
        seeds = self.seed_seq.spawn(chains)
        counts = [count // chains + (i < count % chains) for i in range(chains)]
        ball = None if radius is None else Ball(self.center, radius)
        tau = self.diameter if radius is None else min(self.diameter, 2.0 * radius)
        wcfg = WalkerConfig(walk=cfg.walk, walk_length=cfg.walk_length,
                            burn_in=cfg.burn_in, tau=tau)
        pts, failures = [], {}
        for c, s in zip(counts, seeds):
            walker = Walker(self.lmi, wcfg, start, ball=ball, rng=np.random.default_rng(s))
            pts.append(walker.sample(c))
            for kind, num in walker.state.failure_kinds.items():
                failures[kind] = failures.get(kind, 0) + num
        if failures.get("intersection", 0) > 0 and radius is None:
            raise UnboundedBodyError(
                f"{failures['intersection']} pilot steps found no boundary; is S bounded?"
            )
        return np.concatenate(pts), failures


def _dist(pts, center):
    return np.linalg.norm(pts - center, axis=1)


def _warm_start(pts, center, radius):
    """Last sample strictly inside the next ball, else the center."""
    d = _dist(pts, center)
    idx = np.flatnonzero(d < radius * (1 - 1e-9))
    return pts[idx[-1]] if idx.size else center


def build_schedule(lmi: LMI, config: VolumeConfig, rng_seq=None) -> VolumeSchedule:
    """Choose the ball radii so each phase ratio sits in ``config.ratio_band``.

    Each radius is the distance quantile at the band midpoint of a pilot
    sample from the previous body, then checked on a fresh pilot with a
    two-sided binomial test against the nearest band edge (level 0.05);
    rejected radii are re-fitted on the pooled pilots.
    """
    n = lmi.n
    center = np.zeros(n) if config.center is None else np.asarray(config.center, dtype=float)
    if center.shape != (n,):
        raise ValueError(f"center has shape {center.shape}, expected ({n},)")
    if membership(lmi, center).status is not Status.INTERIOR:
        raise PreconditionError("ball center must be an interior point of S")
    seq = np.random.SeedSequence(config.seed) if rng_seq is None else rng_seq
    geo_seq, pilot_seq = seq.spawn(2)
    geo_rng = np.random.default_rng(geo_seq)
    try:
        diameter = estimate_diameter(lmi, seed=geo_rng, start=center)
    except UnboundedDirectionError as exc:
        raise UnboundedBodyError(f"S is unbounded: {exc}") from exc
    r = inner_radius(lmi, center, geo_rng)
    sampler = _Sampler(lmi, config, center, diameter, pilot_seq)
    lo, hi = config.ratio_band
    target = 0.5 * (lo + hi)

    pilot, _ = sampler.draw(None, config.pilot_size, center)
    outer = 1.1 * float(_dist(pilot, center).max())
    radii = []
    current, start = None, center
    while True:
        d = _dist(pilot, center)
        if np.all(d <= r * (1 + 1e-9)):
            # S_{i-1} is (numerically) the ball r B already
            if not radii:
                break
            radii[-1] = r
            break
        cand = float(np.quantile(d, target))
        if cand <= r:
            radii.append(r)
            break
        for _ in range(config.max_retries):
            check, _ = sampler.draw(current, config.pilot_size, _warm_start(pilot, center, cand))
            hits = int(np.count_nonzero(_dist(check, center) <= cand))
            frac = hits / len(check)
            edge = lo if frac < lo else hi if frac > hi else None
            if edge is None or binomtest(hits, len(check), edge).pvalue >= 0.05:
                break
            pilot = np.concatenate([pilot, check])
            cand = max(float(np.quantile(_dist(pilot, center), target)), r)
        radii.append(cand)
        if len(radii) > 64 * n:
            raise ScheduleError("schedule did not reach the inner ball")
        start = _warm_start(pilot, center, cand)
        current = cand
        pilot, _ = sampler.draw(current, config.pilot_size, start)
    return VolumeSchedule(center, radii, r, outer, tuple(config.ratio_band),
                          config.points_per_phase(len(radii)), diameter)


def estimate_volume(lmi: LMI, config: VolumeConfig | None = None) -> VolumeReport:
    """Volume estimate with the telescoping product over the schedule."""
    config = VolumeConfig() if config is None else config
    seq = np.random.SeedSequence(config.seed)
    sched_seq, phase_seq = seq.spawn(2)
    sched = build_schedule(lmi, config, sched_seq)
    n = lmi.n
    base = ball_volume(n, sched.inner_radius)
    sampler = _Sampler(lmi, config, sched.center, sched.diameter, phase_seq)
    ratios = []
    total = 0
    body, start = None, sched.center
    for radius in sched.radii:
        pts, _ = sampler.draw(body, sched.points_per_phase, start)
        total += len(pts)
        d = _dist(pts, sched.center)
        hits = int(np.count_nonzero(d <= radius))
        if hits == 0:
            raise ScheduleError(f"no samples fell inside radius {radius:.6g}")
        ratios.append(hits / len(pts))
        body, start = radius, _warm_start(pts, sched.center, radius)
    volume = base / math.prod(ratios) if ratios else base
    return VolumeReport(
        volume=float(volume),
        k=sched.k,
        ratios=[float(q) for q in ratios],
        samples=total,
        seed=config.seed,
        radii=[float(x) for x in sched.radii],
        inner_radius=sched.inner_radius,
        outer_radius=sched.outer_radius,
    )
