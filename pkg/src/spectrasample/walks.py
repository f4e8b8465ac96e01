"""Geometric random walks over a spectrahedron.

Four kernels share one :class:`Walker`:

* ``hnr``      hit-and-run with uniformly random directions,
* ``chnr``     hit-and-run along coordinate axes, ``F`` updated incrementally,
* ``billiard`` uniform billiard walk with specular reflections,
* ``hmcr``     Hamiltonian Monte Carlo with reflections for the Boltzmann
               density ``exp(-<c, x> / T)``, using exact parabolic flights.

Hit-and-run kernels target the uniform density unless an objective and a
temperature are set, in which case the chord is sampled from the truncated
exponential law of the Boltzmann density restricted to the line.
"""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import pep
from .lmi import LMI, DegenerateNormalError, Status, boundary_normal, evaluate, membership
from .trajectory import (
    PolyCurve,
    PreconditionError,
    UnboundedDirectionError,
    compose,
    hit_from_coeffs,
    line_hit,
    reflect,
)

__all__ = [
    "WalkKind",
    "WalkerConfig",
    "Ball",
    "WalkState",
    "Walker",
    "sample",
    "estimate_diameter",
    "write_samples_csv",
]

PSD_BAND = 1e-10
CHORD_MARGIN = 1e-9
# Relative offsets tried when restarting a line from a boundary point.
RESTART_SHIFTS = (0.3, 0.03, 3e-3, 3e-4)


class WalkKind(str, enum.Enum):
    HNR = "hnr"
    CHNR = "chnr"
    BILLIARD = "billiard"
    HMCR = "hmcr"


@dataclass
class WalkerConfig:
    """Walk parameters. ``None`` fields take dimension-dependent defaults.

    Defaults: ``rho = 10 n``; ``walk_length = 1`` for billiard and HMC-r,
    ``ceil(4 sqrt(n))`` for the hit-and-run kernels; ``tau`` is estimated
    with :func:`estimate_diameter`.
    """

    walk: WalkKind = WalkKind.BILLIARD
    walk_length: int | None = None
    burn_in: int = 0
    rho: int | None = None
    tau: float | None = None
    seed: int | None = 0
    temperature: float | None = None
    objective: np.ndarray | None = None

    def __post_init__(self):
        self.walk = WalkKind(self.walk)
        if self.walk_length is not None and self.walk_length < 1:
            raise ValueError("walk_length must be >= 1")
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        if self.rho is not None and self.rho < 1:
            raise ValueError("rho must be >= 1")
        if self.tau is not None and not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.temperature is not None and not self.temperature > 0:
            raise ValueError("temperature must be positive")
        if self.objective is not None:
            self.objective = np.asarray(self.objective, dtype=float)
        if self.walk is WalkKind.HMCR and self.temperature is None:
            raise ValueError("hmcr needs a temperature")

    def default_walk_length(self, n):
        if self.walk_length is not None:
            return self.walk_length
        if self.walk in (WalkKind.BILLIARD, WalkKind.HMCR):
            return 1
        return math.ceil(4 * math.sqrt(n))

    def default_rho(self, n):
        return self.rho if self.rho is not None else 10 * n


@dataclass(frozen=True)
class Ball:
    """Extra constraint ``||x - center|| <= radius`` (for volume phases)."""

    center: np.ndarray
    radius: float

    def chord(self, p, v):
        """Parameters where ``p + t v`` crosses the sphere (``p`` inside)."""
        d = p - self.center
        a = v @ v
        b = d @ v
        c = d @ d - self.radius**2
        disc = max(b * b - a * c, 0.0)
        root = math.sqrt(disc)
        # numerically stable pair of roots
        q = -(b + math.copysign(root, b)) if b != 0 else root
        if q == 0:
            return 0.0, 0.0
        r1, r2 = q / a, c / q
        return min(r1, r2), max(r1, r2)

    def contains(self, p):
        return np.linalg.norm(p - self.center) <= self.radius * (1 + 1e-12)


@dataclass
class WalkState:
    point: np.ndarray
    f: np.ndarray
    rng: np.random.Generator
    reflections: int = 0
    path_length: float = 0.0
    steps: int = 0
    failures: int = 0
    failure_kinds: dict = field(default_factory=dict)


class StepFailure(Exception):
    """Raised inside a step; the walk stays at its current point."""


def _psd_ok(f):
    """Non-exterior test by Cholesky with a relative band."""
    g = f.copy()
    g.flat[:: g.shape[0] + 1] += PSD_BAND * np.abs(f).max()
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        return False
    return True


def _uniform01(rng):
    u = rng.random()
    while u == 0.0:
        u = rng.random()
    return u


def _unit(rng, n):
    g = rng.standard_normal(n)
    return g / math.sqrt(g @ g)


def chord_point(lo, hi, eta, rate=0.0):
    """Inverse CDF on ``[lo, hi]`` for the density ``exp(-rate t)`` (uniform if 0)."""
    length = hi - lo
    x = abs(rate) * length
    if x < 1e-12:
        return lo + eta * length
    # truncated Exp(|rate|) offset from the favoured end; expm1(-x) never overflows
    s = -math.log1p(eta * math.expm1(-x)) / abs(rate)
    # keep off the endpoint itself, where F is singular
    s = min(max(s, CHORD_MARGIN * length), (1 - CHORD_MARGIN) * length)
    return lo + s if rate > 0 else hi - s


class Walker:
    """One Markov chain over ``S`` (optionally intersected with a ball)."""

    def __init__(self, lmi: LMI, config: WalkerConfig, start=None, ball: Ball | None = None,
                 rng=None):
        self.lmi = lmi
        self.config = config
        self.ball = ball
        n = lmi.n
        start = np.zeros(n) if start is None else np.array(start, dtype=float)
        if start.shape != (n,):
            raise ValueError(f"start point has shape {start.shape}, expected ({n},)")
        mem = membership(lmi, start)
        if mem.status is not Status.INTERIOR:
            raise PreconditionError(
                f"start point is not interior (lambda_min = {mem.lambda_min:.3g}); "
                "supply an interior point"
            )
        if ball is not None and not ball.contains(start):
            raise PreconditionError("start point lies outside the ball constraint")
        if ball is not None and config.walk is WalkKind.HMCR:
            raise ValueError("ball constraints are supported for line walks only")
        if rng is None:
            rng = np.random.default_rng(config.seed)
        self.state = WalkState(start, evaluate(lmi, start), rng)
        self.walk_length = config.default_walk_length(n)
        self.rho = config.default_rho(n)
        if config.tau is not None:
            self.tau = config.tau
        else:
            self.tau = estimate_diameter(lmi, seed=rng, start=start)
        self.objective = config.objective
        self.temperature = config.temperature

    # -- helpers ------------------------------------------------------------

    @property
    def point(self):
        return self.state.point

    def _boltzmann_rate(self, v):
        if self.objective is None or self.temperature is None:
            return 0.0
        return float(self.objective @ v) / self.temperature

    def _chord(self, p, f, b1, v):
        hit = line_hit(f, b1, rcond_min=0.0, floor=0.0)
        lo, hi = hit.t_minus, hit.t_plus
        if self.ball is not None:
            blo, bhi = self.ball.chord(p, v)
            lo, hi = max(lo, blo), min(hi, bhi)
        return lo, hi

    def _commit(self, p, f=None):
        st = self.state
        st.point = p
        st.f = evaluate(self.lmi, p) if f is None else f
        return p

    def _fail(self, kind):
        st = self.state
        st.failures += 1
        st.failure_kinds[kind] = st.failure_kinds.get(kind, 0) + 1
        return st.point

    # -- kernels ------------------------------------------------------------

    def hnr_step(self, direction=None, eta=None):
        """Hit-and-run along a uniformly random direction."""
        st = self.state
        v = _unit(st.rng, self.lmi.n) if direction is None else np.asarray(direction, float)
        b1 = self.lmi.direction_matrix(v)
        try:
            lo, hi = self._chord(st.point, st.f, b1, v)
        except (UnboundedDirectionError, pep.SolverFailure):
            return self._fail("intersection")
        eta = _uniform01(st.rng) if eta is None else eta
        t = chord_point(lo, hi, eta, self._boltzmann_rate(v))
        f = st.f + t * b1
        if not _psd_ok(f):
            return self._fail("left body")
        st.reflections = 0
        st.path_length = abs(t) * math.sqrt(v @ v)
        return self._commit(st.point + t * v, f)

    def chnr_step(self, axis=None, eta=None):
        """Coordinate hit-and-run; ``F`` is updated as ``F + t A_j``."""
        st = self.state
        n = self.lmi.n
        j = int(st.rng.integers(n)) if axis is None else int(axis)
        aj = self.lmi.mats[j + 1]
        v = np.zeros(n)
        v[j] = 1.0
        try:
            lo, hi = self._chord(st.point, st.f, aj, v)
        except (UnboundedDirectionError, pep.SolverFailure):
            return self._fail("intersection")
        eta = _uniform01(st.rng) if eta is None else eta
        t = chord_point(lo, hi, eta, self._boltzmann_rate(v))
        f = st.f + t * aj
        if not _psd_ok(f):
            return self._fail("left body")
        p = st.point.copy()
        p[j] += t
        st.reflections = 0
        st.path_length = abs(t)
        return self._commit(p, f)

    def billiard_step(self, direction=None, length=None):
        """Billiard flight of length ``-tau ln(eta)``; stays put after ``rho`` bounces."""
        st = self.state
        if length is None:
            length = -self.tau * math.log(_uniform01(st.rng))
        v = _unit(st.rng, self.lmi.n) if direction is None else np.array(direction, float)
        try:
            p, f = self._fly_lines(st.point, st.f, v, length)
        except StepFailure as exc:
            return self._fail(str(exc))
        return self._commit(p, f)

    def _fly_lines(self, p, f, v, remaining):
        st = self.state
        bounces = 0
        travelled = 0.0
        speed = math.sqrt(v @ v)
        shifts = (0.0,)
        while True:
            b1 = self.lmi.direction_matrix(v)
            try:
                # from a boundary point B0 is singular: factor slightly inside
                hit = line_hit(f, b1, shifts, two_sided=False, rcond_min=0.0)
            except (UnboundedDirectionError, pep.SolverFailure) as exc:
                raise StepFailure("intersection") from exc
            t_hit, normal = hit.t_plus, None
            if self.ball is not None:
                t_ball = self.ball.chord(p, v)[1]
                if t_ball < t_hit:
                    t_hit, normal = t_ball, "ball"
            if remaining <= t_hit:
                p = p + remaining * v
                f = f + remaining * b1
                travelled += remaining * speed
                break
            bounces += 1
            if bounces > self.rho:
                raise StepFailure("reflections")
            p = p + t_hit * v
            f = f + t_hit * b1
            travelled += t_hit * speed
            remaining -= t_hit
            if normal == "ball":
                w = p - self.ball.center
            else:
                try:
                    w = boundary_normal(self.lmi, hit.kernel_plus)
                except DegenerateNormalError as exc:
                    raise StepFailure("reflection") from exc
            v = reflect(v, w)
            shifts = tuple(s * t_hit for s in RESTART_SHIFTS)
        if bounces:
            f = evaluate(self.lmi, p)
        if not _psd_ok(f) or (self.ball is not None and not self.ball.contains(p)):
            raise StepFailure("left body")
        st.reflections = bounces
        st.path_length = travelled
        return p, f

    def hmcr_step(self, velocity=None, length=None, objective=None, temperature=None):
        """Exact Boltzmann HMC flight ``p + v t - c t^2 / 2T`` with reflections."""
        st = self.state
        c = self.objective if objective is None else np.asarray(objective, float)
        temp = self.temperature if temperature is None else temperature
        if c is None:
            c = np.zeros(self.lmi.n)
        if temp is None or not temp > 0:
            raise ValueError("hmcr needs a positive temperature")
        if length is None:
            length = self.tau * _uniform01(st.rng)
        v = st.rng.standard_normal(self.lmi.n) if velocity is None else np.array(velocity, float)
        if not np.any(c):
            try:
                p, f = self._fly_lines(st.point, st.f, v, length)
            except StepFailure as exc:
                return self._fail(str(exc))
            return self._commit(p, f)
        try:
            p = self._fly_parabolas(st.point, st.f, v, length, c, temp)
        except StepFailure as exc:
            return self._fail(str(exc))
        return self._commit(p)

    def _fly_parabolas(self, p, f, v, remaining, c, temp):
        st = self.state
        bounces = 0
        accel = -c / temp
        b2 = 0.5 * self.lmi.direction_matrix(accel)
        while True:
            coeffs = np.stack([f, self.lmi.direction_matrix(v), b2])
            try:
                hit = hit_from_coeffs(coeffs, two_sided=False)
            except (UnboundedDirectionError, pep.SolverFailure) as exc:
                raise StepFailure("intersection") from exc
            t_hit = hit.t_plus
            if remaining <= t_hit:
                p = p + remaining * v + 0.5 * remaining**2 * accel
                break
            bounces += 1
            if bounces > self.rho:
                raise StepFailure("reflections")
            p = p + t_hit * v + 0.5 * t_hit**2 * accel
            f = pep.polyval(coeffs, t_hit)
            u = v + t_hit * accel
            try:
                w = boundary_normal(self.lmi, hit.kernel_plus)
            except DegenerateNormalError as exc:
                raise StepFailure("reflection") from exc
            v = reflect(u, w)
            remaining -= t_hit
        if not _psd_ok(evaluate(self.lmi, p)):
            raise StepFailure("left body")
        st.reflections = bounces
        return p

    # -- chain --------------------------------------------------------------

    def step(self):
        kind = self.config.walk
        self.state.steps += 1
        if kind is WalkKind.HNR:
            return self.hnr_step()
        if kind is WalkKind.CHNR:
            return self.chnr_step()
        if kind is WalkKind.BILLIARD:
            return self.billiard_step()
        return self.hmcr_step()

    def run(self, steps):
        for _ in range(steps):
            self.step()
        return self.state.point

    def sample(self, n_samples, burn_in=None):
        """Burn in, then record every ``walk_length``-th point."""
        burn_in = self.config.burn_in if burn_in is None else burn_in
        out = np.empty((n_samples, self.lmi.n))
        if n_samples == 0:
            return out
        self.run(burn_in)
        for i in range(n_samples):
            out[i] = self.run(self.walk_length)
        return out


def _chain(args):
    lmi, config, start, n_samples, seed_seq = args
    walker = Walker(lmi, config, start, rng=np.random.default_rng(seed_seq))
    return walker.sample(n_samples), walker.state.failures


def sample(lmi: LMI, config: WalkerConfig, start=None, n_samples=0, chains=1,
           return_failures=False):
    """``n_samples`` points from the configured walk, deterministic in ``config.seed``.

    With ``chains > 1`` the count is split over independent chains seeded by
    ``SeedSequence(seed).spawn(chains)``, run in worker processes, and
    concatenated in chain order.
    """
    if n_samples < 0:
        raise ValueError("n_samples must be >= 0")
    if chains < 1:
        raise ValueError("chains must be >= 1")
    if chains == 1:
        walker = Walker(lmi, config, start)
        pts = walker.sample(n_samples)
        failures = walker.state.failures
    else:
        seeds = np.random.SeedSequence(config.seed).spawn(chains)
        counts = [n_samples // chains + (i < n_samples % chains) for i in range(chains)]
        jobs = [(lmi, config, start, c, s) for c, s in zip(counts, seeds)]
        workers = min(chains, os.cpu_count() or 1)
        if workers == 1:
            results = [_chain(j) for j in jobs]
        else:
            with ProcessPoolExecutor(workers) as pool:
                results = list(pool.map(_chain, jobs))
        pts = np.concatenate([r[0] for r in results]) if results else np.empty((0, lmi.n))
        failures = sum(r[1] for r in results)
    return (pts, failures) if return_failures else pts


def estimate_diameter(lmi: LMI, seed=0, start=None, n_chords=None):
    """Longest of ``2n + 32`` random chords through ``start`` (default: origin)."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n = lmi.n
    start = np.zeros(n) if start is None else np.asarray(start, dtype=float)
    f = evaluate(lmi, start)
    n_chords = 2 * n + 32 if n_chords is None else n_chords
    best = 0.0
    for _ in range(n_chords):
        v = _unit(rng, n)
        hit = line_hit(f, lmi.direction_matrix(v), rcond_min=0.0)
        best = max(best, hit.t_plus - hit.t_minus)
    return best


def write_samples_csv(points, path_or_file):
    """CSV with header ``x1,...,xn``; values printed with 17 significant digits."""
    points = np.atleast_2d(points)
    n = points.shape[1]
    lines = [",".join(f"x{i + 1}" for i in range(n))]
    lines += [",".join(f"{v:.17g}" for v in row) for row in points]
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        with open(path_or_file, "w") as fh:
            fh.write(text)
