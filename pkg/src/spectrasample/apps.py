"""Monte Carlo integration and simulated annealing on top of the walks."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .lmi import LMI, Status, membership
from .trajectory import PreconditionError, UnboundedDirectionError
from .walks import Walker, WalkerConfig, WalkKind, estimate_diameter, sample

__all__ = [
    "IndicatorSpec",
    "expectation",
    "AnnealConfig",
    "AnnealReport",
    "cooling_factor",
    "iteration_budget",
    "sdp_minimize",
]


@dataclass(frozen=True)
class IndicatorSpec:
    """``f(x) = 1`` if ``<c, x> <= b1`` or ``<c, x> >= b2``, else 0.

    The default ``b2 = inf`` gives the single half-space ``<c, x> <= b1``.
    """

    c: np.ndarray
    b1: float
    b2: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, "c", np.asarray(self.c, dtype=float))
        if not self.b2 > self.b1:
            raise ValueError(f"need b2 > b1, got b1={self.b1}, b2={self.b2}")

    def __call__(self, x):
        s = np.asarray(x, dtype=float) @ self.c
        return ((s <= self.b1) | (s >= self.b2)).astype(float)


def expectation(lmi: LMI, f, config: WalkerConfig, n_samples: int, start=None, chains=1):
    """Sample mean of ``f`` over ``n_samples`` walk points and its standard error.

    ``f`` maps a point to ``[0, 1]``. Callables that accept a ``(N, n)``
    batch (like :class:`IndicatorSpec`) are evaluated in one call.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    pts = sample(lmi, config, start, n_samples, chains=chains)
    if isinstance(f, IndicatorSpec):
        vals = f(pts)
    else:
        vals = np.array([float(f(x)) for x in pts])
    if np.any(vals < 0) or np.any(vals > 1) or not np.all(np.isfinite(vals)):
        raise ValueError("f must take values in [0, 1]")
    mean = float(vals.mean())
    err = float(vals.std(ddof=1) / math.sqrt(n_samples)) if n_samples > 1 else 0.0
    return mean, err


def cooling_factor(n: int) -> float:
    """``1 - 1/sqrt(n)``; for ``n = 1`` that is 0, so 0.5 is used instead."""
    return 0.5 if n == 1 else 1.0 - 1.0 / math.sqrt(n)


def iteration_budget(n: int, t0: float, t_stop: float, const: float = 4.0) -> int:
    return math.ceil(const * math.sqrt(n) * math.log(t0 / t_stop))


@dataclass
class AnnealConfig:
    """Annealing parameters.

    ``t0`` defaults to ``||c|| * diameter`` and ``t_stop`` to
    ``eps_rel * t0 / n``. ``iterations`` switches to a fixed-length run;
    ``known_optimum`` stops once ``|best - known| <= optimum_tol``.
    """

    eps_rel: float = 0.01
    walk: WalkKind = WalkKind.HMCR
    walk_length: int | None = None
    seed: int | None = 0
    t0: float | None = None
    budget_const: float = 4.0
    stall_window: int = 20
    retries: int = 3
    warmup: int | None = None
    rho: int | None = None
    tau: float | None = None
    iterations: int | None = None
    known_optimum: float | None = None
    optimum_tol: float = 0.05

    def __post_init__(self):
        self.walk = WalkKind(self.walk)
        if self.walk not in (WalkKind.HMCR, WalkKind.HNR):
            raise ValueError("annealing supports the hmcr and hnr walks")
        if not 0 < self.eps_rel < 1:
            raise ValueError("eps_rel must lie in (0, 1)")
        if self.t0 is not None and not self.t0 > 0:
            raise ValueError("t0 must be positive")
        if self.iterations is not None and self.iterations < 1:
            raise ValueError("iterations must be >= 1")


@dataclass
class AnnealReport:
    best_point: np.ndarray
    best_value: float
    temperatures: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    failures: int = 0
    history: list = field(default_factory=list)
    budget: int = 0
    t0: float = 0.0
    t_stop: float = 0.0
    stop_reason: str = ""
    seed: int | None = None

    def to_json(self) -> str:
        d = dict(self.__dict__)
        d["best_point"] = [float(v) for v in self.best_point]
        return json.dumps(d, sort_keys=True)


def sdp_minimize(lmi: LMI, c, config: AnnealConfig | None = None, start=None) -> AnnealReport:
    """Minimize ``<c, x>`` over ``S`` by sampling ``exp(-<c, x> / T)`` while cooling.

    Each temperature takes one walk sample (``walk_length`` steps) started
    from the previous one. Stops on the iteration budget
    ``ceil(C sqrt(n) ln(T0 / T_stop))``, on a stall of ``stall_window``
    temperatures, or on reaching ``known_optimum``.
    """
    config = AnnealConfig() if config is None else config
    n = lmi.n
    c = np.asarray(c, dtype=float)
    if c.shape != (n,):
        raise ValueError(f"objective has shape {c.shape}, expected ({n},)")
    start = np.zeros(n) if start is None else np.asarray(start, dtype=float)
    if membership(lmi, start).status is not Status.INTERIOR:
        raise PreconditionError("start point must be interior")
    cnorm = float(np.linalg.norm(c))
    if cnorm == 0:
        return AnnealReport(start.copy(), 0.0, converged=True, stop_reason="zero objective",
                            seed=config.seed)

    rng = np.random.default_rng(config.seed)
    if config.t0 is not None:
        t0 = config.t0
        tau = config.tau
    else:
        try:
            diam = estimate_diameter(lmi, seed=rng, start=start)
        except UnboundedDirectionError as exc:
            raise PreconditionError(f"S looks unbounded: {exc}") from exc
        t0 = cnorm * diam
        tau = diam if config.tau is None else config.tau
    t_stop = config.eps_rel * t0 / n
    budget = iteration_budget(n, t0, t_stop, config.budget_const)
    limit = budget if config.iterations is None else config.iterations
    factor = cooling_factor(n)

    warm = WalkerConfig(walk=WalkKind.BILLIARD, rho=config.rho, tau=tau)
    walker = Walker(lmi, warm, start, rng=rng)
    walker.run(config.warmup if config.warmup is not None else 2 * n + 10)

    # same chain, now targeting the Boltzmann density
    walker.config = WalkerConfig(walk=config.walk, walk_length=config.walk_length,
                                 rho=config.rho, tau=walker.tau, temperature=t0, objective=c)
    walker.walk_length = walker.config.default_walk_length(n)
    walker.objective = c

    best_point = walker.point.copy()
    best = float(c @ best_point)
    stall_tol = 1e-9 * t0
    temps, history = [], []
    failed = 0
    stale = 0
    converged = False
    reason = "budget"
    temp = t0
    for it in range(limit):
        walker.temperature = temp
        temps.append(temp)
        for _attempt in range(config.retries + 1):
            before = walker.state.failures
            walker.run(walker.walk_length)
            if walker.state.failures == before:
                break
        else:
            failed += 1
        value = float(c @ walker.point)
        if value < best - stall_tol:
            best, best_point = value, walker.point.copy()
            stale = 0
        else:
            stale += 1
        history.append(best)
        if config.known_optimum is not None:
            if abs(best - config.known_optimum) <= config.optimum_tol:
                converged, reason = True, "known optimum"
                break
        elif config.iterations is None and stale >= config.stall_window:
            converged, reason = True, "stall"
            break
        temp *= factor
    return AnnealReport(
        best_point=best_point,
        best_value=best,
        temperatures=temps,
        iterations=len(temps),
        converged=converged,
        failures=failed,
        history=history,
        budget=budget,
        t0=t0,
        t_stop=t_stop,
        stop_reason=reason,
        seed=config.seed,
    )
