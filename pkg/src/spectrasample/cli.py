"""Command line front end.

Every command writes its main output (CSV or JSON) to ``--out`` or stdout,
plus a run manifest to ``<out>.manifest.json`` (stderr without ``--out``).
Exit codes: 0 ok, 1 usage, 2 precondition, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import re
import secrets
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, example2d
from .apps import AnnealConfig, IndicatorSpec, expectation, sdp_minimize
from .lmi import (
    LmiFormatError,
    canonical_ball,
    canonical_cube,
    dumps_lmi,
    generate_random,
    loads_lmi,
)
from .pep import SolverFailure
from .trajectory import PreconditionError, ReflectionError, UnboundedDirectionError
from .volume import ScheduleError, UnboundedBodyError, VolumeConfig, estimate_volume
from .walks import WalkerConfig, WalkKind, sample, write_samples_csv

EXIT_USAGE, EXIT_PRECONDITION, EXIT_RUNTIME = 1, 2, 3
WALKS = [k.value for k in WalkKind]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunManifest:
    command: str
    params: dict
    seed: int | None
    input_sha256: str | None
    version: str = __version__
    extra: dict = field(default_factory=dict)

    def to_json(self):
        return json.dumps(self.__dict__, sort_keys=True, indent=2) + "\n"


# -- argument types ----------------------------------------------------------


def _int_at_least(lo):
    def conv(text):
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
        if v < lo:
            raise argparse.ArgumentTypeError(f"must be >= {lo}, got {v}")
        return v
    return conv


def _float_in(lo=None, hi=None, open_lo=True):
    def conv(text):
        try:
            v = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
        if not np.isfinite(v):
            raise argparse.ArgumentTypeError(f"must be finite, got {text}")
        if lo is not None and (v <= lo if open_lo else v < lo):
            raise argparse.ArgumentTypeError(f"must be > {lo}, got {v}")
        if hi is not None and v >= hi:
            raise argparse.ArgumentTypeError(f"must be < {hi}, got {v}")
        return v
    return conv


def _finite(text):
    return _float_in()(text)


def _vector(text):
    """``1,0,-2`` or ``e3`` (third unit vector; dimension filled in later)."""
    m = re.fullmatch(r"e(\d+)", text.strip())
    if m:
        k = int(m.group(1))
        if k < 1:
            raise argparse.ArgumentTypeError("unit vector index starts at 1")
        return ("unit", k)
    try:
        vals = [float(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers or eK, got {text!r}")
    if not all(np.isfinite(vals)):
        raise argparse.ArgumentTypeError("vector entries must be finite")
    return np.array(vals)


def _resolve_vector(spec, n, name):
    if spec is None:
        return None
    if isinstance(spec, tuple):
        k = spec[1]
        if k > n:
            raise UsageError(f"--{name} e{k} exceeds the dimension n = {n}")
        v = np.zeros(n)
        v[k - 1] = 1.0
        return v
    if spec.shape != (n,):
        raise UsageError(f"--{name} has {spec.size} entries, the LMI has n = {n}")
    return spec


_BUILTIN = re.compile(r"(cube|ball)(\d+)")


def load_lmi_arg(text):
    """Builtin body name (``cube5``, ``ball3``, ``example2d``) or a JSON file path.

    Returns ``(lmi, sha256 of the canonical or raw input text)``.
    """
    m = _BUILTIN.fullmatch(text)
    if m:
        n = int(m.group(2))
        if n < 1:
            raise UsageError(f"builtin {text}: dimension must be >= 1")
        lmi = canonical_cube(n) if m.group(1) == "cube" else canonical_ball(n)
        raw = dumps_lmi(lmi)
    elif text == "example2d":
        lmi = example2d()
        raw = dumps_lmi(lmi)
    else:
        path = Path(text)
        try:
            raw = path.read_text()
        except OSError as exc:
            raise PreconditionError(f"cannot read LMI file {text}: {exc.strerror}") from exc
        lmi = loads_lmi(raw)
    return lmi, hashlib.sha256(raw.encode()).hexdigest()


# -- commands ----------------------------------------------------------------


def _emit(args, text, manifest: RunManifest):
    if args.out:
        Path(args.out).write_text(text)
        Path(args.out + ".manifest.json").write_text(manifest.to_json())
        print(f"seed: {manifest.seed}", file=sys.stderr)
    else:
        sys.stdout.write(text)
        sys.stderr.write(manifest.to_json())


def _params(args):
    out = {}
    for k, v in sorted(vars(args).items()):
        # where the output goes does not change it
        if k in ("func", "out"):
            continue
        if isinstance(v, np.ndarray):
            v = v.tolist()
        elif isinstance(v, tuple):
            v = f"e{v[1]}"
        out[k] = v
    return out


def cmd_generate(args):
    lmi = generate_random(args.n, args.m, args.seed)
    text = dumps_lmi(lmi)
    _emit(args, text, RunManifest("generate", _params(args), args.seed, None))


def _walker_config(args, lmi, objective=None, temperature=None):
    return WalkerConfig(
        walk=args.walk,
        walk_length=args.walk_length,
        burn_in=args.burn_in,
        rho=args.rho,
        tau=args.tau,
        seed=args.seed,
        temperature=temperature,
        objective=objective,
    )


def cmd_sample(args):
    lmi, digest = load_lmi_arg(args.lmi)
    c = _resolve_vector(args.c, lmi.n, "c")
    temp = args.temperature
    if args.walk == WalkKind.HMCR.value and temp is None:
        temp = 1.0
    if c is not None and temp is None:
        raise UsageError("--c needs --temperature for the hit-and-run and billiard walks")
    cfg = _walker_config(args, lmi, c, temp)
    start = _resolve_vector(args.start, lmi.n, "start")
    pts, failures = sample(lmi, cfg, start, args.N, chains=args.chains, return_failures=True)
    steps = cfg.burn_in + args.N * cfg.default_walk_length(lmi.n)
    if args.N and failures >= steps:
        raise RuntimeError(f"every one of the {steps} steps failed; the chain never moved")
    buf = io.StringIO()
    write_samples_csv(pts.reshape(-1, lmi.n), buf)
    _emit(args, buf.getvalue(),
          RunManifest("sample", _params(args), args.seed, digest, extra={"failures": failures}))


def cmd_volume(args):
    lmi, digest = load_lmi_arg(args.lmi)
    cfg = VolumeConfig(error=args.error, walk=args.walk, seed=args.seed,
                       walk_length=args.walk_length, burn_in=args.burn_in, chains=args.chains)
    report = estimate_volume(lmi, cfg)
    _emit(args, report.to_json() + "\n", RunManifest("volume", _params(args), args.seed, digest))


def cmd_estimate(args):
    lmi, digest = load_lmi_arg(args.lmi)
    c = _resolve_vector(args.c, lmi.n, "c")
    b2 = np.inf if args.b2 is None else args.b2
    try:
        f = IndicatorSpec(c, args.b1, b2)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    cfg = _walker_config(args, lmi)
    est, err = expectation(lmi, f, cfg, args.N, chains=args.chains)
    text = json.dumps({"estimate": est, "stderr": err, "N": args.N, "seed": args.seed},
                      sort_keys=True) + "\n"
    _emit(args, text, RunManifest("estimate", _params(args), args.seed, digest))


def cmd_sdp(args):
    lmi, digest = load_lmi_arg(args.lmi)
    c = _resolve_vector(args.c, lmi.n, "c")
    if args.chains != 1:
        raise UsageError("sdp runs a single annealing chain; --chains must be 1")
    cfg = AnnealConfig(
        eps_rel=args.eps,
        walk=args.walk,
        walk_length=args.walk_length,
        seed=args.seed,
        t0=args.T0,
        rho=args.rho,
        tau=args.tau,
        iterations=args.iterations,
        known_optimum=args.known_optimum,
    )
    report = sdp_minimize(lmi, c, cfg)
    _emit(args, report.to_json() + "\n", RunManifest("sdp", _params(args), args.seed, digest))


# -- parser ------------------------------------------------------------------


def build_parser():
    p = _Parser(prog="spectrasample", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, out_help):
        sp.add_argument("--seed", type=_int_at_least(0), default=None,
                        help="RNG seed (default: drawn from OS entropy and echoed)")
        sp.add_argument("--out", default=None, help=out_help)

    def lmi_arg(sp):
        sp.add_argument("lmi", help="LMI JSON file or builtin: cubeN, ballN, example2d")

    def walk_args(sp, default, choices=WALKS):
        sp.add_argument("--walk", choices=choices, default=default,
                        help=f"random walk (default {default})")
        sp.add_argument("--walk-length", type=_int_at_least(1), default=None,
                        help="steps per emitted point (default 1 for billiard/hmcr, "
                             "ceil(4 sqrt n) for hnr/chnr)")
        sp.add_argument("--burn-in", type=_int_at_least(0), default=0,
                        help="steps discarded before the first point (default 0)")
        sp.add_argument("--rho", type=_int_at_least(1), default=None,
                        help="max reflections per flight (default 10 n)")
        sp.add_argument("--tau", type=_float_in(0.0), default=None,
                        help="flight length scale (default: estimated diameter)")

    sp = sub.add_parser("generate", help="write a random LMI")
    sp.add_argument("--n", type=_int_at_least(1), required=True, help="number of variables")
    sp.add_argument("--m", type=_int_at_least(2), required=True, help="matrix size (even)")
    common(sp, "output JSON file (default stdout)")
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("sample", help="draw points with a random walk (CSV)")
    lmi_arg(sp)
    sp.add_argument("--N", type=_int_at_least(0), required=True, help="number of points")
    walk_args(sp, "billiard")
    sp.add_argument("--chains", type=_int_at_least(1), default=1)
    sp.add_argument("--start", type=_vector, default=None, help="interior start point (default origin)")
    sp.add_argument("--c", type=_vector, default=None, help="Boltzmann objective (hmcr, or hnr/chnr)")
    sp.add_argument("--temperature", type=_float_in(0.0), default=None,
                    help="Boltzmann temperature (default 1 for hmcr)")
    common(sp, "output CSV file (default stdout)")
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("volume", help="multiphase Monte Carlo volume (JSON)")
    lmi_arg(sp)
    sp.add_argument("--error", type=_float_in(0.0, 1.0), default=0.1, help="target relative error (default 0.1)")
    sp.add_argument("--walk", choices=["billiard", "hnr", "chnr"], default="billiard")
    sp.add_argument("--walk-length", type=_int_at_least(1), default=None)
    sp.add_argument("--burn-in", type=_int_at_least(0), default=100, help="per phase (default 100)")
    sp.add_argument("--chains", type=_int_at_least(1), default=1)
    common(sp, "output JSON file (default stdout)")
    sp.set_defaults(func=cmd_volume)

    sp = sub.add_parser("estimate", help="mean of a half-space or band indicator (JSON)")
    lmi_arg(sp)
    sp.add_argument("--c", type=_vector, required=True, help="normal vector, e.g. 1,0 or e1")
    sp.add_argument("--b1", type=_finite, required=True, help="f = 1 where <c,x> <= b1")
    sp.add_argument("--b2", type=_finite, default=None, help="... or <c,x> >= b2 (default: none)")
    sp.add_argument("--N", type=_int_at_least(1), required=True)
    walk_args(sp, "billiard", choices=["billiard", "hnr", "chnr"])
    sp.add_argument("--chains", type=_int_at_least(1), default=1)
    common(sp, "output JSON file (default stdout)")
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("sdp", help="minimize <c, x> over S by annealing (JSON)")
    lmi_arg(sp)
    sp.add_argument("--c", type=_vector, required=True, help="objective, e.g. 1,0,0 or e1")
    sp.add_argument("--eps", type=_float_in(0.0, 1.0), default=0.01,
                    help="relative stopping temperature T_stop = eps T0 / n (default 0.01)")
    sp.add_argument("--walk", choices=["hmcr", "hnr"], default="hmcr")
    sp.add_argument("--walk-length", type=_int_at_least(1), default=None,
                    help="steps per temperature (default 1 for hmcr, ceil(4 sqrt n) for hnr)")
    sp.add_argument("--rho", type=_int_at_least(1), default=None)
    sp.add_argument("--tau", type=_float_in(0.0), default=None)
    sp.add_argument("--T0", type=_float_in(0.0), default=None,
                    help="initial temperature (default ||c|| times the estimated diameter)")
    sp.add_argument("--iterations", type=_int_at_least(1), default=None,
                    help="run exactly this many temperatures")
    sp.add_argument("--known-optimum", type=_finite, default=None,
                    help="stop once the best value is within 0.05 of this")
    sp.add_argument("--chains", type=_int_at_least(1), default=1,
                    help="annealing is one sequential chain; only 1 is accepted")
    common(sp, "output JSON file (default stdout)")
    sp.set_defaults(func=cmd_sdp)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "seed", 0) is None:
        args.seed = secrets.randbits(32)
    try:
        args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"spectrasample: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PreconditionError, LmiFormatError) as exc:
        print(f"spectrasample: precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (UnboundedBodyError, ScheduleError, SolverFailure, UnboundedDirectionError,
            ReflectionError, RuntimeError, ArithmeticError) as exc:
        print(f"spectrasample: failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except ValueError as exc:
        print(f"spectrasample: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
