import json
import math

import numpy as np
import pytest

from spectrasample.lmi import LMI, canonical_ball, canonical_cube, generate_random
from spectrasample.trajectory import PreconditionError
from spectrasample.volume import (
    UnboundedBodyError,
    VolumeConfig,
    ball_volume,
    build_schedule,
    estimate_volume,
    inner_radius,
)

from oracles import ball_volume as ball_volume_oracle


@pytest.mark.parametrize("n", [1, 2, 3, 7, 20])
def test_ball_volume_closed_form(n):
    assert ball_volume(n, 1.7) == pytest.approx(ball_volume_oracle(n, 1.7), rel=1e-12)


def test_config_validation():
    for kw in ({"error": 0.0}, {"error": 1.0}, {"walk": "hmcr"}, {"ratio_band": (0.5, 0.4)},
               {"chains": 0}):
        with pytest.raises(ValueError):
            VolumeConfig(**kw)


def test_points_per_phase_rule():
    c = VolumeConfig(error=0.1)
    assert c.points_per_phase(2) == 20000
    assert c.points_per_phase(100) == 1000
    assert c.points_per_phase(0) == 0


@pytest.mark.parametrize("lmi, expected", [
    (canonical_cube(3), 1.0),
    (canonical_cube(2, half_width=0.5), 0.5),
    (canonical_ball(4, radius=2.0), 2.0),
])
def test_inner_radius(lmi, expected):
    r = inner_radius(lmi, np.zeros(lmi.n), np.random.default_rng(0))
    assert r == pytest.approx(expected, rel=1e-9)


def test_inner_radius_off_center():
    r = inner_radius(canonical_cube(2), np.array([0.5, 0.0]), np.random.default_rng(0))
    assert r == pytest.approx(0.5, rel=1e-9)


def test_ball_needs_no_phases():
    rep = estimate_volume(canonical_ball(3), VolumeConfig(seed=2))
    assert rep.k == 0 and rep.ratios == []
    assert rep.volume == pytest.approx(4 * math.pi / 3, rel=1e-9)


def test_cube2_schedule_length_bounded():
    cfg = VolumeConfig(seed=0)
    sched = build_schedule(canonical_cube(2), cfg)
    bound = math.ceil(2 * math.log2(math.sqrt(2) * 1.1 / 1.0))
    assert 1 <= sched.k <= bound
    assert sched.inner_radius == pytest.approx(1.0)
    assert np.all(np.diff(sched.radii) < 0)


def test_center_must_be_interior():
    with pytest.raises(PreconditionError):
        build_schedule(canonical_cube(2), VolumeConfig(center=np.array([1.0, 0.0])))


def test_unbounded_body_reported():
    # half-plane x1 <= 1
    lmi = LMI(np.array([[[1.0]], [[-1.0]], [[0.0]]]))
    with pytest.raises(UnboundedBodyError):
        estimate_volume(lmi, VolumeConfig(seed=0))


def test_report_invariants_and_reproducibility():
    lmi = generate_random(2, 4, seed=3)
    cfg = VolumeConfig(seed=4, error=0.3)
    a = estimate_volume(lmi, cfg)
    b = estimate_volume(lmi, cfg)
    assert a.to_json() == b.to_json()
    assert all(0 < q <= 1 for q in a.ratios)
    base = ball_volume(2, a.inner_radius)
    assert a.volume == pytest.approx(base / np.prod(a.ratios), rel=1e-12)
    vols = a.phase_volumes()
    assert all(x >= y for x, y in zip(vols, vols[1:]))
    d = json.loads(a.to_json())
    assert {"volume", "k", "ratios", "samples", "seed"} <= set(d)


@pytest.mark.slow
@pytest.mark.parametrize("walk", ["hnr", "chnr"])
def test_other_walks_estimate_square(walk):
    rep = estimate_volume(canonical_cube(2), VolumeConfig(seed=1, walk=walk, error=0.2))
    assert rep.volume == pytest.approx(4.0, rel=0.1)


@pytest.mark.slow
@pytest.mark.parametrize("s", [0.5, 1.0, 2.0])
def test_cube_scaling_law(s):
    rep = estimate_volume(canonical_cube(3, half_width=s), VolumeConfig(seed=3))
    assert rep.volume == pytest.approx((2 * s) ** 3, rel=0.1)


@pytest.mark.slow
def test_accuracy_envelope_cube5():
    vols = [estimate_volume(canonical_cube(5), VolumeConfig(seed=s)).volume for s in range(10)]
    assert np.std(vols, ddof=1) <= 0.1 * 32
