import math

import numpy as np
import pytest

from spectrasample.apps import (
    AnnealConfig,
    IndicatorSpec,
    cooling_factor,
    expectation,
    iteration_budget,
    sdp_minimize,
)
from spectrasample.lmi import canonical_ball, canonical_cube, contains
from spectrasample.walks import WalkerConfig

from oracles import disc_band_outside_fraction


def test_indicator_semantics():
    f = IndicatorSpec([1.0, 0.0], -0.5, 0.5)
    pts = np.array([[-0.6, 0.0], [0.0, 9.0], [0.5, 0.0]])
    assert f(pts).tolist() == [1.0, 0.0, 1.0]
    assert f(np.array([0.0, 0.0])) == 0.0
    with pytest.raises(ValueError):
        IndicatorSpec([1.0], 1.0, 1.0)


def test_constant_function_exact():
    est, err = expectation(canonical_cube(2), lambda x: 1.0, WalkerConfig(seed=0), 50)
    assert est == 1.0 and err == 0.0


def test_function_range_checked():
    with pytest.raises(ValueError):
        expectation(canonical_cube(2), lambda x: 2.0, WalkerConfig(seed=0), 5)
    with pytest.raises(ValueError):
        expectation(canonical_cube(2), lambda x: 1.0, WalkerConfig(seed=0), 0)


def test_indicator_estimate_in_unit_interval():
    f = IndicatorSpec([1.0, 1.0], 0.0)
    est, err = expectation(canonical_ball(2), f, WalkerConfig(seed=1), 300)
    assert 0 <= est <= 1 and err > 0


@pytest.mark.slow
def test_band_indicator_on_disc():
    f = IndicatorSpec([1.0, 0.0], -0.5, 0.5)
    est, _ = expectation(canonical_ball(2), f, WalkerConfig(seed=3), 4000)
    assert est == pytest.approx(disc_band_outside_fraction(0.5), abs=0.03)


def test_cooling_and_budget():
    assert cooling_factor(1) == 0.5
    assert cooling_factor(4) == 0.5
    assert cooling_factor(9) == pytest.approx(2 / 3)
    assert iteration_budget(4, 100.0, 1.0) == math.ceil(8 * math.log(100.0))


def test_zero_objective_returns_start():
    rep = sdp_minimize(canonical_cube(3), np.zeros(3), start=[0.1, 0.2, 0.3])
    assert rep.converged and rep.iterations == 0
    assert np.array_equal(rep.best_point, [0.1, 0.2, 0.3])


def test_anneal_config_validation():
    for kw in ({"walk": "billiard"}, {"eps_rel": 0.0}, {"t0": -1.0}, {"iterations": 0}):
        with pytest.raises(ValueError):
            AnnealConfig(**kw)


@pytest.mark.parametrize("walk", ["hmcr", "hnr"])
def test_anneal_report_properties(walk):
    lmi = canonical_ball(3)
    c = np.array([0.0, 0.0, 1.0])
    rep = sdp_minimize(lmi, c, AnnealConfig(walk=walk, seed=2))
    assert rep.best_value == pytest.approx(c @ rep.best_point)
    assert np.all(np.diff(rep.temperatures) < 0)
    assert np.all(np.diff(rep.history) <= 0)
    assert rep.iterations <= rep.budget
    assert contains(lmi, rep.best_point)[0]
    assert rep.best_value == pytest.approx(-1.0, abs=0.05)


def test_fixed_iteration_protocol():
    rep = sdp_minimize(canonical_cube(2), np.array([1.0, 1.0]), AnnealConfig(iterations=70, seed=0))
    assert rep.iterations == 70 and rep.stop_reason == "budget"


def test_known_optimum_protocol():
    rep = sdp_minimize(canonical_cube(2), np.array([1.0, 0.0]),
                       AnnealConfig(known_optimum=-1.0, seed=0, walk="hnr"))
    assert rep.converged and rep.stop_reason == "known optimum"
    assert rep.best_value <= -0.95


@pytest.mark.parametrize("walk", ["hmcr", "hnr"])
def test_objective_scaling_invariance(walk):
    lmi = canonical_cube(3)
    c = np.array([1.0, -0.5, 0.25])
    base = sdp_minimize(lmi, c, AnnealConfig(walk=walk, seed=4, t0=2.0))
    # a power of two keeps c / T bit-identical
    scaled = sdp_minimize(lmi, 2 * c, AnnealConfig(walk=walk, seed=4, t0=4.0))
    assert np.allclose(base.best_point, scaled.best_point, atol=1e-9)
    assert scaled.best_value == pytest.approx(2 * base.best_value, abs=1e-9)
    assert np.allclose(2 * np.array(base.temperatures), scaled.temperatures)


def test_report_json_round_trip():
    import json

    rep = sdp_minimize(canonical_cube(2), np.array([1.0, 0.0]), AnnealConfig(seed=1, iterations=5))
    d = json.loads(rep.to_json())
    assert d["iterations"] == 5 and len(d["best_point"]) == 2
