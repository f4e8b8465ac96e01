import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spectrasample.lmi import (
    LMI,
    DegenerateNormalError,
    LmiFormatError,
    Status,
    boundary_normal,
    canonical_ball,
    canonical_cube,
    contains,
    dumps_lmi,
    evaluate,
    generate_random,
    loads_lmi,
    membership,
    min_eigenvalue,
    read_lmi,
    write_lmi,
)

from oracles import fd_det_gradient


def test_shape_and_readonly():
    lmi = canonical_cube(3)
    assert (lmi.n, lmi.m) == (3, 6)
    with pytest.raises(ValueError):
        lmi.mats[0, 0, 0] = 5.0


def test_bad_stack_shape():
    with pytest.raises(ValueError):
        LMI(np.zeros((1, 2, 2)))
    with pytest.raises(ValueError):
        LMI(np.zeros((2, 2, 3)))


def test_cube_membership():
    lmi = canonical_cube(2)
    assert membership(lmi, [0.0, 0.0]).status is Status.INTERIOR
    assert membership(lmi, [1.0, 0.3]).status is Status.BOUNDARY
    assert membership(lmi, [1.2, 0.0]).status is Status.EXTERIOR
    assert membership(lmi, [1.0, 0.3]).inside


def test_ball_membership():
    lmi = canonical_ball(3, radius=2.0)
    assert membership(lmi, [1.0, 1.0, 1.0]).status is Status.INTERIOR
    assert membership(lmi, [2.0, 0.0, 0.0]).status is Status.BOUNDARY
    assert membership(lmi, [1.5, 1.5, 0.0]).status is Status.EXTERIOR


def test_eps_band_is_relative():
    lmi = canonical_cube(1, half_width=1e6)
    # 1e-5 outside, inside a band of 1e-10 * 1e6 = 1e-4
    assert membership(lmi, [1e6 + 1e-5]).status is Status.BOUNDARY
    assert membership(lmi, [1e6 + 1e-5], eps_psd=0.0).status is Status.EXTERIOR


def test_negative_eps_rejected():
    with pytest.raises(ValueError):
        membership(canonical_cube(1), [0.0], eps_psd=-1.0)


def test_point_dimension_checked():
    with pytest.raises(ValueError):
        membership(canonical_cube(2), [0.0, 0.0, 0.0])


def test_sparse_eigen_path_agrees_with_dense(rng):
    z = rng.standard_normal((80, 80))
    a = z @ z.T - 3.0 * np.eye(80)
    assert min_eigenvalue(a) == pytest.approx(np.linalg.eigvalsh(a)[0], abs=1e-8)


def test_contains_batch_matches_membership(rng):
    lmi = generate_random(3, 6, seed=4)
    pts = rng.uniform(-1.5, 1.5, size=(200, 3))
    batch = contains(lmi, pts)
    single = np.array([membership(lmi, p).inside for p in pts])
    assert np.array_equal(batch, single)


@given(st.integers(1, 6), st.integers(1, 5), st.integers(0, 2**31))
def test_generated_origin_interior(n, half_m, seed):
    lmi = generate_random(n, 2 * half_m, seed)
    assert np.linalg.eigvalsh(lmi.a0)[0] >= 1.0 - 1e-12
    assert membership(lmi, np.zeros(n)).status is Status.INTERIOR
    for a in lmi.coeffs:
        assert np.trace(a) == pytest.approx(0.0, abs=1e-12)


def test_generator_deterministic_and_checks_m():
    assert generate_random(3, 4, 7) == generate_random(3, 4, 7)
    assert generate_random(3, 4, 7) != generate_random(3, 4, 8)
    with pytest.raises(ValueError):
        generate_random(2, 3, 0)


def test_generated_body_bounded():
    # the block structure diag(Q, -Q) makes every line leave S both ways
    from spectrasample.trajectory import PolyCurve, intersection

    lmi = generate_random(4, 6, seed=1)
    rng = np.random.default_rng(0)
    for _ in range(20):
        v = rng.standard_normal(4)
        hit = intersection(lmi, PolyCurve.line(np.zeros(4), v))
        assert np.isfinite(hit.t_minus) and np.isfinite(hit.t_plus)


@given(st.integers(1, 4), st.integers(2, 6).filter(lambda m: m % 2 == 0), st.integers(0, 10**6))
def test_json_round_trip(n, m, seed):
    lmi = generate_random(n, m, seed)
    text = dumps_lmi(lmi)
    back = loads_lmi(text)
    assert back == lmi
    assert dumps_lmi(back) == text


def test_file_round_trip(tmp_path):
    lmi = canonical_ball(2)
    path = tmp_path / "b.json"
    write_lmi(lmi, path)
    assert read_lmi(path) == lmi


def _doc(**kw):
    base = {"n": 1, "m": 2, "matrices": [[[1, 0], [0, 1]], [[1, 0], [0, -1]]]}
    base.update(kw)
    return json.dumps(base)


@pytest.mark.parametrize(
    "text, index",
    [
        ("{not json", None),
        ("[1, 2]", None),
        (json.dumps({"n": 1, "m": 2}), None),
        (_doc(n=0), None),
        (_doc(n=2), None),
        (_doc(matrices=[[[1, 0], [0, 1]], [[1, 2], [0, -1]]]), 1),
        (_doc(matrices=[[[1, 0], [0, 1]], [[1, 0, 0], [0, -1, 0]]]), 1),
        (_doc(matrices=[[[1, 0], [0, "x"]], [[1, 0], [0, -1]]]), 0),
    ],
)
def test_malformed_files(text, index):
    with pytest.raises(LmiFormatError) as err:
        loads_lmi(text)
    assert err.value.index == index
    if index is not None:
        assert str(err.value).startswith(f"matrix {index}:")


def test_nonfinite_rejected():
    text = '{"n": 1, "m": 1, "matrices": [[[1.0]], [[NaN]]]}'
    with pytest.raises(LmiFormatError, match="non-finite"):
        loads_lmi(text)


def test_evaluate_is_symmetric(rng):
    lmi = generate_random(3, 6, seed=2)
    f = evaluate(lmi, rng.standard_normal(3))
    assert np.array_equal(f, f.T)


def _boundary_point(lmi, rng):
    from spectrasample.trajectory import PolyCurve, intersection

    v = rng.standard_normal(lmi.n)
    hit = intersection(lmi, PolyCurve.line(np.zeros(lmi.n), v))
    return hit.t_plus * v, hit.kernel_plus


@pytest.mark.parametrize("maker", [canonical_ball, lambda n: canonical_cube(n, 1.5)])
def test_normal_matches_det_gradient(maker, rng):
    for n in (2, 3, 5):
        lmi = maker(n)
        for _ in range(5):
            x, k = _boundary_point(lmi, rng)
            w = boundary_normal(lmi, k)
            g = fd_det_gradient(lmi, x)
            cos = abs(w @ g) / np.linalg.norm(g)
            assert cos > 1 - 1e-8


def test_normal_scale_free(rng):
    lmi = generate_random(3, 4, seed=3)
    x, k = _boundary_point(lmi, rng)
    assert np.allclose(boundary_normal(lmi, k), boundary_normal(lmi, 1e-6 * k))


def test_degenerate_normal():
    # kernel vector annihilated by every A_i
    mats = np.zeros((3, 3, 3))
    mats[0] = np.diag([1.0, 1.0, 0.0])
    mats[1, 0, 0] = 1.0
    mats[2, 1, 1] = 1.0
    with pytest.raises(DegenerateNormalError):
        boundary_normal(LMI(mats), np.array([0.0, 0.0, 1.0]))
    with pytest.raises(DegenerateNormalError):
        boundary_normal(LMI(mats), np.zeros(3))
