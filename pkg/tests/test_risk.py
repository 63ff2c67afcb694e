import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _oracles import (central_difference, infra_oracle, object_oracle, random_lines,
                      random_objects, relative_error)
from riskmpc.risk import (MAX_GRID_CELLS, InfraRiskParams, LaneLine, ObjectRiskParams,
                          ObjectState, infra_risk, infra_risk_grad, object_risk,
                          object_risk_grad, sample_field)

HIGHWAY_INFRA = InfraRiskParams(100.0, 1.3)
CAR = ObjectRiskParams(1000.0, 20.0, 1.3)
# 2 * 100 * exp(-1.75^2 / (2 * 1.3^2)), 30-digit arithmetic
MIDLINE_TWO_LINES = 80.822248293371590417159021454


def test_on_single_line_equals_amplitude():
    assert infra_risk((12.0, 3.5), [LaneLine(3.5)], HIGHWAY_INFRA) == 100.0


def test_empty_line_set():
    assert infra_risk((0.0, 0.0), [], HIGHWAY_INFRA) == 0.0
    assert np.all(infra_risk_grad((0.0, 0.0), [], HIGHWAY_INFRA) == 0)


def test_midline_value():
    val = infra_risk((0.0, 1.75), [LaneLine(0.0), LaneLine(3.5)], HIGHWAY_INFRA)
    assert val == pytest.approx(MIDLINE_TWO_LINES, rel=1e-9)


def test_midline_is_interior_argmin_mm_scan():
    lines = [LaneLine(0.0), LaneLine(3.5)]
    ys = np.arange(0.001, 3.5, 0.001)
    vals = [infra_risk((0.0, float(y)), lines, HIGHWAY_INFRA) for y in ys]
    assert ys[int(np.argmin(vals))] == pytest.approx(1.75, abs=1e-3)


def test_per_line_amplitude_override():
    lines = [LaneLine(0.0, amplitude=300.0)]
    assert infra_risk((4.0, 0.0), lines, HIGHWAY_INFRA) == 300.0


def test_object_center_and_major_axis():
    o = [(ObjectState(10.0, 2.0, 0.0), CAR)]
    assert object_risk((10.0, 2.0), o) == 1000.0
    assert object_risk((30.0, 2.0), o) == pytest.approx(1000 * math.exp(-0.5), rel=1e-14)
    assert np.all(object_risk_grad((10.0, 2.0), o) == 0)


def test_rotation_equivariance_examples():
    rng = np.random.default_rng(7)
    for d in rng.uniform(-30, 30, 20):
        rotated = object_risk((float(d), 0.0), [(ObjectState(0, 0, math.pi / 2), CAR)])
        straight = object_risk((0.0, float(d)), [(ObjectState(0, 0, 0.0), CAR)])
        assert rotated == pytest.approx(straight, rel=1e-12, abs=1e-300)


def test_midline_gradient_lateral_zero():
    g = infra_risk_grad((5.0, 1.75), [LaneLine(0.0), LaneLine(3.5)], HIGHWAY_INFRA)
    assert g[1] == pytest.approx(0.0, abs=1e-12)


def test_values_match_independent_oracle():
    rng = np.random.default_rng(11)
    for _ in range(100):
        pos = (float(rng.uniform(-50, 50)), float(rng.uniform(-2, 12)))
        lines = random_lines(rng)
        objs = random_objects(rng, pos)
        p = InfraRiskParams(float(rng.uniform(1, 300)), float(rng.uniform(0.5, 3)))
        assert infra_risk(pos, lines, p) == pytest.approx(
            infra_oracle(*pos, lines, p.amplitude_AI, p.sigma), rel=1e-12)
        assert object_risk(pos, objs) == pytest.approx(object_oracle(*pos, objs), rel=1e-10, abs=1e-250)


def _grad_cases(seed, n=100):
    rng = np.random.default_rng(seed)
    for _ in range(n):
        pos = np.array([rng.uniform(-50, 50), rng.uniform(-1, 11)])
        yield pos, random_lines(rng), random_objects(rng, pos), \
            InfraRiskParams(float(rng.uniform(1, 300)), float(rng.uniform(0.5, 3)))


def test_infra_gradient_finite_differences():
    worst = 0.0
    for pos, lines, _, p in _grad_cases(1):
        num = central_difference(lambda q: infra_risk(q, lines, p), pos, 1e-5)
        worst = max(worst, relative_error(infra_risk_grad(pos, lines, p), num))
    assert worst <= 1e-5


def test_object_gradient_finite_differences():
    worst = 0.0
    for pos, _, objs, _ in _grad_cases(2):
        num = central_difference(lambda q: object_risk(q, objs), pos, 1e-5)
        worst = max(worst, relative_error(object_risk_grad(pos, objs), num))
    assert worst <= 1e-5


coord = st.floats(-100, 100, allow_nan=False)


@settings(max_examples=80, deadline=None)
@given(coord, coord, st.lists(st.floats(-10, 20), max_size=5))
def test_infra_bounds(x, y, offsets):
    lines = [LaneLine(c) for c in offsets]
    val = infra_risk((x, y), lines, HIGHWAY_INFRA)
    assert 0.0 <= val <= len(lines) * 100.0 + 1e-9


@settings(max_examples=80, deadline=None)
@given(st.floats(-5, 5), st.floats(-20, 20))
def test_single_line_lateral_symmetry(d, c0):
    line = [LaneLine(c0)]
    assert infra_risk((0.0, c0 + d), line, HIGHWAY_INFRA) == pytest.approx(
        infra_risk((0.0, c0 - d), line, HIGHWAY_INFRA), rel=1e-12, abs=1e-300)


@settings(max_examples=60, deadline=None)
@given(coord, coord, st.lists(st.tuples(coord, coord, st.floats(-3.2, 3.2)), min_size=1, max_size=4))
def test_object_additivity_and_bounds(x, y, objs):
    pairs = [(ObjectState(a, b, t), CAR) for a, b, t in objs]
    total = object_risk((x, y), pairs)
    assert total == pytest.approx(sum(object_risk((x, y), [p]) for p in pairs), rel=1e-12, abs=1e-300)
    assert 0.0 <= total <= 1000.0 * len(pairs) + 1e-9


@settings(max_examples=80, deadline=None)
@given(st.floats(-40, 40), st.floats(-40, 40), st.floats(-math.pi, math.pi))
def test_rotation_equivariance(dx, dy, th):
    rotated = object_risk((dx, dy), [(ObjectState(0, 0, th), CAR)])
    c, s = math.cos(-th), math.sin(-th)
    local = (c * dx - s * dy, s * dx + c * dy)
    assert rotated == pytest.approx(object_risk(local, [(ObjectState(0, 0, 0), CAR)]),
                                    rel=1e-9, abs=1e-200)


def test_field_empty_is_zero():
    g = sample_field((0, 10, 0, 5), 0.5, [], [], HIGHWAY_INFRA)
    assert g.values.shape == (10, 20)
    assert not g.values.any()


def test_field_max_at_object_cell():
    g = sample_field((0, 40, -5, 5), 0.5, [], [(ObjectState(17.3, 1.1, 0.0), CAR)], HIGHWAY_INFRA)
    j, i = np.unravel_index(np.argmax(g.values), g.values.shape)
    xs, ys = g.centers()
    assert abs(xs[i] - 17.3) <= 0.25 and abs(ys[j] - 1.1) <= 0.25


def test_field_matches_pointwise_evaluation():
    rng = np.random.default_rng(3)
    lines = [LaneLine(0), LaneLine(3.5), LaneLine(7, 0.01)]
    objs = [(ObjectState(30, 2, 0.2), CAR), (ObjectState(60, 5, 0), ObjectRiskParams(500, 10, 2))]
    g = sample_field((0, 100, -1, 9), 0.25, lines, objs, HIGHWAY_INFRA)
    xs, ys = g.centers()
    for _ in range(10):
        i, j = int(rng.integers(g.nx)), int(rng.integers(g.ny))
        x, y = float(xs[i]), float(ys[j])
        expect = infra_oracle(x, y, lines, 100.0, 1.3) + object_oracle(x, y, objs)
        assert g.values[j, i] == pytest.approx(expect, rel=1e-10)


def test_field_rejects_bad_regions():
    with pytest.raises(ValueError, match="limit"):
        sample_field((0, 1e4, 0, 1e4), 1.0, [], [], HIGHWAY_INFRA)
    assert 1e4 * 1e4 > MAX_GRID_CELLS
    with pytest.raises(ValueError, match="degenerate"):
        sample_field((0, 0, 0, 1), 0.1, [], [], HIGHWAY_INFRA)
    with pytest.raises(ValueError, match="resolution"):
        sample_field((0, 1, 0, 1), 0.0, [], [], HIGHWAY_INFRA)


def test_param_validation():
    with pytest.raises(ValueError):
        InfraRiskParams(-1, 1)
    with pytest.raises(ValueError):
        InfraRiskParams(1, 0)
    with pytest.raises(ValueError):
        ObjectRiskParams(1, 0, 1)
    with pytest.raises(ValueError):
        LaneLine(math.nan)
