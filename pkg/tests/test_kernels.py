import math

import numpy as np
import pytest

from fwsolver.grid import Grid, GridFunction, derivative
from fwsolver.kernels import (MonotonicityError, build_cumulative_flow,
                              convected_green_derivative, convected_helmholtz,
                              convected_pair, green_derivative, helmholtz_inverse)


def gf(half_width, n, fn):
    g = Grid(half_width, n)
    return GridFunction(g, fn(g.x))


def ones_like(f):
    return GridFunction(f.grid, np.ones(f.grid.n_points))


# ---------------------------------------------------------------------------
# cumulative flow
# ---------------------------------------------------------------------------

def test_cumulative_flow_unit_stretch():
    q = gf(10.0, 1001, lambda x: np.ones_like(x))
    lam = build_cumulative_flow(q)
    assert lam.values[0] == 0.0
    assert np.allclose(lam.values, q.grid.x + 10.0, atol=1e-12)
    assert np.all(np.diff(lam.values) > 0)


def test_cumulative_flow_constant_scaling():
    q = gf(10.0, 1001, lambda x: 2.0 * np.ones_like(x))
    lam = build_cumulative_flow(q)
    assert np.allclose(lam.values, 2.0 * (q.grid.x + 10.0), atol=1e-11)


def test_cumulative_flow_erf_antiderivative():
    # q = 1 + exp(-x^2)/2 integrates to x + X + (sqrt(pi)/4)(erf x + erf X)
    g = Grid(10.0, 2001)
    q = GridFunction(g, 1.0 + 0.5 * np.exp(-g.x ** 2))
    lam = build_cumulative_flow(q)
    erf = np.vectorize(math.erf)
    exact = g.x + 10.0 + (math.sqrt(math.pi) / 4.0) * (erf(g.x) + erf(10.0))
    assert np.max(np.abs(lam.values - exact)) <= 1e-5


def test_cumulative_flow_floor_guard_reports_index():
    g = Grid(5.0, 101)
    qv = np.ones(101)
    qv[37] = 0.05
    with pytest.raises(MonotonicityError) as exc:
        build_cumulative_flow(GridFunction(g, qv))
    assert exc.value.index == 37


# ---------------------------------------------------------------------------
# fixed-grid operators: closed forms
# ---------------------------------------------------------------------------

def test_helmholtz_zero():
    f = gf(10.0, 501, lambda x: 0.0 * x)
    assert np.all(helmholtz_inverse(f).values == 0.0)


def test_helmholtz_exponential_closed_form():
    f = gf(30.0, 3001, lambda x: np.exp(-np.abs(x)))
    exact = 0.5 * (1.0 + np.abs(f.grid.x)) * np.exp(-np.abs(f.grid.x))
    assert np.max(np.abs(helmholtz_inverse(f).values - exact)) <= 1e-10


def test_helmholtz_unit_mass():
    # kernel has unit mass; away from the ends the response to 1 is 1
    f = gf(30.0, 1501, lambda x: np.ones_like(x))
    center = helmholtz_inverse(f).values[750]
    assert abs(center - 1.0) <= 1e-12  # truncation ~ e^-30


def test_green_derivative_zero_and_symmetry():
    z = gf(10.0, 501, lambda x: 0.0 * x)
    assert np.all(green_derivative(z).values == 0.0)
    f = gf(20.0, 1601, lambda x: np.exp(-x ** 2))  # even data
    gd = green_derivative(f).values
    assert abs(gd[800]) <= 1e-14          # odd result vanishes at the center
    assert np.max(np.abs(gd + gd[::-1])) <= 1e-12


def test_green_derivative_exponential_closed_form():
    f = gf(30.0, 3001, lambda x: np.exp(-np.abs(x)))
    x = f.grid.x
    exact = -np.sign(x) * 0.5 * np.abs(x) * np.exp(-np.abs(x))
    assert np.max(np.abs(green_derivative(f).values - exact)) <= 1e-10


def test_second_derivative_identity():
    # d/dx of the odd integral recovers (smoothed - identity) to O(h^2)
    f = gf(20.0, 2001, lambda x: np.exp(-x ** 2))
    lhs = derivative(green_derivative(f)).values
    rhs = helmholtz_inverse(f).values - f.values
    assert np.max(np.abs(lhs - rhs)) <= 5e-4  # (h^2/6) sup|d^3 smoothed|


# ---------------------------------------------------------------------------
# flow-coordinate operators
# ---------------------------------------------------------------------------

def test_collapse_is_bitwise():
    f = gf(20.0, 1201, lambda x: np.exp(-x ** 2) * np.sin(x))
    ones = ones_like(f)
    odd, even = convected_pair(f, ones)
    assert np.array_equal(odd.values, green_derivative(f).values)
    assert np.array_equal(even.values, helmholtz_inverse(f).values)


def test_convected_zero_data():
    g = Grid(10.0, 301)
    w = GridFunction(g, np.zeros(301))
    q = GridFunction(g, 1.0 + 0.05 * np.sin(g.x))
    odd, even = convected_pair(w, q)
    assert np.all(odd.values == 0.0) and np.all(even.values == 0.0)


def test_convected_exponential_at_unit_stretch():
    w = gf(30.0, 3001, lambda x: np.exp(-np.abs(x)))
    x = w.grid.x
    odd = convected_green_derivative(w, ones_like(w))
    assert np.max(np.abs(odd.values + np.sign(x) * 0.5 * np.abs(x) * np.exp(-np.abs(x)))) <= 1e-10
    even = convected_helmholtz(w, ones_like(w))
    assert np.max(np.abs(even.values - 0.5 * (1 + np.abs(x)) * np.exp(-np.abs(x)))) <= 1e-10


def test_convected_constant_at_center():
    w = gf(30.0, 1501, lambda x: np.ones_like(x))
    even = convected_helmholtz(w, ones_like(w))
    assert abs(even.values[750] - 1.0) <= 1e-12


def test_fast_matches_direct_randomized():
    rng = np.random.default_rng(11)
    g = Grid(15.0, 901)
    x = g.x
    for _ in range(5):
        env = np.exp(-0.5 * (x / 6.0) ** 2)
        w = GridFunction(g, env * sum(c * np.cos((k + 1) * 0.5 * x + p)
                                      for k, (c, p) in enumerate(
                                          zip(rng.normal(size=4), rng.uniform(0, 6, 4)))))
        q = GridFunction(g, 1.0 + 0.1 * np.sin(rng.uniform(0.2, 0.8) * x + rng.uniform(0, 6)))
        fo, fe = convected_pair(w, q, method="fast")
        do, de = convected_pair(w, q, method="direct")
        for a, b in ((fo, do), (fe, de)):
            rel = np.max(np.abs(a.values - b.values)) / np.max(np.abs(b.values))
            assert rel <= 1e-10


def naive_quadrature_pair(w, q):
    """Fully independent oracle: plain trapezoid in physical coordinates of
    0.5 * exp(-|Lambda(z) - Lambda(x)|) * w * q over each half line."""
    g = w.grid
    h = g.h
    lam = np.concatenate([[0.0], np.cumsum(0.5 * h * (q.values[:-1] + q.values[1:]))])
    n = g.n_points
    odd = np.empty(n)
    even = np.empty(n)
    integrand = w.values * q.values
    for i in range(n):
        ker = np.exp(-np.abs(lam - lam[i])) * integrand
        right = np.trapezoid(ker[i:], dx=h)
        left = np.trapezoid(ker[:i + 1], dx=h)
        odd[i] = 0.5 * (right - left)
        even[i] = 0.5 * (right + left)
    return odd, even


def test_panel_model_against_naive_trapezoid():
    # different quadrature family entirely, so agreement is O(h^2), and the
    # gap must shrink ~4x when h is halved
    sup_gaps = []
    for n in (751, 1501):
        g = Grid(15.0, n)
        x = g.x
        w = GridFunction(g, 0.5 * np.exp(-x ** 2) * (1 + 0.3 * np.sin(2 * x)))
        q = GridFunction(g, 1.0 + 0.08 * np.cos(0.5 * x))
        fo, fe = convected_pair(w, q)
        no, ne = naive_quadrature_pair(w, q)
        sup_gaps.append(max(np.max(np.abs(fo.values - no)), np.max(np.abs(fe.values - ne))))
    assert sup_gaps[0] <= 5e-4
    assert sup_gaps[0] / sup_gaps[1] >= 3.0


def test_even_integral_bounded_by_data():
    rng = np.random.default_rng(3)
    g = Grid(20.0, 801)
    for _ in range(5):
        w = GridFunction(g, np.exp(-0.1 * g.x ** 2) * rng.normal(size=801))
        q = GridFunction(g, 1.0 + 0.1 * np.tanh(rng.normal() * g.x))
        even = convected_helmholtz(w, q)
        bound = (np.max(np.abs(w.values)) * np.max(q.values) / np.min(q.values))
        assert np.max(np.abs(even.values)) <= bound * (1 + 1e-9)


def test_symmetry_even_data_even_stretch():
    g = Grid(20.0, 1601)
    w = GridFunction(g, np.exp(-g.x ** 2))
    q = GridFunction(g, 1.0 + 0.05 * np.exp(-0.5 * g.x ** 2))
    odd, even = convected_pair(w, q)
    assert np.max(np.abs(odd.values + odd.values[::-1])) <= 1e-12
    assert np.max(np.abs(even.values - even.values[::-1])) <= 1e-12


def test_coarse_grid_stability():
    # huge cell sizes must degrade gracefully, not overflow
    g = Grid(50.0, 21)
    w = GridFunction(g, np.exp(-0.01 * g.x ** 2))
    q = GridFunction(g, np.ones(21))
    fo, fe = convected_pair(w, q, method="fast")
    do, de = convected_pair(w, q, method="direct")
    assert np.all(np.isfinite(fo.values)) and np.all(np.isfinite(fe.values))
    assert np.max(np.abs(fe.values - de.values)) <= 1e-10 * np.max(np.abs(de.values))


def test_floor_guard_propagates():
    g = Grid(5.0, 101)
    w = GridFunction(g, np.exp(-g.x ** 2))
    qv = np.ones(101)
    qv[3] = 0.01
    with pytest.raises(MonotonicityError):
        convected_pair(w, GridFunction(g, qv))


def test_unknown_method_rejected():
    f = gf(5.0, 101, np.cos)
    with pytest.raises(ValueError):
        convected_pair(f, ones_like(f), method="magic")


def test_debug_flag_dumps_both_routes(tmp_path, monkeypatch):
    monkeypatch.setenv("FW_KERNEL_DEBUG", str(tmp_path))
    f = gf(5.0, 101, lambda x: np.exp(-x ** 2))
    convected_pair(f, ones_like(f))
    dumps = list(tmp_path.glob("kernel_routes_*.csv"))
    assert dumps
    header = dumps[0].read_text().splitlines()[0]
    assert header == "x,odd_fast,odd_direct,even_fast,even_direct"
