import numpy as np
import pytest

from fwsolver.grid import Grid, GridFunction, derivative
from fwsolver.lagrangian import (LagrangianState, SolverConfig, ball_geometry,
                                 integrate)
from fwsolver.flowmap import (FlowMap, FlowMapError, OutOfImageError, flow_map,
                              inverse_slope_bounds, invert, invert_many,
                              map_slopes, reconstruct, slope_bounds)
from fwsolver.profiles import gaussian


def zeros(grid):
    return GridFunction(grid, np.zeros(grid.n_points))


def rest_state(grid, t=0.0):
    return LagrangianState(t=t, w=zeros(grid), v=zeros(grid),
                           q=GridFunction(grid, np.ones(grid.n_points)),
                           displacement=zeros(grid))


def gaussian_run(n=801, a=0.1, store_every=20):
    grid = Grid(10.0, n)
    u0 = gaussian(grid, a=a)
    geo = ball_geometry(u0)
    traj = integrate(u0, SolverConfig(grid=grid, store_every=store_every), geo)
    assert traj.breach is None
    return traj, geo


# ---------------------------------------------------------------------------
# map assembly and inversion
# ---------------------------------------------------------------------------

def test_flow_map_identity_at_time_zero():
    grid = Grid(10.0, 101)
    fmap = flow_map(rest_state(grid))
    assert np.array_equal(fmap.positions, grid.x)
    assert np.all(map_slopes(fmap) == pytest.approx(1.0))


def test_flow_map_rejects_nonmonotone():
    grid = Grid(1.0, 11)
    disp = np.zeros(11)
    disp[5] = -0.5  # forces a decreasing pair of samples
    st = LagrangianState(t=0.1, w=zeros(grid), v=zeros(grid),
                         q=GridFunction(grid, np.ones(11)),
                         displacement=GridFunction(grid, disp))
    with pytest.raises(FlowMapError, match="increasing"):
        flow_map(st)


def test_invert_identity_and_nodes_exact():
    grid = Grid(10.0, 101)
    fmap = flow_map(rest_state(grid))
    for i in (0, 31, 100):
        assert invert(fmap, float(grid.x[i])) == grid.x[i]  # bitwise
    assert invert(fmap, 0.123) == pytest.approx(0.123, abs=1e-15)


def test_invert_affine_map_exactly():
    grid = Grid(10.0, 101)
    fmap = FlowMap(grid, 1.1 * grid.x, t=0.05)
    for x in (-10.9, -3.3, 0.0, 7.77):
        assert invert(fmap, x) == pytest.approx(x / 1.1, abs=1e-13)


def test_invert_round_trip_everywhere():
    traj, _ = gaussian_run()
    fmap = flow_map(traj.final)
    # node round trip is exact
    labels, inside = invert_many(fmap, fmap.positions)
    assert np.all(inside)
    assert np.array_equal(labels, fmap.grid.x)
    # off-node round trip is second order
    xs = np.linspace(-8, 8, 333)
    labels, inside = invert_many(fmap, xs)
    assert np.all(inside)
    back = np.interp(labels, fmap.grid.x, fmap.positions)
    assert np.max(np.abs(back - xs)) <= 1e-12


def test_invert_out_of_image():
    grid = Grid(1.0, 11)
    fmap = flow_map(rest_state(grid))
    with pytest.raises(OutOfImageError):
        invert(fmap, 1.5)


# ---------------------------------------------------------------------------
# slope bounds
# ---------------------------------------------------------------------------

def test_slope_bounds_identity_map():
    grid = Grid(10.0, 101)
    geo = ball_geometry(zeros(grid))
    fmap = flow_map(rest_state(grid))
    assert slope_bounds(fmap, geo) == (pytest.approx(1.0), pytest.approx(1.0))
    assert inverse_slope_bounds(fmap, geo) == (pytest.approx(1.0), pytest.approx(1.0))


def test_saturated_map_hits_the_proven_edges():
    grid = Grid(10.0, 1001)
    geo = ball_geometry(gaussian(Grid(10.0, 1001), a=0.1))
    t_sat = 0.09 / geo.r  # r |t| = 9/100
    fmap = FlowMap(grid, (173.0 / 200.0) * grid.x, t_sat)
    smin, smax = slope_bounds(fmap, geo, tol=1e-3)
    assert smin >= 173.0 / 200.0 - 1e-3
    ilo, ihi = inverse_slope_bounds(fmap, geo, tol=1e-3)
    assert 200.0 / 227.0 - 1e-3 <= ilo
    assert ihi <= 200.0 / 173.0 + 1e-3
    assert ihi == pytest.approx(200.0 / 173.0, rel=1e-12)


def test_slope_bounds_violation_reported():
    grid = Grid(10.0, 101)
    geo = ball_geometry(zeros(grid))
    fmap = FlowMap(grid, 1.5 * grid.x, t=0.001)  # slope far beyond 1 + (3/2) r t
    with pytest.raises(FlowMapError, match="band"):
        slope_bounds(fmap, geo, tol=1e-6)


def test_run_slopes_stay_in_band():
    traj, geo = gaussian_run()
    for st in traj.states:
        slope_bounds(flow_map(st), geo, tol=1e-9)
        inverse_slope_bounds(flow_map(st), geo, tol=1e-9)


# ---------------------------------------------------------------------------
# reconstruction
# ---------------------------------------------------------------------------

def test_reconstruct_time_zero_is_data():
    grid = Grid(10.0, 501)
    u0 = gaussian(grid, a=0.1)
    st = LagrangianState(t=0.0, w=u0, v=derivative(u0),
                         q=GridFunction(grid, np.ones(501)),
                         displacement=zeros(grid))
    snap = reconstruct(st)
    assert np.max(np.abs(snap.u.values - u0.values)) <= 1e-30
    assert np.max(np.abs(snap.ux.values - derivative(u0).values)) <= 1e-30
    assert snap.out_of_image == 0


def test_reconstruct_zero_solution():
    snap = reconstruct(rest_state(Grid(10.0, 101), t=0.3))
    assert np.all(snap.u.values == 0.0) and np.all(snap.ux.values == 0.0)


def test_reconstruct_two_slope_routes_agree():
    # carried slope pulled back vs derivative of the reconstruction
    gaps = []
    for n in (501, 1001):
        grid = Grid(10.0, n)
        u0 = gaussian(grid, a=0.1)
        geo = ball_geometry(u0)
        traj = integrate(u0, SolverConfig(grid=grid, store_every=1000), geo)
        snap = reconstruct(traj.final)
        alt = derivative(snap.u).values
        interior = np.abs(grid.x) <= 8.0
        gaps.append(np.max(np.abs(snap.ux.values[interior] - alt[interior])))
    assert gaps[0] <= 1e-3
    assert gaps[1] <= 0.7 * gaps[0]  # first-order shrink near the image edges


def test_stretch_matches_map_slope():
    traj, _ = gaussian_run(n=1601)
    st = traj.final
    slopes = map_slopes(flow_map(st))
    q_mid = 0.5 * (st.q.values[:-1] + st.q.values[1:])
    assert np.max(np.abs(slopes - q_mid)) <= 5e-6  # O(dt^4 + h^2)


def test_reconstruct_smooth_variant_close_to_monotone():
    traj, _ = gaussian_run()
    a = reconstruct(traj.final, smooth=False)
    b = reconstruct(traj.final, smooth=True)
    assert np.max(np.abs(a.u.values - b.u.values)) <= 1e-4
