import math

import numpy as np
import pytest

from fwsolver.grid import Grid, GridFunction
from fwsolver.kernels import convected_helmholtz
from fwsolver.lagrangian import SolverConfig, ball_geometry, integrate
from fwsolver.diagnostics import (BreakingReport, conserved, continuity_experiment,
                                  diagnostics_series, eulerian_oracle, pde_residual,
                                  peakon, peakon_residual, wave_breaking_probe,
                                  write_series_csv)
from fwsolver.profiles import gaussian, peakon_profile, sech2


def zeros(grid):
    return GridFunction(grid, np.zeros(grid.n_points))


# ---------------------------------------------------------------------------
# conserved integrals
# ---------------------------------------------------------------------------

def test_conserved_zero():
    tri = conserved(zeros(Grid(10.0, 101)))
    assert tri.e1 == 0.0 and tri.e2 == 0.0 and tri.e3 == 0.0


def test_conserved_gaussian_closed_forms():
    u = gaussian(Grid(15.0, 3001), a=1.0, sigma=1.0)
    tri = conserved(u)
    assert tri.e1 == pytest.approx(math.sqrt(math.pi), rel=1e-10)
    assert tri.e2 == pytest.approx(math.sqrt(math.pi / 2.0), rel=1e-10)
    # nonlocal term of e3 cross-checked against the quadratic-cost oracle path
    ones = GridFunction(u.grid, np.ones(u.grid.n_points))
    K_direct = convected_helmholtz(u, ones, method="direct")
    from fwsolver.grid import quadrature
    e3_direct = quadrature(GridFunction(u.grid, u.values * K_direct.values
                                        - 0.5 * u.values ** 3))
    assert tri.e3 == pytest.approx(e3_direct, rel=1e-12)


def test_conserved_peaked_profile():
    u = peakon_profile(Grid(40.0, 48001))
    tri = conserved(u)
    assert tri.e1 == pytest.approx(32.0 / 9.0, abs=1e-6)
    assert tri.e2 == pytest.approx(128.0 / 81.0, abs=1e-6)


# ---------------------------------------------------------------------------
# traveling-wave reference
# ---------------------------------------------------------------------------

def test_peakon_crest_value_and_speed():
    g = Grid(40.0, 4001)
    p0 = peakon(0.0, g)
    assert p0.values[2000] == pytest.approx(8.0 / 9.0, abs=0)
    p3 = peakon(3.0, g)
    crest = g.x[np.argmax(p3.values)]
    assert crest == pytest.approx(4.0, abs=g.h / 2)


def test_peakon_translation_symmetry():
    g = Grid(40.0, 4001)  # h = 0.02 divides the shift 4.0 exactly
    p0 = peakon(0.0, g).values
    p3 = peakon(3.0, g).values
    shift = int(round(4.0 / g.h))
    assert np.allclose(p3[shift:], p0[:-shift], rtol=0, atol=1e-15)


def test_peakon_support_guard():
    with pytest.raises(ValueError, match="boundary"):
        peakon(30.0, Grid(40.0, 1001))


def test_peakon_residual_isolates_kernel_error():
    # crest on a node: cells never straddle the corner, so the kernel
    # quadrature is exact for the piecewise-exponential profile
    assert peakon_residual(0.0, Grid(40.0, 4001)) <= 1e-10
    assert peakon_residual(3.0, Grid(40.0, 4001)) <= 1e-10


def test_peakon_residual_degrades_for_offnode_crest():
    g = Grid(40.0, 4001)
    on_node = peakon_residual(0.0, g)
    off_node = peakon_residual(0.0075, g)  # crest at h/2
    assert off_node >= 100.0 * max(on_node, 1e-14)  # corner inside a cell hurts
    assert off_node <= 1e-3                          # but stays quadrature-small


# ---------------------------------------------------------------------------
# pde residual
# ---------------------------------------------------------------------------

def test_pde_residual_zero_solution():
    grid = Grid(10.0, 201)
    traj = integrate(zeros(grid), SolverConfig(grid=grid, store_every=10))
    assert pde_residual(traj, traj.times[len(traj.times) // 2]) == 0.0


def test_pde_residual_needs_interior_time():
    grid = Grid(10.0, 201)
    traj = integrate(zeros(grid), SolverConfig(grid=grid, store_every=10))
    with pytest.raises(ValueError):
        pde_residual(traj, 0.0)
    with pytest.raises(ValueError):
        pde_residual(traj, traj.times[-1])


# ---------------------------------------------------------------------------
# physical-space oracle
# ---------------------------------------------------------------------------

def test_oracle_zero_data():
    grid = Grid(10.0, 201)
    traj = eulerian_oracle(zeros(grid), SolverConfig(grid=grid, store_every=100))
    assert all(np.all(s.u.values == 0.0) for s in traj.snapshots)


def test_oracle_cfl_guard():
    grid = Grid(10.0, 201)  # h = 0.1
    u0 = gaussian(grid, a=2.0)
    with pytest.raises(ValueError, match="CFL"):
        eulerian_oracle(u0, SolverConfig(grid=grid, dt=0.05, t_end=0.1,
                                         guard_mode="warn"))


def test_oracle_translation_sanity_mode():
    # frozen advection speed, kernel off: pure translation to O(h^2)
    grid = Grid(20.0, 2001)
    u0 = gaussian(grid, a=1.0)
    c, t_end = 1.0, 1.0
    cfg = SolverConfig(grid=grid, dt=5e-3, t_end=t_end, guard_mode="warn",
                       store_every=10 ** 6)
    traj = eulerian_oracle(u0, cfg, with_nonlocal_term=False, frozen_speed=c)
    exact = np.exp(-((grid.x - c * t_end) ** 2))
    assert np.max(np.abs(traj.final.u.values - exact)) <= 5e-4


def test_oracle_agrees_with_characteristic_route():
    grid = Grid(10.0, 1001)
    u0 = gaussian(grid, a=0.1)
    geo = ball_geometry(u0)
    t_end = geo.lifespan / 2
    cfg = SolverConfig(grid=grid, dt=t_end / 100, t_end=t_end, store_every=100)
    lag = integrate(u0, cfg, geo)
    from fwsolver.flowmap import reconstruct
    u_lag = reconstruct(lag.final).u
    u_eul = eulerian_oracle(u0, cfg).final.u
    assert np.max(np.abs(u_lag.values - u_eul.values)) <= 1e-4


# ---------------------------------------------------------------------------
# continuity experiment
# ---------------------------------------------------------------------------

def _continuity_setup(n=401):
    grid = Grid(10.0, n)
    u0 = gaussian(grid, a=0.1)
    geo = ball_geometry(u0)
    cfg = SolverConfig(grid=grid, dt=geo.lifespan / 50, store_every=10)
    pert = GridFunction(grid, np.exp(-((grid.x - 1.0) ** 2)))
    return u0, pert, cfg


def test_continuity_zero_perturbation():
    u0, pert, cfg = _continuity_setup()
    report = continuity_experiment(u0, pert, [0.0], [0.5], cfg)
    assert report.c0_sol_dist == [0.0]
    assert report.lipschitz_ratio_max == 0.0


def test_continuity_linear_response_doubles():
    u0, pert, cfg = _continuity_setup()
    report = continuity_experiment(u0, pert, [1e-3, 2e-3], [0.5], cfg)
    ratio = report.c0_sol_dist[1] / report.c0_sol_dist[0]
    assert 1.8 <= ratio <= 2.2


def test_continuity_rejects_ball_escape():
    u0, pert, cfg = _continuity_setup()
    with pytest.raises(ValueError, match="ball"):
        continuity_experiment(u0, pert, [1.0], [0.5], cfg)


def test_continuity_rejects_bad_alpha():
    u0, pert, cfg = _continuity_setup()
    with pytest.raises(ValueError, match="alpha"):
        continuity_experiment(u0, pert, [1e-3], [1.0], cfg)


def test_continuity_report_serializes(tmp_path):
    u0, pert, cfg = _continuity_setup()
    report = continuity_experiment(u0, pert, [1e-3], [0.0, 0.5], cfg)
    text = report.to_json()
    import json
    payload = json.loads(text)
    assert payload["eps_values"] == [1e-3]
    assert "0.5" in payload["holder_sol_dist"]


# ---------------------------------------------------------------------------
# wave breaking
# ---------------------------------------------------------------------------

def test_breaking_zero_data_none():
    grid = Grid(10.0, 201)
    cfg = SolverConfig(grid=grid, dt=1e-2, guard_mode="warn", store_every=100)
    report = wave_breaking_probe(zeros(grid), cfg, t_max=0.5)
    assert report.breach_time is None
    assert report.min_q_final == pytest.approx(1.0)


def test_breaking_requires_warn_mode():
    grid = Grid(10.0, 201)
    cfg = SolverConfig(grid=grid, guard_mode="enforce")
    with pytest.raises(ValueError, match="warn"):
        wave_breaking_probe(zeros(grid), cfg, t_max=0.5)


def test_breaking_small_data_survives_past_guaranteed_lifespan():
    grid = Grid(15.0, 601)
    u0 = gaussian(grid, a=0.05)
    geo = ball_geometry(u0)
    cfg = SolverConfig(grid=grid, dt=geo.lifespan / 40, guard_mode="warn",
                       store_every=10 ** 6)
    report = wave_breaking_probe(u0, cfg, t_max=5.0 * geo.lifespan)
    assert report.breach_time is None


def test_breaking_time_shrinks_with_steepness():
    grid = Grid(20.0, 801)
    cfg = SolverConfig(grid=grid, dt=2e-3, guard_mode="warn", store_every=10 ** 6)
    times = []
    for a in (1.5, 2.0):
        report = wave_breaking_probe(sech2(grid, a=a, k=1.0), cfg, t_max=1.5)
        assert isinstance(report, BreakingReport)
        assert report.breach_time is not None
        times.append(report.breach_time)
    assert times[1] < times[0]


# ---------------------------------------------------------------------------
# series
# ---------------------------------------------------------------------------

def test_diagnostics_series_and_csv(tmp_path):
    grid = Grid(10.0, 401)
    u0 = gaussian(grid, a=0.1)
    traj = integrate(u0, SolverConfig(grid=grid, store_every=20))
    series = diagnostics_series(traj)
    n_rows = len(series["t"])
    assert n_rows == len(traj.states)
    assert math.isnan(series["residual"][0]) and math.isnan(series["residual"][-1])
    assert all(not math.isnan(v) for v in series["residual"][1:-1])
    assert series["min_q"][0] == 1.0
    path = tmp_path / "series.csv"
    write_series_csv(series, path)
    header = path.read_text().splitlines()[0]
    assert header == "t,e1,e2,e3,min_q,sup_u,sup_ux,residual"
    assert len(path.read_text().splitlines()) == n_rows + 1


def test_continuity_parallel_matches_serial():
    u0, pert, cfg = _continuity_setup()
    serial = continuity_experiment(u0, pert, [1e-2, 1e-3], [0.5], cfg, jobs=1)
    parallel = continuity_experiment(u0, pert, [1e-2, 1e-3], [0.5], cfg, jobs=2)
    assert serial.c0_sol_dist == parallel.c0_sol_dist
    assert serial.holder_sol_dist == parallel.holder_sol_dist
