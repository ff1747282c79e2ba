"""Characteristic-coordinate formulation: the coupled ODE system for the
wave profile, its slope and the coordinate stretch along trajectories,
its guaranteed-lifespan arithmetic, and the fixed-step RK4 integrator.

State components, all sampled on one grid and indexed by the trajectory
label ``x``:

* ``w``            wave height carried along the characteristic,
* ``v``            spatial slope carried along the characteristic,
* ``q``            stretch factor of the characteristic map,
* ``displacement`` accumulated offset of the characteristic from ``x``.

The tendencies are

    dw/dt = odd kernel integral of (w, q)
    dv/dt = even kernel integral of (w, q) - w - (3/2) v^2
    dq/dt = (3/2) v q
    d(displacement)/dt = (3/2) w

which is an ordinary differential equation in the product space with norm
``|w|_C1 + sup|v| + sup|q|``; the right-hand side is Lipschitz with
constant at most ``(50/9) r`` on the ball of radius ``r``, giving the
guaranteed two-sided lifespan ``9 / (100 r)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .grid import Grid, GridFunction, c1_norm, derivative, derivative_values, sup_norm
from .kernels import DEFAULT_Q_FLOOR, MonotonicityError, kernel_pair_arrays

__all__ = [
    "LagrangianState",
    "Tendency",
    "BallGeometry",
    "SolverConfig",
    "Trajectory",
    "GuardBreach",
    "InitialDataError",
    "ball_geometry",
    "initial_state",
    "rhs",
    "step",
    "integrate",
    "state_norm",
    "chain_rule_defect",
]

# the contraction estimate needs the ball radius strictly below 1/9
MAX_BALL_RADIUS = 1.0 / 9.0
DEFAULT_BALL_RADIUS = 0.1

# adjacent-difference screen for non-C1 initial data; see initial_state
KINK_COEFF = 0.5


class InitialDataError(ValueError):
    """Initial data violates a constructor precondition."""


class GuardBreach(RuntimeError):
    """The stretch factor hit the guard floor during a time step."""

    def __init__(self, stage: str, node: int, x: float, t: float, value: float, floor: float):
        self.stage = stage
        self.node = node
        self.x = x
        self.t = t
        self.value = value
        self.floor = floor
        super().__init__(
            f"stretch floor breached at RK stage {stage}, node {node} (x={x:.6g}), "
            f"t={t:.6g}: q={value:.6g} <= {floor:.6g}"
        )


@dataclass(frozen=True)
class LagrangianState:
    """Solver state at one time level; all four fields share one grid."""

    t: float
    w: GridFunction
    v: GridFunction
    q: GridFunction
    displacement: GridFunction

    def __post_init__(self):
        g = self.w.grid
        for name in ("v", "q", "displacement"):
            if getattr(self, name).grid != g:
                raise ValueError(f"state component {name} lives on a different grid")

    @property
    def grid(self) -> Grid:
        return self.w.grid


@dataclass(frozen=True)
class Tendency:
    """Time derivative of a state, same shape as the state itself."""

    w: GridFunction
    v: GridFunction
    q: GridFunction
    displacement: GridFunction


@dataclass(frozen=True)
class BallGeometry:
    """Constants of the contraction argument for one choice of initial data.

    ``lifespan`` is the guaranteed two-sided existence time ``9/(100 r)``
    with ``r = r0 + state_norm``; ``lifespan_naive = 9/(100 |u0|_C1)``
    uses only the data norm and is reported for comparison (it is larger,
    and not what the guards enforce).
    """

    r0: float
    state_norm: float
    r: float
    r_lower: float
    r_upper: float
    lipschitz_const: float
    lifespan: float
    lifespan_naive: float


def ball_geometry(u0: GridFunction, r0: float = DEFAULT_BALL_RADIUS) -> BallGeometry:
    """Lifespan and Lipschitz constants for data ``u0`` and ball radius ``r0``."""
    if not (0.0 < r0 < MAX_BALL_RADIUS):
        raise ValueError(f"ball radius must satisfy 0 < r0 < 1/9, got {r0}")
    du = sup_norm(derivative(u0))
    u0_c1 = sup_norm(u0) + du
    y0 = u0_c1 + du + 1.0  # + sup|q0| with q0 == 1
    r = r0 + y0
    return BallGeometry(
        r0=r0,
        state_norm=y0,
        r=r,
        r_lower=1.0 - r0,
        r_upper=1.0 + r0,
        lipschitz_const=(50.0 / 9.0) * r,
        lifespan=9.0 / (100.0 * r),
        lifespan_naive=9.0 / (100.0 * u0_c1) if u0_c1 > 0 else math.inf,
    )


@dataclass(frozen=True)
class SolverConfig:
    """Run parameters.

    ``dt=None`` resolves to ``min(h, lifespan/200)``; ``t_end=None``
    resolves to the guaranteed lifespan.  With ``guard_mode="enforce"``,
    ``|t_end|`` may not exceed the guaranteed lifespan and non-smooth
    initial data is rejected; ``"warn"`` downgrades both to warnings so
    runs may continue into the merely-empirical regime.
    """

    grid: Grid
    dt: float | None = None
    t_end: float | None = None
    r0: float = DEFAULT_BALL_RADIUS
    q_floor: float = DEFAULT_Q_FLOOR
    boundary_tol: float = 1e-6
    guard_mode: str = "enforce"
    store_every: int = 1

    def __post_init__(self):
        if self.guard_mode not in ("enforce", "warn"):
            raise ValueError(f"guard_mode must be 'enforce' or 'warn', got {self.guard_mode!r}")
        if self.dt is not None and not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.store_every < 1:
            raise ValueError("store_every must be >= 1")


def initial_state(u0: GridFunction, config: SolverConfig) -> LagrangianState:
    """State at time zero: slope from the discrete derivative, unit stretch.

    Rejects (or warns about, per ``guard_mode``) data whose discrete slope
    jumps between adjacent nodes like a corner rather than shrinking with
    ``h``: ``max|v_{i+1} - v_i|`` must stay below
    ``h^{3/4} (1 + sup|u0| + sup|v|) / 2``.  A corner keeps an O(1) jump
    at every resolution, so it trips the screen on any reasonable grid,
    while well-resolved smooth data sits orders of magnitude below it
    (steep data on a grid too coarse to resolve its slope is flagged too,
    which is the intended reading of discrete smoothness).
    """
    if u0.grid != config.grid:
        raise InitialDataError("initial data lives on a different grid than the config")
    v0 = derivative(u0)
    dv = np.abs(np.diff(v0.values))
    scale = 1.0 + sup_norm(u0) + sup_norm(v0)
    kink_tol = KINK_COEFF * config.grid.h ** 0.75 * scale
    problems = []
    if dv.size and float(np.max(dv)) > kink_tol:
        i = int(np.argmax(dv))
        problems.append(
            f"initial data is not smooth enough: slope jumps by {dv[i]:.3g} "
            f"between nodes {i} and {i + 1} (x={u0.grid.x[i]:.4g}), "
            f"tolerance {kink_tol:.3g}"
        )
    for end, name in ((0, "left"), (-1, "right")):
        if abs(u0.values[end]) > config.boundary_tol:
            problems.append(
                f"initial data does not decay at the {name} boundary: "
                f"|u0| = {abs(u0.values[end]):.3g} > {config.boundary_tol:.3g}"
            )
    if problems:
        msg = "; ".join(problems)
        if config.guard_mode == "enforce":
            raise InitialDataError(msg)
        warnings.warn(msg, stacklevel=2)
    n = config.grid.n_points
    return LagrangianState(
        t=0.0,
        w=u0,
        v=v0,
        q=GridFunction(config.grid, np.ones(n)),
        displacement=GridFunction(config.grid, np.zeros(n)),
    )


def state_norm(state: LagrangianState) -> float:
    """Product-space norm ``|w|_C1 + sup|v| + sup|q|`` (ball monitor)."""
    return c1_norm(state.w) + sup_norm(state.v) + sup_norm(state.q)


def chain_rule_defect(state: LagrangianState) -> float:
    """sup of ``|d/dx w - v q|``, zero in the continuum by the chain rule."""
    return float(np.max(np.abs(
        derivative_values(state.w.values, state.grid.h) - state.v.values * state.q.values
    )))


# ---------------------------------------------------------------------------
# packed-array core used by the integrator
# ---------------------------------------------------------------------------

def _pack(state: LagrangianState) -> NDArray[np.float64]:
    return np.stack([state.w.values, state.v.values, state.q.values,
                     state.displacement.values])


def _unpack(y: NDArray[np.float64], grid: Grid, t: float) -> LagrangianState:
    return LagrangianState(
        t=t,
        w=GridFunction(grid, y[0].copy()),
        v=GridFunction(grid, y[1].copy()),
        q=GridFunction(grid, y[2].copy()),
        displacement=GridFunction(grid, y[3].copy()),
    )


def _rhs_arrays(y: NDArray[np.float64], h: float, q_floor: float) -> NDArray[np.float64]:
    w, v, q = y[0], y[1], y[2]
    bad = np.flatnonzero(q <= q_floor)
    if bad.size:
        i = int(bad[0])
        raise MonotonicityError(i, float(q[i]), q_floor)
    lam = np.empty(q.size)
    lam[0] = 0.0
    np.cumsum(0.5 * h * (q[:-1] + q[1:]), out=lam[1:])
    odd, even = kernel_pair_arrays(w, lam)
    out = np.empty_like(y)
    out[0] = odd
    out[1] = even - w - 1.5 * v * v
    out[2] = 1.5 * v * q
    out[3] = 1.5 * w
    return out


def _rk4_arrays(y, t, dt, h, q_floor):
    """One classical RK4 step; breaches name the stage and node."""
    try:
        stage = "k1"
        k1 = _rhs_arrays(y, h, q_floor)
        stage = "k2"
        k2 = _rhs_arrays(y + 0.5 * dt * k1, h, q_floor)
        stage = "k3"
        k3 = _rhs_arrays(y + 0.5 * dt * k2, h, q_floor)
        stage = "k4"
        k4 = _rhs_arrays(y + dt * k3, h, q_floor)
    except MonotonicityError as err:
        raise GuardBreach(stage, err.index, -1.0, t, err.value, err.floor) from err
    y_new = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    bad = np.flatnonzero(y_new[2] <= q_floor)
    if bad.size:
        i = int(bad[0])
        raise GuardBreach("post-step", i, -1.0, t + dt, float(y_new[2][i]), q_floor)
    return y_new


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def rhs(state: LagrangianState, q_floor: float = DEFAULT_Q_FLOOR) -> Tendency:
    """Time derivative of a state.  The rest state (0, 0, 1) is a fixed point."""
    out = _rhs_arrays(_pack(state), state.grid.h, q_floor)
    g = state.grid
    return Tendency(
        w=GridFunction(g, out[0]),
        v=GridFunction(g, out[1]),
        q=GridFunction(g, out[2]),
        displacement=GridFunction(g, out[3]),
    )


def step(state: LagrangianState, dt: float, q_floor: float = DEFAULT_Q_FLOOR) -> LagrangianState:
    """Advance one RK4 step of size ``dt`` (may be negative)."""
    try:
        y = _rk4_arrays(_pack(state), state.t, dt, state.grid.h, q_floor)
    except GuardBreach as gb:
        raise GuardBreach(gb.stage, gb.node, float(state.grid.x[gb.node]),
                          gb.t, gb.value, gb.floor) from None
    return _unpack(y, state.grid, state.t + dt)


@dataclass
class Trajectory:
    """Stored time levels of one integration, plus how it ended.

    ``breach`` is ``None`` for a clean run; otherwise the guard event that
    stopped it, with the last valid state retained as ``states[-1]``.
    """

    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    config: SolverConfig | None = None
    geometry: BallGeometry | None = None
    breach: GuardBreach | None = None

    def state_at(self, t: float) -> LagrangianState:
        """Stored state nearest to ``t`` (must match within half a stride)."""
        times = np.asarray(self.times)
        i = int(np.argmin(np.abs(times - t)))
        stride = abs(times[1] - times[0]) if len(times) > 1 else math.inf
        if abs(times[i] - t) > 0.5 * stride + 1e-12:
            raise KeyError(f"no stored state near t={t}")
        return self.states[i]

    @property
    def final(self) -> LagrangianState:
        return self.states[-1]


def integrate(u0: GridFunction, config: SolverConfig,
              geometry: BallGeometry | None = None) -> Trajectory:
    """Integrate from ``u0`` to ``config.t_end`` with fixed-step RK4.

    Negative ``t_end`` integrates backward; the step is adjusted so an
    integer number of steps lands exactly on ``t_end``.  Guard breaches do
    not raise: the trajectory is returned with ``breach`` set and the last
    valid state retained.
    """
    if geometry is None:
        geometry = ball_geometry(u0, config.r0)
    t_end = config.t_end if config.t_end is not None else geometry.lifespan
    if config.guard_mode == "enforce" and abs(t_end) > geometry.lifespan * (1 + 1e-12):
        raise InitialDataError(
            f"t_end = {t_end:.6g} exceeds the guaranteed lifespan {geometry.lifespan:.6g}; "
            "pass guard_mode='warn' to integrate beyond it"
        )
    dt = config.dt if config.dt is not None else min(config.grid.h, geometry.lifespan / 200.0)
    n_steps = max(1, int(round(abs(t_end) / dt)))
    dt_signed = t_end / n_steps

    state0 = initial_state(u0, config)
    traj = Trajectory(times=[0.0], states=[state0], config=config, geometry=geometry)
    y = _pack(state0)
    grid = config.grid
    for s in range(n_steps):
        t = s * dt_signed
        try:
            y = _rk4_arrays(y, t, dt_signed, grid.h, config.q_floor)
        except GuardBreach as gb:
            traj.breach = GuardBreach(gb.stage, gb.node, float(grid.x[gb.node]),
                                      gb.t, gb.value, gb.floor)
            if traj.times[-1] != t:  # retain the last valid state
                traj.times.append(t)
                traj.states.append(_unpack(y, grid, t))
            break
        t_new = (s + 1) * dt_signed
        if (s + 1) % config.store_every == 0 or s + 1 == n_steps:
            traj.times.append(t_new)
            traj.states.append(_unpack(y, grid, t_new))
    return traj
