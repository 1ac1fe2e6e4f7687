"""Concrete hybrid power-system models.

* a single-machine-infinite-bus generator feeding a load over two
  identical transmission lines, with protection-driven line switching;
* a grid-connected inverter that switches between grid-following (GFL)
  and grid-forming (GFM) operation on grid-voltage thresholds with a
  hysteresis band, plus its sigmoid-blended continuous counterpart.

All electrical quantities are per-unit.  The inverter state vector is
``[i_d, i_q, v_d, v_q]`` in the synchronous dq frame.

The four-state embedding: the GFL current equations and GFM voltage
equations are exact dynamic laws; the remaining channels (GFL voltages
are pinned to the grid, GFM currents obey algebraic droop laws) are
realized as fast first-order tracking with time constants ``tau_v`` /
``tau_i`` so one uniform ODE state vector serves both modes and the EKF.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.special import expit

from .errors import ArgumentError
from .estimation import NoiseModel
from .simulate import simulate
from .systems import Edge, FlowJumpSystem, HybridAutomaton, HybridTrajectory

GFL = "GFL"
GFM = "GFM"

INVARIANT_TOL = 1e-6

# Default noise magnitudes of the reference estimation experiment: white
# process noise of intensity 1e-2 on every state (discretized per step as
# Q dt), 0.004 pu measurement noise on the voltage channels and 0.01 pu on
# the current channels.
REFERENCE_Q_INTENSITY = 1e-2
REFERENCE_SIGMA_CURRENT = 0.01
REFERENCE_SIGMA_VOLTAGE = 0.004


# ---------------------------------------------------------------------------
# Exogenous grid-voltage profiles


@dataclass(frozen=True)
class PiecewiseLinearProfile:
    """Piecewise-linear scalar signal defined by (time, value) breakpoints."""

    times: Tuple[float, ...]
    values: Tuple[float, ...]

    def __post_init__(self):
        if len(self.times) != len(self.values) or len(self.times) < 2:
            raise ArgumentError("profile needs matching times/values, >= 2 points")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ArgumentError("profile times must be strictly increasing")

    def __call__(self, t: float) -> float:
        return float(np.interp(t, self.times, self.values))

    def crossing_times(self, level: float) -> Tuple[float, ...]:
        """Analytic crossing times of ``level``, in order (for tests/reports)."""
        out = []
        for (t0, v0), (t1, v1) in zip(
            zip(self.times, self.values), zip(self.times[1:], self.values[1:])
        ):
            if v0 == v1:
                continue
            s = (level - v0) / (v1 - v0)
            if 0.0 <= s <= 1.0:
                out.append(t0 + s * (t1 - t0))
        return tuple(out)


# ---------------------------------------------------------------------------
# Grid-connected inverter


@dataclass(frozen=True)
class InverterParams:
    """Per-unit inverter filter and mode-switching parameters."""

    l_pu: float = 0.0189
    r_pu: float = 1.89
    omega: float = 1.0
    v_ref: float = 1.0
    i_lim: float = 1.2
    v_low: float = 0.8
    v_high: float = 0.9
    sigmoid_gain: float = 50.0
    sigmoid_mid: float = 0.85
    tau_v: float = 1e-3
    tau_i: float = 1e-3

    def __post_init__(self):
        if self.l_pu <= 0.0 or self.r_pu <= 0.0:
            raise ArgumentError("l_pu and r_pu must be positive")
        if not self.v_low < self.v_high:
            raise ArgumentError("hysteresis requires v_low < v_high")
        if self.tau_v <= 0.0 or self.tau_i <= 0.0:
            raise ArgumentError("tracking time constants must be positive")
        if self.i_lim <= 0.0:
            raise ArgumentError("current limit must be positive")


def gfl_flow(x, v_grid: float, p: InverterParams) -> np.ndarray:
    """Grid-following dynamics: current control with grid-pinned voltages.

    The d/q current equations are the RL filter laws; the voltage states
    track the measured grid voltage (d-axis) and zero (q-axis) with time
    constant ``tau_v``.
    """
    i_d, i_q, v_d, v_q = x
    wl = p.omega * p.l_pu
    return np.array(
        [
            (v_d - p.r_pu * i_d + wl * i_q) / p.l_pu,
            (v_q - p.r_pu * i_q - wl * i_d) / p.l_pu,
            (v_grid - v_d) / p.tau_v,
            -v_q / p.tau_v,
        ]
    )


def gfm_flow(x, p: InverterParams) -> np.ndarray:
    """Grid-forming dynamics: voltage control with droop current tracking.

    The d/q voltage equations are the forming laws; the current states
    track the algebraic droop currents ``(v_ref - v_d)/r`` and ``-v_q/r``
    with time constant ``tau_i``.
    """
    i_d, i_q, v_d, v_q = x
    wl = p.omega * p.l_pu
    i_d_alg = (p.v_ref - v_d) / p.r_pu
    i_q_alg = -v_q / p.r_pu
    return np.array(
        [
            (i_d_alg - i_d) / p.tau_i,
            (i_q_alg - i_q) / p.tau_i,
            (wl * i_q - p.r_pu * i_d) / p.l_pu,
            (-wl * i_d - p.r_pu * i_q) / p.l_pu,
        ]
    )


def mode_sigmoid(v_grid: float, p: InverterParams) -> float:
    """Smooth GFL-activation weight: 1 well above the threshold, 0 below."""
    return float(expit(p.sigmoid_gain * (v_grid - p.sigmoid_mid)))


def blended_flow(x, v_grid: float, p: InverterParams) -> np.ndarray:
    """Sigmoid-weighted interpolation between the GFL and GFM fields."""
    s = mode_sigmoid(v_grid, p)
    return s * gfl_flow(x, v_grid, p) + (1.0 - s) * gfm_flow(x, p)


def current_clamp(x, p: InverterParams) -> np.ndarray:
    """GFL->GFM reset: clamp both currents into [-i_lim, i_lim], voltages kept."""
    out = np.asarray(x, dtype=float).copy()
    out[0] = min(max(out[0], -p.i_lim), p.i_lim)
    out[1] = min(max(out[1], -p.i_lim), p.i_lim)
    return out


def current_clamp_jacobian(x, p: InverterParams) -> np.ndarray:
    """Subgradient Jacobian of the clamp: 0 on clamped current channels.

    A coordinate exactly on the limit counts as clamped.
    """
    d = np.ones(4)
    if abs(x[0]) >= p.i_lim:
        d[0] = 0.0
    if abs(x[1]) >= p.i_lim:
        d[1] = 0.0
    return np.diag(d)


def inverter_automaton(
    p: InverterParams, v_grid: Callable[[float], float]
) -> HybridAutomaton:
    """Two-mode GFL/GFM automaton driven by the measured grid voltage.

    Guards fire on the exogenous signal: GFL->GFM when it falls below
    ``v_low`` and GFM->GFL when it rises above ``v_high`` (the gap is the
    anti-chattering hysteresis band).  The GFL->GFM reset clamps the
    currents; GFM->GFL applies no reset.  Both guards are
    state-independent, so their saltation matrices reduce to the reset
    Jacobians.
    """

    def gfl_field(x, t):
        return gfl_flow(x, v_grid(t), p)

    def gfm_field(x, t):
        return gfm_flow(x, p)

    edges = (
        Edge(
            source=GFL,
            target=GFM,
            guard=lambda x, t: p.v_low - v_grid(t),
            reset=lambda x: current_clamp(x, p),
            guard_gradient=None,
            reset_jacobian=lambda x: current_clamp_jacobian(x, p),
            label="GFL->GFM",
        ),
        Edge(
            source=GFM,
            target=GFL,
            guard=lambda x, t: v_grid(t) - p.v_high,
            reset=lambda x: np.asarray(x, dtype=float).copy(),
            guard_gradient=None,
            reset_jacobian=lambda x: np.eye(4),
            label="GFM->GFL",
        ),
    )
    invariants = {
        GFL: lambda x, t: v_grid(t) >= p.v_low - INVARIANT_TOL,
        GFM: lambda x, t: v_grid(t) <= p.v_high + INVARIANT_TOL,
    }
    return HybridAutomaton(
        dim=4,
        modes=(GFL, GFM),
        flows={GFL: gfl_field, GFM: gfm_field},
        edges=edges,
        invariants=invariants,
    )


def blended_field(
    p: InverterParams, v_grid: Callable[[float], float]
) -> Callable[[np.ndarray, float], np.ndarray]:
    """The continuous-model process field ``f(x, t)`` for the EKF."""

    def f(x, t):
        return blended_flow(x, v_grid(t), p)

    return f


def gfm_system_matrices(p: InverterParams) -> Tuple[np.ndarray, np.ndarray]:
    """(A, b) with ``gfm_flow(x) == A x + b``; the GFM embedding is affine."""
    wl = p.omega * p.l_pu
    a = np.array(
        [
            [-1.0 / p.tau_i, 0.0, -1.0 / (p.r_pu * p.tau_i), 0.0],
            [0.0, -1.0 / p.tau_i, 0.0, -1.0 / (p.r_pu * p.tau_i)],
            [-p.r_pu / p.l_pu, wl / p.l_pu, 0.0, 0.0],
            [-wl / p.l_pu, -p.r_pu / p.l_pu, 0.0, 0.0],
        ]
    )
    b = np.array([p.v_ref / (p.r_pu * p.tau_i), 0.0, 0.0, 0.0])
    return a, b


# ---------------------------------------------------------------------------
# Scenario: exogenous profile + noise + seed


def reference_noise(
    q_diagonal: float = REFERENCE_Q_INTENSITY,
    sigma_current: float = REFERENCE_SIGMA_CURRENT,
    sigma_voltage: float = REFERENCE_SIGMA_VOLTAGE,
    dt: float = 1e-4,
) -> NoiseModel:
    """Default noise model on the [i_d, i_q, v_d, v_q] state.

    Every state is measured directly (H = I).  The continuous-time
    process-noise intensity ``q_diagonal * I`` is discretized per step as
    ``Q dt``; measurement standard deviations are per-channel.
    """
    q = q_diagonal * dt * np.eye(4)
    r = np.diag(
        [
            sigma_current**2,
            sigma_current**2,
            sigma_voltage**2,
            sigma_voltage**2,
        ]
    )
    return NoiseModel(q=q, r=r, h=np.eye(4))


def reference_profile() -> PiecewiseLinearProfile:
    """Nominal voltage, a dip to 0.5 pu at 50 ms, recovery at 120 ms."""
    return PiecewiseLinearProfile(
        times=(0.0, 0.05, 0.06, 0.12, 0.13, 0.20),
        values=(1.0, 1.0, 0.5, 0.5, 1.0, 1.0),
    )


@dataclass(frozen=True)
class InverterScenario:
    """A reproducible inverter experiment: grid profile, noise, and seed."""

    horizon: float
    dt: float
    v_grid: PiecewiseLinearProfile
    seed: int
    x0: np.ndarray
    params: InverterParams
    noise: NoiseModel
    initial_mode: str = GFL

    def __post_init__(self):
        if self.horizon <= 0.0 or self.dt <= 0.0:
            raise ArgumentError("horizon and dt must be positive")
        ratio = self.horizon / self.dt
        if abs(self.horizon - round(ratio) * self.dt) > 1e-12:
            raise ArgumentError("dt must divide the horizon within 1e-12")
        if self.v_grid.times[0] > 0.0 or self.v_grid.times[-1] < self.horizon - 1e-12:
            raise ArgumentError("the grid profile must cover [0, horizon]")
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=float))
        if self.x0.shape != (4,):
            raise ArgumentError("inverter state must have 4 entries")

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))

    def grid_times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt


def reference_scenario(
    seed: int = 42,
    params: Optional[InverterParams] = None,
    noise: Optional[NoiseModel] = None,
    horizon: float = 0.20,
    dt: float = 1e-4,
) -> InverterScenario:
    """The reference dip/recovery experiment (initial state v_d = 1, rest 0)."""
    params = params if params is not None else InverterParams()
    noise = noise if noise is not None else reference_noise(dt=dt)
    return InverterScenario(
        horizon=horizon,
        dt=dt,
        v_grid=reference_profile(),
        seed=seed,
        x0=np.array([0.0, 0.0, 1.0, 0.0]),
        params=params,
        noise=noise,
    )


# ---------------------------------------------------------------------------
# Deterministic Gaussian sampling


class GaussianStream:
    """Box-Muller Gaussian stream over a seeded 64-bit PCG64 generator.

    Identical seeds give bit-identical streams within one build of this
    package (the contract needed for byte-reproducible experiments).
    """

    def __init__(self, seed: int):
        self._uniforms = np.random.default_rng(np.random.PCG64(seed))
        self._spare: Optional[float] = None

    def normal(self) -> float:
        if self._spare is not None:
            z = self._spare
            self._spare = None
            return z
        u1 = self._uniforms.random()
        u2 = self._uniforms.random()
        radius = math.sqrt(-2.0 * math.log(1.0 - u1))
        angle = 2.0 * math.pi * u2
        self._spare = radius * math.sin(angle)
        return radius * math.cos(angle)

    def normals(self, shape) -> np.ndarray:
        out = np.empty(int(np.prod(shape)))
        for i in range(out.size):
            out[i] = self.normal()
        return out.reshape(shape)


def _covariance_sqrt(r: np.ndarray) -> np.ndarray:
    if not np.any(r):
        return np.zeros_like(r)
    try:
        return np.linalg.cholesky(r)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(r)
        return v @ np.diag(np.sqrt(np.clip(w, 0.0, None)))


def generate_truth_and_measurements(
    scenario: InverterScenario, max_jumps: int = 50
) -> Tuple[HybridTrajectory, np.ndarray]:
    """Simulate the hybrid automaton as ground truth and synthesize measurements.

    Measurements are ``z_k = H x_k + n_k`` on the scenario grid with
    ``n_k ~ N(0, R)`` drawn from the seeded Box-Muller stream; the same
    seed always reproduces the identical stream.
    """
    automaton = inverter_automaton(scenario.params, scenario.v_grid)
    truth = simulate(
        automaton,
        scenario.x0,
        scenario.horizon,
        max_jumps=max_jumps,
        dt=scenario.dt,
        mode0=scenario.initial_mode,
    )
    states = truth.grid_states(0.0, scenario.dt, scenario.n_steps)
    h = scenario.noise.h
    sqrt_r = _covariance_sqrt(scenario.noise.r)
    stream = GaussianStream(scenario.seed)
    draws = stream.normals((scenario.n_steps + 1, h.shape[0]))
    z = states @ h.T + draws @ sqrt_r.T
    return truth, z


# ---------------------------------------------------------------------------
# Two-line SMIB example


def sine_power(amplitude: float) -> Callable[[float], float]:
    """The classic electrical-power curve P_e(delta) = amplitude * sin(delta)."""

    def p_e(delta: float) -> float:
        return amplitude * math.sin(delta)

    return p_e


@dataclass(frozen=True)
class SmibParams:
    """Swing-equation and line-switching parameters (per-unit)."""

    m: float = 0.1
    d: float = 0.05
    p_m: float = 1.0
    p_e: Callable[[float], float] = field(default_factory=lambda: sine_power(1.5))
    i_max: float = 1.4
    p_min: float = 0.1
    p_max: float = 0.4

    def __post_init__(self):
        if self.m <= 0.0:
            raise ArgumentError("inertia must be positive")
        if self.d < 0.0:
            raise ArgumentError("damping must be non-negative")
        if not self.p_min < self.p_max:
            raise ArgumentError("restoration band requires p_min < p_max")


LINE1 = "line1"
LINE2 = "line2"


def smib_state(delta: float, omega: float, line: int = 1) -> np.ndarray:
    """Pack rotor angle, speed deviation and the active-line label."""
    if line not in (1, 2):
        raise ArgumentError(f"line must be 1 or 2, got {line}")
    return np.array([delta, omega, float(line)])


def smib_system(p: SmibParams) -> FlowJumpSystem:
    """Two-line SMIB as a flow/jump system over state [delta, omega, line].

    The two lines are electrically identical, so the swing dynamics are
    the same in both discrete states and the jump map only toggles the
    line label.  Line 1 trips when its current magnitude exceeds
    ``i_max``; it is restored once the power it would carry re-enters
    ``[p_min, p_max]``.  Line current is |P_e(delta)| at 1 pu voltage.
    """

    def flow(x, t):
        delta, omega = x[0], x[1]
        return np.array(
            [omega, (p.p_m - p.p_e(delta) - p.d * omega) / p.m, 0.0]
        )

    def line1_current(x) -> float:
        return abs(p.p_e(x[0]))

    def jump_margin(x, t) -> float:
        if x[2] < 1.5:  # line 1 active: trip on overcurrent
            return line1_current(x) - p.i_max
        pe = p.p_e(x[0])  # line 2 active: restore inside the band
        return min(pe - p.p_min, p.p_max - pe)

    def jump_map(x) -> np.ndarray:
        out = np.asarray(x, dtype=float).copy()
        out[2] = 2.0 if x[2] < 1.5 else 1.0
        return out

    def flow_set(x, t) -> bool:
        return jump_margin(x, t) <= INVARIANT_TOL

    def label(x) -> str:
        return LINE1 if x[2] < 1.5 else LINE2

    return FlowJumpSystem(
        dim=3,
        flow_map=flow,
        jump_set=jump_margin,
        jump_map=jump_map,
        flow_set=flow_set,
        mode_label=label,
    )


def swing_field(p: SmibParams) -> Callable[[np.ndarray, float], np.ndarray]:
    """The bare 2-state swing vector field (no line label), for oracles."""

    def flow(x, t):
        delta, omega = x
        return np.array([omega, (p.p_m - p.p_e(delta) - p.d * omega) / p.m])

    return flow
