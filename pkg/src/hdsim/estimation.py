"""Extended Kalman filtering with saltation-matrix covariance transport.

The filter follows the classic two-step recursion.  Prediction advances
the mean one RK4 step and propagates covariance through the numerical
Jacobian of that one-step transition map; the correction is the standard
gain/mean/covariance update.  When the process model is a hybrid
automaton, a detected guard crossing inside a step is localized, the
mean passes through the reset map, and the covariance passes through the
saltation matrix, which extends the reset Jacobian with the vector-field
discontinuity across the guard surface.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Union

import numpy as np

from .errors import ArgumentError, GrazingError, NumericalFailureError
from .events import locate_event
from .integrate import rk4_step
from .systems import (
    Edge,
    HybridAutomaton,
    HybridTrajectory,
    JumpRecord,
    VectorField,
)

JACOBIAN_STEP_SCALE = 1e-6
SYMMETRY_TOL = 1e-12
PSD_TOL = -1e-10
TRANSVERSALITY_TOL = 1e-12


def symmetrize(p: np.ndarray) -> np.ndarray:
    return 0.5 * (p + p.T)


@dataclass
class GaussianBelief:
    """State estimate as mean and covariance.

    The covariance is symmetrized on construction and must be positive
    semidefinite up to a small eigenvalue tolerance.
    """

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float)
        p = np.asarray(self.covariance, dtype=float)
        n = self.mean.size
        if self.mean.ndim != 1:
            raise ArgumentError("mean must be a vector")
        if p.shape != (n, n):
            raise ArgumentError(f"covariance must be ({n}, {n}), got {p.shape}")
        if not np.all(np.isfinite(self.mean)) or not np.all(np.isfinite(p)):
            raise ArgumentError("belief entries must be finite")
        scale = max(1.0, float(np.max(np.abs(p))))
        if np.max(np.abs(p - p.T)) > SYMMETRY_TOL * scale:
            raise ArgumentError("covariance is not symmetric within tolerance")
        p = symmetrize(p)
        min_eig = float(np.linalg.eigvalsh(p)[0])
        if min_eig < PSD_TOL * scale:
            raise ArgumentError(
                f"covariance is not PSD (min eigenvalue {min_eig:.3e})"
            )
        self.covariance = p

    @property
    def dim(self) -> int:
        return self.mean.size


@dataclass(frozen=True)
class NoiseModel:
    """Process noise Q (applied per discrete step), measurement noise R, and H.

    R may be singular (even zero, for noiseless self-tracking studies);
    the update step raises only if the innovation covariance H P H^T + R
    itself becomes singular.
    """

    q: np.ndarray
    r: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        q = np.atleast_2d(np.asarray(self.q, dtype=float))
        r = np.atleast_2d(np.asarray(self.r, dtype=float))
        h = np.atleast_2d(np.asarray(self.h, dtype=float))
        if q.shape[0] != q.shape[1]:
            raise ArgumentError("Q must be square")
        if r.shape[0] != r.shape[1]:
            raise ArgumentError("R must be square")
        if h.shape != (r.shape[0], q.shape[0]):
            raise ArgumentError(
                f"H must be ({r.shape[0]}, {q.shape[0]}), got {h.shape}"
            )
        for name, m in (("Q", q), ("R", r)):
            scale = max(1.0, float(np.max(np.abs(m))))
            if np.max(np.abs(m - m.T)) > SYMMETRY_TOL * scale:
                raise ArgumentError(f"{name} must be symmetric")
            if float(np.linalg.eigvalsh(symmetrize(m))[0]) < PSD_TOL * scale:
                raise ArgumentError(f"{name} must be positive semidefinite")
        object.__setattr__(self, "q", symmetrize(q))
        object.__setattr__(self, "r", symmetrize(r))
        object.__setattr__(self, "h", h)

    @property
    def state_dim(self) -> int:
        return self.q.shape[0]

    @property
    def measurement_dim(self) -> int:
        return self.r.shape[0]


def numerical_jacobian(fn: Callable[[np.ndarray], np.ndarray], x) -> np.ndarray:
    """Central-difference Jacobian with per-coordinate step 1e-6*max(1, |x_i|)."""
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(fn(x), dtype=float)
    if not np.all(np.isfinite(f0)):
        raise NumericalFailureError(f"map is non-finite at {x}")
    jac = np.empty((f0.size, x.size))
    for i in range(x.size):
        h = JACOBIAN_STEP_SCALE * max(1.0, abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        fp = np.asarray(fn(xp), dtype=float)
        fm = np.asarray(fn(xm), dtype=float)
        if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fm))):
            raise NumericalFailureError(
                f"map is non-finite near {x} (coordinate {i})"
            )
        jac[:, i] = (fp - fm) / (2.0 * h)
    return jac


def ekf_predict(
    belief: GaussianBelief,
    flow: VectorField,
    dt: float,
    noise: NoiseModel,
    t0: float = 0.0,
    q_scale: float = 1.0,
) -> GaussianBelief:
    """One prediction step: RK4 mean propagation, F P F^T + Q covariance.

    ``q_scale`` lets a caller apportion the per-step Q across a split step
    (event localization splits a step at the jump time); it is 1 for a
    whole step.
    """
    if dt <= 0.0:
        raise ArgumentError(f"dt must be positive, got {dt}")

    def transition(x: np.ndarray) -> np.ndarray:
        return rk4_step(flow, x, t0, dt)

    mean_next = transition(belief.mean)
    if not np.all(np.isfinite(mean_next)):
        raise NumericalFailureError(f"prediction diverged at t={t0 + dt}", time=t0 + dt)
    f_jac = numerical_jacobian(transition, belief.mean)
    p_next = f_jac @ belief.covariance @ f_jac.T + q_scale * noise.q
    return GaussianBelief(mean_next, symmetrize(p_next))


def ekf_update(belief: GaussianBelief, z, noise: NoiseModel) -> GaussianBelief:
    """Measurement correction: K = P H^T S^-1, mean += K innovation,
    P = (I - K H) P, then symmetrization."""
    z = np.asarray(z, dtype=float)
    h = noise.h
    if z.shape != (h.shape[0],):
        raise ArgumentError(f"measurement must have length {h.shape[0]}")
    p = belief.covariance
    s = h @ p @ h.T + noise.r
    try:
        k_gain = np.linalg.solve(s.T, (p @ h.T).T).T
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError(f"singular innovation covariance: {exc}") from exc
    if not np.all(np.isfinite(k_gain)):
        raise NumericalFailureError("non-finite Kalman gain")
    mean = belief.mean + k_gain @ (z - h @ belief.mean)
    p_post = (np.eye(belief.dim) - k_gain @ h) @ p
    return GaussianBelief(mean, symmetrize(p_post))


@dataclass(frozen=True)
class SaltationMatrix:
    """First-order trajectory sensitivity across one jump."""

    matrix: np.ndarray
    jump_time: float
    edge: str = ""

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ArgumentError("saltation matrix must be square")
        if not np.all(np.isfinite(m)):
            raise ArgumentError("saltation matrix entries must be finite")
        object.__setattr__(self, "matrix", m)


def saltation_matrix(
    reset: Callable[[np.ndarray], np.ndarray],
    f_pre: VectorField,
    f_post: VectorField,
    guard_gradient: Optional[Callable[[np.ndarray, float], np.ndarray]],
    x_minus: np.ndarray,
    t: float,
    reset_jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    edge: str = "",
) -> SaltationMatrix:
    """Build the saltation matrix at a localized jump.

    For a transversal state-dependent guard g with gradient ``grad``:

        Xi = DR + (f_post(R(x)) - DR f_pre(x)) grad^T / (grad . f_pre(x))

    For a state-independent guard (``guard_gradient`` is None or returns
    the zero vector — the exogenous, time-triggered case) the jump time
    does not vary with the state and Xi reduces to the reset Jacobian
    exactly.  The caller must hand in ``x_minus`` on the guard surface.
    """
    x_minus = np.asarray(x_minus, dtype=float)
    if reset_jacobian is not None:
        d_reset = np.asarray(reset_jacobian(x_minus), dtype=float)
    else:
        d_reset = numerical_jacobian(reset, x_minus)

    if guard_gradient is None:
        return SaltationMatrix(d_reset, jump_time=t, edge=edge)
    grad = np.asarray(guard_gradient(x_minus, t), dtype=float)
    if not np.any(grad):
        return SaltationMatrix(d_reset, jump_time=t, edge=edge)

    f_minus = np.asarray(f_pre(x_minus, t), dtype=float)
    denom = float(grad @ f_minus)
    if abs(denom) < TRANSVERSALITY_TOL:
        raise GrazingError(
            f"guard {edge or '?'} is grazing at t={t}: grad.f_pre = {denom:.3e}"
        )
    f_plus = np.asarray(f_post(np.asarray(reset(x_minus), dtype=float), t), dtype=float)
    xi = d_reset + np.outer(f_plus - d_reset @ f_minus, grad) / denom
    return SaltationMatrix(xi, jump_time=t, edge=edge)


def propagate_belief_through_jump(
    belief: GaussianBelief,
    reset: Callable[[np.ndarray], np.ndarray],
    xi: SaltationMatrix,
) -> GaussianBelief:
    """Map a belief through a jump: mean by the reset, covariance by Xi P Xi^T."""
    m = xi.matrix
    if m.shape != (belief.dim, belief.dim):
        raise ArgumentError(
            f"saltation matrix is {m.shape}, belief dimension is {belief.dim}"
        )
    mean = np.asarray(reset(belief.mean), dtype=float)
    if mean.shape != belief.mean.shape:
        raise ArgumentError("reset changed the state dimension")
    p = symmetrize(m @ belief.covariance @ m.T)
    return GaussianBelief(mean, p)


@dataclass
class EkfRun:
    """Grid-aligned filter output: posterior beliefs plus jump bookkeeping."""

    times: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    modes: List[str]
    jump_counts: np.ndarray
    jumps: List[JumpRecord] = field(default_factory=list)

    def trajectory(self) -> HybridTrajectory:
        """Estimate trajectory on the hybrid time domain (with jump records)."""
        traj = HybridTrajectory()
        jump_iter = iter(self.jumps)
        pending = next(jump_iter, None)
        for k, t in enumerate(self.times):
            while pending is not None and pending.t <= t:
                traj.append(pending.t, pending.j_before, pending.mode_before,
                            pending.state_before)
                traj.jumps.append(pending)
                traj.append(pending.t, pending.j_before + 1, pending.mode_after,
                            pending.state_after)
                pending = next(jump_iter, None)
            traj.append(float(t), int(self.jump_counts[k]), self.modes[k],
                        self.means[k])
        return traj


def run_ekf(
    process: Union[HybridAutomaton, VectorField],
    scenario,
    measurements,
    p0: float = 1e-3,
) -> EkfRun:
    """Run the EKF over a scenario with either a hybrid or a continuous model.

    ``process`` is the hybrid automaton (explicit switching, resets, and
    saltation transport) or a blended continuous vector field ``f(x, t)``.
    ``scenario`` supplies the grid (``horizon``, ``dt``), the initial state
    and mode, and the noise model; ``measurements`` is the ``(n_steps+1, m)``
    stream aligned with the grid, one row per grid time starting at t=0.

    The filter is initialized at the true initial state with covariance
    ``p0 * I`` and corrected with the measurement at every grid time,
    including t=0.  Hybrid mode decisions replay the scenario's measured
    grid-voltage signal through the automaton guards (with hysteresis),
    not the estimated state.
    """
    n_steps = scenario.n_steps
    dt = scenario.dt
    noise = scenario.noise
    z = np.asarray(measurements, dtype=float)
    if z.ndim == 1:
        z = z[:, None]
    if z.shape[0] < n_steps + 1:
        raise ArgumentError(
            f"measurement stream has {z.shape[0]} rows; the horizon needs "
            f"{n_steps + 1}"
        )
    if z.shape[1] != noise.measurement_dim:
        raise ArgumentError(
            f"measurement rows have length {z.shape[1]}, expected "
            f"{noise.measurement_dim}"
        )

    hybrid = isinstance(process, HybridAutomaton)
    if hybrid:
        mode = scenario.initial_mode
        flow = process.flows[mode]
    else:
        mode = "blended"
        flow = process

    belief = GaussianBelief(scenario.x0, p0 * np.eye(scenario.x0.size))
    belief = ekf_update(belief, z[0], noise)

    times = np.empty(n_steps + 1)
    means = np.empty((n_steps + 1, belief.dim))
    covs = np.empty((n_steps + 1, belief.dim, belief.dim))
    modes: List[str] = []
    jump_counts = np.zeros(n_steps + 1, dtype=int)
    jumps: List[JumpRecord] = []
    times[0] = 0.0
    means[0] = belief.mean
    covs[0] = belief.covariance
    modes.append(mode)
    j = 0

    for k in range(1, n_steps + 1):
        t_prev = (k - 1) * dt
        t_k = k * dt
        t_cur = t_prev
        if hybrid:
            guard_budget = 10
            while guard_budget:
                # Fire a guard already enabled at the current instant.
                edge = _enabled_edge(process, mode, belief.mean, t_cur)
                if edge is not None:
                    belief, mode, flow = _jump_belief(
                        process, edge, belief, mode, t_cur, jumps, j
                    )
                    j += 1
                    guard_budget -= 1
                    continue
                # Look for a crossing inside the remaining step.
                hit = _first_crossing(process, mode, flow, belief.mean, t_cur, t_k)
                if hit is None:
                    break
                t_star, edge = hit
                if t_star > t_cur:
                    belief = ekf_predict(
                        belief, flow, t_star - t_cur, noise,
                        t0=t_cur, q_scale=(t_star - t_cur) / dt,
                    )
                    t_cur = t_star
                belief, mode, flow = _jump_belief(
                    process, edge, belief, mode, t_cur, jumps, j
                )
                j += 1
                guard_budget -= 1
        if t_k > t_cur:
            belief = ekf_predict(
                belief, flow, t_k - t_cur, noise,
                t0=t_cur, q_scale=(t_k - t_cur) / dt,
            )
        belief = ekf_update(belief, z[k], noise)
        times[k] = t_k
        means[k] = belief.mean
        covs[k] = belief.covariance
        modes.append(mode)
        jump_counts[k] = j

    return EkfRun(times, means, covs, modes, jump_counts, jumps)


def _enabled_edge(automaton, mode, mean, t) -> Optional[Edge]:
    for e in automaton.outgoing(mode):
        if e.guard(mean, t) >= 0.0:
            return e
    return None


def _first_crossing(automaton, mode, flow, mean, t_lo, t_hi):
    if t_hi <= t_lo:
        return None

    def interpolant(s: float) -> np.ndarray:
        if s <= t_lo:
            return mean
        return rk4_step(flow, mean, t_lo, s - t_lo)

    best = None
    for e in automaton.outgoing(mode):
        if e.guard(interpolant(t_hi), t_hi) >= 0.0:
            t_star = locate_event(e.guard, t_lo, t_hi, interpolant)
            if t_star is not None and (best is None or t_star < best[0]):
                best = (t_star, e)
    return best


def _jump_belief(automaton, edge, belief, mode, t, jumps, j):
    f_pre = automaton.flows[mode]
    f_post = automaton.flows[edge.target]
    xi = saltation_matrix(
        edge.reset, f_pre, f_post, edge.guard_gradient, belief.mean, t,
        reset_jacobian=edge.reset_jacobian, edge=edge.label,
    )
    mean_before = belief.mean.copy()
    belief = propagate_belief_through_jump(belief, edge.reset, xi)
    jumps.append(
        JumpRecord(
            t=t,
            j_before=j,
            edge=edge.label,
            state_before=mean_before,
            state_after=belief.mean.copy(),
            mode_before=mode,
            mode_after=edge.target,
        )
    )
    return belief, edge.target, automaton.flows[edge.target]
