"""Switched systems, their flow/jump lift, and direct piecewise integration.

A switched system pairs a family of vector fields with a piecewise-constant
switching signal.  The lift augments the state with the active segment
index: the flow leaves the index constant and a time-triggered jump
increments it at each switch instant, which reproduces the switched
dynamics inside the flow/jump formalism.  ``simulate_switched`` integrates
the segments directly (no event machinery) and serves as the independent
reference the lift is checked against.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

from .errors import ArgumentError
from .integrate import rk4_step
from .systems import FlowJumpSystem, HORIZON_REACHED, HybridTrajectory, JumpRecord


@dataclass(frozen=True)
class SwitchedSystem:
    """Vector fields f_1..f_N selected by a piecewise-constant signal.

    ``mode_sequence`` holds 1-based subsystem indices per segment;
    ``switch_times`` are the strictly increasing instants separating the
    segments, so ``len(mode_sequence) == len(switch_times) + 1``.  The
    signal is right-continuous: the new mode applies from its switch
    instant onwards.
    """

    dim: int
    fields: Tuple[Callable, ...]
    mode_sequence: Tuple[int, ...]
    switch_times: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.dim < 1:
            raise ArgumentError(f"dimension must be >= 1, got {self.dim}")
        if not self.fields:
            raise ArgumentError("at least one subsystem is required")
        if len(self.mode_sequence) != len(self.switch_times) + 1:
            raise ArgumentError(
                "mode_sequence must have one more entry than switch_times"
            )
        n = len(self.fields)
        for m in self.mode_sequence:
            if not 1 <= m <= n:
                raise ArgumentError(f"mode index {m} outside 1..{n}")
        times = self.switch_times
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ArgumentError("switch instants must be strictly increasing")

    def signal(self, t: float) -> int:
        """The active subsystem index (1-based) at time ``t``."""
        return self.mode_sequence[bisect.bisect_right(self.switch_times, t)]

    def segment_of(self, t: float) -> int:
        return bisect.bisect_right(self.switch_times, t)


def lift_switched(sw: SwitchedSystem) -> FlowJumpSystem:
    """Lift a switched system to a flow/jump system over (z, segment).

    The augmented state appends the current segment index; the jump set is
    the time margin ``t - next_switch_instant`` and the jump map advances
    the segment while leaving the continuous state untouched.
    """
    n = sw.dim
    n_segments = len(sw.mode_sequence)

    def flow_map(x: np.ndarray, t: float) -> np.ndarray:
        seg = int(round(x[n]))
        f = sw.fields[sw.mode_sequence[seg] - 1]
        out = np.empty(n + 1)
        out[:n] = f(x[:n], t)
        out[n] = 0.0
        return out

    def jump_set(x: np.ndarray, t: float) -> float:
        seg = int(round(x[n]))
        if seg >= n_segments - 1:
            return -np.inf
        return t - sw.switch_times[seg]

    def jump_map(x: np.ndarray) -> np.ndarray:
        out = x.copy()
        out[n] = round(x[n]) + 1.0
        return out

    def mode_label(x: np.ndarray) -> str:
        seg = int(round(x[n]))
        return f"mode {sw.mode_sequence[seg]}"

    return FlowJumpSystem(
        dim=n + 1,
        flow_map=flow_map,
        jump_set=jump_set,
        jump_map=jump_map,
        mode_label=mode_label,
    )


def lift_state(sw: SwitchedSystem, z0, t0: float = 0.0) -> np.ndarray:
    """Initial augmented state for the lift of ``sw`` starting at ``t0``."""
    z0 = np.asarray(z0, dtype=float)
    return np.concatenate([z0, [float(sw.segment_of(t0))]])


def simulate_switched(
    sw: SwitchedSystem,
    x0,
    horizon: float,
    dt: float,
    t0: float = 0.0,
) -> HybridTrajectory:
    """Integrate the switched system directly, segment by segment.

    Walks the same uniform grid as :func:`hdsim.simulate.simulate`, splitting
    any step that straddles a switch instant exactly at that instant, and
    records a pre/post sample pair there so the trajectory shape matches
    the lifted simulation sample for sample.
    """
    if horizon <= 0.0 or dt <= 0.0:
        raise ArgumentError("horizon and dt must be positive")
    x = np.asarray(x0, dtype=float).copy()
    t = t0
    t_end = t0 + horizon
    seg = sw.segment_of(t0)
    traj = HybridTrajectory()
    j = 0
    traj.append(t, j, f"mode {sw.mode_sequence[seg]}", x)
    k = 0
    while t < t_end - 1e-15 * max(1.0, abs(t_end)):
        k_next = int(np.floor((t - t0) / dt + 1e-9)) + 1
        t_next = min(t0 + k_next * dt, t_end)
        # Split at the next switch instant when it falls inside this step.
        if seg < len(sw.switch_times) and t < sw.switch_times[seg] <= t_next:
            s = sw.switch_times[seg]
            if s > t:
                x = rk4_step(sw.fields[sw.mode_sequence[seg] - 1], x, t, s - t)
                t = s
            traj.append(t, j, f"mode {sw.mode_sequence[seg]}", x)
            traj.jumps.append(
                JumpRecord(
                    t=t,
                    j_before=j,
                    edge="switch",
                    state_before=x.copy(),
                    state_after=x.copy(),
                    mode_before=f"mode {sw.mode_sequence[seg]}",
                    mode_after=f"mode {sw.mode_sequence[seg + 1]}",
                )
            )
            seg += 1
            j += 1
            traj.append(t, j, f"mode {sw.mode_sequence[seg]}", x)
            continue
        x = rk4_step(sw.fields[sw.mode_sequence[seg] - 1], x, t, t_next - t)
        t = t_next
        traj.append(t, j, f"mode {sw.mode_sequence[seg]}", x)
    traj.termination = HORIZON_REACHED
    return traj
