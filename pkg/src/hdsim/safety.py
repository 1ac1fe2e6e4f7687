"""Sampling-based safety falsification.

This checker simulates finitely many sampled initial conditions and
reports the first trajectory that enters the unsafe set.  It can only
falsify: "no counterexample found" is evidence, not a proof, since no
over-approximation of the reachable set is computed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .errors import ArgumentError
from .simulate import simulate
from .systems import FlowJumpSystem, HybridAutomaton, HybridTrajectory

NO_COUNTEREXAMPLE = "no-counterexample-found"
UNSAFE = "unsafe"


@dataclass
class SafetyVerdict:
    status: str
    samples_checked: int
    witness: Optional[HybridTrajectory] = None
    witness_time: Optional[float] = None
    witness_initial_state: Optional[np.ndarray] = None

    @property
    def unsafe(self) -> bool:
        return self.status == UNSAFE


def box_sampler(lo, hi, seed: int) -> Callable[[], np.ndarray]:
    """Uniform sampler over the axis-aligned box ``[lo, hi]``, seeded."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if lo.shape != hi.shape or np.any(hi < lo):
        raise ArgumentError("box bounds must have equal shape with hi >= lo")
    rng = np.random.default_rng(seed)

    def sample() -> np.ndarray:
        return lo + (hi - lo) * rng.random(lo.shape)

    return sample


def check_safety(
    system: Union[FlowJumpSystem, HybridAutomaton],
    init_sampler: Callable,
    unsafe: Callable[[np.ndarray], bool],
    horizon: float,
    samples: int,
    dt: float,
    max_jumps: int = 100,
    mode0: Optional[str] = None,
) -> SafetyVerdict:
    """Falsify a safety property by simulating sampled initial states.

    ``init_sampler`` returns an initial state per call (or a
    ``(mode, state)`` pair for automata when the mode varies).  ``unsafe``
    is a predicate on the continuous state, evaluated at every recorded
    sample including localized event times.
    """
    if samples < 1:
        raise ArgumentError(f"samples must be >= 1, got {samples}")
    for i in range(samples):
        drawn = init_sampler()
        if isinstance(drawn, tuple) and len(drawn) == 2:
            m0, x0 = drawn
        else:
            m0, x0 = mode0, drawn
        traj = simulate(system, x0, horizon, max_jumps, dt, mode0=m0)
        for s in traj.samples:
            if unsafe(s.state):
                return SafetyVerdict(
                    status=UNSAFE,
                    samples_checked=i + 1,
                    witness=traj,
                    witness_time=s.time.t,
                    witness_initial_state=np.asarray(x0, dtype=float),
                )
    return SafetyVerdict(status=NO_COUNTEREXAMPLE, samples_checked=samples)
