"""Mixed logical dynamical systems: one-step semantics with feasibility check.

The step operation validates a *proposed* assignment of the binary vector
and the auxiliary reals against the inequality constraints and then
evaluates the state and output updates.  It deliberately does not solve
for the assignment: that would require a mixed-integer solver, which is
out of scope here.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import ArgumentError, InfeasibleError

CONSTRAINT_TOL = 1e-9


def _mat(m, rows: int, cols: int, name: str) -> np.ndarray:
    a = np.zeros((rows, cols)) if m is None else np.asarray(m, dtype=float)
    if a.shape != (rows, cols):
        raise ArgumentError(f"{name} must have shape ({rows}, {cols}), got {a.shape}")
    return a


@dataclass(frozen=True)
class MldSystem:
    """Linear updates over mixed real/binary variables with constraints.

    State update      x+ = A x + B1 u + B2 d + B3 z
    Output            y  = C x + D1 u + D2 d + D3 z
    Constraints       E2 d + E3 z <= E1 u + E4 x + E5

    ``d`` is the binary vector, ``z`` the real auxiliary vector.  Matrices
    left as ``None`` default to zeros of the right shape.
    """

    n_x: int
    n_u: int
    n_d: int
    n_z: int
    n_y: int
    n_c: int
    a: np.ndarray = None
    b1: np.ndarray = None
    b2: np.ndarray = None
    b3: np.ndarray = None
    c: np.ndarray = None
    d1: np.ndarray = None
    d2: np.ndarray = None
    d3: np.ndarray = None
    e1: np.ndarray = None
    e2: np.ndarray = None
    e3: np.ndarray = None
    e4: np.ndarray = None
    e5: np.ndarray = None

    def __post_init__(self):
        for dim, name in [(self.n_x, "n_x"), (self.n_y, "n_y")]:
            if dim < 0:
                raise ArgumentError(f"{name} must be non-negative")
        object.__setattr__(self, "a", _mat(self.a, self.n_x, self.n_x, "A"))
        object.__setattr__(self, "b1", _mat(self.b1, self.n_x, self.n_u, "B1"))
        object.__setattr__(self, "b2", _mat(self.b2, self.n_x, self.n_d, "B2"))
        object.__setattr__(self, "b3", _mat(self.b3, self.n_x, self.n_z, "B3"))
        object.__setattr__(self, "c", _mat(self.c, self.n_y, self.n_x, "C"))
        object.__setattr__(self, "d1", _mat(self.d1, self.n_y, self.n_u, "D1"))
        object.__setattr__(self, "d2", _mat(self.d2, self.n_y, self.n_d, "D2"))
        object.__setattr__(self, "d3", _mat(self.d3, self.n_y, self.n_z, "D3"))
        object.__setattr__(self, "e1", _mat(self.e1, self.n_c, self.n_u, "E1"))
        object.__setattr__(self, "e2", _mat(self.e2, self.n_c, self.n_d, "E2"))
        object.__setattr__(self, "e3", _mat(self.e3, self.n_c, self.n_z, "E3"))
        object.__setattr__(self, "e4", _mat(self.e4, self.n_c, self.n_x, "E4"))
        e5 = np.zeros(self.n_c) if self.e5 is None else np.asarray(self.e5, float)
        if e5.shape != (self.n_c,):
            raise ArgumentError(f"E5 must have length {self.n_c}, got {e5.shape}")
        object.__setattr__(self, "e5", e5)


def _vec(v, length: int, name: str) -> np.ndarray:
    a = np.asarray(v, dtype=float).reshape(-1) if v is not None else np.zeros(length)
    if a.shape != (length,):
        raise ArgumentError(f"{name} must have length {length}, got {a.shape}")
    return a


def mld_step(sys: MldSystem, x, u, delta, z) -> Tuple[np.ndarray, np.ndarray]:
    """Check a proposed ``(delta, z)`` and evaluate one MLD step.

    Returns ``(x_next, y)``.

    Raises
    ------
    ArgumentError
        If a ``delta`` entry is not exactly 0 or 1, or a dimension is off.
    InfeasibleError
        If ``E2 d + E3 z <= E1 u + E4 x + E5`` fails beyond tolerance;
        lists the violated rows (1-based).
    """
    x = _vec(x, sys.n_x, "x")
    u = _vec(u, sys.n_u, "u")
    delta = _vec(delta, sys.n_d, "delta")
    z = _vec(z, sys.n_z, "z")
    bad = [i for i, d in enumerate(delta) if d not in (0.0, 1.0)]
    if bad:
        raise ArgumentError(f"delta entries must be binary; offending indices {bad}")

    lhs = sys.e2 @ delta + sys.e3 @ z
    rhs = sys.e1 @ u + sys.e4 @ x + sys.e5
    violated = np.nonzero(lhs > rhs + CONSTRAINT_TOL)[0]
    if violated.size:
        rows = [int(i) + 1 for i in violated]
        gaps = [float(lhs[i] - rhs[i]) for i in violated]
        raise InfeasibleError(
            f"constraint rows {rows} violated by {gaps}", rows=rows
        )

    x_next = sys.a @ x + sys.b1 @ u + sys.b2 @ delta + sys.b3 @ z
    y = sys.c @ x + sys.d1 @ u + sys.d2 @ delta + sys.d3 @ z
    return x_next, y
