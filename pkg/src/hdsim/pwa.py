"""Piecewise affine systems: polyhedral regions with affine updates."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import ArgumentError, UncoveredStateError


@dataclass(frozen=True)
class PwaSystem:
    """Affine region dynamics: ``x+ = A_i x + B_i u + c_i`` on region i.

    A region is the half-space intersection ``P_i x <= q_i``.  Regions are
    tested in order and the lowest index wins on shared boundaries, which
    keeps boundary states deterministic.
    """

    regions: Tuple[Tuple[np.ndarray, np.ndarray], ...]
    dynamics: Tuple[Tuple[np.ndarray, np.ndarray, np.ndarray], ...]

    def __post_init__(self):
        if len(self.regions) != len(self.dynamics) or not self.regions:
            raise ArgumentError(
                "regions and dynamics must have equal, non-zero length"
            )
        n = self.dynamics[0][0].shape[0]
        for i, ((p, q), (a, b, c)) in enumerate(zip(self.regions, self.dynamics)):
            if p.ndim != 2 or p.shape[1] != n:
                raise ArgumentError(f"region {i}: P must be (m, {n}), got {p.shape}")
            if q.shape != (p.shape[0],):
                raise ArgumentError(f"region {i}: q must match P's row count")
            if a.shape != (n, n):
                raise ArgumentError(f"region {i}: A must be ({n}, {n}), got {a.shape}")
            if b.ndim != 2 or b.shape[0] != n:
                raise ArgumentError(f"region {i}: B must have {n} rows")
            if c.shape != (n,):
                raise ArgumentError(f"region {i}: c must have length {n}")

    @property
    def dim(self) -> int:
        return self.dynamics[0][0].shape[0]

    def region_index(self, x: np.ndarray) -> int:
        """Index of the first region containing ``x`` (ties go to the lowest)."""
        x = np.asarray(x, dtype=float)
        for i, (p, q) in enumerate(self.regions):
            if np.all(p @ x <= q):
                return i
        raise UncoveredStateError(f"state {x} lies in no region", state=x)

    def region_memberships(self, x: np.ndarray) -> list:
        """Indices of every region whose test passes at ``x``."""
        x = np.asarray(x, dtype=float)
        return [i for i, (p, q) in enumerate(self.regions) if np.all(p @ x <= q)]


def pwa_step(sys: PwaSystem, x, u) -> np.ndarray:
    """One discrete update of the PWA system from ``x`` under input ``u``."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    i = sys.region_index(x)
    a, b, c = sys.dynamics[i]
    if u.shape != (b.shape[1],):
        raise ArgumentError(f"input must have length {b.shape[1]}, got {u.shape}")
    return a @ x + b @ u + c
