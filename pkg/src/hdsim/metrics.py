"""Estimation-error metrics."""

from __future__ import annotations

from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import ArgumentError


def rmse(
    estimates,
    truth,
    times=None,
    windows: Optional[Sequence[Tuple[float, float]]] = None,
) -> np.ndarray:
    """Per-state root-mean-square error between aligned time series.

    ``estimates`` and ``truth`` are ``(n_samples, n_states)`` arrays on
    the same timestamps.  When ``windows`` is given (a list of closed
    ``[lo, hi]`` intervals), the error is restricted to samples whose
    time falls inside any window; ``times`` is then required.

    Returns an ``(n_states,)`` array (``nan`` when a window selection is
    empty).
    """
    est = np.atleast_2d(np.asarray(estimates, dtype=float))
    tru = np.atleast_2d(np.asarray(truth, dtype=float))
    if est.shape != tru.shape:
        raise ArgumentError(
            f"length/shape mismatch: estimates {est.shape} vs truth {tru.shape}"
        )
    if windows is not None:
        if times is None:
            raise ArgumentError("windows require the shared timestamps")
        t = np.asarray(times, dtype=float)
        if t.shape[0] != est.shape[0]:
            raise ArgumentError(
                f"timestamps have length {t.shape[0]}, series have {est.shape[0]}"
            )
        mask = np.zeros(t.shape[0], dtype=bool)
        for lo, hi in windows:
            mask |= (t >= lo) & (t <= hi)
        if not np.any(mask):
            return np.full(est.shape[1], np.nan)
        est = est[mask]
        tru = tru[mask]
    return np.sqrt(np.mean((est - tru) ** 2, axis=0))
