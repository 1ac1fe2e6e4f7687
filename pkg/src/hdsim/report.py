"""Report and CSV persistence.

Floating-point values are serialized with 17 significant digits so the
emitted files round-trip to the exact in-memory doubles, which is what
makes byte-determinism a meaningful contract.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ArgumentError

OVERALL = "overall"
NEAR_SWITCH = "near_switch"

INVERTER_STATES = ("i_d", "i_q", "v_d", "v_q")


def fmt(x: float) -> str:
    """17-significant-digit decimal form (round-trips any float64)."""
    return format(float(x), ".17g")


def write_trajectory_csv(path: str, columns: Sequence[str], rows) -> None:
    """Write a trajectory table; non-float 'mode' cells pass through as text."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            cells = []
            for cell in row:
                if isinstance(cell, str):
                    cells.append(cell)
                elif isinstance(cell, (int, np.integer)):
                    cells.append(str(int(cell)))
                else:
                    cells.append(fmt(cell))
            fh.write(",".join(cells) + "\n")


def read_trajectory_csv(path: str) -> Tuple[List[str], List[List[str]]]:
    """Read a CSV written by this module; '#' comment lines are skipped."""
    header: Optional[List[str]] = None
    rows: List[List[str]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = line.split(",")
            else:
                rows.append(line.split(","))
    if header is None:
        raise ArgumentError(f"{path} holds no CSV header")
    return header, rows


@dataclass
class RmseReport:
    """Per-(filter, state, window) RMSE plus the resolved experiment setup.

    ``runtime_seconds`` is informational only and never serialized, so
    identical configurations produce byte-identical report files.
    """

    entries: Dict[Tuple[str, str, str], float] = field(default_factory=dict)
    states: Tuple[str, ...] = INVERTER_STATES
    filters: Tuple[str, ...] = ()
    switching_instants: Tuple[float, ...] = ()
    windows: Tuple[Tuple[float, float], ...] = ()
    resolved: Dict[str, str] = field(default_factory=dict)
    runtime_seconds: float = 0.0

    def value(self, filt: str, state: str, window: str) -> float:
        return self.entries[(filt, state, window)]

    def table(self) -> str:
        """Aligned text table: one row per filter, near-switch and overall groups."""
        col_names = [f"near:{s}" for s in self.states] + [
            f"overall:{s}" for s in self.states
        ]
        width = 13
        lines = []
        header = "underlying model".ljust(18) + "".join(
            name.rjust(width) for name in col_names
        )
        lines.append(header)
        lines.append("-" * len(header))
        for filt in self.filters:
            cells = []
            for window in (NEAR_SWITCH, OVERALL):
                for state in self.states:
                    cells.append(f"{self.entries[(filt, state, window)]:.3e}".rjust(width))
            lines.append(filt.ljust(18) + "".join(cells))
        return "\n".join(lines)


def write_report_csv(path: str, report: RmseReport) -> None:
    """One report file: '#'-commented aligned table + resolved setup, then CSV rows."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# RMSE report (per-unit)\n")
        for line in report.table().splitlines():
            fh.write("# " + line + "\n")
        if report.switching_instants:
            instants = ", ".join(fmt(t) for t in report.switching_instants)
            fh.write(f"# switching instants (s): {instants}\n")
        else:
            fh.write("# switching instants (s): none\n")
        if report.windows:
            windows = "; ".join(f"[{fmt(a)}, {fmt(b)}]" for a, b in report.windows)
            fh.write(f"# near-switch windows (s): {windows}\n")
        fh.write("# resolved configuration:\n")
        for key, val in report.resolved.items():
            fh.write(f"#   {key} = {val}\n")
        fh.write("filter,state,window,rmse\n")
        for filt in report.filters:
            for state in report.states:
                for window in (OVERALL, NEAR_SWITCH):
                    val = report.entries[(filt, state, window)]
                    fh.write(f"{filt},{state},{window},{fmt(val)}\n")


def read_report_csv(path: str) -> Dict[Tuple[str, str, str], float]:
    header, rows = read_trajectory_csv(path)
    if header != ["filter", "state", "window", "rmse"]:
        raise ArgumentError(f"{path} is not a report CSV")
    return {(r[0], r[1], r[2]): float(r[3]) for r in rows}


def ensure_dir(path: str) -> None:
    if path and not os.path.isdir(path):
        os.makedirs(path, exist_ok=True)
