"""Command-line driver.

Subcommands
-----------
simulate   simulate the configured model and write its trajectory CSV
estimate   run one filter (hybrid or continuous) and write its report
compare    run both filters on one identical stream and write the report
verify     sampling-based safety falsification

Common flags: ``--config FILE`` (flat key=value text), ``--seed N``
(overrides the config), ``--out DIR``.  The ``HDS_SEED`` environment
variable is the lowest-priority seed source.  Exit codes: 0 success,
1 usage/config error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import List, Optional

from .compare import run_comparison
from .config import ExperimentConfig, load_config, resolve_seed
from .errors import ConfigError, HdsimError
from .power import inverter_automaton, smib_state, smib_system
from .report import ensure_dir, fmt, write_trajectory_csv
from .safety import box_sampler, check_safety
from .simulate import simulate

USAGE_ERROR = 1
RUNTIME_ERROR = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hdsim",
        description="Hybrid dynamical systems simulation and estimation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("simulate", "simulate the configured model and write its trajectory"),
        ("estimate", "run a single filter and write its trajectory and report"),
        ("compare", "run hybrid and continuous filters on one stream"),
        ("verify", "sampling-based safety check"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", default=None, help="experiment config file")
        p.add_argument("--seed", type=int, default=None, help="seed override")
        p.add_argument("--out", default=None, help="output directory")
    return parser


def _prepare(args) -> ExperimentConfig:
    config = load_config(args.config)
    seed = resolve_seed(config, args.seed)
    overrides = {"seed": seed}
    if args.out is not None:
        overrides["out"] = args.out
    return config.with_overrides(**overrides)


def _cmd_simulate(config: ExperimentConfig) -> int:
    out_dir = str(config["out"])
    ensure_dir(out_dir)
    if config["model"] == "smib":
        system = smib_system(config.smib_params())
        x0 = smib_state(
            float(config["smib.delta0"]),
            float(config["smib.omega0"]),
            int(config["smib.line0"]),
        )
        traj = simulate(
            system, x0, float(config["horizon"]),
            int(config["max_jumps"]), float(config["dt"]),
        )
        columns = ("t", "j", "mode", "delta", "omega")
        rows = (
            (s.time.t, s.time.j, s.mode, s.state[0], s.state[1])
            for s in traj.samples
        )
        path = os.path.join(out_dir, "trajectory_smib.csv")
    else:
        scenario = config.scenario()
        automaton = inverter_automaton(scenario.params, scenario.v_grid)
        traj = simulate(
            automaton, scenario.x0, scenario.horizon,
            int(config["max_jumps"]), scenario.dt,
            mode0=scenario.initial_mode,
        )
        columns = ("t", "j", "mode", "i_d", "i_q", "v_d", "v_q")
        rows = (
            (s.time.t, s.time.j, s.mode, *s.state) for s in traj.samples
        )
        path = os.path.join(out_dir, "trajectory_inverter.csv")
    write_trajectory_csv(path, columns, rows)
    print(f"termination: {traj.termination}")
    if traj.jumps:
        instants = ", ".join(fmt(t) for t in traj.jump_times)
        print(f"jumps at: {instants}")
    print(f"wrote {path}")
    return 0


def _cmd_estimate(config: ExperimentConfig) -> int:
    which = str(config["filter"])
    if which == "both":
        raise ConfigError("estimate runs one filter; set filter = hybrid | continuous")
    report, paths = run_comparison(config)
    print(report.table())
    print(f"runtime: {report.runtime_seconds:.3f} s")
    for p in paths:
        print(f"wrote {p}")
    return 0


def _cmd_compare(config: ExperimentConfig) -> int:
    report, paths = run_comparison(config.with_overrides(**{"filter": "both"}))
    print(report.table())
    print(f"runtime: {report.runtime_seconds:.3f} s")
    for p in paths:
        print(f"wrote {p}")
    return 0


def _cmd_verify(config: ExperimentConfig) -> int:
    out_dir = str(config["out"])
    ensure_dir(out_dir)
    seed = int(config["seed"])
    n_samples = int(config["verify.samples"])
    horizon = float(config["horizon"])
    dt = float(config["dt"])
    max_jumps = int(config["max_jumps"])
    threshold = float(config["verify.i_unsafe"])

    if config["model"] == "smib":
        params = config.smib_params()
        system = smib_system(params)
        if threshold <= 0.0:
            threshold = params.i_max
        d0 = float(config["smib.delta0"])
        w0 = float(config["smib.omega0"])
        dhw = float(config["verify.delta_half_width"])
        whw = float(config["verify.omega_half_width"])
        line0 = float(int(config["smib.line0"]))
        base = box_sampler(
            [d0 - dhw, w0 - whw, line0], [d0 + dhw, w0 + whw, line0], seed
        )
        sampler = base

        def unsafe(x) -> bool:
            return abs(params.p_e(x[0])) > threshold - 1e-9

        verdict = check_safety(
            system, sampler, unsafe, horizon, n_samples, dt, max_jumps=max_jumps
        )
    else:
        scenario = config.scenario()
        if threshold <= 0.0:
            threshold = scenario.params.i_lim
        hw = float(config["verify.x0_half_width"])
        automaton = inverter_automaton(scenario.params, scenario.v_grid)
        sampler = box_sampler(scenario.x0 - hw, scenario.x0 + hw, seed)

        def unsafe(x) -> bool:
            return max(abs(x[0]), abs(x[1])) > threshold - 1e-9

        verdict = check_safety(
            automaton, sampler, unsafe, horizon, n_samples, dt,
            max_jumps=max_jumps, mode0=scenario.initial_mode,
        )

    path = os.path.join(out_dir, "verify_report.txt")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"model: {config['model']}\n")
        fh.write(f"verdict: {verdict.status}\n")
        fh.write(f"samples checked: {verdict.samples_checked}\n")
        fh.write(f"unsafe threshold: {fmt(threshold)}\n")
        if verdict.unsafe:
            fh.write(f"witness time: {fmt(verdict.witness_time)}\n")
            x0 = ", ".join(fmt(v) for v in verdict.witness_initial_state)
            fh.write(f"witness initial state: {x0}\n")
            if verdict.witness.jumps:
                instants = ", ".join(fmt(t) for t in verdict.witness.jump_times)
                fh.write(f"witness jumps at: {instants}\n")
        fh.write(f"seed: {seed}\n")
    print(f"verdict: {verdict.status}")
    if verdict.unsafe:
        print(f"witness time: {fmt(verdict.witness_time)}")
    print(f"wrote {path}")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "estimate": _cmd_estimate,
    "compare": _cmd_compare,
    "verify": _cmd_verify,
}


def cli_main(argv: Optional[List[str]] = None) -> int:
    """Entry point; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse prints its own message; map "--help" to success and
        # anything else to a usage error.
        return 0 if exc.code == 0 else USAGE_ERROR
    try:
        config = _prepare(args)
        return _COMMANDS[args.command](config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except HdsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
