"""Command line front end: design, simulate, compare, sweep.

Exit codes: 0 on success, 1 for bad input (usage, unreadable or inconsistent
scenario), 2 for a numerical failure (design fixed point or integrator).
Trajectory CSVs are written with 17 significant digits and newline endings,
so repeated runs of the same command are byte identical.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Optional

import numpy as np

from .designer import DesignError, DesignOptions, DesignReport, design_pulse
from .propagator import IntegrationError, StateVector, Trajectory, integrate
from .scenario import (
    MODES,
    RunSummary,
    Scenario,
    ScenarioError,
    load_scenario,
    summarize,
)

_SWEEP_FIELDS = ("t_pi", "t_used", "final_transfer", "peak_transfer_last_cycle",
                 "max_perturber_population", "norm_drift")


class _Parser(argparse.ArgumentParser):
    """argparse maps usage errors to exit code 2; we reserve 2 for numerics."""

    def error(self, message):
        self.exit(1, f"{self.prog}: error: {message}\n")


def _options_for(sc: Scenario, mode: str) -> DesignOptions:
    if mode == "unoptimized":
        return DesignOptions(unoptimized=True)
    if mode == "frequency_only":
        return DesignOptions(frequency_only=True)
    if mode == "manual":
        if sc.drive.manual_duration is None:
            raise ValueError("manual mode needs a T line in the scenario's [drive]")
        return DesignOptions(manual_duration=sc.drive.manual_duration)
    return DesignOptions()


def _design(sc: Scenario, mode: str):
    options = _options_for(sc, mode)
    return design_pulse(sc.system, sc.pair, sc.perturbers, sc.drive.f0,
                        sc.drive.n_half, sc.drive.shape, options)


def _simulate(sc: Scenario, mode: str, rtol: float, grid: int):
    spec, report = _design(sc, mode)
    initial = StateVector.basis(sc.system.n, sc.pair.alpha)
    traj = integrate(sc.system, spec, initial, sampling=grid, rtol=rtol)
    summary = summarize(sc, spec, report.t_pi, traj)
    return spec, report, traj, summary


def _numerics(sc: Scenario, args) -> tuple:
    rtol = args.tol if args.tol is not None else sc.numerics.rtol
    grid = args.grid if args.grid is not None else sc.numerics.grid
    if not rtol > 0.0:
        raise ValueError("tolerance must be positive")
    if grid < 2:
        raise ValueError("grid must be at least 2")
    return rtol, grid


def _report_dict(report: DesignReport) -> dict:
    return {
        "t_pi": report.t_pi,
        "t_opt": report.t_opt,
        "t_used": report.t_used,
        "chirp_coefficient": report.chirp_coefficient,
        "fixed_carrier": report.fixed_carrier,
        "fixed_point_iterations": report.fixed_point_iterations,
        "residual": report.residual,
        "second_order_advisory": report.second_order_advisory,
        "extrapolated": report.extrapolated,
        "sigma_sq_per_perturber": {lab: val for lab, val in report.sigma_sq_per_perturber},
    }


def _summary_dict(summary: RunSummary) -> dict:
    return {
        "final_transfer": summary.final_transfer,
        "peak_transfer_last_cycle": summary.peak_transfer_last_cycle,
        "max_perturber_population": summary.max_perturber_population,
        "t_pi": summary.t_pi,
        "t_used": summary.t_used,
        "norm_drift": summary.norm_drift,
    }


def _flat_lines(data: dict, prefix: str = "") -> list:
    lines = []
    for key, value in data.items():
        if isinstance(value, dict):
            lines.extend(_flat_lines(value, prefix=f"{prefix}{key}_"))
        elif isinstance(value, bool):
            lines.append(f"{prefix}{key} = {'true' if value else 'false'}")
        elif isinstance(value, float):
            lines.append(f"{prefix}{key} = {float(value)!r}")
        else:
            lines.append(f"{prefix}{key} = {value}")
    return lines


def _render(data: dict, fmt: str) -> str:
    if fmt == "structured":
        return json.dumps(data, indent=2, sort_keys=True) + "\n"
    return "\n".join(_flat_lines(data)) + "\n"


def _emit(text: str, out_path: Optional[str]) -> None:
    sys.stdout.write(text)
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _write_trajectory_csv(path: str, traj: Trajectory) -> None:
    cols = [traj.times, traj.envelope_samples, traj.carrier_samples]
    cols.extend(traj.populations[:, i] for i in range(traj.populations.shape[1]))
    cols.append(traj.populations.sum(axis=1) - 1.0)
    header = "t,m,omega," + ",".join(f"Pi_{lab}" for lab in traj.labels) + ",norm_error"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for row in zip(*cols):
            fh.write(",".join(f"{v:.16e}" for v in row) + "\n")


def cmd_design(args) -> int:
    sc = load_scenario(args.scenario)
    mode = args.mode or sc.drive.mode
    _, report = _design(sc, mode)
    _emit(_render(_report_dict(report), args.format), args.out)
    return 0


def cmd_simulate(args) -> int:
    sc = load_scenario(args.scenario)
    mode = args.mode or sc.drive.mode
    rtol, grid = _numerics(sc, args)
    _, _, traj, summary = _simulate(sc, mode, rtol, grid)
    if traj.norm_alarm:
        sys.stderr.write(f"warning: norm drift {traj.norm_drift:.3e} exceeds 1e-6\n")
    text = _render(_summary_dict(summary), args.format)
    sys.stdout.write(text)
    if args.summary:
        with open(args.summary, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    if args.traj:
        _write_trajectory_csv(args.traj, traj)
    return 0


def cmd_compare(args) -> int:
    sc = load_scenario(args.scenario)
    rtol, grid = _numerics(sc, args)
    modes = ["unoptimized", "frequency_only", "optimized"]
    if sc.drive.manual_duration is not None:
        modes.append("manual")
    results = {}
    for mode in modes:
        _, _, _, summary = _simulate(sc, mode, rtol, grid)
        results[mode] = _summary_dict(summary)
    if args.format == "structured":
        text = json.dumps(results, indent=2, sort_keys=True) + "\n"
    else:
        blocks = []
        for mode in modes:
            blocks.append(f"[{mode}]\n" + "\n".join(_flat_lines(results[mode])))
        text = "\n\n".join(blocks) + "\n"
    _emit(text, args.out)
    return 0


def cmd_sweep(args) -> int:
    sc = load_scenario(args.scenario)
    rtol, grid = _numerics(sc, args)
    if args.steps < 1:
        raise ValueError("steps must be at least 1")
    raw = np.linspace(args.start, args.stop, args.steps)
    scenarios = []
    values = []
    for v in raw:
        if args.param == "F0":
            value = float(v)
            drive = replace(sc.drive, f0=value)
        else:
            value = int(round(v))
            if value < 1:
                raise ValueError("n_half must stay at least 1 across the sweep")
            drive = replace(sc.drive, n_half=value)
        values.append(value)
        scenarios.append(replace(sc, drive=drive))

    mode = args.mode or sc.drive.mode

    def job(scn: Scenario) -> RunSummary:
        return _simulate(scn, mode, rtol, grid)[3]

    with ThreadPoolExecutor(max_workers=min(8, len(scenarios))) as pool:
        futures = [pool.submit(job, scn) for scn in scenarios]
        summaries = [f.result() for f in futures]

    header = "param,value," + ",".join(_SWEEP_FIELDS)
    lines = [header]
    for value, summary in zip(values, summaries):
        row = [args.param, f"{float(value):.16e}"]
        row.extend(f"{getattr(summary, field):.16e}" for field in _SWEEP_FIELDS)
        lines.append(",".join(row))
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pulseopt",
                     description="design and verify chirped pi pulses for "
                                 "two level transfer in an N level system")
    parser.add_argument("--tol", type=float, default=None,
                        help="integrator relative tolerance (overrides the scenario; 1e-10)")
    parser.add_argument("--grid", type=int, default=None,
                        help="number of output samples (overrides the scenario; 2000)")
    parser.add_argument("--format", choices=("text", "structured"), default="text",
                        help="report style: flat key = value lines or JSON")
    sub = parser.add_subparsers(dest="command", required=True)

    p_design = sub.add_parser("design", help="run the analytic design only")
    p_design.add_argument("scenario")
    p_design.add_argument("--mode", choices=MODES, default=None)
    p_design.add_argument("--out", default=None, help="also write the report here")
    p_design.set_defaults(func=cmd_design)

    p_sim = sub.add_parser("simulate", help="design, integrate, summarize")
    p_sim.add_argument("scenario")
    p_sim.add_argument("--mode", choices=MODES, default=None,
                       help="override the scenario's mode")
    p_sim.add_argument("--traj", default=None, help="write the sampled trajectory CSV here")
    p_sim.add_argument("--summary", default=None, help="also write the summary here")
    p_sim.set_defaults(func=cmd_simulate)

    p_cmp = sub.add_parser("compare", help="simulate all design variants")
    p_cmp.add_argument("scenario")
    p_cmp.add_argument("--out", default=None)
    p_cmp.set_defaults(func=cmd_compare)

    p_sweep = sub.add_parser("sweep", help="scan F0 or n_half")
    p_sweep.add_argument("scenario")
    p_sweep.add_argument("--param", required=True, choices=("F0", "n_half"))
    p_sweep.add_argument("--from", dest="start", type=float, required=True)
    p_sweep.add_argument("--to", dest="stop", type=float, required=True)
    p_sweep.add_argument("--steps", type=int, required=True)
    p_sweep.add_argument("--mode", choices=MODES, default=None)
    p_sweep.add_argument("--out", default=None)
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, ValueError, OSError) as exc:
        sys.stderr.write(f"pulseopt: error: {exc}\n")
        return 1
    except (DesignError, IntegrationError) as exc:
        sys.stderr.write(f"pulseopt: numerical failure: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
