"""Sweep the drive amplitude around a scenario's nominal value.

Shows how the corrected duration and the achieved transfer respond as the
drive gets stronger (larger dressing, shorter pulse).  Emits CSV on stdout.

Usage: python scripts/sweep_drive_amplitude.py [scenario] [--steps N] [--span FRAC]
"""

import argparse
import dataclasses
import pathlib
import sys

import numpy as np

import pulseopt as po

DEFAULT = pathlib.Path(__file__).resolve().parents[1] / "scenarios" / "hf_fig4.scn"


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("scenario", nargs="?", default=str(DEFAULT))
    parser.add_argument("--steps", type=int, default=11)
    parser.add_argument("--span", type=float, default=0.5,
                        help="half-width of the sweep as a fraction of F0")
    args = parser.parse_args()

    sc = po.load_scenario(args.scenario)
    values = np.linspace(sc.drive.f0 * (1.0 - args.span),
                         sc.drive.f0 * (1.0 + args.span), args.steps)
    print("F0,t_pi,t_opt,ratio,final_transfer,max_perturber_population")
    for f0 in values:
        drive = dataclasses.replace(sc.drive, f0=float(f0))
        spec, report = po.design_pulse(
            sc.system, sc.pair, sc.perturbers, drive.f0, drive.n_half,
            drive.shape, po.DesignOptions())
        traj = po.integrate(sc.system, spec,
                            po.StateVector.basis(sc.system.n, sc.pair.alpha),
                            sampling=sc.numerics.grid, rtol=sc.numerics.rtol)
        summ = po.summarize(dataclasses.replace(sc, drive=drive), spec,
                            report.t_pi, traj)
        print(f"{float(f0)!r},{float(report.t_pi)!r},{float(report.t_opt)!r},"
              f"{float(report.t_opt / report.t_pi)!r},{summ.final_transfer!r},"
              f"{summ.max_perturber_population!r}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
