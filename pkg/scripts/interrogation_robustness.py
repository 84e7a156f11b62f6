#!/usr/bin/env python3
"""Interrogation efficiency: reflectivity curve, noise robustness, crossover.

Produces the plot-ready CSVs for the efficiency-vs-reflectivity curve with
its imperfection band, and the quantum/noncontextual efficiency curves as a
function of depolarizing noise at a fixed preparation angle.
"""

import argparse
from pathlib import Path

import numpy as np

from overlapkit import serialize as ser
from overlapkit.cli import parse_angle
from overlapkit.interrogation import eta_ideal, eta_noisy, h3_robust, hexagon, robustness_curve


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--theta", default="150deg")
    ap.add_argument("--nu-max", type=float, default=0.2)
    ap.add_argument("--nu-steps", type=int, default=81)
    ap.add_argument("--band", type=float, default=0.005)
    ap.add_argument("--out-dir", default="results")
    args = ap.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    theta = parse_angle(args.theta)

    curve = robustness_curve(theta, np.linspace(0.0, args.nu_max, args.nu_steps))
    (out / "robustness_curve.csv").write_text(ser.robustness_curve_csv(curve))

    pts = []
    for r in np.linspace(0.0, 0.99, 100):
        ideal = eta_ideal(r)
        band = [eta_noisy(r, args.band, args.band, args.band, s) for s in (+1, -1)]
        pts.append((r, ideal, min(band), max(band)))
    (out / "efficiency_curve.csv").write_text(ser.efficiency_curve_csv(pts))

    frag = hexagon(theta, 0.0)
    (out / "hexagon.json").write_text(ser.dumps(ser.hexagon_to_dict(frag)))

    cross = "none" if curve.crossover_nu is None else f"{curve.crossover_nu:.6f}"
    print(f"theta={theta:.6f}: crossover_nu={cross}, "
          f"ideal six-state functional={h3_robust(frag):.6f} -> {out}/")


if __name__ == "__main__":
    main()
