"""Command-line front end.

One subcommand per experiment family; every run writes its outputs plus a
manifest recording the subcommand, parameters, seed, package version and
wall time, so any result can be replayed with ``overlapkit replay``.

Angles on the command line are radians by default; append ``deg`` to pass
degrees (files always store radians). Exit codes: 0 success, 2 validation
or schema error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import serialize as ser
from .inequalities import InequalitySpec, OverlapSet, classify, evaluate, evaluate_states, make_h3_robust, make_h_mzi, make_hn
from .interrogation import eta_ideal, eta_noisy, hexagon, robustness_curve
from .mesh import (
    calibration_fit,
    compose,
    decompose,
    estimate_inequality_via_counts,
    fidelity,
    perturbed_mesh_fidelity_study,
)
from .optimize import dimension_thresholds, haar_experiment, maximize_pure, sdp_upper_bound, thresholds_for
from .states import NumericalError, ValidationError

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


def parse_angle(text: str) -> float:
    """Radians by default; '150deg' or '150 deg' converts from degrees."""
    s = text.strip().lower()
    if s.endswith("deg"):
        return float(np.deg2rad(float(s[:-3].strip())))
    if s.endswith("rad"):
        s = s[:-3].strip()
    try:
        return float(s)
    except ValueError as exc:
        raise ValidationError(f"cannot parse angle {text!r}") from exc


def named_inequality(name: str) -> InequalitySpec:
    key = name.strip().lower()
    if key == "hmzi":
        return make_h_mzi()
    if key == "h3robust":
        return make_h3_robust()
    if key.startswith("h"):
        try:
            return make_hn(int(key[1:]))
        except (ValueError, ValidationError) as exc:
            raise ValidationError(f"unknown inequality {name!r}") from exc
    raise ValidationError(f"unknown inequality {name!r}")


def load_inequality(ref: str) -> InequalitySpec:
    """Resolve an inequality by name or from a JSON spec file."""
    path = Path(ref)
    if path.suffix == ".json" or path.exists():
        return ser.inequality_from_dict(_read_json(path))
    return named_inequality(ref)


def _read_json(path: Path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ValidationError(f"no such file: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON ({exc})") from exc


class _Run:
    """Collects outputs and writes the manifest at the end of a command."""

    def __init__(self, args: argparse.Namespace, subcommand: str):
        self.out_dir = Path(getattr(args, "out_dir", ".") or ".")
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.subcommand = subcommand
        self.params = {k: v for k, v in vars(args).items() if k != "func"}
        self.outputs: list[str] = []
        self.started = time.monotonic()

    def write_text(self, name: str, text: str) -> Path:
        path = self.out_dir / name
        path.write_text(text)
        self.outputs.append(str(path))
        return path

    def write_json(self, name: str, obj) -> Path:
        return self.write_text(name, ser.dumps(obj))

    def finish(self) -> None:
        manifest = {
            "subcommand": self.subcommand,
            "parameters": {k: v for k, v in sorted(self.params.items())},
            "seed": self.params.get("seed"),
            "version": __version__,
            "outputs": self.outputs,
            "wall_time_s": time.monotonic() - self.started,
        }
        path = self.out_dir / f"manifest-{self.subcommand}.json"
        path.write_text(json.dumps(manifest, sort_keys=True, indent=1) + "\n")


def cmd_evaluate(args: argparse.Namespace) -> int:
    run = _Run(args, "evaluate")
    spec = load_inequality(args.inequality)
    payload = _read_json(Path(args.input))
    if "upper" in payload:
        overlaps = ser.overlap_set_from_dict(payload)
    elif "states" in payload:
        overlaps = OverlapSet.from_states(ser.state_set_from_dict(payload))
    else:
        raise ValidationError(
            "input must be an overlap-set record (field 'upper') or a "
            "state-set record (field 'states')")
    value = evaluate(spec, overlaps)
    thresholds = thresholds_for(spec.n) if args.thresholds and spec.name.startswith("h") and spec.name[1:].isdigit() else []
    verdict = classify(spec, value, thresholds, slack=args.slack)
    run.write_json("verdict.json", ser.verdict_to_dict(verdict))
    if args.format == "csv":
        run.write_text("overlaps.csv", ser.overlap_matrix_csv(overlaps))
    run.finish()
    print(f"value={value:.9f} coherence={verdict.coherence_witnessed} min_dimension={verdict.min_dimension}")
    return EXIT_OK


def cmd_table(args: argparse.Namespace) -> int:
    run = _Run(args, "table")
    cells = dimension_thresholds(args.n_max, args.d_max, restarts=args.restarts, seed=args.seed)
    run.write_text("threshold_table.csv", ser.threshold_table_csv(cells))
    rows = [{"n": c.n, "d": c.d, "max_value": c.max_value, "method": c.method,
             "lower_bound": c.lower_bound, "upper_bound": c.upper_bound, "agree": c.agree}
            for c in cells]
    run.write_json("threshold_table.json", rows)
    run.finish()
    disagreements = [r for r in rows if r["agree"] is False]
    print(f"{len(rows)} cells, {len(disagreements)} ascent/bound disagreements")
    return EXIT_OK


def cmd_interrogation(args: argparse.Namespace) -> int:
    run = _Run(args, "interrogation")
    theta = parse_angle(args.theta)
    nus = np.linspace(args.nu_min, args.nu_max, args.nu_steps)
    curve = robustness_curve(theta, nus)
    run.write_text("robustness_curve.csv", ser.robustness_curve_csv(curve))
    frag = hexagon(theta, nu=args.nu_min)
    run.write_json("hexagon.json", ser.hexagon_to_dict(frag))
    report = {"theta": theta, "crossover_nu": curve.crossover_nu,
              "hexagon_equivalence_deviation": frag.equivalence_deviation}
    run.write_json("interrogation.json", report)
    if args.r_steps > 0:
        # reflectivity sweep with the dark-count/mismatch band; the band
        # degenerates to the ideal curve when --band is 0
        pts = []
        for r in np.linspace(0.0, args.r_max, args.r_steps):
            ideal = eta_ideal(r)
            if args.band > 0:
                branches = [eta_noisy(r, args.band, args.band, args.band, sign)
                            for sign in (+1, -1)]
                pts.append((float(r), ideal, min(branches), max(branches)))
            else:
                pts.append((float(r), ideal, ideal, ideal))
        run.write_text("efficiency_curve.csv", ser.efficiency_curve_csv(pts))
    run.finish()
    cross = "none" if curve.crossover_nu is None else f"{curve.crossover_nu:.6f}"
    print(f"theta={theta:.6f} crossover_nu={cross}")
    return EXIT_OK


def cmd_sample(args: argparse.Namespace) -> int:
    run = _Run(args, "sample")
    spec = load_inequality(args.inequality)
    report = haar_experiment(spec, args.d, args.num_sets, seed=args.seed)
    run.write_json("sampling.json", ser.sampling_to_dict(report, include_values=False))
    run.write_text("histogram.csv", ser.histogram_csv(report.values, bins=args.bins))
    run.finish()
    print(f"max={report.max_value:.6f} violations={report.violation_count}/{report.num_sets}")
    return EXIT_OK


def cmd_maximize(args: argparse.Namespace) -> int:
    run = _Run(args, "maximize")
    spec = load_inequality(args.inequality)
    result = maximize_pure(spec, args.d, restarts=args.restarts, seed=args.seed)
    run.write_json("maximization.json", ser.maximization_to_dict(result))
    if args.bound and spec.name.startswith("h") and spec.name[1:].isdigit() and spec.n >= 4:
        sdp = sdp_upper_bound(spec.n, min(args.d, spec.n - 1), obj_tol=args.tol or 1e-10)
        run.write_json("upper_bound.json", ser.sdp_to_dict(sdp))
        print(f"value={result.value:.9f} upper_bound={sdp.value:.9f}")
    else:
        print(f"value={result.value:.9f}")
    run.finish()
    return EXIT_OK


def cmd_mesh(args: argparse.Namespace) -> int:
    run = _Run(args, f"mesh-{args.action}")
    if args.action == "simulate":
        config = ser.mesh_config_from_dict(_read_json(Path(args.config)))
        u = compose(config)
        run.write_json("unitary.json", {"dim": u.shape[0],
                                        "entries": [[float(z.real), float(z.imag)] for z in u.ravel()]})
        print(f"composed {u.shape[0]}x{u.shape[0]} unitary")
    elif args.action == "decompose":
        payload = _read_json(Path(args.unitary))
        dim = int(payload["dim"])
        flat = np.array([complex(p[0], p[1]) for p in payload["entries"]])
        config = decompose(flat.reshape(dim, dim), atol=args.tol or 1e-10)
        run.write_json("mesh_config.json", ser.mesh_config_to_dict(config))
        print(f"decomposed into {len(config.cells)} cells")
    elif args.action == "calibrate":
        sweeps = ser.sweeps_from_csv(Path(args.sweeps).read_text())
        model, residuals = calibration_fit(sweeps)
        run.write_json("calibration.json", ser.calibration_to_dict(model))
        run.write_json("calibration_residuals.json", [float(r) for r in residuals])
        print(f"fitted {len(sweeps)} heaters, max residual {float(np.max(residuals)):.3e}")
    elif args.action == "fidelity":
        if args.study:
            study = perturbed_mesh_fidelity_study(
                modes=args.modes, n_unitaries=args.num_unitaries,
                sigma_rad=args.sigma, seed=args.seed)
            run.write_json("fidelity_study.json", {
                "mean": study.mean, "std": study.std, "sigma_rad": study.sigma_rad,
                "samples": [float(s) for s in study.samples]})
            print(f"mean_fidelity={study.mean:.5f} std={study.std:.5f}")
        else:
            pa, pb = _read_json(Path(args.target)), _read_json(Path(args.experimental))
            ua = np.array([complex(p[0], p[1]) for p in pa["entries"]]).reshape(pa["dim"], pa["dim"])
            ub = np.array([complex(p[0], p[1]) for p in pb["entries"]]).reshape(pb["dim"], pb["dim"])
            f = fidelity(ua, ub)
            run.write_json("fidelity.json", {"fidelity": f})
            print(f"fidelity={f:.6f}")
    elif args.action == "counts":
        spec = load_inequality(args.inequality)
        states = ser.state_set_from_dict(_read_json(Path(args.states)))
        est = estimate_inequality_via_counts(spec, states, args.trials, args.seed)
        run.write_json("count_estimate.json", {
            "value": est.value, "sigma": est.sigma,
            "records": {f"{i},{j}": ser.count_record_to_dict(r) for (i, j), r in sorted(est.records.items())}})
        if args.format == "csv":
            run.write_text("count_records.csv", ser.count_records_csv(est.records))
        print(f"value={est.value:.6f} sigma={est.sigma:.6f}")
    run.finish()
    return EXIT_OK


def cmd_replay(args: argparse.Namespace) -> int:
    manifest = _read_json(Path(args.manifest))
    try:
        sub = manifest["subcommand"]
        params = manifest["parameters"]
    except KeyError as exc:
        raise ValidationError(f"manifest missing field {exc}") from exc
    argv = [sub.split("-")[0]] if not sub.startswith("mesh") else ["mesh"]
    ns = argparse.Namespace(**params)
    handler = {
        "evaluate": cmd_evaluate, "table": cmd_table, "interrogation": cmd_interrogation,
        "sample": cmd_sample, "maximize": cmd_maximize, "replay": None,
    }.get(argv[0], cmd_mesh)
    if handler is None:
        raise ValidationError("cannot replay a replay manifest")
    return handler(ns)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="overlapkit",
        description="Overlap-based coherence and dimension witnesses, "
                    "interrogation robustness, and mesh simulation.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out-dir", default=".")
        p.add_argument("--format", choices=["json", "csv"], default="json",
                       help="csv additionally emits csv renderings of matrix-like outputs")
        p.add_argument("--tol", type=float, default=None,
                       help="numerical tolerance forwarded to the underlying routine")

    p = sub.add_parser("evaluate", help="evaluate an inequality on an overlap or state file")
    common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--inequality", required=True)
    p.add_argument("--thresholds", action="store_true",
                   help="classify the minimal dimension against computed maxima")
    p.add_argument("--slack", type=float, default=0.0)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("table", help="maxima per (n, d): ascent and quadratic bound")
    common(p)
    p.add_argument("--n-max", type=int, default=10)
    p.add_argument("--d-max", type=int, default=None)
    p.add_argument("--restarts", type=int, default=200)
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("interrogation", help="efficiency curves and noise crossover")
    common(p)
    p.add_argument("--theta", default="150deg")
    p.add_argument("--nu-min", type=float, default=0.0)
    p.add_argument("--nu-max", type=float, default=0.2)
    p.add_argument("--nu-steps", type=int, default=41)
    p.add_argument("--r-steps", type=int, default=0,
                   help="also sweep the reflectivity curve with this many points")
    p.add_argument("--r-max", type=float, default=0.99)
    p.add_argument("--band", type=float, default=0.005,
                   help="mismatch/dark-count envelope for the reflectivity band")
    p.set_defaults(func=cmd_interrogation)

    p = sub.add_parser("sample", help="functional distribution over Haar-random tuples")
    common(p)
    p.add_argument("--inequality", required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--num-sets", type=int, default=10000)
    p.add_argument("--bins", type=int, default=50)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("maximize", help="maximize an inequality over pure states")
    common(p)
    p.add_argument("--inequality", required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--restarts", type=int, default=200)
    p.add_argument("--bound", action="store_true", help="also compute the quadratic upper bound")
    p.set_defaults(func=cmd_maximize)

    p = sub.add_parser("mesh", help="mesh simulation, decomposition, calibration, fidelity")
    common(p)
    p.add_argument("action", choices=["simulate", "decompose", "calibrate", "fidelity", "counts"])
    p.add_argument("--config")
    p.add_argument("--unitary")
    p.add_argument("--sweeps")
    p.add_argument("--target")
    p.add_argument("--experimental")
    p.add_argument("--states")
    p.add_argument("--inequality", default="hmzi")
    p.add_argument("--trials", type=int, default=100000)
    p.add_argument("--study", action="store_true")
    p.add_argument("--modes", type=int, default=6)
    p.add_argument("--num-unitaries", type=int, default=100)
    p.add_argument("--sigma", type=float, default=0.1)
    p.set_defaults(func=cmd_mesh)

    p = sub.add_parser("replay", help="re-run a previous command from its manifest")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
