"""Command-line entry point: ``kdi simulate|splitter|sweep|paths``.

Exit codes: 0 success, 2 invalid configuration or arguments, 3 numerical
failure.  Errors are reported as one JSON object on stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from kdi.config import RunConfig, derived_quantities
from kdi.errors import ConfigError, KDIError, SolverError
from kdi.interferometer import beam_fringe, enumerate_paths, predicted_beams, simulate
from kdi.pulse import TwoLevelModel, column_transfer
from kdi.state import peak_analysis
from kdi.units import CONSTANTS

log = logging.getLogger("kdi")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _emit_error("UsageError", message, EXIT_CONFIG)
        sys.exit(EXIT_CONFIG)


def _emit_error(kind: str, message: str, code: int, **extra):
    payload = {"error": kind, "exit_code": code, "message": message}
    payload.update({k: v for k, v in extra.items() if v is not None})
    sys.stderr.write(json.dumps(payload) + "\n")


def _clean(obj):
    """Recursively replace non-finite floats by None so the JSON stays valid."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_json(path: Path, obj) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(json.dumps(_clean(obj), indent=2) + "\n")
    return path


def write_csv(path: Path, header: list[str], rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(f"{float(x):.17g}" for x in row) + "\n")
    return path


def _figures(args) -> bool:
    return bool(getattr(args, "figures", False))


def cmd_simulate(cfg: RunConfig, out_dir: Path, figures: bool = False) -> dict:
    setup = cfg.setup()
    norm_in = setup.initial_state().norm()
    final, density, paths, reports = simulate(setup)
    peaks = peak_analysis(density, smoothing=0.5 * cfg.laser.wavelength_nm * 1e-9, min_mass=5e-3)
    csv_path = out_dir / cfg.output.csv_path
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    with open(csv_path, "w", newline="\n") as fh:
        fh.write(density.to_csv())
    summary = {
        "config": cfg.echo(),
        "derived": derived_quantities(cfg),
        "beams": [r.to_dict() for r in reports],
        "peaks": [{"center_m": p["center"], "mass": p["mass"], "width_m": p["width"]} for p in peaks],
        "peak_count": len(peaks),
        "norm_drift": abs(final.norm() - norm_in),
        "density_total": density.total(),
        "unassigned_population": density.total() - sum(r.population for r in reports),
    }
    write_json(out_dir / cfg.output.json_path, summary)
    if figures:
        from kdi.plotting import plot_density

        plot_density(density, reports, csv_path.with_suffix(".png"))
    return summary


SCAN_UNITS = {"detuning": "delta_omega_rad_per_s", "duration": "duration_s", "kbar": "kbar_per_m"}


def splitter_scan(cfg: RunConfig, scan: str, values=None) -> list[tuple[float, float, float]]:
    """Rows (param, numeric transfer, two-level transfer) for one scan target.

    Defaults: duration 0 to pi/(g1 g2) at resonance; detuning and kbar
    spanning +-8 g1 g2 of two-level detuning around resonance at the
    balanced duration.
    """
    if scan not in SCAN_UNITS:
        raise ConfigError(f"unknown scan target {scan!r}", field="scan")
    base = cfg.pulse_template()
    laser = cfg.laser_config()
    units = cfg.ramsey_borde().units
    w_rec, om = laser.omega_rec, base.coupling
    resonant = base.with_(delta_omega=-w_rec)
    kick_speed = 2.0 * CONSTANTS.hbar * laser.k_L / CONSTANTS.electron_mass
    if values is None:
        if scan == "duration":
            values = np.linspace(0.0, math.pi / om, 81)
        elif scan == "detuning":
            values = -w_rec + np.linspace(-8.0, 8.0, 81) * om
        else:
            values = np.linspace(-8.0, 8.0, 81) * om / kick_speed
    rows = []
    for x in values:
        x = float(x)
        if scan == "duration":
            if x < 0:
                raise ConfigError("pulse duration must be non-negative", field="scan")
            p, model, t = resonant.with_(duration=x), TwoLevelModel(om, 0.0), x
            numeric = column_transfer(p, units)
        elif scan == "detuning":
            p, model, t = base.with_(delta_omega=x), TwoLevelModel(om, x + w_rec), base.duration
            numeric = column_transfer(p, units)
        else:
            p, model, t = resonant, TwoLevelModel.for_column(om, x, units), base.duration
            numeric = column_transfer(p, units, kbar=x)
        rows.append((x, numeric, model.transfer_probability(t)))
    return rows


def cmd_splitter(cfg: RunConfig, out_dir: Path, scan: str, values=None, figures: bool = False) -> Path:
    rows = splitter_scan(cfg, scan, values)
    path = write_csv(out_dir / f"splitter_{scan}.csv", ["param", "p_numeric", "p_two_level"], rows)
    if figures:
        from kdi.plotting import plot_splitter

        plot_splitter(rows, SCAN_UNITS[scan], path.with_suffix(".png"))
    return path


SWEEP_SCALE = {"a": 1.0, "T_prime": 1e-9}  # CLI units: m/s^2 and ns
FRINGE_HEADER = ["param", "pop_I", "pop_V", "delta_phi_rad", "model_I", "model_V"]


def cmd_sweep(cfg: RunConfig, out_dir: Path, param: str, start: float, stop: float, points: int,
              figures: bool = False) -> Path:
    if param not in SWEEP_SCALE:
        raise ConfigError(f"unknown sweep parameter {param!r}", field="param")
    if points < 1:
        raise ConfigError("points must be at least 1", field="points")
    if param == "T_prime" and min(start, stop) < 0:
        raise ConfigError("T_prime must be non-negative", field="from")
    values = np.linspace(start, stop, points)
    rows = beam_fringe(cfg.setup(), param, values * SWEEP_SCALE[param])
    for r, v in zip(rows, values):
        r["param"] = float(v)
    path = write_csv(out_dir / f"sweep_{param}.csv", FRINGE_HEADER, ([r[k] for k in FRINGE_HEADER] for r in rows))
    if figures:
        from kdi.plotting import plot_fringe

        plot_fringe(rows, "a (m/s^2)" if param == "a" else "T' (ns)", path.with_suffix(".png"))
    return path


def cmd_paths(cfg: RunConfig, out_dir: Path, pulse_model: str = "average") -> dict:
    setup = cfg.setup()
    paths = enumerate_paths(setup.cfg, setup.initial_velocity, pulse_model=pulse_model)
    beams = predicted_beams(paths)
    doc = {
        "pulse_model": pulse_model,
        "paths": [p.to_dict() for p in paths],
        "beams": [
            {
                "label": label,
                "position_m": b["position"],
                "momentum_kgmps": b["momentum"],
                "splitter_population": abs(b["weight"]) ** 2,
                "paths": b["paths"],
            }
            for label, b in beams.items()
        ],
    }
    write_json(out_dir / "paths.json", doc)
    return doc


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kdi", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--config", required=True, type=Path, help="TOML run configuration")
        p.add_argument("--out-dir", type=Path, default=Path("out"), help="output directory (default ./out)")
        p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("simulate", help="full four-pulse run: density CSV and summary JSON")
    common(p)
    p.add_argument("--figures", action="store_true", help="also render PNG figures")

    p = sub.add_parser("splitter", help="single-pulse transfer probability scan")
    common(p)
    p.add_argument("--scan", required=True, choices=sorted(SCAN_UNITS))
    p.add_argument("--from", dest="start", type=float)
    p.add_argument("--to", dest="stop", type=float)
    p.add_argument("--points", type=int, default=81)
    p.add_argument("--figures", action="store_true")

    p = sub.add_parser("sweep", help="beam I/V fringe over a or T' (T' in ns)")
    common(p)
    p.add_argument("--param", required=True, choices=sorted(SWEEP_SCALE))
    p.add_argument("--from", dest="start", type=float, required=True)
    p.add_argument("--to", dest="stop", type=float, required=True)
    p.add_argument("--points", type=int, required=True)
    p.add_argument("--figures", action="store_true")

    p = sub.add_parser("paths", help="classical partial-beam paths as JSON")
    common(p)
    p.add_argument("--pulse-model", choices=("average", "group_delay", "instant"), default="average")
    return parser


def _run(args) -> None:
    cfg = RunConfig.load(args.config)
    out = args.out_dir
    if args.command == "simulate":
        cmd_simulate(cfg, out, figures=_figures(args))
    elif args.command == "splitter":
        values = None
        if args.start is not None or args.stop is not None:
            if args.start is None or args.stop is None:
                raise ConfigError("--from and --to go together", field="from")
            if args.points < 1:
                raise ConfigError("points must be at least 1", field="points")
            values = np.linspace(args.start, args.stop, args.points)
        cmd_splitter(cfg, out, args.scan, values, figures=_figures(args))
    elif args.command == "sweep":
        cmd_sweep(cfg, out, args.param, args.start, args.stop, args.points, figures=_figures(args))
    elif args.command == "paths":
        cmd_paths(cfg, out, pulse_model=args.pulse_model)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="kdi: %(message)s")
    start = time.perf_counter()
    try:
        _run(args)
    except ConfigError as exc:
        _emit_error(type(exc).__name__, str(exc), EXIT_CONFIG, field=exc.field)
        return EXIT_CONFIG
    except SolverError as exc:
        _emit_error(type(exc).__name__, str(exc), EXIT_SOLVER, param=getattr(exc, "param", None))
        return EXIT_SOLVER
    except KDIError as exc:
        _emit_error(type(exc).__name__, str(exc), EXIT_CONFIG)
        return EXIT_CONFIG
    log.info("%s finished in %.3f s", args.command, time.perf_counter() - start)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
