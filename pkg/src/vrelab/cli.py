"""Command-line interface: ``vrelab {validate,run,sweep,plot,export-lp}``.

Exit codes: 0 success, 1 I/O error, 2 invalid input, 3 solver failure,
4 infeasible scenario, 5 output directory exists (use ``--force``).
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from importlib import resources
from pathlib import Path

from . import __version__

EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_SOLVER, EXIT_INFEASIBLE, EXIT_EXISTS = range(6)


def reference_config_path() -> Path:
    return Path(str(resources.files("vrelab") / "data" / "reference_config.toml"))


def reference_data_path() -> Path:
    return Path(str(resources.files("vrelab") / "data" / "reference_profiles.csv"))


def _values(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, default=None,
                   help="technology config (TOML); defaults to the bundled reference")
    p.add_argument("--data", type=Path, default=None,
                   help="hourly profile CSV; defaults to the bundled reference")
    p.add_argument("--out", type=Path, default=None, help="output directory or file")
    p.add_argument("--backend", default=None,
                   help="solver backend: highs, highs-ds, highs-ipm, reference")
    p.add_argument("--tol", type=float, default=None,
                   help="feasibility and duality-gap tolerance")
    p.add_argument("--no-storage", action="store_true", help="disable the storage technology")
    p.add_argument("--driver", choices=("share", "co2"), default="share")
    p.add_argument("--values", type=_values, default=None,
                   help="driver values, e.g. 0.2,0.4,0.6 (shares) or 0,50,100 (EUR/t)")
    p.add_argument("--hours", type=str, default=None,
                   help="restrict to a window START:LENGTH of the profile")
    p.add_argument("--truncate-year", action="store_true",
                   help="keep only the first 8760 hours of the profile file")
    p.add_argument("--force", action="store_true", help="overwrite a non-empty output directory")
    p.add_argument("--verbose", "-v", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="vrelab", description=__doc__.splitlines()[0],
                                     parents=[common])
    parser.add_argument("--version", action="version", version=f"vrelab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="check config and profile inputs")
    sub.add_parser("run", parents=[common], help="solve one scenario")
    sub.add_parser("sweep", parents=[common], help="solve a grid of scenarios")
    pl = sub.add_parser("plot", parents=[common], help="draw figures from a sweep directory")
    pl.add_argument("sweep_dir", type=Path)
    pl.add_argument("--kind", default="all",
                    help="rldc, pdc, dispatch-rldc, market-values, deltas or all")
    pl.add_argument("--pair", type=Path, default=None,
                    help="the no-storage sweep paired with SWEEP_DIR (needed for deltas)")
    pl.add_argument("--cap-quantile", type=float, default=0.99)
    sub.add_parser("export-lp", parents=[common], help="write the scenario LP as free MPS")
    return parser


def _driver(args) -> str:
    return "vre_share" if args.driver == "share" else "co2_price"


def _load_inputs(args):
    from .techconfig import load_config
    from .timeseries import load_profiles, slice_hours

    cfg = load_config(args.config or reference_config_path())
    p = load_profiles(args.data or reference_data_path(), cfg.profiles,
                      truncate_to_year=args.truncate_year)
    if args.hours:
        start, _, length = args.hours.partition(":")
        p = slice_hours(p, int(start), int(length))
    return cfg, p


def cmd_validate(args) -> int:
    from .techconfig import ConfigError, load_config
    from .timeseries import ProfileError, load_profiles

    cfg_path = args.config or reference_config_path()
    data_path = args.data or reference_data_path()
    try:
        cfg = load_config(cfg_path)
        print(f"config {cfg_path}: ok ({len(cfg.dispatchables)} dispatchable, "
              f"{len(cfg.vres)} VRE, storage {'yes' if cfg.storage else 'no'})")
        p = load_profiles(data_path, cfg.profiles, truncate_to_year=args.truncate_year)
        print(f"profiles {data_path}: ok ({p.hours} hours, profiles {', '.join(p.technologies)}, "
              f"peak load {p.demand.max():.6g} MW)")
    except (OSError, UnicodeDecodeError) as exc:
        print(f"error: {exc}")
        return EXIT_IO
    except (ConfigError, ProfileError) as exc:
        print(f"invalid: {exc}")
        return EXIT_INVALID
    return EXIT_OK


def _tolerances(args, cfg) -> dict:
    tol = args.tol
    return {"feas_tol": tol if tol is not None else cfg.solver.feas_tol,
            "gap_tol": tol if tol is not None else cfg.solver.gap_tol}


def _log_path(args, out: Path):
    """Solver log next to (not inside) the output directory, only with --verbose."""
    if not args.verbose:
        return None
    path = Path(str(out).rstrip("/") + ".solver.log")
    path.write_text("")
    return path


def cmd_run(args) -> int:
    from .model import InfeasibleError, Scenario
    from .report import OutputExistsError, prepare_dir, write_point
    from .scenarios import FailedPoint, OptimalityError, run_scenario
    from .solver import SolverError

    values = args.values or [0.6 if args.driver == "share" else 100.0]
    if len(values) != 1:
        print("error: run takes a single --values entry; use sweep for several")
        return EXIT_INVALID
    out = args.out or Path("vrelab-run")
    try:
        out = prepare_dir(out, args.force)
    except OutputExistsError as exc:
        print(f"refusing: {exc}")
        return EXIT_EXISTS
    cfg, p = _load_inputs(args)
    scenario = Scenario(_driver(args), values[0], storage_enabled=not args.no_storage)
    tol = _tolerances(args, cfg)
    backend = args.backend or cfg.solver.backend
    t0 = time.perf_counter()
    code = EXIT_OK
    try:
        res = run_scenario(cfg, p, scenario, backend=backend, log_path=_log_path(args, out),
                           **tol)
    except InfeasibleError as exc:
        res, code = FailedPoint(scenario, "infeasible", str(exc)), EXIT_INFEASIBLE
    except (SolverError, OptimalityError) as exc:
        res, code = FailedPoint(scenario, "failed", str(exc)), EXIT_SOLVER
    write_point(out, res, config_sha256=cfg.digest(), data_sha256=p.digest(), tolerances=tol)
    if code == EXIT_OK:
        print(f"{scenario.label}: objective {res.objective:.6g} EUR, "
              f"{time.perf_counter() - t0:.1f}s -> {out}")
    else:
        print(f"{scenario.label}: {res.status}: {res.message}")
    return code


def cmd_sweep(args) -> int:
    from .report import OutputExistsError, prepare_dir, write_sweep
    from .scenarios import SweepGrid, sweep

    values = args.values or ([0.2, 0.4, 0.6, 0.8, 0.9] if args.driver == "share"
                             else [0.0, 50.0, 100.0, 150.0, 200.0])
    out = args.out or Path("vrelab-sweep")
    try:
        prepare_dir(out, args.force)
    except OutputExistsError as exc:
        print(f"refusing: {exc}")
        return EXIT_EXISTS
    cfg, p = _load_inputs(args)
    grid = SweepGrid.from_values(_driver(args), values, storage_enabled=not args.no_storage)
    tol = _tolerances(args, cfg)
    result = sweep(grid, cfg, p, backend=args.backend or cfg.solver.backend,
                   log_path=_log_path(args, out), **tol)
    write_sweep(out, result, force=True)
    statuses = [e.status for e in result.entries]
    for e in result.entries:
        extra = f"objective {e.objective:.6g} EUR" if e.status == "ok" else e.message
        print(f"{e.scenario.label}: {e.status} {extra}")
    if "failed" in statuses:
        return EXIT_SOLVER
    if "infeasible" in statuses:
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_plot(args) -> int:
    from .plots import FIGURE_KINDS, PlotInputError, plot

    kinds = FIGURE_KINDS if args.kind == "all" else tuple(args.kind.split(","))
    unknown = [k for k in kinds if k not in FIGURE_KINDS]
    if unknown:
        print(f"error: unknown figure kind(s) {unknown}; choose from {FIGURE_KINDS}")
        return EXIT_INVALID
    code = EXIT_OK
    for kind in kinds:
        if args.kind == "all" and kind == "deltas" and args.pair is None:
            continue
        try:
            path = plot(args.sweep_dir, kind, args.out, pair_dir=args.pair,
                        cap_quantile=args.cap_quantile)
            print(f"{kind}: {path}")
        except (PlotInputError, FileNotFoundError) as exc:
            print(f"error: {exc}")
            code = EXIT_IO
    return code


def cmd_export_lp(args) -> int:
    from .model import Scenario, build_lp, write_mps

    values = args.values or [0.6 if args.driver == "share" else 100.0]
    cfg, p = _load_inputs(args)
    scenario = Scenario(_driver(args), values[0], storage_enabled=not args.no_storage)
    lp = build_lp(cfg, p, scenario)
    out = args.out or Path("scenario.mps")
    if out.exists() and not args.force:
        print(f"refusing: {out} exists (use --force)")
        return EXIT_EXISTS
    write_mps(lp, out)
    print(f"{scenario.label}: {lp.num_rows} rows x {lp.num_cols} columns -> {out}")
    return EXIT_OK


COMMANDS = {"validate": cmd_validate, "run": cmd_run, "sweep": cmd_sweep, "plot": cmd_plot,
            "export-lp": cmd_export_lp}


def main(argv=None) -> int:
    from .techconfig import ConfigError
    from .timeseries import ProfileError

    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ProfileError, ValueError) as exc:
        print(f"invalid: {exc}")
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
