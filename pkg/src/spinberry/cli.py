"""Command-line entry point.

Exit codes: 0 success, 1 a validation failed, 2 usage or configuration
error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path

from .config import ConfigError, load_config, parse_config
from .engine import IntegrationError, StateCorruptionError
from .model import DegeneracyError, RegimeError
from .runner import compare_modes, run_scenario
from .spectrum import FitError

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

PRESETS = ("fig1", "fig2", "spectrum-berry", "dephasing-adiabatic")


def preset_text(name: str) -> str:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}")
    return resources.files("spinberry").joinpath("presets", f"{name}.cfg").read_text(encoding="utf-8")


def _out_dir(args, default: str) -> Path:
    return Path(args.out) if args.out else Path("out") / default


def _emit(report) -> int:
    sys.stdout.write(report.to_text())
    return EXIT_OK if report.passed else EXIT_FAIL


def _simulate(cfg, args) -> int:
    files, report = run_scenario(cfg, _out_dir(args, cfg.name), args.tolerance_scale)
    for f in files:
        print(f"wrote {f}")
    return _emit(report)


def cmd_simulate(args) -> int:
    return _simulate(load_config(args.config), args)


def cmd_spectrum(args) -> int:
    cfg = load_config(args.config)
    extra = tuple(o for o in ("spectrum", "magnetization") if o not in cfg.outputs)
    return _simulate(dataclasses.replace(cfg, outputs=cfg.outputs + extra), args)


def cmd_compare(args) -> int:
    cfg = load_config(args.config)
    report = compare_modes(cfg, args.tolerance_scale)
    out = _out_dir(args, cfg.name)
    for f in report.write(out):
        print(f"wrote {f}")
    return _emit(report)


def cmd_preset(args) -> int:
    cfg = parse_config(preset_text(args.name), name=args.name)
    return _simulate(cfg, args)


def cmd_validate(args) -> int:
    from .acceptance import run_all

    results = run_all(tolerance_scale=args.tolerance_scale, quick=args.quick)
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return EXIT_OK if not failed else EXIT_FAIL


def _sweep_one(path: str, out: str, scale: float):
    cfg = load_config(path)
    _, report = run_scenario(cfg, Path(out) / cfg.name, scale)
    return cfg.name, report.passed


def cmd_sweep(args) -> int:
    names = [Path(c).stem for c in args.configs]
    if len(set(names)) != len(names):
        raise ConfigError("sweep configs must have distinct file names (they name the output directories)")
    for c in args.configs:
        load_config(c)  # fail fast on bad files
    out = args.out or "out/sweep"
    with ProcessPoolExecutor(max_workers=args.jobs) as pool:
        results = list(pool.map(_sweep_one, args.configs, [out] * len(names), [args.tolerance_scale] * len(names)))
    for name, ok in results:
        print(f"{name}: {'pass' if ok else 'FAIL'}")
    return EXIT_OK if all(ok for _, ok in results) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output directory (default: out/<scenario>)")
    common.add_argument("--seedless", action="store_true", help="no effect: nothing here draws random numbers")
    common.add_argument(
        "--tolerance-scale", type=float, default=1.0, metavar="F", help="multiply every check tolerance by F"
    )
    parser = argparse.ArgumentParser(
        prog="spinberry", description="Dissipative spin-1/2 in a precessing field: simulation and checks."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="run a scenario file")
    p.add_argument("config")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", parents=[common], help="cross-check exact, integrated and adiabatic modes")
    p.add_argument("config")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("spectrum", parents=[common], help="run a scenario and emit magnetization spectra")
    p.add_argument("config")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("preset", parents=[common], help="run a bundled scenario")
    p.add_argument("name", choices=PRESETS)
    p.set_defaults(func=cmd_preset)

    p = sub.add_parser("validate", parents=[common], help="run the acceptance criteria")
    p.add_argument("--quick", action="store_true", help="smaller random samples where a criterion draws them")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("sweep", parents=[common], help="run several scenario files in parallel")
    p.add_argument("configs", nargs="+")
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.tolerance_scale <= 0:
        parser.error("--tolerance-scale must be > 0")
    try:
        return args.func(args)
    except (ConfigError, RegimeError, DegeneracyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (IntegrationError, StateCorruptionError, FitError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
