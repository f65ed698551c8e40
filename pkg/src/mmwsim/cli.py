"""Command-line entry point: run campaigns, validate configs, dump geometry.

Subcommands::

    mmwsim run --config scenario.cfg --out results.csv [--format csv|json]
               [--seed N] [--iterations N] [--densities 30,60,120]
               [--regimes hybrid,licensed,pooled] [--case i|ii|config]
               [--jobs N] [--dump-samples samples.csv]
    mmwsim validate --config scenario.cfg
    mmwsim dump-deployment --config scenario.cfg --out deployment.csv [--seed N]

Every flag has a config-file equivalent where one exists; flags override
the environment (``MMWSIM_SEED`` overrides the file's seed) which
overrides the file.  Exit codes: 0 success, 1 runtime error, 2 config
parse/validation or usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import montecarlo
from .association import REGIME_NAMES
from .config import ConfigError, ScenarioConfig, default_config, load_scenario
from .deployment import build_deployment, deployment_rows
from .montecarlo import CampaignStats

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2

SEED_ENV_VAR = "MMWSIM_SEED"

RESULT_HEADER = "density,regime,case,percentile,throughput_bps,samples"


def _fmt(value) -> str:
    return repr(value) if isinstance(value, float) else str(value)


def output_rows(stats: CampaignStats) -> list[dict]:
    """One row per (density, regime, case, percentile), sorted by
    (case, regime, density, percentile)."""
    rows = []
    for cell in stats.rows:
        for label, _ in montecarlo.PERCENTILE_LABELS:
            rows.append(
                {
                    "density": cell.density,
                    "regime": cell.regime,
                    "case": cell.case,
                    "percentile": label,
                    "throughput_bps": cell.p5 if label == "p5" else cell.p50,
                    "samples": cell.samples,
                }
            )
    rows.sort(key=lambda r: (r["case"], r["regime"], r["density"], r["percentile"]))
    return rows


def write_results(stats: CampaignStats, fmt: str, path: str) -> None:
    """Serialize campaign statistics as CSV (fixed header, '.' decimals,
    LF newlines) or JSON (array of the same row objects)."""
    rows = output_rows(stats)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            if fmt == "csv":
                fh.write(RESULT_HEADER + "\n")
                for r in rows:
                    fh.write(
                        f"{_fmt(r['density'])},{r['regime']},{r['case']},"
                        f"{r['percentile']},{_fmt(r['throughput_bps'])},{r['samples']}\n"
                    )
            elif fmt == "json":
                json.dump(rows, fh, indent=2)
                fh.write("\n")
            else:
                raise ValueError(f"unknown output format {fmt!r}")
    except OSError as exc:
        raise RuntimeError(f"cannot write results to {path}: {exc}") from exc


def write_samples(stats: CampaignStats, path: str) -> None:
    """Raw per-iteration dump (debugging aid), one row per
    (case, regime, density, iteration)."""
    if stats.results is None:
        raise RuntimeError("campaign was run without per-iteration results")
    header = (
        "case,regime,density,iteration,throughput_bps,sinr_db,carrier,"
        "bs_operator,bs_index,load,bandwidth_hz"
    )
    keys = sorted(stats.results.keys())
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(header + "\n")
            for case, regime, density in keys:
                for r in stats.results[(case, regime, density)]:
                    carrier = r.carrier if r.carrier is not None else ""
                    bs_index = r.bs_index if r.bs_index is not None else ""
                    fh.write(
                        f"{case},{regime},{_fmt(density)},{r.iteration},"
                        f"{_fmt(r.rate_bps)},{_fmt(r.sinr_db)},{carrier},"
                        f"{r.bs_operator},{bs_index},{r.load},{_fmt(r.bandwidth_hz)}\n"
                    )
    except OSError as exc:
        raise RuntimeError(f"cannot write samples to {path}: {exc}") from exc


def _load_config(path: str | None) -> ScenarioConfig:
    if path is None:
        return default_config()
    return load_scenario(path)


def _apply_overrides(config: ScenarioConfig, args: argparse.Namespace) -> ScenarioConfig:
    """flag > environment > config file."""
    replacements: dict[str, object] = {}
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        try:
            replacements["seed"] = int(env_seed)
        except ValueError:
            raise ConfigError([f"environment {SEED_ENV_VAR}: cannot parse {env_seed!r} as int"])
    if getattr(args, "seed", None) is not None:
        replacements["seed"] = args.seed
    if getattr(args, "iterations", None) is not None:
        replacements["iterations"] = args.iterations
    return dataclasses.replace(config, **replacements) if replacements else config


def _parse_densities(text: str) -> list[float]:
    try:
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ConfigError([f"--densities: cannot parse {text!r} as comma-separated floats"])
    if not values:
        raise ConfigError(["--densities: empty list"])
    return values


def _parse_regimes(text: str) -> list[str]:
    names = [part.strip() for part in text.split(",") if part.strip()]
    for name in names:
        if name not in REGIME_NAMES:
            raise ConfigError([f"--regimes: unknown regime {name!r}; expected from {REGIME_NAMES}"])
    if not names:
        raise ConfigError(["--regimes: empty list"])
    return names


def _cmd_run(args: argparse.Namespace) -> int:
    config = _apply_overrides(_load_config(args.config), args)
    densities = _parse_densities(args.densities)
    regimes = _parse_regimes(args.regimes)
    stats = montecarlo.run_campaign(
        config,
        density_grid=densities,
        regimes=regimes,
        cases=(args.case,),
        jobs=args.jobs,
        keep_results=args.dump_samples is not None,
    )
    write_results(stats, args.format, args.out)
    if args.dump_samples is not None:
        write_samples(stats, args.dump_samples)
    return EXIT_OK


def _cmd_validate(args: argparse.Namespace) -> int:
    # load_scenario validates; parse/validation failures surface as ConfigError
    _load_config(args.config)
    print("config ok")
    return EXIT_OK


def _cmd_dump_deployment(args: argparse.Namespace) -> int:
    """Geometry of iteration 0 (the same draw a campaign would see)."""
    config = _apply_overrides(_load_config(args.config), args)
    dep_rng = np.random.default_rng(montecarlo.iteration_streams(config, iteration=0)[0])
    rows = deployment_rows(build_deployment(config, dep_rng))
    try:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write("operator,role,x,y\n")
            for operator, role, x, y in rows:
                fh.write(f"{operator},{role},{_fmt(x)},{_fmt(y)}\n")
    except OSError as exc:
        raise RuntimeError(f"cannot write deployment to {args.out}: {exc}") from exc
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mmwsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a campaign and write percentile results")
    run.add_argument("--config", help="scenario file (defaults apply if omitted)")
    run.add_argument("--out", required=True, help="output file path")
    run.add_argument("--format", choices=("csv", "json"), default="csv")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--iterations", type=int, default=None)
    run.add_argument(
        "--densities",
        default=",".join(str(d) for d in montecarlo.DEFAULT_DENSITY_GRID),
        help="comma list of BS densities per km^2 per operator",
    )
    run.add_argument(
        "--regimes",
        default=",".join(REGIME_NAMES),
        help="comma list from hybrid|licensed|pooled",
    )
    run.add_argument(
        "--case",
        choices=("i", "ii", "config"),
        default="config",
        help="antenna case preset; 'config' keeps the file's antenna counts",
    )
    run.add_argument("--jobs", type=int, default=1, help="parallel worker count")
    run.add_argument("--dump-samples", default=None, help="also write raw per-iteration CSV")
    run.set_defaults(func=_cmd_run)

    val = sub.add_parser("validate", help="check a scenario file and exit")
    val.add_argument("--config", required=True)
    val.set_defaults(func=_cmd_validate)

    dump = sub.add_parser("dump-deployment", help="write one sampled geometry as CSV")
    dump.add_argument("--config", help="scenario file (defaults apply if omitted)")
    dump.add_argument("--out", required=True)
    dump.add_argument("--seed", type=int, default=None)
    dump.set_defaults(func=_cmd_dump_deployment)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for err in exc.errors:
            print(err, file=sys.stderr)
        return EXIT_CONFIG
    except (RuntimeError, OSError, ValueError) as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
