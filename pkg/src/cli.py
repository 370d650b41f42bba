"""``anwser`` command line: landscapes, network dumps and heatmaps.

Exit codes: 0 success, 2 configuration or table error, 3 runtime error.
"""

import argparse
import logging
import sys
import time
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from . import __version__
from .analytic_n2 import landscape_from_config
from .config import (
    ExperimentConfig,
    GridSection,
    Method,
    apply_overrides,
    default_log_level,
    default_threads,
    load_config,
)
from .credit_network import summarize, write_edge_list
from .errors import AnwserError, ConfigError
from .landscape import (
    CellStatus,
    LandscapeRow,
    LandscapeTable,
    RunManifest,
    read_manifest,
    read_table,
    write_csv,
    write_json,
    write_manifest,
)
from .monte_carlo import (
    draw_network,
    iter_landscape,
    landscape_metadata,
    network_stream,
)
from .plotting import render_landscape

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _load_experiment(path: str) -> Tuple[ExperimentConfig, Optional[RunManifest]]:
    """A TOML experiment file, or the manifest of an earlier run."""
    if Path(path).suffix == ".json":
        manifest = read_manifest(path)
        return manifest.config, manifest
    return load_config(path), None


def _resolve_landscape_args(
    args: argparse.Namespace,
) -> Tuple[ExperimentConfig, Method]:
    config, manifest = _load_experiment(args.config)
    config = apply_overrides(
        config,
        {"simulation.n_samples": args.n_samples, "simulation.master_seed": args.seed},
    )
    if args.grid:
        try:
            grid = GridSection.parse(args.grid)
        except ValueError as e:
            raise ConfigError(f"invalid --grid: {e}") from e
        config = apply_overrides(
            config,
            {
                "grid.delta": grid.delta.model_dump(),
                "grid.epsilon": grid.epsilon.model_dump(),
            },
        )
    if args.method:
        method = Method(args.method)
    else:
        method = manifest.method if manifest else Method.MONTE_CARLO
    if method is Method.ANALYTIC:
        config.require_analytic()
    else:
        config.require_monte_carlo()
    return config, method


def _output_format(args: argparse.Namespace) -> str:
    if args.format:
        return args.format
    return "json" if Path(args.out).suffix == ".json" else "csv"


def _manifest_path(out: Path) -> Path:
    return out.with_name(f"{out.stem}.manifest.json")


def _build_manifest(
    config: ExperimentConfig, method: Method, rows: List[LandscapeRow], duration: float
) -> RunManifest:
    return RunManifest(
        config=config,
        method=method,
        master_seed=config.simulation.master_seed,
        version=__version__,
        duration_seconds=duration,
        shock=config.shock_distribution().as_dict(),
        rejections={
            f"{row.delta:g},{row.epsilon:g}": row.n_rejected
            for row in rows
            if row.n_rejected
        },
        statuses={
            f"{row.delta:g},{row.epsilon:g}": CellStatus(row.status).value
            for row in rows
            if row.status is not CellStatus.OK
        },
    )


def _write_landscape(
    table: LandscapeTable, manifest: RunManifest, out: Path, fmt: str
) -> None:
    out.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        write_json(table, out, manifest)
    else:
        write_csv(table, out)
    write_manifest(manifest, _manifest_path(out))
    logger.info("wrote %d rows to %s", len(table), out)


def _cmd_landscape(args: argparse.Namespace) -> int:
    try:
        config, method = _resolve_landscape_args(args)
        threads = args.threads or default_threads()
    except ConfigError as e:
        logger.error("%s", e)
        return EXIT_CONFIG

    out, fmt = Path(args.out), _output_format(args)
    started = time.perf_counter()
    rows: List[LandscapeRow] = []
    status = EXIT_OK
    try:
        if method is Method.ANALYTIC:
            table = landscape_from_config(config)
            rows, metadata = table.rows, table.metadata
        else:
            metadata = landscape_metadata(config)
            for row in iter_landscape(config, threads):
                rows.append(row)
    except Exception:
        logger.exception("landscape run failed after %d cells", len(rows))
        metadata = {"method": method.value, "partial": True}
        status = EXIT_RUNTIME

    manifest = _build_manifest(config, method, rows, time.perf_counter() - started)
    try:
        _write_landscape(LandscapeTable(rows, metadata), manifest, out, fmt)
    except OSError as e:
        logger.error("cannot write %s: %s", out, e)
        return EXIT_RUNTIME
    return status


def _cmd_dump_network(args: argparse.Namespace) -> int:
    try:
        config = apply_overrides(
            load_config(args.config), {"simulation.master_seed": args.seed}
        )
    except ConfigError as e:
        logger.error("%s", e)
        return EXIT_CONFIG

    out = Path(args.out)
    try:
        rng = network_stream(config.simulation.master_seed, 0, 0)
        network, system, rejected = draw_network(config, rng)
        out.parent.mkdir(parents=True, exist_ok=True)
        write_edge_list(network, out)
        banks = pd.DataFrame(
            {
                "index": np.arange(system.n_banks),
                "total_assets": system.total_assets,
                "loans": system.interbank_loans,
                "borrowings": system.interbank_borrowings,
            }
        )
        banks.to_csv(
            out.with_name(f"{out.stem}.banks.txt"),
            sep=" ",
            index=False,
            float_format="%.17g",
            lineterminator="\n",
        )
    except (AnwserError, OSError) as e:
        logger.error("network dump failed: %s", e)
        return EXIT_RUNTIME

    summary = summarize(network)
    logger.info(
        "network: N=%d edges=%d kappa=%.3f rho5=%.4f r=%.6f max_degree=%d "
        "median_degree=%g rejected=%d",
        summary.n_banks,
        summary.n_edges,
        summary.kappa,
        summary.rho5,
        summary.heterogeneity,
        summary.max_degree,
        summary.median_degree,
        rejected,
    )
    return EXIT_OK


def _cmd_plot(args: argparse.Namespace) -> int:
    try:
        table = read_table(args.table)
    except ConfigError as e:
        logger.error("%s", e)
        return EXIT_CONFIG
    try:
        render_landscape(table, args.out)
    except ConfigError as e:
        logger.error("cannot plot %s: %s", args.table, e)
        return EXIT_CONFIG
    except OSError as e:
        logger.error("cannot write %s: %s", args.out, e)
        return EXIT_RUNTIME
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="anwser", description="Systemic-risk landscapes of interbank networks"
    )
    parser.add_argument(
        "--log-level",
        default=None,
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Defaults to ANWSER_LOG_LEVEL, else INFO",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_land = sub.add_parser("landscape", help="Compute a risk landscape")
    p_land.add_argument("config", help="TOML experiment file or run manifest (.json)")
    p_land.add_argument("--n-samples", type=int, default=None)
    p_land.add_argument("--seed", type=int, default=None, help="Master seed")
    p_land.add_argument(
        "--grid",
        default=None,
        help="delta_min:delta_max:steps,eps_min:eps_max:steps",
    )
    p_land.add_argument("--method", choices=[m.value for m in Method], default=None)
    p_land.add_argument("--out", required=True)
    p_land.add_argument("--format", choices=["csv", "json"], default=None)
    p_land.add_argument(
        "--threads",
        type=int,
        default=None,
        help="Worker threads; defaults to ANWSER_THREADS, else CPU count",
    )
    p_land.set_defaults(func=_cmd_landscape)

    p_dump = sub.add_parser("dump-network", help="Write one sampled credit network")
    p_dump.add_argument("config")
    p_dump.add_argument("--seed", type=int, default=None)
    p_dump.add_argument("--out", required=True)
    p_dump.set_defaults(func=_cmd_dump_network)

    p_plot = sub.add_parser("plot", help="Render landscape heatmaps")
    p_plot.add_argument("table", help="Landscape CSV or JSON")
    p_plot.add_argument("out", help="Image path; _mean/_q999 suffixes are added")
    p_plot.set_defaults(func=_cmd_plot)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=args.log_level or default_log_level(),
        format=LOG_FORMAT,
        stream=sys.stderr,
        force=True,
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
