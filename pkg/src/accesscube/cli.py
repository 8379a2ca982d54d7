"""Command-line entry points for the accessibility pipeline.

Subcommands mirror the pipeline stages so each is independently invocable
from the previous stage's on-disk artifacts; `run` executes everything.
Flags override config-file values, which override defaults. Exit codes:
0 success, 1 validation failure, 2 compute failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from . import __version__, minicity, pipeline, server

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_COMPUTE = 2

STAGE_FUNCS = {
    "grid": pipeline.stage_grid,
    "temporal": pipeline.stage_temporal,
    "dasymetric": pipeline.stage_dasymetric,
    "odmatrix": pipeline.stage_odmatrix,
    "calibrate": pipeline.stage_calibrate,
    "access": pipeline.stage_access,
    "cube": pipeline.stage_cube,
}


_PATH_FLAGS = (
    ("zones", "zone polygons (GeoJSON)"),
    ("parcels", "land-use parcels (GeoJSON)"),
    ("workers", "worker interval count table"),
    ("jobs", "job interval count table"),
    ("network_nodes", "road graph node file"),
    ("network_edges", "road graph edge file"),
    ("flows", "commuting flow table for calibration"),
    ("hourly_costs_pattern", "per-hour cost matrix pattern, e.g. costs_h{hour:02d}.bin"),
)


def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="JSON run configuration file")
    p.add_argument("--output-dir", help="override the configured output directory")
    for field, help_text in _PATH_FLAGS:
        p.add_argument(f"--{field.replace('_', '-')}", help=f"override: {help_text}")
    p.add_argument("--cell-size", type=float, help="override grid cell size (meters)")
    p.add_argument("--beta", help='override friction coefficient (number or "calibrate")')
    p.add_argument("--decay-family", choices=("power", "exponential", "gaussian"))
    p.add_argument("--distance-floor", type=float, help="impedance floor in meters")
    p.add_argument("--snap-tolerance", type=float, help="centroid snap tolerance in meters")
    p.add_argument("--od-workers", type=int, help="worker threads for the O-D matrix")
    p.add_argument("--directed", action="store_true", default=None,
                   help="treat the road graph as directed (one-way edges)")


def _load_config(args: argparse.Namespace) -> pipeline.RunConfig:
    overrides = {
        "output_dir": args.output_dir,
        "cell_size": args.cell_size,
        "decay_family": args.decay_family,
        "distance_floor": args.distance_floor,
        "snap_tolerance": args.snap_tolerance,
        "od_workers": args.od_workers,
        "directed": args.directed,
    }
    for field, _ in _PATH_FLAGS:
        overrides[field] = getattr(args, field)
    if args.beta is not None:
        overrides["beta"] = args.beta if args.beta == "calibrate" else float(args.beta)
    return pipeline.RunConfig.from_file(args.config, overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="accesscube",
        description="Space-time job accessibility: dasymetric grid, hourly gravity surfaces, cube export.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("validate", "check inputs and report problems without computing"),
        ("grid", "tessellate the analysis grid over the zone extent"),
        ("temporal", "disaggregate interval count tables to hourly bins"),
        ("dasymetric", "redistribute zone counts onto grid cells"),
        ("odmatrix", "compute the origin-destination cost matrix"),
        ("calibrate", "fit the distance-decay friction coefficient"),
        ("access", "evaluate the four accessibility scenarios"),
        ("cube", "assemble and write the space-time cube"),
        ("run", "run the full pipeline"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_config_args(p)

    p = sub.add_parser("serve", help="serve output artifacts over HTTP for the viewer")
    p.add_argument("directory", help="directory containing cube.stc and reports")
    p.add_argument("--port", type=int, default=8731)
    p.add_argument("--host", default="127.0.0.1")

    p = sub.add_parser("minicity", help="generate the bundled synthetic mini-city fixture")
    p.add_argument("directory", help="destination directory")
    p.add_argument("--seed", type=int, default=42)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )

    if args.command == "serve":
        try:
            server.serve(args.directory, args.port, args.host)
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_VALIDATION
        return EXIT_OK

    if args.command == "minicity":
        mc = minicity.generate(args.directory, seed=args.seed)
        print(f"mini-city fixture written to {mc.root}")
        return EXIT_OK

    try:
        cfg = _load_config(args)
    except (pipeline.ConfigError, OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    if args.command == "validate":
        report = pipeline.validate(cfg)
        print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
        return EXIT_OK if report.ok else EXIT_VALIDATION

    if args.command == "run":
        report = pipeline.validate(cfg)
        if not report.ok:
            for err in report.errors:
                print(f"validation error: {err}", file=sys.stderr)
            return EXIT_VALIDATION
        for warning in report.warnings:
            print(f"warning: {warning}", file=sys.stderr)
        try:
            pipeline.run_pipeline(cfg)
        except pipeline.StageError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_COMPUTE
        print(f"run complete; report at {cfg.out(pipeline.REPORT_FILE)}")
        return EXIT_OK

    try:
        STAGE_FUNCS[args.command](cfg)
    except Exception as exc:
        print(f"error in stage {args.command}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    print(f"stage {args.command} complete; artifacts in {cfg.path(cfg.output_dir)}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
