"""Command-line interface: synth, persistence, landscape, scan, sweep.

Exit codes: 0 success, 2 bad input (flags, files, parse errors), 1 internal
error. Set RIPSCAN_LOG=debug|info|warning to control verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace

from . import io as rio
from .anomaly import (PipelineConfig, log_returns, norm_pipeline, run_pipeline,
                      score_norms, sliding_windows)
from .geometry import PointCloud, distance_matrix
from .homology import compute_persistence, read_diagram_csv, write_diagram_csv
from .landscape import build_landscape, write_landscape_csv
from .rips import build_filtration

log = logging.getLogger("ripscan")


def _parse_dims(text: str) -> frozenset[int]:
    try:
        return frozenset(int(part) for part in text.split(",") if part != "")
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad dimension list {text!r}") from None


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from None


def _parse_shock(text: str) -> rio.ShockSpec:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(
            "shock must be START_MINUTE,DEPTH,DURATION (e.g. 3600,0.06,36)")
    try:
        return rio.ShockSpec(start=int(parts[0]), depth=float(parts[1]),
                             duration=int(parts[2]))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _parse_ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(p) for p in text.split(",") if p != "")
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from None


def _parse_session(text: str):
    from datetime import time as dtime

    try:
        start, end = text.split("-")
        return (dtime.fromisoformat(start), dtime.fromisoformat(end))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"session must look like 09:30-16:00, got {text!r}") from None


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--window", type=int, default=50,
                   help="sliding window length in return vectors")
    p.add_argument("--alpha", type=float, default=0.1,
                   help="moving-statistics decay in (0, 1)")
    p.add_argument("--dims", type=_parse_dims, default=frozenset({1}),
                   help="homology dimensions feeding the landscape, comma separated")
    p.add_argument("--p", type=float, default=1.0, dest="p",
                   help="landscape norm order (>= 1; 1 is exact)")
    p.add_argument("--max-dim", type=int, default=2,
                   help="largest simplex dimension in the filtration")
    p.add_argument("--threshold", type=float, default=None,
                   help="optional distance cap for the filtration")
    p.add_argument("--warmup", type=int, default=1,
                   help="leading norms per session scored as undefined")
    p.add_argument("--inf-cap", type=float, default=None,
                   help="truncate never-dying intervals at this value instead of "
                        "dropping them")
    p.add_argument("--bridge-days", action="store_true",
                   help="treat the input as one continuous session instead of "
                        "restarting per day")
    p.add_argument("--jobs", type=int, default=1,
                   help="worker threads for per-window norms (output identical)")


def _add_input_flags(p: argparse.ArgumentParser, formats: list[str],
                     default_format: str) -> None:
    p.add_argument("input", nargs="+",
                   help="input CSV path(s); multiple paths mean one "
                        "single-instrument bar file each")
    p.add_argument("--format", choices=formats, default=default_format,
                   help="how to parse the input")
    p.add_argument("--timestamps", choices=["iso", "epoch"], default="iso",
                   help="timestamp encoding in bar files (ISO-8601 or integer "
                        "minutes since the Unix epoch)")
    p.add_argument("--fill", choices=["intersect", "ffill"], default="intersect",
                   help="alignment policy when reading multiple bar files")
    p.add_argument("--max-gap", type=int, default=5,
                   help="longest gap (minutes) forward-fill may bridge")
    p.add_argument("--session", type=_parse_session, default=None,
                   metavar="HH:MM-HH:MM",
                   help="keep only bars inside this time-of-day range")


def _config_from(args) -> PipelineConfig:
    return PipelineConfig(
        window=args.window, alpha=args.alpha, dims=args.dims, p=args.p,
        max_dim=args.max_dim, threshold=args.threshold, warmup=args.warmup,
        inf_cap=args.inf_cap)


def _load_series(args) -> rio.AlignedSeries:
    spec = rio.FormatSpec(timestamp_format=args.timestamps)
    policy = rio.AlignPolicy(method=args.fill, max_gap=args.max_gap)
    if len(args.input) > 1:
        named = {}
        for path in args.input:
            name = os.path.splitext(os.path.basename(path))[0]
            named[name] = rio.read_bars(path, spec)
        series = rio.align(named, policy)
    elif args.format == "wide":
        series = rio.read_wide_csv(args.input[0], spec)
    elif args.format == "long":
        series = rio.align(rio.read_long_bars(args.input[0], spec), policy)
    else:
        raise ValueError(f"format {args.format!r} is not a bar format")
    if args.session is not None:
        series = series.session(*args.session)
    return series


def _select_window(args, cfg: PipelineConfig):
    """The point cloud the diagram-oriented commands operate on."""
    if args.format == "points":
        if len(args.input) != 1:
            raise ValueError("point-cloud input takes exactly one file")
        return PointCloud(rio.read_points_csv(args.input[0]))
    series = _load_series(args)
    windows = sliding_windows(log_returns(series), cfg.window)
    if not windows:
        raise ValueError(
            f"input has {len(series)} bars; need at least {cfg.window + 1} "
            "for one window")
    if args.at is None:
        return windows[-1][1]
    try:
        return windows[int(args.at)][1]
    except ValueError:
        pass
    except IndexError:
        raise ValueError(f"window index {args.at} out of range "
                         f"(have {len(windows)})") from None
    want = rio.parse_timestamp(args.at, args.timestamps)
    for ts, cloud in windows:
        if ts == want:
            return cloud
    raise ValueError(f"no window ends at {args.at}")


def _open_out(path: str):
    if path == "-":
        return sys.stdout
    return open(path, "w", newline="")


def _write_out(path: str, write) -> None:
    out = _open_out(path)
    try:
        write(out)
    finally:
        if out is not sys.stdout:
            out.close()


def cmd_synth(args) -> int:
    spec = rio.SynthSpec(
        length=args.length, instruments=args.instruments,
        base_price=args.base_price, volatility=args.vol, drift=args.drift,
        shock=args.shock if args.shock_lags is None or args.shock is None
        else replace(args.shock, lags=args.shock_lags),
        start=rio.parse_timestamp(args.start))
    series = rio.synth_generate(args.seed, spec)
    _write_out(args.out, lambda out: rio.write_aligned_csv(series, out))
    log.info("synthesized %d minutes x %d instruments", len(series),
             spec.instruments)
    return 0


def cmd_persistence(args) -> int:
    cfg = _config_from(args)
    cloud = _select_window(args, cfg)
    filt = build_filtration(distance_matrix(cloud), cfg.max_dim, cfg.threshold)
    diag = compute_persistence(filt)
    _write_out(args.out, lambda out: write_diagram_csv(diag, out))
    if args.fig:
        from .plotting import save_diagram_figure

        save_diagram_figure(diag, args.fig)
    return 0


def cmd_landscape(args) -> int:
    cfg = _config_from(args)
    if args.format == "diagram":
        if len(args.input) != 1:
            raise ValueError("diagram input takes exactly one file")
        diag = read_diagram_csv_path(args.input[0])
    else:
        cloud = _select_window(args, cfg)
        filt = build_filtration(distance_matrix(cloud), cfg.max_dim,
                                cfg.threshold)
        diag = compute_persistence(filt)
    landscape = build_landscape(diag, cfg.dims, cfg.inf_cap)
    _write_out(args.out, lambda out: write_landscape_csv(landscape, out))
    if args.fig:
        from .plotting import save_landscape_figure

        save_landscape_figure(landscape, args.fig)
    return 0


def read_diagram_csv_path(path: str):
    with open(path, "r", newline="") as f:
        return read_diagram_csv(f)


def cmd_scan(args) -> int:
    cfg = _config_from(args)
    series = _load_series(args)
    records = run_pipeline(series, cfg, bridge_days=args.bridge_days,
                           jobs=args.jobs)
    log.info("scored %d windows", len(records))
    _write_out(args.out, lambda out: rio.write_anomaly_csv(records, out))
    if args.plot_data:
        _write_out(args.plot_data,
                   lambda out: rio.write_plot_data_csv(series, records, out))
    if args.fig:
        from .plotting import save_scan_figure

        save_scan_figure(series, records, args.fig)
    return 0


def cmd_sweep(args) -> int:
    if not args.alphas:
        raise ValueError("alpha grid is empty")
    cfg = _config_from(args)
    series = _load_series(args)
    norms = norm_pipeline(series, cfg, bridge_days=args.bridge_days,
                          jobs=args.jobs)
    rows = []
    per_alpha = {}
    for alpha in args.alphas:
        acfg = replace(cfg, alpha=alpha)
        records = [r for session in norms for r in score_norms(session, acfg)]
        per_alpha[alpha] = records
        defined = [r for r in records if r.z is not None]
        if defined:
            peak = max(defined, key=lambda r: abs(r.z))
            rows.append((alpha, abs(peak.z), peak.timestamp))
        else:
            rows.append((alpha, float("nan"), None))
    _write_out(args.out, lambda out: rio.write_sweep_csv(rows, out))
    if args.fig:
        from .plotting import save_sweep_figure

        save_sweep_figure(per_alpha, args.fig)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ripscan",
        description="Scan multivariate minute bars for crash-like anomalies "
                    "via persistence-landscape norms of sliding return windows.")
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("synth", formatter_class=fmt,
                       help="generate a seeded synthetic aligned bar series")
    p.add_argument("--seed", type=int, default=0, help="generator seed")
    p.add_argument("--length", type=int, required=True, help="minutes to generate")
    p.add_argument("--instruments", type=int, default=3)
    p.add_argument("--base-price", type=float, default=100.0)
    p.add_argument("--vol", type=float, default=5e-4,
                   help="per-minute return volatility")
    p.add_argument("--drift", type=float, default=0.0)
    p.add_argument("--shock", type=_parse_shock, default=None,
                   metavar="START,DEPTH,DURATION",
                   help="inject a V-shaped crash, e.g. 3600,0.06,36")
    p.add_argument("--shock-lags", type=_parse_ints, default=None,
                   metavar="L0,L1,...",
                   help="per-instrument shock onset delays in minutes")
    p.add_argument("--start", default="2010-04-26 00:00",
                   help="timestamp of the first bar")
    p.add_argument("--out", default="-", help="output path ('-' for stdout)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("persistence", formatter_class=fmt,
                       help="persistence diagram of a point cloud or bar window")
    _add_input_flags(p, ["points", "wide", "long"], "points")
    _add_pipeline_flags(p)
    p.add_argument("--at", default=None,
                   help="window selector for bar input: end timestamp or index "
                        "(default: last window)")
    p.add_argument("--out", default="-", help="diagram CSV path ('-' for stdout)")
    p.add_argument("--fig", default=None, help="also render the diagram to this file")
    p.set_defaults(func=cmd_persistence)

    p = sub.add_parser("landscape", formatter_class=fmt,
                       help="landscape breakpoints of a cloud, window, or diagram")
    _add_input_flags(p, ["points", "wide", "long", "diagram"], "points")
    _add_pipeline_flags(p)
    p.add_argument("--at", default=None,
                   help="window selector for bar input: end timestamp or index")
    p.add_argument("--out", default="-", help="landscape CSV path ('-' for stdout)")
    p.add_argument("--fig", default=None, help="also render the levels to this file")
    p.set_defaults(func=cmd_landscape)

    p = sub.add_parser("scan", formatter_class=fmt,
                       help="score every window of a bar series")
    _add_input_flags(p, ["wide", "long"], "wide")
    _add_pipeline_flags(p)
    p.add_argument("--out", default="-", help="anomaly CSV path ('-' for stdout)")
    p.add_argument("--plot-data", default=None,
                   help="also write timestamp,price,z rows to this file")
    p.add_argument("--fig", default=None,
                   help="also render a price/score overlay to this file")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("sweep", formatter_class=fmt,
                       help="scan once per alpha and summarize the peak score")
    _add_input_flags(p, ["wide", "long"], "wide")
    _add_pipeline_flags(p)
    p.add_argument("--alphas", type=_parse_floats, required=True,
                   metavar="A1,A2,...", help="alpha grid to sweep")
    p.add_argument("--out", default="-", help="summary CSV path ('-' for stdout)")
    p.add_argument("--fig", default=None,
                   help="also render per-alpha score curves to this file")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=getattr(logging, os.environ.get("RIPSCAN_LOG", "WARNING").upper(),
                      logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
