# cli.py — command-line surface: simulate / detect / estimate / bench
"""
    python cli.py simulate --config run.cfg --out data/ [--seed N]
    python cli.py detect   --in data/pairs.ndjson --out counts.ndjson [--t-gap S] [--div-max RAD] [--no-ensemble]
    python cli.py estimate --in counts.ndjson --out report.ndjson [--orders-right p,q] [--orders-wrong p,q]
    python cli.py bench    --config run.cfg --out bench.ndjson [--seeds N] [--minutes m.csv] [--pdf bench.pdf]

Exit codes: 0 ok, 2 configuration error, 3 data error, 4 statistical degeneracy.
Logs go to stderr; data files only ever contain records.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from arma import estimate_from_counts
from bench import run_bench
from config import RunConfig, apply_overrides, load_run_config, run_config_from_dict, run_config_to_dict
from detector import RecordedOracle, process_stream
from errors import EXIT_DATA, EXIT_OK, RecordError, WWCError
from pdf_export import build_bench_pdf
from records import (BenchRowRecord, CountsRecord, FramePairRecord, HeaderRecord, dense_frame_to_record,
                     frame_pair_to_record, ground_truth_to_record, only, ratio_report_to_record,
                     read_records, record_to_frame_pair, records_to_series, series_to_records,
                     split_header, write_records)
from simulator import generate_scenario, render_dense, render_sparse

log = logging.getLogger("cli")

PAIRS_FILE = "pairs.ndjson"
DENSE_FILE = "dense.ndjson"
GROUND_TRUTH_FILE = "ground_truth.ndjson"


def _header(command: str, run: RunConfig) -> HeaderRecord:
    return HeaderRecord(command=command, config=run_config_to_dict(run))


def _resolve(config_path: Optional[str], header: Optional[HeaderRecord], overrides: Dict[str, str]) -> RunConfig:
    """--config wins over the input header; flag overrides go on top of either."""
    if config_path:
        run = load_run_config(config_path)
    elif header is not None and header.config:
        run = run_config_from_dict(header.config)
    else:
        run = RunConfig()
    return apply_overrides(run, overrides) if overrides else run


def _read(path: str) -> Tuple[Optional[HeaderRecord], list, int]:
    header, rest = split_header(read_records(path))
    return header, rest, (1 if header is not None else 0)


# ─────────────────── commands ───────────────────
def cmd_simulate(args: argparse.Namespace) -> int:
    overrides = {"seed": str(args.seed)} if args.seed is not None else {}
    run = _resolve(args.config, None, overrides)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    scenario = generate_scenario(run.scenario)
    header = _header("simulate", run)
    write_records(out / GROUND_TRUTH_FILE, [header, ground_truth_to_record(scenario.ground_truth)])
    pairs = render_sparse(scenario, run.sampling.t_gap, run.sampling.intra_pair_dt)
    n_pairs = write_records(out / PAIRS_FILE, [header] + [frame_pair_to_record(p) for p in pairs])
    frames = render_dense(scenario, run.sampling.frame_dt)
    n_dense = write_records(out / DENSE_FILE, [header] + [dense_frame_to_record(f) for f in frames])
    log.info("wrote %s: %d frame pairs, %d dense frames", out, n_pairs - 1, n_dense - 1)
    return EXIT_OK


def cmd_detect(args: argparse.Namespace) -> int:
    header, rest, offset = _read(args.input)
    overrides: Dict[str, str] = {}
    if args.t_gap is not None:
        overrides["t_gap"] = args.t_gap
    if args.div_max is not None:
        overrides["div_max"] = args.div_max
    if args.no_ensemble:
        overrides["use_ensemble"] = "false"
    run = _resolve(args.config, header, overrides)

    recs = only(rest, FramePairRecord, args.input, 1 + offset)
    stream = []
    for pos, rec in enumerate(recs, start=1 + offset):
        try:
            stream.append(record_to_frame_pair(rec))
        except WWCError as exc:
            raise RecordError(str(exc), pos) from None

    oracle = RecordedOracle.from_observations(stream) if run.detector.use_ensemble else None
    t_gap = run.sampling.t_gap if (args.t_gap is not None or not stream) else None
    right, wrong = process_stream(stream, oracle, run.detector, t_gap=t_gap, max_workers=args.workers)
    write_records(args.out, [_header("detect", run)] + series_to_records(right, wrong))
    return EXIT_OK


def cmd_estimate(args: argparse.Namespace) -> int:
    header, rest, offset = _read(args.input)
    overrides: Dict[str, str] = {}
    if args.orders_right:
        overrides["orders_right"] = args.orders_right
    if args.orders_wrong:
        overrides["orders_wrong"] = args.orders_wrong
    run = _resolve(args.config, header, overrides)

    recs = only(rest, CountsRecord, args.input, 1 + offset)
    right, wrong = records_to_series(recs, run.sampling.t_gap, 1 + offset)
    report = estimate_from_counts(right, wrong, run.orders_right, run.orders_wrong)
    write_records(args.out, [_header("estimate", run), ratio_report_to_record(report)])
    print(f"ratio={report.ratio:.6f} sum_r={report.sum_r:.3f} sum_w={report.sum_w:.3f}"
          + ("  (negative deflated mass)" if report.negative_mass_warning else ""))
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    overrides: Dict[str, str] = {}
    if args.seeds is not None:
        overrides["seeds"] = str(args.seeds)
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    run = _resolve(args.config, None, overrides)

    result = run_bench(run, minutes=bool(args.minutes))
    rows: List[BenchRowRecord] = []
    for r in result.rows.to_dict("records"):
        rows.append(BenchRowRecord(**_clean(r)))
    for s in result.summary.to_dict("records"):
        s = _clean(s)
        rows.append(BenchRowRecord(method=s["method"], t_gap=s.get("t_gap"),
                                   frames_processed=None if s.get("frames_processed") is None else int(round(s["frames_processed"])),
                                   mean_abs_error=s.get("mean_abs_error"),
                                   ensemble_win_fraction=s.get("ensemble_win_fraction"),
                                   note=f"summary over {s['seeds']} seeds"))
    write_records(args.out, [_header("bench", run)] + rows)

    print(result.summary.to_string(index=False))
    if args.minutes and result.minutes is not None:
        result.minutes.to_csv(args.minutes, index=False)
    if args.pdf:
        Path(args.pdf).write_bytes(build_bench_pdf(
            title="WWC ratio bench", summary=result.summary, rows=result.rows,
            config=run_config_to_dict(run), minutes=result.minutes))
    return EXIT_OK


def _clean(d: Dict) -> Dict:
    """pandas NaN -> None, numpy scalars -> Python scalars."""
    out = {}
    for k, v in d.items():
        if hasattr(v, "item"):
            v = v.item()
        if isinstance(v, float) and v != v:
            v = None
        out[k] = v
    if out.get("seed") is not None:
        out["seed"] = int(out["seed"])
    return out


# ─────────────────── entry ───────────────────
def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wwc", description="Sparse-sampling wrong-way cycling ratio estimation")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    p.add_argument("-q", "--quiet", action="store_true", help="warnings and errors only")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="generate a synthetic scenario and its record files")
    s.add_argument("--config")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_simulate)

    d = sub.add_parser("detect", help="frame pairs -> right/wrong-way count series")
    d.add_argument("--in", dest="input", required=True)
    d.add_argument("--out", required=True)
    d.add_argument("--config")
    d.add_argument("--t-gap", dest="t_gap")
    d.add_argument("--div-max", dest="div_max")
    d.add_argument("--no-ensemble", action="store_true")
    d.add_argument("--workers", type=int, default=1)
    d.set_defaults(func=cmd_detect)

    e = sub.add_parser("estimate", help="count series -> WWC ratio report")
    e.add_argument("--in", dest="input", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--config")
    e.add_argument("--orders-right", dest="orders_right")
    e.add_argument("--orders-wrong", dest="orders_wrong")
    e.set_defaults(func=cmd_estimate)

    b = sub.add_parser("bench", help="compare ensemble, detection-only and tracking on seeded scenarios")
    b.add_argument("--config")
    b.add_argument("--out", required=True)
    b.add_argument("--seeds", type=int)
    b.add_argument("--seed", type=int, help="first seed")
    b.add_argument("--minutes", help="minute-level CSV for the first seed")
    b.add_argument("--pdf", help="PDF report path")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except WWCError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
