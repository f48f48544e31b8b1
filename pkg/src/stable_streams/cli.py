"""Command line entry point: ``stable-streams {generate,detect,evaluate,export-timeline}``.

Exit codes: 0 on success, 1 on internal errors, 2 on usage or input errors.
Every command writes ``<output>.manifest.json`` next to its main output.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .benchmark_gen import GeneratorParams, generate
from .documents import (
    COMMUNITIES_SCHEMA,
    REPORT_SCHEMA,
    SCHEMA_VERSION,
    TRUTH_SCHEMA,
    DocumentError,
    communities_doc,
    read_json,
    store_from_doc,
    truth_doc,
    truth_from_doc,
    write_json,
)
from .evaluation import community_stats, detect_and_match, timeline_nmi
from .linkstream import ParseError, StreamFormat, parse_linkstream, snapshot_sequence, write_linkstream
from .multiscale import Config, LadderError, default_workers, detect, scale_ladder
from .timeline import filter_by_length, timeline_csv, timeline_svg

logger = logging.getLogger("stable_streams")


class UsageError(Exception):
    """Problem with the command line or its inputs (exit code 2)."""


# ----------------------------------------------------------------------
# config file handling
# ----------------------------------------------------------------------

# flag dest -> converter, shared by the command line and key=value config files
DETECT_KEYS = {
    "theta_q": float,
    "theta_s": float,
    "theta_p": int,
    "theta_e": float,
    "theta_gamma": float,
    "t0": float,
    "seed": int,
    "workers": int,
    "format": str,
    "delimiter": str,
    "cols": str,
    "skip_header": int,
    "time_unit": str,
    "strict": lambda s: s.strip().lower() in ("1", "true", "yes", "on"),
    "binary": lambda s: s.strip().lower() in ("1", "true", "yes", "on"),
}


def read_config_file(path: str) -> dict:
    """Flat ``key = value`` file; keys use flag names with or without dashes; ``#`` starts a comment."""
    values = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc.strerror}") from None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if key not in DETECT_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = DETECT_KEYS[key](value)
        except ValueError:
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {value!r}") from None
    return values


def _number(x: float):
    return int(x) if isinstance(x, float) and x.is_integer() else x


def resolve_detect_options(args: argparse.Namespace) -> dict:
    """Merge defaults, config file and flags (flags win)."""
    opts = {
        "theta_q": 0.7,
        "theta_s": 0.3,
        "theta_p": 3,
        "theta_e": None,
        "theta_gamma": 1,
        "t0": None,
        "seed": 0,
        "workers": None,
        "format": "generic",
        "delimiter": None,
        "cols": None,
        "skip_header": 0,
        "time_unit": None,
        "strict": False,
        "binary": False,
    }
    if getattr(args, "config", None):
        opts.update(read_config_file(args.config))
    for key in DETECT_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            opts[key] = value
    if opts["workers"] is None:
        opts["workers"] = default_workers()
    for key in ("theta_gamma", "t0"):
        if opts[key] is not None:
            opts[key] = _number(opts[key])
    return opts


def stream_format(opts: dict) -> StreamFormat:
    overrides = {}
    if opts.get("cols"):
        try:
            t, u, v = (int(x) for x in opts["cols"].split(","))
        except ValueError:
            raise UsageError("--cols expects three comma-separated integers t,u,v") from None
        overrides.update(t_col=t, u_col=u, v_col=v)
    if opts.get("delimiter"):
        d = opts["delimiter"]
        overrides["delimiter"] = {"tab": "\t", "\\t": "\t", "comma": ",", "whitespace": None}.get(d, d)
    if opts.get("skip_header"):
        overrides["skip_header"] = opts["skip_header"]
    if opts.get("time_unit"):
        overrides["time_unit"] = opts["time_unit"]
    try:
        return StreamFormat.preset(opts["format"], **overrides)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def build_config(opts: dict) -> Config:
    try:
        return Config(
            theta_q=opts["theta_q"],
            theta_s=opts["theta_s"],
            theta_p=opts["theta_p"],
            theta_gamma=opts["theta_gamma"],
            theta_e=opts["theta_e"],
            t0=opts["t0"],
            rng_seed=opts["seed"],
            binary=opts["binary"],
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# ----------------------------------------------------------------------
# I/O helpers
# ----------------------------------------------------------------------


def _write_text(path: str | Path, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror}") from None


def _write_doc(doc: dict, path: str | Path) -> None:
    try:
        write_json(doc, path)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror}") from None


def _read_doc(path: str, schema: str) -> dict:
    if not Path(path).is_file():
        raise UsageError(f"no such file: {path}")
    try:
        return read_json(path, schema)
    except DocumentError as exc:
        raise UsageError(str(exc)) from None


def write_manifest(args: argparse.Namespace, main_output: str, payload: dict, started: float) -> None:
    manifest = {
        "schema": "stable-streams/run-manifest",
        "version": SCHEMA_VERSION,
        "command": args.command,
        "tool_version": __version__,
        "argv": list(getattr(args, "argv", [])),
        "wall_clock_seconds": round(time.perf_counter() - started, 6),
        **payload,
    }
    _write_doc(manifest, f"{main_output}.manifest.json")


def _load_stream(path: str, opts: dict):
    if not Path(path).is_file():
        raise UsageError(f"no such file: {path}")
    fmt = stream_format(opts)
    try:
        return parse_linkstream(path, fmt, strict=opts["strict"]), fmt
    except ParseError as exc:
        raise UsageError(f"{path}: {exc}") from None


# ----------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------


def cmd_generate(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    try:
        params = GeneratorParams(T=args.T, N=args.N, p=args.p, SC=args.SC, rng_seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    truth_path = args.truth or f"{args.out}.truth.json"
    stream, truth = generate(params)
    try:
        write_linkstream(stream, args.out)
    except OSError as exc:
        raise UsageError(f"cannot write {args.out}: {exc.strerror}") from None
    _write_doc(truth_doc(truth), truth_path)
    write_manifest(
        args,
        args.out,
        {"params": params.to_dict(), "rng_seed": params.rng_seed, "inputs": [], "outputs": [args.out, truth_path]},
        started,
    )
    logger.info("wrote %d interactions to %s and %d planted communities to %s",
                len(stream), args.out, len(truth.planted), truth_path)
    return 0


def cmd_detect(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    opts = resolve_detect_options(args)
    config = build_config(opts)
    stream, fmt = _load_stream(args.input, opts)
    try:
        store = detect(stream, config, workers=opts["workers"])
    except LadderError as exc:
        raise UsageError(str(exc)) from None
    _write_doc(communities_doc(store, config, fmt.time_unit), args.out)
    write_manifest(
        args,
        args.out,
        {
            "config": config.to_dict(),
            "format": {**fmt.__dict__},
            "strict": opts["strict"],
            "workers": opts["workers"],
            "rng_seed": config.rng_seed,
            "inputs": [args.input],
            "outputs": [args.out],
        },
        started,
    )
    logger.info("found %d stable communities", len(store))
    return 0


def _report_table(runs: list[dict]) -> str:
    cols = ["run", "method", "gamma", "nmi", "community_count", "mean_persistence", "mean_size",
            "mean_stability", "mean_density", "mean_Q"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in runs:
        stats = r.get("stats") or {}
        w.writerow([r["run"], r["method"], r.get("gamma", ""), r["nmi"]] + [
            "" if stats.get(c) is None else stats.get(c) for c in cols[4:]
        ])
    return buf.getvalue()


def cmd_evaluate(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    opts = resolve_detect_options(args)
    truths = [truth_from_doc(_read_doc(p, TRUTH_SCHEMA)) for p in args.truth]
    runs = []
    if args.baseline:
        if not args.stream or len(args.stream) != len(truths):
            raise UsageError("--baseline needs one --stream per --truth file")
        for k, (spath, truth) in enumerate(zip(args.stream, truths)):
            stream, _ = _load_stream(spath, opts)
            T = truth.params.T if truth.params else stream.t_max + 1
            gammas = [_number(args.gamma)] if args.gamma else scale_ladder(
                stream.duration, opts["theta_p"], opts["theta_gamma"], integral=stream.integral)
            for g in gammas:
                chains = detect_and_match(
                    snapshot_sequence(stream, g, opts["t0"], opts["binary"]), args.match_threshold,
                    rng_seed=opts["seed"])
                nmi = _nmi(chains, truth, T, args.stride)
                row = {"run": k, "method": "detect-match", "gamma": g, "nmi": nmi,
                       "truth": args.truth[k], "stream": spath}
                if args.stats:
                    row["stats"] = community_stats(chains, stream, opts["t0"], opts["binary"]).to_dict()
                runs.append(row)
    else:
        if not args.communities or len(args.communities) != len(truths):
            raise UsageError("give one --communities file per --truth file")
        if args.stream and len(args.stream) != len(truths):
            raise UsageError("give one --stream file per --truth file")
        for k, (cpath, truth) in enumerate(zip(args.communities, truths)):
            store = store_from_doc(_read_doc(cpath, COMMUNITIES_SCHEMA))
            if truth.params is None:
                raise UsageError(f"{args.truth[k]}: ground truth lacks generator params (needed for T and N)")
            row = {"run": k, "method": "multiscale", "nmi": _nmi(store, truth, truth.params.T, args.stride),
                   "communities": cpath, "truth": args.truth[k]}
            if args.stream:
                stream, _ = _load_stream(args.stream[k], opts)
                row["stats"] = community_stats(store, stream, opts["t0"], opts["binary"]).to_dict()
            runs.append(row)
    values = [r["nmi"] for r in runs]
    report = {
        "schema": REPORT_SCHEMA,
        "version": SCHEMA_VERSION,
        "runs": runs,
        "nmi_mean": float(np.mean(values)),
        "nmi_std": float(np.std(values)),
        "stride": args.stride,
    }
    _write_doc(report, args.out)
    if args.table:
        _write_text(args.table, _report_table(runs))
    write_manifest(
        args,
        args.out,
        {"inputs": list(args.communities or []) + list(args.truth) + list(args.stream or []),
         "outputs": [args.out] + ([args.table] if args.table else []),
         "baseline": args.baseline, "gamma": args.gamma, "match_threshold": args.match_threshold,
         "rng_seed": opts["seed"]},
        started,
    )
    print(f"timeline NMI: mean {report['nmi_mean']:.4f} (std {report['nmi_std']:.4f}) over {len(runs)} run(s)")
    return 0


def _nmi(detected, truth, T, stride) -> float:
    try:
        return timeline_nmi(detected, truth, T, stride=stride)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_export_timeline(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    doc = _read_doc(args.communities, COMMUNITIES_SCHEMA)
    try:
        store = store_from_doc(doc)
    except DocumentError as exc:
        raise UsageError(str(exc)) from None
    selected = filter_by_length(list(store), args.min_length, args.max_length)
    outputs = []
    csv_path = args.csv or f"{args.communities}.timeline.csv"
    _write_text(csv_path, timeline_csv(selected))
    outputs.append(csv_path)
    if not args.no_svg:
        svg_path = args.svg or f"{args.communities}.timeline.svg"
        _write_text(svg_path, timeline_svg(selected, seed=args.color_seed))
        outputs.append(svg_path)
    write_manifest(
        args,
        csv_path,
        {"inputs": [args.communities], "outputs": outputs, "min_length": args.min_length,
         "max_length": args.max_length, "rng_seed": args.color_seed},
        started,
    )
    return 0


# ----------------------------------------------------------------------
# argument parsing
# ----------------------------------------------------------------------


def _add_stream_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("input format")
    g.add_argument("--format", choices=["generic", "sociopatterns", "snap"], default=None)
    g.add_argument("--delimiter", default=None, help="tab, comma, whitespace or a literal character")
    g.add_argument("--cols", default=None, metavar="T,U,V", help="0-based column indices of t, u and v")
    g.add_argument("--skip-header", type=int, default=None, metavar="N")
    g.add_argument("--time-unit", default=None)
    g.add_argument("--strict", action="store_const", const=True, default=None,
                   help="abort on the first malformed line instead of skipping it")


def _add_detector_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("detector")
    g.add_argument("--theta-q", type=float, default=None, help="seed quality threshold (0.7)")
    g.add_argument("--theta-s", type=float, default=None, help="redundancy similarity threshold (0.3)")
    g.add_argument("--theta-p", type=int, default=None, help="minimum number of windows (3)")
    g.add_argument("--theta-e", type=float, default=None, help="expansion quality threshold (theta-s)")
    g.add_argument("--theta-gamma", type=float, default=None, help="finest window length (1)")
    g.add_argument("--t0", type=float, default=None, help="window grid anchor (first interaction)")
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--workers", type=int, default=None,
                   help="seed discovery processes (default: $STABLE_STREAMS_WORKERS or all cores)")
    g.add_argument("--binary", action="store_const", const=True, default=None,
                   help="unweighted snapshots (each pair counts once per window)")
    g.add_argument("--config", default=None, help="key=value file; flags override it")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stable-streams", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="synthetic stream with planted communities")
    p.add_argument("--T", type=int, default=5000)
    p.add_argument("--N", type=int, default=100)
    p.add_argument("--p", type=float, default=None, help="noise edge probability (10/N)")
    p.add_argument("--SC", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", required=True, help="edge list output")
    p.add_argument("--truth", default=None, help="ground-truth JSON (default <out>.truth.json)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("detect", help="find stable communities in a link stream")
    p.add_argument("input")
    p.add_argument("-o", "--out", required=True, help="communities JSON output")
    _add_stream_flags(p)
    _add_detector_flags(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("evaluate", help="timeline NMI and community statistics against ground truth")
    p.add_argument("--communities", nargs="+", default=None)
    p.add_argument("--truth", nargs="+", required=True)
    p.add_argument("--stream", nargs="+", default=None, help="streams (needed for statistics and baselines)")
    p.add_argument("--baseline", choices=["detect-match"], default=None)
    p.add_argument("--gamma", type=float, default=None, help="baseline window length (default: every ladder scale)")
    p.add_argument("--match-threshold", type=float, default=0.7)
    p.add_argument("--stats", action="store_true", help="also compute statistics of baseline communities")
    p.add_argument("--stride", type=int, default=1, help="evaluate every k-th step")
    p.add_argument("-o", "--out", required=True, help="report JSON output")
    p.add_argument("--table", default=None, help="flat CSV table output")
    _add_stream_flags(p)
    _add_detector_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("export-timeline", help="CSV and SVG timeline of detected communities")
    p.add_argument("communities")
    p.add_argument("--csv", default=None)
    p.add_argument("--svg", default=None)
    p.add_argument("--no-svg", action="store_true")
    p.add_argument("--min-length", type=float, default=None, help="keep periods at least this long")
    p.add_argument("--max-length", type=float, default=None, help="keep periods shorter than this")
    p.add_argument("--color-seed", type=int, default=0)
    p.set_defaults(func=cmd_export_timeline)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    args.argv = argv
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s"
    )
    if args.command == "generate" and args.p is None:
        args.p = 10 / args.N
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        logger.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
