"""Command-line surface: complexity tables, encoder runs on feature files,
the verification suite, scaling benchmarks, and streaming cost reports.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 I/O or
format error, 4 configuration/weight mismatch.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time

import numpy as np

from .complexity import (
    REFERENCE_STREAMING_FACTORS,
    CostQuery,
    CostReport,
    CostTable,
    TableRow,
    custom_table,
    streaming_report,
    table_generate,
)
from .encoder import (
    ConfigMismatchError,
    WeightFileError,
    encoder_forward,
    init_weights,
    load_weights,
    save_weights,
)
from .fileio import (
    FeatureFileError,
    RunConfigError,
    load_run_config,
    read_features,
    write_features,
)
from .verify import run_suite

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_MISMATCH = 4

BENCH_D_MODEL = 64
BENCH_N_HEADS = 4


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


# ----------------------------------------------------------------------
# table rendering
# ----------------------------------------------------------------------

_CSV_HEADER = ["label", "R", "M", "total", "attention_term", "xi_ap", "xi_pp",
               "display"]


def _row_record(row: TableRow) -> list[str]:
    r = row.report
    return [row.label,
            "-" if row.window_size is None else str(row.window_size),
            "-" if row.chunk_size is None else str(row.chunk_size),
            str(r.total), str(r.attention_term), str(r.xi_ap), str(r.xi_pp),
            r.display]


def render_csv(table: CostTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_CSV_HEADER)
    for row in table.rows:
        writer.writerow(_row_record(row))
    for note in table.notes:
        buf.write(f"# note: {note}\n")
    return buf.getvalue()


def parse_csv(text: str) -> CostTable:
    """Inverse of :func:`render_csv` (used by the round-trip checks)."""
    notes = []
    lines = []
    for line in text.splitlines():
        if line.startswith("# note: "):
            notes.append(line[len("# note: "):])
        elif line:
            lines.append(line)
    reader = csv.reader(lines)
    header = next(reader)
    if header != _CSV_HEADER:
        raise ValueError(f"unexpected CSV header: {header}")
    rows = []
    for rec in reader:
        label, window, chunk, total, att, xi_ap, xi_pp, display = rec
        report = CostReport(int(att), int(xi_ap), int(xi_pp))
        if report.total != int(total) or report.display != display:
            raise ValueError(f"inconsistent CSV row: {rec}")
        rows.append(TableRow(label,
                             None if window == "-" else int(window),
                             None if chunk == "-" else int(chunk),
                             report))
    return CostTable("parsed", 0, 0, tuple(rows), tuple(notes))


def render_markdown(table: CostTable) -> str:
    lines = [f"### {table.preset} (N={table.n_frames}, d_model={table.d_model})",
             "",
             "| " + " | ".join(_CSV_HEADER) + " |",
             "|" + "---|" * len(_CSV_HEADER)]
    for row in table.rows:
        lines.append("| " + " | ".join(_row_record(row)) + " |")
    if table.notes:
        lines.append("")
        for note in table.notes:
            lines.append(f"- note: {note}")
    return "\n".join(lines) + "\n"


def render_json(table: CostTable) -> str:
    payload = {
        "preset": table.preset,
        "n": table.n_frames,
        "d_model": table.d_model,
        "rows": [{"label": row.label, "R": row.window_size, "M": row.chunk_size,
                  "total": row.report.total,
                  "attention_term": row.report.attention_term,
                  "xi_ap": row.report.xi_ap, "xi_pp": row.report.xi_pp,
                  "display": row.report.display}
                 for row in table.rows],
        "notes": list(table.notes),
    }
    return json.dumps(payload, indent=2) + "\n"


_RENDERERS = {"csv": render_csv, "md": render_markdown, "json": render_json}


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------

def cmd_complexity(args) -> int:
    custom_flags = [name for name in
                    ("n", "d_model", "type", "nu_lb", "nu_la", "chunk",
                     "mechanism", "heads", "d_in")
                    if getattr(args, name.replace("-", "_")) is not None]
    if args.preset and custom_flags:
        raise CliError(
            f"--preset conflicts with custom flags: "
            f"{', '.join('--' + f.replace('_', '-') for f in custom_flags)}",
            EXIT_USAGE)
    if args.preset:
        table = table_generate(args.preset)
    else:
        if args.n is None or args.d_model is None or args.type is None:
            raise CliError("custom queries require --n, --d-model and --type",
                           EXIT_USAGE)
        try:
            query = CostQuery(
                n_frames=args.n, d_model=args.d_model, attention_type=args.type,
                look_back=args.nu_lb or 0, look_ahead=args.nu_la or 0,
                chunk_size=args.chunk, mechanism=args.mechanism,
                pool_heads=args.heads, bottleneck_dim=args.d_in)
        except ValueError as exc:
            raise CliError(str(exc), EXIT_USAGE) from exc
        table = custom_table(query)
    sys.stdout.write(_RENDERERS[args.format](table))
    return EXIT_OK


def cmd_encode(args) -> int:
    try:
        cfg, precision = load_run_config(args.config)
    except RunConfigError as exc:
        raise CliError(str(exc), EXIT_IO) from exc
    try:
        weights = load_weights(args.weights, expected_config=cfg)
    except ConfigMismatchError as exc:
        raise CliError(str(exc), EXIT_MISMATCH) from exc
    except (WeightFileError, OSError) as exc:
        raise CliError(str(exc), EXIT_IO) from exc
    try:
        features = read_features(args.input)
    except FeatureFileError as exc:
        raise CliError(str(exc), EXIT_IO) from exc
    if features.shape[1] != cfg.input_dim:
        raise CliError(
            f"{args.input}: {features.shape[1]} features per frame, but the "
            f"configuration expects {cfg.input_dim}", EXIT_MISMATCH)
    if precision == "float32":
        features = features.astype(np.float32).astype(np.float64)
    output = encoder_forward(features, weights)
    try:
        write_features(args.output, output, bits=64)
    except (FeatureFileError, OSError) as exc:
        raise CliError(str(exc), EXIT_IO) from exc
    return EXIT_OK


def cmd_init_weights(args) -> int:
    try:
        cfg, _ = load_run_config(args.config)
    except RunConfigError as exc:
        raise CliError(str(exc), EXIT_IO) from exc
    try:
        save_weights(init_weights(cfg), args.output)
    except OSError as exc:
        raise CliError(str(exc), EXIT_IO) from exc
    return EXIT_OK


def cmd_verify(args) -> int:
    results = run_suite(args.suite, seed=args.seed)
    for result in results:
        print(result.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_VERIFY_FAILED if failed else EXIT_OK


def cmd_bench(args) -> int:
    from .attention import MhaParams, mha_forward, restricted_mha_forward
    from .attention import HeadParams, RestrictionWindow
    from .dilation import DilationConfig, dilated_mha_forward
    from .numerics import seeded_gaussian

    n_list = args.n_list
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise CliError(f"--n-list must be strictly ascending, got {n_list}",
                       EXIT_USAGE)
    if args.repeats < 1:
        raise CliError("--repeats must be >= 1", EXIT_USAGE)
    d_model, n_heads = BENCH_D_MODEL, BENCH_N_HEADS
    d_head = d_model // n_heads
    window = RestrictionWindow(args.nu_lb, args.nu_la)
    cfg = DilationConfig("mean_pool", args.chunk)
    heads = tuple(
        HeadParams(seeded_gaussian(d_model, d_head, seed=3 * i),
                   seeded_gaussian(d_model, d_head, seed=3 * i + 1),
                   seeded_gaussian(d_model, d_head, seed=3 * i + 2))
        for i in range(n_heads))
    params = MhaParams(heads, seeded_gaussian(n_heads * d_head, d_model, seed=99))

    def forward(kind, x):
        if kind == "full":
            mha_forward(x, x, params)
        elif kind == "restricted":
            restricted_mha_forward(x, params, window)
        else:
            dilated_mha_forward(x, params, window, cfg)

    types = [args.type] if args.type else ["full", "dilated"]
    records = []
    slopes = {}
    for kind in types:
        medians = []
        for n in n_list:
            x = seeded_gaussian(n, d_model, seed=n)
            forward(kind, x)  # warm-up, discarded
            samples = []
            for _ in range(args.repeats):
                start = time.perf_counter()
                forward(kind, x)
                samples.append(time.perf_counter() - start)
            median = float(np.median(samples))
            medians.append(median)
            records.append((kind, n, median))
        slope = float(np.polyfit(np.log(n_list), np.log(medians), 1)[0])
        slopes[kind] = slope

    if args.format == "json":
        payload = {
            "d_model": d_model, "n_heads": n_heads, "repeats": args.repeats,
            "rows": [{"type": k, "n": n, "median_seconds": t}
                     for k, n, t in records],
            "slopes": slopes,
        }
        print(json.dumps(payload, indent=2))
    else:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(["type", "n", "median_seconds"])
        for kind, n, t in records:
            writer.writerow([kind, n, f"{t:.6f}"])
        for kind, slope in slopes.items():
            sys.stdout.write(f"# loglog_slope {kind} {slope:.3f}\n")
    return EXIT_OK


def cmd_streaming_cost(args) -> int:
    if args.past_seconds < 0:
        raise CliError("--past-seconds must be non-negative", EXIT_USAGE)
    for name in ("frame_ms", "chunk", "heads", "d_in", "d_model"):
        if getattr(args, name) <= 0:
            raise CliError(f"--{name.replace('_', '-')} must be positive",
                           EXIT_USAGE)
    if args.nu_lb < 0 or args.nu_la < 0:
        raise CliError("window frame counts must be non-negative", EXIT_USAGE)
    query = CostQuery(
        n_frames=1 + max(1, int(args.past_seconds * 1000 / args.frame_ms)),
        d_model=args.d_model, attention_type="dilated",
        look_back=args.nu_lb, look_ahead=args.nu_la, chunk_size=args.chunk,
        mechanism="attn_pool_pp", pool_heads=args.heads,
        bottleneck_dim=args.d_in)
    report = streaming_report(args.past_seconds, args.frame_ms, query,
                              chunk_event=True)
    print(f"past audio: {args.past_seconds:g} s "
          f"({report.past_frames} frames at {args.frame_ms:g} ms)")
    print(f"baseline (unbounded look-back) per-frame multiplications: "
          f"{report.baseline}")
    print(f"dilated per-frame multiplications, no chunk event:   "
          f"{report.dilated}  (ratio {report.ratio:.2f})")
    print(f"dilated per-frame multiplications, with chunk event: "
          f"{report.dilated_with_chunk}  (ratio {report.ratio_with_chunk:.2f})")
    claimed = REFERENCE_STREAMING_FACTORS.get(float(args.past_seconds))
    if claimed:
        print(f"reference factors for this setup: {claimed[0]} without and "
              f"{claimed[1]} with a chunk event (no equality asserted; the "
              f"reference accounting is under-specified)")
    return EXIT_OK


# ----------------------------------------------------------------------
# argument parsing
# ----------------------------------------------------------------------

def _int_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated int list: {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dsa",
        description="Dilated self-attention: cost tables, encoding, "
                    "verification, benchmarks, and streaming cost reports.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("complexity", help="emit a multiplication-count table")
    p.add_argument("--preset", choices=("wsj", "librispeech"))
    p.add_argument("--n", type=int)
    p.add_argument("--d-model", type=int, dest="d_model")
    p.add_argument("--type", choices=("full", "restricted", "dilated"))
    p.add_argument("--nu-lb", type=int, dest="nu_lb")
    p.add_argument("--nu-la", type=int, dest="nu_la")
    p.add_argument("--chunk", type=int)
    p.add_argument("--mechanism",
                   choices=("none", "subsample", "mean_pool", "attn_pool",
                            "attn_pool_pp"))
    p.add_argument("--heads", type=int)
    p.add_argument("--d-in", type=int, dest="d_in")
    p.add_argument("--format", choices=("md", "csv", "json"), default="md")
    p.set_defaults(func=cmd_complexity)

    p = sub.add_parser("encode", help="run the encoder over a feature file")
    p.add_argument("--config", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("init-weights",
                       help="create a deterministic weight file for a config")
    p.add_argument("--config", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_init_weights)

    p = sub.add_parser("verify", help="run the verification suites")
    p.add_argument("--suite", default="all",
                   choices=("all", "oracle", "gradients", "complexity",
                            "streaming"))
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="wall-clock scaling benchmark")
    p.add_argument("--n-list", type=_int_list, dest="n_list",
                   default=[256, 512, 1024, 2048, 4096])
    p.add_argument("--type", choices=("full", "restricted", "dilated"))
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--nu-lb", type=int, dest="nu_lb", default=12)
    p.add_argument("--nu-la", type=int, dest="nu_la", default=12)
    p.add_argument("--chunk", type=int, default=20)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("streaming-cost",
                       help="per-frame streaming cost versus the baseline")
    p.add_argument("--past-seconds", type=float, required=True,
                   dest="past_seconds")
    p.add_argument("--frame-ms", type=float, default=40.0, dest="frame_ms")
    p.add_argument("--nu-lb", type=int, default=9, dest="nu_lb")
    p.add_argument("--nu-la", type=int, default=1, dest="nu_la")
    p.add_argument("--chunk", type=int, default=15)
    p.add_argument("--heads", type=int, default=2)
    p.add_argument("--d-in", type=int, default=16, dest="d_in")
    p.add_argument("--d-model", type=int, default=512, dest="d_model")
    p.set_defaults(func=cmd_streaming_cost)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
