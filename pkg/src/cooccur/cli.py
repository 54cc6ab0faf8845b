"""Command-line entry point: scan corpora, merge snapshots, emit reports.

Subcommands
    scan    stream JSONL sources through the matcher, write snapshot + CSVs
    report  turn a snapshot into shares / representation / window-profile /
            compare tables (CSV plus a fixed-width text table)
    synth   generate a planted-rate synthetic corpus with ground truth
    merge   combine snapshot files from shard runs

All CSV output is sorted and locale-independent, so a scan's outputs are
byte-identical whatever the worker count.  Percentages in CSVs keep full
float precision; the text tables round to two decimals.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
import time
from concurrent.futures import FIRST_COMPLETED, ProcessPoolExecutor, wait
from dataclasses import dataclass, replace
from pathlib import Path

from . import stats as statsmod
from .aggregate import (
    CooccurrenceMatrix,
    MergeError,
    RunMeta,
    SnapshotError,
    merge,
    restore,
    snapshot,
)
from .ingest import ConfigError, IngestStats, SourceSpec, _open_stream, parse_record
from .lexicon import (
    DEMOGRAPHIC_DIMENSIONS,
    Lexicon,
    LexiconError,
    compile,
    default_lexicon_path,
    load_lexicon,
)
from .scanner import DOCUMENT_WINDOW, Window, WindowConfig, scan_document, window_sort_key
from .stats import BaselineError, StatsError
from .synth import SynthError, load_spec, make_synthetic_corpus

logger = logging.getLogger("cooccur.cli")

_BATCH_LINES = 1000
_BATCH_BYTES = 4 << 20


@dataclass
class RunConfig:
    """One scan run: sources, lexicon, windows, execution knobs."""

    sources: list[SourceSpec]
    lexicon_path: Path
    windows: WindowConfig = WindowConfig()
    workers: int = 1
    aggregation: str = "micro"
    seed: int = 0
    sample_bytes: int | None = None

    def __post_init__(self) -> None:
        if self.workers < 1:
            raise ConfigError("worker count must be >= 1")
        labels = [s.label for s in self.sources]
        if len(labels) != len(set(labels)):
            raise ConfigError("source labels must be unique")
        if self.aggregation not in ("micro", "macro"):
            raise ConfigError(f"unknown aggregation {self.aggregation!r}")


def load_run_config(path: str | Path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc

    srcs = data.get("sources")
    if not srcs:
        raise ConfigError("config lists no sources")
    base = Path(path).parent
    sources = []
    for s in srcs:
        paths = [str(base / p) if not Path(p).is_absolute() else p for p in s["paths"]]
        sources.append(
            SourceSpec(label=s["label"], paths=paths, text_field=s.get("text_field", "text"))
        )
    lex = data.get("lexicon")
    lexicon_path = Path(base / lex) if lex else default_lexicon_path()
    windows = WindowConfig(
        sizes=tuple(data.get("windows", (20, 100, 200, 500))),
        include_document=data.get("include_document", True),
    )
    return RunConfig(
        sources=sources,
        lexicon_path=lexicon_path,
        windows=windows,
        workers=int(data.get("workers", 1)),
        aggregation=data.get("aggregation", "micro"),
        seed=int(data.get("seed", 0)),
    )


def build_run_meta(lexicon: Lexicon, windows: WindowConfig) -> RunMeta:
    return RunMeta(
        lexicon_hash=lexicon.fingerprint(),
        windows=windows.sizes,
        include_document=windows.include_document,
        case_mode=lexicon.case_mode,
        categories=tuple(
            (dim, tuple(lexicon.categories(dim))) for dim in ("disease", "race", "gender")
        ),
    )


# ---------------------------------------------------------------------------
# parallel scan

_WORKER: dict = {}


def _worker_init(lexicon_path: str, sizes: tuple[int, ...], include_document: bool) -> None:
    matcher = compile(load_lexicon(lexicon_path))
    cfg = WindowConfig(sizes=sizes, include_document=include_document)
    _WORKER["matcher"] = matcher
    _WORKER["cfg"] = cfg


def _scan_batch(batch: tuple[SourceSpec, list[bytes]]):
    """Parse and scan one batch of raw JSONL lines; returns partial maps."""
    spec, lines = batch
    matcher = _WORKER["matcher"]
    cfg = _WORKER["cfg"]
    stats = IngestStats()
    cells: dict = {}
    totals: dict = {}
    no_demo: dict = {}
    src = spec.label
    for line in lines:
        if not line.strip():
            stats.records_skipped += 1
            continue
        try:
            obj = json.loads(line)
        except (ValueError, UnicodeDecodeError):
            stats.parse_errors += 1
            stats.records_skipped += 1
            continue
        if not isinstance(obj, dict):
            stats.parse_errors += 1
            stats.records_skipped += 1
            continue
        doc = parse_record(obj, spec, stats, byte_len=len(line))
        if doc is None:
            continue
        dc = scan_document(doc, matcher, cfg)
        for k, n in dc.cells.items():
            key = (src,) + k
            cells[key] = cells.get(key, 0) + n
        for k2, n in dc.totals.items():
            key2 = (src,) + k2
            totals[key2] = totals.get(key2, 0) + n
        for k3, n in dc.no_demo.items():
            key3 = (src,) + k3
            no_demo[key3] = no_demo.get(key3, 0) + n
    return cells, totals, no_demo, stats


def _iter_source_batches(spec: SourceSpec, sample_bytes: int | None, stats: IngestStats, fingerprints: list):
    """Yield (spec, lines) batches; accounts read lines and hashes consumed
    bytes for the corpus fingerprint."""
    for path in spec.resolve_files():
        digest = hashlib.sha256()
        consumed = 0
        with _open_stream(path) as fh:
            batch: list[bytes] = []
            batch_bytes = 0
            for raw in fh:
                if sample_bytes is not None and consumed >= sample_bytes:
                    break
                consumed += len(raw)
                digest.update(raw)
                line = raw.rstrip(b"\r\n")
                stats.records_read += 1
                stats.bytes_read += len(line)
                batch.append(line)
                batch_bytes += len(line)
                if len(batch) >= _BATCH_LINES or batch_bytes >= _BATCH_BYTES:
                    yield spec, batch
                    batch = []
                    batch_bytes = 0
            if batch:
                yield spec, batch
        fingerprints.append((spec.label, path.name, consumed, digest.hexdigest()))


def _fold_result(matrix: CooccurrenceMatrix, result) -> IngestStats:
    cells, totals, no_demo, stats = result
    for key, n in cells.items():
        matrix.cells[key] = matrix.cells.get(key, 0) + n
    for key2, n in totals.items():
        matrix.totals[key2] = matrix.totals.get(key2, 0) + n
    for key3, n in no_demo.items():
        matrix.no_demo[key3] = matrix.no_demo.get(key3, 0) + n
    return stats


def run_scan(config: RunConfig) -> tuple[CooccurrenceMatrix, IngestStats]:
    """Scan every source; deterministic result for any worker count."""
    lexicon = load_lexicon(config.lexicon_path)
    meta = build_run_meta(lexicon, config.windows)
    matrix = CooccurrenceMatrix(run_meta=meta)
    stats = IngestStats()
    fingerprints: list = []

    def batches():
        for spec in config.sources:
            spec.resolve_files()  # fail fast on unreadable paths
        for spec in config.sources:
            yield from _iter_source_batches(spec, config.sample_bytes, stats, fingerprints)

    if config.workers == 1:
        _worker_init(str(config.lexicon_path), config.windows.sizes, config.windows.include_document)
        for batch in batches():
            stats.merge(_fold_result(matrix, _scan_batch(batch)))
    else:
        with ProcessPoolExecutor(
            max_workers=config.workers,
            initializer=_worker_init,
            initargs=(str(config.lexicon_path), config.windows.sizes, config.windows.include_document),
        ) as pool:
            pending: set = set()
            for batch in batches():
                pending.add(pool.submit(_scan_batch, batch))
                if len(pending) >= config.workers * 3:
                    done, pending = wait(pending, return_when=FIRST_COMPLETED)
                    for fut in done:
                        stats.merge(_fold_result(matrix, fut.result()))
            for fut in pending:
                stats.merge(_fold_result(matrix, fut.result()))

    matrix.run_meta = replace(meta, corpus=tuple(sorted(fingerprints)))
    return matrix, stats


# ---------------------------------------------------------------------------
# CSV / table emission

def _wstr(w: Window) -> str:
    return w if w == DOCUMENT_WINDOW else str(w)


def _open_csv(path: Path):
    fh = open(path, "w", encoding="utf-8", newline="")
    return fh, csv.writer(fh, lineterminator="\n")


def write_counts_csv(matrix: CooccurrenceMatrix, path: Path) -> None:
    fh, w = _open_csv(path)
    with fh:
        w.writerow(["source", "disease", "window", "dimension", "category", "count"])
        rows = sorted(
            matrix.cells.items(),
            key=lambda kv: (kv[0][0], kv[0][1], window_sort_key(kv[0][2]), kv[0][3], kv[0][4]),
        )
        for (src, dis, win, dim, cat), n in rows:
            w.writerow([src, dis, _wstr(win), dim, cat, n])


def write_totals_csv(matrix: CooccurrenceMatrix, path: Path) -> None:
    fh, w = _open_csv(path)
    with fh:
        w.writerow(["source", "disease", "window", "total_windows", "no_gender", "no_race"])
        rows = sorted(
            matrix.totals.items(),
            key=lambda kv: (kv[0][0], kv[0][1], window_sort_key(kv[0][2])),
        )
        for (src, dis, win), n in rows:
            w.writerow(
                [
                    src,
                    dis,
                    _wstr(win),
                    n,
                    matrix.no_demo.get((src, dis, win, "gender"), 0),
                    matrix.no_demo.get((src, dis, win, "race"), 0),
                ]
            )


def _fmt(x: float | None) -> str:
    return "" if x is None else repr(float(x))


class _TextTable:
    """Minimal fixed-width table for terminal output."""

    def __init__(self, headers: list[str]):
        self.headers = headers
        self.rows: list[list[str]] = []

    def add(self, row: list) -> None:
        self.rows.append([f"{v:.2f}" if isinstance(v, float) else str(v) for v in row])

    def render(self) -> str:
        widths = [len(h) for h in self.headers]
        for row in self.rows:
            for i, cell in enumerate(row):
                widths[i] = max(widths[i], len(cell))
        def line(cells):
            return "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
        sep = "  ".join("-" * w for w in widths)
        return "\n".join([line(self.headers), sep] + [line(r) for r in self.rows]) + "\n"


# ---------------------------------------------------------------------------
# subcommands

def cmd_scan(args: argparse.Namespace) -> int:
    config = load_run_config(args.config)
    if args.workers is not None:
        config.workers = args.workers
        RunConfig.__post_init__(config)
    if args.sample_bytes is not None:
        config.sample_bytes = args.sample_bytes

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    t0 = time.monotonic()
    try:
        matrix, stats = run_scan(config)
        snap = out_dir / "snapshot.json"
        snapshot(matrix, snap)
        written.append(snap)
        counts_path = out_dir / "counts.csv"
        write_counts_csv(matrix, counts_path)
        written.append(counts_path)
        totals_path = out_dir / "totals.csv"
        write_totals_csv(matrix, totals_path)
        written.append(totals_path)

        elapsed = time.monotonic() - t0
        log_path = out_dir / "run.log"
        with open(log_path, "w", encoding="utf-8") as fh:
            fh.write(f"config={args.config}\n")
            fh.write(f"lexicon={config.lexicon_path}\n")
            fh.write(f"workers={config.workers}\n")
            fh.write(f"records_read={stats.records_read}\n")
            fh.write(f"records_skipped={stats.records_skipped}\n")
            fh.write(f"parse_errors={stats.parse_errors}\n")
            fh.write(f"bytes_read={stats.bytes_read}\n")
            fh.write(f"elapsed_s={elapsed:.3f}\n")
            mbps = stats.bytes_read / elapsed / 1e6 if elapsed > 0 else 0.0
            fh.write(f"throughput_mb_s={mbps:.2f}\n")
            fh.write(f"total_windows_all={statsmod.total_windows(matrix)}\n")
        written.append(log_path)
        print(
            f"scanned {stats.records_read} records "
            f"({stats.bytes_read / 1e6:.1f} MB) in {elapsed:.1f}s -> {out_dir}"
        )
        return 0
    except Exception:
        for p in written:
            p.unlink(missing_ok=True)
        raise


def _resolve_window(matrix: CooccurrenceMatrix, arg: str) -> Window:
    win: Window = arg if arg == DOCUMENT_WINDOW else int(arg)
    if win not in matrix.run_meta.window_labels():
        raise ConfigError(
            f"window {arg} not in snapshot (has {matrix.run_meta.window_labels()})"
        )
    return win


def _report_shares(matrix: CooccurrenceMatrix, args) -> tuple[list[list], list[str], _TextTable]:
    window = _resolve_window(matrix, args.window)
    disease = args.disease
    scopes: list[str | None] = [None]
    if args.per_source:
        scopes += matrix.sources()
    headers = ["aggregation", "source", "disease", "window", "dimension", "category", "share_pct"]
    rows: list[list] = []
    table = _TextTable(["source", "dimension"] + [c for d in DEMOGRAPHIC_DIMENSIONS for c in matrix.run_meta.categories_of(d)])
    for scope in scopes:
        shares = statsmod.demographic_shares(matrix, window, disease=disease, source=scope)
        src_label = scope if scope is not None else "ALL"
        for dim in DEMOGRAPHIC_DIMENSIONS:
            cats = matrix.run_meta.categories_of(dim)
            vals = [shares.share(dim, c) for c in cats]
            for cat, val in zip(cats, vals):
                if val is not None:
                    rows.append(["micro", src_label, disease or "ALL", _wstr(window), dim, cat, _fmt(val)])
        line: list = [src_label, "race+gender"]
        for d in DEMOGRAPHIC_DIMENSIONS:
            for c in matrix.run_meta.categories_of(d):
                v = shares.share(d, c)
                line.append(v if v is not None else "-")
        table.add(line)
    return rows, headers, table


def _report_representation(matrix: CooccurrenceMatrix, args) -> tuple[list[list], list[str], _TextTable]:
    if args.window == "all":
        windows = matrix.run_meta.window_labels()
    else:
        windows = [_resolve_window(matrix, args.window)]
    scopes: list[str | None] = [None]
    if args.per_source:
        scopes += matrix.sources()
    agg = args.aggregation or "micro"
    headers = [
        "aggregation", "source", "disease", "window", "dimension", "category",
        "representation_pct", "no_demographic_pct",
    ]
    rows: list[list] = []
    table = _TextTable(["disease", "window", "dimension", "category", "pct", "no_demo_pct"])
    diseases = sorted({k[1] for k in matrix.totals})
    for scope in scopes:
        src_label = scope if scope is not None else "ALL"
        eff_agg = "micro" if scope is not None else agg
        for disease in diseases:
            for win in windows:
                for dim in DEMOGRAPHIC_DIMENSIONS:
                    nd = statsmod.no_demographic_pct(matrix, disease, win, dim, eff_agg, source=scope)
                    for cat in matrix.run_meta.categories_of(dim):
                        rp = statsmod.representation_pct(
                            matrix, disease, win, dim, cat, eff_agg, source=scope
                        )
                        rows.append(
                            [eff_agg, src_label, disease, _wstr(win), dim, cat, _fmt(rp.value), _fmt(nd.value)]
                        )
                        if scope is None:
                            table.add([disease, _wstr(win), dim, cat, rp.value, nd.value])
    return rows, headers, table


def _report_window_profile(matrix: CooccurrenceMatrix, args) -> tuple[list[list], list[str], _TextTable]:
    agg = args.aggregation or "macro"
    headers = ["aggregation", "disease", "dimension", "category", "window", "representation_pct"]
    rows: list[list] = []
    table = _TextTable(["disease", "dimension", "category", "window", "pct"])
    diseases = sorted({k[1] for k in matrix.totals})
    for disease in diseases:
        for dim in DEMOGRAPHIC_DIMENSIONS:
            for cat in matrix.run_meta.categories_of(dim):
                profile = statsmod.window_profile(matrix, disease, dim, cat, agg)
                for win, rp in profile:
                    rows.append([agg, disease, dim, cat, _wstr(win), _fmt(rp.value)])
                    table.add([disease, dim, cat, _wstr(win), rp.value])
    return rows, headers, table


def _report_compare(matrix: CooccurrenceMatrix, args) -> tuple[list[list], list[str], _TextTable]:
    window = _resolve_window(matrix, args.window)
    baseline = statsmod.load_baseline(args.baseline)
    diseases = sorted({k[1] for k in matrix.totals})
    shares_by_disease = {
        d: statsmod.demographic_shares(matrix, window, disease=d) for d in diseases
    }
    shares_by_disease = {d: t for d, t in shares_by_disease.items() if t.rows}
    comparison = statsmod.compare_to_baseline(shares_by_disease, baseline, four_race=args.four_race)
    headers = [
        "baseline", "four_race", "disease", "dimension", "category",
        "corpus_pct", "baseline_pct", "difference_pp", "ratio",
    ]
    rows: list[list] = []
    table = _TextTable(["disease", "dimension", "category", "corpus", "baseline", "diff_pp", "ratio"])
    for (disease, dim, cat), row in sorted(comparison.rows.items()):
        rows.append(
            [
                comparison.baseline_name,
                str(comparison.four_race).lower(),
                disease, dim, cat,
                _fmt(row.corpus_pct), _fmt(row.baseline_pct),
                _fmt(row.difference_pp), _fmt(row.ratio),
            ]
        )
        table.add(
            [
                disease, dim, cat, row.corpus_pct,
                row.baseline_pct if row.baseline_pct is not None else "-",
                row.difference_pp if row.difference_pp is not None else "-",
                row.ratio if row.ratio is not None else "-",
            ]
        )
    return rows, headers, table


_REPORT_MODES = {
    "shares": _report_shares,
    "representation": _report_representation,
    "window-profile": _report_window_profile,
    "compare": _report_compare,
}


def cmd_report(args: argparse.Namespace) -> int:
    matrix = restore(args.snapshot)
    if args.mode == "compare" and not args.baseline:
        raise ConfigError("compare mode requires --baseline FILE")
    rows, headers, table = _REPORT_MODES[args.mode](matrix, args)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{args.mode}.csv"
    fh, w = _open_csv(csv_path)
    with fh:
        w.writerow(headers)
        w.writerows(rows)
    text = table.render()
    txt_path = out_dir / f"{args.mode}.txt"
    with open(txt_path, "w", encoding="utf-8") as fh2:
        fh2.write(text)
    sys.stdout.write(text)
    print(f"wrote {csv_path}")
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    spec = load_spec(args.spec)
    result = make_synthetic_corpus(spec, args.seed, args.out)
    total_bytes = sum(p.stat().st_size for p in result.corpus_paths)
    print(
        f"generated {result.truth.docs} documents "
        f"({total_bytes / 1e6:.1f} MB) in {len(result.corpus_paths)} shard(s) -> {args.out}"
    )
    return 0


def cmd_merge(args: argparse.Namespace) -> int:
    matrices = [restore(p) for p in args.snapshots]
    merged = matrices[0]
    for other in matrices[1:]:
        merged = merge(merged, other)
    snapshot(merged, args.out)
    print(f"merged {len(matrices)} snapshot(s) -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cooccur",
        description="Windowed disease/demographic co-occurrence audit over JSONL corpora",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_scan = sub.add_parser("scan", help="scan corpus sources into a snapshot")
    p_scan.add_argument("--config", required=True, help="run config JSON")
    p_scan.add_argument("--workers", type=int, default=None)
    p_scan.add_argument("--sample-bytes", type=int, default=None,
                        help="per-file prefix budget in (decompressed) bytes")
    p_scan.add_argument("--out", required=True, help="output directory")
    p_scan.set_defaults(func=cmd_scan)

    p_rep = sub.add_parser("report", help="emit report tables from a snapshot")
    p_rep.add_argument("--snapshot", required=True)
    p_rep.add_argument("--mode", required=True, choices=sorted(_REPORT_MODES))
    p_rep.add_argument("--baseline", default=None, help="baseline file (compare mode)")
    p_rep.add_argument("--window", default="100",
                       help="window size, 'document', or 'all' (representation mode)")
    p_rep.add_argument("--aggregation", choices=("micro", "macro"), default=None,
                       help="default: micro, except window-profile which is "
                            "source-averaged (macro)")
    p_rep.add_argument("--four-race", action="store_true",
                       help="renormalize race shares over White/Black/Asian/Hispanic")
    p_rep.add_argument("--disease", default=None, help="restrict shares to one disease")
    p_rep.add_argument("--per-source", action="store_true", help="add per-source rows")
    p_rep.add_argument("--out", required=True, help="output directory")
    p_rep.set_defaults(func=cmd_report)

    p_syn = sub.add_parser("synth", help="generate a planted-rate synthetic corpus")
    p_syn.add_argument("--spec", required=True, help="synthesis spec JSON")
    p_syn.add_argument("--seed", type=int, required=True)
    p_syn.add_argument("--out", required=True, help="output directory")
    p_syn.set_defaults(func=cmd_synth)

    p_mrg = sub.add_parser("merge", help="merge snapshot files")
    p_mrg.add_argument("snapshots", nargs="+", help="snapshot files to combine")
    p_mrg.add_argument("--out", required=True, help="merged snapshot path")
    p_mrg.set_defaults(func=cmd_merge)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (
        ConfigError, LexiconError, MergeError, SnapshotError,
        StatsError, BaselineError, SynthError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
