"""Representation percentages, demographic shares, and baseline comparisons.

Two aggregations appear throughout and every output labels which one it
used: micro pools counts across sources before dividing; macro averages the
per-source percentages (sources with zero windows drop out of the mean).

representation % = 100 * co-occurring windows / total windows for a disease.
share           = a category's fraction of all co-occurring windows within
                  its dimension, normalized to sum to 100.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .aggregate import CooccurrenceMatrix
from .lexicon import DEMOGRAPHIC_DIMENSIONS
from .scanner import Window

FOUR_RACE_CATEGORIES = ("White", "Black", "Asian", "Hispanic")


class StatsError(Exception):
    """Unknown key, bad aggregation mode, or unusable baseline data."""


class BaselineError(Exception):
    """Unreadable or invalid baseline file."""


@dataclass(frozen=True)
class RepPct:
    """A representation percentage; flagged when no windows existed."""

    value: float
    no_windows: bool = False


def _validate_keys(
    matrix: CooccurrenceMatrix,
    disease: str | None = None,
    window: Window | None = None,
    dimension: str | None = None,
    category: str | None = None,
) -> None:
    meta = matrix.run_meta
    if disease is not None and disease not in meta.categories_of("disease"):
        raise StatsError(f"unknown disease {disease!r}")
    if window is not None and window not in meta.window_labels():
        raise StatsError(f"window {window!r} not in run configuration {meta.window_labels()}")
    if dimension is not None:
        if dimension not in DEMOGRAPHIC_DIMENSIONS:
            raise StatsError(f"unknown demographic dimension {dimension!r}")
        if category is not None and category not in meta.categories_of(dimension):
            raise StatsError(f"unknown category {category!r} in dimension {dimension!r}")


def _scope_sources(matrix: CooccurrenceMatrix, source: str | None) -> list[str]:
    return [source] if source is not None else matrix.sources()


def _micro_macro(pairs: list[tuple[int, int]], aggregation: str) -> RepPct:
    """pairs = per-source (numerator, total)."""
    if aggregation == "micro":
        num = sum(n for n, _ in pairs)
        den = sum(t for _, t in pairs)
        if den == 0:
            return RepPct(0.0, no_windows=True)
        return RepPct(100.0 * num / den)
    if aggregation == "macro":
        pcts = [100.0 * n / t for n, t in pairs if t > 0]
        if not pcts:
            return RepPct(0.0, no_windows=True)
        return RepPct(sum(pcts) / len(pcts))
    raise StatsError(f"unknown aggregation {aggregation!r} (expected micro or macro)")


def representation_pct(
    matrix: CooccurrenceMatrix,
    disease: str,
    window: Window,
    dimension: str,
    category: str,
    aggregation: str = "micro",
    source: str | None = None,
) -> RepPct:
    """Share of a disease's windows that contain the given category."""
    _validate_keys(matrix, disease, window, dimension, category)
    pairs = [
        (
            matrix.cells.get((src, disease, window, dimension, category), 0),
            matrix.totals.get((src, disease, window), 0),
        )
        for src in _scope_sources(matrix, source)
    ]
    return _micro_macro(pairs, aggregation)


def no_demographic_pct(
    matrix: CooccurrenceMatrix,
    disease: str,
    window: Window,
    dimension: str,
    aggregation: str = "micro",
    source: str | None = None,
) -> RepPct:
    """Share of a disease's windows containing no hit of the dimension."""
    _validate_keys(matrix, disease, window, dimension)
    pairs = [
        (
            matrix.no_demo.get((src, disease, window, dimension), 0),
            matrix.totals.get((src, disease, window), 0),
        )
        for src in _scope_sources(matrix, source)
    ]
    return _micro_macro(pairs, aggregation)


def any_demographic_pct(
    matrix: CooccurrenceMatrix,
    disease: str,
    window: Window,
    dimension: str,
    aggregation: str = "micro",
    source: str | None = None,
) -> RepPct:
    """Share of windows with at least one hit of the dimension."""
    _validate_keys(matrix, disease, window, dimension)
    pairs = [
        (
            matrix.totals.get((src, disease, window), 0)
            - matrix.no_demo.get((src, disease, window, dimension), 0),
            matrix.totals.get((src, disease, window), 0),
        )
        for src in _scope_sources(matrix, source)
    ]
    return _micro_macro(pairs, aggregation)


@dataclass
class ShareTable:
    """Within-dimension category shares over co-occurring windows only."""

    window: Window
    disease: str | None = None  # None = all diseases
    source: str | None = None  # None = all sources
    rows: dict[tuple[str, str], float] = field(default_factory=dict)

    def share(self, dimension: str, category: str) -> float | None:
        return self.rows.get((dimension, category))


def demographic_shares(
    matrix: CooccurrenceMatrix,
    window: Window,
    disease: str | None = None,
    source: str | None = None,
) -> ShareTable:
    """Normalize co-occurrence counts within each dimension to percent.

    Windows without any hit of a dimension do not participate, which is why
    each dimension's shares sum to 100 even when only a small fraction of
    windows carry demographic context.  A dimension whose counts are all
    zero yields no rows at all (absent, never 0/0).
    """
    _validate_keys(matrix, disease, window)
    meta = matrix.run_meta
    sources = set(_scope_sources(matrix, source))
    table = ShareTable(window=window, disease=disease, source=source)
    for dim in DEMOGRAPHIC_DIMENSIONS:
        cats = meta.categories_of(dim)
        counts = {cat: 0 for cat in cats}
        for (src, dis, w, d, cat), n in matrix.cells.items():
            if w != window or d != dim or src not in sources:
                continue
            if disease is not None and dis != disease:
                continue
            counts[cat] += n
        denom = sum(counts.values())
        if denom == 0:
            continue
        for cat in cats:
            table.rows[(dim, cat)] = 100.0 * counts[cat] / denom
    return table


def window_profile(
    matrix: CooccurrenceMatrix,
    disease: str,
    dimension: str,
    category: str,
    aggregation: str = "macro",
) -> list[tuple[Window, RepPct]]:
    """Representation percent per window size, source-averaged by default."""
    windows = matrix.run_meta.window_labels()
    if len(windows) < 2:
        raise StatsError("window profile needs at least two window sizes")
    return [
        (w, representation_pct(matrix, disease, w, dimension, category, aggregation))
        for w in windows
    ]


def total_windows(matrix: CooccurrenceMatrix, window: Window | None = None) -> int:
    """Disease windows in the matrix; ``window=None`` sums across all window
    sizes (the cross-window mention total some summaries quote)."""
    if window is None:
        return sum(matrix.totals.values())
    return sum(n for (_, _, w), n in matrix.totals.items() if w == window)


@dataclass
class BaselineTable:
    """External proportions: census, real-world prevalence, or model output."""

    name: str
    provenance: str = ""
    rows: dict[tuple[str | None, str, str], float] = field(default_factory=dict)

    def lookup(self, disease: str | None, dimension: str, category: str) -> float | None:
        """Disease-specific row if present, else the disease-independent row."""
        if disease is not None:
            val = self.rows.get((disease, dimension, category))
            if val is not None:
                return val
        return self.rows.get((None, dimension, category))


def load_baseline(path: str | Path, name: str | None = None) -> BaselineTable:
    """Load a baseline file (JSON rows of dimension/category/percent,
    optionally keyed by disease)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise BaselineError(f"cannot read baseline {path}: {exc}") from exc
    except ValueError as exc:
        raise BaselineError(f"baseline {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise BaselineError(f"baseline {path} must be a JSON object")

    table = BaselineTable(
        name=name or data.get("name", Path(path).stem),
        provenance=data.get("provenance", ""),
    )
    for row in data.get("rows", []):
        dim = row.get("dimension")
        cat = row.get("category")
        pct = row.get("percent")
        if not dim or not cat or not isinstance(pct, (int, float)):
            raise BaselineError(f"baseline {path}: bad row {row!r}")
        if pct < 0:
            raise BaselineError(f"baseline {path}: negative percent in row {row!r}")
        table.rows[(row.get("disease"), dim, cat)] = float(pct)
    return table


@dataclass(frozen=True)
class CompareRow:
    corpus_pct: float
    baseline_pct: float | None
    difference_pp: float | None  # corpus - baseline, percentage points
    ratio: float | None  # corpus / baseline; absent when baseline is 0 or missing


@dataclass
class ComparisonTable:
    baseline_name: str
    four_race: bool = False
    rows: dict[tuple[str, str, str], CompareRow] = field(default_factory=dict)


def _renormalize_four_race(rows: dict[tuple[str, str], float]) -> dict[tuple[str, str], float]:
    out: dict[tuple[str, str], float] = {}
    four = {
        cat: rows[("race", cat)]
        for cat in FOUR_RACE_CATEGORIES
        if ("race", cat) in rows
    }
    total = sum(four.values())
    for (dim, cat), share in rows.items():
        if dim != "race":
            out[(dim, cat)] = share
        elif cat in four and total > 0:
            out[(dim, cat)] = 100.0 * four[cat] / total
    return out


def compare_to_baseline(
    shares_by_disease: dict[str, ShareTable],
    baseline: BaselineTable,
    four_race: bool = False,
) -> ComparisonTable:
    """Join per-disease corpus shares against an external baseline.

    Four-race mode renormalizes race shares over White/Black/Asian/Hispanic
    first (dropping the other race categories from the comparison), matching
    how the census/prevalence/model baselines are published.
    """
    table = ComparisonTable(baseline_name=baseline.name, four_race=four_race)
    for disease in sorted(shares_by_disease):
        rows = dict(shares_by_disease[disease].rows)
        if four_race:
            rows = _renormalize_four_race(rows)
        for (dim, cat), corpus_pct in sorted(rows.items()):
            base = baseline.lookup(disease, dim, cat)
            if base is None:
                row = CompareRow(corpus_pct, None, None, None)
            elif base == 0:
                row = CompareRow(corpus_pct, 0.0, corpus_pct, None)
            else:
                row = CompareRow(corpus_pct, base, corpus_pct - base, corpus_pct / base)
            table.rows[(disease, dim, cat)] = row
    return table
