"""Render report CSVs into figures plus exact-echo sidecar tables.

Values travel as strings from input CSV to sidecar CSV; floats are parsed
only for drawing.  That keeps the sidecar bit-identical to the plotted
input rows, which is what the tests assert.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .spec import FigureSpec, FigureError  # noqa: E402

NO_DEMO_COLOR = "gold"
NO_DEMO_LABEL = "no demographic mention"

_REQUIRED = {
    "stacked-proportions": [
        "disease", "window", "dimension", "category",
        "representation_pct", "no_demographic_pct",
    ],
    "grouped-shares": ["disease", "window", "dimension", "category", "share_pct"],
    "baseline-comparison": [
        "baseline", "disease", "dimension", "category", "corpus_pct", "baseline_pct",
    ],
    "window-lines": ["disease", "dimension", "category", "window", "representation_pct"],
    "source-facets": [
        "source", "disease", "window", "dimension", "category", "representation_pct",
    ],
}


def _read_rows(path: str) -> tuple[list[str], list[dict[str, str]]]:
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            rows = list(reader)
    except OSError as exc:
        raise FigureError(f"cannot read input CSV {path}: {exc}") from exc
    return list(header), rows


def _check_columns(kind: str, header: list[str], path: str) -> None:
    missing = [c for c in _REQUIRED[kind] if c not in header]
    if missing:
        raise FigureError(
            f"input {path} is missing required column(s) for {kind}: {', '.join(missing)}"
        )


def _window_key(w: str) -> tuple[int, int]:
    return (1, 0) if w == "document" else (0, int(w))


def _apply_filters(spec: FigureSpec, rows: list[dict[str, str]]) -> list[dict[str, str]]:
    out = rows
    if spec.window is not None and out and "window" in out[0]:
        out = [r for r in out if r["window"] == str(spec.window)]
    if spec.dimension is not None and out and "dimension" in out[0]:
        out = [r for r in out if r["dimension"] == spec.dimension]
    return out


def _pooled_rows(rows: list[dict[str, str]]) -> list[dict[str, str]]:
    """Prefer the pooled (source == ALL) scope when per-source rows coexist."""
    if rows and "source" in rows[0] and any(r["source"] == "ALL" for r in rows):
        return [r for r in rows if r["source"] == "ALL"]
    return rows


def _write_sidecar(path: Path, header: list[str], rows: list[dict[str, str]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=header, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def render(spec: FigureSpec) -> Path:
    """Draw the figure, write image + sidecar, return the image path."""
    all_rows: list[dict[str, str]] = []
    header: list[str] = []
    for path in spec.inputs:
        h, rows = _read_rows(path)
        _check_columns(spec.kind, h, path)
        if not header:
            header = h
        elif h != header:
            raise FigureError("input CSVs have differing headers; cannot combine")
        all_rows.extend(rows)
    if not all_rows:
        raise FigureError("input CSV has no data rows; nothing to plot")

    plotted = _KIND_DISPATCH[spec.kind](spec, all_rows)
    if not plotted:
        raise FigureError("no rows left to plot after filtering; no image written")

    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    plt.savefig(out, dpi=120, bbox_inches="tight")
    plt.close("all")
    _write_sidecar(spec.sidecar_path(), header, plotted)
    return out


# ---------------------------------------------------------------------------
# kinds

def _stacked_proportions(spec: FigureSpec, rows):
    rows = _apply_filters(spec, _pooled_rows(rows))
    if not rows:
        return []
    diseases = sorted({r["disease"] for r in rows})
    categories = sorted({r["category"] for r in rows})
    fig, ax = plt.subplots(figsize=(9, 0.5 * len(diseases) + 2))
    left = {d: 0.0 for d in diseases}
    for cat in categories:
        vals = []
        for d in diseases:
            v = next((float(r["representation_pct"]) for r in rows
                      if r["disease"] == d and r["category"] == cat), 0.0)
            vals.append(v)
        ax.barh(diseases, vals, left=[left[d] for d in diseases], label=cat)
        for d, v in zip(diseases, vals):
            left[d] += v
    no_demo = []
    for d in diseases:
        v = next((float(r["no_demographic_pct"]) for r in rows if r["disease"] == d), 0.0)
        no_demo.append(v)
    ax.barh(diseases, no_demo, left=[left[d] for d in diseases],
            color=NO_DEMO_COLOR, label=NO_DEMO_LABEL)
    ax.set_xlabel("proportion of disease mention windows (%)")
    ax.set_title(spec.title or "Disease mentions with and without demographic context")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return rows


def _grouped_shares(spec: FigureSpec, rows):
    rows = _apply_filters(spec, _pooled_rows(rows))
    if not rows:
        return []
    groups = sorted({r["disease"] for r in rows})
    categories = sorted({r["category"] for r in rows})
    width = 0.8 / max(len(categories), 1)
    fig, ax = plt.subplots(figsize=(max(6, 1.2 * len(groups) + 3), 4.5))
    for ci, cat in enumerate(categories):
        xs, ys = [], []
        for gi, g in enumerate(groups):
            v = next((float(r["share_pct"]) for r in rows
                      if r["disease"] == g and r["category"] == cat), None)
            if v is not None:
                xs.append(gi + ci * width)
                ys.append(v)
        ax.bar(xs, ys, width=width, label=cat)
    ax.set_xticks([i + 0.4 for i in range(len(groups))])
    ax.set_xticklabels(groups, rotation=30, ha="right")
    ax.set_ylabel("share of co-occurring windows (%)")
    ax.set_title(spec.title or "Demographic shares")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return rows


def _baseline_comparison(spec: FigureSpec, rows):
    rows = _apply_filters(spec, rows)
    if not rows:
        return []
    # one bar group per (disease, category): corpus plus each baseline
    keys = sorted({(r["disease"], r["category"]) for r in rows})
    baselines = sorted({r["baseline"] for r in rows})
    series = ["corpus"] + baselines
    width = 0.8 / len(series)
    fig, ax = plt.subplots(figsize=(max(7, 0.9 * len(keys) + 3), 4.5))
    for si, name in enumerate(series):
        xs, ys = [], []
        for ki, key in enumerate(keys):
            if name == "corpus":
                v = next((r["corpus_pct"] for r in rows
                          if (r["disease"], r["category"]) == key), "")
            else:
                v = next((r["baseline_pct"] for r in rows
                          if (r["disease"], r["category"]) == key
                          and r["baseline"] == name), "")
            if v not in ("", None):
                xs.append(ki + si * width)
                ys.append(float(v))
        ax.bar(xs, ys, width=width, label=name)
    ax.set_xticks([i + 0.4 for i in range(len(keys))])
    ax.set_xticklabels([f"{d}\n{c}" for d, c in keys], fontsize=7)
    ax.set_ylabel("share (%)")
    ax.set_title(spec.title or "Corpus shares vs. external baselines")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return rows


def _window_lines(spec: FigureSpec, rows):
    rows = _apply_filters(spec, rows)
    if not rows:
        return []
    diseases = sorted({r["disease"] for r in rows})
    windows = sorted({r["window"] for r in rows}, key=_window_key)
    ncols = min(3, len(diseases))
    nrows = (len(diseases) + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols, figsize=(4 * ncols, 3 * nrows),
                             squeeze=False, sharey=False)
    for di, disease in enumerate(diseases):
        ax = axes[di // ncols][di % ncols]
        sub = [r for r in rows if r["disease"] == disease]
        for key in sorted({(r["dimension"], r["category"]) for r in sub}):
            ys = []
            for w in windows:
                v = next((float(r["representation_pct"]) for r in sub
                          if (r["dimension"], r["category"]) == key and r["window"] == w),
                         None)
                ys.append(v)
            ax.plot(windows, ys, marker="o", markersize=3, label=f"{key[1]}")
        ax.set_title(disease, fontsize=9)
        ax.set_xlabel("window")
        ax.set_ylabel("representation (%)")
        ax.legend(fontsize=6)
    for di in range(len(diseases), nrows * ncols):
        axes[di // ncols][di % ncols].axis("off")
    fig.suptitle(spec.title or "Representation by context window size")
    fig.tight_layout()
    return rows


def _source_facets(spec: FigureSpec, rows):
    rows = [r for r in _apply_filters(spec, rows) if r["source"] != "ALL"]
    if not rows:
        return []
    sources = sorted({r["source"] for r in rows})
    ncols = min(3, len(sources))
    nrows = (len(sources) + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols, figsize=(4.5 * ncols, 3.5 * nrows),
                             squeeze=False)
    for si, source in enumerate(sources):
        ax = axes[si // ncols][si % ncols]
        sub = [r for r in rows if r["source"] == source]
        diseases = sorted({r["disease"] for r in sub})
        categories = sorted({r["category"] for r in sub})
        width = 0.8 / max(len(categories), 1)
        for ci, cat in enumerate(categories):
            xs, ys = [], []
            for di, d in enumerate(diseases):
                v = next((float(r["representation_pct"]) for r in sub
                          if r["disease"] == d and r["category"] == cat), None)
                if v is not None:
                    xs.append(di + ci * width)
                    ys.append(v)
            ax.bar(xs, ys, width=width, label=cat)
        ax.set_title(source, fontsize=9)
        ax.set_xticks([i + 0.4 for i in range(len(diseases))])
        ax.set_xticklabels(diseases, rotation=30, ha="right", fontsize=7)
        ax.legend(fontsize=6)
    for si in range(len(sources), nrows * ncols):
        axes[si // ncols][si % ncols].axis("off")
    fig.suptitle(spec.title or "Representation by source")
    fig.tight_layout()
    return rows


_KIND_DISPATCH = {
    "stacked-proportions": _stacked_proportions,
    "grouped-shares": _grouped_shares,
    "baseline-comparison": _baseline_comparison,
    "window-lines": _window_lines,
    "source-facets": _source_facets,
}
