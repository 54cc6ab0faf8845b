"""Single-pass windowed co-occurrence counting over one document.

Every disease hit anchors one context window per configured size.  A
demographic hit co-occurs with that window when the nearest token-index
distance between the two spans is at most half the window size ("within 50
words before or after" for the 100-word window, boundary inclusive).  The
whole-document pseudo-window co-occurs whenever both terms appear anywhere.

Co-occurrence is binary per (disease hit, window, category): a window never
counts a category twice, so aggregated percentages stay bounded by 100.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .ingest import Document
from .lexicon import (
    DEMOGRAPHIC_DIMENSIONS,
    CompiledMatcher,
    MatchHit,
    find_matches_prefolded,
)
from .tokens import EDGE_PUNCT, tokenize  # noqa: F401 - tokenize re-exported

DOCUMENT_WINDOW = "document"

Window = int | str


@dataclass(frozen=True)
class WindowConfig:
    """Ordered context window widths, in whitespace words."""

    sizes: tuple[int, ...] = (20, 100, 200, 500)
    include_document: bool = True

    def __post_init__(self) -> None:
        sizes = tuple(self.sizes)
        object.__setattr__(self, "sizes", sizes)
        if any(w < 2 or w % 2 for w in sizes):
            raise ValueError(f"window sizes must be even and >= 2, got {sizes}")
        if list(sizes) != sorted(set(sizes)):
            raise ValueError(f"window sizes must be strictly increasing, got {sizes}")

    def labels(self) -> list[Window]:
        """All windows in reporting order, widest last."""
        wins: list[Window] = list(self.sizes)
        if self.include_document:
            wins.append(DOCUMENT_WINDOW)
        return wins


def window_sort_key(window: Window) -> tuple[int, int]:
    """Sorts finite sizes ascending with the document window last."""
    if window == DOCUMENT_WINDOW:
        return (1, 0)
    return (0, int(window))


@dataclass
class DocCounts:
    """Per-document slice of the co-occurrence matrix.

    cells:   (disease, window, dimension, category) -> co-occurring windows
    totals:  (disease, window)                      -> windows (= disease hits)
    no_demo: (disease, window, dimension)           -> windows with zero hits
                                                       of that dimension
    """

    source: str = ""
    cells: dict[tuple[str, Window, str, str], int] = field(default_factory=dict)
    totals: dict[tuple[str, Window], int] = field(default_factory=dict)
    no_demo: dict[tuple[str, Window, str], int] = field(default_factory=dict)


def span_gap(a: MatchHit, b: MatchHit) -> int:
    """Nearest token-index distance between two spans (0 when they touch
    or overlap)."""
    if a.span_end < b.span_start:
        return b.span_start - a.span_end
    if b.span_end < a.span_start:
        return a.span_start - b.span_end
    return 0


def scan_document(doc: Document, matcher: CompiledMatcher, cfg: WindowConfig) -> DocCounts:
    """Count windowed co-occurrences for one document.

    Returns empty counts when the document mentions no disease term; the
    cheap substring prefilter skips tokenization for those documents.
    """
    counts = DocCounts(source=doc.source)
    # Fold the whole text once instead of once per token; case folding never
    # creates or removes whitespace or edge punctuation, so fold-then-tokenize
    # equals tokenize-then-fold.
    hay = doc.text.casefold() if matcher.case_mode == "fold" else doc.text
    if not matcher.maybe_has_disease_folded(hay):
        return counts

    tokens = [w.strip(EDGE_PUNCT) for w in hay.split()]
    hits = find_matches_prefolded(matcher, tokens)
    disease_hits = [h for h in hits if h.dimension == "disease"]
    if not disease_hits:
        return counts
    demo_hits = [h for h in hits if h.dimension != "disease"]

    windows = cfg.labels()
    finite = cfg.sizes
    cells = counts.cells
    totals = counts.totals
    no_demo = counts.no_demo

    for dh in disease_hits:
        for w in windows:
            key = (dh.category, w)
            totals[key] = totals.get(key, 0) + 1

        # (window, dimension, category) seen for this one disease window
        flagged: set[tuple[Window, str, str]] = set()
        dims_in_window: set[tuple[Window, str]] = set()
        for mh in demo_hits:
            gap2 = 2 * span_gap(dh, mh)
            for w in finite:
                if gap2 <= w:
                    flagged.add((w, mh.dimension, mh.category))
                    dims_in_window.add((w, mh.dimension))
            if cfg.include_document:
                flagged.add((DOCUMENT_WINDOW, mh.dimension, mh.category))
                dims_in_window.add((DOCUMENT_WINDOW, mh.dimension))

        for w, dim, cat in flagged:
            key = (dh.category, w, dim, cat)
            cells[key] = cells.get(key, 0) + 1
        for w in windows:
            for dim in DEMOGRAPHIC_DIMENSIONS:
                if (w, dim) not in dims_in_window:
                    nkey = (dh.category, w, dim)
                    no_demo[nkey] = no_demo.get(nkey, 0) + 1

    return counts
