"""Global co-occurrence matrix: merge semantics and snapshot files.

Per-document counts fold into a matrix keyed by source.  Merging is a
pointwise sum, so it is associative and commutative and the result of a
parallel scan cannot depend on worker scheduling.  Merges are gated on the
run metadata (lexicon hash + window config): silently mixing counts produced
under different lexicons is the one failure mode a long audit cannot detect
afterwards, so it is fatal here.

Counts are Python ints (arbitrary precision); real corpus runs reach billions
of disease mentions, far past 32 bits.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from .scanner import DOCUMENT_WINDOW, DocCounts, Window, window_sort_key

SNAPSHOT_FORMAT = "cooccur-snapshot"
SNAPSHOT_VERSION = 1


class MergeError(Exception):
    """Attempt to combine matrices from incompatible runs."""


class SnapshotError(Exception):
    """Unreadable, corrupted, or wrong-version snapshot file."""


@dataclass(frozen=True)
class RunMeta:
    """Identity of a scan run; matrices merge only when compatible."""

    lexicon_hash: str
    windows: tuple[int, ...]
    include_document: bool
    case_mode: str
    categories: tuple[tuple[str, tuple[str, ...]], ...]
    corpus: tuple[tuple[str, str, int, str], ...] = ()  # (source, file, bytes, sha256)

    def compat_key(self) -> tuple:
        return (
            self.lexicon_hash,
            self.windows,
            self.include_document,
            self.case_mode,
            self.categories,
        )

    def categories_of(self, dimension: str) -> tuple[str, ...]:
        for dim, cats in self.categories:
            if dim == dimension:
                return cats
        return ()

    def window_labels(self) -> list[Window]:
        wins: list[Window] = list(self.windows)
        if self.include_document:
            wins.append(DOCUMENT_WINDOW)
        return wins


@dataclass
class CooccurrenceMatrix:
    """Sparse co-occurrence counts stratified by source.

    cells:   (source, disease, window, dimension, category) -> count
    totals:  (source, disease, window)                      -> windows
    no_demo: (source, disease, window, dimension)           -> windows with
                                                               no hit of the
                                                               dimension
    """

    run_meta: RunMeta
    cells: dict[tuple[str, str, Window, str, str], int] = field(default_factory=dict)
    totals: dict[tuple[str, str, Window], int] = field(default_factory=dict)
    no_demo: dict[tuple[str, str, Window, str], int] = field(default_factory=dict)

    def add_doc(self, counts: DocCounts) -> None:
        """Fold one document's counts in under its source label."""
        src = counts.source
        cells = self.cells
        for (dis, w, dim, cat), n in counts.cells.items():
            key = (src, dis, w, dim, cat)
            cells[key] = cells.get(key, 0) + n
        totals = self.totals
        for (dis, w), n in counts.totals.items():
            key2 = (src, dis, w)
            totals[key2] = totals.get(key2, 0) + n
        no_demo = self.no_demo
        for (dis, w, dim), n in counts.no_demo.items():
            key3 = (src, dis, w, dim)
            no_demo[key3] = no_demo.get(key3, 0) + n

    def add_matrix(self, other: "CooccurrenceMatrix") -> None:
        """In-place pointwise sum; same gating as :func:`merge`."""
        if self.run_meta.compat_key() != other.run_meta.compat_key():
            raise MergeError(
                "matrices come from incompatible runs "
                "(lexicon hash or window configuration differs)"
            )
        for key, n in other.cells.items():
            self.cells[key] = self.cells.get(key, 0) + n
        for key2, n in other.totals.items():
            self.totals[key2] = self.totals.get(key2, 0) + n
        for key3, n in other.no_demo.items():
            self.no_demo[key3] = self.no_demo.get(key3, 0) + n
        corpus = sorted(set(self.run_meta.corpus) | set(other.run_meta.corpus))
        self.run_meta = replace(self.run_meta, corpus=tuple(corpus))

    def sources(self) -> list[str]:
        return sorted({k[0] for k in self.totals})


def empty_like(matrix: CooccurrenceMatrix) -> CooccurrenceMatrix:
    return CooccurrenceMatrix(run_meta=replace(matrix.run_meta, corpus=()))


def merge(a: CooccurrenceMatrix, b: CooccurrenceMatrix) -> CooccurrenceMatrix:
    """Pointwise sum of two matrices sharing the same run identity."""
    out = CooccurrenceMatrix(
        run_meta=a.run_meta,
        cells=dict(a.cells),
        totals=dict(a.totals),
        no_demo=dict(a.no_demo),
    )
    out.add_matrix(b)
    return out


def _window_str(w: Window) -> str:
    return w if w == DOCUMENT_WINDOW else str(w)


def _window_val(s: str) -> Window:
    return s if s == DOCUMENT_WINDOW else int(s)


def _meta_to_json(meta: RunMeta) -> dict[str, Any]:
    return {
        "lexicon_hash": meta.lexicon_hash,
        "windows": list(meta.windows),
        "include_document": meta.include_document,
        "case_mode": meta.case_mode,
        "categories": [[dim, list(cats)] for dim, cats in meta.categories],
        "corpus": [list(entry) for entry in meta.corpus],
    }


def _meta_from_json(data: dict[str, Any]) -> RunMeta:
    return RunMeta(
        lexicon_hash=data["lexicon_hash"],
        windows=tuple(int(w) for w in data["windows"]),
        include_document=bool(data["include_document"]),
        case_mode=data["case_mode"],
        categories=tuple((dim, tuple(cats)) for dim, cats in data["categories"]),
        corpus=tuple((s, f, int(n), h) for s, f, n, h in data["corpus"]),
    )


def snapshot(matrix: CooccurrenceMatrix, path: str | Path) -> None:
    """Write a versioned, deterministic snapshot (sorted rows, compact JSON)."""
    cells = [
        [s, d, _window_str(w), dim, cat, n]
        for (s, d, w, dim, cat), n in matrix.cells.items()
    ]
    cells.sort(key=lambda r: (r[0], r[1], window_sort_key(_window_val(r[2])), r[3], r[4]))
    totals = [[s, d, _window_str(w), n] for (s, d, w), n in matrix.totals.items()]
    totals.sort(key=lambda r: (r[0], r[1], window_sort_key(_window_val(r[2]))))
    no_demo = [
        [s, d, _window_str(w), dim, n] for (s, d, w, dim), n in matrix.no_demo.items()
    ]
    no_demo.sort(key=lambda r: (r[0], r[1], window_sort_key(_window_val(r[2])), r[3]))

    payload = {
        "format": SNAPSHOT_FORMAT,
        "version": SNAPSHOT_VERSION,
        "run_meta": _meta_to_json(matrix.run_meta),
        "cells": cells,
        "totals": totals,
        "no_demo": no_demo,
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(blob)
        fh.write("\n")


def restore(path: str | Path) -> CooccurrenceMatrix:
    """Load a snapshot; corrupted or wrong-version files never yield a
    partial matrix."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise SnapshotError(f"cannot read snapshot {path}: {exc}") from exc
    except ValueError as exc:
        raise SnapshotError(f"snapshot {path} is corrupted: {exc}") from exc

    if not isinstance(payload, dict) or payload.get("format") != SNAPSHOT_FORMAT:
        raise SnapshotError(f"snapshot {path} is not a {SNAPSHOT_FORMAT} file")
    version = payload.get("version")
    if version != SNAPSHOT_VERSION:
        raise SnapshotError(
            f"snapshot {path} has version {version}; this build reads version {SNAPSHOT_VERSION}"
        )
    try:
        matrix = CooccurrenceMatrix(run_meta=_meta_from_json(payload["run_meta"]))
        for s, d, w, dim, cat, n in payload["cells"]:
            matrix.cells[(s, d, _window_val(w), dim, cat)] = int(n)
        for s, d, w, n in payload["totals"]:
            matrix.totals[(s, d, _window_val(w))] = int(n)
        for s, d, w, dim, n in payload["no_demo"]:
            matrix.no_demo[(s, d, _window_val(w), dim)] = int(n)
    except (KeyError, TypeError, ValueError) as exc:
        raise SnapshotError(f"snapshot {path} is corrupted: {exc}") from exc
    return matrix
