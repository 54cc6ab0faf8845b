"""Synthetic corpora with exactly known co-occurrence counts.

The generator plants, per document, one disease mention plus demographic
terms at controlled token distances, drawn so that each configured
(disease, dimension, category, window) cell co-occurs with its target
probability.  What was actually planted is recorded alongside, so the true
counts are known exactly, not estimated.  Same seed, same spec: byte
-identical output.

Documents are laid out on a fixed-length token grid.  Planted spans never
touch each other (one-slot padding) and filler words share no vocabulary
with the lexicon, so the recorded truth cannot be disturbed by accidental
matches.
"""

from __future__ import annotations

import gzip
import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from .lexicon import Lexicon, default_lexicon
from .scanner import DOCUMENT_WINDOW, Window, WindowConfig
from .tokens import fold, tokenize

FILLER_WORDS = [f"flw{i:03d}" for i in range(331)]


class SynthError(Exception):
    """Invalid planted-rate specification or infeasible placement."""


@dataclass
class PlantedRate:
    disease: str
    dimension: str
    category: str
    p_by_window: dict[Window, float]


@dataclass
class SynthSpec:
    source: str
    docs_per_disease: dict[str, int]
    rates: list[PlantedRate]
    windows: WindowConfig = WindowConfig()
    doc_token_len: int = 600
    filler_docs: int = 0
    shard_docs: int = 0  # 0 = one file
    compress: bool = False


@dataclass
class GroundTruth:
    """Exact planted counts, shaped like one source's matrix slice."""

    source: str
    totals: dict[str, dict[Window, int]] = field(default_factory=dict)
    cells: dict[str, dict[Window, dict[str, dict[str, int]]]] = field(default_factory=dict)
    docs: int = 0


@dataclass
class SynthResult:
    corpus_paths: list[Path]
    truth_path: Path
    truth: GroundTruth


def load_spec(path: str | Path) -> SynthSpec:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    windows = WindowConfig(
        sizes=tuple(data.get("windows", (20, 100, 200, 500))),
        include_document=data.get("include_document", True),
    )
    labels = windows.labels()
    rates = []
    for row in data.get("rates", []):
        rates.append(
            PlantedRate(
                disease=row["disease"],
                dimension=row["dimension"],
                category=row["category"],
                p_by_window=_expand_p(row["p"], labels),
            )
        )
    return SynthSpec(
        source=data.get("source", "synthetic"),
        docs_per_disease={k: int(v) for k, v in data["docs_per_disease"].items()},
        rates=rates,
        windows=windows,
        doc_token_len=int(data.get("doc_token_len", 600)),
        filler_docs=int(data.get("filler_docs", 0)),
        shard_docs=int(data.get("shard_docs", 0)),
        compress=bool(data.get("compress", False)),
    )


def _expand_p(p, labels: list[Window]) -> dict[Window, float]:
    if isinstance(p, (int, float)):
        return {w: float(p) for w in labels}
    if isinstance(p, dict):
        out: dict[Window, float] = {}
        for w in labels:
            key = w if w == DOCUMENT_WINDOW else str(w)
            if key not in p:
                raise SynthError(f"rate table missing window {key!r}")
            out[w] = float(p[key])
        return out
    raise SynthError(f"rate must be a number or per-window table, got {p!r}")


def _validate_rates(spec: SynthSpec) -> None:
    labels = spec.windows.labels()
    for rate in spec.rates:
        if rate.disease not in spec.docs_per_disease:
            raise SynthError(f"rate for {rate.disease!r} but no docs planned for it")
        prev = 0.0
        for w in labels:
            p = rate.p_by_window[w]
            if not 0.0 <= p <= 1.0:
                raise SynthError(
                    f"probability {p} outside [0,1] for "
                    f"{rate.disease}/{rate.dimension}/{rate.category}"
                )
            if p < prev:
                raise SynthError(
                    f"probabilities must be non-decreasing across windows for "
                    f"{rate.disease}/{rate.dimension}/{rate.category}"
                )
            prev = p


def _term_tokens(lexicon: Lexicon) -> dict[tuple[str, str], list[tuple[str, ...]]]:
    out: dict[tuple[str, str], list[tuple[str, ...]]] = {}
    for entry in lexicon.entries:
        toks = [tuple(fold(t) for t in tokenize(term)) for term in entry.terms]
        out[(entry.dimension, entry.category)] = toks
    return out


def _contains_subseq(haystack: tuple[str, ...], needle: tuple[str, ...]) -> bool:
    n = len(needle)
    return any(haystack[i : i + n] == needle for i in range(len(haystack) - n + 1))


def _pick_plant_terms(lexicon: Lexicon, needed: set[tuple[str, str]]) -> dict[tuple[str, str], tuple[str, ...]]:
    """Choose one term per needed category such that no other category's
    term sequence occurs inside it (keeps the recorded truth exact)."""
    all_terms = _term_tokens(lexicon)
    lex_tokens = {tok for terms in all_terms.values() for t in terms for tok in t}
    if lex_tokens & set(FILLER_WORDS):
        raise SynthError("lexicon vocabulary collides with filler words")

    chosen: dict[tuple[str, str], tuple[str, ...]] = {}
    for key in sorted(needed):
        if key not in all_terms:
            dim, cat = key
            raise SynthError(f"no category {cat!r} in dimension {dim!r}")
        candidates = all_terms[key]
        others = [t for k, terms in all_terms.items() if k != key for t in terms]
        for cand in candidates:
            if not any(_contains_subseq(cand, u) for u in others):
                chosen[key] = cand
                break
        else:
            raise SynthError(f"every term of {key} embeds another category's term")
    return chosen


class _DocBuilder:
    """Token grid for one document; planted spans are kept one slot apart."""

    def __init__(self, length: int):
        self.length = length
        self.slots: list[str | None] = [None] * length
        self.blocked: set[int] = set()

    def place(self, start: int, tokens: tuple[str, ...]) -> bool:
        end = start + len(tokens) - 1
        if start < 0 or end >= self.length:
            return False
        if any(i in self.blocked for i in range(start, end + 1)):
            return False
        for off, tok in enumerate(tokens):
            self.slots[start + off] = tok
        self.blocked.update(range(start - 1, end + 2))
        return True

    def fill(self, rng: random.Random) -> str:
        words = rng.choices(FILLER_WORDS, k=self.length)
        for i, tok in enumerate(self.slots):
            if tok is not None:
                words[i] = tok
        return " ".join(words)


def _bands(rate: PlantedRate, windows: WindowConfig) -> list[tuple[float, int, int | None]]:
    """(cumulative probability, min distance, max distance|None=document side cap)."""
    bands: list[tuple[float, int, int | None]] = []
    lo = 1
    for w in windows.sizes:
        bands.append((rate.p_by_window[w], lo, w // 2))
        lo = w // 2 + 1
    if windows.include_document:
        bands.append((rate.p_by_window[DOCUMENT_WINDOW], lo, None))
    return bands


def _draw_distance(rng: random.Random, rate: PlantedRate, windows: WindowConfig) -> tuple[int, int | None] | None:
    """Draw the placement band; returns (min, max|None) or None for absent."""
    u = rng.random()
    for cum, lo, hi in _bands(rate, windows):
        if u < cum:
            return lo, hi
    return None


def _place_in_band(
    rng: random.Random,
    builder: _DocBuilder,
    d_start: int,
    d_end: int,
    tokens: tuple[str, ...],
    lo: int,
    hi: int | None,
) -> int:
    """Place tokens with nearest-endpoint distance in [lo, hi] from the
    disease span; returns the achieved distance."""
    m = len(tokens)
    before_max = d_start - m  # distance g puts span end at d_start - g
    after_max = builder.length - 1 - d_end - m + 1
    options: list[tuple[int, int]] = []  # (side, g) candidates; side 0=before 1=after
    for side, cap in ((0, before_max), (1, after_max)):
        top = cap if hi is None else min(hi, cap)
        if top >= lo:
            options.append((side, top))
    if not options:
        raise SynthError(
            f"document too short to plant at distance >= {lo}; raise doc_token_len"
        )

    for _ in range(64):
        side, top = options[rng.randrange(len(options))]
        g = rng.randint(lo, top)
        start = d_start - g - m + 1 if side == 0 else d_end + g
        if builder.place(start, tokens):
            return g
    # Dense band: fall back to scanning every slot in a fixed order.
    for side, top in options:
        for g in range(lo, top + 1):
            start = d_start - g - m + 1 if side == 0 else d_end + g
            if builder.place(start, tokens):
                return g
    raise SynthError("no free slots for planted term; raise doc_token_len or lower rates")


def make_synthetic_corpus(
    spec: SynthSpec,
    seed: int,
    out_dir: str | Path,
    lexicon: Lexicon | None = None,
) -> SynthResult:
    """Write corpus shards plus a ground-truth file; deterministic per seed."""
    _validate_rates(spec)
    lexicon = lexicon or default_lexicon()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    needed = {("disease", d) for d in spec.docs_per_disease}
    needed.update((r.dimension, r.category) for r in spec.rates)
    plant_terms = _pick_plant_terms(lexicon, needed)
    demo_keys = sorted({(r.dimension, r.category) for r in spec.rates})

    labels = spec.windows.labels()
    rates_by_disease: dict[str, list[PlantedRate]] = {}
    for rate in spec.rates:
        rates_by_disease.setdefault(rate.disease, []).append(rate)

    truth = GroundTruth(source=spec.source)
    for disease in spec.docs_per_disease:
        truth.totals[disease] = {w: 0 for w in labels}
        truth.cells[disease] = {
            w: {dim: {} for dim in ("race", "gender")} for w in labels
        }

    rng = random.Random(seed)
    plan: list[str | None] = []  # disease name, or None for a filler doc
    for disease, n in sorted(spec.docs_per_disease.items()):
        plan.extend([disease] * n)
    plan.extend([None] * spec.filler_docs)
    rng.shuffle(plan)

    shard_docs = spec.shard_docs if spec.shard_docs > 0 else len(plan) or 1
    suffix = ".jsonl.gz" if spec.compress else ".jsonl"
    paths: list[Path] = []
    writer = None
    shard_idx = -1

    def open_shard(i: int):
        path = out_dir / f"part-{i:05d}{suffix}"
        paths.append(path)
        if spec.compress:
            # Fixed mtime keeps regenerated shards byte-identical.
            return gzip.GzipFile(filename="", mode="wb", fileobj=open(path, "wb"), mtime=0)
        return open(path, "wb")

    try:
        for idx, disease in enumerate(plan):
            if idx // shard_docs != shard_idx:
                if writer is not None:
                    writer.close()
                shard_idx = idx // shard_docs
                writer = open_shard(shard_idx)

            builder = _DocBuilder(spec.doc_token_len)
            if disease is None:
                # Filler document: no disease hit; sometimes carries a lone
                # demographic term so negative cases are not all-filler.
                if demo_keys and rng.random() < 0.3:
                    key = demo_keys[rng.randrange(len(demo_keys))]
                    pos = rng.randrange(spec.doc_token_len - len(plant_terms[key]))
                    builder.place(pos, plant_terms[key])
            else:
                d_tokens = plant_terms[("disease", disease)]
                d_start = (spec.doc_token_len - len(d_tokens)) // 2
                if not builder.place(d_start, d_tokens):
                    raise SynthError("disease term does not fit; raise doc_token_len")
                d_end = d_start + len(d_tokens) - 1

                for w in labels:
                    truth.totals[disease][w] += 1
                for rate in rates_by_disease.get(disease, []):
                    band = _draw_distance(rng, rate, spec.windows)
                    if band is None:
                        continue
                    g = _place_in_band(
                        rng, builder, d_start, d_end,
                        plant_terms[(rate.dimension, rate.category)], band[0], band[1],
                    )
                    for w in labels:
                        if w == DOCUMENT_WINDOW or 2 * g <= int(w):
                            cell = truth.cells[disease][w][rate.dimension]
                            cell[rate.category] = cell.get(rate.category, 0) + 1

            record = {"id": f"{spec.source}-{idx:08d}", "text": builder.fill(rng)}
            line = json.dumps(record, sort_keys=True, separators=(",", ":")) + "\n"
            writer.write(line.encode("ascii"))
            truth.docs += 1
    finally:
        if writer is not None:
            writer.close()

    truth_path = out_dir / "ground_truth.json"
    _write_truth(truth, spec, seed, truth_path)
    return SynthResult(corpus_paths=paths, truth_path=truth_path, truth=truth)


def _window_str(w: Window) -> str:
    return w if w == DOCUMENT_WINDOW else str(w)


def _write_truth(truth: GroundTruth, spec: SynthSpec, seed: int, path: Path) -> None:
    payload = {
        "format": "cooccur-groundtruth",
        "version": 1,
        "source": truth.source,
        "seed": seed,
        "windows": list(spec.windows.sizes),
        "include_document": spec.windows.include_document,
        "docs": truth.docs,
        "totals": {
            d: {_window_str(w): n for w, n in by_w.items()}
            for d, by_w in truth.totals.items()
        },
        "cells": {
            d: {
                _window_str(w): {dim: dict(sorted(cats.items())) for dim, cats in by_dim.items()}
                for w, by_dim in by_w.items()
            }
            for d, by_w in truth.cells.items()
        },
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_truth(path: str | Path) -> GroundTruth:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)

    def _w(s: str) -> Window:
        return s if s == DOCUMENT_WINDOW else int(s)

    truth = GroundTruth(source=data["source"], docs=data["docs"])
    truth.totals = {
        d: {_w(w): n for w, n in by_w.items()} for d, by_w in data["totals"].items()
    }
    truth.cells = {
        d: {
            _w(w): {dim: dict(cats) for dim, cats in by_dim.items()}
            for w, by_dim in by_w.items()
        }
        for d, by_w in data["cells"].items()
    }
    return truth
