"""Windowed co-occurrence auditing of disease and demographic terms in
JSONL web-text corpora."""

from .aggregate import CooccurrenceMatrix, RunMeta, merge, restore, snapshot
from .ingest import Document, IngestStats, SourceSpec, iter_documents, strip_latex
from .lexicon import (
    CompiledMatcher,
    Lexicon,
    MatchHit,
    compile,
    default_lexicon,
    find_matches,
    load_lexicon,
)
from .scanner import DOCUMENT_WINDOW, DocCounts, WindowConfig, scan_document, tokenize
from .stats import (
    BaselineTable,
    ComparisonTable,
    ShareTable,
    compare_to_baseline,
    demographic_shares,
    load_baseline,
    representation_pct,
    window_profile,
)
from .synth import SynthSpec, make_synthetic_corpus

__version__ = "0.1.0"

__all__ = [
    "CompiledMatcher",
    "ComparisonTable",
    "CooccurrenceMatrix",
    "BaselineTable",
    "DOCUMENT_WINDOW",
    "DocCounts",
    "Document",
    "IngestStats",
    "Lexicon",
    "MatchHit",
    "RunMeta",
    "ShareTable",
    "SourceSpec",
    "SynthSpec",
    "WindowConfig",
    "compare_to_baseline",
    "compile",
    "default_lexicon",
    "demographic_shares",
    "find_matches",
    "iter_documents",
    "load_baseline",
    "load_lexicon",
    "make_synthetic_corpus",
    "merge",
    "representation_pct",
    "restore",
    "scan_document",
    "snapshot",
    "strip_latex",
    "tokenize",
    "window_profile",
]
