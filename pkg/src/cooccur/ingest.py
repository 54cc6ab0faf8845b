"""Streaming JSONL corpus ingestion.

Corpus files are newline-delimited JSON, optionally gzip-compressed (detected
by magic bytes, not extension).  Records stream one line at a time so peak
memory does not depend on corpus size.  Damaged lines are counted and
skipped, never fatal: web-scale corpora always contain a few of them.
"""

from __future__ import annotations

import gzip
import io
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator


class ConfigError(Exception):
    """Unusable run configuration (bad paths, bad labels, bad options)."""


@dataclass
class SourceSpec:
    """One corpus source: a label plus the files that belong to it."""

    label: str
    paths: list[str]
    text_field: str = "text"

    def __post_init__(self) -> None:
        if not self.label:
            raise ConfigError("source label must be non-empty")
        if not self.paths:
            raise ConfigError(f"source {self.label!r} lists no paths")

    def resolve_files(self) -> list[Path]:
        """Expand paths to a sorted list of corpus files.

        Directories contribute every regular file directly inside them, in
        name order.  At least one file must exist.
        """
        files: list[Path] = []
        for p in self.paths:
            path = Path(p)
            if path.is_dir():
                files.extend(sorted(q for q in path.iterdir() if q.is_file()))
            elif path.is_file():
                files.append(path)
            else:
                raise ConfigError(f"source {self.label!r}: path not readable: {p}")
        if not files:
            raise ConfigError(f"source {self.label!r}: no corpus files found")
        return files


@dataclass
class Document:
    """One cleaned corpus record."""

    text: str
    source: str
    meta: dict[str, str] = field(default_factory=dict)
    byte_len: int = 0


@dataclass
class IngestStats:
    """Record-level accounting; merges additively across workers."""

    records_read: int = 0
    records_skipped: int = 0
    bytes_read: int = 0
    parse_errors: int = 0

    def merge(self, other: "IngestStats") -> None:
        self.records_read += other.records_read
        self.records_skipped += other.records_skipped
        self.bytes_read += other.bytes_read
        self.parse_errors += other.parse_errors


# A command is a backslash followed by letters (optional trailing *), with an
# optional single brace group whose contents are kept and braces dropped.
_CMD_WITH_GROUP = re.compile(r"\\[a-zA-Z]+\*?\s*\{([^{}]*)\}")
_CMD_BARE = re.compile(r"\\[a-zA-Z]+\*?")


def strip_latex(text: str) -> str:
    """Remove LaTeX command tokens from text.

    ``\\textbf{male}`` becomes `` male ``: the command name goes away and the
    brace group is unwrapped so human-readable argument words stay available
    for matching.  Nested groups unwrap from the inside out.  Whitespace is
    not normalized here; the tokenizer collapses it later.  Idempotent: a
    second application is the identity.
    """
    if "\\" not in text:
        return text
    prev = None
    while prev != text:
        prev = text
        text = _CMD_WITH_GROUP.sub(r" \1 ", text)
    return _CMD_BARE.sub(" ", text)


_GZIP_MAGIC = b"\x1f\x8b"


def _open_stream(path: Path) -> io.BufferedIOBase:
    raw = open(path, "rb")
    magic = raw.read(2)
    raw.seek(0)
    if magic == _GZIP_MAGIC:
        return gzip.open(raw)  # type: ignore[return-value]
    return raw


def open_corpus(
    spec: SourceSpec,
    stats: IngestStats,
    sample_bytes: int | None = None,
) -> Iterator[tuple[dict, int]]:
    """Yield (json_object, byte_length) for every parseable record.

    Files stream line by line; only one line is held in memory at a time.
    ``sample_bytes`` caps the (decompressed) bytes consumed per file, for
    smoke runs against corpus prefixes.  Malformed lines count as skipped
    parse errors and the stream continues.
    """
    for path in spec.resolve_files():
        with _open_stream(path) as fh:
            consumed = 0
            for raw_line in fh:
                if sample_bytes is not None and consumed >= sample_bytes:
                    break
                consumed += len(raw_line)
                line = raw_line.rstrip(b"\r\n")
                nbytes = len(line)
                stats.records_read += 1
                stats.bytes_read += nbytes
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
                yield obj, nbytes


def parse_record(
    raw: dict,
    spec: SourceSpec,
    stats: IngestStats,
    byte_len: int = 0,
) -> Document | None:
    """Map a raw JSON object to a cleaned Document.

    The text field is LaTeX-stripped; every other top-level scalar string
    field is retained as metadata.  Records lacking a string text field are
    skipped and counted.
    """
    text = raw.get(spec.text_field)
    if not isinstance(text, str):
        stats.records_skipped += 1
        return None
    meta = {k: v for k, v in raw.items() if k != spec.text_field and isinstance(v, str)}
    return Document(text=strip_latex(text), source=spec.label, meta=meta, byte_len=byte_len)


def iter_documents(
    spec: SourceSpec,
    stats: IngestStats,
    sample_bytes: int | None = None,
) -> Iterator[Document]:
    """Stream cleaned Documents out of one source."""
    for raw, nbytes in open_corpus(spec, stats, sample_bytes=sample_bytes):
        doc = parse_record(raw, spec, stats, byte_len=nbytes)
        if doc is not None:
            yield doc
