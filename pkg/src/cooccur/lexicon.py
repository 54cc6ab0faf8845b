"""Keyword dictionaries and the multi-pattern phrase matcher built from them.

A lexicon groups term phrases under (dimension, category), where the
dimensions are exactly disease / race / gender.  Matching happens over
whitespace-word tokens with whole-token semantics: "black" never matches
inside "blackboard", and multi-word phrases like "hepatitis b" must cover
consecutive word positions.

The compiled matcher is a token-level Aho-Corasick automaton:

    1. goto trie keyed by folded term tokens,
    2. failure links computed breadth-first (longest proper suffix of the
       current token path that is also a prefix of some term),
    3. output lists propagated along failure links so shorter terms that
       are suffixes of longer ones are still reported.

The automaton is read-only after construction and picklable, so worker
processes can share one compiled form.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

from .tokens import fold, tokenize

logger = logging.getLogger("cooccur.lexicon")

DIMENSIONS = ("disease", "race", "gender")
DEMOGRAPHIC_DIMENSIONS = ("race", "gender")

# Pronouns dominate raw counts and are therefore opt-in, keyed by the two
# default gender categories.
GENDER_PRONOUNS = {
    "male": ["he", "him", "his", "himself"],
    "female": ["she", "her", "hers", "herself"],
}


class LexiconError(Exception):
    """Unusable lexicon file or inconsistent lexicon contents."""


@dataclass
class LexiconEntry:
    dimension: str
    category: str
    terms: list[str]


@dataclass
class Lexicon:
    """Term lists per (dimension, category), plus matching options."""

    entries: list[LexiconEntry] = field(default_factory=list)
    case_mode: str = "fold"
    match_pronouns: bool = False

    def categories(self, dimension: str) -> list[str]:
        return [e.category for e in self.entries if e.dimension == dimension]

    def terms_of(self, dimension: str, category: str) -> list[str]:
        for e in self.entries:
            if e.dimension == dimension and e.category == category:
                return e.terms
        raise LexiconError(f"no category {category!r} in dimension {dimension!r}")

    def fingerprint(self) -> str:
        """Stable content hash; guards merges against mixed lexicons."""
        canon = {
            "case_mode": self.case_mode,
            "match_pronouns": self.match_pronouns,
            "entries": [[e.dimension, e.category, e.terms] for e in self.entries],
        }
        blob = json.dumps(canon, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()


def _normalize_terms(dimension: str, category: str, raw_terms: list, case_mode: str) -> list[str]:
    if not isinstance(raw_terms, list) or not raw_terms:
        raise LexiconError(f"category {dimension}:{category} is empty")
    seen: set[str] = set()
    terms: list[str] = []
    for t in raw_terms:
        if not isinstance(t, str) or not t.strip():
            raise LexiconError(f"category {dimension}:{category} contains an empty term")
        term = t.strip()
        toks = tokenize(term)
        if not toks or any(not tk for tk in toks):
            raise LexiconError(
                f"term {term!r} in {dimension}:{category} has no matchable tokens"
            )
        key = term.casefold() if case_mode == "fold" else term
        if key in seen:
            logger.warning("duplicate term %r in %s:%s collapsed", term, dimension, category)
            continue
        seen.add(key)
        terms.append(term)
    return terms


def load_lexicon(path: str | Path) -> Lexicon:
    """Load a lexicon file (JSON: dimension -> category -> [terms])."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except ValueError as exc:
            raise LexiconError(f"lexicon file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise LexiconError(f"lexicon file {path} must be a JSON object")

    options = data.get("options", {})
    case_mode = options.get("case_mode", "fold")
    if case_mode not in ("fold", "exact"):
        raise LexiconError(f"unknown case_mode {case_mode!r} (expected fold or exact)")
    match_pronouns = bool(options.get("match_pronouns", False))

    entries: list[LexiconEntry] = []
    for key, value in data.items():
        if key == "options" or key.startswith("_"):
            continue
        if key not in DIMENSIONS:
            raise LexiconError(
                f"unknown dimension {key!r} (expected one of {', '.join(DIMENSIONS)})"
            )
        if not isinstance(value, dict) or not value:
            raise LexiconError(f"dimension {key!r} defines no categories")
        for category, raw_terms in value.items():
            terms = _normalize_terms(key, category, raw_terms, case_mode)
            entries.append(LexiconEntry(dimension=key, category=category, terms=terms))

    lex = Lexicon(entries=entries, case_mode=case_mode, match_pronouns=match_pronouns)
    if match_pronouns:
        for cat, pronouns in GENDER_PRONOUNS.items():
            try:
                terms = lex.terms_of("gender", cat)
            except LexiconError:
                continue
            have = {t.casefold() for t in terms}
            terms.extend(p for p in pronouns if p.casefold() not in have)
    return lex


def default_lexicon_path() -> Path:
    return Path(__file__).parent / "data" / "lexicon_default.json"


def default_lexicon() -> Lexicon:
    return load_lexicon(default_lexicon_path())


@dataclass(frozen=True, order=True)
class MatchHit:
    """One matched term occurrence over token indices (inclusive span)."""

    span_start: int
    span_end: int
    dimension: str
    category: str
    term: str


@dataclass(frozen=True)
class _Term:
    dimension: str
    category: str
    text: str
    tokens: tuple[str, ...]


class CompiledMatcher:
    """Immutable Aho-Corasick automaton over tokenized term phrases.

    Build once with :func:`compile`, share freely across workers.  The
    matching semantics are whole-token, case-folded (unless the lexicon
    says exact), with per-category leftmost-longest overlap resolution.
    """

    def __init__(self, lexicon: Lexicon):
        self.case_mode = lexicon.case_mode
        self.lexicon_hash = lexicon.fingerprint()
        self.categories = {dim: lexicon.categories(dim) for dim in DIMENSIONS}
        self._terms: list[_Term] = []
        for entry in lexicon.entries:
            for term in entry.terms:
                toks = tokenize(term)
                if self.case_mode == "fold":
                    toks = [fold(t) for t in toks]
                self._terms.append(
                    _Term(entry.dimension, entry.category, term, tuple(toks))
                )
        self._build_automaton()
        self._build_prefilter()

    def _build_automaton(self) -> None:
        goto: list[dict[str, int]] = [{}]
        out: list[list[int]] = [[]]
        for tid, term in enumerate(self._terms):
            node = 0
            for tok in term.tokens:
                nxt = goto[node].get(tok)
                if nxt is None:
                    goto.append({})
                    out.append([])
                    nxt = len(goto) - 1
                    goto[node][tok] = nxt
                node = nxt
            out[node].append(tid)

        fail = [0] * len(goto)
        queue: deque[int] = deque()
        for child in goto[0].values():
            queue.append(child)
        while queue:
            node = queue.popleft()
            for tok, child in goto[node].items():
                queue.append(child)
                f = fail[node]
                while f and tok not in goto[f]:
                    f = fail[f]
                fail[child] = goto[f].get(tok, 0) if goto[f].get(tok, 0) != child else 0
                out[child] = out[child] + out[fail[child]]

        self._goto = goto
        self._fail = fail
        self._out = [tuple(o) for o in out]

    def _build_prefilter(self) -> None:
        # Conservative substring screen: any whole-token match of a disease
        # term implies its first token occurs as a substring of the folded
        # text, so a miss here lets the scanner skip the document entirely.
        firsts = sorted({t.tokens[0] for t in self._terms if t.dimension == "disease"})
        if firsts:
            pat = "|".join(re.escape(tok) for tok in firsts)
            self._disease_prefilter = re.compile(pat)
        else:
            self._disease_prefilter = None

    def maybe_has_disease(self, text: str) -> bool:
        """Cheap over-approximate check used to skip hitless documents."""
        if self._disease_prefilter is None:
            return False
        hay = text.casefold() if self.case_mode == "fold" else text
        return self._disease_prefilter.search(hay) is not None

    def maybe_has_disease_folded(self, folded_text: str) -> bool:
        """Prefilter over text that the caller already case-folded."""
        if self._disease_prefilter is None:
            return False
        return self._disease_prefilter.search(folded_text) is not None

    @property
    def term_count(self) -> int:
        return len(self._terms)


def compile(lexicon: Lexicon) -> CompiledMatcher:  # noqa: A001 - contract name
    """Compile a lexicon into its immutable matcher."""
    return CompiledMatcher(lexicon)


def _leftmost_longest(hits: list[MatchHit]) -> list[MatchHit]:
    """Resolve overlaps within one category: earliest start wins, longest
    span breaks ties at the same start."""
    hits.sort(key=lambda h: (h.span_start, -h.span_end))
    chosen: list[MatchHit] = []
    last_end = -1
    for h in hits:
        if h.span_start > last_end:
            chosen.append(h)
            last_end = h.span_end
    return chosen


def find_matches(matcher: CompiledMatcher, tokens: list[str]) -> list[MatchHit]:
    """Report every term occurrence in a token sequence.

    Hits from different categories may overlap freely; within one category
    overlapping hits collapse to the leftmost-longest occurrence (so
    "prostate cancer" is one disease hit, not two).  Result is ordered by
    span start.
    """
    if matcher.case_mode == "fold":
        toks = [t.casefold() for t in tokens]
    else:
        toks = tokens
    return find_matches_prefolded(matcher, toks)


def find_matches_prefolded(matcher: CompiledMatcher, toks: list[str]) -> list[MatchHit]:
    """Like :func:`find_matches` for tokens already folded per case_mode."""
    goto = matcher._goto
    fail = matcher._fail
    out = matcher._out
    terms = matcher._terms
    root = goto[0]

    per_category: dict[tuple[str, str], list[MatchHit]] = {}
    state = 0
    for i, tok in enumerate(toks):
        if state:
            while state and tok not in goto[state]:
                state = fail[state]
            state = goto[state].get(tok, 0)
        else:
            state = root.get(tok, 0)
        if out[state]:
            for tid in out[state]:
                term = terms[tid]
                start = i - len(term.tokens) + 1
                hit = MatchHit(start, i, term.dimension, term.category, term.text)
                per_category.setdefault((term.dimension, term.category), []).append(hit)

    result: list[MatchHit] = []
    for hits in per_category.values():
        result.extend(_leftmost_longest(hits))
    result.sort()
    return result
