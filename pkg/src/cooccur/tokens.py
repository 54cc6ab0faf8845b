"""Whitespace-word tokenization shared by the matcher and the scanner.

All distance arithmetic in this package is measured in whitespace-delimited
words, so the tokenizer must keep a one-to-one mapping between emitted tokens
and whitespace-delimited positions.  A word that is pure punctuation trims to
the empty string but still occupies its index; it can never match a term.
"""

from __future__ import annotations

import string

# ASCII punctuation plus the curly quotes / dashes / ellipsis common in web
# text.  Trimmed from token edges only; interior characters ("hiv/aids",
# "don't") are preserved.
EDGE_PUNCT = string.punctuation + "“”‘’«»–—…¡¿"


def tokenize(text: str) -> list[str]:
    """Split on whitespace and trim edge punctuation from each word.

    Returns one token per whitespace-delimited word, in order, so the list
    index of a token is its word position in the original text.  Words that
    consist entirely of punctuation become empty strings (position kept).
    """
    return [w.strip(EDGE_PUNCT) for w in text.split()]


def fold(token: str) -> str:
    """Case-fold a token for matching."""
    return token.casefold()


def fold_tokens(tokens: list[str]) -> list[str]:
    return [t.casefold() for t in tokens]
