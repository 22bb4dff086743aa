"""Tokenization and the closed special-token vocabulary.

The default tokenizer splits on whitespace and treats every punctuation
character as its own token. It is deliberately model-free: any real code
language model can be plugged in by passing a different callable wherever a
tokenizer is accepted. Special tokens always count as one token.
"""

from __future__ import annotations

import re
from typing import Callable, Iterable

Tokenizer = Callable[[str], list[str]]

_WORD_OR_PUNCT = re.compile(r"[A-Za-z0-9_$]+|[^\sA-Za-z0-9_$]")

# Input-side markers.
TEST_CONTEXT = "[<TESTCONTEXT>]"
REPAIR_CONTEXT = "[<REPAIRCONTEXT>]"
BREAKAGE_START = "[<BREAKAGE>]"
BREAKAGE_END = "[</BREAKAGE>]"
HUNK_START = "[<HUNK>]"
HUNK_END = "[</HUNK>]"
DEL_START = "[<DEL>]"
DEL_END = "[</DEL>]"
ADD_START = "[<ADD>]"
ADD_END = "[</ADD>]"

# Output-side markers for edit sequences.
REPLACE_OLD = "[<replaceOld>]"
REPLACE_NEW = "[<replaceNew>]"
REPLACE_OLD_KEEP_BEFORE = "[<replaceOldKeepBefore>]"
REPLACE_NEW_KEEP_BEFORE = "[<replaceNewKeepBefore>]"
REPLACE_OLD_KEEP_AFTER = "[<replaceOldKeepAfter>]"
REPLACE_NEW_KEEP_AFTER = "[<replaceNewKeepAfter>]"
REPLACE_END = "[<replaceEnd>]"

SPECIAL_TOKENS = (
    TEST_CONTEXT,
    REPAIR_CONTEXT,
    BREAKAGE_START,
    BREAKAGE_END,
    HUNK_START,
    HUNK_END,
    DEL_START,
    DEL_END,
    ADD_START,
    ADD_END,
    REPLACE_OLD,
    REPLACE_NEW,
    REPLACE_OLD_KEEP_BEFORE,
    REPLACE_NEW_KEEP_BEFORE,
    REPLACE_OLD_KEEP_AFTER,
    REPLACE_NEW_KEEP_AFTER,
    REPLACE_END,
)

# Every special token starts with this prefix, so escaping the prefix inside
# user-supplied code is enough to keep the vocabulary unambiguous.
_SPECIAL_PREFIX = "[<"
_ESCAPED_PREFIX = "[<ESC"


def tokenize(text: str) -> list[str]:
    """Split into identifier/number runs and single punctuation characters."""
    return _WORD_OR_PUNCT.findall(text)


def tokenize_lines(lines: Iterable[str]) -> list[str]:
    """Flat token stream of several lines, with line boundaries dropped."""
    out: list[str] = []
    for line in lines:
        out.extend(tokenize(line))
    return out


def detokenize(tokens: Iterable[str]) -> str:
    """Canonical surface form: tokens joined by single spaces."""
    return " ".join(tokens)


def escape_specials(text: str) -> str:
    """Neutralize literal special-token prefixes occurring in user code."""
    return text.replace(_SPECIAL_PREFIX, _ESCAPED_PREFIX)


def unescape_specials(text: str) -> str:
    return text.replace(_ESCAPED_PREFIX, _SPECIAL_PREFIX)


def load_vocab_tokenizer(vocab: Iterable[str]) -> Tokenizer:
    """Tokenizer that keeps the given multi-character strings intact.

    Vocabulary entries are matched greedily (longest first) before the default
    splitting applies. This is the hook for feeding a real model's added-token
    strings without depending on the model itself.
    """
    entries = sorted({v for v in vocab if v}, key=len, reverse=True)
    if not entries:
        return tokenize
    pattern = re.compile(
        "|".join(re.escape(e) for e in entries)
        + r"|[A-Za-z0-9_$]+|[^\sA-Za-z0-9_$]"
    )

    def _tok(text: str) -> list[str]:
        return pattern.findall(text)

    return _tok


def count_tokens(text: str, tokenizer: Tokenizer = tokenize) -> int:
    """Token count of canonical rendered text; special tokens count as 1."""
    total = 0
    for piece in text.split():
        if piece in SPECIAL_TOKENS:
            total += 1
        else:
            total += len(tokenizer(piece))
    return total


def rebind_special_tokens(text: str, mapping: dict[str, str]) -> str:
    """Swap canonical marker strings for a model's own added-token strings.

    The mapping file is {canonical: model_token}; markers absent from the
    mapping pass through unchanged. Longest markers are replaced first so
    none shadows another.
    """
    unknown = set(mapping) - set(SPECIAL_TOKENS)
    if unknown:
        raise KeyError(f"not special tokens: {sorted(unknown)}")
    for marker in sorted(mapping, key=len, reverse=True):
        text = text.replace(marker, mapping[marker])
    return text
