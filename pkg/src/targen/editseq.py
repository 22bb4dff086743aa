"""Unambiguous edit-sequence codec for repairs expressed as token replacements.

A repair is a list of replacements, each locating a unique token run in the
breakage lines and substituting new tokens. When a changed run is not unique
on its own, kept context is prepended (KeepBefore) or appended (KeepAfter)
until it is; the mode records which side of the replacement is merely a
location marker. Inserting a whole statement degenerates to a KeepBefore
replacement of the preceding token(s), which for statement insertions is the
preceding terminator.
"""

from __future__ import annotations

import difflib
from dataclasses import dataclass
from enum import Enum

from . import tokenization as tk
from .errors import AmbiguityError, EditSequenceParseError, EncodingFailure

# A single kept token sandwiched between two changed runs is restated inline
# instead of splitting the replacement in two.
_MERGE_GAP = 1


class ReplaceMode(str, Enum):
    PLAIN = "plain"
    KEEP_BEFORE = "keep_before"
    KEEP_AFTER = "keep_after"


_MODE_MARKERS = {
    ReplaceMode.PLAIN: (tk.REPLACE_OLD, tk.REPLACE_NEW),
    ReplaceMode.KEEP_BEFORE: (tk.REPLACE_OLD_KEEP_BEFORE, tk.REPLACE_NEW_KEEP_BEFORE),
    ReplaceMode.KEEP_AFTER: (tk.REPLACE_OLD_KEEP_AFTER, tk.REPLACE_NEW_KEEP_AFTER),
}
_OLD_MARKER_TO_MODE = {old: mode for mode, (old, _) in _MODE_MARKERS.items()}


def _shared_prefix_len(a: tuple[str, ...], b: tuple[str, ...]) -> int:
    n = 0
    for x, y in zip(a, b):
        if x != y:
            break
        n += 1
    return n


@dataclass(frozen=True)
class Replacement:
    mode: ReplaceMode
    old_tokens: tuple[str, ...]
    new_tokens: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "old_tokens", tuple(self.old_tokens))
        object.__setattr__(self, "new_tokens", tuple(self.new_tokens))
        if self.mode == ReplaceMode.KEEP_BEFORE:
            if _shared_prefix_len(self.old_tokens, self.new_tokens) == 0:
                raise EditSequenceParseError(
                    "keep-before replacement must share a non-empty prefix"
                )
        elif self.mode == ReplaceMode.KEEP_AFTER:
            rev_old = tuple(reversed(self.old_tokens))
            rev_new = tuple(reversed(self.new_tokens))
            if _shared_prefix_len(rev_old, rev_new) == 0:
                raise EditSequenceParseError(
                    "keep-after replacement must share a non-empty suffix"
                )


@dataclass(frozen=True)
class EditSequence:
    replacements: tuple[Replacement, ...]

    def __post_init__(self):
        object.__setattr__(self, "replacements", tuple(self.replacements))

    def __len__(self) -> int:
        return len(self.replacements)


def count_occurrences(haystack: list[str] | tuple[str, ...], needle: tuple[str, ...]) -> int:
    """Number of (possibly overlapping) positions where needle matches."""
    if not needle:
        return 1 if not haystack else len(haystack) + 1
    n, m = len(haystack), len(needle)
    return sum(
        1 for i in range(n - m + 1) if tuple(haystack[i : i + m]) == needle
    )


def _find_unique(haystack: list[str], needle: tuple[str, ...]) -> int:
    """Index of the single occurrence of needle; raises AmbiguityError otherwise."""
    if not needle:
        if not haystack:
            return 0
        raise AmbiguityError(list(needle), len(haystack) + 1)
    positions = [
        i
        for i in range(len(haystack) - len(needle) + 1)
        if tuple(haystack[i : i + len(needle)]) == needle
    ]
    if len(positions) != 1:
        raise AmbiguityError(list(needle), len(positions))
    return positions[0]


def apply_edit_sequence(
    breakage_tokens: list[str], seq: EditSequence
) -> list[str]:
    """Apply replacements in order, each on the text the previous ones produced."""
    working = list(breakage_tokens)
    for repl in seq.replacements:
        pos = _find_unique(working, repl.old_tokens)
        working[pos : pos + len(repl.old_tokens)] = list(repl.new_tokens)
    return working


# --------------------------------------------------------------------------
# Encoding
# --------------------------------------------------------------------------


def _changed_runs(old: list[str], new: list[str]) -> list[tuple[int, int, int, int]]:
    """Non-equal regions (i1, i2, j1, j2), with tiny kept gaps absorbed."""
    matcher = difflib.SequenceMatcher(a=old, b=new, autojunk=False)
    runs = [
        (i1, i2, j1, j2)
        for tag, i1, i2, j1, j2 in matcher.get_opcodes()
        if tag != "equal"
    ]
    merged: list[tuple[int, int, int, int]] = []
    for run in runs:
        if merged and run[0] - merged[-1][1] <= _MERGE_GAP:
            p = merged[-1]
            gap = run[0] - p[1]
            merged[-1] = (p[0], run[1], p[2], run[3])
            assert run[2] - p[3] == gap  # kept gap is identical on both sides
        else:
            merged.append(run)
    return merged


def _anchor_search(
    old: list[str],
    new_run: tuple[str, ...],
    i1: int,
    i2: int,
    left_bound: int,
    right_bound: int,
) -> Replacement | None:
    """Find the shortest uniquely-identifiable replacement for old[i1:i2] -> new_run.

    Plain wins when the changed run is already unique. Otherwise kept context
    is grown one token at a time, preferring the left side (KeepBefore), and
    never crossing into a neighboring changed run.
    """
    old_run = tuple(old[i1:i2])
    if old_run and count_occurrences(old, old_run) == 1:
        return Replacement(ReplaceMode.PLAIN, old_run, new_run)
    max_left = i1 - left_bound
    max_right = right_bound - i2
    for extra in range(1, max(max_left, max_right) + 1):
        if extra <= max_left:
            s = tuple(old[i1 - extra : i2])
            if count_occurrences(old, s) == 1:
                kept = tuple(old[i1 - extra : i1])
                return Replacement(ReplaceMode.KEEP_BEFORE, s, kept + new_run)
        if extra <= max_right:
            s = tuple(old[i1 : i2 + extra])
            if count_occurrences(old, s) == 1:
                kept = tuple(old[i2 : i2 + extra])
                return Replacement(ReplaceMode.KEEP_AFTER, s, new_run + kept)
    return None


def encode_edit_sequence(
    breakage_tokens: list[str], repaired_tokens: list[str]
) -> EditSequence:
    """Encode the transformation of breakage tokens into repaired tokens.

    The result always satisfies apply(breakage, result) == repaired. Raises
    EncodingFailure when no uniquely identifiable replacement exists, which
    only happens when there are no tokens to anchor on.
    """
    breakage = list(breakage_tokens)
    repaired = list(repaired_tokens)
    if breakage == repaired:
        return EditSequence(())
    if not breakage:
        raise EncodingFailure(
            "cannot anchor an insertion into empty breakage lines", repaired
        )
    runs = _changed_runs(breakage, repaired)
    replacements: list[Replacement] = []
    ok = True
    for idx, (i1, i2, j1, j2) in enumerate(runs):
        left_bound = runs[idx - 1][1] if idx else 0
        right_bound = runs[idx + 1][0] if idx + 1 < len(runs) else len(breakage)
        repl = _anchor_search(
            breakage, tuple(repaired[j1:j2]), i1, i2, left_bound, right_bound
        )
        if repl is None:
            ok = False
            break
        replacements.append(repl)
    if ok:
        seq = EditSequence(tuple(replacements))
        try:
            if apply_edit_sequence(breakage, seq) == repaired:
                return seq
        except AmbiguityError:
            pass
    # Interacting replacements or no one-sided anchor: fall back to replacing
    # the whole region in one shot, which is trivially unique.
    return EditSequence(
        (Replacement(ReplaceMode.PLAIN, tuple(breakage), tuple(repaired)),)
    )


# --------------------------------------------------------------------------
# Serialization
# --------------------------------------------------------------------------


def serialize_edit_sequence(seq: EditSequence) -> str:
    parts: list[str] = []
    for repl in seq.replacements:
        old_marker, new_marker = _MODE_MARKERS[repl.mode]
        parts.append(old_marker)
        parts.extend(repl.old_tokens)
        parts.append(new_marker)
        parts.extend(repl.new_tokens)
        parts.append(tk.REPLACE_END)
    return " ".join(parts)


def parse_edit_sequence(text: str) -> EditSequence:
    """Parse a serialized edit sequence; whitespace between tokens is free.

    Grammar per replacement: an old-marker, the target tokens, the matching
    new-marker, the substitute tokens, then the end marker. Mismatched marker
    modes, a missing end marker, or trailing garbage raise a parse error.
    """
    tokens = text.split()
    replacements: list[Replacement] = []
    pos = 0
    while pos < len(tokens):
        old_marker = tokens[pos]
        if old_marker not in _OLD_MARKER_TO_MODE:
            raise EditSequenceParseError(
                f"expected a replace-old marker at token {pos}, got {old_marker!r}"
            )
        mode = _OLD_MARKER_TO_MODE[old_marker]
        expected_new = _MODE_MARKERS[mode][1]
        pos += 1
        s: list[str] = []
        while pos < len(tokens) and tokens[pos] != expected_new:
            if tokens[pos] in tk.SPECIAL_TOKENS:
                raise EditSequenceParseError(
                    f"marker {tokens[pos]!r} does not match mode {mode.value}"
                )
            s.append(tokens[pos])
            pos += 1
        if pos >= len(tokens):
            raise EditSequenceParseError("replacement is missing its new-marker")
        pos += 1
        n: list[str] = []
        while pos < len(tokens) and tokens[pos] != tk.REPLACE_END:
            if tokens[pos] in tk.SPECIAL_TOKENS:
                raise EditSequenceParseError(
                    f"unexpected marker {tokens[pos]!r} before {tk.REPLACE_END}"
                )
            n.append(tokens[pos])
            pos += 1
        if pos >= len(tokens):
            raise EditSequenceParseError("replacement is missing its end marker")
        pos += 1
        replacements.append(Replacement(mode, tuple(s), tuple(n)))
    return EditSequence(tuple(replacements))
