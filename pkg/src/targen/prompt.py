"""Render model inputs for the four IO formats under a token budget.

Canonical text encoding: tokens are joined by single spaces and lines by
newlines. The test context always comes whole; hunks are appended whole, in
priority order, while they fit. Special-token strings literally present in
user code are escaped so the rendered vocabulary stays unambiguous.
"""

from __future__ import annotations

import difflib
from dataclasses import dataclass
from enum import Enum

from . import tokenization as tk
from .errors import ContractError, TruncationError
from .model import BreakageSpec, Hunk, TestCase
from .prioritize import Strategy
from .tokenization import Tokenizer, tokenize

_NEWLINE = "\n"


class IOFormat(str, Enum):
    IO1 = "io1"
    IO2 = "io2"
    IO3 = "io3"
    IO4 = "io4"


class HunkRepr(str, Enum):
    LINE_LEVEL = "line"
    WORD_LEVEL = "word"


class ContextSource(str, Enum):
    COVERED = "covered"
    ALL = "all"


class OutputKind(str, Enum):
    CODE_SEQUENCE = "code"
    EDIT_SEQUENCE = "edit"


_FORMAT_TABLE = {
    IOFormat.IO1: (ContextSource.COVERED, Strategy.HP1, HunkRepr.LINE_LEVEL, OutputKind.CODE_SEQUENCE),
    IOFormat.IO2: (ContextSource.ALL, Strategy.HP2, HunkRepr.LINE_LEVEL, OutputKind.CODE_SEQUENCE),
    IOFormat.IO3: (ContextSource.ALL, Strategy.HP2, HunkRepr.WORD_LEVEL, OutputKind.CODE_SEQUENCE),
    IOFormat.IO4: (ContextSource.ALL, Strategy.HP2, HunkRepr.WORD_LEVEL, OutputKind.EDIT_SEQUENCE),
}


@dataclass(frozen=True)
class IOConfig:
    """One IO format with its fixed combination of knobs (see _FORMAT_TABLE)."""

    format: IOFormat
    max_input_tokens: int = 512
    max_output_tokens: int = 256

    @property
    def context_source(self) -> ContextSource:
        return _FORMAT_TABLE[self.format][0]

    @property
    def strategy(self) -> Strategy:
        return _FORMAT_TABLE[self.format][1]

    @property
    def hunk_repr(self) -> HunkRepr:
        return _FORMAT_TABLE[self.format][2]

    @property
    def output_kind(self) -> OutputKind:
        return _FORMAT_TABLE[self.format][3]


def canonical_line(line: str, tokenizer: Tokenizer = tokenize) -> str:
    """Single-space token form of one source line, specials escaped."""
    return tk.detokenize(tokenizer(tk.escape_specials(line)))


def render_test_context(
    test: TestCase, breakage: BreakageSpec, tokenizer: Tokenizer = tokenize
) -> str:
    """Full test source with each breakage range wrapped in breakage markers."""
    if breakage.max_line > len(test.source):
        raise ContractError("breakage exceeds test source")
    starts = {start for start, _ in breakage.lines}
    ends = {end for _, end in breakage.lines}
    out = [tk.TEST_CONTEXT]
    for line_no, line in enumerate(test.source, start=1):
        if line_no in starts:
            out.append(tk.BREAKAGE_START)
        out.append(canonical_line(line, tokenizer))
        if line_no in ends:
            out.append(tk.BREAKAGE_END)
    return _NEWLINE.join(out)


# --------------------------------------------------------------------------
# Word-level diff of token sequences
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TokenGroup:
    kind: str  # keep | del | add
    tokens: tuple[str, ...]


def word_diff(old_tokens: list[str], new_tokens: list[str]) -> list[TokenGroup]:
    """Minimal token-level edit script with adjacent same-kind ops grouped.

    Concatenating keep+del groups restores the old tokens; keep+add restores
    the new ones.
    """
    matcher = difflib.SequenceMatcher(a=old_tokens, b=new_tokens, autojunk=False)
    groups: list[TokenGroup] = []

    def push(kind: str, tokens: list[str]):
        if not tokens:
            return
        if groups and groups[-1].kind == kind:
            groups[-1] = TokenGroup(kind, groups[-1].tokens + tuple(tokens))
            return
        groups.append(TokenGroup(kind, tuple(tokens)))

    for tag, i1, i2, j1, j2 in matcher.get_opcodes():
        if tag == "equal":
            push("keep", old_tokens[i1:i2])
        elif tag == "delete":
            push("del", old_tokens[i1:i2])
        elif tag == "insert":
            push("add", new_tokens[j1:j2])
        else:  # replace
            push("del", old_tokens[i1:i2])
            push("add", new_tokens[j1:j2])
    return groups


def _hunk_token_stream(lines: tuple[str, ...], tokenizer: Tokenizer) -> list[str]:
    """Tokens of the hunk's lines with explicit newline sentinels between lines."""
    stream: list[str] = []
    for idx, line in enumerate(lines):
        if idx:
            stream.append(_NEWLINE)
        stream.extend(tokenizer(tk.escape_specials(line)))
    return stream


def _emit_stream(pieces: list[str]) -> str:
    """Join tokens with spaces, turning newline sentinels into real breaks."""
    out: list[str] = []
    line: list[str] = []
    for piece in pieces:
        if piece == _NEWLINE:
            out.append(" ".join(line))
            line = []
        else:
            line.append(piece)
    out.append(" ".join(line))
    return _NEWLINE.join(out)


def render_hunk(hunk: Hunk, repr_kind: HunkRepr, tokenizer: Tokenizer = tokenize) -> str:
    """One hunk in line-level or word-level representation.

    Line level lists deleted lines after [<DEL>] and added lines after
    [<ADD>], omitting an absent side. Word level merges both line sets and
    wraps only the changed token runs.
    """
    if repr_kind == HunkRepr.LINE_LEVEL:
        pieces: list[str] = [tk.HUNK_START]
        if hunk.deleted_lines:
            pieces.extend([tk.DEL_START, _NEWLINE])
            pieces.extend(_hunk_token_stream(hunk.deleted_lines, tokenizer))
        if hunk.added_lines:
            if hunk.deleted_lines:
                pieces.append(_NEWLINE)
            pieces.extend([tk.ADD_START, _NEWLINE])
            pieces.extend(_hunk_token_stream(hunk.added_lines, tokenizer))
        pieces.append(tk.HUNK_END)
        return _emit_stream(pieces)

    old_stream = _hunk_token_stream(hunk.deleted_lines, tokenizer)
    new_stream = _hunk_token_stream(hunk.added_lines, tokenizer)
    pieces = [tk.HUNK_START]
    if not old_stream:
        pieces.extend([tk.ADD_START, _NEWLINE])
        pieces.extend(new_stream)
        pieces.append(tk.ADD_END)
    elif not new_stream:
        pieces.extend([tk.DEL_START, _NEWLINE])
        pieces.extend(old_stream)
        pieces.append(tk.DEL_END)
    else:
        pieces.append(_NEWLINE)
        for group in word_diff(old_stream, new_stream):
            if group.kind == "keep":
                pieces.extend(group.tokens)
            else:
                start = tk.DEL_START if group.kind == "del" else tk.ADD_START
                end = tk.DEL_END if group.kind == "del" else tk.ADD_END
                pieces.append(start)
                pieces.extend(t for t in group.tokens if t != _NEWLINE)
                pieces.append(end)
    pieces.append(tk.HUNK_END)
    return _emit_stream(pieces)


@dataclass(frozen=True)
class EncodedInput:
    text: str
    included_hunk_ids: tuple[str, ...]
    token_count: int


def build_input(
    test: TestCase,
    breakage: BreakageSpec,
    ordered_hunks: list[Hunk],
    config: IOConfig,
    tokenizer: Tokenizer = tokenize,
) -> EncodedInput:
    """Assemble test context + repair context greedily under the budget.

    The test context is never truncated and hunks are never split or
    reordered. Raises TruncationError when even the top-priority hunk does
    not fit, which marks the instance as excluded.
    """
    tc = render_test_context(test, breakage, tokenizer)
    header = tc + _NEWLINE + tk.REPAIR_CONTEXT
    used = tk.count_tokens(header, tokenizer)
    pieces = [header]
    included: list[str] = []
    for idx, hunk in enumerate(ordered_hunks):
        rendered = render_hunk(hunk, config.hunk_repr, tokenizer)
        cost = tk.count_tokens(rendered, tokenizer)
        if used + cost > config.max_input_tokens:
            if idx == 0:
                raise TruncationError(used + cost, config.max_input_tokens)
            break
        pieces.append(rendered)
        included.append(hunk.hunk_id)
        used += cost
    if not ordered_hunks and used > config.max_input_tokens:
        raise TruncationError(used, config.max_input_tokens)
    return EncodedInput(
        text=_NEWLINE.join(pieces),
        included_hunk_ids=tuple(included),
        token_count=used,
    )


def expected_code_sequence(
    repaired_lines: list[str], tokenizer: Tokenizer = tokenize
) -> str:
    """IO1-IO3 target: the repaired breakage lines, canonically tokenized."""
    return _NEWLINE.join(canonical_line(l, tokenizer) for l in repaired_lines)
