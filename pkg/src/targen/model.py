"""Shared domain types and the JSONL dataset schema.

Everything here is immutable after construction (frozen dataclasses) and safe
to share across threads. Line numbering is 1-based throughout. Timestamps are
ISO-8601 UTC so commit-date splits stay totally ordered across projects.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DatasetParseError, ValidationError

SCHEMA_VERSION = 1


class BreakageKind(str, Enum):
    COMPILE_ERROR = "compile_error"
    RUNTIME_FAILURE = "runtime_failure"


class HunkLevel(str, Enum):
    METHOD = "method"
    CLASS = "class"


class GraphKind(str, Enum):
    METHOD_LEVEL = "method"
    CLASS_LEVEL = "class"


class Verdict(str, Enum):
    UNVALIDATED = "unvalidated"
    EXACT_MATCH = "exact_match"
    PLAUSIBLE = "plausible"
    COMPILE_FAIL = "compile_fail"
    TEST_FAIL = "test_fail"
    INVALID = "invalid"


@dataclass(frozen=True)
class TestCase:
    """One test method: fully qualified name plus its source lines."""

    __test__ = False  # keep pytest from collecting this as a test class

    fully_qualified_name: str
    source: tuple[str, ...]
    file_path: str
    annotation_present: bool = True

    def __post_init__(self):
        if not self.source:
            raise ValidationError("test source must be non-empty")
        if "." not in self.fully_qualified_name:
            raise ValidationError(
                f"fully qualified name {self.fully_qualified_name!r} lacks a '.'"
            )
        object.__setattr__(self, "source", tuple(self.source))

    @property
    def class_name(self) -> str:
        head = self.fully_qualified_name.split("(")[0]
        return head.rsplit(".", 1)[0]


@dataclass(frozen=True)
class BreakageSpec:
    """Inclusive 1-based line ranges inside the test method that must change."""

    lines: tuple[tuple[int, int], ...]
    kind: BreakageKind

    def __post_init__(self):
        ranges = tuple((int(a), int(b)) for a, b in self.lines)
        if not ranges:
            raise ValidationError("breakage needs at least one line range")
        prev_end = 0
        for start, end in ranges:
            if start < 1 or end < start:
                raise ValidationError(f"bad breakage range ({start}, {end})")
            if start <= prev_end:
                raise ValidationError("breakage ranges must be sorted and disjoint")
            prev_end = end
        object.__setattr__(self, "lines", ranges)

    def line_set(self) -> set[int]:
        return {n for start, end in self.lines for n in range(start, end + 1)}

    @property
    def max_line(self) -> int:
        return self.lines[-1][1]


@dataclass(frozen=True)
class Hunk:
    """One contiguous SUT change, attributed to a method or to the class body."""

    file: str
    level: HunkLevel
    enclosing: str
    deleted_lines: tuple[str, ...]
    added_lines: tuple[str, ...]
    old_start: int
    new_start: int

    def __post_init__(self):
        object.__setattr__(self, "deleted_lines", tuple(self.deleted_lines))
        object.__setattr__(self, "added_lines", tuple(self.added_lines))
        if not self.deleted_lines and not self.added_lines:
            raise ValidationError("hunk must delete or add at least one line")
        if self.level == HunkLevel.METHOD and "(" not in self.enclosing:
            raise ValidationError(
                f"method-level hunk enclosing {self.enclosing!r} does not name a method"
            )

    @property
    def hunk_id(self) -> str:
        return f"{self.file}:{self.old_start}:{self.new_start}"

    @property
    def enclosing_class(self) -> str:
        if self.level == HunkLevel.CLASS:
            return self.enclosing
        head = self.enclosing.split("(")[0]
        return head.rsplit(".", 1)[0]

    def change_text(self) -> str:
        """Whitespace-collapsed deleted+added text, used for repetition keys."""
        parts = [" ".join(l.split()) for l in self.deleted_lines]
        parts.append("=>")
        parts.extend(" ".join(l.split()) for l in self.added_lines)
        return "\n".join(parts)


@dataclass(frozen=True)
class CallGraph:
    """Reachable-from-root subgraph rooted at the broken test."""

    root: str
    kind: GraphKind
    edges: tuple[tuple[str, str], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "edges", tuple((str(a), str(b)) for a, b in self.edges)
        )

    def adjacency(self) -> dict[str, list[str]]:
        adj: dict[str, list[str]] = {}
        for src, dst in self.edges:
            adj.setdefault(src, []).append(dst)
        return adj

    def depth_of(self, node: str) -> float:
        """Shortest-path edge count from the root; unreachable nodes get inf."""
        if node == self.root:
            return 0
        adj = self.adjacency()
        seen = {self.root}
        frontier = [self.root]
        depth = 0
        while frontier:
            depth += 1
            nxt = []
            for cur in frontier:
                for dst in adj.get(cur, ()):
                    if dst == node:
                        return depth
                    if dst not in seen:
                        seen.add(dst)
                        nxt.append(dst)
            frontier = nxt
        return float("inf")

    def reachable(self) -> set[str]:
        adj = self.adjacency()
        seen = {self.root}
        stack = [self.root]
        while stack:
            cur = stack.pop()
            for dst in adj.get(cur, ()):
                if dst not in seen:
                    seen.add(dst)
                    stack.append(dst)
        return seen


@dataclass(frozen=True)
class CandidateRepair:
    """One generated repair: raw text plus its beam rank and validation state."""

    text: str
    beam_score: float
    rank: int
    verdict: Verdict = Verdict.UNVALIDATED

    def __post_init__(self):
        if self.rank < 1:
            raise ValidationError("candidate rank must be positive")

    def with_verdict(self, verdict: Verdict) -> "CandidateRepair":
        return CandidateRepair(self.text, self.beam_score, self.rank, verdict)


def validate_candidate_set(candidates: Sequence[CandidateRepair]) -> None:
    """Ranks must be 1..k and unique; beam scores non-increasing with rank."""
    ranks = sorted(c.rank for c in candidates)
    if ranks != list(range(1, len(candidates) + 1)):
        raise ValidationError(f"ranks {ranks} are not 1..{len(candidates)}")
    by_rank = sorted(candidates, key=lambda c: c.rank)
    for earlier, later in zip(by_rank, by_rank[1:]):
        if later.beam_score > earlier.beam_score + 1e-12:
            raise ValidationError(
                f"beam score increases from rank {earlier.rank} to {later.rank}"
            )


@dataclass(frozen=True)
class RepairInstance:
    """One broken test, its ground-truth repair, and the SUT change set."""

    id: str
    broken_test: TestCase
    repaired_test: TestCase
    breakage: BreakageSpec
    sut_hunks: tuple[Hunk, ...]
    commit: str
    commit_time: datetime
    project: str
    call_graph_method: CallGraph | None = None
    call_graph_class: CallGraph | None = None

    def __post_init__(self):
        object.__setattr__(self, "sut_hunks", tuple(self.sut_hunks))
        if self.commit_time.tzinfo is None:
            object.__setattr__(
                self, "commit_time", self.commit_time.replace(tzinfo=timezone.utc)
            )
        if self.breakage.max_line > len(self.broken_test.source):
            raise ValidationError(
                f"breakage line {self.breakage.max_line} exceeds test length "
                f"{len(self.broken_test.source)}",
                instance_id=self.id,
            )

    def breakage_lines(self) -> list[str]:
        return [
            self.broken_test.source[n - 1] for n in sorted(self.breakage.line_set())
        ]


# --------------------------------------------------------------------------
# JSONL serialization. One instance per line, keys sorted, schema_version on
# every line. Datasets are rewritten whole; there is no incremental update.
# --------------------------------------------------------------------------


def _test_to_dict(t: TestCase) -> dict:
    return {
        "fully_qualified_name": t.fully_qualified_name,
        "source": list(t.source),
        "file_path": t.file_path,
        "annotation_present": t.annotation_present,
    }


def _test_from_dict(d: dict) -> TestCase:
    return TestCase(
        fully_qualified_name=d["fully_qualified_name"],
        source=tuple(d["source"]),
        file_path=d["file_path"],
        annotation_present=bool(d["annotation_present"]),
    )


def _graph_to_dict(g: CallGraph | None) -> dict | None:
    if g is None:
        return None
    return {"root": g.root, "kind": g.kind.value, "edges": [list(e) for e in g.edges]}


def _graph_from_dict(d: dict | None) -> CallGraph | None:
    if d is None:
        return None
    return CallGraph(
        root=d["root"],
        kind=GraphKind(d["kind"]),
        edges=tuple((a, b) for a, b in d["edges"]),
    )


def instance_to_dict(inst: RepairInstance) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "id": inst.id,
        "project": inst.project,
        "commit": inst.commit,
        "commit_time": inst.commit_time.astimezone(timezone.utc)
        .replace(microsecond=0)
        .isoformat()
        .replace("+00:00", "Z"),
        "broken_test": _test_to_dict(inst.broken_test),
        "repaired_test": _test_to_dict(inst.repaired_test),
        "breakage": {
            "lines": [list(r) for r in inst.breakage.lines],
            "kind": inst.breakage.kind.value,
        },
        "sut_hunks": [
            {
                "file": h.file,
                "level": h.level.value,
                "enclosing": h.enclosing,
                "deleted_lines": list(h.deleted_lines),
                "added_lines": list(h.added_lines),
                "old_start": h.old_start,
                "new_start": h.new_start,
            }
            for h in inst.sut_hunks
        ],
        "call_graph_method": _graph_to_dict(inst.call_graph_method),
        "call_graph_class": _graph_to_dict(inst.call_graph_class),
    }


def instance_from_dict(d: dict) -> RepairInstance:
    version = d.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValidationError(f"unsupported schema_version {version!r}",
                              instance_id=d.get("id"))
    commit_time = datetime.fromisoformat(d["commit_time"].replace("Z", "+00:00"))
    try:
        return RepairInstance(
            id=d["id"],
            broken_test=_test_from_dict(d["broken_test"]),
            repaired_test=_test_from_dict(d["repaired_test"]),
            breakage=BreakageSpec(
                lines=tuple((a, b) for a, b in d["breakage"]["lines"]),
                kind=BreakageKind(d["breakage"]["kind"]),
            ),
            sut_hunks=tuple(
                Hunk(
                    file=h["file"],
                    level=HunkLevel(h["level"]),
                    enclosing=h["enclosing"],
                    deleted_lines=tuple(h["deleted_lines"]),
                    added_lines=tuple(h["added_lines"]),
                    old_start=h["old_start"],
                    new_start=h["new_start"],
                )
                for h in d["sut_hunks"]
            ),
            commit=d["commit"],
            commit_time=commit_time,
            project=d["project"],
            call_graph_method=_graph_from_dict(d.get("call_graph_method")),
            call_graph_class=_graph_from_dict(d.get("call_graph_class")),
        )
    except ValidationError as exc:
        if exc.instance_id is None:
            raise ValidationError(str(exc), instance_id=d.get("id")) from exc
        raise


def load_dataset(path: str | Path) -> list[RepairInstance]:
    """Read a JSONL dataset, validating every instance. Order is preserved.

    Schema problems raise :class:`DatasetParseError` with the line number;
    invariant breaches raise :class:`ValidationError` naming the instance.
    Nothing is silently repaired.
    """
    instances = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                payload = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetParseError(line_no, f"invalid JSON: {exc}") from exc
            try:
                instances.append(instance_from_dict(payload))
            except (KeyError, TypeError) as exc:
                raise DatasetParseError(line_no, f"missing/invalid field: {exc}") from exc
    return instances


def save_dataset(instances: Iterable[RepairInstance], path: str | Path) -> None:
    """Write JSONL with sorted keys; round-trips byte-stably through load."""
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for inst in instances:
            fh.write(json.dumps(instance_to_dict(inst), sort_keys=True))
            fh.write("\n")
