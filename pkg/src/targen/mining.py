"""Mine single-hunk test-repair candidates from a local git history.

Walks every commit reachable from the default branch (diffed against its
first parent), pairs changed test methods across versions by fully qualified
name, and keeps pairs whose method diff is a single hunk. SUT hunks come from
the commit's non-test files. Execution-based validation is an injected
contract; without an executor, candidates carry pending-validation status.
"""

from __future__ import annotations

import subprocess
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from pathlib import Path

from .errors import TargenError, TruncationError
from .hunks import _change_blocks, extract_hunks, match_method_names
from .model import (
    BreakageKind,
    BreakageSpec,
    Hunk,
    RepairInstance,
    TestCase,
)
from .prompt import IOConfig, IOFormat, build_input, word_diff
from .prioritize import Strategy, compute_priorities, prioritize
from .taxonomy import extract_method_index
from .tokenization import tokenize

DEFAULT_TEST_ROOT = "src/test"
DEFAULT_TEST_ANNOTATION = "@Test"


class ExclusionReason(str, Enum):
    DUPLICATE = "duplicate"
    TEST_ONLY = "test_only"
    EMPTY_CONTEXT = "empty_context"
    NO_BREAKAGE_LOCATION = "no_breakage_location"
    LENGTH = "length"
    TRIVIAL = "trivial"


@dataclass(frozen=True)
class RawCandidate:
    """A mined test-method change before filtering."""

    project: str
    index: int
    commit: str
    commit_time: datetime
    test_file: str
    broken_fqn: str
    repaired_fqn: str
    broken_source: tuple[str, ...]
    repaired_source: tuple[str, ...]
    breakage_range: tuple[int, int] | None  # 1-based within the method, None for add-only
    sut_hunks: tuple[Hunk, ...]
    commit_touched_sut: bool
    pending_validation: bool = True

    @property
    def candidate_id(self) -> str:
        return f"{self.project}:{self.index}"

    def dedupe_key(self) -> tuple:
        return (
            self.broken_source,
            self.repaired_source,
            frozenset(h.change_text() for h in self.sut_hunks),
        )

    def to_instance(self) -> RepairInstance:
        if self.breakage_range is None:
            raise TargenError("candidate has no breakage location")
        return RepairInstance(
            id=self.candidate_id,
            broken_test=TestCase(
                fully_qualified_name=self.broken_fqn,
                source=self.broken_source,
                file_path=self.test_file,
            ),
            repaired_test=TestCase(
                fully_qualified_name=self.repaired_fqn,
                source=self.repaired_source,
                file_path=self.test_file,
            ),
            breakage=BreakageSpec(
                lines=(self.breakage_range,), kind=BreakageKind.COMPILE_ERROR
            ),
            sut_hunks=self.sut_hunks,
            commit=self.commit,
            commit_time=self.commit_time,
            project=self.project,
        )


# --------------------------------------------------------------------------
# Git plumbing (read-only)
# --------------------------------------------------------------------------


def _git(repo: Path, *args: str) -> str:
    result = subprocess.run(
        ["git", "-C", str(repo), *args],
        capture_output=True,
        text=True,
    )
    if result.returncode != 0:
        raise TargenError(f"git {' '.join(args)} failed: {result.stderr.strip()}")
    return result.stdout


def _show_file(repo: Path, rev: str, path: str) -> list[str] | None:
    result = subprocess.run(
        ["git", "-C", str(repo), "show", f"{rev}:{path}"],
        capture_output=True,
        text=True,
    )
    if result.returncode != 0:
        return None
    return result.stdout.splitlines()


def _is_test_file(path: str, new_content: list[str] | None, test_root: str,
                  annotation: str) -> bool:
    if test_root in path:
        return True
    if new_content is None:
        return False
    return any(annotation in line for line in new_content)


def mine_repo(
    repo_path: str | Path,
    project: str | None = None,
    test_root: str = DEFAULT_TEST_ROOT,
    test_annotation: str = DEFAULT_TEST_ANNOTATION,
) -> list[RawCandidate]:
    """Extract raw single-hunk test-repair candidates from a repository."""
    repo = Path(repo_path)
    if not (repo / ".git").exists():
        raise TargenError(f"{repo} is not a git repository")
    project = project or repo.name
    annotation_name = test_annotation.lstrip("@")

    commits = _git(repo, "rev-list", "--reverse", "HEAD").split()
    candidates: list[RawCandidate] = []
    index = 0
    for commit in commits:
        parents = _git(repo, "rev-list", "--parents", "-n", "1", commit).split()[1:]
        if not parents:
            continue
        parent = parents[0]
        commit_time = datetime.fromisoformat(
            _git(repo, "show", "-s", "--format=%cI", commit).strip()
        )
        name_status = _git(
            repo, "diff", "--name-status", "--no-renames", parent, commit
        ).splitlines()
        modified = [
            line.split("\t", 1)[1]
            for line in name_status
            if line and line[0] == "M"
        ]
        test_files = []
        sut_files = []
        for path in modified:
            new_content = _show_file(repo, commit, path)
            if _is_test_file(path, new_content, test_root, test_annotation):
                test_files.append(path)
            else:
                sut_files.append(path)

        sut_hunks: list[Hunk] = []
        for path in sut_files:
            old = _show_file(repo, parent, path)
            new = _show_file(repo, commit, path)
            if old is None or new is None:
                continue
            spans = [
                (m.fqn, m.start, m.end) for m in extract_method_index(old)
            ]
            method_hunks, class_hunks = extract_hunks(
                {path: old}, {path: new}, {path: spans}
            )
            sut_hunks.extend(method_hunks)
            sut_hunks.extend(class_hunks)

        for path in test_files:
            old = _show_file(repo, parent, path)
            new = _show_file(repo, commit, path)
            if old is None or new is None:
                continue
            old_methods = {
                m.fqn: m
                for m in extract_method_index(old)
                if annotation_name in m.annotations
            }
            new_methods = {
                m.fqn: m
                for m in extract_method_index(new)
                if annotation_name in m.annotations
            }
            mapping = match_method_names(set(old_methods), set(new_methods))
            for old_fqn, new_fqn in sorted(mapping.items()):
                old_span = old_methods[old_fqn]
                new_span = new_methods[new_fqn]
                old_body = old[old_span.start - 1 : old_span.end]
                new_body = new[new_span.start - 1 : new_span.end]
                if old_body == new_body:
                    continue
                blocks = _change_blocks(old_body, new_body)
                if len(blocks) != 1:
                    continue  # multi-hunk test change
                i1, i2, _, _ = blocks[0]
                breakage = (i1 + 1, i2) if i2 > i1 else None
                candidates.append(
                    RawCandidate(
                        project=project,
                        index=index,
                        commit=commit,
                        commit_time=commit_time,
                        test_file=path,
                        broken_fqn=old_fqn,
                        repaired_fqn=new_fqn,
                        broken_source=tuple(old_body),
                        repaired_source=tuple(new_body),
                        breakage_range=breakage,
                        sut_hunks=tuple(sut_hunks),
                        commit_touched_sut=bool(sut_files),
                    )
                )
                index += 1
    return candidates


# --------------------------------------------------------------------------
# Filters
# --------------------------------------------------------------------------


def dedupe(candidates: list[RawCandidate]) -> tuple[list[RawCandidate], list[RawCandidate]]:
    """Keep the earliest occurrence of each (broken, repaired, hunks) triple."""
    by_key: dict[tuple, RawCandidate] = {}
    for cand in sorted(candidates, key=lambda c: (c.commit_time, c.index)):
        key = cand.dedupe_key()
        if key not in by_key:
            by_key[key] = cand
    kept_ids = {c.candidate_id for c in by_key.values()}
    kept = [c for c in candidates if c.candidate_id in kept_ids]
    dropped = [c for c in candidates if c.candidate_id not in kept_ids]
    return kept, dropped


def detect_test_only_commit(candidate: RawCandidate) -> bool:
    """True when the candidate's commit touched no SUT source at all."""
    return not candidate.commit_touched_sut


def detect_trivial(candidate: RawCandidate) -> bool:
    """True when the repair is exactly one SUT identifier rename applied to
    the breakage lines."""
    if candidate.breakage_range is None:
        return False
    start, end = candidate.breakage_range
    breakage_lines = list(candidate.broken_source[start - 1 : end])
    breakage_tokens = [t for line in breakage_lines for t in tokenize(line)]

    for hunk in candidate.sut_hunks:
        old_tokens = [t for line in hunk.deleted_lines for t in tokenize(line)]
        new_tokens = [t for line in hunk.added_lines for t in tokenize(line)]
        changed = [g for g in word_diff(old_tokens, new_tokens) if g.kind != "keep"]
        if len(changed) != 2:
            continue
        del_groups = [g for g in changed if g.kind == "del"]
        add_groups = [g for g in changed if g.kind == "add"]
        if len(del_groups) != 1 or len(add_groups) != 1:
            continue
        if len(del_groups[0].tokens) != 1 or len(add_groups[0].tokens) != 1:
            continue
        old_name, new_name = del_groups[0].tokens[0], add_groups[0].tokens[0]
        if not (old_name[0].isalpha() or old_name[0] in "_$"):
            continue
        if not (new_name[0].isalpha() or new_name[0] in "_$"):
            continue
        if old_name not in breakage_tokens:
            continue
        renamed = [new_name if t == old_name else t for t in breakage_tokens]
        repaired_region = _repaired_region(candidate)
        if repaired_region is None:
            continue
        repaired_tokens = [t for line in repaired_region for t in tokenize(line)]
        if renamed == repaired_tokens:
            return True
    return False


def _repaired_region(candidate: RawCandidate) -> list[str] | None:
    """The repaired lines replacing the breakage range, via the single diff block."""
    blocks = _change_blocks(list(candidate.broken_source), list(candidate.repaired_source))
    if len(blocks) != 1:
        return None
    _, _, j1, j2 = blocks[0]
    return list(candidate.repaired_source[j1:j2])


def repaired_breakage_lines(instance: RepairInstance) -> list[str]:
    """Ground-truth repaired lines for the breakage region of an instance."""
    blocks = _change_blocks(
        list(instance.broken_test.source), list(instance.repaired_test.source)
    )
    if len(blocks) != 1:
        raise TargenError(
            f"instance {instance.id}: ground truth is not a single-hunk change"
        )
    _, _, j1, j2 = blocks[0]
    return list(instance.repaired_test.source[j1:j2])


@dataclass(frozen=True)
class ExclusionRecord:
    candidate_id: str
    reason: ExclusionReason


@dataclass
class FilterReport:
    kept: list[RawCandidate] = field(default_factory=list)
    excluded: list[ExclusionRecord] = field(default_factory=list)
    trivial_ids: set[str] = field(default_factory=set)

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for record in self.excluded:
            out[record.reason.value] = out.get(record.reason.value, 0) + 1
        out["kept"] = len(self.kept)
        return out


def apply_exclusion_filters(
    candidates: list[RawCandidate],
    io_config: IOConfig | None = None,
) -> FilterReport:
    """Run dedup and the preprocessing exclusions, reporting one reason each.

    Reasons are mutually exclusive and checked in a fixed order: duplicate,
    test-only commit, empty repair context, missing breakage location, token
    length. Trivial repairs are kept but tagged: they stay usable for training
    while the evaluation split drops them.
    """
    io_config = io_config or IOConfig(IOFormat.IO2)
    report = FilterReport()
    kept, duplicates = dedupe(candidates)
    for dup in duplicates:
        report.excluded.append(ExclusionRecord(dup.candidate_id, ExclusionReason.DUPLICATE))
    for cand in kept:
        if detect_test_only_commit(cand):
            report.excluded.append(
                ExclusionRecord(cand.candidate_id, ExclusionReason.TEST_ONLY)
            )
            continue
        if not cand.sut_hunks:
            report.excluded.append(
                ExclusionRecord(cand.candidate_id, ExclusionReason.EMPTY_CONTEXT)
            )
            continue
        if cand.breakage_range is None:
            report.excluded.append(
                ExclusionRecord(cand.candidate_id, ExclusionReason.NO_BREAKAGE_LOCATION)
            )
            continue
        instance = cand.to_instance()
        hunks = list(instance.sut_hunks)
        priorities = compute_priorities(
            hunks,
            instance.breakage_lines(),
            list(instance.broken_test.source),
        )
        order = prioritize(hunks, Strategy.HP2, priorities)
        by_id = {h.hunk_id: h for h in hunks}
        try:
            build_input(
                instance.broken_test,
                instance.breakage,
                [by_id[i] for i in order],
                io_config,
            )
        except TruncationError:
            report.excluded.append(
                ExclusionRecord(cand.candidate_id, ExclusionReason.LENGTH)
            )
            continue
        if detect_trivial(cand):
            report.trivial_ids.add(cand.candidate_id)
        report.kept.append(cand)
    return report


# --------------------------------------------------------------------------
# Splitting
# --------------------------------------------------------------------------


@dataclass
class SplitResult:
    train: list[RepairInstance]
    val: list[RepairInstance]
    test: list[RepairInstance]
    warnings: list[str] = field(default_factory=list)


def split(
    instances: list[RepairInstance],
    ratios: tuple[float, float, float] = (80.0, 5.0, 15.0),
    trivial_ids: set[str] | None = None,
) -> SplitResult:
    """Commit-date split per project: oldest to train, newest to test.

    Boundary ties on commit time go to the earlier split. Projects with fewer
    than 3 instances go entirely to train with a warning. Trivial repairs are
    dropped from val/test but retained in train.
    """
    total = sum(ratios)
    trivial_ids = trivial_ids or set()
    result = SplitResult([], [], [])
    by_project: dict[str, list[RepairInstance]] = {}
    for inst in instances:
        by_project.setdefault(inst.project, []).append(inst)
    for project in sorted(by_project):
        rows = sorted(by_project[project], key=lambda r: (r.commit_time, r.id))
        n = len(rows)
        if n < 3:
            result.train.extend(rows)
            result.warnings.append(
                f"project {project}: only {n} instance(s); all assigned to train"
            )
            continue
        n_train = int(n * ratios[0] / total)
        n_val = int(n * ratios[1] / total)
        cut_train = _extend_past_ties(rows, n_train)
        cut_val = max(_extend_past_ties(rows, cut_train + n_val), cut_train)
        train, val, test = rows[:cut_train], rows[cut_train:cut_val], rows[cut_val:]
        result.train.extend(train)
        result.val.extend(i for i in val if i.id not in trivial_ids)
        result.test.extend(i for i in test if i.id not in trivial_ids)
    return result


def _extend_past_ties(rows: list[RepairInstance], cut: int) -> int:
    if cut <= 0 or cut >= len(rows):
        return min(max(cut, 0), len(rows))
    boundary_time = rows[cut - 1].commit_time
    while cut < len(rows) and rows[cut].commit_time == boundary_time:
        cut += 1
    return cut


# --------------------------------------------------------------------------
# Breakage-vs-error-line analysis
# --------------------------------------------------------------------------


class Overlap(str, Enum):
    NO_INTERSECTION = "no_intersection"
    EXACT_MATCH = "exact_match"
    SOME_INTERSECTION = "some_intersection"


def breakage_error_overlap(
    breakage_lines: set[int], error_lines: set[int]
) -> Overlap:
    if breakage_lines == error_lines:
        return Overlap.EXACT_MATCH
    if breakage_lines & error_lines:
        return Overlap.SOME_INTERSECTION
    return Overlap.NO_INTERSECTION


def overlap_report(rows: list[Overlap]) -> dict[str, dict[str, float]]:
    """Counts and percentages per overlap case over a set of instances."""
    total = len(rows)
    out: dict[str, dict[str, float]] = {}
    for case in Overlap:
        count = sum(1 for r in rows if r == case)
        out[case.value] = {
            "count": count,
            "percent": round(100.0 * count / total, 1) if total else 0.0,
        }
    return out
