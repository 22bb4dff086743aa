"""Diff two SUT versions into method- and class-level hunks.

Method spans come from a lightweight index (path -> [(fqn, start, end)]), with
spans referring to the old version of each file. A change block that crosses a
method boundary is split into one hunk per region, so a hunk never spans two
methods. Whole-file additions and removals are deliberately not turned into
hunks.
"""

from __future__ import annotations

import difflib
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ContractError, StructuralError
from .model import CallGraph, GraphKind, Hunk, HunkLevel

MethodIndex = dict[str, list[tuple[str, int, int]]]


def load_method_index(path: str | Path) -> MethodIndex:
    """Read an externally-supplied method index:
    [{"file":..., "fqn":..., "start":..., "end":...}, ...]."""
    index: MethodIndex = {}
    for row in json.loads(Path(path).read_text(encoding="utf-8")):
        index.setdefault(row["file"], []).append(
            (row["fqn"], int(row["start"]), int(row["end"]))
        )
    return index


def load_call_graph(path: str | Path) -> CallGraph:
    """Read a call graph: {"root":..., "kind":..., "edges":[["a","b"],...]}."""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return CallGraph(
        root=payload["root"],
        kind=GraphKind(payload["kind"]),
        edges=tuple((a, b) for a, b in payload["edges"]),
    )


@dataclass(frozen=True)
class HunkSets:
    """The repair-context sets: all hunks plus the call-graph-covered subsets."""

    method_hunks: tuple[Hunk, ...]
    class_hunks: tuple[Hunk, ...]
    covered_method: tuple[Hunk, ...]
    covered_class: tuple[Hunk, ...]

    @property
    def all(self) -> tuple[Hunk, ...]:
        return self.method_hunks + self.class_hunks

    @property
    def covered(self) -> tuple[Hunk, ...]:
        return self.covered_method + self.covered_class


# --------------------------------------------------------------------------
# Jaro-Winkler, used to match renamed methods within the same class. The
# prefix boost (scale 0.1, max prefix 4) favors names that share a beginning,
# which suits signatures whose argument list changed at the end.
# --------------------------------------------------------------------------


def jaro_similarity(s1: str, s2: str) -> float:
    if s1 == s2:
        return 1.0
    if not s1 or not s2:
        return 0.0
    match_window = max(len(s1), len(s2)) // 2 - 1
    match_window = max(match_window, 0)
    s1_matches = [False] * len(s1)
    s2_matches = [False] * len(s2)
    matches = 0
    for i, ch in enumerate(s1):
        lo = max(0, i - match_window)
        hi = min(len(s2), i + match_window + 1)
        for j in range(lo, hi):
            if not s2_matches[j] and s2[j] == ch:
                s1_matches[i] = s2_matches[j] = True
                matches += 1
                break
    if matches == 0:
        return 0.0
    transpositions = 0
    k = 0
    for i in range(len(s1)):
        if s1_matches[i]:
            while not s2_matches[k]:
                k += 1
            if s1[i] != s2[k]:
                transpositions += 1
            k += 1
    transpositions //= 2
    return (
        matches / len(s1) + matches / len(s2) + (matches - transpositions) / matches
    ) / 3.0


def jaro_winkler(s1: str, s2: str, prefix_scale: float = 0.1, max_prefix: int = 4) -> float:
    jaro = jaro_similarity(s1, s2)
    prefix = 0
    for a, b in zip(s1, s2):
        if a != b or prefix == max_prefix:
            break
        prefix += 1
    return jaro + prefix * prefix_scale * (1.0 - jaro)


def _class_of(fqn: str) -> str:
    return fqn.split("(")[0].rsplit(".", 1)[0]


def match_method_names(old_fqns: set[str], new_fqns: set[str]) -> dict[str, str]:
    """Map each old FQN to its new counterpart.

    Exact-equal names map to themselves. The rest map to the most similar new
    FQN within the same class (Jaro-Winkler), ties broken lexicographically.
    Old names with no candidate in their class stay unmapped.
    """
    mapping: dict[str, str] = {}
    by_class: dict[str, list[str]] = {}
    for fqn in new_fqns:
        by_class.setdefault(_class_of(fqn), []).append(fqn)
    for old in sorted(old_fqns):
        if old in new_fqns:
            mapping[old] = old
            continue
        candidates = by_class.get(_class_of(old), [])
        if not candidates:
            continue
        best = max(
            sorted(candidates),
            key=lambda cand: (jaro_winkler(old, cand), _NegStr(cand)),
        )
        mapping[old] = best
    return mapping


class _NegStr:
    """Orders strings descending inside a max() key so ties pick the smaller."""

    def __init__(self, s: str):
        self.s = s

    def __lt__(self, other: "_NegStr") -> bool:
        return self.s > other.s

    def __eq__(self, other: object) -> bool:
        return isinstance(other, _NegStr) and self.s == other.s


# --------------------------------------------------------------------------
# Hunk extraction
# --------------------------------------------------------------------------


@dataclass
class _Region:
    level: HunkLevel
    enclosing: str


def _validate_spans(path: str, spans: list[tuple[str, int, int]], n_lines: int) -> None:
    ordered = sorted(spans, key=lambda s: s[1])
    prev_end = 0
    for fqn, start, end in ordered:
        if start < 1 or end > n_lines or end < start:
            raise StructuralError(
                f"{path}: span ({start}, {end}) for {fqn} out of file bounds"
            )
        if start <= prev_end:
            raise StructuralError(f"{path}: overlapping method spans at {fqn}")
        prev_end = end


def _region_for_line(
    spans: list[tuple[str, int, int]], line: int, class_name: str
) -> _Region:
    for fqn, start, end in spans:
        if start <= line <= end:
            return _Region(HunkLevel.METHOD, fqn)
    return _Region(HunkLevel.CLASS, class_name)


def _region_for_insertion(
    spans: list[tuple[str, int, int]], before_line: int, class_name: str
) -> _Region:
    # An insertion lands inside a method only when it falls strictly between
    # that method's lines; insertions at a span's start stay at class level.
    for fqn, start, end in spans:
        if start < before_line <= end:
            return _Region(HunkLevel.METHOD, fqn)
    return _Region(HunkLevel.CLASS, class_name)


def _class_name_for_file(path: str, spans: list[tuple[str, int, int]]) -> str:
    if spans:
        return _class_of(spans[0][0])
    stem = path.rsplit("/", 1)[-1]
    return stem.rsplit(".", 1)[0]


def _change_blocks(old: list[str], new: list[str]):
    """Maximal runs of non-equal opcodes: (old_start0, old_end0, new_start0, new_end0)."""
    matcher = difflib.SequenceMatcher(a=old, b=new, autojunk=False)
    blocks = []
    for tag, i1, i2, j1, j2 in matcher.get_opcodes():
        if tag == "equal":
            continue
        if blocks and blocks[-1][1] == i1 and blocks[-1][3] == j1:
            prev = blocks.pop()
            blocks.append((prev[0], i2, prev[2], j2))
        else:
            blocks.append((i1, i2, j1, j2))
    return blocks


def extract_hunks(
    old_files: dict[str, list[str]],
    new_files: dict[str, list[str]],
    method_index: MethodIndex | None = None,
) -> tuple[list[Hunk], list[Hunk]]:
    """Diff file maps into (method-level hunks M, class-level hunks C).

    Every changed line belongs to exactly one hunk. Files present on only one
    side are skipped (whole-file add/remove). Raises StructuralError for
    overlapping or out-of-bounds method spans.
    """
    method_index = method_index or {}
    method_hunks: list[Hunk] = []
    class_hunks: list[Hunk] = []
    for path in sorted(set(old_files) & set(new_files)):
        old, new = old_files[path], new_files[path]
        spans = sorted(method_index.get(path, []), key=lambda s: s[1])
        _validate_spans(path, spans, len(old))
        class_name = _class_name_for_file(path, spans)
        for i1, i2, j1, j2 in _change_blocks(old, new):
            deleted = old[i1:i2]
            added = new[j1:j2]
            if not deleted:
                region = _region_for_insertion(spans, i1 + 1, class_name)
                segments = [(region, [], added, i1 + 1, j1 + 1)]
            else:
                segments = _split_by_region(
                    spans, class_name, deleted, added, i1, j1
                )
            for region, seg_del, seg_add, old_start, new_start in segments:
                hunk = Hunk(
                    file=path,
                    level=region.level,
                    enclosing=region.enclosing,
                    deleted_lines=tuple(seg_del),
                    added_lines=tuple(seg_add),
                    old_start=old_start,
                    new_start=new_start,
                )
                (method_hunks if region.level == HunkLevel.METHOD else class_hunks).append(hunk)
    return method_hunks, class_hunks


def _split_by_region(spans, class_name, deleted, added, i1, j1):
    """Split a change block at method boundaries.

    Deleted lines are grouped by the region they live in (old coordinates).
    Added lines follow the deleted line at the same offset; surplus added
    lines stick with the last region.
    """
    regions: list[_Region] = [
        _region_for_line(spans, i1 + k + 1, class_name) for k in range(len(deleted))
    ]
    groups: list[tuple[_Region, list[int]]] = []
    for idx, region in enumerate(regions):
        if groups and groups[-1][0].level == region.level and groups[-1][0].enclosing == region.enclosing:
            groups[-1][1].append(idx)
        else:
            groups.append((region, [idx]))
    segments = []
    for g_idx, (region, idxs) in enumerate(groups):
        seg_del = [deleted[k] for k in idxs]
        if g_idx == len(groups) - 1:
            add_idxs = range(idxs[0], len(added))
        else:
            add_idxs = [k for k in idxs if k < len(added)]
        seg_add = [added[k] for k in add_idxs]
        segments.append(
            (region, seg_del, seg_add, i1 + idxs[0] + 1, j1 + min(idxs[0], len(added)) + 1)
        )
    return segments


def build_context_sets(
    method_hunks: list[Hunk],
    class_hunks: list[Hunk],
    graph_method: CallGraph | None = None,
    graph_class: CallGraph | None = None,
) -> HunkSets:
    """Assemble R, Rm, Rc from the hunk sets and the test's call graphs.

    Rm holds method hunks whose enclosing method the test reaches in the
    method-level graph; Rc holds remaining hunks whose class the test reaches
    in the class-level graph. Without graphs both covered sets are empty while
    R is unchanged.
    """
    for h in method_hunks:
        if h.level != HunkLevel.METHOD:
            raise ContractError(f"hunk {h.hunk_id} in M is not method-level")
    for h in class_hunks:
        if h.level != HunkLevel.CLASS:
            raise ContractError(f"hunk {h.hunk_id} in C is not class-level")

    covered_m: list[Hunk] = []
    if graph_method is not None:
        reach_m = graph_method.reachable()
        covered_m = [h for h in method_hunks if h.enclosing in reach_m]
    covered_c: list[Hunk] = []
    if graph_class is not None:
        reach_c = graph_class.reachable()
        in_rm = {h.hunk_id for h in covered_m}
        covered_c = [
            h
            for h in list(method_hunks) + list(class_hunks)
            if h.hunk_id not in in_rm and h.enclosing_class in reach_c
        ]
    return HunkSets(
        method_hunks=tuple(method_hunks),
        class_hunks=tuple(class_hunks),
        covered_method=tuple(covered_m),
        covered_class=tuple(covered_c),
    )
