"""Hunk prioritization: pick the repair context worth spending input tokens on.

Two strategies, both producing a total deterministic order:

* hp1 sorts by call-graph depth, then context type (method before class),
  then breakage similarity. Only usable for hunks covered by a call graph.
* hp2 sorts by breakage similarity, then repetition, then whole-test
  similarity, favoring textual evidence over structure.

Similarity documents are a hunk's pre-change (deleted) lines; add-only hunks
therefore score 0 against any query.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum

from .errors import ContractError
from .model import CallGraph, GraphKind, Hunk, HunkLevel
from .tokenization import Tokenizer, tokenize, tokenize_lines


class Strategy(str, Enum):
    HP1 = "hp1"
    HP2 = "hp2"


class ContextType(str, Enum):
    METHOD = "method"
    CLASS = "class"
    NONE = "none"


@dataclass(frozen=True)
class HunkPriority:
    """Per-hunk criteria feeding the strategy sort keys."""

    hunk_id: str
    call_graph_depth: float = math.inf
    context_type: ContextType = ContextType.NONE
    brk_sim: float = 0.0
    test_sim: float = 0.0
    repetition: int = 0

    def __post_init__(self):
        if not 0.0 <= self.brk_sim <= 1.0 + 1e-9:
            raise ContractError(f"brk_sim {self.brk_sim} outside [0, 1]")
        if not 0.0 <= self.test_sim <= 1.0 + 1e-9:
            raise ContractError(f"test_sim {self.test_sim} outside [0, 1]")
        if self.repetition < 0:
            raise ContractError("repetition must be non-negative")


def call_graph_depth(hunk: Hunk, graph: CallGraph) -> float:
    """Edge count from the test root to the hunk's node; unreachable -> inf."""
    if graph.kind == GraphKind.METHOD_LEVEL:
        node = hunk.enclosing if hunk.level == HunkLevel.METHOD else None
        if node is None:
            return math.inf
    else:
        node = hunk.enclosing_class
    return graph.depth_of(node)


def tfidf_cosine(
    docs: list[list[str]], query: list[str]
) -> list[float]:
    """Cosine similarity between each document and the query.

    TF is the raw count; IDF is the smoothed ln((1+N)/(1+df)) + 1 with the
    query counted as one more document; vectors are L2-normalized. Empty
    documents or an empty query yield similarity 0 rather than an error.
    """
    corpus = [d for d in docs] + [query]
    n_docs = len(corpus)
    df: Counter[str] = Counter()
    for doc in corpus:
        for term in set(doc):
            df[term] += 1

    def weight_vector(doc: list[str]) -> dict[str, float]:
        tf = Counter(doc)
        vec = {
            t: count * (math.log((1 + n_docs) / (1 + df[t])) + 1.0)
            for t, count in tf.items()
        }
        norm = math.sqrt(sum(w * w for w in vec.values()))
        if norm == 0.0:
            return {}
        return {t: w / norm for t, w in vec.items()}

    query_vec = weight_vector(query)
    sims = []
    for doc in docs:
        doc_vec = weight_vector(doc)
        sims.append(sum(query_vec.get(t, 0.0) * w for t, w in doc_vec.items()))
    return [min(max(s, 0.0), 1.0) for s in sims]


def repetition_counts(hunks: list[Hunk]) -> dict[str, int]:
    """How many hunks share each hunk's whitespace-normalized change text."""
    texts = Counter(h.change_text() for h in hunks)
    return {h.hunk_id: texts[h.change_text()] for h in hunks}


def compute_priorities(
    hunks: list[Hunk],
    breakage_lines: list[str],
    test_lines: list[str],
    graph_method: CallGraph | None = None,
    graph_class: CallGraph | None = None,
    covered_method_ids: set[str] | None = None,
    covered_class_ids: set[str] | None = None,
    tokenizer: Tokenizer = tokenize,
) -> dict[str, HunkPriority]:
    """Compute every criterion for every hunk in one pass."""
    covered_method_ids = covered_method_ids or set()
    covered_class_ids = covered_class_ids or set()
    docs = [list(tokenizer(" ".join(h.deleted_lines))) for h in hunks]
    brk_sims = tfidf_cosine(docs, tokenize_lines(breakage_lines))
    test_sims = tfidf_cosine(docs, tokenize_lines(test_lines))
    reps = repetition_counts(hunks)

    priorities = {}
    for hunk, brk, tst in zip(hunks, brk_sims, test_sims):
        if hunk.hunk_id in covered_method_ids:
            ctx = ContextType.METHOD
            depth = call_graph_depth(hunk, graph_method) if graph_method else math.inf
        elif hunk.hunk_id in covered_class_ids:
            ctx = ContextType.CLASS
            depth = call_graph_depth(hunk, graph_class) if graph_class else math.inf
        else:
            ctx = ContextType.NONE
            depth = math.inf
        priorities[hunk.hunk_id] = HunkPriority(
            hunk_id=hunk.hunk_id,
            call_graph_depth=depth,
            context_type=ctx,
            brk_sim=brk,
            test_sim=tst,
            repetition=reps[hunk.hunk_id],
        )
    return priorities


_CTX_ORDER = {ContextType.METHOD: 0, ContextType.CLASS: 1, ContextType.NONE: 2}


def prioritize(
    hunks: list[Hunk],
    strategy: Strategy,
    priorities: dict[str, HunkPriority],
) -> list[str]:
    """Order hunk ids by the strategy's criteria; ties fall back to (file, old_start).

    hp1 refuses hunks outside the covered sets, since depth and context type
    are undefined for them.
    """
    for hunk in hunks:
        if hunk.hunk_id not in priorities:
            raise ContractError(f"no priority computed for hunk {hunk.hunk_id}")
    if strategy == Strategy.HP1:
        outside = [
            h.hunk_id
            for h in hunks
            if priorities[h.hunk_id].context_type == ContextType.NONE
        ]
        if outside:
            raise ContractError(
                f"hp1 cannot rank hunks outside the covered sets: {outside}"
            )

    def key(hunk: Hunk):
        p = priorities[hunk.hunk_id]
        if strategy == Strategy.HP1:
            crit = (p.call_graph_depth, _CTX_ORDER[p.context_type], -p.brk_sim)
        else:
            crit = (-p.brk_sim, -p.repetition, -p.test_sim)
        return crit + (hunk.file, hunk.old_start)

    return [h.hunk_id for h in sorted(hunks, key=key)]
