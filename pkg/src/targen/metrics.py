"""Evaluation metrics: exact match, BLEU-4, CodeBLEU, and report aggregation.

All comparisons happen on canonical token sequences, so candidates differing
only in whitespace count as equal. BLEU-4 uses add-one smoothing on n-gram
orders with zero matches because repaired breakage lines are short. CodeBLEU
is this artifact's own parameterization (equal 0.25 weights); its absolute
values are comparable only within the artifact.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from .errors import ContractError
from .model import CandidateRepair
from .taxonomy import parse_mini
from .tokenization import Tokenizer, tokenize

JAVA_KEYWORDS = frozenset(
    """abstract assert boolean break byte case catch char class const continue
    default do double else enum extends final finally float for goto if
    implements import instanceof int interface long native new package private
    protected public return short static strictfp super switch synchronized
    this throw throws transient try void volatile while true false null var
    record sealed permits yield""".split()
)
KEYWORD_WEIGHT = 4.0


def canonical_tokens(text: str, tokenizer: Tokenizer = tokenize) -> list[str]:
    return tokenizer(text)


def exact_match(
    candidates: list[CandidateRepair], ground_truth: str, tokenizer: Tokenizer = tokenize
) -> bool:
    """True iff any candidate equals the ground truth token-for-token."""
    gt_tokens = canonical_tokens(ground_truth, tokenizer)
    return any(
        canonical_tokens(c.text, tokenizer) == gt_tokens for c in candidates
    )


def select_best(
    candidates: list[CandidateRepair], ground_truth: str, tokenizer: Tokenizer = tokenize
) -> CandidateRepair:
    """The exact-match candidate if one exists (lowest rank), else rank 1."""
    if not candidates:
        raise ContractError("cannot select from an empty candidate list")
    gt_tokens = canonical_tokens(ground_truth, tokenizer)
    matches = [
        c for c in candidates if canonical_tokens(c.text, tokenizer) == gt_tokens
    ]
    if matches:
        return min(matches, key=lambda c: c.rank)
    return min(candidates, key=lambda c: c.rank)


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu4(candidate_tokens: list[str], reference_tokens: list[str]) -> float:
    """BLEU with n-gram orders 1..4.

    Modified precision per order; orders the candidate is too short to have
    are skipped; zero-match orders get add-one smoothing. Geometric mean of
    the remaining precisions times the brevity penalty. An empty candidate
    scores 0.
    """
    if not candidate_tokens:
        return 0.0
    log_sum = 0.0
    orders = 0
    for n in range(1, 5):
        cand_counts = _ngrams(candidate_tokens, n)
        total = sum(cand_counts.values())
        if total == 0:
            continue
        ref_counts = _ngrams(reference_tokens, n)
        matched = sum(min(count, ref_counts[gram]) for gram, count in cand_counts.items())
        if matched == 0:
            precision = 1.0 / (total + 1.0)
        else:
            precision = matched / total
        log_sum += math.log(precision)
        orders += 1
    if orders == 0:
        return 0.0
    geo_mean = math.exp(log_sum / orders)
    c, r = len(candidate_tokens), len(reference_tokens)
    brevity = 1.0 if c >= r else math.exp(1.0 - r / c)
    return geo_mean * brevity


def _weighted_unigram_precision(
    candidate_tokens: list[str], reference_tokens: list[str]
) -> float:
    """Unigram precision with Java keywords weighted heavier."""
    if not candidate_tokens:
        return 0.0
    cand = Counter(candidate_tokens)
    ref = Counter(reference_tokens)
    weight = lambda tok: KEYWORD_WEIGHT if tok in JAVA_KEYWORDS else 1.0
    total = sum(weight(t) * n for t, n in cand.items())
    matched = sum(weight(t) * min(n, ref[t]) for t, n in cand.items())
    if matched == 0:
        precision = 1.0 / (total + 1.0)
    else:
        precision = matched / total
    c, r = len(candidate_tokens), len(reference_tokens)
    brevity = 1.0 if c >= r else math.exp(1.0 - r / c)
    return precision * brevity


def _subtree_multiset(lines: list[str]) -> Counter:
    tree = parse_mini(lines)
    return Counter(node.signature() for node in tree.walk())


def syntax_match_ratio(candidate_lines: list[str], reference_lines: list[str]) -> float:
    """Share of the reference's subtrees found in the candidate.

    Subtree identity keeps node kinds and invocation names but ignores
    identifier and literal spellings, so a pure rename scores 1.0.
    """
    ref = _subtree_multiset(reference_lines)
    cand = _subtree_multiset(candidate_lines)
    total = sum(ref.values())
    if total == 0:
        return 1.0 if sum(cand.values()) == 0 else 0.0
    matched = sum(min(count, cand[sig]) for sig, count in ref.items())
    return matched / total


def _def_use_pairs(lines: list[str]) -> Counter:
    """Positionally-normalized (def, use) variable pairs per assignment."""
    import re as _re

    order: dict[str, int] = {}

    def norm(name: str) -> str:
        if name not in order:
            order[name] = len(order)
        return f"var_{order[name]}"

    pairs: Counter = Counter()
    assign_re = _re.compile(
        r"^\s*(?:final\s+)?(?:[A-Za-z_$][\w$<>\[\],.]*\s+)?([A-Za-z_$][\w$]*)\s*=\s*(.+)$"
    )
    ident_re = _re.compile(r"[A-Za-z_$][\w$]*")
    keywords = JAVA_KEYWORDS
    for line in lines:
        match = assign_re.match(line.strip().rstrip(";"))
        if not match:
            continue
        target, rhs = match.groups()
        target_norm = norm(target)
        for used in ident_re.findall(rhs):
            if used in keywords:
                continue
            pairs[(target_norm, norm(used))] += 1
    return pairs


def dataflow_match_ratio(candidate_lines: list[str], reference_lines: list[str]) -> float:
    ref = _def_use_pairs(reference_lines)
    cand = _def_use_pairs(candidate_lines)
    total = sum(ref.values())
    if total == 0:
        return 1.0 if sum(cand.values()) == 0 else 0.0
    matched = sum(min(count, cand[pair]) for pair, count in ref.items())
    return matched / total


@dataclass(frozen=True)
class CodeBleuBreakdown:
    ngram: float
    weighted_ngram: float
    syntax: float
    dataflow: float

    @property
    def total(self) -> float:
        return 0.25 * (self.ngram + self.weighted_ngram + self.syntax + self.dataflow)


def codebleu(
    candidate: str, reference: str, tokenizer: Tokenizer = tokenize
) -> CodeBleuBreakdown:
    """Equal-weight blend of BLEU-4, keyword-weighted precision, subtree match,
    and def-use match."""
    cand_tokens = canonical_tokens(candidate, tokenizer)
    ref_tokens = canonical_tokens(reference, tokenizer)
    cand_lines = candidate.split("\n")
    ref_lines = reference.split("\n")
    return CodeBleuBreakdown(
        ngram=bleu4(cand_tokens, ref_tokens),
        weighted_ngram=_weighted_unigram_precision(cand_tokens, ref_tokens),
        syntax=syntax_match_ratio(cand_lines, ref_lines),
        dataflow=dataflow_match_ratio(cand_lines, ref_lines),
    )


# --------------------------------------------------------------------------
# Aggregation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class InstanceResult:
    instance_id: str
    exact: bool
    plausible: bool
    best_bleu: float
    best_codebleu: float


@dataclass(frozen=True)
class EvalReport:
    em: float
    pr: float
    bleu: float
    codebleu: float
    n: int
    per_instance: tuple[InstanceResult, ...]

    def __post_init__(self):
        object.__setattr__(self, "per_instance", tuple(self.per_instance))

    def to_dict(self) -> dict:
        return {
            "em": self.em,
            "pr": self.pr,
            "bleu": self.bleu,
            "codebleu": self.codebleu,
            "n": self.n,
            "per_instance": [
                {
                    "id": r.instance_id,
                    "exact": r.exact,
                    "plausible": r.plausible,
                    "bleu": r.best_bleu,
                    "codebleu": r.best_codebleu,
                }
                for r in self.per_instance
            ],
        }


def aggregate(rows: list[InstanceResult]) -> EvalReport:
    """Average per-instance results into percentages over the evaluation set."""
    if not rows:
        raise ContractError("cannot aggregate an empty evaluation set")
    n = len(rows)
    return EvalReport(
        em=100.0 * sum(r.exact for r in rows) / n,
        pr=100.0 * sum(r.plausible for r in rows) / n,
        bleu=100.0 * sum(r.best_bleu for r in rows) / n,
        codebleu=100.0 * sum(r.best_codebleu for r in rows) / n,
        n=n,
        per_instance=tuple(rows),
    )
