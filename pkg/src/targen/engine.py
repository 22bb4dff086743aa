"""Candidate generation, patch application, and plausibility checking.

The generation backend and the test executor are injected contracts: the
backend speaks a tiny HTTP protocol (POST /generate), and the executor maps a
patched test file to an execution log. Desk-scale tests use stub backends and
a replay executor keyed by patched-file content.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol

from .editseq import apply_edit_sequence, parse_edit_sequence
from .errors import AmbiguityError, ContractError, EditSequenceParseError, TransportError
from .model import BreakageSpec, CandidateRepair, Verdict, validate_candidate_set
from .prompt import IOConfig, OutputKind
from .tokenization import Tokenizer, detokenize, tokenize


@dataclass(frozen=True)
class GenerationRequest:
    input: str
    beam_size: int
    max_output_tokens: int = 256

    def __post_init__(self):
        if self.beam_size < 1:
            raise ContractError("beam_size must be >= 1")


class Backend(Protocol):
    def generate(self, request: GenerationRequest) -> list[tuple[str, float]]:
        """Return (text, score) pairs; the engine enforces count and ordering."""
        ...


class StubBackend:
    """Fixed-output backend for tests: fn(input, beam_size) -> [(text, score)]."""

    def __init__(self, fn: Callable[[str, int], list[tuple[str, float]]]):
        self.fn = fn
        self.calls = 0

    def generate(self, request: GenerationRequest) -> list[tuple[str, float]]:
        self.calls += 1
        return self.fn(request.input, request.beam_size)


class HttpBackend:
    """Client for the generation service; idempotent retries with backoff."""

    def __init__(self, base_url: str, max_retries: int = 3, timeout: float = 120.0,
                 backoff: float = 0.5):
        self.base_url = base_url.rstrip("/")
        self.max_retries = max_retries
        self.timeout = timeout
        self.backoff = backoff

    def health(self) -> bool:
        import requests

        try:
            return requests.get(f"{self.base_url}/health", timeout=5).status_code == 200
        except requests.RequestException:
            return False

    def generate(self, request: GenerationRequest) -> list[tuple[str, float]]:
        import requests

        payload = {
            "input": request.input,
            "beam_size": request.beam_size,
            "max_new_tokens": request.max_output_tokens,
        }
        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            try:
                resp = requests.post(
                    f"{self.base_url}/generate", json=payload, timeout=self.timeout
                )
                resp.raise_for_status()
                body = resp.json()
                return [(c["text"], float(c["score"])) for c in body["candidates"]]
            except (requests.RequestException, KeyError, ValueError) as exc:
                last_error = exc
                if attempt < self.max_retries:
                    time.sleep(self.backoff * (2**attempt))
        raise TransportError(str(last_error), retries=self.max_retries)


class FixtureBackend:
    """Replays recorded /generate responses keyed by the exact input string."""

    def __init__(self, path: str | Path):
        self.responses: dict[str, list[tuple[str, float]]] = {}
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                row = json.loads(line)
                self.responses[row["request"]["input"]] = [
                    (c["text"], float(c["score"]))
                    for c in row["response"]["candidates"]
                ]

    def generate(self, request: GenerationRequest) -> list[tuple[str, float]]:
        if request.input not in self.responses:
            raise TransportError("no recorded response for this input")
        return self.responses[request.input]


def generate_candidates(
    request: GenerationRequest, backend: Backend, io_config: IOConfig | None = None
) -> list[CandidateRepair]:
    """Run one generation call and normalize the response into ranked candidates.

    Scores are sorted non-increasing and ranks assigned 1..k. For edit-sequence
    output, candidates that do not parse get verdict Invalid but stay in the
    list for accounting.
    """
    raw = backend.generate(request)
    if len(raw) != request.beam_size:
        raise TransportError(
            f"backend returned {len(raw)} candidates, expected {request.beam_size}"
        )
    ordered = sorted(raw, key=lambda pair: -pair[1])
    candidates = []
    for rank, (text, score) in enumerate(ordered, start=1):
        verdict = Verdict.UNVALIDATED
        if io_config is not None and io_config.output_kind == OutputKind.EDIT_SEQUENCE:
            try:
                parse_edit_sequence(text)
            except EditSequenceParseError:
                verdict = Verdict.INVALID
        candidates.append(CandidateRepair(text, score, rank, verdict))
    validate_candidate_set(candidates)
    return candidates


def apply_candidate(
    test_source: list[str],
    breakage: BreakageSpec,
    candidate: CandidateRepair,
    io_config: IOConfig,
    tokenizer: Tokenizer = tokenize,
) -> list[str]:
    """Patch the test source: breakage lines replaced, everything else untouched.

    For code-sequence output the candidate's lines replace the breakage ranges
    directly; for edit-sequence output the sequence is applied to the breakage
    tokens and the result spliced back. AmbiguityError propagates.
    """
    if candidate.verdict == Verdict.INVALID:
        raise ContractError("refusing to apply an invalid candidate")
    if io_config.output_kind == OutputKind.EDIT_SEQUENCE:
        breakage_tokens = []
        for start, end in breakage.lines:
            for line in test_source[start - 1 : end]:
                breakage_tokens.extend(tokenizer(line))
        seq = parse_edit_sequence(candidate.text)
        repaired_tokens = apply_edit_sequence(breakage_tokens, seq)
        replacement_lines = [detokenize(repaired_tokens)]
    else:
        replacement_lines = candidate.text.split("\n")

    patched: list[str] = []
    breakage_line_set = {
        n for start, end in breakage.lines for n in range(start, end + 1)
    }
    first_line = breakage.lines[0][0]
    for line_no, line in enumerate(test_source, start=1):
        if line_no == first_line:
            patched.extend(replacement_lines)
        if line_no in breakage_line_set:
            continue
        patched.append(line)
    return patched


# --------------------------------------------------------------------------
# Execution-log classification (Maven-style logs)
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ExecutionVerdict:
    kind: str  # pass | compile_error | runtime_failure | invalid
    line: int | None = None

    PASS = "pass"
    COMPILE_ERROR = "compile_error"
    RUNTIME_FAILURE = "runtime_failure"
    INVALID = "invalid"


_PASS_PATTERN = "Tests run: 1, Failures: 0, Errors: 0, Skipped: 0"


def classify_execution_log(
    log_text: str, test_fqn: str, test_file: str
) -> ExecutionVerdict:
    """Classify a test-run log; the first matching pattern wins.

    Precedence: successful run, then compilation error located in the test
    file, then a runtime failure in the test method. Anything else is an
    invalid execution.
    """
    if _PASS_PATTERN in log_text:
        return ExecutionVerdict(ExecutionVerdict.PASS)

    test_rel_path = test_file.lstrip("/")
    if "COMPILATION ERROR" in log_text or "Compilation failure" in log_text:
        compile_re = re.compile(
            r"\[ERROR\] /.+/" + re.escape(test_rel_path) + r":\[(\d+),\d+\]"
        )
        match = compile_re.search(log_text)
        if match:
            return ExecutionVerdict(ExecutionVerdict.COMPILE_ERROR, int(match.group(1)))

    head = test_fqn.split("(")[0]
    parts = head.rsplit(".", 2)
    if len(parts) >= 2:
        test_class, test_method = parts[-2], parts[-1]
        runtime_re = re.compile(
            r"\[ERROR\] " + re.escape(f"{test_class}.{test_method}") + r":(\d+)"
        )
        match = runtime_re.search(log_text)
        if match:
            return ExecutionVerdict(
                ExecutionVerdict.RUNTIME_FAILURE, int(match.group(1))
            )
        stack_re = re.compile(
            r"at .+" + re.escape(f"{test_class}.{test_method}")
            + r"\(" + re.escape(test_class) + r"\.java:(\d+)\)"
        )
        match = stack_re.search(log_text)
        if match:
            return ExecutionVerdict(
                ExecutionVerdict.RUNTIME_FAILURE, int(match.group(1))
            )
    return ExecutionVerdict(ExecutionVerdict.INVALID)


# --------------------------------------------------------------------------
# Plausibility
# --------------------------------------------------------------------------

Executor = Callable[[str], str]  # patched file text -> execution log text


class ReplayExecutor:
    """Canned executor: maps sha256 of the patched file text to a log."""

    def __init__(self, logs_by_hash: dict[str, str], default_log: str = ""):
        self.logs_by_hash = dict(logs_by_hash)
        self.default_log = default_log
        self.calls = 0

    @staticmethod
    def text_hash(text: str) -> str:
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def __call__(self, patched_text: str) -> str:
        self.calls += 1
        return self.logs_by_hash.get(self.text_hash(patched_text), self.default_log)


@dataclass
class PlausibilityResult:
    verdicts: list[Verdict]
    any_plausible: bool


_VERDICT_BY_KIND = {
    ExecutionVerdict.PASS: Verdict.PLAUSIBLE,
    ExecutionVerdict.COMPILE_ERROR: Verdict.COMPILE_FAIL,
    ExecutionVerdict.RUNTIME_FAILURE: Verdict.TEST_FAIL,
    ExecutionVerdict.INVALID: Verdict.INVALID,
}

# guards caches shared across concurrent plausibility() calls
_CACHE_LOCK = threading.Lock()


def plausibility(
    candidates: list[CandidateRepair],
    test_source: list[str],
    breakage: BreakageSpec,
    io_config: IOConfig,
    executor: Executor,
    test_fqn: str,
    test_file: str,
    tokenizer: Tokenizer = tokenize,
    cache: dict[str, ExecutionVerdict] | None = None,
) -> PlausibilityResult:
    """Execute each candidate's patch and judge it from the log.

    The executor runs at most once per distinct patched text; results are
    cached (thread-safe) so textually identical candidates share one run.
    Candidates that fail to patch, or whose executor call fails, are Invalid.
    """
    cache = cache if cache is not None else {}
    lock = _CACHE_LOCK
    verdicts: list[Verdict] = []
    for cand in sorted(candidates, key=lambda c: c.rank):
        if cand.verdict == Verdict.INVALID:
            verdicts.append(Verdict.INVALID)
            continue
        try:
            patched = "\n".join(
                apply_candidate(test_source, breakage, cand, io_config, tokenizer)
            )
        except (AmbiguityError, EditSequenceParseError):
            verdicts.append(Verdict.INVALID)
            continue
        with lock:
            cached = cache.get(patched)
        if cached is None:
            try:
                log = executor(patched)
            except Exception:
                verdicts.append(Verdict.INVALID)
                continue
            cached = classify_execution_log(log, test_fqn, test_file)
            with lock:
                cache[patched] = cached
        verdicts.append(_VERDICT_BY_KIND[cached.kind])
    return PlausibilityResult(
        verdicts=verdicts, any_plausible=any(v == Verdict.PLAUSIBLE for v in verdicts)
    )
