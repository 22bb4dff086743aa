import json

import pytest

from targen.editseq import encode_edit_sequence, serialize_edit_sequence
from targen.engine import (
    ExecutionVerdict,
    FixtureBackend,
    GenerationRequest,
    ReplayExecutor,
    StubBackend,
    apply_candidate,
    classify_execution_log,
    generate_candidates,
    plausibility,
)
from targen.errors import ContractError, TransportError
from targen.model import BreakageKind, BreakageSpec, CandidateRepair, Verdict
from targen.prompt import IOConfig, IOFormat, expected_code_sequence
from targen.tokenization import tokenize
from conftest import PASS_LOG

IO2 = IOConfig(IOFormat.IO2)
IO4 = IOConfig(IOFormat.IO4)

PASS_LOG_SAMPLE = (
    "[INFO] Running TestClass.testMethod\n"
    "[INFO] Tests run: 1, Failures: 0, Errors: 0, Skipped: 0\n"
    "[INFO] BUILD SUCCESS\n"
)
COMPILE_ERROR_LOG = (
    "[ERROR] COMPILATION ERROR :\n"
    "[ERROR] /path/to/TestClass.java:[25,13] cannot find symbol\n"
)
RUNTIME_FAILURE_LOG = "[ERROR] TestClass.testMethod:15 NullPointerException\n"
RUNTIME_STACK_LOG = "[ERROR] at com.ex.TestClass.testMethod(TestClass.java:15)\n"

TEST_FQN = "com.ex.TestClass.testMethod()"
TEST_FILE = "src/test/java/com/ex/TestClass.java"


class TestGenerateCandidates:
    def test_stub_contract(self):
        stub = StubBackend(lambda inp, k: [(f"cand{i}", -float(i)) for i in range(k)])
        out = generate_candidates(GenerationRequest("input", beam_size=4), stub)
        assert [c.rank for c in out] == [1, 2, 3, 4]
        assert [c.text for c in out] == ["cand0", "cand1", "cand2", "cand3"]

    def test_beam_size_one(self):
        stub = StubBackend(lambda inp, k: [("only", -0.5)])
        out = generate_candidates(GenerationRequest("x", beam_size=1), stub)
        assert len(out) == 1 and out[0].rank == 1

    def test_scores_sorted_descending(self):
        stub = StubBackend(lambda inp, k: [("low", -2.0), ("high", -0.5), ("mid", -1.0)])
        out = generate_candidates(GenerationRequest("x", beam_size=3), stub)
        assert [c.text for c in out] == ["high", "mid", "low"]
        scores = [c.beam_score for c in out]
        assert scores == sorted(scores, reverse=True)

    def test_wrong_count_is_transport_error(self):
        stub = StubBackend(lambda inp, k: [("a", -1.0)])
        with pytest.raises(TransportError):
            generate_candidates(GenerationRequest("x", beam_size=3), stub)

    def test_io4_unparseable_marked_invalid(self):
        stub = StubBackend(
            lambda inp, k: [("[<replaceOld>] a [<replaceNew>] b [<replaceEnd>]", -0.1),
                            ("not an edit sequence [<replaceEnd>]", -0.2)]
        )
        out = generate_candidates(GenerationRequest("x", beam_size=2), stub, IO4)
        assert out[0].verdict == Verdict.UNVALIDATED
        assert out[1].verdict == Verdict.INVALID

    def test_forty_candidate_service_recording_replays(self):
        # fixture recorded once from the generation service in echo mode
        from pathlib import Path

        fixture = Path(__file__).parent / "fixtures" / "beam40_response.jsonl"
        backend = FixtureBackend(fixture)
        request_input = next(iter(backend.responses))
        out = generate_candidates(GenerationRequest(request_input, beam_size=40), backend)
        assert len(out) == 40
        assert [c.rank for c in out] == list(range(1, 41))
        scores = [c.beam_score for c in out]
        assert scores == sorted(scores, reverse=True)

    def test_recorded_fixture_replay(self, tmp_path):
        fixture = tmp_path / "fixture.jsonl"
        rows = [
            {
                "request": {"input": "prompt-a", "beam_size": 3},
                "response": {
                    "candidates": [
                        {"text": f"c{i}", "score": -0.1 * i} for i in range(3)
                    ]
                },
            }
        ]
        fixture.write_text("\n".join(json.dumps(r) for r in rows))
        backend = FixtureBackend(fixture)
        out = generate_candidates(GenerationRequest("prompt-a", beam_size=3), backend)
        assert len(out) == 3
        assert [c.beam_score for c in out] == sorted(
            [c.beam_score for c in out], reverse=True
        )
        with pytest.raises(TransportError):
            backend.generate(GenerationRequest("unknown", beam_size=3))


class TestApplyCandidate:
    def test_bank_sample_ground_truth(self, bank_test, bank_breakage, bank_instance):
        gt = expected_code_sequence(
            ['BankAccount account = new BankAccount("USD");', 'account.deposit(500, "USD");']
        )
        patched = apply_candidate(
            list(bank_test.source), bank_breakage, CandidateRepair(gt, 0.0, 1), IO2
        )
        assert patched == [
            "@Test",
            "public void test() {",
            'BankAccount account = new BankAccount ( " USD " ) ;',
            'account . deposit ( 500 , " USD " ) ;',
            "assertEquals(500, account.getBalance());",
            "}",
        ]

    def test_candidate_equal_to_breakage_unchanged_outside(self, bank_test, bank_breakage):
        original = "\n".join(bank_test.source[2:4])
        patched = apply_candidate(
            list(bank_test.source), bank_breakage, CandidateRepair(original, 0.0, 1), IO2
        )
        assert patched == list(bank_test.source)

    def test_only_breakage_range_touched(self, bank_test, bank_breakage):
        patched = apply_candidate(
            list(bank_test.source), bank_breakage, CandidateRepair("replaced();", 0.0, 1), IO2
        )
        assert patched[:2] == list(bank_test.source[:2])
        assert patched[-2:] == list(bank_test.source[-2:])
        assert patched[2] == "replaced();"

    def test_edit_sequence_candidate_spliced(self):
        source = ["@Test", "void t() {", 'account.deposit ( amount , "EUR" ) ;', "}"]
        breakage = BreakageSpec(lines=((3, 3),), kind=BreakageKind.RUNTIME_FAILURE)
        old = tokenize(source[2])
        new = tokenize('account.deposit ( new Money ( amount ) , "EUR" ) ;')
        candidate = CandidateRepair(
            serialize_edit_sequence(encode_edit_sequence(old, new)), 0.0, 1
        )
        patched = apply_candidate(source, breakage, candidate, IO4)
        assert tokenize(patched[2]) == new
        assert patched[0] == "@Test" and patched[-1] == "}"

    def test_invalid_candidate_rejected(self, bank_test, bank_breakage):
        bad = CandidateRepair("x", 0.0, 1, Verdict.INVALID)
        with pytest.raises(ContractError):
            apply_candidate(list(bank_test.source), bank_breakage, bad, IO2)


class TestClassifyLog:
    def test_pass_log(self):
        verdict = classify_execution_log(PASS_LOG_SAMPLE, TEST_FQN, TEST_FILE)
        assert verdict == ExecutionVerdict(ExecutionVerdict.PASS)

    def test_compile_error_line_25(self):
        verdict = classify_execution_log(
            COMPILE_ERROR_LOG, TEST_FQN, "TestClass.java"
        )
        assert verdict == ExecutionVerdict(ExecutionVerdict.COMPILE_ERROR, 25)

    def test_runtime_failure_line_15(self):
        verdict = classify_execution_log(RUNTIME_FAILURE_LOG, TEST_FQN, TEST_FILE)
        assert verdict == ExecutionVerdict(ExecutionVerdict.RUNTIME_FAILURE, 15)

    def test_stack_trace_variant(self):
        verdict = classify_execution_log(RUNTIME_STACK_LOG, TEST_FQN, TEST_FILE)
        assert verdict == ExecutionVerdict(ExecutionVerdict.RUNTIME_FAILURE, 15)

    def test_pass_takes_precedence(self):
        log = PASS_LOG_SAMPLE + RUNTIME_FAILURE_LOG
        assert classify_execution_log(log, TEST_FQN, TEST_FILE).kind == ExecutionVerdict.PASS

    def test_mutated_logs_are_invalid(self):
        mutations = [
            "Tests run: 2, Failures: 0, Errors: 0, Skipped: 0",
            "Tests run: 1, Failures: 1, Errors: 0, Skipped: 0",
            "[ERROR] COMPILATION ERROR :",  # no located line
            "[ERROR] /path/OtherClass.java:[25,13] wrong file",
            "[ERROR] TestClass.otherMethod:15",
            "BUILD SUCCESS",
            "",
            "[error] testclass.testmethod:15",
            "[ERROR] TestClass.testMethod:",
            "Totally unrelated dependency resolution failure",
        ]
        # plus variants with noise prepended/appended
        mutations += [f"[INFO] noise\n{m}\n[INFO] more" for m in mutations]
        for log in mutations:
            verdict = classify_execution_log(log, TEST_FQN, TEST_FILE)
            assert verdict.kind == ExecutionVerdict.INVALID, log

    def test_compile_pattern_requires_both_parts(self):
        # the located-line pattern alone, without the compilation banner
        log = "[ERROR] /path/to/TestClass.java:[25,13] cannot find symbol"
        assert classify_execution_log(log, TEST_FQN, "TestClass.java").kind == (
            ExecutionVerdict.INVALID
        )


class TestPlausibility:
    def _pass_executor_for(self, patched_text):
        return ReplayExecutor({ReplayExecutor.text_hash(patched_text): PASS_LOG_SAMPLE})

    def test_pass_log_marks_plausible(self, bank_test, bank_breakage):
        candidate = CandidateRepair("fixed();", -0.1, 1)
        patched = "\n".join(
            apply_candidate(list(bank_test.source), bank_breakage, candidate, IO2)
        )
        executor = self._pass_executor_for(patched)
        result = plausibility(
            [candidate], list(bank_test.source), bank_breakage, IO2, executor,
            TEST_FQN, TEST_FILE,
        )
        assert result.any_plausible
        assert result.verdicts == [Verdict.PLAUSIBLE]

    def test_all_invalid_candidates(self, bank_test, bank_breakage):
        candidates = [
            CandidateRepair("a", -0.1, 1, Verdict.INVALID),
            CandidateRepair("b", -0.2, 2, Verdict.INVALID),
        ]
        result = plausibility(
            candidates, list(bank_test.source), bank_breakage, IO2,
            ReplayExecutor({}), TEST_FQN, TEST_FILE,
        )
        assert not result.any_plausible
        assert result.verdicts == [Verdict.INVALID, Verdict.INVALID]

    def test_identical_candidates_share_one_execution(self, bank_test, bank_breakage):
        candidates = [
            CandidateRepair("same();", -0.1, 1),
            CandidateRepair("same();", -0.2, 2),
        ]
        executor = ReplayExecutor({}, default_log="nonsense")
        plausibility(
            candidates, list(bank_test.source), bank_breakage, IO2, executor,
            TEST_FQN, TEST_FILE,
        )
        assert executor.calls == 1

    def test_executor_failure_marks_invalid(self, bank_test, bank_breakage):
        def broken_executor(text):
            raise RuntimeError("sandbox exploded")

        result = plausibility(
            [CandidateRepair("x();", -0.1, 1)], list(bank_test.source), bank_breakage,
            IO2, broken_executor, TEST_FQN, TEST_FILE,
        )
        assert result.verdicts == [Verdict.INVALID]

    def test_compile_and_runtime_verdicts(self, bank_test, bank_breakage):
        cand_a = CandidateRepair("aa();", -0.1, 1)
        cand_b = CandidateRepair("bb();", -0.2, 2)
        patched_a = "\n".join(
            apply_candidate(list(bank_test.source), bank_breakage, cand_a, IO2)
        )
        patched_b = "\n".join(
            apply_candidate(list(bank_test.source), bank_breakage, cand_b, IO2)
        )
        executor = ReplayExecutor(
            {
                ReplayExecutor.text_hash(patched_a): COMPILE_ERROR_LOG,
                ReplayExecutor.text_hash(patched_b): RUNTIME_FAILURE_LOG,
            }
        )
        result = plausibility(
            [cand_a, cand_b], list(bank_test.source), bank_breakage, IO2, executor,
            TEST_FQN, "TestClass.java",
        )
        assert result.verdicts == [Verdict.COMPILE_FAIL, Verdict.TEST_FAIL]
        assert not result.any_plausible
