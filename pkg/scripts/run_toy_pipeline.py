#!/usr/bin/env python3
"""End-to-end desk demo on a synthetic 20-instance corpus.

Builds the corpus, encodes it, generates candidates from a ground-truth
oracle stub, validates with a replay executor, and prints the evaluation
report (EM/PR should both be 100.0).

Usage: python scripts/run_toy_pipeline.py [--beam 5] [--io io2]
"""

import argparse
import sys
from datetime import datetime, timezone
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from targen.cli import _encode_instance
from targen.engine import (
    GenerationRequest,
    ReplayExecutor,
    StubBackend,
    apply_candidate,
    generate_candidates,
    plausibility,
)
from targen.metrics import (
    InstanceResult,
    aggregate,
    bleu4,
    canonical_tokens,
    codebleu,
    exact_match,
    select_best,
)
from targen.mining import repaired_breakage_lines
from targen.model import (
    BreakageKind,
    BreakageSpec,
    CandidateRepair,
    Hunk,
    HunkLevel,
    RepairInstance,
    TestCase,
)
from targen.prompt import IOConfig, IOFormat, expected_code_sequence

PASS_LOG = "[INFO] Tests run: 1, Failures: 0, Errors: 0, Skipped: 0\n"


def toy_instance(i: int) -> RepairInstance:
    broken = TestCase(
        fully_qualified_name=f"com.toy.WidgetTest.testCase{i}()",
        source=(
            "@Test",
            f"public void testCase{i}() {{",
            f"Widget w = new Widget({i});",
            f"assertEquals({i}, w.getValue());",
            "}",
        ),
        file_path="src/test/java/com/toy/WidgetTest.java",
    )
    repaired = TestCase(
        fully_qualified_name=broken.fully_qualified_name,
        source=broken.source[:2]
        + (f'Widget w = new Widget({i}, "mode{i}");',)
        + broken.source[3:],
        file_path=broken.file_path,
    )
    hunk = Hunk(
        file="src/main/java/com/toy/Widget.java",
        level=HunkLevel.METHOD,
        enclosing="com.toy.Widget.Widget(int)",
        deleted_lines=("public Widget(int v) {",),
        added_lines=("public Widget(int v, String mode) {",),
        old_start=5,
        new_start=5,
    )
    return RepairInstance(
        id=f"toy:{i}",
        broken_test=broken,
        repaired_test=repaired,
        breakage=BreakageSpec(lines=((3, 3),), kind=BreakageKind.COMPILE_ERROR),
        sut_hunks=(hunk,),
        commit=f"c{i:04d}",
        commit_time=datetime(2021, 1, 1 + i, tzinfo=timezone.utc),
        project="toy",
    )


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--beam", type=int, default=5)
    parser.add_argument("--io", default="io2", choices=["io1", "io2", "io3", "io4"])
    args = parser.parse_args()

    config = IOConfig(IOFormat(args.io))
    corpus = [toy_instance(i) for i in range(20)]

    # replay executor passing exactly the ground-truth patch
    logs = {}
    for inst in corpus:
        gt = expected_code_sequence(repaired_breakage_lines(inst))
        patched = "\n".join(
            apply_candidate(
                list(inst.broken_test.source), inst.breakage,
                CandidateRepair(gt, 0.0, 1), IOConfig(IOFormat.IO2),
            )
        )
        logs[ReplayExecutor.text_hash(patched)] = PASS_LOG
    executor = ReplayExecutor(logs)

    rows = []
    for inst in corpus:
        encoded, expected = _encode_instance(inst, config)
        stub = StubBackend(
            lambda _inp, k, g=expected: [(g, -0.01)]
            + [(f"bogus_{j} ( ) ;", -1.0 - j) for j in range(k - 1)]
        )
        candidates = generate_candidates(
            GenerationRequest(encoded.text, beam_size=args.beam), stub, config
        )
        em = exact_match(candidates, expected)
        best = select_best(candidates, expected)
        validation = plausibility(
            candidates, list(inst.broken_test.source), inst.breakage,
            IOConfig(IOFormat.IO2) if args.io == "io4" else config,
            executor, inst.broken_test.fully_qualified_name,
            inst.broken_test.file_path,
        ) if args.io != "io4" else None
        rows.append(
            InstanceResult(
                inst.id, em,
                validation.any_plausible if validation else False,
                bleu4(canonical_tokens(best.text), canonical_tokens(expected)),
                codebleu(best.text, expected).total,
            )
        )
    report = aggregate(rows)
    print(f"instances: {report.n}")
    print(f"EM       : {report.em:.1f}")
    print(f"PR       : {report.pr:.1f}")
    print(f"BLEU     : {report.bleu:.1f}")
    print(f"CodeBLEU : {report.codebleu:.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
