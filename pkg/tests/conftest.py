"""Shared fixtures: the bank-account bank sample and a toy corpus."""

from __future__ import annotations

from datetime import datetime, timezone

import pytest

from targen.engine import ReplayExecutor
from targen.model import (
    BreakageKind,
    BreakageSpec,
    CallGraph,
    GraphKind,
    Hunk,
    HunkLevel,
    RepairInstance,
    TestCase,
)
from targen.prompt import expected_code_sequence

PASS_LOG = (
    "[INFO] Running WidgetTest.testCase\n"
    "[INFO] Tests run: 1, Failures: 0, Errors: 0, Skipped: 0\n"
    "[INFO] BUILD SUCCESS\n"
)


@pytest.fixture
def bank_test():
    return TestCase(
        fully_qualified_name="com.bank.BankAccountTest.test()",
        source=(
            "@Test",
            "public void test() {",
            "BankAccount account = new BankAccount();",
            "account.deposit(500);",
            "assertEquals(500, account.getBalance());",
            "}",
        ),
        file_path="src/test/java/com/bank/BankAccountTest.java",
    )


@pytest.fixture
def bank_breakage():
    return BreakageSpec(lines=((3, 4),), kind=BreakageKind.COMPILE_ERROR)


@pytest.fixture
def bank_deposit_hunk():
    """Method-level hunk: deposit() gains a currency argument."""
    return Hunk(
        file="src/main/java/com/bank/BankAccount.java",
        level=HunkLevel.METHOD,
        enclosing="com.bank.BankAccount.deposit(int)",
        deleted_lines=(
            "public int deposit(int amount) {",
            "balance += amount;",
        ),
        added_lines=(
            "public int deposit(int amount, String depositCurrency) {",
            "balance += amount * Exchange.getRate(depositCurrency, currency);",
        ),
        old_start=4,
        new_start=6,
    )


@pytest.fixture
def bank_currency_hunk():
    """Class-level hunk: new currency field plus constructor."""
    return Hunk(
        file="src/main/java/com/bank/BankAccount.java",
        level=HunkLevel.CLASS,
        enclosing="com.bank.BankAccount",
        deleted_lines=(),
        added_lines=(
            "private final String currency;",
            "public BankAccount(String currency) { this.currency = currency; }",
        ),
        old_start=3,
        new_start=3,
    )


@pytest.fixture
def bank_graphs():
    gm = CallGraph(
        root="com.bank.BankAccountTest.test()",
        kind=GraphKind.METHOD_LEVEL,
        edges=(
            ("com.bank.BankAccountTest.test()", "com.bank.BankAccount.deposit(int)"),
            ("com.bank.BankAccountTest.test()", "com.bank.BankAccount.BankAccount()"),
            ("com.bank.BankAccountTest.test()", "com.bank.BankAccount.getBalance()"),
        ),
    )
    gc = CallGraph(
        root="com.bank.BankAccountTest.test()",
        kind=GraphKind.CLASS_LEVEL,
        edges=(("com.bank.BankAccountTest.test()", "com.bank.BankAccount"),),
    )
    return gm, gc


@pytest.fixture
def bank_instance(bank_test, bank_breakage, bank_currency_hunk, bank_deposit_hunk, bank_graphs):
    gm, gc = bank_graphs
    repaired = TestCase(
        fully_qualified_name="com.bank.BankAccountTest.test()",
        source=(
            "@Test",
            "public void test() {",
            'BankAccount account = new BankAccount("USD");',
            'account.deposit(500, "USD");',
            "assertEquals(500, account.getBalance());",
            "}",
        ),
        file_path=bank_test.file_path,
    )
    return RepairInstance(
        id="bank:0",
        broken_test=bank_test,
        repaired_test=repaired,
        breakage=bank_breakage,
        sut_hunks=(bank_deposit_hunk, bank_currency_hunk),
        commit="deadbeef",
        commit_time=datetime(2021, 6, 1, 12, 0, 0, tzinfo=timezone.utc),
        project="bank",
        call_graph_method=gm,
        call_graph_class=gc,
    )


def make_toy_instance(i: int, project: str = "toy") -> RepairInstance:
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
        source=(
            "@Test",
            f"public void testCase{i}() {{",
            f'Widget w = new Widget({i}, "mode{i}");',
            f"assertEquals({i}, w.getValue());",
            "}",
        ),
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
        id=f"{project}:{i}",
        broken_test=broken,
        repaired_test=repaired,
        breakage=BreakageSpec(lines=((3, 3),), kind=BreakageKind.COMPILE_ERROR),
        sut_hunks=(hunk,),
        commit=f"c{i:04d}",
        commit_time=datetime(2021, 1, 1, tzinfo=timezone.utc).replace(day=1 + i),
        project=project,
    )


@pytest.fixture
def toy_corpus():
    return [make_toy_instance(i) for i in range(20)]


def ground_truth_for(instance: RepairInstance) -> str:
    """Canonical code-sequence ground truth for a toy/bank instance."""
    from targen.mining import repaired_breakage_lines

    return expected_code_sequence(repaired_breakage_lines(instance))


def replay_executor_for(instances) -> ReplayExecutor:
    """Executor that passes exactly the ground-truth patch of each instance."""
    from targen.engine import apply_candidate
    from targen.model import CandidateRepair
    from targen.prompt import IOConfig, IOFormat

    logs = {}
    config = IOConfig(IOFormat.IO2)
    for instance in instances:
        gt = ground_truth_for(instance)
        patched = "\n".join(
            apply_candidate(
                list(instance.broken_test.source),
                instance.breakage,
                CandidateRepair(gt, 0.0, 1),
                config,
            )
        )
        logs[ReplayExecutor.text_hash(patched)] = PASS_LOG
    return ReplayExecutor(logs)
