from datetime import datetime, timedelta, timezone

import pytest

from targen.mining import (
    ExclusionReason,
    Overlap,
    apply_exclusion_filters,
    breakage_error_overlap,
    dedupe,
    detect_test_only_commit,
    detect_trivial,
    mine_repo,
    repaired_breakage_lines,
    split,
)
from targen.model import Hunk, HunkLevel, RepairInstance
from conftest import make_toy_instance
from repo_fixture import SUT_PATH, TEST_PATH, _commit_all, _git, _write, build_fixture_repo


@pytest.fixture(scope="module")
def fixture_repo(tmp_path_factory):
    return build_fixture_repo(tmp_path_factory.mktemp("repos"))


@pytest.fixture(scope="module")
def mined(fixture_repo):
    return mine_repo(fixture_repo, project="fixture")


class TestMineRepo:
    def test_five_candidates_mined(self, mined):
        # A, B, C(test-only), M(duplicate of B), D(trivial)
        assert len(mined) == 5

    def test_candidates_carry_single_hunk_breakage(self, mined):
        for cand in mined:
            if cand.breakage_range is not None:
                start, end = cand.breakage_range
                assert 1 <= start <= end <= len(cand.broken_source)

    def test_sut_hunks_attached_from_non_test_files(self, mined):
        with_sut = [c for c in mined if c.sut_hunks]
        assert with_sut
        for cand in with_sut:
            for hunk in cand.sut_hunks:
                assert "src/test" not in hunk.file

    def test_not_a_repo_rejected(self, tmp_path):
        from targen.errors import TargenError

        with pytest.raises(TargenError):
            mine_repo(tmp_path)

    def test_multi_hunk_test_change_skipped(self, tmp_path):
        repo = tmp_path / "multihunk"
        repo.mkdir()
        _git(repo, "init", "-q", "-b", "main")
        base_test = (
            "public class T {\n"
            "    @Test\n"
            "    public void t() {\n"
            "        one();\n"
            "        two();\n"
            "        three();\n"
            "        four();\n"
            "    }\n"
            "}\n"
        )
        _write(repo, TEST_PATH, base_test)
        _write(repo, SUT_PATH, "public class S {\n    int x;\n}\n")
        _commit_all(repo, "base", "2021-01-01T00:00:00+00:00")
        # two separate regions change inside the same test method
        changed = base_test.replace("one();", "one(1);").replace("four();", "four(4);")
        _write(repo, TEST_PATH, changed)
        _write(repo, SUT_PATH, "public class S {\n    int x;\n    int y;\n}\n")
        _commit_all(repo, "two regions", "2021-01-02T00:00:00+00:00")
        assert mine_repo(repo) == []

    def test_sut_only_commit_yields_nothing(self, tmp_path):
        repo = tmp_path / "sutonly"
        repo.mkdir()
        _git(repo, "init", "-q", "-b", "main")
        _write(repo, SUT_PATH, "public class S {\n    int x;\n}\n")
        _commit_all(repo, "base", "2021-01-01T00:00:00+00:00")
        _write(repo, SUT_PATH, "public class S {\n    long x;\n}\n")
        _commit_all(repo, "sut change", "2021-01-02T00:00:00+00:00")
        assert mine_repo(repo) == []


class TestDedupe:
    def test_merge_duplicate_collapses(self, mined):
        kept, dropped = dedupe(mined)
        assert len(kept) == 4
        assert len(dropped) == 1
        # the earlier (branch) commit survives
        survivor = [c for c in kept if "scale(2)" in " ".join(c.broken_source)]
        assert len(survivor) == 1
        assert survivor[0].commit_time < dropped[0].commit_time

    def test_no_duplicates_unchanged(self):
        cands = mine_into_raw_pair()
        kept, dropped = dedupe(cands)
        assert kept == cands and dropped == []

    def test_three_identical_keep_earliest(self):
        base = mine_into_raw_pair()[0]
        from dataclasses import replace

        versions = [
            replace(base, index=i, commit=f"c{i}",
                    commit_time=base.commit_time + timedelta(days=i))
            for i in range(3)
        ]
        kept, dropped = dedupe(versions)
        assert [c.commit for c in kept] == ["c0"]
        assert len(dropped) == 2

    def test_idempotent(self, mined):
        kept, _ = dedupe(mined)
        again, dropped = dedupe(kept)
        assert again == kept and dropped == []


def mine_into_raw_pair():
    """One synthetic raw candidate, for dedupe edge cases."""
    from targen.mining import RawCandidate

    return [
        RawCandidate(
            project="p", index=0, commit="c0",
            commit_time=datetime(2021, 1, 1, tzinfo=timezone.utc),
            test_file=TEST_PATH,
            broken_fqn="p.T.t()", repaired_fqn="p.T.t()",
            broken_source=("public void t() {", "foo(1);", "}"),
            repaired_source=("public void t() {", "foo(1, 2);", "}"),
            breakage_range=(2, 2),
            sut_hunks=(
                Hunk(file=SUT_PATH, level=HunkLevel.CLASS, enclosing="S",
                     deleted_lines=("int x;",), added_lines=("long x;",),
                     old_start=2, new_start=2),
            ),
            commit_touched_sut=True,
        )
    ]


class TestDetectors:
    def test_test_only_commit_detected(self, mined):
        flags = {c.candidate_id: detect_test_only_commit(c) for c in mined}
        assert sum(flags.values()) == 1
        test_only = [c for c in mined if flags[c.candidate_id]]
        assert "verifyHelper" in " ".join(test_only[0].repaired_source)

    def test_commit_with_sut_hunk_not_test_only(self, mined):
        with_sut = [c for c in mined if c.commit_touched_sut]
        for cand in with_sut:
            assert not detect_test_only_commit(cand)

    def test_trivial_rename_detected(self, mined):
        trivial = [c for c in mined if detect_trivial(c)]
        assert len(trivial) == 1
        assert "fetchVal" in " ".join(trivial[0].repaired_source)

    def test_argument_addition_not_trivial(self, mined):
        arg_repair = [c for c in mined if "add(1, 2, 0)" in " ".join(c.repaired_source)]
        assert arg_repair and not detect_trivial(arg_repair[0])

    def test_rename_plus_literal_change_not_trivial(self):
        from dataclasses import replace

        base = mine_into_raw_pair()[0]
        cand = replace(
            base,
            broken_source=("public void t() {", "assertEquals(1, c.getVal());", "}"),
            repaired_source=("public void t() {", "assertEquals(2, c.fetchVal());", "}"),
            sut_hunks=(
                Hunk(file=SUT_PATH, level=HunkLevel.METHOD, enclosing="S.getVal()",
                     deleted_lines=("public int getVal() {",),
                     added_lines=("public int fetchVal() {",),
                     old_start=5, new_start=5),
            ),
        )
        # rename alone does not reproduce the repaired lines (literal changed too)
        assert not detect_trivial(cand)


class TestExclusionFilters:
    def test_fixture_counts_and_reasons(self, mined):
        report = apply_exclusion_filters(mined)
        counts = report.counts()
        assert counts["kept"] == 3
        assert counts.get("duplicate") == 1
        assert counts.get("test_only") == 1
        assert len(report.trivial_ids) == 1
        # reasons are mutually exclusive and exhaustive
        assert counts["kept"] + sum(
            v for k, v in counts.items() if k != "kept"
        ) == len(mined)

    def test_no_sut_hunks_is_empty_context(self):
        from dataclasses import replace

        base = mine_into_raw_pair()[0]
        cand = replace(base, sut_hunks=(), commit_touched_sut=True)
        report = apply_exclusion_filters([cand])
        assert report.excluded[0].reason == ExclusionReason.EMPTY_CONTEXT

    def test_add_only_repair_is_no_breakage_location(self):
        from dataclasses import replace

        base = mine_into_raw_pair()[0]
        cand = replace(
            base,
            broken_source=("public void t() {", "foo(1);", "}"),
            repaired_source=("public void t() {", "foo(1);", "bar();", "}"),
            breakage_range=None,
        )
        report = apply_exclusion_filters([cand])
        assert report.excluded[0].reason == ExclusionReason.NO_BREAKAGE_LOCATION

    def test_oversized_instance_excluded_for_length(self):
        from dataclasses import replace

        base = mine_into_raw_pair()[0]
        huge = tuple(f"statement_{i}();" for i in range(600))
        cand = replace(
            base,
            broken_source=("public void t() {",) + huge + ("}",),
            repaired_source=("public void t() {", "changed();") + huge[1:] + ("}",),
            breakage_range=(2, 2),
        )
        report = apply_exclusion_filters([cand])
        assert report.excluded[0].reason == ExclusionReason.LENGTH


class TestSplit:
    def test_twenty_instances_split_16_1_3(self):
        instances = [make_toy_instance(i) for i in range(20)]
        result = split(instances)
        assert len(result.train) == 16
        assert len(result.val) == 1
        assert len(result.test) == 3

    def test_temporal_ordering_within_project(self):
        instances = [make_toy_instance(i) for i in range(20)]
        result = split(instances)
        max_train = max(i.commit_time for i in result.train)
        min_val = min(i.commit_time for i in result.val)
        min_test = min(i.commit_time for i in result.test)
        assert max_train <= min_val <= min_test

    def test_boundary_ties_go_to_train(self):
        instances = [make_toy_instance(i) for i in range(20)]
        # clone the timestamp across the 80% boundary (indices 15 and 16)
        tied = list(instances)
        tied[16] = RepairInstance(
            id=tied[16].id, broken_test=tied[16].broken_test,
            repaired_test=tied[16].repaired_test, breakage=tied[16].breakage,
            sut_hunks=tied[16].sut_hunks, commit=tied[16].commit,
            commit_time=tied[15].commit_time, project=tied[16].project,
        )
        result = split(tied)
        assert len(result.train) == 17

    def test_small_project_all_train_with_warning(self):
        instances = [make_toy_instance(i) for i in range(2)]
        result = split(instances)
        assert len(result.train) == 2 and not result.val and not result.test
        assert result.warnings

    def test_partition_property(self):
        instances = [make_toy_instance(i) for i in range(20)]
        result = split(instances)
        ids = sorted(i.id for i in result.train + result.val + result.test)
        assert ids == sorted(i.id for i in instances)

    def test_trivial_dropped_from_eval_only(self):
        instances = [make_toy_instance(i) for i in range(20)]
        trivial = {instances[19].id, instances[0].id}  # one in test, one in train
        result = split(instances, trivial_ids=trivial)
        assert instances[0] in result.train
        assert all(i.id != instances[19].id for i in result.test)
        assert len(result.test) == 2

    def test_multi_project_split_is_per_project(self):
        a = [make_toy_instance(i, project="alpha") for i in range(20)]
        b = [make_toy_instance(i, project="beta") for i in range(20)]
        result = split(a + b)
        assert len(result.train) == 32 and len(result.val) == 2 and len(result.test) == 6


class TestRepairedBreakageLines:
    def test_extraction_from_instance(self):
        inst = make_toy_instance(4)
        assert repaired_breakage_lines(inst) == [
            'Widget w = new Widget(4, "mode4");'
        ]


class TestBreakageErrorOverlap:
    def test_exact(self):
        assert breakage_error_overlap({3, 4}, {3, 4}) == Overlap.EXACT_MATCH

    def test_disjoint(self):
        assert breakage_error_overlap({3}, {10}) == Overlap.NO_INTERSECTION

    def test_partial(self):
        assert breakage_error_overlap({3, 4}, {4, 5}) == Overlap.SOME_INTERSECTION

    def test_aggregate_report(self):
        from targen.mining import overlap_report

        rows = [Overlap.EXACT_MATCH, Overlap.EXACT_MATCH, Overlap.NO_INTERSECTION,
                Overlap.SOME_INTERSECTION]
        report = overlap_report(rows)
        assert report["exact_match"] == {"count": 2, "percent": 50.0}
        assert report["no_intersection"] == {"count": 1, "percent": 25.0}
        assert report["some_intersection"] == {"count": 1, "percent": 25.0}
