from collections import Counter

import numpy as np
import pytest

from targen.errors import ContractError
from targen.model import Hunk, HunkLevel, RepairInstance
from targen.prioritize import tfidf_cosine
from targen.taxonomy import node_label_multiset, parse_mini
from targen.tokenization import tokenize, tokenize_lines
from targen.trust import (
    FEATURE_NAMES,
    ForestConfig,
    cross_validate,
    extract_features,
    oversample,
    permutation_importance,
    stratified_folds,
    train_forest,
)
from conftest import make_toy_instance


def make_instance_with_hunks(hunks):
    base = make_toy_instance(0)
    return RepairInstance(
        id=base.id, broken_test=base.broken_test, repaired_test=base.repaired_test,
        breakage=base.breakage, sut_hunks=tuple(hunks), commit=base.commit,
        commit_time=base.commit_time, project=base.project,
    )


class TestExtractFeatures:
    def test_no_hunks_gives_zeros(self):
        inst = make_instance_with_hunks([])
        features = extract_features(inst)
        assert features.max_tfidf_sim == 0.0
        assert features.avg_tfidf_sim == 0.0
        assert features.common_ast_hunk == 0
        assert features.common_ast_node == 0
        assert features.changed_files == 0
        assert features.changed_lines == 0
        assert features.test_loc == len(inst.broken_test.source)

    def test_identical_deleted_lines_give_max_sim_one(self):
        inst = make_toy_instance(0)
        breakage_line = inst.breakage_lines()[0]
        hunk = Hunk(
            file="A.java", level=HunkLevel.CLASS, enclosing="A",
            deleted_lines=(breakage_line,), added_lines=(), old_start=1, new_start=1,
        )
        features = extract_features(make_instance_with_hunks([hunk]))
        assert features.max_tfidf_sim == pytest.approx(1.0)

    def test_three_hunk_instance_matches_brute_force(self):
        hunks = [
            Hunk(file="A.java", level=HunkLevel.CLASS, enclosing="A",
                 deleted_lines=("Widget w = make();", "w.check(0);"),
                 added_lines=("Widget w = make(1);",), old_start=1, new_start=1),
            Hunk(file="B.java", level=HunkLevel.CLASS, enclosing="B",
                 deleted_lines=("int unrelated = 3;",), added_lines=(),
                 old_start=5, new_start=5),
            Hunk(file="A.java", level=HunkLevel.CLASS, enclosing="A",
                 deleted_lines=(), added_lines=("// new stuff",),
                 old_start=9, new_start=9),
        ]
        inst = make_instance_with_hunks(hunks)
        features = extract_features(inst)

        # independent recomputation
        breakage = inst.breakage_lines()
        docs = [tokenize(" ".join(h.deleted_lines)) for h in hunks]
        sims = tfidf_cosine(docs, tokenize_lines(breakage))
        assert features.max_tfidf_sim == pytest.approx(max(sims))
        assert features.avg_tfidf_sim == pytest.approx(sum(sims) / len(sims))

        brk_nodes = node_label_multiset(parse_mini(breakage))
        expect_hunks = 0
        expect_nodes = 0
        for h in hunks:
            nodes = node_label_multiset(parse_mini(list(h.deleted_lines)))
            overlap = sum(min(c, brk_nodes.get(k, 0)) for k, c in nodes.items())
            if overlap:
                expect_hunks += 1
                expect_nodes += overlap
        assert features.common_ast_hunk == expect_hunks
        assert features.common_ast_node == expect_nodes
        assert features.changed_files == 2
        assert features.changed_lines == 5
        assert features.test_loc == 5


class TestOversample:
    def test_80_20_becomes_parity(self):
        rows = np.arange(100, dtype=float).reshape(100, 1)
        labels = np.array([1] * 80 + [0] * 20)
        out_rows, out_labels = oversample(rows, labels, seed=3)
        counts = Counter(out_labels.tolist())
        assert counts[0] == counts[1] == 80
        assert len(out_rows) == 160

    def test_balanced_unchanged(self):
        rows = np.zeros((10, 2))
        labels = np.array([0, 1] * 5)
        out_rows, out_labels = oversample(rows, labels, seed=0)
        assert len(out_rows) == 10

    def test_fixed_seed_reproducible(self):
        rows = np.arange(50, dtype=float).reshape(50, 1)
        labels = np.array([1] * 40 + [0] * 10)
        a = oversample(rows, labels, seed=11)
        b = oversample(rows, labels, seed=11)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])

    def test_single_class_rejected(self):
        with pytest.raises(ContractError):
            oversample(np.zeros((5, 1)), np.ones(5, dtype=int), seed=0)


def margin_dataset(n=400, seed=0, informative=0, n_features=7, margin=1.0):
    """Linearly separable on one feature with a clear margin; rest is noise."""
    rng = np.random.RandomState(seed)
    y = rng.randint(0, 2, size=n)
    x = rng.uniform(0, 1, size=(n, n_features))
    x[:, informative] = y * (2 + margin) + rng.uniform(0, 1, size=n)
    return x, y


class TestTrainForest:
    def test_separable_data_trains_to_high_accuracy(self):
        x, y = margin_dataset(300, seed=1)
        model = train_forest(x, y, ForestConfig(n_trees=25, seed=5))
        accuracy = (model.predict(x) == y).mean()
        assert accuracy >= 0.99

    def test_flipped_labels_complement_probabilities(self):
        x, y = margin_dataset(200, seed=2)
        model = train_forest(x, y, ForestConfig(n_trees=15, seed=9))
        flipped = train_forest(x, 1 - y, ForestConfig(n_trees=15, seed=9))
        p = model.predict_proba(x)
        q = flipped.predict_proba(x)
        assert np.allclose(p, 1.0 - q, atol=1e-12)

    def test_single_stump_equals_exhaustive_best_stump(self):
        x, y = margin_dataset(120, seed=3, n_features=3)
        model = train_forest(x, y, ForestConfig(n_trees=1, max_depth=1, seed=4))

        # Exhaustive oracle over every feature and midpoint threshold, scored
        # on the same bootstrap sample the tree saw.
        rng = np.random.RandomState(4)
        idx = rng.randint(0, len(y), size=len(y))
        bx, by = x[idx], y[idx]

        def stump_error(feature, threshold):
            left = by[bx[:, feature] <= threshold]
            right = by[bx[:, feature] > threshold]
            err = 0
            for part in (left, right):
                if len(part):
                    majority = np.bincount(part, minlength=2).argmax()
                    err += int((part != majority).sum())
            return err

        best_err = min(
            stump_error(f, (v1 + v2) / 2)
            for f in range(3)
            for v1, v2 in zip(sorted(bx[:, f])[:-1], sorted(bx[:, f])[1:])
            if v1 != v2
        )
        tree = model.trees[0]
        assert not tree.is_leaf()
        model_err = stump_error(tree.feature, tree.threshold)
        assert model_err == best_err

    def test_constant_features_tolerated(self):
        x = np.zeros((40, 7))
        x[:, 2] = np.arange(40)
        y = (x[:, 2] > 19).astype(int)
        model = train_forest(x, y, ForestConfig(n_trees=10, seed=0))
        assert (model.predict(x) == y).mean() >= 0.95

    def test_fixed_seed_bit_identical_model(self):
        x, y = margin_dataset(150, seed=6)
        a = train_forest(x, y, ForestConfig(n_trees=12, seed=42)).to_json()
        b = train_forest(x, y, ForestConfig(n_trees=12, seed=42)).to_json()
        assert a.encode() == b.encode()

    def test_model_json_round_trip(self):
        from targen.trust import ForestModel

        x, y = margin_dataset(100, seed=7)
        model = train_forest(x, y, ForestConfig(n_trees=5, seed=1))
        clone = ForestModel.from_json(model.to_json())
        assert np.array_equal(model.predict(x), clone.predict(x))

    def test_single_class_rejected(self):
        with pytest.raises(ContractError):
            train_forest(np.zeros((10, 2)), np.zeros(10, dtype=int))


class TestCrossValidate:
    def test_perfectly_predictable_data(self):
        x, y = margin_dataset(200, seed=8)
        report = cross_validate(x, y, k=5, seed=0, config=ForestConfig(n_trees=15))
        for cls in (0, 1):
            assert report.per_label[cls].precision == pytest.approx(100.0)
            assert report.per_label[cls].recall == pytest.approx(100.0)
            assert report.per_label[cls].f1 == pytest.approx(100.0)

    def test_random_labels_near_chance(self):
        # Monte-Carlo baseline: averaged F1 over 20 seeds on balanced noise.
        f1s = []
        for seed in range(20):
            rng = np.random.RandomState(seed)
            x = rng.uniform(size=(120, 4))
            y = np.array([0, 1] * 60)
            report = cross_validate(x, y, k=5, seed=seed, config=ForestConfig(n_trees=8))
            f1s.append(report.per_label[1].f1)
        mean_f1 = float(np.mean(f1s))
        assert 40.0 <= mean_f1 <= 60.0

    def test_folds_partition_rows(self):
        y = np.array([0, 1] * 25)
        folds = stratified_folds(y, 5, seed=0)
        everything = np.concatenate(folds)
        assert sorted(everything.tolist()) == list(range(50))

    def test_too_few_rows_rejected(self):
        with pytest.raises(ContractError):
            cross_validate(np.zeros((3, 2)), np.array([0, 1, 0]), k=5)

    def test_stratification_error_when_class_missing(self):
        y = np.array([0] * 30 + [1])
        with pytest.raises(ContractError):
            stratified_folds(y, 5, seed=0)


class TestPermutationImportance:
    def test_informative_feature_ranked_first(self):
        x, y = margin_dataset(300, seed=10, informative=3)
        model = train_forest(x, y, ForestConfig(n_trees=20, seed=2))
        ranking = permutation_importance(model, x, y, seed=0)
        assert ranking[0][0] == FEATURE_NAMES[3]

    def test_ignored_feature_has_zero_importance(self):
        x, y = margin_dataset(200, seed=11, informative=0)
        model = train_forest(x, y, ForestConfig(n_trees=20, seed=3))
        scores = dict(permutation_importance(model, x, y, seed=1))
        # features the forest never splits on cannot change predictions
        assert scores[FEATURE_NAMES[6]] == pytest.approx(0.0, abs=0.02)

    def test_single_feature_model(self):
        rng = np.random.RandomState(0)
        x = rng.uniform(size=(150, 1))
        y = (x[:, 0] > 0.5).astype(int)
        model = train_forest(x, y, ForestConfig(n_trees=10, seed=0))
        ranking = permutation_importance(model, x, y, seed=0)
        assert ranking[0][1] > 0.2
