import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from etop.errors import StepError
from etop.seeds import derive_seed
from etop.steps import (
    DATA_STEP,
    MODEL_STEP,
    StepFailure,
    StepOutcome,
    StepSpec,
    SurrogateConfig,
    apply_data_step,
    apply_fitted_step,
    canonical_step,
    catalog,
    coerce_numeric,
    evaluate_step,
    fit_data_step,
    fit_predict_model_step,
    surrogate_score,
)
from etop.tabular import CATEGORICAL, NUMERIC, SplitPair, make_dataset

from conftest import blob_dataset, mixed_dataset


def S(name, **params):
    return StepSpec.make(name, **params)


class TestCatalog:
    def test_impute_is_a_data_step(self):
        entry = {d.name: d for d in catalog()}["impute"]
        assert entry.kind == DATA_STEP

    def test_dtree_is_a_model_step(self):
        entry = {d.name: d for d in catalog()}["dtree"]
        assert entry.kind == MODEL_STEP

    def test_names_unique_across_kinds(self):
        names = [d.name for d in catalog()]
        assert len(names) == len(set(names)) == 8

    def test_param_validation(self):
        with pytest.raises(StepError):
            S("impute", strategy="bogus")
        with pytest.raises(StepError):
            S("dtree", max_depth=0, min_leaf=1)
        with pytest.raises(StepError):
            S("logreg", lr=0.0, epochs=100, l2=0.0)  # lr range is open at 0
        with pytest.raises(StepError):
            S("dtree", max_depth=4)  # missing param
        with pytest.raises(StepError):
            S("knn", k=5, extra=1)


class TestCanonicalForm:
    def test_data_step_form(self):
        assert canonical_step(S("impute", strategy="mean")) == "impute{strategy=mean}"

    def test_model_step_form(self):
        spec = S("dtree", max_depth=4, min_leaf=1)
        assert canonical_step(spec) == "dtree{max_depth=4,min_leaf=1}"

    def test_param_order_is_declared_order(self):
        spec = S("select", k=2, method="variance")  # kwargs reordered
        assert canonical_step(spec) == "select{method=variance,k=2}"

    def test_reals_rendered_with_17_digits(self):
        spec = S("logreg", lr=0.1, epochs=10, l2=0.0)
        assert canonical_step(spec) == "logreg{lr=0.10000000000000001,epochs=10,l2=0}"

    def test_distinct_params_distinct_keys(self):
        a = canonical_step(S("knn", k=3))
        b = canonical_step(S("knn", k=4))
        assert a != b


class TestImpute:
    def test_mean_fill(self):
        d = make_dataset([("x", NUMERIC, [1.0, None, 3.0])], ["a", "b", "a"])
        out = apply_data_step(S("impute", strategy="mean"), d)
        assert out.cells[0].tolist() == [1.0, 2.0, 3.0]

    def test_median_and_mode_and_zero(self):
        d = make_dataset([("x", NUMERIC, [1.0, 1.0, 5.0, None])], ["a", "b", "a", "b"])
        assert apply_data_step(S("impute", strategy="median"), d).cells[0][3] == 1.0
        assert apply_data_step(S("impute", strategy="mode"), d).cells[0][3] == 1.0
        assert apply_data_step(S("impute", strategy="constant_zero"), d).cells[0][3] == 0.0

    def test_categorical_fill_uses_mode(self):
        d = make_dataset(
            [("c", CATEGORICAL, ["red", "red", "blue", None])], ["a", "b", "a", "b"]
        )
        out = apply_data_step(S("impute", strategy="mean"), d)
        assert out.cells[0].tolist() == ["red", "red", "blue", "red"]

    @pytest.mark.parametrize("strategy", ["mean", "median", "mode", "constant_zero"])
    def test_no_missing_cells_remain(self, strategy):
        d = mixed_dataset(missing=True)
        out = apply_data_step(S("impute", strategy=strategy), d)
        assert not out.has_missing()


class TestScale:
    def test_minmax(self):
        d = make_dataset([("x", NUMERIC, [2.0, 4.0, 6.0])], ["a", "b", "a"])
        out = apply_data_step(S("scale", kind="minmax"), d)
        assert out.cells[0].tolist() == [0.0, 0.5, 1.0]

    def test_standard_moments(self):
        rng = np.random.default_rng(1)
        d = make_dataset(
            [("x", NUMERIC, rng.normal(5, 3, 50).tolist())],
            ["a", "b"] * 25,
        )
        out = apply_data_step(S("scale", kind="standard"), d)
        col = out.cells[0]
        assert abs(col.mean()) < 1e-9
        assert abs(col.std(ddof=1) - 1.0) < 1e-9

    def test_constant_column_maps_to_zero(self):
        d = make_dataset([("x", NUMERIC, [4.0, 4.0, 4.0])], ["a", "b", "a"])
        for kind in ("standard", "minmax"):
            out = apply_data_step(S("scale", kind=kind), d)
            assert out.cells[0].tolist() == [0.0, 0.0, 0.0]

    def test_none_is_identity_and_categoricals_untouched(self):
        d = mixed_dataset()
        out = apply_data_step(S("scale", kind="none"), d)
        assert out.cells[0].tolist() == d.cells[0].tolist()
        assert out.cells[2].tolist() == d.cells[2].tolist()

    def test_missing_cells_stay_missing(self):
        d = make_dataset([("x", NUMERIC, [1.0, None, 3.0])], ["a", "b", "a"])
        out = apply_data_step(S("scale", kind="standard"), d)
        assert math.isnan(out.cells[0][1])


class TestEncode:
    def test_onehot_hand_expanded(self):
        d = make_dataset([("c", CATEGORICAL, ["red", "blue", "red"])], ["a", "b", "a"])
        out = apply_data_step(S("encode", kind="onehot"), d)
        assert out.column_names == ("c=blue", "c=red")
        assert out.cells[0].tolist() == [0.0, 1.0, 0.0]
        assert out.cells[1].tolist() == [1.0, 0.0, 1.0]

    def test_ordinal_ranks_lexicographic(self):
        d = make_dataset([("c", CATEGORICAL, ["red", "blue", "green"])], ["a", "b", "a"])
        out = apply_data_step(S("encode", kind="ordinal"), d)
        assert out.columns[0].kind == NUMERIC
        assert out.cells[0].tolist() == [2.0, 0.0, 1.0]

    def test_onehot_missing_encodes_all_zeros(self):
        d = make_dataset([("c", CATEGORICAL, ["red", None, "blue"])], ["a", "b", "a"])
        out = apply_data_step(S("encode", kind="onehot"), d)
        assert out.cells[0][1] == 0.0 and out.cells[1][1] == 0.0

    def test_no_categorical_columns_is_identity(self):
        d = blob_dataset()
        out = apply_data_step(S("encode", kind="onehot"), d)
        assert out.column_names == d.column_names

    def test_fitted_encode_aligns_unseen_categories(self):
        train = make_dataset([("c", CATEGORICAL, ["red", "blue", "red"])], ["a", "b", "a"])
        other = make_dataset([("c", CATEGORICAL, ["green", "red"])], ["a", "b"])
        _, fitted = fit_data_step(S("encode", kind="onehot"), train)
        out = apply_fitted_step(fitted, other)
        assert out.column_names == ("c=blue", "c=red")
        assert out.cells[0].tolist() == [0.0, 0.0]  # green is unseen
        assert out.cells[1].tolist() == [0.0, 1.0]


class TestSelect:
    def test_keeps_top_variance_in_original_order(self):
        d = make_dataset(
            [
                ("low", NUMERIC, [0.0, 0.1, 0.0, 0.1]),
                ("high", NUMERIC, [0.0, 10.0, 20.0, 30.0]),
                ("mid", NUMERIC, [0.0, 1.0, 2.0, 3.0]),
            ],
            ["a", "b", "a", "b"],
        )
        out = apply_data_step(S("select", method="variance", k=2), d)
        assert out.column_names == ("high", "mid")

    def test_anova_prefers_label_aligned_column(self):
        # Informative column separates the classes; the other is label-blind
        # with larger variance. Hand-computed F: informative >> noise.
        d = make_dataset(
            [
                ("info", NUMERIC, [0.0, 0.1, 0.2, 5.0, 5.1, 5.2]),
                ("noise", NUMERIC, [0.0, 9.0, 1.0, 8.5, 0.5, 9.5]),
            ],
            ["a", "a", "a", "b", "b", "b"],
        )
        out = apply_data_step(S("select", method="anova_f", k=1), d)
        assert out.column_names == ("info",)

    def test_size_is_min_k_features(self):
        d = blob_dataset(n_noise=3)
        for k in (1, 3, 5):
            out = apply_data_step(S("select", method="variance", k=k), d)
            assert out.n_features == k
            assert set(out.column_names) <= set(d.column_names)

    def test_k_above_feature_count_fails(self):
        d = blob_dataset()
        with pytest.raises(StepError, match="exceeds"):
            apply_data_step(S("select", method="variance", k=3), d)

    def test_tie_breaks_by_original_column_order(self):
        d = make_dataset(
            [
                ("b_col", NUMERIC, [0.0, 1.0, 2.0, 3.0]),
                ("a_col", NUMERIC, [0.0, 1.0, 2.0, 3.0]),
            ],
            ["a", "b", "a", "b"],
        )
        out = apply_data_step(S("select", method="variance", k=1), d)
        assert out.column_names == ("b_col",)


class TestDataStepInvariants:
    @pytest.mark.parametrize("spec", [
        S("impute", strategy="mean"),
        S("scale", kind="standard"),
        S("encode", kind="onehot"),
        S("select", method="variance", k=2),
    ])
    def test_rows_and_labels_preserved(self, spec):
        d = mixed_dataset()
        out = apply_data_step(spec, d)
        assert out.n_rows == d.n_rows
        assert out.labels.tolist() == d.labels.tolist()

    def test_model_step_rejected(self):
        with pytest.raises(StepError, match="model step"):
            apply_data_step(S("knn", k=3), blob_dataset())


class TestModelSteps:
    def test_dtree_separable(self, toy_blobs):
        split = SplitPair(train=toy_blobs, valid=toy_blobs, seed=0)
        acc, model = fit_predict_model_step(S("dtree", max_depth=1, min_leaf=1), split, seed=0)
        assert acc == 1.0
        assert model.predict(toy_blobs) == toy_blobs.labels.tolist()

    def test_knn_self_valid(self, toy_blobs):
        split = SplitPair(train=toy_blobs, valid=toy_blobs, seed=0)
        acc, _ = fit_predict_model_step(S("knn", k=1), split, seed=0)
        assert acc == 1.0

    def test_missing_cells_rejected(self):
        d = make_dataset([("x", NUMERIC, [1.0, None, 3.0, 4.0])], ["a", "b", "a", "b"])
        split = SplitPair(train=d, valid=d, seed=0)
        with pytest.raises(StepError, match="missing"):
            fit_predict_model_step(S("knn", k=1), split, seed=0)

    def test_categorical_columns_rejected(self):
        d = mixed_dataset(missing=False)
        split = SplitPair(train=d, valid=d, seed=0)
        with pytest.raises(StepError, match="categorical"):
            fit_predict_model_step(S("dtree", max_depth=2, min_leaf=1), split, seed=0)

    def test_single_class_rejected(self):
        import etop.tabular as tab
        d = make_dataset([("x", NUMERIC, [1.0, 2.0])], ["a", "b"])
        single = tab.Dataset(d.columns, d.cells, np.array(["a", "a"], dtype=object))
        split = SplitPair(train=single, valid=single, seed=0)
        with pytest.raises(StepError, match="2 classes"):
            fit_predict_model_step(S("knn", k=1), split, seed=0)


class TestSurrogate:
    def test_separable_blobs_scores_one(self):
        # x < 0 -> a, x > 10 -> b, 20 points: a depth-1 threshold separates.
        xs = [float(v) for v in range(-10, 0)] + [float(v) for v in range(11, 21)]
        d = make_dataset([("x", NUMERIC, xs)], ["a"] * 10 + ["b"] * 10)
        assert surrogate_score(d, SurrogateConfig(), split_seed=5) == 1.0

    def test_single_class_rejected(self):
        import etop.tabular as tab
        d = make_dataset([("x", NUMERIC, [1.0, 2.0, 3.0])], ["a", "b", "a"])
        single = tab.Dataset(d.columns, d.cells, np.array(["a"] * 3, dtype=object))
        with pytest.raises(StepError):
            surrogate_score(single, SurrogateConfig(), split_seed=0)

    def test_label_independent_features_score_near_chance(self):
        rng = np.random.default_rng(77)
        xs = rng.normal(0, 1, 200).tolist()
        labels = [("a", "b")[int(v)] for v in rng.integers(0, 2, 200)]
        d = make_dataset([("x", NUMERIC, xs)], labels)
        acc = surrogate_score(d, SurrogateConfig(), split_seed=3)
        assert 0.3 <= acc <= 0.7  # binomial bound, 40-row validation set

    def test_config_validation(self):
        with pytest.raises(StepError):
            SurrogateConfig(split_criterion="entropy")
        with pytest.raises(StepError):
            SurrogateConfig(max_depth=0)


class TestCoerceNumeric:
    def test_output_fully_numeric_and_observed(self):
        d = mixed_dataset(missing=True)
        out = coerce_numeric(d)
        assert all(c.kind == NUMERIC for c in out.columns)
        assert not out.has_missing()

    def test_missing_numeric_takes_column_mean(self):
        d = make_dataset([("x", NUMERIC, [1.0, None, 3.0])], ["a", "b", "a"])
        assert coerce_numeric(d).cells[0][1] == 2.0

    def test_categorical_ordinal_with_missing_sentinel(self):
        d = make_dataset([("c", CATEGORICAL, ["red", None, "blue"])], ["a", "b", "a"])
        assert coerce_numeric(d).cells[0].tolist() == [1.0, -1.0, 0.0]


class TestEvaluateStep:
    def test_identity_data_step_acc_matches_direct_surrogate(self):
        d = blob_dataset(n_per_class=40)
        cfg = SurrogateConfig()
        seed = 21
        outcome = evaluate_step(S("scale", kind="none"), d, cfg, seed)
        assert isinstance(outcome, StepOutcome)
        direct = surrogate_score(coerce_numeric(d), cfg, derive_seed(seed, "eval-split"))
        assert outcome.acc == direct
        assert outcome.transformed is not None and outcome.fitted_model is None

    def test_model_step_outcome_shape(self, toy_blobs):
        outcome = evaluate_step(S("dtree", max_depth=1, min_leaf=1), toy_blobs,
                                SurrogateConfig(), seed=3)
        assert isinstance(outcome, StepOutcome)
        assert outcome.kind == MODEL_STEP
        assert outcome.fitted_model is not None and outcome.transformed is None
        assert 0.0 <= outcome.acc <= 1.0

    def test_invalid_select_returns_failure(self):
        d = blob_dataset()
        outcome = evaluate_step(S("select", method="variance", k=99), d,
                                SurrogateConfig(), seed=0)
        assert isinstance(outcome, StepFailure)
        assert "exceeds" in outcome.error

    def test_deterministic(self):
        d = mixed_dataset()
        for spec in (S("impute", strategy="mean"), S("encode", kind="ordinal")):
            o1 = evaluate_step(spec, d, SurrogateConfig(), seed=11)
            o2 = evaluate_step(spec, d, SurrogateConfig(), seed=11)
            assert o1.acc == o2.acc
            from etop.tabular import dataset_fingerprint
            assert dataset_fingerprint(o1.transformed) == dataset_fingerprint(o2.transformed)

    @given(seed=st.integers(min_value=0, max_value=10_000))
    @settings(max_examples=15, deadline=None)
    def test_accuracy_always_in_unit_interval(self, seed):
        d = blob_dataset(n_per_class=25, spread=2.5, seed=seed % 7)
        outcome = evaluate_step(S("rforest", n_trees=3, max_depth=3), d,
                                SurrogateConfig(), seed=seed)
        assert isinstance(outcome, StepOutcome)
        assert 0.0 <= outcome.acc <= 1.0
