"""Membership math, forward pass, hybrid learning, and persistence."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import rlckit as rk
import rlckit.anfis as anfis_mod
from rlckit.anfis import (
    DegenerateRange,
    EmptyBatch,
    EpochRecord,
    MalformedModelFile,
    VersionMismatch,
    _batch_rmse,
    flatten_gradient,
)

from conftest import batch_sse, naive_forward, perturb_mf, random_model, synthetic_series


class TestGbellEval:
    def test_center_is_one(self):
        mf = rk.BellMF(a=2.0, b=3.0, c=6.0)
        assert rk.gbell_eval(6.0, mf) == 1.0

    def test_half_height_at_center_plus_minus_a(self):
        mf = rk.BellMF(a=2.0, b=4.0, c=6.0)
        assert rk.gbell_eval(8.0, mf) == 0.5
        assert rk.gbell_eval(4.0, mf) == 0.5

    def test_closed_form_value(self):
        # 1 / (1 + |(10-6)/2|^8) = 1/257
        mf = rk.BellMF(a=2.0, b=4.0, c=6.0)
        assert rk.gbell_eval(10.0, mf) == pytest.approx(1.0 / 257.0, rel=1e-15)

    def test_scalar_matches_vector_path(self):
        rng = np.random.default_rng(3)
        mf = rk.BellMF(a=1.7, b=2.3, c=-0.4)
        xs = rng.uniform(-10, 10, 64)
        vec = rk.gbell_eval(xs, mf)
        for k, x in enumerate(xs):
            assert rk.gbell_eval(float(x), mf) == vec[k]

    @given(
        st.floats(min_value=0.1, max_value=50).flatmap(
            lambda u: st.sampled_from([u, -u])
        ),
        st.floats(min_value=0.1, max_value=10),
        st.floats(min_value=1, max_value=6),
        st.floats(min_value=-50, max_value=50),
    )
    @settings(max_examples=200, deadline=None)
    def test_range_and_monotonicity(self, u, a, b, c):
        # |u| >= 0.1 keeps t = |u|^(2b) above float rounding, so strictness
        # (mu < 1 off center) is meaningful
        mf = rk.BellMF(a=a, b=b, c=c)
        x = c + u * a
        mu = rk.gbell_eval(x, mf)
        assert 0.0 <= mu < 1.0
        assert rk.gbell_eval(c + 1.5 * u * a, mf) <= mu

    def test_saturates_to_zero_on_overflow(self):
        mf = rk.BellMF(a=1e-3, b=20.0, c=0.0)
        assert rk.gbell_eval(1e9, mf) == 0.0

    def test_tiny_but_positive_far_from_center(self):
        mf = rk.BellMF(a=1e-3, b=6.0, c=0.0)
        mu = rk.gbell_eval(1e9, mf)
        assert 0.0 < mu < 1e-100


class TestGbellGrad:
    def test_zero_at_center(self):
        mf = rk.BellMF(a=2.0, b=3.0, c=1.5)
        assert rk.gbell_grad(1.5, mf) == (0.0, 0.0, 0.0)

    def test_center_symmetry_of_dc(self):
        mf = rk.BellMF(a=2.0, b=3.0, c=5.0)
        delta = 0.25
        left = rk.gbell_grad(5.0 - delta, mf)[2]
        right = rk.gbell_grad(5.0 + delta, mf)[2]
        assert right == -left

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(11)
        for _ in range(60):
            mf = rk.BellMF(
                a=float(rng.uniform(0.3, 5.0)),
                b=float(rng.uniform(1.0, 5.0)),
                c=float(rng.uniform(-5.0, 5.0)),
            )
            x = float(rng.uniform(-8.0, 8.0))
            if abs(x - mf.c) < 1e-3:
                continue
            analytic = rk.gbell_grad(x, mf)
            for idx, name in enumerate("abc"):
                h = 1e-6 * max(1.0, abs(getattr(mf, name)))
                bumped = {"a": mf.a, "b": mf.b, "c": mf.c}
                bumped[name] += h
                plus = rk.gbell_eval(x, rk.BellMF(**bumped))
                bumped[name] -= 2 * h
                minus = rk.gbell_eval(x, rk.BellMF(**bumped))
                fd = (plus - minus) / (2 * h)
                if abs(analytic[idx]) > 1e-6:
                    assert abs(fd - analytic[idx]) / abs(analytic[idx]) < 1e-4
                else:
                    # below this scale the central difference is all rounding
                    assert abs(fd - analytic[idx]) < 1e-6

    def test_extreme_inputs_stay_finite(self):
        mf = rk.BellMF(a=1e-3, b=6.0, c=0.0)
        grads = rk.gbell_grad(np.array([1e9, -1e9, 0.0]), mf)
        for g in grads:
            assert np.isfinite(g).all()

    def test_overflowed_membership_gives_exact_zero_gradient(self):
        mf = rk.BellMF(a=1e-3, b=20.0, c=0.0)
        grads = rk.gbell_grad(np.array([1e9, -1e9]), mf)
        for g in grads:
            assert (g == 0.0).all()


class TestInitGrid:
    def test_two_mf_layout(self):
        model = rk.init_grid([(0.0, 10.0)], [2])
        (mf0, mf1), = model.mfs
        assert (mf0.c, mf1.c) == (0.0, 10.0)
        assert mf0.a == mf1.a == 5.0
        assert mf0.b == mf1.b == 2.0

    def test_table_counts_four_inputs_two_mfs(self):
        model = rk.init_grid([(0, 1)] * 4, [2] * 4)
        assert model.n_rules == 16
        assert model.n_linear_params == 80
        assert model.n_premise_params == 24

    def test_counts_four_inputs_three_mfs(self):
        model = rk.init_grid([(0, 1)] * 4, [3] * 4)
        assert model.n_rules == 81
        assert model.n_linear_params == 405
        assert model.n_premise_params == 36

    def test_degenerate_range(self):
        with pytest.raises(DegenerateRange):
            rk.init_grid([(5.0, 5.0)], [2])

    def test_consequents_start_zero(self):
        model = rk.init_grid([(0, 1)] * 4, [2] * 4)
        assert (model.consequents == 0.0).all()

    def test_three_mf_centers_cover_range(self):
        model = rk.init_grid([(2.0, 8.0)], [3])
        centers = [mf.c for mf in model.mfs[0]]
        assert centers == [2.0, 5.0, 8.0]
        assert all(mf.a == 1.5 for mf in model.mfs[0])


class TestForward:
    def test_zero_consequents_give_zero(self):
        model = rk.init_grid([(0, 1)] * 4, [2] * 4)
        rng = np.random.default_rng(0)
        for _ in range(10):
            assert rk.forward(model, rng.uniform(-1, 2, 4)).y == 0.0

    def test_degenerate_single_rule_model(self):
        # one input, one MF: normalization collapses and y = p*x + r exactly
        p, r = 3.5, -1.25
        model = rk.AnfisModel(
            mfs=((rk.BellMF(a=1.0, b=2.0, c=0.0),),),
            consequents=np.array([[p, r]]),
            input_ranges=((0.0, 1.0),),
        )
        for x in (0.0, 0.5, 2.0, -3.0):
            trace = rk.forward(model, [x])
            assert trace.w_norm.tolist() == [1.0]
            assert trace.y == p * x + r

    def test_matches_naive_loop_oracle(self):
        rng = np.random.default_rng(42)
        model = random_model(rng)
        for _ in range(10):
            x = rng.uniform(-6, 6, 4)
            assert rk.forward(model, x).y == naive_forward(model, x)

    def test_trace_invariants(self):
        rng = np.random.default_rng(5)
        model = random_model(rng)
        for _ in range(50):
            trace = rk.forward(model, rng.uniform(-6, 6, 4))
            assert abs(float(trace.w_norm.sum()) - 1.0) <= 1e-12
            assert ((trace.w_norm >= 0) & (trace.w_norm <= 1)).all()
            assert trace.w.shape == (16,)
            expected = trace.w / trace.w.sum()
            np.testing.assert_allclose(trace.w_norm, expected, rtol=1e-15)

    def test_predict_batch_matches_forward(self):
        rng = np.random.default_rng(9)
        model = random_model(rng)
        X = rng.uniform(-6, 6, size=(40, 4))
        ys = rk.predict_batch(model, X)
        for k in range(40):
            assert rk.forward(model, X[k]).y == ys[k]


class TestFitConsequents:
    def test_zero_targets_give_zero_consequents(self):
        rng = np.random.default_rng(1)
        model = random_model(rng)
        X = rng.uniform(-5, 5, size=(100, 4))
        fitted = rk.fit_consequents(model, rk.Batch(X, np.zeros(100)))
        assert (fitted.consequents == 0.0).all()

    def test_generate_and_recover(self):
        rng = np.random.default_rng(2)
        model = random_model(rng)
        X = rng.uniform(-5, 5, size=(500, 4))
        targets = rk.predict_batch(model, X)
        blank = rk.AnfisModel(
            mfs=model.mfs, consequents=np.zeros_like(model.consequents),
            input_ranges=model.input_ranges,
        )
        fitted = rk.fit_consequents(blank, rk.Batch(X, targets))
        err = np.linalg.norm(fitted.consequents - model.consequents)
        assert err / np.linalg.norm(model.consequents) < 1e-8

    def test_solve_never_increases_sse(self):
        rng = np.random.default_rng(3)
        model = random_model(rng)
        X = rng.uniform(-5, 5, size=(120, 4))
        batch = rk.Batch(X, rng.normal(size=120) * 10)
        fitted = rk.fit_consequents(model, batch)
        assert batch_sse(fitted, batch) <= batch_sse(model, batch)

    def test_empty_batch(self):
        model = rk.init_grid([(0, 1)] * 4, [2] * 4)
        with pytest.raises(EmptyBatch):
            rk.fit_consequents(model, rk.Batch(np.empty((0, 4)), np.empty(0)))


class TestPremiseGradient:
    def test_zero_residuals_give_zero_gradient(self):
        rng = np.random.default_rng(4)
        model = random_model(rng)
        X = rng.uniform(-5, 5, size=(60, 4))
        grads = rk.premise_gradient(model, rk.Batch(X, rk.predict_batch(model, X)))
        assert all((g == 0.0).all() for g in grads)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(6)
        for _ in range(10):
            model = random_model(rng)
            X = rng.uniform(-6, 6, size=(25, 4))
            batch = rk.Batch(X, rng.normal(size=25) * 5)
            grads = rk.premise_gradient(model, batch)
            sse0 = batch_sse(model, batch)
            for i in range(4):
                for j in range(2):
                    mf = model.mfs[i][j]
                    for idx, name in enumerate("abc"):
                        h = 1e-6 * max(1.0, abs(getattr(mf, name)))
                        fd = (
                            batch_sse(perturb_mf(model, i, j, name, h), batch)
                            - batch_sse(perturb_mf(model, i, j, name, -h), batch)
                        ) / (2 * h)
                        analytic = float(grads[i][j, idx])
                        if abs(analytic) < 1e-12 * sse0:
                            continue
                        assert abs(fd - analytic) / abs(analytic) < 1e-4

    def test_duplicating_batch_doubles_gradient_exactly(self):
        rng = np.random.default_rng(7)
        model = random_model(rng)
        X = rng.uniform(-5, 5, size=(33, 4))
        T = rng.normal(size=33)
        g1 = rk.premise_gradient(model, rk.Batch(X, T))
        g2 = rk.premise_gradient(
            model, rk.Batch(np.vstack([X, X]), np.concatenate([T, T]))
        )
        for a, b in zip(g1, g2):
            assert (2.0 * a == b).all()

    def test_empty_batch(self):
        model = rk.init_grid([(0, 1)] * 4, [2] * 4)
        with pytest.raises(EmptyBatch):
            rk.premise_gradient(model, rk.Batch(np.empty((0, 4)), np.empty(0)))


class TestTrainEpoch:
    def test_perfect_fit_freezes_premises(self):
        # zero targets give exactly-zero consequents, residuals, and gradient,
        # so the premise update is a bitwise no-op
        rng = np.random.default_rng(8)
        model = random_model(rng)
        X = rng.uniform(-5, 5, size=(300, 4))
        stepped, train_rmse = rk.train_epoch(model, rk.Batch(X, np.zeros(300)), step=0.5)
        assert train_rmse == 0.0
        assert stepped.mfs == model.mfs

    def test_reproducible_targets_fit_to_machine_precision(self):
        rng = np.random.default_rng(8)
        model = random_model(rng)
        X = rng.uniform(-5, 5, size=(300, 4))
        targets = rk.predict_batch(model, X)
        _, train_rmse = rk.train_epoch(model, rk.Batch(X, targets), step=0.5)
        assert train_rmse < 1e-8

    def test_zero_step_changes_only_consequents(self):
        rng = np.random.default_rng(9)
        model = random_model(rng)
        X = rng.uniform(-5, 5, size=(100, 4))
        batch = rk.Batch(X, rng.normal(size=100))
        stepped, _ = rk.train_epoch(model, batch, step=0.0)
        assert stepped.mfs == model.mfs
        assert not (stepped.consequents == model.consequents).all()

    def test_reported_rmse_recomputed_with_metrics_module(self):
        rng = np.random.default_rng(10)
        model = random_model(rng)
        X = rng.uniform(-5, 5, size=(80, 4))
        batch = rk.Batch(X, rng.normal(size=80) * 3)
        stepped, train_rmse = rk.train_epoch(model, batch, step=0.1)
        post_fit = rk.AnfisModel(
            mfs=model.mfs, consequents=stepped.consequents, input_ranges=model.input_ranges
        )
        recomputed = rk.rmse(batch.targets, rk.predict_batch(post_fit, batch.inputs))
        assert train_rmse == pytest.approx(recomputed, rel=1e-12)

    def test_step_moves_premises_by_step_length(self):
        rng = np.random.default_rng(12)
        model = random_model(rng)
        X = rng.uniform(-5, 5, size=(90, 4))
        batch = rk.Batch(X, rng.normal(size=90) * 4)
        step = 0.01
        stepped, _ = rk.train_epoch(model, batch, step=step)
        fitted = rk.AnfisModel(
            mfs=model.mfs, consequents=stepped.consequents, input_ranges=model.input_ranges
        )
        before = flatten_gradient(
            [np.array([[mf.a, mf.b, mf.c] for mf in per]) for per in fitted.mfs]
        )
        after = flatten_gradient(
            [np.array([[mf.a, mf.b, mf.c] for mf in per]) for per in stepped.mfs]
        )
        # no clamp hit in this configuration, so the displacement is exact
        assert np.linalg.norm(after - before) == pytest.approx(step, rel=1e-9)

    def test_clamps_keep_parameters_legal(self):
        model = rk.init_grid([(0.0, 1.0)] * 2, [2] * 2)
        rng = np.random.default_rng(13)
        X = rng.uniform(0, 1, size=(50, 2))
        batch = rk.Batch(X, rng.normal(size=50))
        current = model
        for _ in range(5):
            current, _ = rk.train_epoch(current, batch, step=5.0)  # huge step
        for i, per_input in enumerate(current.mfs):
            lo, hi = current.input_ranges[i]
            for mf in per_input:
                assert mf.a >= 1e-9 * (hi - lo)
                assert mf.b >= 1.0


class TestAdaptStep:
    CFG = rk.TrainConfig(epochs=10)

    def test_four_decreases_increase_step(self):
        assert rk.adapt_step([10, 9, 8, 7], 1.0, self.CFG) == pytest.approx(1.1)

    def test_oscillation_decreases_step(self):
        assert rk.adapt_step([10, 8, 9, 7, 8], 1.0, self.CFG) == pytest.approx(0.9)

    def test_short_history_unchanged(self):
        assert rk.adapt_step([10, 9], 1.0, self.CFG) == 1.0

    def test_mixed_pattern_unchanged(self):
        # two decreases then an increase: neither monotone nor alternating
        assert rk.adapt_step([10, 9, 8, 8.5], 1.0, self.CFG) == 1.0

    def test_down_up_down_counts_as_oscillation(self):
        assert rk.adapt_step([10, 9, 9.5, 9.4], 1.0, self.CFG) == pytest.approx(0.9)

    def test_plateau_unchanged(self):
        assert rk.adapt_step([5, 5, 5, 5], 1.0, self.CFG) == 1.0

    def test_reset_after_adjustment_in_training_loop(self, monkeypatch):
        scripted = [10.0, 9.0, 8.0, 7.0, 6.0, 5.0, 4.0, 3.0, 2.0, 1.0]
        calls = {"n": 0}

        def fake_epoch(model, batch, step):
            value = scripted[calls["n"]]
            calls["n"] += 1
            return model, value

        monkeypatch.setattr(anfis_mod, "train_epoch", fake_epoch)
        monkeypatch.setattr(anfis_mod, "_batch_rmse", lambda model, batch: 1.0)
        model = rk.init_grid([(0, 1)] * 4, [2] * 4)
        batch = rk.Batch(np.zeros((1, 4)), np.zeros(1))
        _, history = rk.train(model, batch, batch, rk.TrainConfig(epochs=10, initial_step=1.0))
        steps = [r.step for r in history.records]
        expected = [1.0] * 4 + [1.1] * 4 + [1.1 * 1.1] * 2
        assert steps == pytest.approx(expected)


class TestTrain:
    def test_zero_epochs(self):
        rng = np.random.default_rng(14)
        model = random_model(rng)
        X = rng.uniform(-5, 5, size=(30, 4))
        batch = rk.Batch(X, rng.normal(size=30))
        best, history = rk.train(model, batch, batch, rk.TrainConfig(epochs=0))
        assert best is model
        assert history.records == ()
        assert history.best_epoch is None

    def test_learning_improves_on_nonlinear_data(self):
        rng = np.random.default_rng(15)
        X = rng.uniform(-3, 3, size=(400, 4))
        targets = X[:, 0] * X[:, 1] + np.sin(X[:, 2]) + 0.2 * X[:, 3] ** 2
        ranges = [(-3.0, 3.0)] * 4
        model = rk.init_grid(ranges, [2] * 4)
        half = 200
        train_batch = rk.Batch(X[:half], targets[:half])
        check_batch = rk.Batch(X[half:], targets[half:])
        best, history = rk.train(model, train_batch, check_batch, rk.TrainConfig(epochs=25))
        assert history.records[-1].train_rmse < history.records[0].train_rmse

    def test_best_epoch_is_argmin_of_check_rmse(self):
        rng = np.random.default_rng(16)
        X = rng.uniform(-3, 3, size=(200, 4))
        targets = X[:, 0] - X[:, 1] * X[:, 3]
        model = rk.init_grid([(-3.0, 3.0)] * 4, [2] * 4)
        _, history = rk.train(
            model, rk.Batch(X[:100], targets[:100]), rk.Batch(X[100:], targets[100:]),
            rk.TrainConfig(epochs=12),
        )
        checks = [r.check_rmse for r in history.records]
        assert history.best_epoch == int(np.argmin(checks))

    def test_tolerance_stops_early(self):
        rng = np.random.default_rng(17)
        model = random_model(rng)
        X = rng.uniform(-5, 5, size=(50, 4))
        batch = rk.Batch(X, rng.normal(size=50))
        _, history = rk.train(
            model, batch, batch, rk.TrainConfig(epochs=50, error_tolerance=1e12)
        )
        assert len(history.records) == 1

    def test_deterministic(self):
        rng = np.random.default_rng(18)
        X = rng.uniform(-3, 3, size=(150, 4))
        targets = X[:, 0] * X[:, 1] + X[:, 2]
        model = rk.init_grid([(-3.0, 3.0)] * 4, [2] * 4)
        cfg = rk.TrainConfig(epochs=8)
        tb, cb = rk.Batch(X[:75], targets[:75]), rk.Batch(X[75:], targets[75:])
        best1, hist1 = rk.train(model, tb, cb, cfg)
        best2, hist2 = rk.train(model, tb, cb, cfg)
        assert best1.mfs == best2.mfs
        assert (best1.consequents == best2.consequents).all()
        assert hist1 == hist2

    def test_empty_batches_rejected(self):
        model = rk.init_grid([(0, 1)] * 4, [2] * 4)
        empty = rk.Batch(np.empty((0, 4)), np.empty(0))
        full = rk.Batch(np.zeros((3, 4)), np.zeros(3))
        with pytest.raises(EmptyBatch):
            rk.train(model, empty, full, rk.TrainConfig(epochs=1))
        with pytest.raises(EmptyBatch):
            rk.train(model, full, empty, rk.TrainConfig(epochs=1))


class TestPredictSeries:
    def test_masking_exactly_leading_168_trailing_24(self):
        for n in (300, 500):
            series = synthetic_series(n)
            dataset = rk.build_dataset(series, rk.FactorKind.WEEKLY_SYSTEM)
            model = rk.init_grid([(0, 1), (0, 2000), (0, 2000), (0, 2000)], [2] * 4)
            estimate = rk.predict_series(model, dataset)
            missing = np.isnan(estimate)
            assert missing[:168].all()
            assert missing[n - 24:].all()
            assert not missing[168: n - 24].any()

    def test_zero_consequents_give_zero_entries(self):
        series = synthetic_series(300)
        dataset = rk.build_dataset(series, rk.FactorKind.DAILY_SYSTEM)
        model = rk.init_grid([(0, 1), (0, 2000), (0, 2000), (0, 2000)], [2] * 4)
        estimate = rk.predict_series(model, dataset)
        assert (estimate[168: 300 - 24] == 0.0).all()

    def test_entries_agree_with_forward(self):
        rng = np.random.default_rng(19)
        series = synthetic_series(260)
        dataset = rk.build_dataset(series, rk.FactorKind.WEEKLY_SYSTEM)
        model = random_model(rng)
        estimate = rk.predict_series(model, dataset)
        for t in dataset.valid_indices()[:20]:
            x = dataset.inputs_at(np.array([t]))[0]
            assert estimate[t] == rk.forward(model, x).y


class TestPersistence:
    def _trained(self):
        rng = np.random.default_rng(20)
        X = rng.uniform(-3, 3, size=(120, 4))
        targets = X[:, 0] * X[:, 1] - X[:, 2]
        model = rk.init_grid([(-3.0, 3.0)] * 4, [2] * 4)
        return rk.train(
            model, rk.Batch(X[:60], targets[:60]), rk.Batch(X[60:], targets[60:]),
            rk.TrainConfig(epochs=4),
        )

    def test_round_trip_is_byte_identical(self):
        best, history = self._trained()
        blob = rk.save_model(best, history)
        model2, history2 = rk.load_model(blob)
        assert rk.save_model(model2, history2) == blob

    def test_round_trip_preserves_predictions_bitwise(self):
        best, history = self._trained()
        model2, _ = rk.load_model(rk.save_model(best, history))
        rng = np.random.default_rng(21)
        X = rng.uniform(-5, 5, size=(1000, 4))
        assert (rk.predict_batch(model2, X) == rk.predict_batch(best, X)).all()

    def test_truncated_stream(self):
        best, history = self._trained()
        blob = rk.save_model(best, history)
        with pytest.raises(MalformedModelFile):
            rk.load_model(blob[: len(blob) // 2])

    def test_garbage_stream(self):
        with pytest.raises(MalformedModelFile):
            rk.load_model(b"\xff\xfe not a model")
        with pytest.raises(MalformedModelFile):
            rk.load_model(b"[1, 2, 3]")

    def test_version_mismatch(self):
        best, history = self._trained()
        text = rk.save_model(best, history).decode()
        bumped = text.replace('"format_version": 1', '"format_version": 99')
        with pytest.raises(VersionMismatch):
            rk.load_model(bumped.encode())

    def test_round_tripped_counts_match_reference_table(self):
        best, history = self._trained()
        model2, _ = rk.load_model(rk.save_model(best, history))
        assert model2.n_rules == 16
        assert model2.n_linear_params == 80
        assert model2.n_premise_params == 24

    def test_negative_zero_survives(self):
        model = rk.AnfisModel(
            mfs=((rk.BellMF(a=1.0, b=2.0, c=-0.0),),),
            consequents=np.array([[-0.0, 1.0]]),
            input_ranges=((0.0, 1.0),),
        )
        history = rk.TrainHistory(records=(), best_epoch=None, config=rk.TrainConfig())
        model2, _ = rk.load_model(rk.save_model(model, history))
        assert math.copysign(1.0, model2.mfs[0][0].c) == -1.0
        assert math.copysign(1.0, float(model2.consequents[0, 0])) == -1.0


class TestStructuralInvariants:
    @pytest.mark.parametrize("n,m", [(4, 2), (4, 3), (2, 2), (3, 2), (2, 3)])
    def test_count_formulas(self, n, m):
        model = rk.init_grid([(0.0, 1.0)] * n, [m] * n)
        assert model.n_rules == m ** n
        assert model.n_linear_params == m ** n * (n + 1)
        assert model.n_premise_params == 3 * n * m

    def test_rule_grid_covers_product(self):
        model = rk.init_grid([(0.0, 1.0)] * 3, [2, 3, 2])
        grid = model.rule_grid
        assert grid.shape == (12, 3)
        assert len({tuple(row) for row in grid.tolist()}) == 12

    def test_batch_rmse_helper_matches_metrics(self):
        rng = np.random.default_rng(22)
        model = random_model(rng)
        X = rng.uniform(-5, 5, size=(64, 4))
        batch = rk.Batch(X, rng.normal(size=64))
        assert _batch_rmse(model, batch) == pytest.approx(
            rk.rmse(batch.targets, rk.predict_batch(model, batch.inputs)), rel=1e-12
        )
