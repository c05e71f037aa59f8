import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from shufreg import (
    Dataset,
    DegenerateMeanError,
    EstimatorChoice,
    FitConfig,
    LossSpec,
    auto_kind,
    estimate,
    gaussian_noise_moments,
    ls_loss,
    projection_estimate,
    sm_d1,
    sm_d2_analytic,
)
from shufreg.bench import make_shuffled_instance
from shufreg.synth import NoiseSpec

QUICK_FIT = FitConfig(starts=4, step=0.02, convergence_threshold=1e-8, max_iters=1500, seed=0)


def moment_residuals(ds, w):
    """Residuals of the two moment constraints the d=2 closed form solves."""
    z = ds.features @ np.asarray(w)
    return (
        abs(float(np.mean(z)) - float(np.mean(ds.labels))),
        abs(float(np.mean(z**2)) - float(np.mean(ds.labels**2))),
    )


class TestSmD1:
    def test_exact_ratio_any_order(self):
        ds = Dataset(np.array([[3.0], [1.0], [2.0]]), np.array([4.0, 6.0, 2.0]))
        assert sm_d1(ds) == pytest.approx([2.0])

    def test_ratio_of_sums(self):
        ds = Dataset(np.array([[1.0], [1.0]]), np.array([3.0, 1.0]))
        assert sm_d1(ds) == pytest.approx([2.0])

    def test_zero_sum_degenerate(self):
        ds = Dataset(np.array([[-1.0], [1.0]]), np.array([1.0, 2.0]))
        with pytest.raises(DegenerateMeanError):
            sm_d1(ds)


class TestSmD2Analytic:
    def noiseless_instance(self, seed=0, n=60, means=(1.0, 1.5), w0=(2.0, 3.0)):
        shuffled, _, _ = make_shuffled_instance(
            n, 2, w0, NoiseSpec(sigma=0.0), seed=seed, means=np.asarray(means)
        )
        return shuffled, np.asarray(w0, dtype=float)

    def test_recovers_true_weights(self):
        ds, w0 = self.noiseless_instance()
        cands = sm_d2_analytic(ds)
        assert cands.best == pytest.approx(w0, abs=1e-9)

    def test_both_candidates_satisfy_constraints(self):
        # Back-substitution: every root of the quadratic must satisfy both
        # moment equations to rounding error.
        ds, _ = self.noiseless_instance(seed=5)
        cands = sm_d2_analytic(ds)
        assert len(cands.candidates) == 2
        for w in cands.candidates:
            first, second = moment_residuals(ds, w)
            assert first < 1e-9 and second < 1e-9

    def test_candidates_sorted_by_disambiguation_loss(self):
        ds, _ = self.noiseless_instance(seed=9)
        cands = sm_d2_analytic(ds)
        assert list(cands.losses) == sorted(cands.losses)
        direct = [ls_loss(ds.features, ds.labels, w) for w in cands.candidates]
        assert direct == pytest.approx(list(cands.losses))

    def test_noise_variance_adjustment_recenters(self):
        # With heavy label noise the unadjusted second moment overshoots;
        # subtracting the true variance restores the true weights (the
        # asymmetric design keeps the two roots distinguishable).
        w0 = np.array([2.0, 1.0])
        shuffled, _, sigma = make_shuffled_instance(
            200_000, 2, w0, NoiseSpec(nsr_db=5.0), seed=3,
            means=np.array([1.0, 0.4]), stds=np.array([1.0, 1.3]),
        )
        raw = sm_d2_analytic(shuffled)
        adjusted = sm_d2_analytic(shuffled, noise_variance=sigma**2)
        err_raw = min(np.linalg.norm(c - w0) for c in raw.candidates)
        assert np.linalg.norm(adjusted.best - w0) < 0.08 < err_raw

    def test_noise_variance_adjustment_fixes_norm_inflation(self):
        # For a sign-symmetric truth the two roots are mirror images and
        # cannot be told apart, but the adjusted magnitude is still right.
        w0 = np.array([1.0, -1.0])
        shuffled, _, sigma = make_shuffled_instance(
            200_000, 2, w0, NoiseSpec(nsr_db=5.0), seed=3
        )
        raw_norm = np.linalg.norm(sm_d2_analytic(shuffled).best)
        adj_norm = np.linalg.norm(sm_d2_analytic(shuffled, noise_variance=sigma**2).best)
        true_norm = np.linalg.norm(w0)
        assert abs(adj_norm - true_norm) < 0.05
        assert raw_norm > true_norm + 0.5

    def test_column_swap_handles_zero_first_sum(self):
        # Column 0 sums to exactly zero; the solver must pivot on column 1
        # and un-swap the solution.
        x = np.array([[-1.0, 1.0], [0.0, 2.0], [1.0, 3.0]])
        w0 = np.array([2.0, 1.0])
        ds = Dataset(x, x @ w0)
        cands = sm_d2_analytic(ds)
        assert any(np.allclose(c, w0, atol=1e-9) for c in cands.candidates)

    def test_both_sums_zero_degenerate(self):
        ds = Dataset(
            np.array([[-1.0, -2.0], [1.0, 1.0], [0.0, 1.0]]), np.array([1.0, 2.0, 3.0])
        )
        with pytest.raises(DegenerateMeanError):
            sm_d2_analytic(ds)

    def test_wrong_dimension(self):
        ds = Dataset(np.ones((3, 1)), np.ones(3))
        with pytest.raises(ValueError):
            sm_d2_analytic(ds)


class TestAutoRule:
    def test_low_dimension_uses_moments(self):
        assert auto_kind(1, 1) == "sm"
        assert auto_kind(2, 1) == "sm"

    def test_many_replications_use_moments(self):
        assert auto_kind(5, 15) == "sm"

    def test_otherwise_projection(self):
        assert auto_kind(5, 4) == "p1"

    @given(st.integers(1, 12), st.integers(1, 40))
    def test_pure_function_of_d_and_R(self, d, R):
        expected = "sm" if d <= 2 or R >= 3 * d else "p1"
        assert auto_kind(d, R) == expected


class TestProjection:
    def test_noiseless_reaches_tiny_loss(self):
        shuffled, _, _ = make_shuffled_instance(
            50, 3, [1.0, -2.0, 0.5], NoiseSpec(sigma=0.0), seed=10
        )
        res = projection_estimate(shuffled, 1, QUICK_FIT)
        assert res.loss < 1e-6

    def test_d1_matches_closed_form(self):
        shuffled, _, _ = make_shuffled_instance(40, 1, [1.7], NoiseSpec(sigma=0.3), seed=11)
        res = projection_estimate(shuffled, 1, QUICK_FIT)
        assert res.weights == pytest.approx(sm_d1(shuffled), abs=1e-9)

    @given(st.integers(0, 2**32))
    def test_first_moment_identity(self, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(1, 5))
        shuffled, _, _ = make_shuffled_instance(
            30, d, rng.normal(0, 1, d), NoiseSpec(sigma=0.5), seed=seed
        )
        cfg = FitConfig(starts=2, step=0.02, convergence_threshold=1e-6, max_iters=300, seed=seed)
        res = projection_estimate(shuffled, 1, cfg)
        gap = abs(np.mean(shuffled.features @ res.weights) - np.mean(shuffled.labels))
        assert gap < 1e-9

    def test_p2_runs_and_scores_by_sorted_loss(self):
        shuffled, _, _ = make_shuffled_instance(
            60, 3, [1.0, 1.0, -1.0], NoiseSpec(sigma=0.0), seed=12
        )
        res = projection_estimate(shuffled, 2, QUICK_FIT)
        assert res.loss == pytest.approx(
            ls_loss(shuffled.features, shuffled.labels, res.weights), rel=1e-9
        )

    def test_invalid_projection_dim(self):
        ds = Dataset(np.ones((4, 1)), np.ones(4))
        with pytest.raises(ValueError):
            projection_estimate(ds, 2, QUICK_FIT)


class TestEstimateDispatch:
    def test_auto_resolution_reported(self):
        shuffled, _, _ = make_shuffled_instance(
            45, 5, np.ones(5), NoiseSpec(sigma=0.1), seed=13, R=15
        )
        res = estimate(shuffled, EstimatorChoice(kind="auto", fit_config=QUICK_FIT))
        assert res.diagnostics["estimator"] == "sm"
        assert res.diagnostics["requested"] == "auto"

    def test_auto_low_r_resolves_projection(self):
        shuffled, _, _ = make_shuffled_instance(
            40, 5, np.ones(5), NoiseSpec(sigma=0.1), seed=14, R=4
        )
        res = estimate(shuffled, EstimatorChoice(kind="auto", fit_config=QUICK_FIT))
        assert res.diagnostics["estimator"] == "p1"

    def test_sm_closed_form_skipped_with_replications(self):
        shuffled, _, _ = make_shuffled_instance(
            40, 2, [1.0, 2.0], NoiseSpec(sigma=0.0), seed=15, R=4
        )
        res = estimate(shuffled, EstimatorChoice(kind="sm", fit_config=QUICK_FIT))
        assert res.diagnostics["path"] == "descent"

    def test_sm_closed_form_skipped_with_lambda2(self):
        shuffled, _, _ = make_shuffled_instance(40, 1, [2.0], NoiseSpec(sigma=0.0), seed=16)
        choice = EstimatorChoice(
            kind="sm", loss_spec=LossSpec(lambda2=0.1), fit_config=QUICK_FIT
        )
        res = estimate(shuffled, choice)
        assert res.diagnostics["path"] == "descent"

    def test_sm_noise_moments_use_closed_form_d2(self):
        shuffled, _, sigma = make_shuffled_instance(
            500, 2, [1.0, -1.0], NoiseSpec(nsr_db=0.0), seed=17
        )
        choice = EstimatorChoice(
            kind="sm", loss_spec=LossSpec(noise_moments=gaussian_noise_moments(sigma, 2))
        )
        res = estimate(shuffled, choice)
        assert res.diagnostics["path"] == "closed_form_d2"

    def test_identifiability_warning(self):
        shuffled, _, _ = make_shuffled_instance(
            30, 3, [1.0, 1.0, 1.0], NoiseSpec(sigma=0.1), seed=18
        )
        choice = EstimatorChoice(
            kind="sm",
            loss_spec=LossSpec(K=2),
            fit_config=FitConfig(starts=1, max_iters=5, seed=0),
        )
        with pytest.warns(UserWarning, match="identify"):
            estimate(shuffled, choice)

    def test_ls_final_loss_not_above_truth(self):
        # The optimizer may legitimately beat the generating weights.
        shuffled, _, _ = make_shuffled_instance(
            50, 2, [1.0, -1.0], NoiseSpec(sigma=0.5), seed=19
        )
        res = estimate(
            shuffled,
            EstimatorChoice(
                kind="ls",
                fit_config=FitConfig(starts=6, step=0.005, convergence_threshold=1e-9,
                                     max_iters=3000, seed=1),
            ),
        )
        truth_loss = ls_loss(shuffled.features, shuffled.labels, [1.0, -1.0])
        assert res.loss <= truth_loss + 1e-9

    def test_ols_on_aligned_data(self):
        _, aligned, _ = make_shuffled_instance(50, 2, [1.0, 2.0], NoiseSpec(sigma=0.0), seed=20)
        res = estimate(aligned, EstimatorChoice(kind="ols"))
        assert res.weights == pytest.approx([1.0, 2.0], abs=1e-9)

    def test_emd_ks_smalld_paths_run(self):
        shuffled, _, _ = make_shuffled_instance(30, 2, [1.0, 1.0], NoiseSpec(sigma=0.0), seed=21)
        quick = FitConfig(starts=2, step=0.05, convergence_threshold=1e-7, max_iters=300, seed=2)
        for kind in ("emd", "ks", "smalld"):
            res = estimate(shuffled, EstimatorChoice(kind=kind, fit_config=quick))
            assert np.all(np.isfinite(res.weights))

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError, match="unknown estimator"):
            EstimatorChoice(kind="ridge")

    def test_deterministic_fit_results(self):
        shuffled, _, _ = make_shuffled_instance(
            40, 3, [1.0, 0.5, -0.5], NoiseSpec(sigma=0.2), seed=22
        )
        choice = EstimatorChoice(kind="p1", fit_config=QUICK_FIT)
        a = estimate(shuffled, choice)
        b = estimate(shuffled, choice)
        assert a.weights.tobytes() == b.weights.tobytes()
        assert a.loss == b.loss
