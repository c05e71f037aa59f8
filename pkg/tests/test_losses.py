import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from shufreg import (
    LossSpec,
    MomentSummary,
    build_objective,
    emd_loss,
    gaussian_noise_moments,
    ks_loss,
    ls_loss,
    moment_weight,
    sample_moment,
    sm_loss,
    small_d_loss,
)
from shufreg.bench import make_shuffled_instance
from shufreg.synth import NoiseSpec

# ---------------------------------------------------------------------------
# Independent oracles. These enumerate or scan directly and never share code
# with the loss implementations they check.
# ---------------------------------------------------------------------------


def perm_min_squared_error(x, y, w):
    """Minimum of |pi(x w) - y|^2 over every permutation pi (n <= 8)."""
    z = list(np.asarray(x) @ np.asarray(w))
    best = math.inf
    for perm in itertools.permutations(range(len(y))):
        total = sum((z[p] - yi) ** 2 for p, yi in zip(perm, y))
        best = min(best, total)
    return best


def assignment_min_abs_cost(a, b):
    """Minimum over perfect matchings of mean |a_i - b_perm(i)| (n <= 6)."""
    best = math.inf
    for perm in itertools.permutations(range(len(b))):
        cost = sum(abs(a[i] - b[p]) for i, p in enumerate(perm)) / len(a)
        best = min(best, cost)
    return best


def ks_scan(a, b):
    """Two-sample KS statistic by an O(n^2) scan of the merged support."""
    support = list(a) + list(b)
    best = 0.0
    for t in support:
        fa = sum(1 for v in a if v <= t) / len(a)
        fb = sum(1 for v in b if v <= t) / len(b)
        best = max(best, abs(fa - fb))
    return best


def random_instance(rng, n, d, R=1):
    x = rng.normal(0, 1, (n, d))
    y = rng.normal(0, 1, n)
    if R == 1:
        rep = None
    else:
        rep = np.sort(rng.integers(0, R, n))
        rep[:R] = np.arange(R)  # guarantee every id occurs
        rep = np.sort(rep)
    w = rng.normal(0, 1, d)
    return x, y, w, rep


# ---------------------------------------------------------------------------
# sample_moment / moment_weight / noise moments
# ---------------------------------------------------------------------------


class TestSampleMoment:
    def test_mean(self):
        assert sample_moment([1.0, 2.0, 3.0], 1) == pytest.approx(2.0)

    def test_second(self):
        assert sample_moment([1.0, 2.0, 3.0], 2) == pytest.approx(14 / 3)

    def test_zeroth(self):
        assert sample_moment([5.0, -2.0], 0) == 1.0


class TestMomentWeight:
    def test_inverse_factorial(self):
        assert moment_weight(3) == pytest.approx(1 / 6)

    def test_first_order(self):
        assert moment_weight(1) == 1.0

    def test_uniform(self):
        assert moment_weight(5, "uniform") == 1.0

    def test_custom_list(self):
        assert moment_weight(2, [0.5, 0.25]) == 0.25

    def test_custom_list_too_short(self):
        with pytest.raises(ValueError):
            moment_weight(3, [1.0, 1.0])


class TestGaussianNoiseMoments:
    def test_unit_sigma(self):
        assert gaussian_noise_moments(1.0, 4) == (1.0, 0.0, 1.0, 0.0, 3.0)

    def test_scaling(self):
        nm = gaussian_noise_moments(2.0, 4)
        assert nm[2] == pytest.approx(4.0)
        assert nm[4] == pytest.approx(48.0)

    def test_matches_sampling(self, rng):
        e = rng.normal(0, 1.5, 400_000)
        nm = gaussian_noise_moments(1.5, 4)
        for k in (2, 3, 4):
            assert np.mean(e**k) == pytest.approx(nm[k], abs=0.15)


# ---------------------------------------------------------------------------
# ls loss
# ---------------------------------------------------------------------------


class TestLsLoss:
    def test_matching_multisets_after_scaling(self):
        x = [[3.0], [1.0], [2.0]]
        y = [10.0, 30.0, 20.0]
        assert ls_loss(x, y, [10.0]) == 0.0

    def test_simple_sum(self):
        assert ls_loss([[1.0], [3.0]], [0.0, 0.0], [1.0]) == pytest.approx(10.0)

    def test_equals_brute_force_permutation_minimum(self, rng):
        # The sorted form must equal the minimum over all n! permutations.
        for _ in range(40):
            n = int(rng.integers(2, 8))
            d = int(rng.integers(1, 4))
            x, y, w, _ = random_instance(rng, n, d)
            expected = perm_min_squared_error(x, y, w)
            assert ls_loss(x, y, w) == pytest.approx(expected, abs=1e-12)

    def test_replications_sum_blockwise(self, rng):
        x, y, w, _ = random_instance(rng, 6, 2)
        rep = np.array([0, 0, 0, 1, 1, 1])
        split = ls_loss(x[:3], y[:3], w) + ls_loss(x[3:], y[3:], w)
        assert ls_loss(x, y, w, rep) == pytest.approx(split)

    def test_lambda2_adds_exact_penalty(self, rng):
        x, y, w, _ = random_instance(rng, 5, 2)
        base = ls_loss(x, y, w)
        assert ls_loss(x, y, w, lambda2=0.7) == pytest.approx(base + 0.7 * (w @ w))


# ---------------------------------------------------------------------------
# sm loss
# ---------------------------------------------------------------------------


class TestSmLoss:
    def test_zero_at_true_weights_noiseless(self, rng):
        for R in (1, 3):
            shuffled, _, _ = make_shuffled_instance(
                30, 2, [1.0, -2.0], NoiseSpec(sigma=0.0), seed=int(rng.integers(1e9)), R=R
            )
            for K in (1, 2, 4):
                loss = sm_loss(
                    shuffled.features,
                    shuffled.labels,
                    [1.0, -2.0],
                    LossSpec(K=K),
                    shuffled.replication_ids,
                )
                assert loss == pytest.approx(0.0, abs=1e-18)

    def test_single_moment_example(self):
        # M1 = mean([2, 4]) = 3, N1 = mean([1, 2]) = 1.5, gap^2 = 2.25.
        loss = sm_loss([[1.0], [2.0]], [1.0, 2.0], [2.0], LossSpec(K=1))
        assert loss == pytest.approx(2.25)

    def test_noise_adjustment_reduces_loss_at_truth(self):
        # Monte Carlo: with sigma=1 noise folded into the labels, the
        # adjusted moment constraints fit the truth far better than the
        # unadjusted ones.
        shuffled, _, _ = make_shuffled_instance(
            100_000, 2, [1.0, -1.0], NoiseSpec(sigma=1.0), seed=77
        )
        w0 = np.array([1.0, -1.0])
        plain = sm_loss(shuffled.features, shuffled.labels, w0, LossSpec(K=2))
        adjusted = sm_loss(
            shuffled.features,
            shuffled.labels,
            w0,
            LossSpec(K=2, noise_moments=gaussian_noise_moments(1.0, 2)),
        )
        assert adjusted < plain

    def test_noise_moments_validation(self):
        with pytest.raises(ValueError):
            LossSpec(noise_moments=(0.5, 0.0, 1.0))
        with pytest.raises(ValueError):
            LossSpec(noise_moments=(1.0, 0.5, 1.0))
        with pytest.raises(ValueError):
            LossSpec(K=4, noise_moments=(1.0, 0.0, 1.0))

    def test_moment_summary(self):
        summary = MomentSummary.from_labels(
            [1.0, 2.0, 3.0, 4.0], np.array([0, 0, 1, 1]), K=2
        )
        assert np.allclose(summary.moments, [[1.5, 2.5], [3.5, 12.5]])
        assert list(summary.sizes) == [2, 2]


# ---------------------------------------------------------------------------
# emd / ks / small-d losses
# ---------------------------------------------------------------------------


class TestEmdLoss:
    def test_identical_multisets(self):
        assert emd_loss([[1.0], [2.0]], [2.0, 1.0], [1.0]) == 0.0

    def test_unit_gaps(self):
        assert emd_loss([[0.0], [1.0]], [1.0, 2.0], [1.0]) == pytest.approx(1.0)

    def test_equals_min_cost_matching(self, rng):
        for _ in range(30):
            n = int(rng.integers(2, 7))
            x, y, w, _ = random_instance(rng, n, 2)
            expected = assignment_min_abs_cost(list(np.asarray(x) @ w), list(y))
            assert emd_loss(x, y, w) == pytest.approx(expected, abs=1e-12)


class TestKsLoss:
    def test_identical_multisets(self):
        assert ks_loss([[1.0], [2.0]], [2.0, 1.0], [1.0]) == 0.0

    def test_disjoint_singletons(self):
        assert ks_loss([[0.0]], [1.0], [1.0]) == 1.0

    def test_equals_naive_scan(self, rng):
        for _ in range(30):
            n = int(rng.integers(2, 12))
            x, y, w, _ = random_instance(rng, n, 1)
            expected = ks_scan(list(np.asarray(x) @ w), list(y))
            assert ks_loss(x, y, w) == pytest.approx(expected, abs=1e-12)


class TestSmallDLoss:
    def test_full_d_reduces_to_ls(self, rng):
        x, y, w, _ = random_instance(rng, 6, 2)
        assert small_d_loss(x, y, w, D=6) == pytest.approx(ls_loss(x, y, w))

    def test_smallest_entry_only(self):
        assert small_d_loss([[1.0], [5.0]], [2.0, 100.0], [1.0], D=1) == pytest.approx(1.0)

    def test_identical_multisets_any_d(self):
        x = [[1.0], [2.0], [3.0]]
        y = [3.0, 1.0, 2.0]
        for D in (1, 2, 3):
            assert small_d_loss(x, y, [1.0], D=D) == 0.0

    def test_d_out_of_range(self):
        with pytest.raises(ValueError):
            small_d_loss([[1.0]], [1.0], [1.0], D=2)


# ---------------------------------------------------------------------------
# Shared properties
# ---------------------------------------------------------------------------


def all_losses(x, y, w, rep):
    return {
        "ls": ls_loss(x, y, w, rep),
        "sm": sm_loss(x, y, w, LossSpec(K=3), rep),
        "emd": emd_loss(x, y, w, rep),
        "ks": ks_loss(x, y, w, rep),
        "smalld": small_d_loss(x, y, w, 1, rep),
    }


class TestSharedProperties:
    @given(st.integers(0, 2**32))
    def test_permutation_invariance_exact(self, seed):
        rng = np.random.default_rng(seed)
        x, y, w, _ = random_instance(rng, 9, 2)
        rep = np.array([0, 0, 0, 0, 1, 1, 1, 2, 2])
        base = all_losses(x, y, w, rep)
        # Permute rows independently within each replication block.
        perm = np.arange(9)
        for block in ([0, 1, 2, 3], [4, 5, 6], [7, 8]):
            perm[block] = rng.permutation(block)
        x_perm = x[perm]
        y_perm = y[np.concatenate([rng.permutation(b) for b in ([0, 1, 2, 3], [4, 5, 6], [7, 8])])]
        shuffled = all_losses(x_perm, y_perm, w, rep)
        for kind in base:
            assert shuffled[kind] == base[kind], kind

    @given(st.integers(0, 2**32))
    def test_nonnegative(self, seed):
        rng = np.random.default_rng(seed)
        x, y, w, rep = random_instance(rng, 8, 2, R=2)
        for kind, value in all_losses(x, y, w, rep).items():
            assert value >= 0.0, kind

    @given(st.integers(0, 2**32), st.floats(0.01, 10.0))
    def test_lambda2_shifts_every_kind(self, seed, lam):
        rng = np.random.default_rng(seed)
        x, y, w, _ = random_instance(rng, 6, 2)
        penalty = lam * float(w @ w)
        assert ls_loss(x, y, w, lambda2=lam) == pytest.approx(ls_loss(x, y, w) + penalty)
        assert emd_loss(x, y, w, lambda2=lam) == pytest.approx(emd_loss(x, y, w) + penalty)
        assert ks_loss(x, y, w, lambda2=lam) == pytest.approx(ks_loss(x, y, w) + penalty)
        assert small_d_loss(x, y, w, 2, lambda2=lam) == pytest.approx(
            small_d_loss(x, y, w, 2) + penalty
        )
        spec = LossSpec(K=2)
        assert sm_loss(x, y, w, spec.with_lambda2(lam)) == pytest.approx(
            sm_loss(x, y, w, spec) + penalty
        )


class TestBuildObjective:
    @given(st.integers(0, 2**32))
    def test_matches_direct_functions(self, seed):
        rng = np.random.default_rng(seed)
        x, y, _, _ = random_instance(rng, 12, 2)
        rep = np.array([0] * 6 + [1] * 6)
        specs = [
            LossSpec(kind="ls", lambda2=0.1),
            LossSpec(kind="sm", K=3, lambda2=0.05),
            LossSpec(kind="sm", K=2, noise_moments=(1.0, 0.0, 0.25)),
            LossSpec(kind="emd"),
            LossSpec(kind="ks"),
            LossSpec(kind="smalld", small_d=3),
        ]
        direct = {
            "ls": lambda w, s: ls_loss(x, y, w, rep, s.lambda2),
            "sm": lambda w, s: sm_loss(x, y, w, s, rep),
            "emd": lambda w, s: emd_loss(x, y, w, rep, s.lambda2),
            "ks": lambda w, s: ks_loss(x, y, w, rep, s.lambda2),
            "smalld": lambda w, s: small_d_loss(x, y, w, s.small_d, rep, s.lambda2),
        }
        for spec in specs:
            f = build_objective(x, y, spec, rep)
            for _ in range(3):
                w = rng.normal(0, 1, 2)
                assert f(w) == pytest.approx(direct[spec.kind](w, spec), rel=1e-12, abs=1e-12)

    def test_ls_1d_fast_path_matches_direct(self, rng):
        x = rng.normal(1, 1, (200, 1))
        y = rng.normal(0, 2, 200)
        rep = np.array([0] * 100 + [1] * 100)
        f = build_objective(x, y, LossSpec(kind="ls", lambda2=0.2), rep)
        for w in ([-1.3], [0.0], [0.8], [2.5]):
            w = np.array(w)
            assert f(w) == pytest.approx(ls_loss(x, y, w, rep, 0.2), rel=1e-12)


class TestLossSpecJson:
    def test_roundtrip(self):
        spec = LossSpec(
            kind="sm", K=4, weights="inverse_factorial",
            noise_moments=(1.0, 0.0, 1.0, 0.0, 3.0), lambda2=0.5,
        )
        back = LossSpec.from_json(spec.to_json())
        assert back == spec

    def test_documented_shape(self):
        text = '{"kind":"sm","K":4,"weights":"inverse_factorial","lambda2":0.0,"noise_moments":[1,0,1,0,3]}'
        spec = LossSpec.from_json(text)
        assert spec.K == 4 and spec.noise_moments == (1.0, 0.0, 1.0, 0.0, 3.0)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            LossSpec(kind="huber")
