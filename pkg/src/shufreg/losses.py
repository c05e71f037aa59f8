"""Order-invariant loss functions of the weights.

Every loss depends on the predictions x @ w and the labels y only through
their sorted values within each replication, so it is invariant to label
shuffling inside a replication. Losses are summed over replications with
equal weight and may carry a uniform L2 penalty lambda2 * |w|^2.

Kinds:
  ls      squared gap between the two sorted vectors
  sm      weighted squared gaps between per-replication sample moments,
          optionally adjusted for known noise moments
  emd     mean absolute gap between the sorted vectors (1-D earth mover's
          distance between equal-size empirical distributions)
  ks      two-sample Kolmogorov-Smirnov statistic
  smalld  squared gap between the D smallest entries of each side
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

LOSS_KINDS = ("ls", "sm", "emd", "ks", "smalld")

DEFAULT_SMALL_D_CAP = 10


@dataclass(frozen=True)
class LossSpec:
    """Configuration of an order-invariant loss.

    K is the highest moment order used by the sm kind; it defaults to the
    feature dimension d at fit time (the minimum needed to identify d weights
    from a single replication). weights selects the per-moment weighting f(k):
    "inverse_factorial", "uniform", or an explicit list indexed by k.
    noise_moments, when present, lists [E[E^0], ..., E[E^K]] of the noise
    variable with E[E^0] = 1 and E[E^1] = 0. small_d is the D of the smalld
    kind; it defaults to min(10, smallest replication size).
    """

    kind: str = "sm"
    K: int | None = None
    weights: str | Sequence[float] = "inverse_factorial"
    noise_moments: tuple | None = None
    lambda2: float = 0.0
    small_d: int | None = None

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}; pick one of {LOSS_KINDS}")
        if self.K is not None and self.K < 1:
            raise ValueError("K must be at least 1")
        if self.lambda2 < 0:
            raise ValueError("lambda2 must be nonnegative")
        if self.small_d is not None and self.small_d < 1:
            raise ValueError("small_d must be at least 1")
        if self.noise_moments is not None:
            nm = tuple(float(v) for v in self.noise_moments)
            if len(nm) < 2 or abs(nm[0] - 1.0) > 1e-12 or abs(nm[1]) > 1e-12:
                raise ValueError(
                    "noise_moments must start with E[E^0]=1, E[E^1]=0"
                )
            if self.K is not None and len(nm) < self.K + 1:
                raise ValueError(f"noise_moments needs K+1={self.K + 1} entries")
            object.__setattr__(self, "noise_moments", nm)
        if not isinstance(self.weights, str):
            object.__setattr__(self, "weights", tuple(float(v) for v in self.weights))

    def resolve_K(self, d: int) -> int:
        if self.K is not None:
            return self.K
        if self.noise_moments is not None:
            return len(self.noise_moments) - 1
        return d

    def to_json(self) -> str:
        obj = {"kind": self.kind, "lambda2": self.lambda2}
        if self.K is not None:
            obj["K"] = self.K
        obj["weights"] = (
            self.weights if isinstance(self.weights, str) else list(self.weights)
        )
        if self.noise_moments is not None:
            obj["noise_moments"] = list(self.noise_moments)
        if self.small_d is not None:
            obj["small_d"] = self.small_d
        return json.dumps(obj, sort_keys=True)

    @staticmethod
    def from_dict(obj: dict) -> "LossSpec":
        return LossSpec(
            kind=obj.get("kind", "sm"),
            K=obj.get("K"),
            weights=obj.get("weights", "inverse_factorial"),
            noise_moments=obj.get("noise_moments"),
            lambda2=obj.get("lambda2", 0.0),
            small_d=obj.get("small_d"),
        )

    @staticmethod
    def from_json(text: str) -> "LossSpec":
        return LossSpec.from_dict(json.loads(text))

    def with_lambda2(self, lambda2: float) -> "LossSpec":
        return replace(self, lambda2=lambda2)


@dataclass(frozen=True)
class MomentSummary:
    """Per-replication sample moments of the labels, orders 1..K."""

    moments: np.ndarray  # (R, K)
    sizes: np.ndarray  # (R,)

    @staticmethod
    def from_labels(y, replication_ids, K: int) -> "MomentSummary":
        y = np.asarray(y, dtype=float)
        blocks = _blocks(replication_ids, len(y))
        moments = np.empty((len(blocks), K))
        for r, idx in enumerate(blocks):
            yb = np.sort(y[idx])
            for k in range(1, K + 1):
                moments[r, k - 1] = np.mean(yb**k)
        sizes = np.array([len(b) for b in blocks])
        return MomentSummary(moments, sizes)


def sample_moment(v, k: int) -> float:
    """k-th sample moment (1/n) sum v_i^k; the zeroth moment is 1."""
    v = np.asarray(v, dtype=float)
    if v.size == 0:
        raise ValueError("empty vector")
    if k < 0:
        raise ValueError("moment order must be nonnegative")
    return float(np.mean(v**k))


def moment_weight(k: int, weights="inverse_factorial") -> float:
    """Per-moment weight f(k): 1/k! damps the growing variance of higher
    sample moments; "uniform" leaves every order at weight one."""
    if k < 1:
        raise ValueError("moment order must be at least 1")
    if isinstance(weights, str):
        if weights == "inverse_factorial":
            return 1.0 / math.factorial(k)
        if weights == "uniform":
            return 1.0
        raise ValueError(f"unknown weight tag {weights!r}")
    if k > len(weights):
        raise ValueError(f"custom weight list has {len(weights)} entries, need k={k}")
    return float(weights[k - 1])


def gaussian_noise_moments(sigma: float, K: int) -> tuple:
    """Raw moments [E[E^0], ..., E[E^K]] of E ~ N(0, sigma^2)."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    out = [1.0, 0.0]
    for k in range(2, K + 1):
        out.append(0.0 if k % 2 else sigma**k * _double_factorial(k - 1))
    return tuple(out[: K + 1])


def _double_factorial(m: int) -> float:
    prod = 1.0
    while m > 1:
        prod *= m
        m -= 2
    return prod


def _blocks(replication_ids, n: int) -> list[np.ndarray]:
    if replication_ids is None:
        return [np.arange(n)]
    ids = np.asarray(replication_ids)
    return [np.flatnonzero(ids == r) for r in range(int(ids.max()) + 1)]


def _as_xyw(x, y, w):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.atleast_1d(np.asarray(w, dtype=float))
    if x.ndim != 2 or x.shape != (len(y), len(w)):
        raise ValueError(
            f"shape mismatch: features {x.shape}, labels {y.shape}, weights {w.shape}"
        )
    return x, y, w


def ls_loss(x, y, w, replication_ids=None, lambda2: float = 0.0) -> float:
    """Sum over replications of |sorted(x_r @ w) - sorted(y_r)|^2, which
    equals the squared error minimized over all within-replication
    permutations, plus lambda2 * |w|^2."""
    x, y, w = _as_xyw(x, y, w)
    z = x @ w
    total = lambda2 * float(w @ w)
    for idx in _blocks(replication_ids, len(y)):
        diff = np.sort(z[idx]) - np.sort(y[idx])
        total += float(diff @ diff)
    return total


def sm_loss(x, y, w, spec: LossSpec, replication_ids=None) -> float:
    """Weighted squared gaps between per-replication sample moments of
    x_r @ w and of y_r, orders 1..K, plus lambda2 * |w|^2.

    With noise_moments present, the prediction moments are expanded through
    the binomial theorem so that the k-th constraint matches the moments of
    (x_i @ w + E) instead of x_i @ w.
    """
    x, y, w = _as_xyw(x, y, w)
    K = spec.resolve_K(len(w))
    nm = spec.noise_moments
    if nm is not None and len(nm) < K + 1:
        raise ValueError(f"noise_moments needs K+1={K + 1} entries")
    z = x @ w
    total = spec.lambda2 * float(w @ w)
    for idx in _blocks(replication_ids, len(y)):
        # Moments are summed in sorted order so the loss is exactly (not just
        # approximately) invariant to row order within a replication.
        zb, yb = np.sort(z[idx]), np.sort(y[idx])
        for k in range(1, K + 1):
            n_k = float(np.mean(yb**k))
            if nm is None:
                m_k = float(np.mean(zb**k))
            else:
                m_k = sum(
                    math.comb(k, j) * float(np.mean(zb**j)) * nm[k - j]
                    for j in range(k + 1)
                )
            total += moment_weight(k, spec.weights) * (m_k - n_k) ** 2
    return total


def emd_loss(x, y, w, replication_ids=None, lambda2: float = 0.0) -> float:
    """Sum over replications of the 1-D earth mover's distance between the
    empirical distributions of x_r @ w and y_r (equal sample counts), which
    is the mean absolute gap of the sorted vectors."""
    x, y, w = _as_xyw(x, y, w)
    z = x @ w
    total = lambda2 * float(w @ w)
    for idx in _blocks(replication_ids, len(y)):
        total += float(np.mean(np.abs(np.sort(z[idx]) - np.sort(y[idx]))))
    return total


def ks_loss(x, y, w, replication_ids=None, lambda2: float = 0.0) -> float:
    """Sum over replications of the two-sample Kolmogorov-Smirnov statistic
    between x_r @ w and y_r."""
    x, y, w = _as_xyw(x, y, w)
    z = x @ w
    total = lambda2 * float(w @ w)
    for idx in _blocks(replication_ids, len(y)):
        total += _ks_statistic(np.sort(z[idx]), np.sort(y[idx]))
    return total


def _ks_statistic(a_sorted: np.ndarray, b_sorted: np.ndarray) -> float:
    support = np.concatenate([a_sorted, b_sorted])
    cdf_a = np.searchsorted(a_sorted, support, side="right") / len(a_sorted)
    cdf_b = np.searchsorted(b_sorted, support, side="right") / len(b_sorted)
    return float(np.max(np.abs(cdf_a - cdf_b)))


def small_d_loss(x, y, w, D: int, replication_ids=None, lambda2: float = 0.0) -> float:
    """Sum over replications of the squared gap between the D smallest
    entries of x_r @ w and of y_r. D must not exceed any replication size."""
    x, y, w = _as_xyw(x, y, w)
    z = x @ w
    total = lambda2 * float(w @ w)
    for idx in _blocks(replication_ids, len(y)):
        if not 1 <= D <= len(idx):
            raise ValueError(
                f"D={D} out of range for replication of size {len(idx)}"
            )
        diff = np.sort(z[idx])[:D] - np.sort(y[idx])[:D]
        total += float(diff @ diff)
    return total


def evaluate(x, y, w, spec: LossSpec, replication_ids=None) -> float:
    """Evaluate the loss selected by spec.kind."""
    if spec.kind == "ls":
        return ls_loss(x, y, w, replication_ids, spec.lambda2)
    if spec.kind == "sm":
        return sm_loss(x, y, w, spec, replication_ids)
    if spec.kind == "emd":
        return emd_loss(x, y, w, replication_ids, spec.lambda2)
    if spec.kind == "ks":
        return ks_loss(x, y, w, replication_ids, spec.lambda2)
    D = _resolve_small_d(spec, _blocks(replication_ids, len(y)))
    return small_d_loss(x, y, w, D, replication_ids, spec.lambda2)


def _resolve_small_d(spec: LossSpec, blocks) -> int:
    min_size = min(len(b) for b in blocks)
    if spec.small_d is None:
        return min(DEFAULT_SMALL_D_CAP, min_size)
    return spec.small_d


def build_objective(x, y, spec: LossSpec, replication_ids=None) -> Callable:
    """Compile the loss into a fast callable of the weights alone.

    Label-side quantities (sorted labels, label moments) are precomputed
    once; only the prediction side is recomputed per call. Agrees with the
    direct loss functions to floating-point rounding.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n, d = x.shape
    blocks = _blocks(replication_ids, n)
    lam = spec.lambda2

    if spec.kind == "sm":
        return _build_sm(x, y, blocks, spec, d, lam)
    if spec.kind == "ls" and d == 1:
        return _build_ls_1d(x, y, blocks, lam)

    idx_blocks = [np.asarray(b) for b in blocks]
    sorted_y = [np.sort(y[b]) for b in blocks]

    if spec.kind == "ls":

        def ls_objective(w):
            z = x @ w
            total = lam * float(w @ w)
            for idx, ys in zip(idx_blocks, sorted_y):
                diff = np.sort(z[idx]) - ys
                total += float(diff @ diff)
            return total

        return ls_objective

    if spec.kind == "emd":

        def emd_objective(w):
            z = x @ w
            total = lam * float(w @ w)
            for idx, ys in zip(idx_blocks, sorted_y):
                total += float(np.mean(np.abs(np.sort(z[idx]) - ys)))
            return total

        return emd_objective

    if spec.kind == "ks":

        def ks_objective(w):
            z = x @ w
            total = lam * float(w @ w)
            for idx, ys in zip(idx_blocks, sorted_y):
                total += _ks_statistic(np.sort(z[idx]), ys)
            return total

        return ks_objective

    D = _resolve_small_d(spec, blocks)
    for b in blocks:
        if not 1 <= D <= len(b):
            raise ValueError(f"D={D} out of range for replication of size {len(b)}")
    head_y = [ys[:D] for ys in sorted_y]

    def smalld_objective(w):
        z = x @ w
        total = lam * float(w @ w)
        for idx, ys in zip(idx_blocks, head_y):
            diff = np.sort(z[idx])[:D] - ys
            total += float(diff @ diff)
        return total

    return smalld_objective


def _build_ls_1d(x, y, blocks, lam: float):
    # For d=1 the sorted predictions are w * sorted(x) (ascending for w >= 0,
    # descending otherwise), so the loss is an exact quadratic in w per sign
    # and every evaluation is O(1).
    s_xx = 0.0
    s_yy = 0.0
    b_pos = 0.0
    b_neg = 0.0
    for idx in blocks:
        xs = np.sort(x[idx, 0])
        ys = np.sort(y[idx])
        s_xx += float(xs @ xs)
        s_yy += float(ys @ ys)
        b_pos += float(xs @ ys)
        b_neg += float(xs[::-1] @ ys)

    def ls1_objective(w):
        ww = float(w[0])
        cross = b_pos if ww >= 0 else b_neg
        return (s_xx + lam) * ww * ww - 2.0 * ww * cross + s_yy

    return ls1_objective


def _build_sm(x, y, blocks, spec: LossSpec, d: int, lam: float):
    K = spec.resolve_K(d)
    nm = spec.noise_moments
    if nm is not None and len(nm) < K + 1:
        raise ValueError(f"noise_moments needs K+1={K + 1} entries")
    R = len(blocks)
    order = np.concatenate(blocks)
    sizes = [len(b) for b in blocks]
    starts = np.concatenate([[0], np.cumsum(sizes[:-1])]).astype(np.intp)
    bounds = list(zip(starts, np.cumsum(sizes)))
    counts = np.asarray(sizes, dtype=float)
    x_g = np.ascontiguousarray(x[order])
    y_g = y[order]
    for lo, hi in bounds:
        y_g[lo:hi].sort()

    label_moments = np.empty((K, R))
    p = np.ones_like(y_g)
    for k in range(K):
        p = p * y_g
        label_moments[k] = np.add.reduceat(p, starts) / counts

    f_k = np.array([moment_weight(k, spec.weights) for k in range(1, K + 1)])

    if nm is not None:
        # combo[k-1, j] multiplies the j-th prediction moment in the
        # binomial expansion of E[(x w + E)^k].
        combo = np.zeros((K, K + 1))
        for k in range(1, K + 1):
            for j in range(k + 1):
                combo[k - 1, j] = math.comb(k, j) * nm[k - j]

    def sm_objective(w):
        z = x_g @ w
        # Sorted per block so moment sums are order-canonical (see sm_loss).
        for lo, hi in bounds:
            z[lo:hi].sort()
        means = np.empty((K + 1, R))
        means[0] = 1.0
        p = np.ones_like(z)
        for k in range(1, K + 1):
            p = p * z
            means[k] = np.add.reduceat(p, starts) / counts
        pred = means[1:] if nm is None else combo @ means
        gaps = pred - label_moments
        return lam * float(w @ w) + float(f_k @ np.einsum("kr,kr->k", gaps, gaps))

    return sm_objective
