"""Estimators for regression on shuffled labels.

Closed forms exist for d=1 (ratio of sums) and d=2 (a quadratic in the second
weight); everything else minimizes an order-invariant loss with multi-start
descent. The projection hybrids search over a d x d_p projection, apply the
closed-form moment estimator in the projected space, embed back, and score
with the sorted least-squares loss. "auto" picks the moment estimator for
low dimension or many replications and the 1-D projection hybrid otherwise.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .core import Dataset, ols_fit
from .errors import DegenerateMeanError, NoRealSolutionError
from .losses import LossSpec, build_objective, ls_loss, sm_loss
from .optim import FitConfig, FitResult, multistart_descent

ESTIMATOR_KINDS = ("ols", "sm", "ls", "p1", "p2", "emd", "ks", "smalld", "auto")

# Scale-aware zero test for sums that are divided by: |sum| must exceed
# DEGENERATE_SUM_TOL * n.
DEGENERATE_SUM_TOL = 1e-12


@dataclass(frozen=True)
class EstimatorChoice:
    """Which estimator to run and with what loss / optimizer settings.

    projection_dim applies to the p1/p2 kinds only and defaults to 1 or 2
    from the kind name. The loss_spec's kind field is overridden by the
    estimator kind; its lambda2 (and, for sm, moment settings) are honored.
    """

    kind: str = "auto"
    loss_spec: LossSpec = LossSpec()
    fit_config: FitConfig = FitConfig()
    projection_dim: int | None = None

    def __post_init__(self):
        if self.kind not in ESTIMATOR_KINDS:
            raise ValueError(
                f"unknown estimator {self.kind!r}; pick one of {ESTIMATOR_KINDS}"
            )
        if self.projection_dim is not None and self.projection_dim not in (1, 2):
            raise ValueError("projection_dim must be 1 or 2")


@dataclass(frozen=True)
class CandidateSet:
    """Weight candidates from the d=2 closed form, sorted by their
    disambiguation loss (ascending)."""

    candidates: tuple
    losses: tuple

    @property
    def best(self) -> np.ndarray:
        return self.candidates[0]


def auto_kind(d: int, R: int) -> str:
    """Estimator selection rule: the moment estimator when d <= 2 or when
    R >= 3d, else the 1-D projection hybrid. A pure function of (d, R)."""
    return "sm" if d <= 2 or R >= 3 * d else "p1"


def sm_d1(ds: Dataset) -> np.ndarray:
    """Closed-form scalar weight: sum(y) / sum(x). Consistent when the
    design mean is nonzero."""
    if ds.d != 1:
        raise ValueError(f"sm_d1 needs d=1, got d={ds.d}")
    sx = float(ds.features[:, 0].sum())
    if abs(sx) <= DEGENERATE_SUM_TOL * ds.n:
        raise DegenerateMeanError(
            "sum of features is too close to zero; the first-moment ratio is undefined"
        )
    return np.array([float(ds.labels.sum()) / sx])


def _sm_d2_candidates(x, y, noise_variance) -> list:
    """Solve the first/second-moment system for two weights.

    Substituting the first-moment line into the second-moment constraint
    yields a quadratic in w2; each real root gives one candidate. When
    noise_variance is supplied it is subtracted from the label second moment
    so the constraint targets the noiseless predictions.
    """
    n = len(y)
    eps = DEGENERATE_SUM_TOL * n
    swap = False
    if abs(float(x[:, 0].sum())) <= eps:
        if abs(float(x[:, 1].sum())) <= eps:
            raise DegenerateMeanError(
                "both feature columns have near-zero sums; the moment system is degenerate"
            )
        swap = True
        x = x[:, ::-1]
    e_x1 = float(np.mean(x[:, 0]))
    e_x2 = float(np.mean(x[:, 1]))
    e_x1sq = float(np.mean(x[:, 0] ** 2))
    e_x12 = float(np.mean(x[:, 0] * x[:, 1]))
    e_x2sq = float(np.mean(x[:, 1] ** 2))
    e_y = float(np.mean(y))
    e_y2 = float(np.mean(y**2)) - (noise_variance or 0.0)

    ratio_y = e_y / e_x1
    ratio_x = e_x2 / e_x1
    a = ratio_x**2 * e_x1sq - 2.0 * ratio_x * e_x12 + e_x2sq
    b = 2.0 * ratio_y * (e_x12 - ratio_x * e_x1sq)
    c = ratio_y**2 * e_x1sq - e_y2

    scale = max(abs(a), abs(b), abs(c), 1.0)
    if abs(a) <= 1e-14 * scale:
        # Collinear columns collapse the quadratic to a line.
        if abs(b) <= 1e-14 * scale:
            raise NoRealSolutionError("moment system is degenerate (collinear columns)")
        roots = [-c / b]
    else:
        disc = b * b - 4.0 * a * c
        if disc < 0:
            if disc < -1e-10 * max(b * b, abs(4.0 * a * c), 1e-300):
                raise NoRealSolutionError(
                    f"second-moment quadratic has negative discriminant {disc:.3g}"
                )
            disc = 0.0
        root = math.sqrt(disc)
        roots = [(-b + root) / (2.0 * a), (-b - root) / (2.0 * a)]
        if roots[0] == roots[1]:
            roots = roots[:1]

    out = []
    for w2 in roots:
        w1 = ratio_y - ratio_x * w2
        w = np.array([w2, w1]) if swap else np.array([w1, w2])
        out.append(w)
    return out


def sm_d2_analytic(ds: Dataset, noise_variance: float | None = None) -> CandidateSet:
    """Closed-form candidates for two weights, ranked by the sorted
    least-squares loss (the one that fits the shuffled labels better comes
    first)."""
    if ds.d != 2:
        raise ValueError(f"sm_d2_analytic needs d=2, got d={ds.d}")
    cands = _sm_d2_candidates(ds.features, ds.labels, noise_variance)
    scored = sorted(
        (ls_loss(ds.features, ds.labels, w, ds.replication_ids), i, w)
        for i, w in enumerate(cands)
    )
    return CandidateSet(
        candidates=tuple(w for _, _, w in scored),
        losses=tuple(loss for loss, _, _ in scored),
    )


def projection_estimate(
    ds: Dataset, d_p: int, cfg: FitConfig, lambda2: float = 0.0
) -> FitResult:
    """Hybrid estimator: search over d x d_p projections whose projected
    closed-form moment fit, embedded back into d dimensions, minimizes the
    sorted least-squares loss.

    Projection columns are renormalized to unit length after every step
    (embedded weights are invariant to column scale, so this only removes a
    flat direction). Projections with a near-zero projected feature sum are
    rejected with infinite loss rather than raising.
    """
    if not 1 <= d_p <= min(2, ds.d):
        raise ValueError(f"projection dim {d_p} invalid for d={ds.d}")
    x = ds.features
    y = ds.labels
    d = ds.d
    n = ds.n
    eps = DEGENERATE_SUM_TOL * n
    idx_blocks = ds.replication_indices()
    sorted_y = [np.sort(y[b]) for b in idx_blocks]
    sy = float(y.sum())

    def sorted_gap(z):
        total = 0.0
        for idx, ys in zip(idx_blocks, sorted_y):
            diff = np.sort(z[idx]) - ys
            total += float(diff @ diff)
        return total

    def embed(p_flat):
        p = p_flat.reshape(d, d_p)
        norms = np.sqrt(np.sum(p * p, axis=0))
        if np.any(norms < 1e-12):
            return None
        p = p / norms
        if d_p == 1:
            z = x @ p[:, 0]
            sz = float(z.sum())
            if abs(sz) <= eps:
                return None
            return p[:, 0] * (sy / sz)
        xt = x @ p
        try:
            cands = _sm_d2_candidates(xt, y, None)
        except (DegenerateMeanError, NoRealSolutionError):
            return None
        best_w, best_gap = None, math.inf
        for wt in cands:
            w_full = p @ wt
            gap = sorted_gap(x @ w_full)
            if gap < best_gap:
                best_w, best_gap = w_full, gap
        return best_w

    def objective(p_flat):
        w = embed(p_flat)
        if w is None:
            return math.inf
        return sorted_gap(x @ w) + lambda2 * float(w @ w)

    def retraction(p_flat):
        p = p_flat.reshape(d, d_p)
        norms = np.sqrt(np.sum(p * p, axis=0))
        if np.any(norms < 1e-12):
            return p_flat
        return (p / norms).ravel()

    res = multistart_descent(objective, d * d_p, cfg, retraction=retraction)
    weights = embed(res.weights)
    return FitResult(
        weights=weights,
        loss=res.loss,
        start_index=res.start_index,
        iterations_per_start=res.iterations_per_start,
        converged=res.converged,
        loss_trace=res.loss_trace,
        diagnostics={**res.diagnostics, "path": "projection", "projection_dim": d_p},
    )


def estimate(ds: Dataset, choice: EstimatorChoice) -> FitResult:
    """Run the chosen estimator on a dataset.

    The moment estimator takes the closed form when the dataset has a single
    replication, no regularization, d <= 2, and the minimal moment order;
    otherwise (and after a no-real-solution fallback) it minimizes the moment
    loss numerically. The diagnostics record the resolved kind and path.
    """
    kind = choice.kind
    diagnostics = {}
    if kind == "auto":
        kind = auto_kind(ds.d, ds.R)
        diagnostics["requested"] = "auto"
    diagnostics["estimator"] = kind

    if kind == "ols":
        w = ols_fit(ds)
        resid = ds.features @ w - ds.labels
        return _closed_form_result(w, float(resid @ resid), diagnostics, "ols")

    if kind in ("p1", "p2"):
        d_p = choice.projection_dim or (1 if kind == "p1" else 2)
        res = projection_estimate(
            ds, d_p, choice.fit_config, lambda2=choice.loss_spec.lambda2
        )
        res.diagnostics.update(diagnostics)
        return res

    if kind == "sm":
        return _estimate_sm(ds, choice, diagnostics)

    spec = replace(choice.loss_spec, kind=kind)
    f = build_objective(ds.features, ds.labels, spec, ds.replication_ids)
    res = multistart_descent(f, ds.d, choice.fit_config)
    res.diagnostics.update(diagnostics, path="descent")
    return res


def _closed_form_result(w, loss, diagnostics, path) -> FitResult:
    return FitResult(
        weights=w,
        loss=loss,
        start_index=0,
        iterations_per_start=[0],
        converged=[True],
        loss_trace=None,
        diagnostics={**diagnostics, "path": path, "loss_evals": 1},
    )


def _estimate_sm(ds: Dataset, choice: EstimatorChoice, diagnostics) -> FitResult:
    spec = replace(choice.loss_spec, kind="sm")
    K = spec.resolve_K(ds.d)
    closed_ok = (
        ds.R == 1
        and spec.lambda2 == 0.0
        and ds.d <= 2
        and K == ds.d
        and (spec.noise_moments is None or len(spec.noise_moments) >= ds.d + 1)
    )
    if closed_ok and ds.d == 1:
        w = sm_d1(ds)
        loss = sm_loss(ds.features, ds.labels, w, spec, ds.replication_ids)
        return _closed_form_result(w, loss, diagnostics, "closed_form_d1")
    if closed_ok and ds.d == 2:
        nv = spec.noise_moments[2] if spec.noise_moments is not None else None
        try:
            cands = sm_d2_analytic(ds, noise_variance=nv)
        except NoRealSolutionError:
            diagnostics["fallback"] = "no_real_solution"
        else:
            w = cands.best
            loss = sm_loss(ds.features, ds.labels, w, spec, ds.replication_ids)
            result = _closed_form_result(w, loss, diagnostics, "closed_form_d2")
            result.diagnostics["candidates"] = len(cands.candidates)
            return result

    if ds.R == 1 and K < ds.d:
        warnings.warn(
            f"K={K} moment constraints may not identify d={ds.d} weights "
            "from a single replication",
            stacklevel=2,
        )
    f = build_objective(ds.features, ds.labels, spec, ds.replication_ids)
    res = multistart_descent(f, ds.d, choice.fit_config)
    res.diagnostics.update(diagnostics, path="descent")
    return res
