"""Multi-start gradient descent with empirical (central-difference) gradients.

The driver knows nothing about regression: it minimizes an arbitrary scalar
function of a weight vector. Each start draws an independent Gaussian init
from its own child stream, so results are deterministic per seed no matter
how starts are scheduled.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import NumericalError, OptimizationFailedError
from .rng import spawn_rng

# A step that fails to decrease the loss is halved at most this many times
# within one iteration before the iterate is declared stationary.
MAX_BACKTRACKS = 20


@dataclass(frozen=True)
class FitConfig:
    """Knobs of the multi-start descent.

    step is the initial step size of every iteration; when a step fails to
    decrease the loss it is halved locally (up to MAX_BACKTRACKS times) and
    reset at the next iteration. gradient_step is the central-difference h,
    scaled per coordinate by max(1, |w_i|). Starts are initialized
    N(0, init_scale^2).
    """

    starts: int = 10
    step: float = 0.1
    convergence_threshold: float = 1e-6
    max_iters: int = 10_000
    gradient_step: float = 1e-6
    init_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.starts < 1:
            raise ValueError("starts must be at least 1")
        if self.step <= 0 or self.convergence_threshold <= 0:
            raise ValueError("step and convergence_threshold must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.gradient_step <= 0 or self.init_scale <= 0:
            raise ValueError("gradient_step and init_scale must be positive")

    def with_seed(self, seed: int) -> "FitConfig":
        return replace(self, seed=seed)

    def to_json(self) -> str:
        return json.dumps(
            {
                "starts": self.starts,
                "step": self.step,
                "convergence_threshold": self.convergence_threshold,
                "max_iters": self.max_iters,
                "gradient_step": self.gradient_step,
                "init_scale": self.init_scale,
                "seed": self.seed,
            },
            sort_keys=True,
        )

    @staticmethod
    def from_json(text: str) -> "FitConfig":
        return FitConfig(**json.loads(text))


@dataclass
class FitResult:
    """Outcome of a fit: the best start's weights and bookkeeping for all
    starts. loss always equals the objective evaluated at weights."""

    weights: np.ndarray
    loss: float
    start_index: int
    iterations_per_start: list
    converged: list
    loss_trace: list | None = None
    diagnostics: dict = field(default_factory=dict)


def numerical_gradient(f: Callable, w: np.ndarray, h: float) -> np.ndarray:
    """Central-difference gradient, one coordinate at a time.

    The probe step for coordinate i is h * max(1, |w_i|). Raises
    NumericalError if any probe evaluates non-finite.
    """
    w = np.asarray(w, dtype=float)
    grad = np.empty_like(w)
    for i in range(w.size):
        hi = h * max(1.0, abs(w[i]))
        probe = w.copy()
        probe[i] = w[i] + hi
        f_plus = f(probe)
        probe[i] = w[i] - hi
        f_minus = f(probe)
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise NumericalError(
                f"loss is non-finite near coordinate {i} of w={w!r}"
            )
        grad[i] = (f_plus - f_minus) / (2.0 * hi)
    return grad


def multistart_descent(
    f: Callable,
    dim: int,
    cfg: FitConfig,
    retraction: Callable | None = None,
) -> FitResult:
    """Minimize f over R^dim from cfg.starts random initializations.

    Each start runs gradient descent with step halving: if w - step * grad
    does not decrease the loss the step is halved, up to MAX_BACKTRACKS
    times; a start stops when the per-iteration decrease falls below
    cfg.convergence_threshold or max_iters is reached. The loss trace within
    a start is therefore non-increasing. A start whose loss or gradient goes
    non-finite is discarded; if every start is discarded,
    OptimizationFailedError is raised with the per-start traces attached.

    retraction, when given, maps each candidate iterate back onto a
    constraint set (applied to the initial point too).

    A start whose gradient probes non-finite territory mid-run keeps its last
    finite iterate (converged=False); only a non-finite initial loss discards
    a start outright.

    Returns the start with the lowest final loss (ties: lowest start index).
    Bit-reproducible for equal (f, dim, cfg).
    """
    if dim < 1:
        raise ValueError("dim must be at least 1")
    best = None
    iterations = []
    converged_flags = []
    final_losses = []
    traces = []
    evals = 0

    def call(w):
        nonlocal evals
        evals += 1
        return float(f(w))

    for start in range(cfg.starts):
        rng = spawn_rng(cfg.seed, "start", start)
        w = rng.normal(0.0, cfg.init_scale, dim)
        if retraction is not None:
            w = np.asarray(retraction(w), dtype=float)
        trace = []
        iters = 0
        converged = False
        failed = False
        fw = call(w)
        if np.isfinite(fw):
            trace.append(fw)
            while iters < cfg.max_iters:
                try:
                    grad = numerical_gradient(call, w, cfg.gradient_step)
                except NumericalError:
                    break
                if not np.all(np.isfinite(grad)):
                    break
                step = cfg.step
                accepted = False
                for _ in range(MAX_BACKTRACKS + 1):
                    w_new = w - step * grad
                    if retraction is not None:
                        w_new = np.asarray(retraction(w_new), dtype=float)
                    f_new = call(w_new)
                    if np.isfinite(f_new) and f_new < fw:
                        accepted = True
                        break
                    step *= 0.5
                iters += 1
                if not accepted:
                    # No decreasing step exists at this resolution; treat the
                    # iterate as stationary.
                    converged = True
                    break
                delta = fw - f_new
                w, fw = w_new, f_new
                trace.append(fw)
                if delta < cfg.convergence_threshold:
                    converged = True
                    break
        else:
            failed = True

        iterations.append(iters)
        converged_flags.append(converged)
        final = float("inf") if failed else fw
        final_losses.append(final)
        traces.append(trace)
        if not failed and (best is None or final < final_losses[best]):
            best = start
            best_weights = w

    if best is None:
        raise OptimizationFailedError(
            f"all {cfg.starts} starts diverged to non-finite loss", traces=traces
        )
    return FitResult(
        weights=best_weights,
        loss=final_losses[best],
        start_index=best,
        iterations_per_start=iterations,
        converged=converged_flags,
        loss_trace=traces[best],
        diagnostics={"loss_evals": evals},
    )
