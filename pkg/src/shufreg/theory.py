"""Closed-form asymptotic values for the d=1 Gaussian setting, used as
oracles by the test suite and the benchmark harness."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class PopulationSpec:
    """Population parameters of a scalar Gaussian design with Gaussian noise."""

    mu_x: float
    sigma_x: float
    sigma_e: float
    w0: float = 1.0

    def __post_init__(self):
        if self.sigma_x < 0 or self.sigma_e < 0:
            raise ValueError("standard deviations must be nonnegative")


def ls_limit_d1(spec: PopulationSpec) -> float:
    """Almost-sure limit of the sorted-least-squares estimate of a scalar
    weight: w0 * (mu^2 + sigma_x * sqrt(sigma_x^2 + sigma_e^2 / w0^2))
    / (mu^2 + sigma_x^2).

    Exceeds |w0| whenever sigma_x * sigma_e > 0 (the noise inflates the
    spread of the labels, and sorting matches spread against spread).
    """
    denom = spec.mu_x**2 + spec.sigma_x**2
    if denom == 0:
        raise ValueError("mu_x and sigma_x cannot both be zero")
    if spec.sigma_e > 0 and spec.w0 == 0:
        raise ValueError("w0 must be nonzero when sigma_e > 0")
    if spec.sigma_e == 0:
        spread = spec.sigma_x
    else:
        spread = math.sqrt(spec.sigma_x**2 + spec.sigma_e**2 / spec.w0**2)
    return spec.w0 * (spec.mu_x**2 + spec.sigma_x * spread) / denom


def sorted_cross_moment_limit(
    mu_x: float, sigma_x: float, mu_y: float, sigma_y: float
) -> float:
    """Limit of (1/n) sum x_(i) y_(i) for two independent Gaussian samples,
    each sorted ascending: mu_x * mu_y + sigma_x * sigma_y."""
    if sigma_x < 0 or sigma_y < 0:
        raise ValueError("standard deviations must be nonnegative")
    return mu_x * mu_y + sigma_x * sigma_y


def sm_d1_mse(spec: PopulationSpec, n: int) -> float:
    """Asymptotic mean squared error of the d=1 ratio-of-sums estimator,
    sigma_e^2 / (mu_x^2 * n). An approximation for finite n (the design mean
    is treated as mu_x exactly)."""
    if spec.mu_x == 0:
        raise ValueError("mu_x must be nonzero")
    if n < 1:
        raise ValueError("n must be positive")
    return spec.sigma_e**2 / (spec.mu_x**2 * n)
