"""Synthetic shuffled-regression instances: Gaussian random designs, uniform
random permutations, and Gaussian label noise at a controlled level.

Normal variates come from numpy's Generator (PCG64 + ziggurat sampling),
which is held fixed per release for reproducibility.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import Dataset
from .rng import derive_seed, spawn_rng


@dataclass(frozen=True)
class GaussianDesignSpec:
    """Independent Gaussian feature columns: entry (j, i) ~ N(means[i], stds[i]^2)."""

    n: int
    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        means = np.atleast_1d(np.asarray(self.means, dtype=float))
        stds = np.atleast_1d(np.asarray(self.stds, dtype=float))
        if means.shape != stds.shape or means.ndim != 1:
            raise ValueError("means and stds must be 1-D and the same length")
        if np.any(stds < 0):
            raise ValueError("stds must be nonnegative")
        if self.n < 1:
            raise ValueError("n must be positive")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "stds", stds)

    @property
    def d(self) -> int:
        return self.means.shape[0]


@dataclass(frozen=True)
class NoiseSpec:
    """Additive zero-mean Gaussian label noise.

    Exactly one of the three parameterizations must be set:
      sigma   - the noise standard deviation directly;
      nsr_db  - noise-to-signal ratio, 20*log10(sigma / |w0|_2);
      snr_db  - signal-to-noise ratio in dB, where the signal power is the
                empirical mean square of the realized noiseless labels.
    """

    sigma: float | None = None
    nsr_db: float | None = None
    snr_db: float | None = None

    def __post_init__(self):
        set_count = sum(v is not None for v in (self.sigma, self.nsr_db, self.snr_db))
        if set_count != 1:
            raise ValueError("exactly one of sigma, nsr_db, snr_db must be set")
        if self.sigma is not None and self.sigma < 0:
            raise ValueError("sigma must be nonnegative")

    def resolve_sigma(self, w0, signal) -> float:
        """Concrete noise standard deviation for one instance.

        w0 is the weight vector (used by the NSR form); signal is the
        realized noiseless label vector x @ w0 (used by the SNR form).
        """
        if self.sigma is not None:
            return float(self.sigma)
        if self.nsr_db is not None:
            return float(np.linalg.norm(w0) * 10.0 ** (self.nsr_db / 20.0))
        power = float(np.mean(np.square(signal)))
        return float(np.sqrt(power / 10.0 ** (self.snr_db / 10.0)))


def generate_design(spec: GaussianDesignSpec, seed: int) -> np.ndarray:
    """Draw the (n, d) feature matrix for a Gaussian design, deterministically
    per seed."""
    rng = spawn_rng(seed, "design")
    return rng.normal(spec.means, spec.stds, size=(spec.n, spec.d))


def sample_permutation(n: int, seed: int) -> np.ndarray:
    """Uniform random permutation of 0..n-1 (Fisher-Yates), deterministic per
    seed."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = spawn_rng(seed, "permutation")
    return rng.permutation(n)


def apply_model(x, w0, perm, noise: NoiseSpec, seed: int) -> np.ndarray:
    """Labels y[i] = (x @ w0)[perm[i]] + e[i] with e ~ N(0, sigma^2) iid."""
    x = np.asarray(x, dtype=float)
    w0 = np.asarray(w0, dtype=float)
    perm = np.asarray(perm)
    if x.ndim != 2 or w0.shape != (x.shape[1],):
        raise ValueError(f"weight shape {w0.shape} does not match features {x.shape}")
    if perm.shape != (x.shape[0],):
        raise ValueError(f"permutation length {perm.shape} does not match n={x.shape[0]}")
    signal = x @ w0
    sigma = noise.resolve_sigma(w0, signal)
    rng = spawn_rng(seed, "noise")
    e = rng.normal(0.0, sigma, size=x.shape[0]) if sigma > 0 else np.zeros(x.shape[0])
    return signal[perm] + e


@dataclass(frozen=True)
class Scenario:
    """A complete simulation recipe, serializable to JSON.

    Either w0 is given explicitly or it is drawn N(0, I) from a child of the
    master seed. Component seeds (design/w0/perm/noise) default to children
    of the master seed but can each be pinned explicitly.
    """

    design: GaussianDesignSpec
    noise: NoiseSpec
    seed: int = 0
    w0: np.ndarray | None = None
    w0_seed: int | None = None
    design_seed: int | None = None
    perm_seed: int | None = None
    noise_seed: int | None = None

    def __post_init__(self):
        if self.w0 is not None:
            w0 = np.asarray(self.w0, dtype=float)
            if w0.shape != (self.design.d,):
                raise ValueError(f"w0 must have length {self.design.d}")
            object.__setattr__(self, "w0", w0)

    @staticmethod
    def from_json(text: str) -> "Scenario":
        obj = json.loads(text)
        n = int(obj["n"])
        d = int(obj["d"])
        means = np.broadcast_to(np.atleast_1d(obj.get("means", 0.0)), (d,))
        stds = np.broadcast_to(np.atleast_1d(obj.get("stds", 1.0)), (d,))
        design = GaussianDesignSpec(n=n, means=means, stds=stds)
        noise = NoiseSpec(**obj["noise"])
        return Scenario(
            design=design,
            noise=noise,
            seed=int(obj.get("seed", 0)),
            w0=obj.get("w0"),
            w0_seed=obj.get("w0_seed"),
            design_seed=obj.get("design_seed"),
            perm_seed=obj.get("perm_seed"),
            noise_seed=obj.get("noise_seed"),
        )

    def to_json(self) -> str:
        obj = {
            "n": self.design.n,
            "d": self.design.d,
            "means": list(self.design.means),
            "stds": list(self.design.stds),
            "noise": {
                k: v
                for k, v in (
                    ("sigma", self.noise.sigma),
                    ("nsr_db", self.noise.nsr_db),
                    ("snr_db", self.noise.snr_db),
                )
                if v is not None
            },
            "seed": self.seed,
        }
        if self.w0 is not None:
            obj["w0"] = list(self.w0)
        for key in ("w0_seed", "design_seed", "perm_seed", "noise_seed"):
            val = getattr(self, key)
            if val is not None:
                obj[key] = val
        return json.dumps(obj, sort_keys=True)


def run_scenario(sc: Scenario) -> tuple[Dataset, np.ndarray, float]:
    """Materialize a scenario into a single-replication shuffled dataset.

    Returns (dataset, w0, sigma) so callers can score estimates against the
    generating weights.
    """
    def child(explicit, tag):
        return explicit if explicit is not None else derive_seed(sc.seed, tag)

    x = generate_design(sc.design, child(sc.design_seed, "design"))
    if sc.w0 is not None:
        w0 = sc.w0
    else:
        w0 = spawn_rng(child(sc.w0_seed, "w0")).normal(0.0, 1.0, sc.design.d)
    perm = sample_permutation(sc.design.n, child(sc.perm_seed, "perm"))
    y = apply_model(x, w0, perm, sc.noise, child(sc.noise_seed, "noise"))
    sigma = sc.noise.resolve_sigma(w0, x @ w0)
    return Dataset(x, y), w0, sigma
