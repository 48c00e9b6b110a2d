"""Token selection mechanisms: clipped temperature sampling and friends.

The privacy knob is a single scalar epsilon per generated token.  With
utility scores equal to model logits, sampling from a temperature-scaled
softmax at T = 2*sensitivity/epsilon is the exponential mechanism, provided
the logits are clipped so their range (the sensitivity) is actually bounded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Calibrated on the rewriter's logit distribution: lower bound is the mean,
# upper bound is mean + 4 standard deviations.
DEFAULT_CLIP_BOUNDS = (-19.23, 7.48)
DEFAULT_SENSITIVITY = 26.71

STRATEGIES = ("dp", "quasi-dp", "non-dp")


def _as_logit_vector(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("expected a non-empty 1-D vector of logits")
    if not np.all(np.isfinite(arr)):
        raise ValueError("logits must be finite")
    return arr


def _stable_softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max()
    weights = np.exp(shifted)
    return weights / weights.sum()


def clip_logits(logits, bounds: tuple[float, float] = DEFAULT_CLIP_BOUNDS) -> np.ndarray:
    """Clamp each logit into [lo, hi] so the score range is bounded."""
    lo, hi = float(bounds[0]), float(bounds[1])
    if lo > hi:
        raise ValueError(f"clip bounds are inverted: ({lo}, {hi})")
    return np.clip(_as_logit_vector(logits), lo, hi)


def bounds_sensitivity(bounds: tuple[float, float]) -> float:
    """Width of the clip range, which is the score sensitivity after clipping."""
    lo, hi = float(bounds[0]), float(bounds[1])
    if lo > hi:
        raise ValueError(f"clip bounds are inverted: ({lo}, {hi})")
    return hi - lo


def estimate_clip_bounds(sample_logits) -> tuple[float, float]:
    """Calibrate clip bounds from observed logits: (mean, mean + 4*std).

    Uses the population standard deviation.  Constant samples would give
    a zero-width range, and with it a zero sensitivity that makes epsilon
    undefined, so they are rejected.
    """
    samples = np.asarray(sample_logits, dtype=np.float64).ravel()
    if samples.size < 2:
        raise ValueError(f"need at least 2 sample logits, got {samples.size}")
    if not np.all(np.isfinite(samples)):
        raise ValueError("sample logits must be finite")
    mean = float(samples.mean())
    std = float(samples.std())
    if std == 0.0:
        raise ValueError("sample logits are constant, bounds would be degenerate")
    return (mean, mean + 4.0 * std)


def temperature_from_epsilon(epsilon: float, sensitivity: float = DEFAULT_SENSITIVITY) -> float:
    """T = 2*sensitivity / epsilon."""
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if sensitivity <= 0:
        raise ValueError(f"sensitivity must be positive, got {sensitivity}")
    return 2.0 * sensitivity / epsilon


def epsilon_from_temperature(temperature: float, sensitivity: float = DEFAULT_SENSITIVITY) -> float:
    """Inverse of temperature_from_epsilon."""
    if temperature <= 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    if sensitivity <= 0:
        raise ValueError(f"sensitivity must be positive, got {sensitivity}")
    return 2.0 * sensitivity / temperature


def softmax_with_temperature(logits, temperature: float) -> np.ndarray:
    if temperature <= 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    return _stable_softmax(_as_logit_vector(logits) / temperature)


def exponential_mechanism_distribution(
    utilities, epsilon: float, sensitivity: float = DEFAULT_SENSITIVITY
) -> np.ndarray:
    """p_i proportional to exp(epsilon * u_i / (2 * sensitivity)).

    Callers must ensure the utilities really do have the claimed
    sensitivity (for logits, by clipping first); this function cannot
    check that.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if sensitivity <= 0:
        raise ValueError(f"sensitivity must be positive, got {sensitivity}")
    scores = _as_logit_vector(utilities) * (epsilon / (2.0 * sensitivity))
    return _stable_softmax(scores)


def top_k_indices(values, k: int) -> np.ndarray:
    """Indices of the k largest values, ties broken toward the lower index."""
    arr = _as_logit_vector(values)
    if k <= 0:
        raise ValueError(f"k must be positive, got {k}")
    order = np.argsort(-arr, kind="stable")
    return order[: min(k, arr.size)]


def top_k_filter(logits, k: int) -> np.ndarray:
    """Keep the k largest logits and mark the rest -inf.

    Softmax of the result puts exactly zero mass outside the survivors,
    so this composes with the samplers without special-casing.
    """
    arr = _as_logit_vector(logits)
    keep = top_k_indices(arr, k)
    filtered = np.full(arr.size, -np.inf)
    filtered[keep] = arr[keep]
    return filtered


@dataclass(frozen=True, slots=True)
class SamplerConfig:
    """Everything select_token needs besides the logits and the RNG.

    top_k of None disables the filter (full vocabulary).  epsilon is
    required for the dp and quasi-dp strategies and ignored by non-dp.
    """

    strategy: str = "dp"
    epsilon: float | None = None
    sensitivity: float = DEFAULT_SENSITIVITY
    bounds: tuple[float, float] = DEFAULT_CLIP_BOUNDS
    top_k: int | None = 50

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}, expected one of {STRATEGIES}")
        if self.strategy in ("dp", "quasi-dp"):
            if self.epsilon is None or self.epsilon <= 0:
                raise ValueError(f"strategy {self.strategy!r} needs a positive epsilon")
            if self.sensitivity <= 0:
                raise ValueError(f"sensitivity must be positive, got {self.sensitivity}")
        if self.strategy == "dp" and self.bounds[0] > self.bounds[1]:
            raise ValueError(f"clip bounds are inverted: {self.bounds}")
        if self.top_k is not None and self.top_k <= 0:
            raise ValueError(f"top_k must be positive or None, got {self.top_k}")

    @property
    def temperature(self) -> float:
        if self.strategy == "non-dp":
            return 1.0
        return temperature_from_epsilon(self.epsilon, self.sensitivity)


def token_distribution(logits, config: SamplerConfig) -> np.ndarray:
    """Probability over the full vocabulary that select_token samples from.

    dp:       clip -> divide by T -> top-k -> softmax over survivors
    quasi-dp: same pipeline without the clip
    non-dp:   top-k of the raw logits at T = 1
    """
    if config.strategy == "dp":
        scores = clip_logits(logits, config.bounds)
    else:
        scores = _as_logit_vector(logits)
    scores = scores / config.temperature
    if config.top_k is not None and config.top_k < scores.size:
        keep = top_k_indices(scores, config.top_k)
        probs = np.zeros(scores.size)
        probs[keep] = _stable_softmax(scores[keep])
        return probs
    return _stable_softmax(scores)


def sample_index(probs, rng: np.random.Generator) -> int:
    """Draw one index from a probability vector using a single uniform."""
    arr = np.asarray(probs, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("expected a non-empty 1-D probability vector")
    if np.any(arr < 0) or not np.isclose(arr.sum(), 1.0, atol=1e-8):
        raise ValueError("probabilities must be non-negative and sum to 1")
    cdf = np.cumsum(arr)
    cdf[-1] = 1.0
    return int(np.searchsorted(cdf, rng.random(), side="right"))


def select_token(logits, config: SamplerConfig, rng: np.random.Generator) -> int:
    """Sample one token id according to the configured strategy."""
    return sample_index(token_distribution(logits, config), rng)
