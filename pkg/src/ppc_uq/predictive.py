"""Univariate predictive distributions and posterior-integrated mixtures.

A predictive with model uncertainty is a finite mixture: one component per
posterior sample (ensemble member), weighted by posterior mass. The mixture
CDF integrates the per-model CDFs over those weights.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

_SQRT2 = math.sqrt(2.0)


class InvalidParameterError(ValueError):
    """Raised when a distribution parameter is out of its valid range."""


@dataclass(frozen=True)
class Gaussian:
    mean: float
    stddev: float

    kind = "gaussian"

    def __post_init__(self):
        if not (math.isfinite(self.mean) and math.isfinite(self.stddev)):
            raise InvalidParameterError("gaussian parameters must be finite")
        if self.stddev <= 0:
            raise InvalidParameterError(f"stddev must be > 0, got {self.stddev}")


@dataclass(frozen=True)
class Categorical:
    probs: tuple

    kind = "categorical"

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "probs", tuple(p.tolist()))
        if p.ndim != 1 or p.size < 2:
            raise InvalidParameterError("categorical needs at least 2 classes")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
            raise InvalidParameterError("categorical probs must be nonnegative and sum to 1")

    @property
    def num_classes(self) -> int:
        return len(self.probs)


ComponentDistribution = Union[Gaussian, Categorical]


@dataclass(frozen=True)
class PosteriorWeights:
    """Finite-support posterior mass over models (defaults to uniform)."""

    values: tuple

    def __post_init__(self):
        w = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", tuple(w.tolist()))
        if w.ndim != 1 or w.size < 1:
            raise InvalidParameterError("weights must be a nonempty vector")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise InvalidParameterError("weights must be nonnegative and sum to 1")

    @classmethod
    def uniform(cls, num_models: int) -> "PosteriorWeights":
        if num_models < 1:
            raise InvalidParameterError("need at least one model")
        return cls(tuple([1.0 / num_models] * num_models))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


@dataclass(frozen=True)
class MixturePredictive:
    """Posterior-integrated predictive: weighted mixture of same-kind components."""

    components: tuple
    weights: PosteriorWeights = None

    def __post_init__(self):
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        if len(comps) == 0:
            raise InvalidParameterError("mixture needs at least one component")
        kinds = {c.kind for c in comps}
        if len(kinds) != 1:
            raise InvalidParameterError("mixture components must share a kind")
        if comps[0].kind == "categorical":
            sizes = {c.num_classes for c in comps}
            if len(sizes) != 1:
                raise InvalidParameterError("categorical components must share class count")
        if self.weights is None:
            object.__setattr__(self, "weights", PosteriorWeights.uniform(len(comps)))
        elif len(self.weights.values) != len(comps):
            raise InvalidParameterError("weights length must match component count")

    @property
    def kind(self) -> str:
        return self.components[0].kind


def gaussian_cdf(mean: float, stddev: float, y: float) -> float:
    """CDF of N(mean, stddev^2) at y, via erf (abs error well under 1e-12)."""
    if not (math.isfinite(mean) and math.isfinite(stddev) and math.isfinite(y)):
        raise InvalidParameterError("gaussian_cdf inputs must be finite")
    if stddev <= 0:
        raise InvalidParameterError(f"stddev must be > 0, got {stddev}")
    return 0.5 * (1.0 + math.erf((y - mean) / (stddev * _SQRT2)))


def mixture_cdf(mixture: MixturePredictive, y) -> float:
    """Posterior-integrated CDF: sum of weighted per-component Gaussian CDFs.

    Accepts a scalar or array y; vectorized over y.
    """
    if mixture.kind != "gaussian":
        raise InvalidParameterError("mixture_cdf is defined for gaussian mixtures")
    y_arr = np.asarray(y, dtype=float)
    w = mixture.weights.as_array()
    total = np.zeros_like(y_arr, dtype=float)
    for wi, comp in zip(w, mixture.components):
        z = (y_arr - comp.mean) / (comp.stddev * _SQRT2)
        total += wi * 0.5 * (1.0 + _erf_array(z))
    if np.isscalar(y) or y_arr.ndim == 0:
        return float(total)
    return total


def _erf_array(z: np.ndarray) -> np.ndarray:
    # scipy's ndtr-equivalent without the dependency in this hot path
    try:
        from scipy.special import erf as _erf

        return _erf(z)
    except ImportError:  # pragma: no cover
        return np.vectorize(math.erf)(z)


def mixture_sample(mixture: MixturePredictive, rng: np.random.Generator, size=None):
    """Draw from the mixture: component index m ~ weights, then from component m.

    With size=None returns a scalar; otherwise a vector of independent draws.
    Consumes the rng in a fixed order: index uniforms first, then value draws.
    """
    n = 1 if size is None else int(size)
    w = mixture.weights.as_array()
    m = len(w)
    if m == 1:
        idx = np.zeros(n, dtype=int)
    else:
        cum = np.cumsum(w)
        cum[-1] = 1.0
        idx = np.searchsorted(cum, rng.random(n), side="right")
    if mixture.kind == "gaussian":
        means = np.array([c.mean for c in mixture.components])
        stds = np.array([c.stddev for c in mixture.components])
        out = means[idx] + stds[idx] * rng.standard_normal(n)
    else:
        probs = np.array([c.probs for c in mixture.components])
        cums = np.cumsum(probs, axis=1)
        cums[:, -1] = 1.0
        u = rng.random(n)
        out = (u[:, None] > cums[idx]).sum(axis=1)
    if size is None:
        return out[0] if mixture.kind == "gaussian" else int(out[0])
    return out
