"""Test statistics over labels and the posterior-integrated predictive.

All statistics here are pure functions of (labels, predictions): ECE and
accuracy for classification, quantile calibration error and PICP for
regression. Each operates on the predictive after model uncertainty has
been integrated out.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .predictive import InvalidParameterError, PosteriorWeights

CLASSIFICATION = "classification"
REGRESSION = "regression"


class EmptyInputError(ValueError):
    """Raised when a statistic is asked to evaluate zero rows."""


class KindMismatchError(TypeError):
    """Raised when a statistic is applied to the wrong prediction kind."""


@dataclass
class EnsemblePredictions:
    """Per-row, per-model predictive distributions.

    Classification rows carry an [N, M, C] probability (or logit) tensor;
    regression rows carry [N, M] Gaussian (mean, stddev) pairs.
    """

    kind: str
    probs: np.ndarray = None          # [N, M, C]
    logits: np.ndarray = None         # [N, M, C]
    means: np.ndarray = None          # [N, M]
    stds: np.ndarray = None           # [N, M]

    def __post_init__(self):
        if self.kind == CLASSIFICATION:
            if self.probs is None and self.logits is None:
                raise InvalidParameterError("classification needs probs or logits")
            if self.logits is not None:
                self.logits = np.asarray(self.logits, dtype=float)
                if self.logits.ndim != 3:
                    raise InvalidParameterError("logits must be [N, M, C]")
            if self.probs is not None:
                self.probs = np.asarray(self.probs, dtype=float)
                if self.probs.ndim != 3:
                    raise InvalidParameterError("probs must be [N, M, C]")
                sums = self.probs.sum(axis=2)
                if np.any(self.probs < -1e-12) or np.any(np.abs(sums - 1.0) > 1e-6):
                    raise InvalidParameterError("per-model probability rows must sum to 1")
        elif self.kind == REGRESSION:
            if self.means is None or self.stds is None:
                raise InvalidParameterError("regression needs means and stds")
            self.means = np.asarray(self.means, dtype=float)
            self.stds = np.asarray(self.stds, dtype=float)
            if self.means.shape != self.stds.shape or self.means.ndim != 2:
                raise InvalidParameterError("means/stds must both be [N, M]")
            if np.any(self.stds <= 0):
                raise InvalidParameterError("all stddevs must be > 0")
        else:
            raise InvalidParameterError(f"unknown prediction kind: {self.kind!r}")
        if self.num_rows < 1 or self.num_models < 1:
            raise InvalidParameterError("need at least one row and one model")

    @classmethod
    def from_probs(cls, probs) -> "EnsemblePredictions":
        return cls(kind=CLASSIFICATION, probs=np.asarray(probs, dtype=float))

    @classmethod
    def from_logits(cls, logits) -> "EnsemblePredictions":
        return cls(kind=CLASSIFICATION, logits=np.asarray(logits, dtype=float))

    @classmethod
    def from_gaussians(cls, means, stds) -> "EnsemblePredictions":
        return cls(kind=REGRESSION, means=np.asarray(means, dtype=float),
                   stds=np.asarray(stds, dtype=float))

    @property
    def num_rows(self) -> int:
        ref = self.probs if self.probs is not None else (
            self.logits if self.logits is not None else self.means)
        return ref.shape[0]

    @property
    def num_models(self) -> int:
        ref = self.probs if self.probs is not None else (
            self.logits if self.logits is not None else self.means)
        return ref.shape[1]

    @property
    def num_classes(self) -> int:
        if self.kind != CLASSIFICATION:
            raise KindMismatchError("num_classes is a classification property")
        ref = self.probs if self.probs is not None else self.logits
        return ref.shape[2]

    def class_probs(self) -> np.ndarray:
        """[N, M, C] probabilities (softmax of logits when only logits given)."""
        if self.kind != CLASSIFICATION:
            raise KindMismatchError("class_probs is a classification property")
        if self.probs is not None:
            return self.probs
        return softmax(self.logits)

    def take_rows(self, index) -> "EnsemblePredictions":
        if self.kind == CLASSIFICATION:
            return EnsemblePredictions(
                kind=self.kind,
                probs=None if self.probs is None else self.probs[index],
                logits=None if self.logits is None else self.logits[index],
            )
        return EnsemblePredictions(kind=self.kind, means=self.means[index],
                                   stds=self.stds[index])


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass(frozen=True)
class BinningConfig:
    """Equal-width confidence bins on (0, 1]."""

    num_bins: int = 15

    def __post_init__(self):
        if self.num_bins < 1:
            raise InvalidParameterError("num_bins must be >= 1")


@dataclass(frozen=True)
class QuantileSet:
    """Ordered quantile levels in (0, 1); default 100 equally spaced j/101."""

    levels: tuple = field(default_factory=lambda: QuantileSet.default_levels(100))

    def __post_init__(self):
        lv = np.asarray(self.levels, dtype=float)
        object.__setattr__(self, "levels", tuple(lv.tolist()))
        if lv.size < 1 or np.any(lv <= 0) or np.any(lv >= 1) or np.any(np.diff(lv) <= 0):
            raise InvalidParameterError("quantile levels must be strictly increasing in (0,1)")

    @staticmethod
    def default_levels(num: int) -> tuple:
        return tuple((j / (num + 1)) for j in range(1, num + 1))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.levels, dtype=float)


def validate_labels(preds: EnsemblePredictions, labels) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.shape[0] != preds.num_rows:
        raise InvalidParameterError("labels must be a vector of length N")
    if preds.kind == CLASSIFICATION:
        labels = labels.astype(int)
        if np.any(labels < 0) or np.any(labels >= preds.num_classes):
            raise InvalidParameterError("class labels out of range")
        return labels
    return labels.astype(float)


def integrated_class_probs(preds: EnsemblePredictions,
                           weights: PosteriorWeights = None) -> np.ndarray:
    """Posterior-averaged class probabilities, [N, C]."""
    if preds.kind != CLASSIFICATION:
        raise KindMismatchError("integrated_class_probs needs classification predictions")
    w = _weights_array(weights, preds.num_models)
    return np.einsum("nmc,m->nc", preds.class_probs(), w)


def _weights_array(weights, num_models: int) -> np.ndarray:
    if weights is None:
        return np.full(num_models, 1.0 / num_models)
    w = weights.as_array()
    if w.size != num_models:
        raise InvalidParameterError("weights length must equal number of models")
    return w


def ece(integrated_probs: np.ndarray, labels, bins: BinningConfig = BinningConfig()) -> float:
    """Expected calibration error with equal-width confidence bins on (0, 1]."""
    probs = np.asarray(integrated_probs, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if probs.shape[0] == 0:
        raise EmptyInputError("ece needs at least one row")
    predicted = probs.argmax(axis=1)
    confidence = probs.max(axis=1)
    return ece_from_confidence(confidence, predicted, labels, bins.num_bins)


def ece_from_confidence(confidence: np.ndarray, predicted: np.ndarray,
                        labels: np.ndarray, num_bins: int) -> float:
    n = confidence.shape[0]
    if n == 0:
        raise EmptyInputError("ece needs at least one row")
    # bin m holds confidences in ((m-1)/M, m/M]
    bin_idx = np.clip(np.ceil(confidence * num_bins).astype(int) - 1, 0, num_bins - 1)
    correct = (predicted == labels).astype(float)
    counts = np.bincount(bin_idx, minlength=num_bins)
    acc_sum = np.bincount(bin_idx, weights=correct, minlength=num_bins)
    conf_sum = np.bincount(bin_idx, weights=confidence, minlength=num_bins)
    nonempty = counts > 0
    gaps = np.abs(acc_sum[nonempty] - conf_sum[nonempty])
    return float(gaps.sum() / n)


def pit_values(preds: EnsemblePredictions, weights: PosteriorWeights = None,
               labels=None) -> np.ndarray:
    """Per-row posterior-integrated CDF of the observed target."""
    if preds.kind != REGRESSION:
        raise KindMismatchError("pit_values needs regression predictions")
    y = validate_labels(preds, labels)
    w = _weights_array(weights, preds.num_models)
    return pit_from_gaussians(preds.means, preds.stds, w, y)


def pit_from_gaussians(means: np.ndarray, stds: np.ndarray, w: np.ndarray,
                       y: np.ndarray) -> np.ndarray:
    return ndtr((y[:, None] - means) / stds) @ w


def calibration_error(pit, quantiles: QuantileSet = QuantileSet()) -> float:
    """Sum over quantile levels of squared (level - empirical frequency) gaps.

    The empirical frequency at level p counts PIT values strictly below p.
    """
    pit = np.asarray(pit, dtype=float)
    if pit.size == 0:
        raise EmptyInputError("calibration_error needs at least one PIT value")
    if np.any(pit < 0) or np.any(pit > 1):
        raise InvalidParameterError("PIT values must lie in [0, 1]")
    levels = quantiles.as_array()
    pit_sorted = np.sort(pit)
    below = np.searchsorted(pit_sorted, levels, side="left") / pit.size
    return float(np.sum((levels - below) ** 2))


def picp(pit, lower: float = 0.025, upper: float = 0.975) -> float:
    """Fraction of PIT values inside the inclusive interval [lower, upper]."""
    pit = np.asarray(pit, dtype=float)
    if pit.size == 0:
        raise EmptyInputError("picp needs at least one PIT value")
    if not (0 <= lower < upper <= 1):
        raise InvalidParameterError("need 0 <= lower < upper <= 1")
    return float(np.mean((pit >= lower) & (pit <= upper)))


def accuracy(integrated_probs: np.ndarray, labels) -> float:
    """Fraction of rows whose argmax class (ties to lowest index) matches the label."""
    probs = np.asarray(integrated_probs, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if probs.shape[0] == 0:
        raise EmptyInputError("accuracy needs at least one row")
    return float(np.mean(probs.argmax(axis=1) == labels))
