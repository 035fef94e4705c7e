"""Posterior predictive check engine.

Replicated labels are drawn under one of three uncertainty modes:

* Bayesian — one model index per replicate, shared by every row;
* ConditionallyIndependent — a fresh model index per row;
* PointEstimate — a fixed model index for all rows.

The test statistic is always evaluated against the full posterior-integrated
predictive, never against the sampled model.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import statistics as st
from .predictive import InvalidParameterError, PosteriorWeights

THREADS_ENV_VAR = "PPC_UQ_THREADS"


@dataclass(frozen=True)
class Bayesian:
    def describe(self) -> str:
        return "bayesian"


@dataclass(frozen=True)
class ConditionallyIndependent:
    def describe(self) -> str:
        return "independent"


@dataclass(frozen=True)
class PointEstimate:
    index: int

    def describe(self) -> str:
        return f"point:{self.index}"


UncertaintyMode = Union[Bayesian, ConditionallyIndependent, PointEstimate]

BAYESIAN = Bayesian()
INDEPENDENT = ConditionallyIndependent()


def parse_mode(text: str) -> UncertaintyMode:
    if text == "bayesian":
        return BAYESIAN
    if text == "independent":
        return INDEPENDENT
    if text.startswith("point:"):
        return PointEstimate(int(text.split(":", 1)[1]))
    raise InvalidParameterError(f"unknown mode: {text!r}")


@dataclass
class PredictiveContext:
    """Quantities of the integrated predictive reused across replicates."""

    preds: st.EnsemblePredictions
    weights: np.ndarray                  # [M]
    integrated: np.ndarray = None        # classification: [N, C]
    predicted: np.ndarray = None         # classification: argmax class
    confidence: np.ndarray = None        # classification: max prob
    class_probs: np.ndarray = None       # classification: [N, M, C]
    class_cums: np.ndarray = None        # classification: per-row-per-model CDF
    means: np.ndarray = None             # regression: [N, M]
    stds: np.ndarray = None              # regression: [N, M]


def build_context(preds: st.EnsemblePredictions,
                  weights: PosteriorWeights = None) -> PredictiveContext:
    w = st._weights_array(weights, preds.num_models)
    ctx = PredictiveContext(preds=preds, weights=w)
    if preds.kind == st.CLASSIFICATION:
        ctx.class_probs = preds.class_probs()
        cums = np.cumsum(ctx.class_probs, axis=2)
        cums[:, :, -1] = 1.0
        ctx.class_cums = cums
        ctx.integrated = np.einsum("nmc,m->nc", ctx.class_probs, w)
        ctx.predicted = ctx.integrated.argmax(axis=1)
        ctx.confidence = ctx.integrated.max(axis=1)
    else:
        ctx.means = preds.means
        ctx.stds = preds.stds
    return ctx


@dataclass(frozen=True)
class EceStatistic:
    bins: st.BinningConfig = st.BinningConfig()

    kind = st.CLASSIFICATION
    name = "ece"

    def evaluate(self, labels: np.ndarray, ctx: PredictiveContext) -> float:
        return st.ece_from_confidence(ctx.confidence, ctx.predicted, labels,
                                      self.bins.num_bins)


@dataclass(frozen=True)
class AccuracyStatistic:
    kind = st.CLASSIFICATION
    name = "accuracy"

    def evaluate(self, labels: np.ndarray, ctx: PredictiveContext) -> float:
        return float(np.mean(ctx.predicted == labels))


@dataclass(frozen=True)
class CalibrationErrorStatistic:
    quantiles: st.QuantileSet = st.QuantileSet()

    kind = st.REGRESSION
    name = "calibration"

    def evaluate(self, labels: np.ndarray, ctx: PredictiveContext) -> float:
        pit = st.pit_from_gaussians(ctx.means, ctx.stds, ctx.weights, labels)
        return st.calibration_error(pit, self.quantiles)


@dataclass(frozen=True)
class PicpStatistic:
    lower: float = 0.025
    upper: float = 0.975

    kind = st.REGRESSION
    name = "picp"

    def evaluate(self, labels: np.ndarray, ctx: PredictiveContext) -> float:
        pit = st.pit_from_gaussians(ctx.means, ctx.stds, ctx.weights, labels)
        return st.picp(pit, self.lower, self.upper)


TestStatistic = Union[EceStatistic, AccuracyStatistic,
                      CalibrationErrorStatistic, PicpStatistic]


@dataclass
class StatisticSamples:
    """Replicated statistic values plus (optionally) the observed one."""

    samples: np.ndarray
    num_replicates: int
    seed: int
    mode: str
    statistic: str
    observed: float = None


@dataclass
class PpcReport:
    p_value: float
    sharpness: float
    passed: bool
    percentiles: dict       # keys p5, p25, p50, p75, p95
    observed: float
    num_replicates: int
    seed: int
    mode: str
    statistic: str

    def to_dict(self) -> dict:
        return {
            "p_value": self.p_value,
            "sharpness": self.sharpness,
            "passed": self.passed,
            "percentiles": dict(self.percentiles),
            "observed": self.observed,
            "num_replicates": self.num_replicates,
            "seed": self.seed,
            "mode": self.mode,
            "statistic": self.statistic,
        }


def replicate_rng(seed: int, k: int) -> np.random.Generator:
    """Substream for replicate k: a fixed mixing of (seed, k)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, k])))


def replicate_labels(preds: st.EnsemblePredictions, weights: PosteriorWeights,
                     mode: UncertaintyMode, rng: np.random.Generator) -> np.ndarray:
    """One replicated label vector y_rep under the given uncertainty mode.

    RNG consumption order: model index uniform(s) first (skipped entirely when
    M = 1 or in PointEstimate mode), then one row draw per row in row order.
    """
    return _replicate_labels_ctx(build_context(preds, weights), mode, rng)


def _replicate_labels_ctx(ctx: PredictiveContext, mode: UncertaintyMode,
                          rng: np.random.Generator) -> np.ndarray:
    n, m = ctx.preds.num_rows, ctx.preds.num_models
    if isinstance(mode, PointEstimate):
        if not (0 <= mode.index < m):
            raise InvalidParameterError("point-estimate index out of range")
        idx = np.full(n, mode.index)
    elif m == 1:
        idx = np.zeros(n, dtype=int)
    elif isinstance(mode, Bayesian):
        cum = np.cumsum(ctx.weights)
        cum[-1] = 1.0
        idx = np.full(n, int(np.searchsorted(cum, rng.random(), side="right")))
    elif isinstance(mode, ConditionallyIndependent):
        cum = np.cumsum(ctx.weights)
        cum[-1] = 1.0
        idx = np.searchsorted(cum, rng.random(n), side="right")
    else:
        raise InvalidParameterError(f"unknown mode: {mode!r}")
    rows = np.arange(n)
    if ctx.preds.kind == st.CLASSIFICATION:
        u = rng.random(n)
        return (u[:, None] > ctx.class_cums[rows, idx]).sum(axis=1)
    z = rng.standard_normal(n)
    return ctx.means[rows, idx] + ctx.stds[rows, idx] * z


def _check_compatible(preds: st.EnsemblePredictions, statistic) -> None:
    if statistic.kind != preds.kind:
        raise st.KindMismatchError(
            f"statistic {statistic.name!r} needs {statistic.kind} predictions, "
            f"got {preds.kind}")


def _num_threads(threads) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get(THREADS_ENV_VAR)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def sample_statistic(preds: st.EnsemblePredictions, weights: PosteriorWeights,
                     statistic, mode: UncertaintyMode, num_replicates: int = 1000,
                     seed: int = 0, threads: int = None) -> StatisticSamples:
    """Replicated test-statistic values, one per deterministic rng substream.

    Output is bit-identical regardless of thread count: replicate k always
    uses the substream derived from (seed, k) and lands at index k.
    """
    if num_replicates < 1:
        raise InvalidParameterError("need at least one replicate")
    _check_compatible(preds, statistic)
    ctx = build_context(preds, weights)
    out = np.empty(num_replicates, dtype=float)

    def run_block(lo: int, hi: int) -> None:
        for k in range(lo, hi):
            rng = replicate_rng(seed, k)
            labels = _replicate_labels_ctx(ctx, mode, rng)
            out[k] = statistic.evaluate(labels, ctx)

    workers = min(_num_threads(threads), num_replicates)
    if workers <= 1:
        run_block(0, num_replicates)
    else:
        bounds = np.linspace(0, num_replicates, workers + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_block, bounds[i], bounds[i + 1])
                       for i in range(workers)]
            for f in futures:
                f.result()
    return StatisticSamples(samples=out, num_replicates=num_replicates, seed=seed,
                            mode=mode.describe(), statistic=statistic.name)


def _sample_values(samples) -> np.ndarray:
    vals = getattr(samples, "samples", samples)
    return np.asarray(vals, dtype=float)


def p_value(samples, observed: float) -> float:
    """Fraction of replicated values strictly below the observed value."""
    vals = _sample_values(samples)
    if vals.size == 0:
        raise st.EmptyInputError("p_value needs at least one sample")
    return float(np.mean(vals < observed))


def sharpness(samples) -> float:
    """Width of the replicated-statistic distribution: q95 minus q5."""
    vals = _sample_values(samples)
    if vals.size < 2:
        raise st.EmptyInputError("sharpness needs at least two samples")
    q5, q95 = np.quantile(vals, [0.05, 0.95])
    return float(q95 - q5)


def run_ppc(preds: st.EnsemblePredictions, weights: PosteriorWeights, labels,
            statistic, mode: UncertaintyMode, num_replicates: int = 1000,
            seed: int = 0, threads: int = None) -> PpcReport:
    """Full check: observed statistic vs its posterior predictive distribution."""
    _check_compatible(preds, statistic)
    labels = st.validate_labels(preds, labels)
    ctx = build_context(preds, weights)
    observed = float(statistic.evaluate(labels, ctx))
    ss = sample_statistic(preds, weights, statistic, mode,
                          num_replicates=num_replicates, seed=seed, threads=threads)
    ss.observed = observed
    p = p_value(ss, observed)
    pcts = np.quantile(ss.samples, [0.05, 0.25, 0.5, 0.75, 0.95])
    return PpcReport(
        p_value=p,
        sharpness=sharpness(ss),
        passed=bool(0.0 < p < 1.0),
        percentiles={"p5": float(pcts[0]), "p25": float(pcts[1]),
                     "p50": float(pcts[2]), "p75": float(pcts[3]),
                     "p95": float(pcts[4])},
        observed=observed,
        num_replicates=num_replicates,
        seed=seed,
        mode=mode.describe(),
        statistic=statistic.name,
    )
