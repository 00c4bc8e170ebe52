"""Monte-Carlo randomized smoothing with confidence-gated abstention.

The smoothed classifier votes h*(x + eta) over n noise draws and answers with
the plurality label only when a one-sided Clopper-Pearson lower bound on its
probability exceeds 1/2 at failure probability alpha. Single-phase: the same
draws select the plurality class and bound its probability.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from statsmodels.stats.proportion import proportion_confint

from ..collectors.datasets import LabeledDataset
from ..noise.kernels import KernelSpec, sample
from ..utils.config import Config
from ..utils.errors import ConfigError, KernelError
from ..utils.seeding import derive_stream
from .classifiers import BaseClassifier

logger = logging.getLogger(__name__)

ABSTAIN = "ABSTAIN"
_BATCH = 10000


@dataclass
class SmoothedPrediction:
    votes: Dict[str, int]
    n: int
    alpha: float
    decision: Optional[str]  # None means abstain
    top_prob_lower: float

    @property
    def abstained(self) -> bool:
        return self.decision is None

    def to_dict(self) -> dict:
        return {
            "votes": self.votes,
            "n": self.n,
            "alpha": self.alpha,
            "decision": ABSTAIN if self.decision is None else self.decision,
            "top_prob_lower": self.top_prob_lower,
        }


def lower_confidence_bound(successes: int, n: int, alpha: float) -> float:
    """One-sided (1 - alpha) Clopper-Pearson lower bound on a binomial proportion."""
    return float(proportion_confint(successes, n, alpha=2 * alpha, method="beta")[0])


def smooth_predict(
    clf: BaseClassifier,
    k: KernelSpec,
    x,
    n: int = Config.SMOOTH_N,
    alpha: float = Config.SMOOTH_ALPHA,
    stream: np.random.Generator = None,
) -> SmoothedPrediction:
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    if not 0.0 < alpha < 0.5:
        raise ConfigError(f"alpha must lie in (0, 0.5), got {alpha}")
    if k.dim != clf.dim:
        raise KernelError(f"kernel dim {k.dim} does not match classifier dim {clf.dim}")
    stream = stream if stream is not None else derive_stream(Config.SEED)
    x = np.asarray(x, dtype=float)

    counts = np.zeros(len(clf.alphabet), dtype=np.int64)
    remaining = n
    while remaining > 0:
        batch = min(_BATCH, remaining)
        noisy = x[None, :] + sample(k, stream, batch)
        counts += np.bincount(clf.predict_many(noisy), minlength=len(clf.alphabet))
        remaining -= batch

    top = int(np.argmax(counts))
    n_top = int(np.sum(counts == counts[top]))
    lower = lower_confidence_bound(int(counts[top]), n, alpha)
    decision = clf.alphabet[top] if n_top == 1 and lower > 0.5 else None

    return SmoothedPrediction(
        votes={label: int(c) for label, c in zip(clf.alphabet, counts)},
        n=n,
        alpha=alpha,
        decision=decision,
        top_prob_lower=lower,
    )


@dataclass
class SmoothedAccuracy:
    accuracy: float
    abstain_rate: float
    predictions: List[SmoothedPrediction] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {"accuracy": self.accuracy, "abstain_rate": self.abstain_rate}


def smooth_predict_many(
    clf: BaseClassifier,
    k: KernelSpec,
    points: np.ndarray,
    n: int,
    alpha: float,
    seed: int,
    workers: int = 1,
) -> List[SmoothedPrediction]:
    """One prediction per row, each on the sub-stream derived from (seed, row index)."""

    def run(i: int) -> SmoothedPrediction:
        return smooth_predict(clf, k, points[i], n, alpha, derive_stream(seed, i))

    indices = range(points.shape[0])
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, indices))
    return [run(i) for i in indices]


def smooth_accuracy(
    clf: BaseClassifier,
    k: KernelSpec,
    ds_eval: LabeledDataset,
    n: int = Config.SMOOTH_N,
    alpha: float = Config.SMOOTH_ALPHA,
    seed: int = 0,
    workers: int = 1,
) -> SmoothedAccuracy:
    """Smoothed accuracy over ``ds_eval``; an abstention counts as a miss."""
    predictions = smooth_predict_many(clf, k, ds_eval.points, n, alpha, seed, workers)
    truth = ds_eval.label_values
    correct = sum(1 for p, y in zip(predictions, truth) if p.decision == y)
    abstained = sum(1 for p in predictions if p.abstained)
    logger.debug("smoothed accuracy %d/%d, %d abstentions", correct, ds_eval.n, abstained)
    return SmoothedAccuracy(
        accuracy=correct / ds_eval.n,
        abstain_rate=abstained / ds_eval.n,
        predictions=predictions,
    )
