"""Empirical risk and derivative-free l_p attacks on piecewise-constant classifiers.

An attack fixes a set of unit directions (the +/- coordinate axes followed by
``n_random`` random directions on the unit l_p sphere) and marches outward
along each one over a fixed ladder of radii, dyadic shell by dyadic shell, then
bisects the first crossing it meets. Neither the directions nor the ladder
depend on the budget, so a larger budget only adds candidates and success is
monotone in the budget even across independent calls.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from ..collectors.datasets import LabeledDataset
from ..utils.config import Config
from ..utils.errors import ConfigError
from ..utils.seeding import derive_stream
from .classifiers import BaseClassifier

logger = logging.getLogger(__name__)

BUDGET_SLACK = 1e-12
MAX_BRACKET_DOUBLINGS = 30
SMALLEST_SHELL = -30  # radii below 2^-30 are never tried

Label = Union[int, str]


@dataclass(frozen=True)
class AttackConfig:
    p: float = 2.0
    epsilon: float = 0.0
    n_random: int = Config.ATTACK_N_RANDOM
    n_refine: int = Config.ATTACK_N_REFINE
    seed: int = Config.SEED

    def __post_init__(self):
        if self.p not in (1.0, 2.0, float("inf")):
            raise ConfigError(f"attack norm must be 1, 2 or inf, got {self.p}")
        if not 0 <= self.epsilon < float("inf"):
            raise ConfigError(f"epsilon must be finite and >= 0, got {self.epsilon}")
        if self.n_random < 1:
            raise ConfigError(f"n_random must be >= 1, got {self.n_random}")
        if self.n_refine < 1:
            raise ConfigError(f"n_refine must be >= 1, got {self.n_refine}")

    def with_epsilon(self, epsilon: float) -> "AttackConfig":
        return replace(self, epsilon=float(epsilon))


@dataclass
class AttackResult:
    success: bool
    adversarial_point: Optional[np.ndarray] = None
    distance: Optional[float] = None
    adversarial_label: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "success": self.success,
            "adversarial_point": None if self.adversarial_point is None else self.adversarial_point.tolist(),
            "distance": self.distance,
            "adversarial_label": self.adversarial_label,
        }


@dataclass
class RadiusEstimate:
    radius: float
    censored: bool  # True: no attack succeeded up to the largest bracket, radius is a lower bound
    nearest_adversarial: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "radius": self.radius,
            "censored": self.censored,
            "nearest_adversarial": self.nearest_adversarial,
        }


def lp_norm(v: np.ndarray, p: float) -> float:
    return float(np.linalg.norm(np.asarray(v, dtype=float), ord=p))


def unit_directions(p: float, dim: int, n_random: int, stream: np.random.Generator) -> np.ndarray:
    """2*dim signed coordinate axes, then n_random random directions with unit l_p norm."""
    axes = np.concatenate([np.eye(dim), -np.eye(dim)])
    if p == 2.0:
        raw = stream.standard_normal((n_random, dim))
    elif p == 1.0:
        raw = stream.exponential(size=(n_random, dim)) * stream.choice([-1.0, 1.0], size=(n_random, dim))
    else:
        raw = stream.uniform(-1.0, 1.0, size=(n_random, dim))
        pinned = stream.integers(0, dim, size=n_random)
        raw[np.arange(n_random), pinned] = stream.choice([-1.0, 1.0], size=n_random)
    norms = np.linalg.norm(raw, ord=p, axis=1)
    # a zero draw has probability zero; replace it by the first axis if it happens
    raw[norms == 0] = axes[0]
    norms[norms == 0] = 1.0
    return np.concatenate([axes, raw / norms[:, None]])


def _label_index(clf: BaseClassifier, y: Label) -> int:
    """Index of y in the classifier alphabet; -1 if the classifier can never emit it."""
    if isinstance(y, (int, np.integer)):
        return int(y)
    return clf.alphabet.index(y) if y in clf.alphabet else -1


def attack_ladder(epsilon: float, n_refine: int) -> np.ndarray:
    """Ascending march radii not above ``epsilon``.

    Shell m holds j * 2^m / n_refine for j in (n_refine/2, n_refine]. The points
    do not depend on the budget, so a larger budget only adds radii.
    """
    if epsilon <= 0.0:
        return np.empty(0)
    top = max(SMALLEST_SHELL, math.ceil(math.log2(epsilon)))
    steps = np.arange(n_refine // 2 + 1, n_refine + 1) / n_refine
    radii = np.concatenate([steps * 2.0 ** m for m in range(SMALLEST_SHELL, top + 1)])
    return radii[radii <= epsilon]


def _search(
    clf: BaseClassifier,
    x: np.ndarray,
    y: int,
    p: float,
    epsilon: float,
    directions: np.ndarray,
    n_refine: int,
) -> AttackResult:
    if clf.predict(x) != y:
        return AttackResult(True, x.copy(), 0.0, clf.label(x))
    radii = attack_ladder(epsilon, n_refine)
    if radii.size == 0:
        return AttackResult(False)

    m = directions.shape[0]
    block = n_refine - n_refine // 2
    for start in range(0, radii.size, block):
        shell = radii[start:start + block]
        candidates = x[None, None, :] + shell[None, :, None] * directions[:, None, :]
        flipped = (clf.predict_many(candidates.reshape(-1, x.shape[0])) != y).reshape(m, shell.size)
        hit = np.flatnonzero(flipped.any(axis=1))
        if hit.size:
            break
    else:
        return AttackResult(False)

    first = start + np.argmax(flipped[hit], axis=1)
    hi = radii[first]
    lo = np.where(first > 0, radii[np.maximum(first - 1, 0)], 0.0)
    dirs = directions[hit]
    for _ in range(n_refine):
        mid = 0.5 * (lo + hi)
        moved = clf.predict_many(x[None, :] + mid[:, None] * dirs) != y
        hi = np.where(moved, mid, hi)
        lo = np.where(moved, lo, mid)

    best = int(np.argmin(hi))
    z = x + hi[best] * dirs[best]
    distance = lp_norm(z - x, p)
    if distance > epsilon * (1.0 + BUDGET_SLACK) + BUDGET_SLACK or clf.predict(z) == y:
        return AttackResult(False)
    return AttackResult(True, z, distance, clf.label(z))


def attack_point(
    clf: BaseClassifier,
    x,
    y: Label,
    cfg: AttackConfig,
    stream: Optional[np.random.Generator] = None,
) -> AttackResult:
    """Search B_eps,p(x) for a point the classifier does not label y."""
    x = np.asarray(x, dtype=float)
    stream = stream if stream is not None else np.random.default_rng(cfg.seed)
    directions = unit_directions(cfg.p, x.shape[0], cfg.n_random, stream)
    return _search(clf, x, _label_index(clf, y), cfg.p, cfg.epsilon, directions, cfg.n_refine)


def natural_accuracy(clf: BaseClassifier, ds: LabeledDataset) -> float:
    predicted = clf.labels_many(ds.points)
    return sum(1 for a, b in zip(predicted, ds.label_values) if a == b) / ds.n


def attack_curve_point(
    clf: BaseClassifier,
    x: np.ndarray,
    y: Label,
    cfg: AttackConfig,
    eps_list: Sequence[float],
    stream: np.random.Generator,
) -> List[AttackResult]:
    """Attack one point at every budget in ``eps_list`` (ascending) with shared directions.

    A success at a budget is carried to every larger budget.
    """
    x = np.asarray(x, dtype=float)
    y_idx = _label_index(clf, y)
    directions = unit_directions(cfg.p, x.shape[0], cfg.n_random, stream)
    results: List[AttackResult] = []
    found: Optional[AttackResult] = None
    for eps in eps_list:
        if found is None:
            result = _search(clf, x, y_idx, cfg.p, eps, directions, cfg.n_refine)
            if result.success:
                found = result
            results.append(result)
        else:
            results.append(found)
    return results


def _sorted_budgets(eps_list: Sequence[float]) -> List[float]:
    eps_sorted = sorted(float(e) for e in eps_list)
    if not eps_sorted or eps_sorted[0] < 0 or not math.isfinite(eps_sorted[-1]):
        raise ConfigError(f"budgets must be a nonempty list of finite values >= 0, got {list(eps_list)}")
    return eps_sorted


def attack_dataset_curve(
    clf: BaseClassifier,
    ds: LabeledDataset,
    cfg: AttackConfig,
    eps_list: Sequence[float],
    workers: int = 1,
) -> Tuple[List[float], List[List[AttackResult]]]:
    """Per-sample attack results for each budget; sample i draws from stream (seed, i)."""
    eps_sorted = _sorted_budgets(eps_list)
    labels = ds.label_values

    def run(i: int) -> List[AttackResult]:
        return attack_curve_point(clf, ds.points[i], labels[i], cfg, eps_sorted, derive_stream(cfg.seed, i))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_sample = list(pool.map(run, range(ds.n)))
    else:
        per_sample = [run(i) for i in range(ds.n)]
    return eps_sorted, per_sample


def attack_dataset(clf: BaseClassifier, ds: LabeledDataset, cfg: AttackConfig, workers: int = 1) -> List[AttackResult]:
    _, per_sample = attack_dataset_curve(clf, ds, cfg, [cfg.epsilon], workers)
    return [results[0] for results in per_sample]


def adversarial_accuracy(clf: BaseClassifier, ds: LabeledDataset, cfg: AttackConfig, workers: int = 1) -> float:
    """Fraction of samples that are correctly classified and survive the attack."""
    results = attack_dataset(clf, ds, cfg, workers)
    return sum(1 for r in results if not r.success) / ds.n


def adversarial_accuracy_curve(
    clf: BaseClassifier,
    ds: LabeledDataset,
    cfg: AttackConfig,
    eps_list: Sequence[float],
    workers: int = 1,
) -> List[Tuple[float, float]]:
    """(eps, adversarial accuracy) pairs in ascending eps; non-increasing by construction."""
    eps_sorted, per_sample = attack_dataset_curve(clf, ds, cfg, eps_list, workers)
    curve = []
    for j, eps in enumerate(eps_sorted):
        survived = sum(1 for results in per_sample if not results[j].success)
        curve.append((eps, survived / ds.n))
    logger.debug("adversarial curve p=%s: %s", cfg.p, curve)
    return curve


def robust_at(clf: BaseClassifier, x, cfg: AttackConfig) -> bool:
    """No point within the budget changes the label the classifier gives x."""
    return not attack_point(clf, x, clf.predict(x), cfg).success


def robust_radius(
    clf: BaseClassifier,
    x,
    p: float = 2.0,
    tol: float = 1e-6,
    cfg: Optional[AttackConfig] = None,
) -> RadiusEstimate:
    """Empirical robust radius by bracketing then bisecting on ``robust_at``.

    An upper bound on any certified radius; censored when the bracket never breaks.
    """
    if not 1e-9 < tol < 1e-1:
        raise ConfigError(f"tol must lie in (1e-9, 1e-1), got {tol}")
    cfg = replace(cfg or AttackConfig(), p=float(p))
    x = np.asarray(x, dtype=float)
    y = clf.predict(x)

    def attempt(eps: float) -> AttackResult:
        return attack_point(clf, x, y, cfg.with_epsilon(eps))

    hi = cfg.epsilon if cfg.epsilon > 0 else 1.0
    lo = 0.0
    nearest: Optional[float] = None
    for _ in range(MAX_BRACKET_DOUBLINGS):
        result = attempt(hi)
        if result.success:
            nearest = result.distance
            break
        lo, hi = hi, 2.0 * hi
    else:
        logger.info("no adversarial point within %s; radius is censored", lo)
        return RadiusEstimate(radius=lo, censored=True)

    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        result = attempt(mid)
        if result.success:
            hi = mid
            nearest = min(nearest, result.distance)
        else:
            lo = mid
    return RadiusEstimate(radius=min(hi, nearest), censored=False, nearest_adversarial=nearest)
