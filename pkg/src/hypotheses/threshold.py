"""Critical noise level theta_{S_X,n}.

theta is the largest sigma at which every training point's own kernel mass
dominates the combined mass of all other points. Working in peak-ratio units
the constraint at x reads 1 >= sum_{x' != x} n(x - x') / n(0).
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Sequence, Tuple, Union

import numpy as np

from ..collectors.datasets import LabeledDataset, min_pairwise_distance
from ..noise.kernels import KernelFamily, KernelSpec, peak_ratio_many
from ..utils.errors import (
    DatasetError,
    InvariantViolation,
    KernelError,
    MonotonicityViolation,
    ThresholdUnboundedError,
)

logger = logging.getLogger(__name__)

MAX_DOUBLINGS = 60
AUDIT_POINTS = 32


@dataclass
class ThresholdResult:
    family: KernelFamily
    theta_weak: float
    theta_strict: float
    binding_index: int
    rel_tol: float
    residual_curve: List[Tuple[float, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "family": self.family.value,
            "theta_weak": self.theta_weak,
            "theta_strict": self.theta_strict,
            "binding_index": self.binding_index,
            "rel_tol": self.rel_tol,
            "residual_curve": [[sigma, slack] for sigma, slack in self.residual_curve],
        }


def _family(family: Union[str, KernelFamily]) -> KernelFamily:
    try:
        return KernelFamily(family)
    except ValueError as e:
        raise KernelError(f"unknown kernel family {family!r}") from e


def _check_size(ds: LabeledDataset) -> None:
    if ds.n < 3:
        raise DatasetError(f"the threshold needs at least 3 training points, got {ds.n}")


def neighbor_mass(ds: LabeledDataset, family, sigma: float) -> np.ndarray:
    """Per point: sum over the other points of the peak ratio at their displacement."""
    _check_size(ds)
    k = KernelSpec(_family(family), sigma, ds.dim)
    disp = (ds.points[:, None, :] - ds.points[None, :, :]).reshape(-1, ds.dim)
    ratios = peak_ratio_many(k, disp).reshape(ds.n, ds.n)
    np.fill_diagonal(ratios, 0.0)
    return np.sum(ratios, axis=1)


def binding_slack(ds: LabeledDataset, family, sigma: float) -> np.ndarray:
    """1 - neighbor mass per point; the constraint holds where this is >= 0."""
    return 1.0 - neighbor_mass(ds, family, sigma)


def feasible(ds: LabeledDataset, family, sigma: float, strict: bool = False) -> bool:
    if not sigma > 0:
        raise KernelError(f"sigma must be positive, got {sigma}")
    mass = neighbor_mass(ds, family, sigma)
    if strict:
        return bool(np.all(1.0 > mass))
    return bool(np.all(1.0 >= mass))


def _bisect(predicate: Callable[[float], bool], start: float, rel_tol: float) -> Tuple[float, float]:
    """Bracket [lo feasible, hi infeasible] by geometric steps from ``start`` and bisect it."""
    lo = start
    steps = 0
    while not predicate(lo):
        lo /= 2.0
        steps += 1
        if steps > MAX_DOUBLINGS:
            raise ThresholdUnboundedError("no feasible sigma found below the initial bracket")
    hi = lo * 2.0
    steps = 0
    while predicate(hi):
        lo = hi
        hi *= 2.0
        steps += 1
        if steps > MAX_DOUBLINGS:
            raise ThresholdUnboundedError(f"threshold unbounded: still feasible at sigma = {hi:g}")

    while (hi - lo) / hi >= rel_tol:
        mid = 0.5 * (lo + hi)
        if predicate(mid):
            lo = mid
        else:
            hi = mid
    return lo, hi


def audit_monotonicity(ds: LabeledDataset, family, sigmas: Sequence[float], strict: bool) -> List[bool]:
    """Feasibility along an increasing sigma grid; raises if a feasible value follows an infeasible one."""
    flags = [feasible(ds, family, s, strict) for s in sigmas]
    seen_infeasible = False
    for s, ok in zip(sigmas, flags):
        if not ok:
            seen_infeasible = True
        elif seen_infeasible:
            raise MonotonicityViolation(
                f"feasibility is not monotone in sigma for {_family(family).value}: feasible again at sigma = {s:g}"
            )
    return flags


def solve_threshold(ds: LabeledDataset, family, rel_tol: float = 1e-9) -> ThresholdResult:
    family = _family(family)
    _check_size(ds)
    if not 1e-12 < rel_tol < 1e-3:
        raise KernelError(f"rel_tol must lie in (1e-12, 1e-3), got {rel_tol}")
    KernelSpec(family, 1.0, ds.dim)  # rejects uniform_ball outside 2-D early

    start = min_pairwise_distance(ds) / 4.0
    weak_lo, weak_hi = _bisect(lambda s: feasible(ds, family, s, strict=False), start, rel_tol)
    strict_lo, _ = _bisect(lambda s: feasible(ds, family, s, strict=True), start, rel_tol)

    slack_above = binding_slack(ds, family, weak_hi)
    binding_index = int(np.argmin(slack_above))

    grid = np.geomspace(weak_lo / 4.0, weak_lo * 4.0, AUDIT_POINTS)
    audit_monotonicity(ds, family, grid, strict=False)
    audit_monotonicity(ds, family, grid, strict=True)
    curve = [(float(s), float(np.min(binding_slack(ds, family, s)))) for s in grid]

    if strict_lo > weak_lo:
        raise InvariantViolation(f"strict threshold {strict_lo} exceeds weak threshold {weak_lo}")
    if family is not KernelFamily.UNIFORM_BALL and abs(weak_lo - strict_lo) > 4.0 * rel_tol * weak_lo:
        raise InvariantViolation(
            f"weak and strict thresholds differ by more than 4 rel_tol for {family.value}: {weak_lo} vs {strict_lo}"
        )

    logger.debug("theta_weak=%r theta_strict=%r binding=%d", weak_lo, strict_lo, binding_index)
    return ThresholdResult(
        family=family,
        theta_weak=float(weak_lo),
        theta_strict=float(strict_lo),
        binding_index=binding_index,
        rel_tol=rel_tol,
        residual_curve=curve,
    )


def brute_force_threshold(ds: LabeledDataset, family, sigmas: Sequence[float], strict: bool = False) -> float:
    """Largest grid sigma that is feasible with every smaller grid value feasible too (0 if none)."""
    best = 0.0
    for s in sorted(sigmas):
        if not feasible(ds, family, s, strict):
            break
        best = float(s)
    return best
