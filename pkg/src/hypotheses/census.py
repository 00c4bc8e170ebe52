"""Exhaustive census of H_{S_X} versus the noise-augmented class H_{S_X,n_sigma}.

A labeling counts as realizable after augmentation when it is a fixed point of
the augmented restriction. ``image_size`` counts the distinct tie-free
restrictions, which is the augmented class read literally as an image set.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from ..collectors.datasets import BINARY_ALPHABET, LabeledDataset
from ..noise.kernels import KernelSpec
from ..utils.config import Config
from ..utils.errors import CensusCapError, ConfigError, DatasetError
from .augment import as_labeling, decide, is_fixed, pairwise_kernel_matrix

logger = logging.getLogger(__name__)

MAX_LOST_EXAMPLES = 16
CHUNK_SIZE = 1 << 16


@dataclass
class CensusReport:
    total: int
    realizable_after: int
    image_size: int
    tie_count: int
    lost_examples: List[List[str]] = field(default_factory=list)
    kernel: Optional[KernelSpec] = None
    best_agreement: Optional[int] = None  # most target labels any fixed labeling reproduces
    fixed_indices: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def equality(self) -> bool:
        return self.realizable_after == self.total

    def to_dict(self) -> dict:
        return {
            "kernel": self.kernel.to_dict() if self.kernel else None,
            "total": self.total,
            "realizable_after": self.realizable_after,
            "image_size": self.image_size,
            "equality": self.equality,
            "tie_count": self.tie_count,
            "lost_examples": self.lost_examples,
            "best_agreement": self.best_agreement,
        }


@dataclass
class _Partial:
    realizable: int
    tie_count: int
    image: np.ndarray
    lost: np.ndarray
    fixed: Optional[np.ndarray]
    best_agreement: int = -1


def labelings_for_indices(indices: np.ndarray, n: int, n_classes: int) -> np.ndarray:
    """Row r is the labeling whose base-|Y| digits (most significant first) spell indices[r]."""
    powers = n_classes ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return (indices[:, None] // powers[None, :]) % n_classes


def _encode(labelings: np.ndarray, n_classes: int) -> np.ndarray:
    n = labelings.shape[1]
    powers = n_classes ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return labelings @ powers


def _census_chunk(
    matrix: np.ndarray,
    n_classes: int,
    start: int,
    stop: int,
    keep_fixed: bool,
    target: Optional[np.ndarray] = None,
) -> _Partial:
    n = matrix.shape[0]
    indices = np.arange(start, stop, dtype=np.int64)
    labelings = labelings_for_indices(indices, n, n_classes)
    rows = np.arange(indices.size)

    # same accumulation order as augment.scores_from_weights, so ties agree bitwise
    scores = np.zeros((indices.size, n, n_classes))
    for j in range(n):
        scores[rows, :, labelings[:, j]] += matrix[:, j]
    codes = decide(scores.reshape(-1, n_classes)).reshape(indices.size, n)

    fixed = np.all(codes == labelings, axis=1)
    total_rows = np.all(codes >= 0, axis=1)
    image = np.unique(_encode(codes[total_rows], n_classes))
    lost = indices[~fixed][:MAX_LOST_EXAMPLES]
    best = -1
    if target is not None and np.any(fixed):
        best = int(np.max(np.sum(labelings[fixed] == target[None, :], axis=1)))
    return _Partial(
        realizable=int(np.sum(fixed)),
        tie_count=int(np.sum(~total_rows)),
        image=image,
        lost=lost,
        fixed=indices[fixed] if keep_fixed else None,
        best_agreement=best,
    )


def enumerate_census(
    ds: LabeledDataset,
    k: KernelSpec,
    cap: int = Config.CENSUS_CAP,
    workers: int = 1,
    keep_fixed: bool = False,
    target=None,
) -> CensusReport:
    """Enumerate all |Y|^N labelings of S_X and count those the augmented rule reproduces.

    With ``target`` (a labeling of S_X) the report also carries the best agreement
    between the target and any realizable labeling.
    """
    total = ds.n_classes ** ds.n
    if total > cap:
        raise CensusCapError(total, cap)
    matrix = pairwise_kernel_matrix(ds, k)
    target = as_labeling(ds, target) if target is not None else None

    bounds = [(a, min(a + CHUNK_SIZE, total)) for a in range(0, total, CHUNK_SIZE)]
    logger.debug("census over %d labelings in %d chunks", total, len(bounds))

    def run(bound):
        return _census_chunk(matrix, ds.n_classes, bound[0], bound[1], keep_fixed, target)

    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(run, bounds))
    else:
        partials = [run(b) for b in bounds]

    image = np.unique(np.concatenate([p.image for p in partials])) if partials else np.array([], dtype=np.int64)
    lost = np.sort(np.concatenate([p.lost for p in partials]))[:MAX_LOST_EXAMPLES]
    lost_examples = [
        [ds.alphabet[y] for y in row] for row in labelings_for_indices(lost, ds.n, ds.n_classes)
    ]
    fixed = np.concatenate([p.fixed for p in partials]) if keep_fixed else None

    return CensusReport(
        total=total,
        realizable_after=sum(p.realizable for p in partials),
        image_size=int(image.size),
        tie_count=sum(p.tie_count for p in partials),
        lost_examples=lost_examples,
        kernel=k,
        best_agreement=max(p.best_agreement for p in partials) if target is not None else None,
        fixed_indices=fixed,
    )


def worst_case_labeling(ds: LabeledDataset, index: int) -> np.ndarray:
    """+1 everywhere except -1 at ``index``."""
    if not ds.is_binary:
        raise DatasetError(f"worst-case labeling needs the binary alphabet {list(BINARY_ALPHABET)}")
    if not 0 <= index < ds.n:
        raise DatasetError(f"index {index} outside [0, {ds.n})")
    labeling = np.full(ds.n, ds.label_index("+1"), dtype=np.int64)
    labeling[index] = ds.label_index("-1")
    return labeling


def worst_case_check(ds: LabeledDataset, k: KernelSpec, index: int) -> bool:
    """True iff the lone -1 labeling at ``index`` survives augmentation."""
    return is_fixed(ds, worst_case_labeling(ds, index), k)


def class_from_census(ds: LabeledDataset, report: CensusReport) -> np.ndarray:
    """The fixed labelings of a binary census as a (M, N) matrix of +-1 values."""
    if report.fixed_indices is None:
        raise ConfigError("census was run without keep_fixed")
    if not ds.is_binary:
        raise DatasetError("only binary censuses map onto +-1 classes")
    labelings = labelings_for_indices(report.fixed_indices, ds.n, ds.n_classes)
    signs = np.array([-1 if a == "-1" else 1 for a in ds.alphabet], dtype=np.int64)
    return signs[labelings]


def full_sign_class(n: int) -> np.ndarray:
    """{+-1}^n, the class of a shattered point set."""
    return 2 * labelings_for_indices(np.arange(2 ** n, dtype=np.int64), n, 2) - 1


def pac_sample_bound(class_size: int, eta: float, delta: float) -> int:
    """ceil(ln(|H| / delta) / eta) samples suffice for a finite realizable class."""
    if class_size < 1:
        raise ConfigError(f"class size must be >= 1, got {class_size}")
    if not 0.0 < eta < 1.0:
        raise ConfigError(f"eta must lie in (0, 1), got {eta}")
    if not 0.0 < delta < 1.0:
        raise ConfigError(f"delta must lie in (0, 1), got {delta}")
    return int(math.ceil(math.log(class_size / delta) / eta))


def _sign_chunk(class_size: int) -> int:
    # keeps the (signs x hypotheses) product near 4M entries
    return max(1, min(CHUNK_SIZE, (1 << 22) // class_size))


def _sup_sum(signs: np.ndarray, hypotheses: np.ndarray) -> int:
    """Sum over sign vectors of max_h <sigma, h>, in exact integer arithmetic."""
    return int(np.sum(np.max(signs @ hypotheses.T, axis=1)))


def empirical_rademacher(
    hypotheses,
    mode: str = "exact",
    m: int = 10000,
    seed: int = 0,
    max_exact_bits: int = 20,
) -> float:
    """Empirical Rademacher complexity E_sigma sup_h (2/N) sum_i sigma_i h(x_i) of a +-1 class."""
    hypotheses = np.asarray(hypotheses, dtype=np.int64)
    if hypotheses.ndim != 2 or hypotheses.shape[0] == 0:
        raise DatasetError("the hypothesis class must be a nonempty (M, N) matrix")
    if not np.all(np.abs(hypotheses) == 1):
        raise DatasetError("hypotheses must take values in {-1, +1}")
    hypotheses = np.unique(hypotheses, axis=0)
    n = hypotheses.shape[1]

    if mode == "exact":
        if n > max_exact_bits:
            raise ConfigError(f"exact mode enumerates 2^{n} sign vectors; limit is 2^{max_exact_bits}")
        if hypotheses.shape[0] == 2 ** n:
            # a shattering class attains sup = N for every sign vector
            return 2.0
        total = 0
        step = _sign_chunk(hypotheses.shape[0])
        for start in range(0, 2 ** n, step):
            stop = min(start + step, 2 ** n)
            signs = 2 * labelings_for_indices(np.arange(start, stop, dtype=np.int64), n, 2) - 1
            total += _sup_sum(signs, hypotheses)
        return 2.0 * total / (n * 2 ** n)

    if mode == "monte_carlo":
        if m < 1:
            raise ConfigError("monte_carlo mode needs m >= 1")
        rng = np.random.default_rng(seed)
        total = 0
        step = _sign_chunk(hypotheses.shape[0])
        for start in range(0, m, step):
            count = min(step, m - start)
            signs = 2 * rng.integers(0, 2, size=(count, n), dtype=np.int64) - 1
            total += _sup_sum(signs, hypotheses)
        return 2.0 * total / (n * m)

    raise ConfigError(f"unknown Rademacher mode {mode!r}")


__all__ = [
    "CensusReport",
    "enumerate_census",
    "worst_case_check",
    "worst_case_labeling",
    "class_from_census",
    "full_sign_class",
    "pac_sample_bound",
    "empirical_rademacher",
]
