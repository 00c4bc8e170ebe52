"""Noise-augmented hypothesis rule.

For a labeling h of S_X and a kernel n_sigma, the augmented classifier at x
scores every label y by the kernel mass of the training points h labels y and
answers with the unique maximum. A shared maximum is a Tie; when x lies outside
every training point's support nothing influences it. Decisions are taken on
log weights so full-support kernels never lose a far query to underflow.
"""

from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np
from scipy.special import logsumexp

from ..collectors.datasets import LabeledDataset
from ..noise.kernels import KernelSpec, density_many, log_normalizer, log_profile_many
from ..utils.errors import DatasetError, KernelError

TIE = -1
NO_INFLUENCE = -2

_TIE_TOKEN = "TIE"
_NONE_TOKEN = "NONE"

_QUERY_CHUNK = 4096


@dataclass(frozen=True)
class AugmentedDecision:
    """Label(y) when ``code`` is an alphabet index, otherwise TIE or NO_INFLUENCE."""

    code: int

    @classmethod
    def label(cls, index: int) -> "AugmentedDecision":
        return cls(int(index))

    @classmethod
    def tie(cls) -> "AugmentedDecision":
        return cls(TIE)

    @classmethod
    def no_influence(cls) -> "AugmentedDecision":
        return cls(NO_INFLUENCE)

    @property
    def is_label(self) -> bool:
        return self.code >= 0

    @property
    def is_tie(self) -> bool:
        return self.code == TIE

    @property
    def is_no_influence(self) -> bool:
        return self.code == NO_INFLUENCE

    def to_string(self, alphabet) -> str:
        return decision_token(self.code, alphabet)


def decision_token(code: int, alphabet) -> str:
    if code == TIE:
        return _TIE_TOKEN
    if code == NO_INFLUENCE:
        return _NONE_TOKEN
    return alphabet[int(code)]


def parse_decision(token: str, alphabet) -> int:
    token = token.strip()
    if token == _TIE_TOKEN:
        return TIE
    if token == _NONE_TOKEN:
        return NO_INFLUENCE
    try:
        return list(alphabet).index(token)
    except ValueError as e:
        raise DatasetError(f"unknown decision {token!r}") from e


def as_labeling(ds: LabeledDataset, h=None) -> np.ndarray:
    """Validate a labeling of S_X (alphabet indices); ``None`` means the dataset's own labels."""
    if h is None:
        return ds.labels
    arr = np.asarray(h, dtype=np.int64)
    if arr.shape != (ds.n,):
        raise DatasetError(f"labeling has length {arr.shape}, dataset has {ds.n} points")
    if np.any(arr < 0) or np.any(arr >= ds.n_classes):
        raise DatasetError("labeling uses a label outside the alphabet")
    return arr


def _check_dims(ds: LabeledDataset, k: KernelSpec) -> None:
    if k.dim != ds.dim:
        raise KernelError(f"kernel dim {k.dim} does not match dataset dim {ds.dim}")


def relative_weights(log_weights: np.ndarray) -> np.ndarray:
    """Kernel weights divided by each row's largest one, from log weights.

    A shared factor per row keeps argmax and ties as they are, and a far query
    still sees its nearest training points instead of underflowing to zero.
    Rows with no finite entry (no point in the support) stay all zero.
    """
    top = np.max(log_weights, axis=1, keepdims=True)
    return np.exp(log_weights - np.where(np.isfinite(top), top, 0.0))


def pairwise_kernel_matrix(ds: LabeledDataset, k: KernelSpec) -> np.ndarray:
    """K[i, j] = n_sigma(x_i - x_j) / n_sigma(0), computed once and shared read-only."""
    _check_dims(ds, k)
    disp = (ds.points[:, None, :] - ds.points[None, :, :]).reshape(-1, ds.dim)
    # the diagonal is log 1 = 0, the row maximum, so these are plain peak ratios
    matrix = relative_weights(log_profile_many(k, disp).reshape(ds.n, ds.n))
    matrix.setflags(write=False)
    return matrix


def scores_from_weights(weights: np.ndarray, labeling: np.ndarray, n_classes: int) -> np.ndarray:
    """Per-class sums of kernel weights, accumulated in training-index order.

    The fixed order makes equal scores compare equal bit for bit, which is what
    tie detection relies on.
    """
    scores = np.zeros((weights.shape[0], n_classes))
    for j, y in enumerate(labeling):
        scores[:, y] += weights[:, j]
    return scores


def decide(scores: np.ndarray) -> np.ndarray:
    """Decision codes for a (M, |Y|) score matrix."""
    top = np.max(scores, axis=1)
    n_top = np.sum(scores == top[:, None], axis=1)
    codes = np.argmax(scores, axis=1).astype(np.int64)
    codes[n_top > 1] = TIE
    codes[top <= 0.0] = NO_INFLUENCE
    return codes


def class_scores(ds: LabeledDataset, h, k: KernelSpec, x) -> Dict[str, float]:
    _check_dims(ds, k)
    labeling = as_labeling(ds, h)
    x = np.asarray(x, dtype=float)
    if x.shape != (ds.dim,):
        raise KernelError(f"query has shape {x.shape}, expected ({ds.dim},)")
    weights = density_many(k, x[None, :] - ds.points)[None, :]
    scores = scores_from_weights(weights, labeling, ds.n_classes)[0]
    return {label: float(s) for label, s in zip(ds.alphabet, scores)}


def class_log_scores(ds: LabeledDataset, h, k: KernelSpec, x) -> Dict[str, float]:
    """log of ``class_scores``, exact where the scores themselves underflow; -inf for no mass."""
    _check_dims(ds, k)
    labeling = as_labeling(ds, h)
    x = np.asarray(x, dtype=float)
    if x.shape != (ds.dim,):
        raise KernelError(f"query has shape {x.shape}, expected ({ds.dim},)")
    log_weights = log_profile_many(k, x[None, :] - ds.points) + log_normalizer(k)
    out = {}
    for y, label in enumerate(ds.alphabet):
        members = log_weights[labeling == y]
        out[label] = float(logsumexp(members)) if members.size else float("-inf")
    return out


def classify_many(ds: LabeledDataset, h, k: KernelSpec, queries) -> np.ndarray:
    """Decision codes at every row of ``queries``."""
    _check_dims(ds, k)
    labeling = as_labeling(ds, h)
    queries = np.asarray(queries, dtype=float)
    if queries.ndim != 2 or queries.shape[1] != ds.dim:
        raise KernelError(f"queries must be (M, {ds.dim}), got {queries.shape}")
    out = np.empty(queries.shape[0], dtype=np.int64)
    for start in range(0, queries.shape[0], _QUERY_CHUNK):
        block = queries[start:start + _QUERY_CHUNK]
        disp = (block[:, None, :] - ds.points[None, :, :]).reshape(-1, ds.dim)
        weights = relative_weights(log_profile_many(k, disp).reshape(block.shape[0], ds.n))
        out[start:start + block.shape[0]] = decide(scores_from_weights(weights, labeling, ds.n_classes))
    return out


def augmented_classify(ds: LabeledDataset, h, k: KernelSpec, x) -> AugmentedDecision:
    x = np.asarray(x, dtype=float)
    if x.shape != (ds.dim,):
        raise KernelError(f"query has shape {x.shape}, expected ({ds.dim},)")
    return AugmentedDecision(int(classify_many(ds, h, k, x[None, :])[0]))


def augmented_restriction(
    ds: LabeledDataset,
    h,
    k: KernelSpec,
    kernel_matrix: Optional[np.ndarray] = None,
) -> np.ndarray:
    """h_{n_sigma} restricted to S_X, as decision codes (alphabet index, TIE or NO_INFLUENCE)."""
    labeling = as_labeling(ds, h)
    matrix = pairwise_kernel_matrix(ds, k) if kernel_matrix is None else kernel_matrix
    return decide(scores_from_weights(matrix, labeling, ds.n_classes))


def is_fixed(ds: LabeledDataset, h, k: KernelSpec, kernel_matrix: Optional[np.ndarray] = None) -> bool:
    labeling = as_labeling(ds, h)
    return bool(np.array_equal(augmented_restriction(ds, labeling, k, kernel_matrix), labeling))


def influences(k: KernelSpec, x_i, x_j) -> bool:
    """True iff x_i puts positive kernel mass on x_j."""
    disp = np.asarray(x_j, dtype=float) - np.asarray(x_i, dtype=float)
    if disp.shape != (k.dim,):
        raise KernelError(f"points have dimension {disp.shape}, kernel expects {k.dim}")
    return bool(np.isfinite(log_profile_many(k, disp)[0]))
