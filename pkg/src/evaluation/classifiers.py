"""Base classifiers h* that smoothing and the attacks act on.

Every classifier is deterministic, total on R^d and safe to share read-only
between threads. ``predict_many`` returns alphabet indices.
"""

from abc import ABC, abstractmethod
from typing import Optional, Sequence, Tuple

import numpy as np

from ..collectors.datasets import BINARY_ALPHABET, LabeledDataset
from ..hypotheses.augment import as_labeling, classify_many
from ..noise.kernels import KernelSpec
from ..utils.errors import ConfigError

_CHUNK = 8192


class BaseClassifier(ABC):
    alphabet: Tuple[str, ...]
    dim: int

    @abstractmethod
    def predict_many(self, points: np.ndarray) -> np.ndarray:
        ...

    def predict(self, x) -> int:
        return int(self.predict_many(np.asarray(x, dtype=float)[None, :])[0])

    def label(self, x) -> str:
        return self.alphabet[self.predict(x)]

    def labels_many(self, points: np.ndarray) -> Tuple[str, ...]:
        return tuple(self.alphabet[i] for i in self.predict_many(points))

    def _check(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        if points.ndim != 2 or points.shape[1] != self.dim:
            raise ConfigError(f"classifier expects (M, {self.dim}) inputs, got {points.shape}")
        return points


class NearestNeighborClassifier(BaseClassifier):
    """1-NN over S in l2; equidistant queries go to the lowest training index."""

    def __init__(self, ds: LabeledDataset):
        self.ds = ds
        self.alphabet = ds.alphabet
        self.dim = ds.dim

    def predict_many(self, points) -> np.ndarray:
        points = self._check(points)
        out = np.empty(points.shape[0], dtype=np.int64)
        for start in range(0, points.shape[0], _CHUNK):
            block = points[start:start + _CHUNK]
            diff = block[:, None, :] - self.ds.points[None, :, :]
            nearest = np.argmin(np.sum(diff * diff, axis=2), axis=1)
            out[start:start + block.shape[0]] = self.ds.labels[nearest]
        return out


class HalfspaceClassifier(BaseClassifier):
    """+1 where w.x + b >= 0, else -1."""

    def __init__(self, w: Sequence[float], b: float):
        self.w = np.asarray(w, dtype=float)
        if self.w.ndim != 1 or not np.any(self.w != 0):
            raise ConfigError("halfspace needs a nonzero weight vector")
        self.b = float(b)
        self.alphabet = BINARY_ALPHABET
        self.dim = self.w.shape[0]

    def predict_many(self, points) -> np.ndarray:
        points = self._check(points)
        return (points @ self.w + self.b >= 0.0).astype(np.int64)


class ConstantClassifier(BaseClassifier):
    def __init__(self, label: str, alphabet: Sequence[str], dim: int):
        self.alphabet = tuple(alphabet)
        if label not in self.alphabet:
            raise ConfigError(f"constant label {label!r} is not in {list(self.alphabet)}")
        self.index = self.alphabet.index(label)
        self.dim = dim

    def predict_many(self, points) -> np.ndarray:
        points = self._check(points)
        return np.full(points.shape[0], self.index, dtype=np.int64)


class AugmentedClassifier(BaseClassifier):
    """Noise-augmented rule over (S_X, h, k); Tie and NoInfluence fall back to one label.

    The default fallback is the most frequent label of h, lowest alphabet index first.
    """

    def __init__(self, ds: LabeledDataset, h=None, k: KernelSpec = None, fallback: Optional[str] = None):
        if k is None:
            raise ConfigError("the augmented classifier needs a kernel")
        self.ds = ds
        self.labeling = as_labeling(ds, h)
        self.kernel = k
        self.alphabet = ds.alphabet
        self.dim = ds.dim
        if fallback is None:
            counts = np.bincount(self.labeling, minlength=ds.n_classes)
            self.fallback = int(np.argmax(counts))
        else:
            self.fallback = ds.label_index(fallback)

    def decisions_many(self, points) -> np.ndarray:
        return classify_many(self.ds, self.labeling, self.kernel, self._check(points))

    def predict_many(self, points) -> np.ndarray:
        codes = self.decisions_many(points)
        return np.where(codes >= 0, codes, self.fallback)


class RelabeledClassifier(BaseClassifier):
    """Wraps a classifier and renames its outputs through a bijection of the alphabet."""

    def __init__(self, inner: BaseClassifier, permutation: Sequence[int]):
        perm = np.asarray(permutation, dtype=np.int64)
        if sorted(perm.tolist()) != list(range(len(inner.alphabet))):
            raise ConfigError("permutation must be a bijection of the alphabet indices")
        self.inner = inner
        self.perm = perm
        self.alphabet = inner.alphabet
        self.dim = inner.dim

    def predict_many(self, points) -> np.ndarray:
        return self.perm[self.inner.predict_many(points)]


def build_classifier(spec: str, ds: LabeledDataset, k: Optional[KernelSpec] = None) -> BaseClassifier:
    """Parse a CLI classifier spec.

    nn | augmented[:<fallback label>] | halfspace:<w1,...,wd>:<b> | constant:<label>
    """
    kind, _, rest = spec.partition(":")
    kind = kind.strip().lower()
    if kind == "nn":
        return NearestNeighborClassifier(ds)
    if kind == "augmented":
        if k is None:
            raise ConfigError("augmented classifier needs --kernel")
        return AugmentedClassifier(ds, None, k, fallback=rest or None)
    if kind == "halfspace":
        w_text, _, b_text = rest.partition(":")
        try:
            w = [float(v) for v in w_text.split(",")]
            b = float(b_text or 0.0)
        except ValueError as e:
            raise ConfigError(f"bad halfspace spec {spec!r}; expected halfspace:w1,...,wd:b") from e
        if len(w) != ds.dim:
            raise ConfigError(f"halfspace has {len(w)} weights, dataset dim is {ds.dim}")
        return HalfspaceClassifier(w, b)
    if kind == "constant":
        return ConstantClassifier(rest, ds.alphabet, ds.dim)
    raise ConfigError(f"unknown classifier spec {spec!r}")
