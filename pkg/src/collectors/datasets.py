import json
import os
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from ..utils.errors import DatasetError
from ..utils.io import fmt_float

BINARY_ALPHABET = ("-1", "+1")


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Training sequence S: distinct points S_X with labels drawn from an ordered alphabet.

    ``labels`` holds indices into ``alphabet``; the label strings are what files
    and reports show.
    """

    points: np.ndarray
    labels: np.ndarray
    alphabet: Tuple[str, ...]

    def __post_init__(self):
        points = np.array(self.points, dtype=float)
        labels = np.array(self.labels, dtype=np.int64)
        alphabet = tuple(str(a) for a in self.alphabet)

        if points.ndim != 2 or points.shape[0] < 1 or points.shape[1] < 1:
            raise DatasetError(f"points must be a nonempty N x d matrix, got shape {points.shape}")
        if labels.shape != (points.shape[0],):
            raise DatasetError(f"expected {points.shape[0]} labels, got {labels.shape[0] if labels.ndim else 0}")
        if len(set(alphabet)) != len(alphabet) or not alphabet:
            raise DatasetError(f"alphabet must be a nonempty list of distinct labels, got {list(alphabet)}")
        if np.any(labels < 0) or np.any(labels >= len(alphabet)):
            raise DatasetError("label index outside the alphabet")
        if not np.all(np.isfinite(points)):
            raise DatasetError("points must be finite")
        if np.unique(points, axis=0).shape[0] != points.shape[0]:
            raise DatasetError("dataset contains duplicate points; samples must be pairwise distinct")

        points.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "alphabet", alphabet)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.alphabet)

    @property
    def label_values(self) -> Tuple[str, ...]:
        return tuple(self.alphabet[i] for i in self.labels)

    @property
    def is_binary(self) -> bool:
        return set(self.alphabet) == set(BINARY_ALPHABET) and self.n_classes == 2

    def label_index(self, label: str) -> int:
        try:
            return self.alphabet.index(str(label))
        except ValueError as e:
            raise DatasetError(f"label {label!r} is not in the alphabet {list(self.alphabet)}") from e

    def with_labels(self, labels) -> "LabeledDataset":
        return LabeledDataset(self.points, labels, self.alphabet)

    def subset(self, indices) -> "LabeledDataset":
        idx = np.asarray(indices, dtype=np.int64)
        return LabeledDataset(self.points[idx], self.labels[idx], self.alphabet)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LabeledDataset):
            return NotImplemented
        return (
            self.alphabet == other.alphabet
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.labels, other.labels)
        )

    def __hash__(self) -> int:
        return hash((self.alphabet, self.points.tobytes(), self.labels.tobytes()))


def from_label_values(points, label_values: Sequence[str], alphabet: Sequence[str]) -> LabeledDataset:
    alphabet = tuple(str(a) for a in alphabet)
    index = {a: i for i, a in enumerate(alphabet)}
    try:
        labels = [index[str(v)] for v in label_values]
    except KeyError as e:
        raise DatasetError(f"unknown label {e.args[0]!r}, alphabet is {list(alphabet)}") from e
    return LabeledDataset(np.asarray(points, dtype=float), np.asarray(labels, dtype=np.int64), alphabet)


def demo_nine_points() -> LabeledDataset:
    """The nine 2-D samples of the motivating example; only the first is labeled -1."""
    rows = [
        (0.0, 1 / 2, "-1"),
        (-1.0, 1 / 2, "+1"),
        (1 / 4, 1 / 2, "+1"),
        (1 / 2, 5 / 2, "+1"),
        (-13 / 10, -17 / 10, "+1"),
        (1 / 2, -1.0, "+1"),
        (1 / 20, 5 / 2, "+1"),
        (-2.0, -17 / 10, "+1"),
        (1.0, 0.0, "+1"),
    ]
    points = [(x, y) for x, y, _ in rows]
    return from_label_values(points, [lab for _, _, lab in rows], BINARY_ALPHABET)


def synth_clusters(
    n_clusters: int,
    points_per_cluster: int,
    dim: int,
    spread: float,
    separation: float,
    seed: int,
) -> LabeledDataset:
    """Isotropic normal clusters whose centers sit ``separation`` apart along the first axis.

    Two clusters get the {-1, +1} alphabet; otherwise labels are the cluster ids.
    """
    if n_clusters < 1 or points_per_cluster < 1 or dim < 1:
        raise DatasetError("cluster counts and dim must be >= 1")
    if spread <= 0 or separation <= 0:
        raise DatasetError("spread and separation must be positive")

    rng = np.random.default_rng(seed)
    centers = np.zeros((n_clusters, dim))
    centers[:, 0] = separation * np.arange(n_clusters)
    points = np.concatenate([
        centers[c] + spread * rng.standard_normal((points_per_cluster, dim)) for c in range(n_clusters)
    ])
    labels = np.repeat(np.arange(n_clusters), points_per_cluster)
    alphabet = BINARY_ALPHABET if n_clusters == 2 else tuple(str(c) for c in range(n_clusters))
    return LabeledDataset(points, labels, alphabet)


def randomize_labels(ds: LabeledDataset, seed: int) -> LabeledDataset:
    """Redraw every label independently and uniformly from the alphabet; points are untouched."""
    if ds.n_classes < 2:
        raise DatasetError("randomize_labels needs an alphabet of at least two labels")
    rng = np.random.default_rng(seed)
    return ds.with_labels(rng.integers(0, ds.n_classes, size=ds.n))


def split(ds: LabeledDataset, fraction: float, seed: int) -> Tuple[LabeledDataset, LabeledDataset]:
    """Deterministic shuffle by ``seed`` followed by a prefix split into (train, test)."""
    if not 0.0 < fraction < 1.0:
        raise DatasetError(f"split fraction must lie in (0, 1), got {fraction}")
    if ds.n < 2:
        raise DatasetError("cannot split a dataset with fewer than two points")
    order = np.random.default_rng(seed).permutation(ds.n)
    n_train = min(ds.n - 1, max(1, int(round(fraction * ds.n))))
    return ds.subset(order[:n_train]), ds.subset(order[n_train:])


def scaled(ds: LabeledDataset, c: float) -> LabeledDataset:
    if c <= 0:
        raise DatasetError(f"scale factor must be positive, got {c}")
    return LabeledDataset(ds.points * c, ds.labels, ds.alphabet)


def pairwise_distances(points: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - points[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=2))


def min_pairwise_distance(ds: LabeledDataset) -> float:
    if ds.n < 2:
        raise DatasetError("min_pairwise_distance needs at least two points")
    dist = pairwise_distances(ds.points)
    np.fill_diagonal(dist, np.inf)
    return float(np.min(dist))


def second_neighbor_distances(ds: LabeledDataset) -> np.ndarray:
    """Distance from each point to its second-nearest other point."""
    if ds.n < 3:
        raise DatasetError("second_neighbor_distances needs at least three points")
    dist = pairwise_distances(ds.points)
    np.fill_diagonal(dist, np.inf)
    return np.sort(dist, axis=1)[:, 1]


# --- file I/O --------------------------------------------------------------

def _parse_header(line: str) -> Tuple[int, Tuple[str, ...]]:
    fields = {}
    for part in line.strip().split(","):
        key, sep, value = part.partition("=")
        if not sep:
            raise DatasetError(f"malformed header field {part!r}; expected d=<int>,labels=<l1>|<l2>|...")
        fields[key.strip()] = value.strip()
    try:
        dim = int(fields["d"])
        alphabet = tuple(a for a in fields["labels"].split("|") if a)
    except (KeyError, ValueError) as e:
        raise DatasetError(f"header must declare d and labels: {line.strip()!r}") from e
    if dim < 1:
        raise DatasetError(f"header declares d = {dim}")
    return dim, alphabet


def _load_csv(path: str) -> LabeledDataset:
    with open(path, "r") as f:
        lines = [ln for ln in (raw.strip() for raw in f) if ln]
    if not lines:
        raise DatasetError(f"{path} is empty")
    dim, alphabet = _parse_header(lines[0])
    if len(lines) < 2:
        raise DatasetError(f"{path} has a header but no samples")

    points, values = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != dim + 1:
            raise DatasetError(f"{path}:{lineno}: expected {dim + 1} fields, got {len(cells)}")
        try:
            points.append([float(c) for c in cells[:dim]])
        except ValueError as e:
            raise DatasetError(f"{path}:{lineno}: {e}") from e
        values.append(cells[dim])
    return from_label_values(points, values, alphabet)


def _load_json(path: str) -> LabeledDataset:
    with open(path, "r") as f:
        text = f.read()
    if not text.strip():
        raise DatasetError(f"{path} is empty")
    try:
        data = json.loads(text)
        dim = int(data["d"])
        alphabet = tuple(str(a) for a in data["alphabet"])
        points = data["points"]
        values = data["labels"]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise DatasetError(f"{path}: not a dataset document: {e}") from e
    if not points:
        raise DatasetError(f"{path} has no samples")
    if any(len(row) != dim for row in points):
        raise DatasetError(f"{path}: ragged point rows (d = {dim})")
    if len(values) != len(points):
        raise DatasetError(f"{path}: {len(points)} points but {len(values)} labels")
    return from_label_values(points, values, alphabet)


def load(path: str, format: str = None) -> LabeledDataset:
    """Load a dataset from CSV or JSON; the format defaults to the file extension."""
    fmt = (format or os.path.splitext(path)[1].lstrip(".") or "csv").lower()
    if not os.path.exists(path):
        raise DatasetError(f"dataset file {path} does not exist")
    if fmt == "csv":
        return _load_csv(path)
    if fmt == "json":
        return _load_json(path)
    raise DatasetError(f"unknown dataset format {fmt!r}")


def save(ds: LabeledDataset, path: str, format: str = None) -> str:
    fmt = (format or os.path.splitext(path)[1].lstrip(".") or "csv").lower()
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    if fmt == "csv":
        with open(path, "w") as f:
            f.write(f"d={ds.dim},labels={'|'.join(ds.alphabet)}\n")
            for row, value in zip(ds.points, ds.label_values):
                f.write(",".join(fmt_float(x) for x in row) + f",{value}\n")
    elif fmt == "json":
        doc = {
            "d": ds.dim,
            "alphabet": list(ds.alphabet),
            "points": ds.points.tolist(),
            "labels": list(ds.label_values),
        }
        with open(path, "w") as f:
            json.dump(doc, f, indent=2)
            f.write("\n")
    else:
        raise DatasetError(f"unknown dataset format {fmt!r}")
    return path
