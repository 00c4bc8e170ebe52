"""Decision-region rasters for 2-D datasets under the augmented rule."""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from PIL import Image

from ..collectors.datasets import LabeledDataset
from ..hypotheses.augment import NO_INFLUENCE, TIE, AugmentedDecision, as_labeling, classify_many, decision_token, parse_decision
from ..noise.kernels import KernelSpec
from ..utils.config import Config
from ..utils.errors import ConfigError, DatasetError, OutputError
from ..utils.io import read_csv_rows, write_csv as _write_rows

logger = logging.getLogger(__name__)

BBox = Tuple[Tuple[float, float], Tuple[float, float]]

CSV_HEADER = ("i", "j", "cx", "cy", "decision")


@dataclass
class RegionGrid:
    """Decision codes on a w x h lattice of cell centers.

    ``cells[j, i]`` is the cell in column i (from xmin) and row j (from ymin).
    """

    bbox: BBox
    resolution: Tuple[int, int]
    cells: np.ndarray
    alphabet: Tuple[str, ...]

    def __post_init__(self):
        w, h = self.resolution
        if w < 2 or h < 2:
            raise ConfigError(f"resolution must be at least 2x2, got {w}x{h}")
        (xmin, xmax), (ymin, ymax) = self.bbox
        if not (xmin < xmax and ymin < ymax):
            raise ConfigError(f"degenerate bounding box {self.bbox}")
        if self.cells.shape != (h, w):
            raise ConfigError(f"cells have shape {self.cells.shape}, expected {(h, w)}")

    @property
    def xs(self) -> np.ndarray:
        return cell_centers(self.bbox[0], self.resolution[0])

    @property
    def ys(self) -> np.ndarray:
        return cell_centers(self.bbox[1], self.resolution[1])

    def decision_at(self, i: int, j: int) -> AugmentedDecision:
        return AugmentedDecision(int(self.cells[j, i]))

    def cell_of(self, x: float, y: float) -> Tuple[int, int]:
        """Column and row of the cell containing (x, y)."""
        (xmin, xmax), (ymin, ymax) = self.bbox
        w, h = self.resolution
        i = int(np.clip(np.floor((x - xmin) / (xmax - xmin) * w), 0, w - 1))
        j = int(np.clip(np.floor((y - ymin) / (ymax - ymin) * h), 0, h - 1))
        return i, j


def cell_centers(span: Tuple[float, float], count: int) -> np.ndarray:
    lo, hi = span
    # the fraction is formed first so a center shared by two resolutions is the same double
    return lo + (hi - lo) * ((2 * np.arange(count) + 1) / (2 * count))


def default_bbox(ds: LabeledDataset, sigma: float) -> BBox:
    """Data bounding box padded by 2 sigma on every side."""
    lo = ds.points.min(axis=0) - 2.0 * sigma
    hi = ds.points.max(axis=0) + 2.0 * sigma
    return (float(lo[0]), float(hi[0])), (float(lo[1]), float(hi[1]))


def rasterize(
    ds: LabeledDataset,
    h,
    k: KernelSpec,
    bbox: Optional[BBox] = None,
    resolution: Tuple[int, int] = (256, 256),
    workers: int = 1,
) -> RegionGrid:
    if ds.dim != 2:
        raise DatasetError(f"rendering needs a 2-D dataset, got dim {ds.dim}")
    labeling = as_labeling(ds, h)
    bbox = bbox or default_bbox(ds, k.scale)
    w, hgt = resolution
    if w < 2 or hgt < 2:
        raise ConfigError(f"resolution must be at least 2x2, got {w}x{hgt}")
    xs = cell_centers(bbox[0], w)
    ys = cell_centers(bbox[1], hgt)

    def row(j: int) -> np.ndarray:
        queries = np.column_stack([xs, np.full(w, ys[j])])
        return classify_many(ds, labeling, k, queries)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(row, range(hgt)))
    else:
        rows = [row(j) for j in range(hgt)]
    cells = np.vstack(rows).astype(np.int64)
    logger.debug("rasterized %dx%d cells over %s", w, hgt, bbox)
    return RegionGrid(bbox=bbox, resolution=(w, hgt), cells=cells, alphabet=ds.alphabet)


def color_for(code: int, alphabet) -> Tuple[int, int, int]:
    if code == TIE:
        return Config.COLOR_TIE
    if code == NO_INFLUENCE:
        return Config.COLOR_NO_INFLUENCE
    label = alphabet[code]
    if label == "+1":
        return Config.COLOR_POSITIVE
    if label == "-1":
        return Config.COLOR_NEGATIVE
    return Config.CATEGORICAL_COLORS[code % len(Config.CATEGORICAL_COLORS)]


def to_rgb(grid: RegionGrid) -> np.ndarray:
    """(h, w, 3) uint8 pixels, top row = largest y."""
    pixels = np.zeros(grid.cells.shape + (3,), dtype=np.uint8)
    for code in np.unique(grid.cells):
        pixels[grid.cells == code] = color_for(int(code), grid.alphabet)
    return pixels[::-1]


def _ensure_parent(path: str) -> None:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)


def write_image(grid: RegionGrid, path: str) -> str:
    """Binary PPM (P6)."""
    try:
        _ensure_parent(path)
        Image.fromarray(to_rgb(grid), "RGB").save(path, format="PPM")
    except OSError as e:
        raise OutputError(f"cannot write image {path}: {e}") from e
    return path


def write_csv(grid: RegionGrid, path: str) -> str:
    xs, ys = grid.xs, grid.ys
    rows = []
    for j in range(grid.resolution[1]):
        for i in range(grid.resolution[0]):
            rows.append([i, j, float(xs[i]), float(ys[j]), decision_token(int(grid.cells[j, i]), grid.alphabet)])
    try:
        return _write_rows(path, CSV_HEADER, rows)
    except OSError as e:
        raise OutputError(f"cannot write csv {path}: {e}") from e


def read_csv(path: str, alphabet) -> List[Tuple[int, int, float, float, int]]:
    """Rows of (i, j, cx, cy, decision code) as written by ``write_csv``."""
    try:
        rows = read_csv_rows(path)
    except OSError as e:
        raise DatasetError(f"cannot read {path}: {e}") from e
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise DatasetError(f"{path} is not a region csv")
    out = []
    for row in rows[1:]:
        i, j, cx, cy, token = row
        out.append((int(i), int(j), float(cx), float(cy), parse_decision(token, alphabet)))
    return out
