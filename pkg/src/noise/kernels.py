"""Noise distributions n_sigma: separable gaussian/laplace profiles and the 2-D uniform disk.

Every density is c(sigma) * exp(-psi(z / sigma)) with c(sigma) fixing unit mass.
Threshold comparisons go through ``peak_ratio`` so that c(sigma) cancels.
"""

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional

import numpy as np

from ..utils.errors import KernelError, QuadratureError


class KernelFamily(str, Enum):
    GAUSSIAN = "gaussian"
    LAPLACE = "laplace"
    UNIFORM_BALL = "uniform_ball"


@dataclass(frozen=True)
class KernelSpec:
    family: KernelFamily
    scale: float
    dim: int

    def __post_init__(self):
        try:
            object.__setattr__(self, "family", KernelFamily(self.family))
        except ValueError as e:
            raise KernelError(f"unknown kernel family {self.family!r}") from e
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise KernelError(f"kernel scale must be a positive real, got {self.scale}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise KernelError(f"kernel dim must be a positive integer, got {self.dim}")
        object.__setattr__(self, "scale", float(self.scale))
        object.__setattr__(self, "dim", int(self.dim))
        if self.family is KernelFamily.UNIFORM_BALL and self.dim != 2:
            raise KernelError(f"uniform_ball is defined for dim = 2 only, got dim = {self.dim}")

    @property
    def tau(self) -> float:
        """Per-coordinate standard deviation of the gaussian (sigma = sqrt(2) * tau)."""
        return self.scale / math.sqrt(2.0)

    @property
    def bounded(self) -> bool:
        return self.family is KernelFamily.UNIFORM_BALL

    @property
    def separable(self) -> bool:
        return self.family is not KernelFamily.UNIFORM_BALL

    def with_scale(self, scale: float) -> "KernelSpec":
        return KernelSpec(self.family, scale, self.dim)

    def to_dict(self) -> dict:
        return {"family": self.family.value, "scale": self.scale, "dim": self.dim}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "KernelSpec":
        try:
            return cls(family=data["family"], scale=float(data["scale"]), dim=int(data["dim"]))
        except (KeyError, TypeError, ValueError) as e:
            raise KernelError(f"kernel spec needs family, scale and dim: {e}") from e

    @classmethod
    def from_json(cls, text: str) -> "KernelSpec":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise KernelError(f"kernel spec is not valid JSON: {e}") from e
        if not isinstance(data, dict):
            raise KernelError("kernel spec must be a JSON object")
        return cls.from_dict(data)


def _as_batch(k: KernelSpec, z) -> np.ndarray:
    arr = np.asarray(z, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != k.dim:
        raise KernelError(f"displacement has dimension {arr.shape[-1]}, kernel expects {k.dim}")
    return arr


def log_profile_many(k: KernelSpec, z) -> np.ndarray:
    """-psi(z / sigma) summed over coordinates; -inf outside a bounded support."""
    z = _as_batch(k, z)
    u = z / k.scale
    if k.family is KernelFamily.GAUSSIAN:
        return -np.sum(u * u, axis=1)
    if k.family is KernelFamily.LAPLACE:
        return -np.sum(np.abs(u), axis=1)
    inside = np.sqrt(np.sum(z * z, axis=1)) < k.scale
    return np.where(inside, 0.0, -np.inf)


def log_normalizer(k: KernelSpec) -> float:
    if k.family is KernelFamily.GAUSSIAN:
        return -0.5 * k.dim * math.log(2.0 * math.pi * k.tau ** 2)
    if k.family is KernelFamily.LAPLACE:
        return -k.dim * math.log(2.0 * k.scale)
    return -math.log(k.scale ** 2 * math.pi)


def peak_value(k: KernelSpec) -> float:
    if k.family is KernelFamily.UNIFORM_BALL:
        return 1.0 / (k.scale ** 2 * math.pi)
    return math.exp(log_normalizer(k))


def peak_ratio_many(k: KernelSpec, z) -> np.ndarray:
    return np.exp(log_profile_many(k, z))


def density_many(k: KernelSpec, z) -> np.ndarray:
    ratio = peak_ratio_many(k, z)
    return peak_value(k) * ratio


def density(k: KernelSpec, z) -> float:
    """Normalized density n_sigma(z) at a single displacement."""
    arr = np.asarray(z, dtype=float)
    if arr.ndim != 1:
        raise KernelError("density expects a single vector; use density_many for batches")
    return float(density_many(k, arr)[0])


def peak_ratio(k: KernelSpec, displacement) -> float:
    """density(k, z) / density(k, 0), which lies in [0, 1]."""
    arr = np.asarray(displacement, dtype=float)
    if arr.ndim != 1:
        raise KernelError("peak_ratio expects a single vector; use peak_ratio_many for batches")
    return float(peak_ratio_many(k, arr)[0])


def sample(k: KernelSpec, stream: np.random.Generator, count: int) -> np.ndarray:
    """``count`` i.i.d. draws from n_sigma as a (count, dim) array."""
    if count < 1:
        raise KernelError(f"sample count must be >= 1, got {count}")
    if k.family is KernelFamily.GAUSSIAN:
        return stream.normal(0.0, k.tau, size=(count, k.dim))
    if k.family is KernelFamily.LAPLACE:
        return stream.laplace(0.0, k.scale, size=(count, k.dim))
    # uniform disk: sqrt(U) radius keeps the area density flat, U < 1 keeps it strictly inside
    radius = k.scale * np.sqrt(stream.random(count))
    angle = 2.0 * math.pi * stream.random(count)
    return np.column_stack([radius * np.cos(angle), radius * np.sin(angle)])


@dataclass(frozen=True)
class QuadratureGrid:
    """Midpoint rule over [-extent*sigma, extent*sigma]^d with ``cells`` cells per axis."""

    extent: float = 8.0
    cells: Optional[int] = None

    def cells_for(self, dim: int) -> int:
        if self.cells is not None:
            return self.cells
        return {1: 4096, 2: 512}.get(dim, 96)


_MASS_TOL = {
    KernelFamily.GAUSSIAN: 1e-6,
    KernelFamily.LAPLACE: 1e-3,
}


@dataclass
class ValidationReport:
    kernel: KernelSpec
    mass: float
    mass_residual: float
    unit_mass: bool
    symmetry_residual: float
    symmetric: bool
    mode_at_origin: bool
    separable: Optional[bool]
    separability_residual: Optional[float]
    monotone_decay: bool
    monotone_residual: float
    log_concave: Optional[bool]
    log_concavity_residual: Optional[float]
    details: Dict[str, float] = field(default_factory=dict)

    @property
    def all_ok(self) -> bool:
        flags = [self.unit_mass, self.symmetric, self.mode_at_origin, self.monotone_decay]
        flags += [f for f in (self.separable, self.log_concave) if f is not None]
        return all(flags)

    def to_dict(self) -> dict:
        return {
            "kernel": self.kernel.to_dict(),
            "mass": self.mass,
            "mass_residual": self.mass_residual,
            "unit_mass": self.unit_mass,
            "symmetry_residual": self.symmetry_residual,
            "symmetric": self.symmetric,
            "mode_at_origin": self.mode_at_origin,
            "separable": self.separable,
            "separability_residual": self.separability_residual,
            "monotone_decay": self.monotone_decay,
            "monotone_residual": self.monotone_residual,
            "log_concave": self.log_concave,
            "log_concavity_residual": self.log_concavity_residual,
            "all_ok": self.all_ok,
            **self.details,
        }


def _axis_decay_residual(values: np.ndarray, axis: int) -> float:
    """Largest increase of ``values`` when stepping away from the grid center along ``axis``."""
    n = values.shape[axis]
    mid = n // 2
    right = np.take(values, np.arange(mid, n), axis=axis)
    left = np.flip(np.take(values, np.arange(0, n - mid), axis=axis), axis=axis)
    worst = 0.0
    for half in (right, left):
        steps = np.diff(half, axis=axis)
        if steps.size:
            worst = max(worst, float(np.max(steps)))
    return worst


def _second_difference_residual(log_values: np.ndarray, axis: int) -> float:
    n = log_values.shape[axis]
    a = np.take(log_values, np.arange(0, n - 2), axis=axis)
    b = np.take(log_values, np.arange(1, n - 1), axis=axis)
    c = np.take(log_values, np.arange(2, n), axis=axis)
    finite = np.isfinite(a) & np.isfinite(b) & np.isfinite(c)
    if not np.any(finite):
        return 0.0
    second = (a - 2.0 * b + c)[finite]
    return float(max(0.0, np.max(second)))


def validate(k: KernelSpec, grid: QuadratureGrid = QuadratureGrid()) -> ValidationReport:
    """Check unit mass, symmetry, mode, separability, axis-wise decay and log-concavity on a grid."""
    if not k.bounded and grid.extent < 8.0:
        raise QuadratureError(f"quadrature extent {grid.extent} sigma is below the 8 sigma needed for {k.family.value}")
    if k.bounded and grid.extent < 1.0:
        raise QuadratureError("quadrature extent must cover the kernel support")

    n = grid.cells_for(k.dim)
    half = grid.extent * k.scale
    h = 2.0 * half / n
    axis = -half + h * (np.arange(n) + 0.5)
    mesh = np.meshgrid(*([axis] * k.dim), indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=1)

    values = density_many(k, points)
    mass = float(np.sum(values) * h ** k.dim)
    if not math.isfinite(mass):
        raise QuadratureError(f"quadrature diverged for {k.to_json()}")

    if k.bounded:
        # only cells cut by the circle contribute error: perimeter * h over area
        mass_tol = 2.0 * h / k.scale
    else:
        mass_tol = _MASS_TOL[k.family]
    mass_residual = abs(mass - 1.0)

    mirrored = density_many(k, -points)
    symmetry_residual = float(np.max(np.abs(values - mirrored)))

    origin = density(k, np.zeros(k.dim))
    mode_at_origin = bool(origin >= np.max(values))

    separable = None
    separability_residual = None
    if k.separable:
        k1 = KernelSpec(k.family, k.scale, 1)
        marginal = density_many(k1, points.reshape(-1, 1)).reshape(points.shape)
        product = np.prod(marginal, axis=1)
        separability_residual = float(np.max(np.abs(product - values)) / origin)
        separable = separability_residual <= 1e-12

    shaped = values.reshape((n,) * k.dim)
    monotone_residual = max(_axis_decay_residual(shaped, a) for a in range(k.dim))
    monotone_decay = monotone_residual <= 1e-12 * origin

    log_concave = None
    log_concavity_residual = None
    if k.family is not KernelFamily.UNIFORM_BALL:
        with np.errstate(divide="ignore"):
            log_values = np.log(shaped)
        log_concavity_residual = max(_second_difference_residual(log_values, a) for a in range(k.dim))
        log_concave = log_concavity_residual <= 1e-9

    return ValidationReport(
        kernel=k,
        mass=mass,
        mass_residual=mass_residual,
        unit_mass=mass_residual <= mass_tol,
        symmetry_residual=symmetry_residual,
        symmetric=symmetry_residual == 0.0,
        mode_at_origin=mode_at_origin,
        separable=separable,
        separability_residual=separability_residual,
        monotone_decay=monotone_decay,
        monotone_residual=monotone_residual,
        log_concave=log_concave,
        log_concavity_residual=log_concavity_residual,
        details={"cells_per_axis": n, "cell_width": h, "mass_tolerance": mass_tol},
    )
