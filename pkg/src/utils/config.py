import json
import os
from dataclasses import asdict, dataclass, fields, replace
from typing import List, Optional, Tuple

from dotenv import load_dotenv

from .errors import ConfigError

load_dotenv()


class Config:
    OUTPUT_DIR = os.getenv("NOISECLASS_OUTPUT_DIR", "output")
    WORKERS = int(os.getenv("NOISECLASS_WORKERS", "1"))
    SEED = int(os.getenv("NOISECLASS_SEED", "0"))
    CENSUS_CAP = int(os.getenv("NOISECLASS_CENSUS_CAP", str(2 ** 24)))
    LOG_LEVEL = os.getenv("NOISECLASS_LOG_LEVEL", "INFO")

    # Monte-Carlo smoothing (n samples per query, failure probability)
    SMOOTH_N = 10000
    SMOOTH_ALPHA = 0.001

    # Derivative-free attack
    ATTACK_N_RANDOM = 64
    ATTACK_N_REFINE = 20  # half of this is the march points per dyadic shell; also the bisection steps

    # Threshold solver
    REL_TOL = 1e-9

    # Render palette
    COLOR_POSITIVE = (70, 130, 220)
    COLOR_NEGATIVE = (220, 70, 70)
    COLOR_TIE = (128, 128, 128)
    COLOR_NO_INFLUENCE = (245, 243, 238)
    CATEGORICAL_COLORS = [
        (46, 160, 67),
        (255, 159, 28),
        (142, 68, 173),
        (23, 190, 207),
        (188, 189, 34),
        (140, 86, 75),
        (227, 119, 194),
        (31, 119, 180),
    ]

    @classmethod
    def ensure_dirs(cls, output_dir: Optional[str] = None) -> str:
        path = output_dir or cls.OUTPUT_DIR
        os.makedirs(path, exist_ok=True)
        return path


@dataclass(frozen=True)
class DatasetSource:
    """Either a file on disk or a synthetic cluster generator."""

    path: Optional[str] = None
    format: Optional[str] = None  # defaults to the file extension
    generator: Optional[str] = None  # "clusters" or "demo"
    n_clusters: int = 2
    points_per_cluster: int = 30
    dim: int = 2
    spread: float = 1.0
    separation: float = 10.0

    @property
    def is_synthetic(self) -> bool:
        return self.generator is not None


@dataclass(frozen=True)
class SweepConfig:
    dataset: DatasetSource
    kernel_family: str = "gaussian"
    sigma_list: Tuple[float, ...] = (0.01, 0.1, 1.0, 5.0, 20.0)
    classifier: str = "augmented"  # "augmented" or "smoothed"
    n: int = Config.SMOOTH_N
    alpha: float = Config.SMOOTH_ALPHA
    attacks: Tuple[Tuple[float, float], ...] = ((2.0, 0.0),)
    split_fraction: float = 0.5
    seed: int = Config.SEED
    output_dir: str = Config.OUTPUT_DIR
    trials: int = 30
    census: bool = True
    smoothing: bool = True
    census_cap: int = Config.CENSUS_CAP
    attack_n_random: int = Config.ATTACK_N_RANDOM
    attack_n_refine: int = Config.ATTACK_N_REFINE

    def __post_init__(self):
        if not self.sigma_list:
            raise ConfigError("sigma_list must be nonempty")
        if any(s <= 0 for s in self.sigma_list):
            raise ConfigError(f"sigma_list must be positive, got {list(self.sigma_list)}")
        if not 0.0 < self.split_fraction < 1.0:
            raise ConfigError(f"split_fraction must lie in (0, 1), got {self.split_fraction}")
        if self.classifier not in ("augmented", "smoothed"):
            raise ConfigError(f"unknown classifier spec {self.classifier!r}")
        if self.dataset.path is None and self.dataset.generator is None:
            raise ConfigError("dataset needs either a path or a generator")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        for p, eps in self.attacks:
            if p not in (1.0, 2.0, float("inf")):
                raise ConfigError(f"attack norm must be 1, 2 or inf, got {p}")
            if eps < 0:
                raise ConfigError(f"attack budget must be >= 0, got {eps}")

    def fingerprint(self) -> dict:
        """Everything that determines results; the output location does not."""
        data = self.to_dict()
        data.pop("output_dir")
        return data

    def to_dict(self) -> dict:
        data = asdict(self)
        data["sigma_list"] = list(self.sigma_list)
        data["attacks"] = [[_norm_to_json(p), eps] for p, eps in self.attacks]
        return data

    def with_overrides(self, **overrides) -> "SweepConfig":
        """Return a copy with every non-None override applied."""
        present = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **present)


def _norm_to_json(p: float):
    return "inf" if p == float("inf") else p


def _norm_from_json(p) -> float:
    if isinstance(p, str) and p.lower() in ("inf", "infinity"):
        return float("inf")
    return float(p)


def sweep_config_from_dict(data: dict) -> SweepConfig:
    try:
        ds_data = dict(data["dataset"])
    except (KeyError, TypeError) as e:
        raise ConfigError(f"config is missing a 'dataset' object: {e}") from e

    known_ds = {f.name for f in fields(DatasetSource)}
    unknown = set(ds_data) - known_ds
    if unknown:
        raise ConfigError(f"unknown dataset keys: {sorted(unknown)}")

    known = {f.name for f in fields(SweepConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    kwargs = {k: v for k, v in data.items() if k != "dataset"}
    if "sigma_list" in kwargs:
        kwargs["sigma_list"] = tuple(float(s) for s in kwargs["sigma_list"])
    if "attacks" in kwargs:
        try:
            kwargs["attacks"] = tuple((_norm_from_json(p), float(eps)) for p, eps in kwargs["attacks"])
        except (TypeError, ValueError) as e:
            raise ConfigError(f"attacks must be a list of [p, eps] pairs: {e}") from e
    try:
        return SweepConfig(dataset=DatasetSource(**ds_data), **kwargs)
    except TypeError as e:
        raise ConfigError(str(e)) from e


def load_sweep_config(path: str) -> SweepConfig:
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    return sweep_config_from_dict(data)


def parse_attacks(specs: List[str]) -> Tuple[Tuple[float, float], ...]:
    """Parse CLI attack specs of the form ``p:eps`` (e.g. ``2:0.5``, ``inf:0.1``)."""
    out = []
    for spec in specs:
        try:
            p, eps = spec.split(":")
            out.append((_norm_from_json(p), float(eps)))
        except ValueError as e:
            raise ConfigError(f"bad attack spec {spec!r}, expected p:eps") from e
    return tuple(out)


__all__ = [
    "Config",
    "DatasetSource",
    "SweepConfig",
    "sweep_config_from_dict",
    "load_sweep_config",
    "parse_attacks",
]

