"""Sigma sweeps and the random-label experiment.

"Training" here means memorizing a labeling of the training points; the
classifier under test is the noise-augmented rule over that labeling (or the
1-NN memorizer for the ``smoothed`` classifier spec), evaluated plain, under
attack and after Monte-Carlo smoothing.
"""

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from ..collectors.datasets import LabeledDataset, demo_nine_points, load, randomize_labels, split, synth_clusters
from ..evaluation.classifiers import AugmentedClassifier, BaseClassifier, NearestNeighborClassifier
from ..evaluation.robustness import AttackConfig, adversarial_accuracy_curve, natural_accuracy
from ..evaluation.smoothing import smooth_accuracy
from ..hypotheses.augment import is_fixed
from ..hypotheses.census import enumerate_census
from ..noise.kernels import KernelSpec
from ..utils.config import Config, DatasetSource, SweepConfig
from ..utils.errors import ConfigError
from ..utils.io import config_hash, write_csv, write_json
from ..utils.seeding import derive_seed

logger = logging.getLogger(__name__)

# sub-stream tags under (seed, sigma index) or (seed, trial)
_SMOOTH_TRAIN = 0
_SMOOTH_TEST = 1
_ATTACK = 2
_SPLIT = 3
_DATASET = 4
_LABELS_TRAIN = 5
_LABELS_TEST = 6


def attack_column(p: float, eps: float) -> str:
    p_text = "inf" if p == float("inf") else f"{p:g}"
    return f"adv_p{p_text}_eps{eps:g}"


def resolve_dataset(source: DatasetSource, seed: int) -> LabeledDataset:
    if source.path is not None:
        return load(source.path, source.format)
    if source.generator == "demo":
        return demo_nine_points()
    if source.generator == "clusters":
        return synth_clusters(
            source.n_clusters,
            source.points_per_cluster,
            source.dim,
            source.spread,
            source.separation,
            seed,
        )
    raise ConfigError(f"unknown dataset generator {source.generator!r}")


def approximation_gap(ds: LabeledDataset, k: KernelSpec, cap: int = Config.CENSUS_CAP, workers: int = 1) -> Optional[float]:
    """1 - best accuracy on ``ds`` of any labeling the augmented class realizes.

    Only meaningful when ds carries the ground-truth labels of a known
    distribution. None when the true labeling is not fixed and the census is
    over the cap.
    """
    if is_fixed(ds, None, k):
        return 0.0
    if ds.n_classes ** ds.n > cap:
        return None
    report = enumerate_census(ds, k, cap=cap, workers=workers, target=ds.labels)
    return 1.0 - report.best_agreement / ds.n


@dataclass
class SweepRow:
    sigma: float
    train_acc: float
    test_acc: float
    adversarial: Dict[str, float] = field(default_factory=dict)
    smoothed_train_acc: Optional[float] = None
    smoothed_test_acc: Optional[float] = None
    abstain_rate: Optional[float] = None
    census_size: Optional[int] = None
    approximation_gap: Optional[float] = None

    @property
    def gap(self) -> float:
        return self.train_acc - self.test_acc

    def to_dict(self) -> dict:
        return {
            "sigma": self.sigma,
            "train_acc": self.train_acc,
            "test_acc": self.test_acc,
            "gap": self.gap,
            "adversarial": self.adversarial,
            "smoothed_train_acc": self.smoothed_train_acc,
            "smoothed_test_acc": self.smoothed_test_acc,
            "abstain_rate": self.abstain_rate,
            "census_size": self.census_size,
            "approximation_gap": self.approximation_gap,
        }


@dataclass
class GeneralizationReport:
    config_hash: str
    rows: List[SweepRow]
    attack_columns: List[str]
    census_included: bool
    gap_included: bool
    smoothing_included: bool

    def header(self) -> List[str]:
        cols = ["config_hash", "sigma", "train_acc", "test_acc", "gap"]
        cols += self.attack_columns
        if self.smoothing_included:
            cols += ["smoothed_train_acc", "smoothed_test_acc", "abstain_rate"]
        if self.census_included:
            cols.append("census_size")
        if self.gap_included:
            cols.append("approximation_gap")
        return cols

    def csv_rows(self) -> List[list]:
        out = []
        for r in self.rows:
            row = [self.config_hash, r.sigma, r.train_acc, r.test_acc, r.gap]
            row += [r.adversarial[c] for c in self.attack_columns]
            if self.smoothing_included:
                row += [r.smoothed_train_acc, r.smoothed_test_acc, r.abstain_rate]
            if self.census_included:
                row.append(r.census_size)
            if self.gap_included:
                row.append("" if r.approximation_gap is None else r.approximation_gap)
            out.append(row)
        return out

    def to_dict(self) -> dict:
        return {"config_hash": self.config_hash, "rows": [r.to_dict() for r in self.rows]}


def _attacks_by_norm(attacks: Sequence[Tuple[float, float]]) -> Dict[float, List[float]]:
    grouped: Dict[float, List[float]] = {}
    for p, eps in attacks:
        grouped.setdefault(p, []).append(eps)
    return grouped


def _primary(cfg: SweepConfig, train: LabeledDataset, k: KernelSpec) -> BaseClassifier:
    if cfg.classifier == "smoothed":
        return NearestNeighborClassifier(train)
    return AugmentedClassifier(train, None, k)


def _sweep_point(
    cfg: SweepConfig,
    index: int,
    sigma: float,
    train: LabeledDataset,
    test: LabeledDataset,
    with_census: bool,
    with_gap: bool,
) -> SweepRow:
    k = KernelSpec(cfg.kernel_family, sigma, train.dim)
    clf = _primary(cfg, train, k)
    row = SweepRow(sigma=sigma, train_acc=natural_accuracy(clf, train), test_acc=natural_accuracy(clf, test))

    for j, (p, eps_list) in enumerate(sorted(_attacks_by_norm(cfg.attacks).items())):
        attack = AttackConfig(
            p=p,
            n_random=cfg.attack_n_random,
            n_refine=cfg.attack_n_refine,
            seed=derive_seed(cfg.seed, index, _ATTACK, j),
        )
        for eps, acc in adversarial_accuracy_curve(clf, test, attack, eps_list):
            row.adversarial[attack_column(p, eps)] = acc

    if cfg.smoothing:
        on_train = smooth_accuracy(clf, k, train, cfg.n, cfg.alpha, derive_seed(cfg.seed, index, _SMOOTH_TRAIN))
        on_test = smooth_accuracy(clf, k, test, cfg.n, cfg.alpha, derive_seed(cfg.seed, index, _SMOOTH_TEST))
        row.smoothed_train_acc = on_train.accuracy
        row.smoothed_test_acc = on_test.accuracy
        row.abstain_rate = on_test.abstain_rate

    if with_census:
        row.census_size = enumerate_census(train, k, cap=cfg.census_cap).realizable_after
    if with_gap:
        row.approximation_gap = approximation_gap(train, k, cap=cfg.census_cap)

    logger.info("sigma=%g train=%.3f test=%.3f", sigma, row.train_acc, row.test_acc)
    return row


def run_sweep(cfg: SweepConfig, workers: int = 1, write: bool = True) -> GeneralizationReport:
    """One row per sigma; sweep points run concurrently and are merged in sigma order."""
    ds = resolve_dataset(cfg.dataset, derive_seed(cfg.seed, _DATASET))
    train, test = split(ds, cfg.split_fraction, derive_seed(cfg.seed, _SPLIT))

    with_census = cfg.census and train.n_classes ** train.n <= cfg.census_cap
    if cfg.census and not with_census:
        logger.warning(
            "census needs %d^%d labelings, over the cap of %d; census_size omitted",
            train.n_classes, train.n, cfg.census_cap,
        )
    with_gap = cfg.dataset.is_synthetic

    def run(item):
        index, sigma = item
        return _sweep_point(cfg, index, sigma, train, test, with_census, with_gap)

    items = list(enumerate(cfg.sigma_list))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run, items))
    else:
        rows = [run(item) for item in items]

    columns = []
    for p, eps_list in sorted(_attacks_by_norm(cfg.attacks).items()):
        columns += [attack_column(p, eps) for eps in sorted(eps_list)]
    columns = list(dict.fromkeys(columns))

    report = GeneralizationReport(
        config_hash=config_hash(cfg.fingerprint()),
        rows=rows,
        attack_columns=columns,
        census_included=with_census,
        gap_included=with_gap,
        smoothing_included=cfg.smoothing,
    )
    if write:
        write_csv(os.path.join(cfg.output_dir, "sweep.csv"), report.header(), report.csv_rows())
        write_json(os.path.join(cfg.output_dir, "sweep.json"), {"config": cfg.to_dict(), **report.to_dict()})
    return report


# --- random labels -----------------------------------------------------------

@dataclass
class TrialRow:
    trial: int
    sigma: float
    train_acc: float
    test_acc: float
    smoothed_train_acc: Optional[float] = None
    smoothed_test_acc: Optional[float] = None
    abstain_rate: Optional[float] = None


@dataclass
class RandomLabelReport:
    config_hash: str
    sigma_list: List[float]
    rows: List[TrialRow]
    n_classes: int

    def _matrix(self, attr: str) -> np.ndarray:
        """(trials, sigmas) array of one metric."""
        n_sigma = len(self.sigma_list)
        values = [getattr(r, attr) for r in self.rows]
        return np.array(values, dtype=float).reshape(-1, n_sigma)

    def summary(self) -> dict:
        train = self._matrix("train_acc")
        test = self._matrix("test_acc")
        first, last = train[:, 0], train[:, -1]
        if np.array_equal(first, last):
            p_value = None
        else:
            p_value = float(stats.ttest_rel(first, last, alternative="greater").pvalue)
            p_value = None if math.isnan(p_value) else p_value

        summary = {
            "config_hash": self.config_hash,
            "trials": int(train.shape[0]),
            "chance_accuracy": 1.0 / self.n_classes,
            "sigma": list(self.sigma_list),
            "mean_train_acc": train.mean(axis=0).tolist(),
            "mean_test_acc": test.mean(axis=0).tolist(),
            "perfect_train_at_smallest_sigma": int(np.sum(first == 1.0)),
            "train_drop_trials": int(np.sum(last < first)),
            "paired_test_p_value": p_value,
        }
        if self.rows and self.rows[0].smoothed_train_acc is not None:
            summary["mean_smoothed_train_acc"] = self._matrix("smoothed_train_acc").mean(axis=0).tolist()
            summary["mean_smoothed_test_acc"] = self._matrix("smoothed_test_acc").mean(axis=0).tolist()
        return summary


def _random_label_trial(cfg: SweepConfig, trial: int) -> List[TrialRow]:
    ds = resolve_dataset(cfg.dataset, derive_seed(cfg.seed, trial, _DATASET))
    if ds.n_classes < 2:
        raise ConfigError("the random-label experiment needs at least two labels")
    train, test = split(ds, cfg.split_fraction, derive_seed(cfg.seed, trial, _SPLIT))
    train = randomize_labels(train, derive_seed(cfg.seed, trial, _LABELS_TRAIN))
    test = randomize_labels(test, derive_seed(cfg.seed, trial, _LABELS_TEST))

    rows = []
    for s, sigma in enumerate(cfg.sigma_list):
        k = KernelSpec(cfg.kernel_family, sigma, train.dim)
        # the memorizing hypothesis is the randomized training labeling itself
        clf = AugmentedClassifier(train, None, k)
        row = TrialRow(trial, sigma, natural_accuracy(clf, train), natural_accuracy(clf, test))
        if cfg.smoothing:
            on_train = smooth_accuracy(clf, k, train, cfg.n, cfg.alpha, derive_seed(cfg.seed, trial, s, _SMOOTH_TRAIN))
            on_test = smooth_accuracy(clf, k, test, cfg.n, cfg.alpha, derive_seed(cfg.seed, trial, s, _SMOOTH_TEST))
            row.smoothed_train_acc = on_train.accuracy
            row.smoothed_test_acc = on_test.accuracy
            row.abstain_rate = on_test.abstain_rate
        rows.append(row)
    return rows


def run_random_label(cfg: SweepConfig, workers: int = 1, write: bool = True) -> RandomLabelReport:
    """``cfg.trials`` independent trials, each with its own data, split and label draw."""
    if list(cfg.sigma_list) != sorted(cfg.sigma_list):
        raise ConfigError("the random-label experiment needs sigma_list in ascending order")

    trials = range(cfg.trials)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_trial = list(pool.map(lambda t: _random_label_trial(cfg, t), trials))
    else:
        per_trial = [_random_label_trial(cfg, t) for t in trials]

    first_ds = resolve_dataset(cfg.dataset, derive_seed(cfg.seed, 0, _DATASET))
    report = RandomLabelReport(
        config_hash=config_hash(cfg.fingerprint()),
        sigma_list=list(cfg.sigma_list),
        rows=[row for rows in per_trial for row in rows],
        n_classes=first_ds.n_classes,
    )
    if write:
        header = ["config_hash", "trial", "sigma", "train_acc", "test_acc"]
        if cfg.smoothing:
            header += ["smoothed_train_acc", "smoothed_test_acc", "abstain_rate"]
        csv_rows = []
        for r in report.rows:
            row = [report.config_hash, r.trial, r.sigma, r.train_acc, r.test_acc]
            if cfg.smoothing:
                row += [r.smoothed_train_acc, r.smoothed_test_acc, r.abstain_rate]
            csv_rows.append(row)
        write_csv(os.path.join(cfg.output_dir, "random_label.csv"), header, csv_rows)
        write_json(os.path.join(cfg.output_dir, "random_label_summary.json"), report.summary())
    return report
