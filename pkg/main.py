#!/usr/bin/env python3
"""
noiseclass - noise-augmented hypothesis classes and randomized smoothing at desk scale.

Usage:
    python main.py kernel-check --family gaussian --scale 1 --dim 2
    python main.py threshold --dataset points.csv --family gaussian
    python main.py threshold --dataset points.csv --kernel kernel.json
    python main.py census --dataset points.csv --family uniform_ball --sigma 0.5
    python main.py census --dataset points.csv --family gaussian --auto-bracket
    python main.py smooth --dataset points.csv --clf nn --kernel '{"family": "gaussian", "scale": 0.5, "dim": 2}'
    python main.py attack --dataset points.csv --clf nn --p 2 --eps 0.5
    python main.py render --dataset points.csv --kernel kernel.json --res 256x256 --out regions.ppm
    python main.py sweep --config sweep.json
    python main.py random-label --config sweep.json --trials 30
"""

import functools
import os
import sys

import click
from click.core import ParameterSource
import numpy as np
from rich.panel import Panel
from rich.table import Table

from src.collectors.datasets import load as load_dataset
from src.evaluation.classifiers import build_classifier
from src.evaluation.robustness import AttackConfig, attack_dataset, natural_accuracy, robust_radius
from src.evaluation.smoothing import smooth_predict_many
from src.experiments.sweep import run_random_label, run_sweep
from src.generators.region_renderer import default_bbox, rasterize, write_csv as write_region_csv, write_image
from src.hypotheses.census import class_from_census, empirical_rademacher, enumerate_census, full_sign_class, pac_sample_bound
from src.hypotheses.threshold import solve_threshold
from src.noise.kernels import KernelSpec, QuadratureGrid, validate
from src.utils.config import Config, load_sweep_config, parse_attacks
from src.utils.errors import ConfigError, InvariantViolation, NoiseClassError
from src.utils.io import config_hash, pretty_json, write_csv, write_json
from src.utils.log import err_console as console, setup_logging

# Stay below this to print PAC/Rademacher figures for a census class.
RADEMACHER_MAX_POINTS = 12


def handle_errors(func):
    """Turn package errors into a red message and the error's exit code."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except NoiseClassError as e:
            console.print(f"[red]Error: {e}[/]")
            sys.exit(e.exit_code)

    return wrapper


def emit(data) -> None:
    """Machine-readable result on stdout."""
    click.echo(pretty_json(data))


def load_kernel(text: str) -> KernelSpec:
    """A kernel given inline as JSON or as the path of a JSON file."""
    if os.path.exists(text):
        with open(text, "r") as f:
            text = f.read()
    return KernelSpec.from_json(text)


def resolve_family(family, kernel_text):
    """The kernel family from ``--family`` or, failing that, from ``--kernel``."""
    if family is not None:
        return family
    if kernel_text is not None:
        return load_kernel(kernel_text).family
    raise ConfigError("give a kernel family with --family or --kernel")


def load_labeling(path: str, ds):
    """``dataset`` means the dataset's own labels; otherwise one label per line."""
    if path == "dataset":
        return None
    try:
        with open(path, "r") as f:
            tokens = [line.strip() for line in f if line.strip()]
    except OSError as e:
        raise ConfigError(f"cannot read labeling {path}: {e}") from e
    return np.array([ds.label_index(t) for t in tokens], dtype=np.int64)


def parse_resolution(text: str):
    try:
        w, h = (int(v) for v in text.lower().split("x"))
    except ValueError as e:
        raise ConfigError(f"resolution must look like WxH, got {text!r}") from e
    return w, h


def parse_point(text: str):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError as e:
        raise ConfigError(f"bad point {text!r}; expected comma-separated coordinates") from e


@click.group(invoke_without_command=True)
@click.option("--seed", type=int, default=Config.SEED, show_default=True, help="Master seed for every random stream")
@click.option("--workers", type=int, default=Config.WORKERS, show_default=True, help="Worker threads")
@click.option("--out-dir", default=Config.OUTPUT_DIR, show_default=True, help="Directory for CSV/JSON/PPM artifacts")
@click.option("--log-level", default=Config.LOG_LEVEL, show_default=True, help="Logging level")
@click.pass_context
def cli(ctx, seed: int, workers: int, out_dir: str, log_level: str):
    """Noise-augmented classifiers: thresholds, censuses, smoothing and attacks."""
    setup_logging(log_level)
    ctx.obj = {"seed": seed, "workers": max(1, workers), "out_dir": out_dir}
    if ctx.invoked_subcommand is None:
        click.echo(ctx.get_help())


@cli.command("kernel-check")
@click.option("--family", required=True, help="gaussian, laplace or uniform_ball")
@click.option("--scale", type=float, default=1.0, show_default=True)
@click.option("--dim", type=int, default=2, show_default=True)
@click.option("--extent", type=float, default=8.0, show_default=True, help="Quadrature half-width in units of sigma")
@click.option("--cells", type=int, default=None, help="Quadrature cells per axis")
@handle_errors
def kernel_check(family: str, scale: float, dim: int, extent: float, cells: int):
    """Check a noise kernel for unit mass, symmetry, mode at 0 and decay."""
    k = KernelSpec(family, scale, dim)
    report = validate(k, QuadratureGrid(extent=extent, cells=cells))

    table = Table(title=f"{k.family.value} sigma={k.scale:g} d={k.dim}")
    table.add_column("Property", style="cyan")
    table.add_column("Value", style="green")
    for key, value in report.to_dict().items():
        table.add_row(key, str(value))
    console.print(table)
    emit({"kernel": k.to_dict(), **report.to_dict()})
    if not report.all_ok:
        raise InvariantViolation(f"kernel {k.to_json()} fails validation")


@cli.command()
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--family", default=None, help="Kernel family")
@click.option("--kernel", "kernel_text", default=None, help="Kernel JSON or JSON file; only its family is used")
@click.option("--rel-tol", type=float, default=Config.REL_TOL, show_default=True)
@click.pass_context
@handle_errors
def threshold(ctx, dataset_path: str, family: str, kernel_text: str, rel_tol: float):
    """Solve the critical noise level below which every labeling survives."""
    ds = load_dataset(dataset_path)
    family = resolve_family(family, kernel_text)
    result = solve_threshold(ds, family, rel_tol)
    console.print(Panel.fit(
        f"[yellow]theta (weak):[/] {result.theta_weak!r}\n"
        f"[yellow]theta (strict):[/] {result.theta_strict!r}\n"
        f"[yellow]Binding point:[/] {result.binding_index}",
        title=f"Threshold - {result.family.value}",
        border_style="green",
    ))
    data = result.to_dict()
    run_hash = config_hash({"dataset": dataset_path, "family": result.family.value, "rel_tol": rel_tol})
    data["config_hash"] = run_hash

    out_dir = ctx.obj["out_dir"]
    write_json(os.path.join(out_dir, "threshold.json"), data)
    write_csv(
        os.path.join(out_dir, "threshold_residual.csv"),
        ["config_hash", "sigma", "min_slack"],
        [[run_hash, sigma, slack] for sigma, slack in result.residual_curve],
    )
    emit(data)


def _census_summary(ds, report, eta, delta) -> dict:
    data = report.to_dict()
    if eta is not None and delta is not None:
        data["pac_bound_full"] = pac_sample_bound(report.total, eta, delta)
        data["pac_bound_augmented"] = pac_sample_bound(max(report.realizable_after, 1), eta, delta)
    if ds.is_binary and ds.n <= RADEMACHER_MAX_POINTS:
        data["rademacher_full"] = empirical_rademacher(full_sign_class(ds.n))
        data["rademacher_augmented"] = empirical_rademacher(class_from_census(ds, report))
    return data


@cli.command()
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--family", default=None, help="Kernel family (with --sigma or --auto-bracket)")
@click.option("--sigma", type=float, default=None, help="Noise scale; overrides the scale of --kernel")
@click.option("--kernel", "kernel_text", default=None, help="Kernel JSON or JSON file; its family also serves --auto-bracket")
@click.option("--auto-bracket", is_flag=True, help="Run at 0.9 theta_strict and 1.1 theta_weak")
@click.option("--cap", type=int, default=Config.CENSUS_CAP, show_default=True, help="Largest |Y|^N to enumerate")
@click.option("--eta", type=float, default=None, help="PAC accuracy for the sample-complexity bound")
@click.option("--delta", type=float, default=None, help="PAC confidence for the sample-complexity bound")
@click.pass_context
@handle_errors
def census(ctx, dataset_path, family, sigma, kernel_text, auto_bracket, cap, eta, delta):
    """Count the labelings of S_X that the augmented rule reproduces."""
    ds = load_dataset(dataset_path)
    workers = ctx.obj["workers"]
    keep = ds.is_binary and ds.n <= RADEMACHER_MAX_POINTS

    if auto_bracket:
        family = resolve_family(family, kernel_text)
        result = solve_threshold(ds, family)
        kernels = {
            "below": KernelSpec(family, 0.9 * result.theta_strict, ds.dim),
            "above": KernelSpec(family, 1.1 * result.theta_weak, ds.dim),
        }
    elif kernel_text is not None:
        k = load_kernel(kernel_text)
        kernels = {"at": k.with_scale(sigma) if sigma is not None else k}
    elif family is not None and sigma is not None:
        kernels = {"at": KernelSpec(family, sigma, ds.dim)}
    else:
        raise ConfigError("census needs --kernel, --family with --sigma, or --auto-bracket with a family")

    data = {}
    table = Table(title="Census")
    table.add_column("Run", style="cyan")
    table.add_column("sigma", style="yellow")
    table.add_column("|H_S|", justify="right")
    table.add_column("realizable", justify="right", style="green")
    table.add_column("ties", justify="right")
    for name, k in kernels.items():
        report = enumerate_census(ds, k, cap=cap, workers=workers, keep_fixed=keep)
        data[name] = _census_summary(ds, report, eta, delta)
        table.add_row(name, f"{k.scale:g}", f"{report.total:,}", f"{report.realizable_after:,}", f"{report.tie_count:,}")
    console.print(table)

    write_json(os.path.join(ctx.obj["out_dir"], "census.json"), data)
    emit(data)


@cli.command()
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--clf", "clf_spec", default="nn", show_default=True, help="nn | augmented[:fallback] | halfspace:w:b | constant:label")
@click.option("--kernel", "kernel_text", required=True, help="Noise kernel JSON or JSON file")
@click.option("--n", "n_samples", type=int, default=Config.SMOOTH_N, show_default=True)
@click.option("--alpha", type=float, default=Config.SMOOTH_ALPHA, show_default=True)
@click.option("--query", "queries", multiple=True, help="Point to classify, e.g. 0.5,1.0 (default: every dataset point)")
@click.pass_context
@handle_errors
def smooth(ctx, dataset_path, clf_spec, kernel_text, n_samples, alpha, queries):
    """Monte-Carlo smoothed predictions with abstention."""
    ds = load_dataset(dataset_path)
    k = load_kernel(kernel_text)
    clf = build_classifier(clf_spec, ds, k)
    points = np.array([parse_point(q) for q in queries]) if queries else ds.points
    if points.ndim != 2 or points.shape[1] != ds.dim:
        raise ConfigError(f"queries must have {ds.dim} coordinates")

    run = {
        "dataset": dataset_path,
        "kernel": k.to_dict(),
        "classifier": clf_spec,
        "n": n_samples,
        "alpha": alpha,
        "seed": ctx.obj["seed"],
        "queries": list(queries),
    }
    run_hash = config_hash(run)

    predictions = smooth_predict_many(clf, k, points, n_samples, alpha, ctx.obj["seed"], ctx.obj["workers"])
    truth = [""] * len(points) if queries else list(ds.label_values)
    header = ["config_hash", "index"] + [f"x{c}" for c in range(ds.dim)]
    header += ["label", "decision", "abstained", "top_prob_lower"] + [f"votes_{a}" for a in clf.alphabet]
    rows = []
    for i, (x, y, pred) in enumerate(zip(points, truth, predictions)):
        d = pred.to_dict()
        rows.append([run_hash, i, *(float(v) for v in x), y, d["decision"], int(pred.abstained),
                     pred.top_prob_lower, *(pred.votes[a] for a in clf.alphabet)])

    summary = {
        "config_hash": run_hash,
        "kernel": k.to_dict(),
        "classifier": clf_spec,
        "n": n_samples,
        "alpha": alpha,
        "seed": ctx.obj["seed"],
        "abstain_rate": sum(p.abstained for p in predictions) / len(predictions),
    }
    if not queries:
        summary["accuracy"] = sum(p.decision == y for p, y in zip(predictions, ds.label_values)) / ds.n

    out_dir = ctx.obj["out_dir"]
    write_csv(os.path.join(out_dir, "smooth.csv"), header, rows)
    write_json(os.path.join(out_dir, "smooth.json"), summary)
    emit(summary)


@cli.command()
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--clf", "clf_spec", default="nn", show_default=True)
@click.option("--kernel", "kernel_text", default=None, help="Kernel JSON, needed by the augmented classifier")
@click.option("--p", "p_text", default="2", show_default=True, help="Norm order: 1, 2 or inf")
@click.option("--eps", type=float, required=True)
@click.option("--n-random", type=int, default=Config.ATTACK_N_RANDOM, show_default=True)
@click.option("--n-refine", type=int, default=Config.ATTACK_N_REFINE, show_default=True)
@click.option("--radius", is_flag=True, help="Also estimate the empirical robust radius of each point")
@click.option("--tol", type=float, default=1e-4, show_default=True, help="Radius bisection tolerance")
@click.pass_context
@handle_errors
def attack(ctx, dataset_path, clf_spec, kernel_text, p_text, eps, n_random, n_refine, radius, tol):
    """Derivative-free l_p attack on every dataset point."""
    ds = load_dataset(dataset_path)
    k = load_kernel(kernel_text) if kernel_text else None
    clf = build_classifier(clf_spec, ds, k)
    p = parse_attacks([f"{p_text}:{eps}"])[0][0]
    cfg = AttackConfig(p=p, epsilon=eps, n_random=n_random, n_refine=n_refine, seed=ctx.obj["seed"])

    run_hash = config_hash({
        "dataset": dataset_path,
        "kernel": k.to_dict() if k else None,
        "classifier": clf_spec,
        "p": p_text,
        "epsilon": eps,
        "n_random": n_random,
        "n_refine": n_refine,
        "seed": ctx.obj["seed"],
        "radius_tol": tol if radius else None,
    })

    results = attack_dataset(clf, ds, cfg, ctx.obj["workers"])
    header = ["config_hash", "index", "label", "predicted", "success", "distance", "adversarial_label"]
    if radius:
        header += ["radius", "censored"]
    rows = []
    for i, (x, y, r) in enumerate(zip(ds.points, ds.label_values, results)):
        row = [run_hash, i, y, clf.label(x), int(r.success), "" if r.distance is None else r.distance,
               r.adversarial_label or ""]
        if radius:
            est = robust_radius(clf, x, p, tol, cfg)
            row += [est.radius, int(est.censored)]
        rows.append(row)

    summary = {
        "config_hash": run_hash,
        "classifier": clf_spec,
        "p": p_text,
        "epsilon": eps,
        "seed": ctx.obj["seed"],
        "natural_accuracy": natural_accuracy(clf, ds),
        "adversarial_accuracy": sum(not r.success for r in results) / ds.n,
    }

    out_dir = ctx.obj["out_dir"]
    write_csv(os.path.join(out_dir, "attack.csv"), header, rows)
    write_json(os.path.join(out_dir, "attack.json"), summary)
    console.print(Panel.fit(
        f"[yellow]Natural accuracy:[/] {summary['natural_accuracy']:.4f}\n"
        f"[yellow]Adversarial accuracy:[/] {summary['adversarial_accuracy']:.4f}",
        title=f"Attack l_{p_text}, eps={eps:g}",
        border_style="green",
    ))
    emit(summary)


@cli.command()
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--kernel", "kernel_text", required=True)
@click.option("--labeling", default="dataset", show_default=True, help='Labeling file (one label per line) or "dataset"')
@click.option("--res", default="256x256", show_default=True, help="Grid resolution WxH")
@click.option("--bbox", default=None, help="xmin,xmax,ymin,ymax (default: data bounds padded by 2 sigma)")
@click.option("--out", "out_path", default=None, help="PPM path (default: <out-dir>/regions.ppm)")
@click.option("--csv", "csv_path", default=None, help="Also write the per-cell decisions as CSV")
@click.pass_context
@handle_errors
def render(ctx, dataset_path, kernel_text, labeling, res, bbox, out_path, csv_path):
    """Rasterize the augmented decision regions of a 2-D dataset."""
    ds = load_dataset(dataset_path)
    k = load_kernel(kernel_text)
    h = load_labeling(labeling, ds)
    if bbox:
        xmin, xmax, ymin, ymax = parse_point(bbox)
        box = ((xmin, xmax), (ymin, ymax))
    else:
        box = default_bbox(ds, k.scale)

    grid = rasterize(ds, h, k, box, parse_resolution(res), workers=ctx.obj["workers"])
    out_path = out_path or os.path.join(ctx.obj["out_dir"], "regions.ppm")
    write_image(grid, out_path)
    if csv_path:
        write_region_csv(grid, csv_path)
    emit({"image": out_path, "csv": csv_path, "resolution": list(grid.resolution), "bbox": [list(b) for b in grid.bbox]})


def _experiment_config(ctx, config_path, sigmas, attacks, classifier, n_samples, alpha, trials, no_smoothing):
    cfg = load_sweep_config(config_path)
    return cfg.with_overrides(
        seed=_global(ctx, "seed", cfg.seed),
        output_dir=_global(ctx, "out_dir", cfg.output_dir),
        sigma_list=tuple(sigmas) if sigmas else None,
        attacks=parse_attacks(attacks) if attacks else None,
        classifier=classifier,
        n=n_samples,
        alpha=alpha,
        trials=trials,
        smoothing=False if no_smoothing else None,
    )


def _global(ctx, name, fallback):
    """A global flag's value when it was given on the command line, else ``fallback``."""
    root = ctx.find_root()
    source = root.get_parameter_source(name)
    if source is ParameterSource.COMMANDLINE:
        return root.params[name]
    return fallback


def experiment_options(func):
    for option in reversed([
        click.option("--config", "config_path", required=True, type=click.Path(exists=True), help="Sweep config JSON"),
        click.option("--sigma", "sigmas", type=float, multiple=True, help="Override sigma_list"),
        click.option("--attack", "attacks", multiple=True, help="Override attacks, as p:eps"),
        click.option("--classifier", default=None, help="augmented or smoothed"),
        click.option("--n", "n_samples", type=int, default=None),
        click.option("--alpha", type=float, default=None),
        click.option("--trials", type=int, default=None),
        click.option("--no-smoothing", is_flag=True, help="Skip the Monte-Carlo smoothed columns"),
    ]):
        func = option(func)
    return func


@cli.command()
@experiment_options
@click.pass_context
@handle_errors
def sweep(ctx, config_path, sigmas, attacks, classifier, n_samples, alpha, trials, no_smoothing):
    """Natural, adversarial and smoothed accuracy over a sigma sweep."""
    cfg = _experiment_config(ctx, config_path, sigmas, attacks, classifier, n_samples, alpha, trials, no_smoothing)
    Config.ensure_dirs(cfg.output_dir)
    report = run_sweep(cfg, workers=ctx.obj["workers"])

    table = Table(title=f"Sweep {report.config_hash}")
    for col in ("sigma", "train_acc", "test_acc", "gap"):
        table.add_column(col, justify="right")
    for row in report.rows:
        table.add_row(f"{row.sigma:g}", f"{row.train_acc:.3f}", f"{row.test_acc:.3f}", f"{row.gap:+.3f}")
    console.print(table)
    emit(report.to_dict())


@cli.command("random-label")
@experiment_options
@click.pass_context
@handle_errors
def random_label(ctx, config_path, sigmas, attacks, classifier, n_samples, alpha, trials, no_smoothing):
    """Train/test accuracy on uniformly random labels over T trials."""
    cfg = _experiment_config(ctx, config_path, sigmas, attacks, classifier, n_samples, alpha, trials, no_smoothing)
    Config.ensure_dirs(cfg.output_dir)
    report = run_random_label(cfg, workers=ctx.obj["workers"])
    summary = report.summary()

    table = Table(title=f"Random labels, {summary['trials']} trials")
    table.add_column("sigma", justify="right")
    table.add_column("mean train", justify="right", style="green")
    table.add_column("mean test", justify="right", style="yellow")
    for s, tr, te in zip(summary["sigma"], summary["mean_train_acc"], summary["mean_test_acc"]):
        table.add_row(f"{s:g}", f"{tr:.3f}", f"{te:.3f}")
    console.print(table)
    emit(summary)


if __name__ == "__main__":
    cli()
