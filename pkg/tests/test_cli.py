import json
import math

import pytest
from click.testing import CliRunner

from main import cli
from src.collectors.datasets import save
from src.hypotheses import threshold as threshold_module

KERNEL = '{"family": "uniform_ball", "scale": 0.5, "dim": 2}'


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def demo_path(tmp_path, demo):
    return save(demo, str(tmp_path / "demo.csv"))


@pytest.fixture
def line_path(tmp_path, line3):
    return save(line3, str(tmp_path / "line.csv"))


def run(runner, out_dir, *args):
    return runner.invoke(cli, ["--out-dir", str(out_dir), *args], catch_exceptions=False)


class TestKernelCheck:
    def test_ok(self, runner, tmp_path):
        result = run(runner, tmp_path, "kernel-check", "--family", "laplace", "--scale", "0.5", "--dim", "1")
        assert result.exit_code == 0
        assert '"all_ok": true' in result.output

    def test_bad_family_is_config_error(self, runner, tmp_path):
        result = run(runner, tmp_path, "kernel-check", "--family", "cauchy")
        assert result.exit_code == 2


class TestThreshold:
    def test_closed_form(self, runner, tmp_path, line_path):
        result = run(runner, tmp_path, "threshold", "--dataset", line_path, "--family", "gaussian")
        assert result.exit_code == 0
        data = json.loads((tmp_path / "threshold.json").read_text())
        assert data["theta_weak"] == pytest.approx(1.0 / math.sqrt(math.log(2.0)), abs=1e-6)

    def test_kernel_json_and_residual_csv(self, runner, tmp_path, line_path):
        kernel = '{"family": "gaussian", "scale": 3.0, "dim": 1}'
        result = run(runner, tmp_path, "threshold", "--dataset", line_path, "--kernel", kernel)
        assert result.exit_code == 0
        data = json.loads((tmp_path / "threshold.json").read_text())
        assert data["family"] == "gaussian"
        assert data["theta_weak"] == pytest.approx(1.0 / math.sqrt(math.log(2.0)), abs=1e-6)
        lines = (tmp_path / "threshold_residual.csv").read_text().splitlines()
        assert lines[0] == "config_hash,sigma,min_slack"
        assert len(lines) == 1 + len(data["residual_curve"])
        assert lines[1].startswith(data["config_hash"] + ",")

    def test_needs_a_family(self, runner, tmp_path, line_path):
        assert run(runner, tmp_path, "threshold", "--dataset", line_path).exit_code == 2

    def test_non_monotone_feasibility_exits_3(self, runner, tmp_path, line_path, monkeypatch):
        monkeypatch.setattr(threshold_module, "feasible", lambda ds, family, sigma, strict=False: not 1.0 <= sigma <= 2.0)
        result = run(runner, tmp_path, "threshold", "--dataset", line_path, "--family", "gaussian")
        assert result.exit_code == 3


class TestCensus:
    def test_auto_bracket(self, runner, tmp_path, demo_path):
        result = run(runner, tmp_path, "census", "--dataset", demo_path, "--family", "gaussian", "--auto-bracket",
                     "--eta", "0.1", "--delta", "0.01")
        assert result.exit_code == 0
        data = json.loads((tmp_path / "census.json").read_text())
        assert data["below"]["equality"] is True
        assert data["above"]["equality"] is False
        assert data["below"]["pac_bound_full"] == math.ceil(math.log(512 / 0.01) / 0.1)
        assert data["above"]["pac_bound_augmented"] <= data["above"]["pac_bound_full"]
        assert data["below"]["rademacher_full"] == 2.0

    def test_auto_bracket_from_kernel(self, runner, tmp_path, demo_path):
        kernel = '{"family": "gaussian", "scale": 7.0, "dim": 2}'
        result = run(runner, tmp_path, "census", "--dataset", demo_path, "--kernel", kernel, "--auto-bracket")
        assert result.exit_code == 0
        data = json.loads((tmp_path / "census.json").read_text())
        assert data["below"]["equality"] is True

    def test_sigma_overrides_kernel_scale(self, runner, tmp_path, demo_path):
        result = run(runner, tmp_path, "census", "--dataset", demo_path, "--kernel", KERNEL, "--sigma", "0.125")
        assert result.exit_code == 0
        data = json.loads((tmp_path / "census.json").read_text())
        assert data["at"]["equality"] is True

    def test_needs_a_kernel(self, runner, tmp_path, demo_path):
        result = run(runner, tmp_path, "census", "--dataset", demo_path)
        assert result.exit_code == 2

    def test_cap_exceeded(self, runner, tmp_path, demo_path):
        result = run(runner, tmp_path, "census", "--dataset", demo_path, "--kernel", KERNEL, "--cap", "10")
        assert result.exit_code == 2


class TestSmooth:
    def test_reproducible_across_workers(self, runner, tmp_path, demo_path):
        args = ["smooth", "--dataset", demo_path, "--clf", "nn", "--kernel", KERNEL, "--n", "300"]
        assert run(runner, tmp_path / "a", "--workers", "1", *args).exit_code == 0
        assert run(runner, tmp_path / "b", "--workers", "4", *args).exit_code == 0
        assert (tmp_path / "a" / "smooth.csv").read_bytes() == (tmp_path / "b" / "smooth.csv").read_bytes()
        assert (tmp_path / "a" / "smooth.json").read_bytes() == (tmp_path / "b" / "smooth.json").read_bytes()

    def test_query(self, runner, tmp_path, demo_path):
        result = run(runner, tmp_path, "smooth", "--dataset", demo_path, "--clf", "constant:+1", "--kernel", KERNEL,
                     "--n", "100", "--query", "0.3,0.3")
        assert result.exit_code == 0
        lines = (tmp_path / "smooth.csv").read_text().splitlines()
        assert len(lines) == 2
        assert ",+1," in lines[1]

    def test_label_and_abstain_columns(self, runner, tmp_path, demo_path):
        result = run(runner, tmp_path, "smooth", "--dataset", demo_path, "--clf", "nn", "--kernel", KERNEL, "--n", "200")
        assert result.exit_code == 0
        lines = (tmp_path / "smooth.csv").read_text().splitlines()
        header = lines[0].split(",")
        assert header[:7] == ["config_hash", "index", "x0", "x1", "label", "decision", "abstained"]
        first = lines[1].split(",")
        assert first[4] == "-1"
        assert first[6] in ("0", "1")
        assert (first[5] == "ABSTAIN") == (first[6] == "1")


class TestAttack:
    def test_summary(self, runner, tmp_path, demo_path):
        result = run(runner, tmp_path, "--seed", "3", "attack", "--dataset", demo_path, "--clf", "nn",
                     "--p", "2", "--eps", "0")
        assert result.exit_code == 0
        data = json.loads((tmp_path / "attack.json").read_text())
        assert data["adversarial_accuracy"] == data["natural_accuracy"] == 1.0

    def test_radius_columns(self, runner, tmp_path, demo_path):
        result = run(runner, tmp_path, "attack", "--dataset", demo_path, "--clf", "nn", "--p", "inf",
                     "--eps", "0.1", "--radius", "--tol", "0.01", "--n-random", "8")
        assert result.exit_code == 0
        header = (tmp_path / "attack.csv").read_text().splitlines()[0]
        assert header.endswith("radius,censored")

    def test_augmented_needs_kernel(self, runner, tmp_path, demo_path):
        result = run(runner, tmp_path, "attack", "--dataset", demo_path, "--clf", "augmented", "--eps", "0.1")
        assert result.exit_code == 2


class TestRender:
    def test_writes_ppm_and_csv(self, runner, tmp_path, demo_path):
        out = tmp_path / "regions.ppm"
        cells = tmp_path / "regions.csv"
        result = run(runner, tmp_path, "render", "--dataset", demo_path, "--kernel", KERNEL, "--res", "16x8",
                     "--out", str(out), "--csv", str(cells))
        assert result.exit_code == 0
        assert out.read_bytes().startswith(b"P6\n16 8\n255\n")
        assert len(cells.read_text().splitlines()) == 1 + 16 * 8

    def test_labeling_file(self, runner, tmp_path, demo_path):
        labels = tmp_path / "h.txt"
        labels.write_text("\n".join(["+1"] * 9) + "\n")
        result = run(runner, tmp_path, "render", "--dataset", demo_path, "--kernel", KERNEL, "--labeling", str(labels),
                     "--res", "4x4")
        assert result.exit_code == 0
        assert (tmp_path / "regions.ppm").exists()

    def test_bad_resolution(self, runner, tmp_path, demo_path):
        result = run(runner, tmp_path, "render", "--dataset", demo_path, "--kernel", KERNEL, "--res", "big")
        assert result.exit_code == 2


class TestExperiments:
    @pytest.fixture
    def config_path(self, tmp_path):
        path = tmp_path / "sweep.json"
        path.write_text(json.dumps({
            "dataset": {"generator": "clusters", "points_per_cluster": 8},
            "sigma_list": [0.01, 1.0, 20.0],
            "attacks": [[2, 0.0], ["inf", 0.5]],
            "n": 100,
            "attack_n_random": 8,
            "trials": 4,
        }))
        return str(path)

    def test_sweep_rerun_is_identical(self, runner, tmp_path, config_path):
        out = tmp_path / "out"
        assert run(runner, out, "--workers", "1", "sweep", "--config", config_path).exit_code == 0
        first = (out / "sweep.csv").read_bytes()
        assert run(runner, out, "--workers", "3", "sweep", "--config", config_path).exit_code == 0
        assert (out / "sweep.csv").read_bytes() == first

    def test_sweep_overrides(self, runner, tmp_path, config_path):
        out = tmp_path / "out"
        result = run(runner, out, "sweep", "--config", config_path, "--sigma", "0.5", "--attack", "1:0.2",
                     "--no-smoothing")
        assert result.exit_code == 0
        lines = (out / "sweep.csv").read_text().splitlines()
        assert len(lines) == 2
        assert "adv_p1_eps0.2" in lines[0]
        assert "smoothed_test_acc" not in lines[0]

    def test_random_label(self, runner, tmp_path, config_path):
        out = tmp_path / "out"
        result = run(runner, out, "random-label", "--config", config_path, "--no-smoothing")
        assert result.exit_code == 0
        summary = json.loads((out / "random_label_summary.json").read_text())
        assert summary["trials"] == 4

    def test_bad_config(self, runner, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"dataset": {"generator": "clusters"}, "sigma_list": []}))
        result = run(runner, tmp_path, "sweep", "--config", str(path))
        assert result.exit_code == 2
