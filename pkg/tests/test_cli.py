"""Command-line surface: subcommands, file formats, exit codes, determinism."""

import csv

import numpy as np
import pytest

from icipw import generate_replicate, DGPConfig, write_dataset
from icipw.cli import main


def run(argv):
    return main([str(a) for a in argv])


def write_lines(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")


@pytest.fixture
def four_row_fixture(tmp_path):
    data = tmp_path / "data.csv"
    scores = tmp_path / "scores.csv"
    write_lines(data, ["w1", "a", "y"], [[0.2, 1, 1.0], [0.3, 0, 2.0], [0.6, 1, 3.0], [0.9, 1, 4.0]])
    write_lines(
        scores,
        ["fold", "pi1", "pi0"],
        [[1, 0.2, 0.8], [1, 0.3, 0.7], [2, 0.6, 0.4], [2, 0.9, 0.1]],
    )
    return data, scores


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestCalibrate:
    def test_golden_weights(self, tmp_path, four_row_fixture):
        data, scores = four_row_fixture
        out = tmp_path / "weights.csv"
        code = run(["calibrate", "--data", data, "--scores", scores, "--out", out])
        assert code == 0
        rows = read_csv(out)
        assert rows[0] == ["alpha1_star", "alpha0_star"]
        alpha1 = [float(r[0]) for r in rows[1:]]
        alpha0 = [float(r[1]) for r in rows[1:]]
        assert alpha1 == [2.0, 2.0, 1.0, 1.0]
        assert alpha0 == [2.0, 2.0, 2.0, 2.0]
        balance = (tmp_path / "weights.csv.balance.csv").read_text()
        assert balance.startswith("level_value,count,stabilized_mean,deviation")
        assert "summary max_abs_deviation=" in balance

    def test_missing_data_flag_exits_2(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            run(["calibrate", "--out", "w.csv"])
        assert excinfo.value.code == 2

    def test_missing_file_exits_2(self, tmp_path):
        code = run(["calibrate", "--data", tmp_path / "nope.csv", "--out", tmp_path / "w.csv"])
        assert code == 2

    def test_min_segment_flag(self, tmp_path):
        rng = np.random.default_rng(1)
        n = 80
        pi1 = np.round(rng.uniform(0.05, 0.95, size=n), 6)
        a = (rng.random(n) < pi1).astype(int)
        a[0], a[1] = 1, 0
        data = tmp_path / "data.csv"
        scores = tmp_path / "scores.csv"
        write_lines(data, ["w1", "a", "y"], [[0.0, a[i], 0.0] for i in range(n)])
        write_lines(scores, ["fold", "pi1", "pi0"], [[1, pi1[i], 1 - pi1[i]] for i in range(n)])
        out = tmp_path / "w.csv"
        assert run(["calibrate", "--data", data, "--scores", scores, "--min-segment", 20, "--out", out]) == 0
        alpha1 = np.array([float(r[0]) for r in read_csv(out)[1:]])
        _, counts = np.unique(alpha1, return_counts=True)
        assert counts.min() >= 20

    def test_fit_scores_path(self, tmp_path):
        rep = generate_replicate(DGPConfig(n=120, overlap_gamma=1.0, seed=3), 0)
        data = tmp_path / "data.csv"
        write_dataset(rep.dataset, str(data))
        out = tmp_path / "w.csv"
        assert run(["calibrate", "--data", data, "--fit-scores", "--folds", 4, "--out", out]) == 0
        assert len(read_csv(out)) == 121


class TestEstimate:
    def test_method_label_contract(self, tmp_path):
        rep = generate_replicate(DGPConfig(n=150, overlap_gamma=1.0, seed=6), 0)
        data = tmp_path / "data.csv"
        write_dataset(rep.dataset, str(data))
        out = tmp_path / "report.txt"
        code = run(
            ["estimate", "--data", data, "--method", "aipw", "--weights", "trim:0.01",
             "--folds", 5, "--out", out]
        )
        assert code == 0
        text = out.read_text()
        assert text.splitlines()[0] == "method=aipw+trim:0.01"
        assert "psi=" in text and "eif_mean=" in text

    def test_recovers_known_ate(self, tmp_path):
        rep = generate_replicate(DGPConfig(n=2000, overlap_gamma=1.0, seed=4), 0)
        data = tmp_path / "data.csv"
        write_dataset(rep.dataset, str(data))
        out = tmp_path / "report.txt"
        code = run(
            ["estimate", "--data", data, "--method", "aipw", "--weights", "ic",
             "--folds", 5, "--seed", 11, "--out", out]
        )
        assert code == 0
        report = dict(line.split("=", 1) for line in out.read_text().splitlines())
        psi, se, n = float(report["psi"]), float(report["se"]), int(report["n"])
        truth = float(np.mean(rep.tau0))
        assert abs(psi - truth) <= 4 * se / np.sqrt(n)

    def test_tmle_with_ic_weights_runs(self, tmp_path):
        rep = generate_replicate(DGPConfig(n=300, overlap_gamma=1.0, seed=5), 0)
        data = tmp_path / "data.csv"
        write_dataset(rep.dataset, str(data))
        out = tmp_path / "report.txt"
        code = run(
            ["estimate", "--data", data, "--method", "tmle", "--weights", "ic",
             "--folds", 4, "--out", out]
        )
        assert code == 0
        assert out.read_text().startswith("method=tmle+ic")

    def test_unknown_weights_exits_2(self, tmp_path, four_row_fixture):
        data, scores = four_row_fixture
        code = run(
            ["estimate", "--data", data, "--scores", scores, "--method", "aipw", "--weights", "magic"]
        )
        assert code == 2

    def test_unknown_method_exits_2(self, tmp_path, four_row_fixture):
        data, scores = four_row_fixture
        with pytest.raises(SystemExit) as excinfo:
            run(["estimate", "--data", data, "--scores", scores, "--method", "owl", "--weights", "ic"])
        assert excinfo.value.code == 2


class TestSimulate:
    def test_byte_identical_reruns(self, tmp_path):
        args = ["simulate", "--dgp", "good-overlap", "--n", 100, "--reps", 3,
                "--folds", 5, "--seed", 7, "--methods", "ic_aipw,ipw_naive"]
        out1, out2 = tmp_path / "r1.csv", tmp_path / "r2.csv"
        assert run(args + ["--out", out1]) == 0
        assert run(args + ["--out", out2]) == 0
        assert out1.read_bytes() == out2.read_bytes()
        rows = read_csv(out1)
        assert rows[0] == ["method", "bias", "se", "rmse", "coverage", "reps_ok", "reps_failed"]
        assert [r[0] for r in rows[1:]] == ["ic_aipw", "ipw_naive"]

    def test_single_rep_exits_2(self, tmp_path):
        code = run(["simulate", "--dgp", "good-overlap", "--n", 100, "--reps", 1,
                    "--out", tmp_path / "r.csv"])
        assert code == 2

    def test_invalid_dgp_exits_2(self, tmp_path):
        with pytest.raises(SystemExit) as excinfo:
            run(["simulate", "--dgp", "no-overlap", "--n", 100, "--reps", 2,
                 "--out", tmp_path / "r.csv"])
        assert excinfo.value.code == 2


class TestDiagnose:
    def test_calibrated_weights_balance(self, tmp_path, four_row_fixture):
        data, scores = four_row_fixture
        weights = tmp_path / "w.csv"
        assert run(["calibrate", "--data", data, "--scores", scores, "--out", weights]) == 0
        out = tmp_path / "diag.csv"
        code = run(["diagnose", "--data", data, "--scores", scores,
                    "--weights-file", weights, "--out", out])
        assert code == 0
        text = out.read_text()
        summary = [line for line in text.splitlines() if line.startswith("summary")][0]
        max_dev = float(summary.split("max_abs_deviation=")[1].split()[0])
        assert max_dev <= 1e-10
        assert "boundary_count=0" in summary

    def test_naive_weights_deviate(self, tmp_path, four_row_fixture):
        data, scores = four_row_fixture
        weights = tmp_path / "naive.csv"
        write_lines(weights, ["alpha1_star", "alpha0_star"],
                    [[5.0, 1.25], [1 / 0.3, 1 / 0.7], [1 / 0.6, 2.5], [1 / 0.9, 10.0]])
        out = tmp_path / "diag.csv"
        assert run(["diagnose", "--data", data, "--weights-file", weights, "--out", out]) == 0
        summary = [l for l in out.read_text().splitlines() if l.startswith("summary")][0]
        assert float(summary.split("max_abs_deviation=")[1].split()[0]) > 0.1

    def test_oracle_metrics_vanish_on_truth(self, tmp_path):
        rng = np.random.default_rng(8)
        n = 50
        # Dyadic scores make alpha * pi == 1 exact in floating point.
        pi = rng.choice([0.0625, 0.125, 0.25, 0.5], size=n)
        a = (rng.random(n) < pi).astype(int)
        a[:2] = [1, 0]
        data = tmp_path / "data.csv"
        write_lines(data, ["w1", "a", "y"], [[0.0, a[i], 1.0] for i in range(n)])
        weights = tmp_path / "w.csv"
        write_lines(weights, ["alpha1_star"], [[repr(float(1.0 / p))] for p in pi])
        truths = tmp_path / "pi.csv"
        write_lines(truths, ["pi1"], [[repr(float(p))] for p in pi])
        out = tmp_path / "diag.csv"
        code = run(["diagnose", "--data", data, "--weights-file", weights,
                    "--pi0-file", truths, "--out", out])
        assert code == 0
        summary = [l for l in out.read_text().splitlines() if l.startswith("summary")][0]
        assert "cal_error=0" in summary
        assert "weight_rmse=0" in summary

    def test_requires_scores_or_weights(self, tmp_path, four_row_fixture):
        data, _ = four_row_fixture
        assert run(["diagnose", "--data", data]) == 2


def test_help_mentions_formats(capsys):
    with pytest.raises(SystemExit) as excinfo:
        run(["calibrate", "--help"])
    assert excinfo.value.code == 0
    help_text = capsys.readouterr().out
    assert "--min-segment" in help_text
    assert "alpha1_star" in help_text or "weights CSV" in help_text
