"""End-to-end command-line workflows."""

import csv
import json

import pytest
from click.testing import CliRunner

from corex.cli import main


@pytest.fixture()
def runner():
    return CliRunner()


def run(runner, args):
    result = runner.invoke(main, args, catch_exceptions=False)
    return result


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestGen:
    def test_writes_dataset_and_sidecar(self, runner, tmp_path):
        out = tmp_path / "run"
        result = run(runner, ["gen", "--b", "8", "--c", "8", "--seed", "1",
                              "--out-dir", str(out)])
        assert result.exit_code == 0
        rows = read_csv(out / "data.csv")
        assert len(rows) == 201 and len(rows[0]) == 64  # header + 200 samples
        doc = json.loads((out / "truth.json").read_text())
        assert len(doc["z"]) == 200
        assert doc["spec"]["erasure"] == pytest.approx(0.75)
        assert (out / "manifest.json").exists()

    def test_zero_erasure_deterministic_leaves(self, runner, tmp_path):
        out = tmp_path / "run"
        run(runner, ["gen", "--b", "2", "--c", "2", "--erasure", "0",
                     "--seed", "3", "--out-dir", str(out)])
        rows = read_csv(out / "data.csv")[1:]
        truth = json.loads((out / "truth.json").read_text())
        for row, y in zip(rows, truth["y"]):
            assert row[0] == row[1] == str(2 * y[0])
            assert row[2] == row[3] == str(2 * y[1])

    def test_noise_columns_marked_unclustered(self, runner, tmp_path):
        out = tmp_path / "run"
        run(runner, ["gen", "--b", "2", "--c", "2", "--noise-vars", "10",
                     "--seed", "0", "--out-dir", str(out)])
        doc = json.loads((out / "truth.json").read_text())
        assert doc["cluster_of"][-10:] == [None] * 10

    def test_bad_flags_exit_usage(self, runner, tmp_path):
        result = runner.invoke(main, ["gen", "--b", "2", "--c", "2",
                                      "--erasure", "1.5",
                                      "--out-dir", str(tmp_path)])
        assert result.exit_code == 2

    def test_reproducible_bytes(self, runner, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            run(runner, ["gen", "--b", "2", "--c", "4", "--seed", "9",
                         "--out-dir", str(out)])
        assert (a / "data.csv").read_bytes() == (b / "data.csv").read_bytes()
        assert (a / "truth.json").read_bytes() == (b / "truth.json").read_bytes()


@pytest.fixture()
def dataset(runner, tmp_path):
    out = tmp_path / "data"
    run(runner, ["gen", "--b", "2", "--c", "4", "--seed", "2",
                 "--out-dir", str(out)])
    return out


@pytest.fixture()
def fitted(runner, tmp_path, dataset):
    out = tmp_path / "fit"
    result = run(runner, ["fit", str(dataset / "data.csv"), "--m", "2",
                          "--seed", "2", "--restarts", "3",
                          "--out-dir", str(out)])
    assert result.exit_code == 0
    return out


class TestFit:
    def test_emits_all_artifacts(self, fitted):
        for name in ("model.json", "labels.csv", "clusters.csv",
                     "objective_history.csv", "objective_history.png",
                     "tree.dot", "tree.json", "ranking.json", "manifest.json"):
            assert (fitted / name).exists(), name

    def test_manifest_records_convergence(self, fitted):
        doc = json.loads((fitted / "manifest.json").read_text())
        assert doc["command"] == "fit"
        assert doc["converged"] == [True]
        assert doc["wall_time_s"] > 0

    def test_multi_layer_structure(self, runner, tmp_path):
        data = tmp_path / "d"
        run(runner, ["gen", "--b", "4", "--c", "4", "--seed", "5",
                     "--out-dir", str(data)])
        out = tmp_path / "fit"
        result = run(runner, ["fit", str(data / "data.csv"), "--layers", "4,1",
                              "--seed", "5", "--restarts", "3",
                              "--out-dir", str(out)])
        assert result.exit_code == 0
        tree = json.loads((out / "tree.json").read_text())
        assert len(tree["layers"]) == 2
        dot = (out / "tree.dot").read_text()
        assert "f1_0" in dot

    def test_missing_m_and_layers_is_usage_error(self, runner, dataset, tmp_path):
        result = runner.invoke(main, ["fit", str(dataset / "data.csv"),
                                      "--out-dir", str(tmp_path)])
        assert result.exit_code == 2

    def test_restarts_report_best(self, runner, dataset, tmp_path):
        singles = []
        for r in (1, 5):
            out = tmp_path / f"fit{r}"
            run(runner, ["fit", str(dataset / "data.csv"), "--m", "2",
                         "--seed", "2", "--restarts", str(r),
                         "--out-dir", str(out)])
            doc = json.loads((out / "manifest.json").read_text())
            singles.append(doc["tc_total"][0])
        assert singles[1] >= singles[0] - 1e-12

    def test_byte_identical_reruns(self, runner, dataset, tmp_path):
        outs = []
        for name in ("r1", "r2"):
            out = tmp_path / name
            run(runner, ["fit", str(dataset / "data.csv"), "--m", "2",
                         "--seed", "7", "--out-dir", str(out)])
            outs.append(out)
        for name in ("model.json", "objective_history.csv", "labels.csv",
                     "clusters.csv", "tree.json", "tree.dot"):
            assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes(), name


class TestTransform:
    def test_training_file_reproduces_fit_labels(self, runner, dataset, fitted,
                                                 tmp_path):
        out = tmp_path / "tr"
        result = run(runner, ["transform", str(fitted / "model.json"),
                              str(dataset / "data.csv"), "--out-dir", str(out)])
        assert result.exit_code == 0
        fit_rows = read_csv(fitted / "labels.csv")
        tr_rows = read_csv(out / "labels.csv")
        n_hard = len(fit_rows[0])
        assert tr_rows[0][:n_hard] == fit_rows[0]
        for a, b in zip(fit_rows[1:], tr_rows[1:]):
            assert b[:n_hard] == a

    def test_probability_columns_present(self, runner, dataset, fitted, tmp_path):
        out = tmp_path / "tr"
        run(runner, ["transform", str(fitted / "model.json"),
                     str(dataset / "data.csv"), "--out-dir", str(out)])
        header = read_csv(out / "labels.csv")[0]
        assert "f0_0_p0" in header and "f0_0_p1" in header

    def test_missing_cells_accepted(self, runner, fitted, tmp_path):
        sample = tmp_path / "holes.csv"
        header = ",".join(f"x{i}" for i in range(8))
        sample.write_text(header + "\n" + ",".join(["?"] * 8) + "\n0,1,2,?,?,?,?,?\n")
        out = tmp_path / "tr"
        result = run(runner, ["transform", str(fitted / "model.json"),
                              str(sample), "--out-dir", str(out)])
        assert result.exit_code == 0
        rows = read_csv(out / "labels.csv")
        assert len(rows) == 3

    def test_empty_file_exits_one(self, runner, fitted, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("")
        result = runner.invoke(main, ["transform", str(fitted / "model.json"),
                                      str(empty), "--out-dir", str(tmp_path)])
        assert result.exit_code == 1

    def test_unseen_category_exits_one(self, runner, fitted, tmp_path):
        sample = tmp_path / "bad.csv"
        header = ",".join(f"x{i}" for i in range(8))
        sample.write_text(header + "\n" + ",".join(["9"] * 8) + "\n")
        result = runner.invoke(main, ["transform", str(fitted / "model.json"),
                                      str(sample), "--out-dir", str(tmp_path)])
        assert result.exit_code == 1
        assert "unseen" in result.output


class TestEval:
    def test_identical_label_files(self, runner, tmp_path):
        a = tmp_path / "a.csv"
        a.write_text("0\n0\n1\n1\n2\n")
        result = run(runner, ["eval", str(a), str(a), "--metric", "ari",
                              "--truth-field", "ignored", "--out-dir",
                              str(tmp_path)])
        # CSV truth ignores --truth-field
        assert result.exit_code == 0
        doc = json.loads((tmp_path / "metric.json").read_text())
        assert doc["value"] == 1.0

    def test_clusters_vs_sidecar(self, runner, dataset, fitted, tmp_path):
        out = tmp_path / "m"
        result = run(runner, ["eval", str(fitted / "clusters.csv"),
                              str(dataset / "truth.json"), "--metric", "ari",
                              "--pred-column", "factor", "--out-dir", str(out)])
        assert result.exit_code == 0
        doc = json.loads((out / "metric.json").read_text())
        assert doc["value"] == 1.0
        assert doc["seed"] == 2

    def test_accuracy_of_complement_is_one(self, runner, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        a.write_text("0\n1\n0\n1\n")
        b.write_text("1\n0\n1\n0\n")
        result = run(runner, ["eval", str(a), str(b), "--metric", "acc",
                              "--out-dir", str(tmp_path)])
        assert result.exit_code == 0
        doc = json.loads((tmp_path / "metric.json").read_text())
        assert doc["value"] == 1.0

    def test_length_mismatch_exits_one(self, runner, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        a.write_text("0\n1\n")
        b.write_text("0\n1\n0\n")
        result = runner.invoke(main, ["eval", str(a), str(b), "--metric", "acc",
                                      "--out-dir", str(tmp_path)])
        assert result.exit_code == 1

    def test_factor_accuracy_against_sidecar(self, runner, dataset, fitted,
                                             tmp_path):
        result = run(runner, ["eval", str(fitted / "labels.csv"),
                              str(dataset / "truth.json"), "--metric", "acc",
                              "--pred-column", "f0_0", "--truth-field", "y:0",
                              "--out-dir", str(tmp_path)])
        assert result.exit_code == 0
        doc = json.loads((tmp_path / "metric.json").read_text())
        assert 0.5 <= doc["value"] <= 1.0


class TestSweep:
    def test_grid_rows_and_reports(self, runner, tmp_path):
        out = tmp_path / "sweep"
        result = run(runner, ["sweep", "--b", "2", "--c-list", "2,4",
                              "--seeds", "2", "--restarts", "2",
                              "--out-dir", str(out)])
        assert result.exit_code == 0
        rows = read_csv(out / "sweep.csv")
        assert len(rows) == 5  # header + 2x2 grid
        header = rows[0]
        for col in ("b", "c", "n", "seed", "ari", "tc_total", "iterations",
                    "wall_time_s"):
            assert col in header
        assert (out / "sweep.png").exists()
        manifest = json.loads((out / "manifest.json").read_text())
        assert len(manifest["rows"]) == 4

    def test_easy_grid_recovers_perfectly(self, runner, tmp_path):
        out = tmp_path / "sweep"
        run(runner, ["sweep", "--b", "2", "--c-list", "4", "--seeds", "2",
                     "--restarts", "3", "--out-dir", str(out)])
        rows = read_csv(out / "sweep.csv")
        header = rows[0]
        ari_col = header.index("ari")
        for row in rows[1:]:
            assert float(row[ari_col]) == 1.0

    def test_bad_c_list_is_usage_error(self, runner, tmp_path):
        result = runner.invoke(main, ["sweep", "--c-list", "4,x",
                                      "--out-dir", str(tmp_path)])
        assert result.exit_code == 2


class TestVersion:
    def test_version_flag(self, runner):
        result = run(runner, ["--version"])
        assert result.exit_code == 0
        assert "corex" in result.output
