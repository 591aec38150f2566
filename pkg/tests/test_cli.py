import csv
import json

import numpy as np
import pytest

import hscrf
from hscrf.cli import main
from hscrf.exact import read_marginals


@pytest.fixture
def topology_file(tmp_path):
    path = tmp_path / "topology.json"
    hscrf.write_topology(hscrf.fully_connected_topology((1, 2, 2)), path)
    return path


def run_pipeline(tmp_path, topology_file, iters=60):
    data_dir = tmp_path / "data"
    assert main(
        [
            "simulate",
            "--topology", str(topology_file),
            "--out", str(data_dir),
            "--seed", "1",
            "--length", "5",
            "--alphabet", "2",
            "--train", "6",
            "--test", "3",
        ]
    ) == 0
    params_path = tmp_path / "params.json"
    assert main(
        [
            "train",
            "--topology", str(topology_file),
            "--data", str(data_dir / "train.jsonl"),
            "--out", str(params_path),
            "--alphabet", "2",
            "--lr", "0.01",
            "--epochs", "5",
            "--tol", "0",
            "--log", str(tmp_path / "train_log.csv"),
        ]
    ) == 0
    exact_dir = tmp_path / "exact"
    assert main(
        [
            "infer-exact",
            "--topology", str(topology_file),
            "--params", str(params_path),
            "--data", str(data_dir / "test.jsonl"),
            "--out", str(exact_dir),
        ]
    ) == 0
    rbgs_dir = tmp_path / "rbgs"
    assert main(
        [
            "infer-rbgs",
            "--topology", str(topology_file),
            "--params", str(params_path),
            "--data", str(data_dir / "test.jsonl"),
            "--out", str(rbgs_dir),
            "--iters", str(iters),
        ]
    ) == 0
    eval_dir = tmp_path / "eval"
    assert main(
        [
            "eval",
            "--exact", str(exact_dir),
            "--estimate", str(rbgs_dir),
            "--out", str(eval_dir),
        ]
    ) == 0
    return data_dir, params_path, exact_dir, rbgs_dir, eval_dir


class TestPipeline:
    def test_end_to_end_files(self, tmp_path, topology_file):
        data_dir, params_path, exact_dir, rbgs_dir, eval_dir = run_pipeline(
            tmp_path, topology_file
        )
        manifest = json.loads((data_dir / "manifest.json").read_text())
        assert manifest["count"] == {"train": 6, "test": 3}
        assert manifest["alphabet_size"] == 2
        assert manifest["seed"] == 1

        train_rows = (data_dir / "train.jsonl").read_text().splitlines()
        assert len(train_rows) == 6
        assert set(json.loads(train_rows[0])) == {"o", "x", "e"}

        params = hscrf.read_params(params_path)
        assert params.alphabet_size == 2

        log_rows = (tmp_path / "train_log.csv").read_text().splitlines()
        assert log_rows[0] == "epoch,log_likelihood,gradient_norm,seconds"
        assert len(log_rows) == 6

        for index in range(3):
            stem = f"seq_{index:03d}"
            for directory in (exact_dir, rbgs_dir):
                assert (directory / f"{stem}_state.csv").exists()
                assert (directory / f"{stem}_transition.csv").exists()
            exact_meta = json.loads((exact_dir / f"{stem}_meta.json").read_text())
            assert exact_meta["engine"] == "exact"
            assert np.isfinite(exact_meta["log_partition"])
            rbgs_meta = json.loads((rbgs_dir / f"{stem}_meta.json").read_text())
            assert rbgs_meta["engine"] == "rbgs"
            assert rbgs_meta["samples_kept"] == 54

        marginals = read_marginals(
            exact_dir / "seq_000_state.csv", exact_dir / "seq_000_transition.csv"
        )
        for table in marginals.state:
            np.testing.assert_allclose(table.sum(axis=1), 1.0, atol=1e-9)

        with open(eval_dir / "comparison.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 9
        summary = json.loads((eval_dir / "summary.json").read_text())
        assert summary["sequences"] == 3
        assert summary["avg_kl"]["mean"] > 0.0
        assert summary["decode_match"]["mean"] > 0.5

    def test_simulate_is_deterministic_per_seed(self, tmp_path, topology_file):
        for name in ("one", "two"):
            assert main(
                [
                    "simulate",
                    "--topology", str(topology_file),
                    "--out", str(tmp_path / name),
                    "--seed", "42",
                    "--length", "4",
                    "--train", "5",
                    "--test", "2",
                    "--alphabet", "2",
                ]
            ) == 0
        for file in ("train.jsonl", "test.jsonl", "generative_params.json"):
            assert (tmp_path / "one" / file).read_bytes() == (
                tmp_path / "two" / file
            ).read_bytes()


class TestErrors:
    def test_missing_input_exits_with_two(self, tmp_path, capsys):
        with pytest.raises(SystemExit) as exc:
            main(
                [
                    "train",
                    "--topology", str(tmp_path / "absent.json"),
                    "--data", str(tmp_path / "none.jsonl"),
                    "--out", str(tmp_path / "params.json"),
                ]
            )
        assert exc.value.code == 2
        err = capsys.readouterr().err
        assert "missing input file" in err
        assert "absent.json" in err

    def test_eval_reports_empty_reference_dir(self, tmp_path, capsys):
        (tmp_path / "exact").mkdir()
        (tmp_path / "est").mkdir()
        code = main(
            [
                "eval",
                "--exact", str(tmp_path / "exact"),
                "--estimate", str(tmp_path / "est"),
                "--out", str(tmp_path / "out"),
            ]
        )
        assert code == 2
        assert "no marginal tables" in capsys.readouterr().err

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert capsys.readouterr().out.strip() == hscrf.__version__


class TestStudies:
    def test_convergence_and_scaling_smoke(self, tmp_path, topology_file):
        data_dir = tmp_path / "data"
        main(
            [
                "simulate",
                "--topology", str(topology_file),
                "--out", str(data_dir),
                "--seed", "3",
                "--length", "4",
                "--alphabet", "2",
                "--train", "2",
                "--test", "2",
            ]
        )
        params_path = tmp_path / "params.json"
        main(
            [
                "train",
                "--topology", str(topology_file),
                "--data", str(data_dir / "train.jsonl"),
                "--out", str(params_path),
                "--alphabet", "2",
                "--lr", "0.01",
                "--epochs", "2",
                "--tol", "0",
            ]
        )
        conv_dir = tmp_path / "conv"
        assert main(
            [
                "convergence",
                "--topology", str(topology_file),
                "--params", str(params_path),
                "--data", str(data_dir / "test.jsonl"),
                "--out", str(conv_dir),
                "--iters", "50",
            ]
        ) == 0
        with open(conv_dir / "convergence.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert [int(r["iteration"]) for r in rows] == [10, 50]

        scale_dir = tmp_path / "scale"
        assert main(
            [
                "scaling",
                "--topology", str(topology_file),
                "--params", str(params_path),
                "--data", str(data_dir / "test.jsonl"),
                "--out", str(scale_dir),
                "--lengths", "4", "8",
                "--budget", "fixed", "linear",
                "--fixed-iters", "10",
                "--repeats", "1",
            ]
        ) == 0
        with open(scale_dir / "scaling.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 4
        assert {r["length"] for r in rows} == {"4", "8"}
