import csv
import json
import logging

import pytest

from app.main import main
from app.services.trace_io import read_trace_csv


@pytest.fixture(autouse=True)
def restore_logging():
    """main() reconfigures the root logger onto the captured stderr"""
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    yield
    for handler in root.handlers:
        if handler not in handlers:
            handler.close()
    root.handlers[:] = handlers
    root.setLevel(level)


@pytest.fixture
def instance(tmp_path, capsys):
    directory = tmp_path / "instance"
    assert main(["datagen", "--n", "80", "--p", "12", "--k", "3", "--seed", "5", "--out", str(directory)]) == 0
    capsys.readouterr()
    return directory


def stdout_lines(capsys):
    return capsys.readouterr().out.strip().splitlines()


class TestDatagen:
    def test_writes_instance(self, tmp_path, capsys):
        out = tmp_path / "inst"
        assert main(["datagen", "--n", "40", "--p", "10", "--k", "2", "--out", str(out)]) == 0
        assert stdout_lines(capsys) == [str(out)]
        for name in ("A.csv", "b.csv", "x_star.csv", "labels.csv", "spec.json"):
            assert (out / name).exists()
        assert json.loads((out / "spec.json").read_text())["k"] == 2

    def test_same_seed_same_bytes(self, tmp_path):
        for name in ("first", "second"):
            assert main(["datagen", "--n", "30", "--p", "6", "--k", "2", "--seed", "7",
                         "--out", str(tmp_path / name)]) == 0
        for name in ("A.csv", "b.csv", "x_star.csv", "labels.csv"):
            assert (tmp_path / "first" / name).read_bytes() == (tmp_path / "second" / name).read_bytes()

    def test_binary_format(self, tmp_path):
        out = tmp_path / "bin"
        assert main(["datagen", "--n", "20", "--p", "5", "--k", "2", "--format", "binary", "--out", str(out)]) == 0
        assert (out / "A.bin").exists()
        assert not (out / "A.csv").exists()

    def test_too_many_clusters(self, tmp_path, capsys):
        assert main(["datagen", "--k", "50", "--n", "40", "--p", "10", "--out", str(tmp_path)]) == 2
        assert "error" in capsys.readouterr().err

    def test_missing_required_flag(self, tmp_path):
        assert main(["datagen", "--p", "10", "--out", str(tmp_path)]) == 2


class TestSolve:
    def test_summary_line_and_trace(self, instance, tmp_path, capsys):
        out = tmp_path / "solve"
        assert main(["solve", "--method", "rka-cluster-jl", "--instance", str(instance), "--clusters", "3",
                     "--max-iters", "60000", "--out", str(out)]) == 0
        (line,) = stdout_lines(capsys)
        fields = line.split(",")
        assert fields[0] == "rka-cluster-jl"
        assert len(fields) == 6
        assert float(fields[2]) <= 1e-6
        assert fields[5] == "0"

        trace = read_trace_csv(out / "rka-cluster-jl_trace.csv")
        assert trace[-1].iteration == int(fields[1])

        with open(out / "rka-cluster-jl_clusters.csv", newline="") as f:
            rows = list(csv.DictReader(f))
        assert [int(row["row_index"]) for row in rows] == list(range(80))
        assert {int(row["cluster_index"]) for row in rows} == {0, 1, 2}

    def test_block_method_writes_paving(self, instance, tmp_path):
        out = tmp_path / "solve"
        assert main(["solve", "--method", "rka-block", "--instance", str(instance), "--block-size", "4",
                     "--out", str(out)]) == 0
        with open(out / "rka-block_paving.csv", newline="") as f:
            rows = list(csv.DictReader(f))
        assert len(rows) == 20
        assert not (out / "rka-block_clusters.csv").exists()

    def test_wall_time_flag(self, instance, tmp_path):
        out = tmp_path / "solve"
        assert main(["solve", "--method", "classical", "--instance", str(instance), "--wall-time",
                     "--out", str(out)]) == 0
        trace = read_trace_csv(out / "classical_trace.csv")
        assert trace[0].wall_nanos == 0
        assert trace[-1].wall_nanos > 0

    def test_unknown_method(self, instance, tmp_path):
        assert main(["solve", "--method", "gauss-seidel", "--instance", str(instance), "--out", str(tmp_path)]) == 2

    def test_sample_count_above_n(self, instance, tmp_path, capsys):
        code = main(["solve", "--method", "rka-jl", "--instance", str(instance), "--sample-count", "81",
                     "--out", str(tmp_path)])
        assert code == 2
        assert "sample_count" in capsys.readouterr().err

    def test_missing_instance(self, tmp_path):
        assert main(["solve", "--method", "rka", "--instance", str(tmp_path / "nowhere"),
                     "--out", str(tmp_path)]) == 1

    def test_invalid_log_level(self, instance, tmp_path):
        assert main(["solve", "--method", "rka", "--instance", str(instance), "--log-level", "CHATTY",
                     "--out", str(tmp_path)]) == 2


class TestBench:
    def test_instance_bench_and_resume(self, instance, tmp_path, capsys):
        out = tmp_path / "bench"
        argv = ["bench", "--instance", str(instance), "--methods", "rka,rka-jl", "--reps", "2",
                "--max-iters", "500", "--out", str(out)]
        assert main(argv) == 0
        assert stdout_lines(capsys) == [str(out / "summary.csv")]
        assert len(list((out / "traces").glob("*.csv"))) == 4
        summary = (out / "summary.csv").read_text()

        assert main(argv + ["--resume"]) == 0
        assert (out / "summary.csv").read_text() == summary

    def test_generated_instance(self, tmp_path):
        out = tmp_path / "bench"
        assert main(["bench", "--n", "60", "--p", "8", "--k", "2", "--methods", "classical,rka-cluster-block",
                     "--max-iters", "300", "--out", str(out)]) == 0
        assert (out / "curve_classical.csv").exists()
        assert (out / "curve_rka-cluster-block.csv").exists()
        assert (out / "traces" / "rka-cluster-block_rep000_clusters.csv").exists()
        assert not (out / "traces" / "classical_rep000_clusters.csv").exists()

    def test_spec_file(self, tmp_path):
        spec = {
            "gen": {"n": 50, "p": 6, "k": 2, "seed": 3},
            "methods": [{"method": "rka", "max_iters": 200}, {"method": "rka-block", "max_iters": 200}],
            "repetitions": 2,
            "output_dir": str(tmp_path / "ignored"),
        }
        path = tmp_path / "spec.json"
        path.write_text(json.dumps(spec))
        out = tmp_path / "bench"
        assert main(["bench", "--spec", str(path), "--out", str(out)]) == 0
        with open(out / "summary.csv", newline="") as f:
            assert len(list(csv.DictReader(f))) == 4

    def test_invalid_spec_file(self, tmp_path):
        path = tmp_path / "spec.json"
        path.write_text(json.dumps({"gen": {"n": 5, "p": 5}, "methods": []}))
        assert main(["bench", "--spec", str(path), "--out", str(tmp_path)]) == 2

    def test_unknown_method(self, instance, tmp_path):
        assert main(["bench", "--instance", str(instance), "--methods", "rka,bogus", "--out", str(tmp_path)]) == 2

    def test_needs_a_problem(self, tmp_path):
        assert main(["bench", "--methods", "rka", "--out", str(tmp_path)]) == 2

    def test_failed_run_exits_one(self, instance, tmp_path):
        assert main(["bench", "--instance", str(instance), "--methods", "rka-jl", "--sample-count", "81",
                     "--out", str(tmp_path / "bench")]) == 1


class TestAudit:
    def test_matrix_audit(self, tmp_path, capsys):
        assert main(["audit", "thm2", "--trials", "20", "--out", str(tmp_path)]) == 0
        (line,) = stdout_lines(capsys)
        assert line == f"thm2,20,0,{tmp_path / 'thm2.csv'}"

    def test_lower_bound_audit(self, tmp_path):
        assert main(["audit", "thm3", "--trials", "20", "--k", "4", "--p", "30", "--out", str(tmp_path)]) == 0

    def test_eigenvalue_audit(self, tmp_path):
        assert main(["audit", "thm45", "--trials", "20", "--out", str(tmp_path)]) == 0
        assert (tmp_path / "thm45.csv").exists()

    def test_orthogonality_audit(self, tmp_path):
        assert main(["audit", "thm1", "--d", "300", "--trials", "1000", "--out", str(tmp_path)]) == 0

    def test_orthogonality_needs_enough_trials(self, tmp_path):
        assert main(["audit", "thm1", "--trials", "10", "--out", str(tmp_path)]) == 2

    def test_block_error_audit(self, tmp_path):
        assert main(["audit", "lemma1", "--n", "40", "--p", "8", "--runs", "20", "--iters", "10",
                     "--out", str(tmp_path)]) == 0
        assert (tmp_path / "lemma1.csv").exists()

    def test_paving_quality(self, tmp_path):
        instance = tmp_path / "instance"
        assert main(["datagen", "--n", "200", "--p", "20", "--k", "4", "--out", str(instance)]) == 0
        assert main(["audit", "paving-quality", "--instance", str(instance), "--paving-seeds", "3",
                     "--out", str(tmp_path / "audit")]) == 0
        assert (tmp_path / "audit" / "paving_quality_medians.csv").exists()

    def test_missing_audit_name(self):
        assert main(["audit"]) == 2
