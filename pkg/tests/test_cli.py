import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from conftest import DATA_DIR
from modmax import Graph, modularity, parse_edge_list
from modmax.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def normalized(report_text: str) -> str:
    """Stable form of a report: wall-clock fields zeroed, keys sorted."""
    doc = json.loads(report_text)
    doc["runtime_s"] = 0.0
    doc["stats"]["wall_time_s"] = 0.0
    return json.dumps(doc, sort_keys=True)


class TestSolveCommand:
    def test_two_triangles_json(self, runner):
        result = runner.invoke(
            main, ["solve", str(DATA_DIR / "two_triangles.edgelist"), "--gamma", "1", "--mode", "exact"]
        )
        assert result.exit_code == 0, result.output
        doc = json.loads(result.stdout)
        assert doc["modularity"] == pytest.approx(0.5, abs=1e-12)
        assert doc["proven_optimal"] is True
        assert doc["communities"] == [[0, 1, 2], [3, 4, 5]]
        assert doc["n"] == 6 and doc["m"] == 6.0

    def test_gamma_zero_single_community(self, runner):
        result = runner.invoke(
            main, ["solve", str(DATA_DIR / "barbell.edgelist"), "--gamma", "0"]
        )
        doc = json.loads(result.stdout)
        assert len(doc["communities"]) == 1

    def test_approximate_gap_reported(self, runner):
        result = runner.invoke(
            main,
            ["solve", str(DATA_DIR / "karate.edgelist"), "--mode", "approximate",
             "--gap-tolerance", "0.1"],
        )
        assert result.exit_code == 0
        doc = json.loads(result.stdout)
        assert doc["gap"] <= 0.1

    def test_heuristic_mode_nullable_fields(self, runner):
        result = runner.invoke(
            main, ["solve", str(DATA_DIR / "triangle.edgelist"), "--mode", "heuristic"]
        )
        doc = json.loads(result.stdout)
        assert doc["best_bound"] is None and doc["gap"] is None
        assert doc["proven_optimal"] is False

    def test_missing_file_exit_one(self, runner):
        result = runner.invoke(main, ["solve", "/nonexistent/g.edgelist"])
        assert result.exit_code == 1

    def test_malformed_file_exit_one(self, runner, tmp_path):
        bad = tmp_path / "bad.edgelist"
        bad.write_text("0 1\n0 1 2 3 4\n")
        result = runner.invoke(main, ["solve", str(bad)])
        assert result.exit_code == 1
        assert "line 2" in result.output

    def test_approximate_needs_tolerance_or_limit(self, runner):
        result = runner.invoke(
            main, ["solve", str(DATA_DIR / "triangle.edgelist"), "--mode", "approximate"]
        )
        assert result.exit_code == 1

    def test_exact_timeout_exit_two(self, runner, tmp_path):
        f = tmp_path / "c5.edgelist"
        f.write_text("0 1\n1 2\n2 3\n3 4\n0 4\n")
        result = runner.invoke(
            main, ["solve", str(f), "--mode", "exact", "--time-limit", "1e-9"]
        )
        assert result.exit_code == 2
        doc = json.loads(result.stdout)  # report still emitted
        assert doc["termination_reason"] == "time_limit"

    def test_determinism_normalized_json(self, runner, tmp_path):
        f = tmp_path / "c5.edgelist"
        f.write_text("0 1\n1 2\n2 3\n3 4\n0 4\n")
        args = ["solve", str(f), "--seed", "7"]
        first = runner.invoke(main, args)
        second = runner.invoke(main, args)
        assert normalized(first.stdout) == normalized(second.stdout)

    def test_json_round_trip_reproduces_modularity(self, runner):
        result = runner.invoke(main, ["solve", str(DATA_DIR / "barbell.edgelist")])
        doc = json.loads(result.stdout)
        g = parse_edge_list((DATA_DIR / "barbell.edgelist").read_text())
        labels = [0] * g.n
        for cid, comm in enumerate(doc["communities"]):
            for node in comm:
                labels[node] = cid
        assert modularity(g, labels, doc["gamma"]) == pytest.approx(
            doc["modularity"], abs=1e-9
        )

    def test_lcc_only_warns_and_restricts(self, runner, tmp_path):
        f = tmp_path / "tri_iso.edgelist"
        f.write_text("n=5\n0 1\n1 2\n0 2\n3 4\n")
        result = runner.invoke(main, ["solve", str(f), "--lcc-only"])
        assert result.exit_code == 0
        assert "lcc-only kept 3 of 5 nodes" in result.stderr
        doc = json.loads(result.stdout)
        assert doc["n"] == 3

    def test_disconnected_warning_without_lcc(self, runner):
        result = runner.invoke(main, ["solve", str(DATA_DIR / "two_triangles.edgelist")])
        assert "connected components" in result.stderr

    def test_progress_rows_on_stderr(self, runner, tmp_path):
        f = tmp_path / "c5.edgelist"
        f.write_text("0 1\n1 2\n2 3\n3 4\n0 4\n")
        result = runner.invoke(main, ["solve", str(f), "--progress"])
        lines = [l for l in result.stderr.splitlines() if l]
        assert lines[0] == "level,open_nodes,incumbent,best_bound,gap,elapsed_s"
        assert len(lines) >= 2

    def test_dump_lp(self, runner, tmp_path):
        out = tmp_path / "model.lp"
        result = runner.invoke(
            main, ["solve", str(DATA_DIR / "triangle.edgelist"), "--dump-lp", str(out)]
        )
        assert result.exit_code == 0
        assert "Maximize" in out.read_text()

    def test_weighted_and_pairs_formats(self, runner, tmp_path):
        w = tmp_path / "w.edgelist"
        w.write_text("0 1 2.5\n1 2 1.5\n")
        result = runner.invoke(main, ["solve", str(w), "--weighted"])
        assert json.loads(result.stdout)["m"] == 4.0
        p = tmp_path / "p.pairs"
        p.write_text("n=4\n0 1\n2 3\n")
        result = runner.invoke(main, ["solve", str(p), "--format", "pairs"])
        assert result.exit_code == 0

    def test_csv_and_plain_outputs(self, runner):
        result = runner.invoke(
            main, ["solve", str(DATA_DIR / "triangle.edgelist"), "--output", "csv"]
        )
        lines = result.stdout.strip().splitlines()
        assert lines[0].startswith("n,m,gamma,mode,modularity")
        assert len(lines) == 2
        result = runner.invoke(
            main, ["solve", str(DATA_DIR / "triangle.edgelist"), "--output", "plain"]
        )
        assert "proven optimal" in result.stdout

    def test_seed_env_override(self, runner):
        result = runner.invoke(
            main,
            ["solve", str(DATA_DIR / "triangle.edgelist")],
            env={"MODMAX_SEED": "11"},
        )
        assert json.loads(result.stdout)["seed"] == 11


class TestEvalAmi:
    def test_identical_files(self, runner, tmp_path):
        a = tmp_path / "a.part"
        a.write_text("0 0\n1 0\n2 1\n")
        result = runner.invoke(main, ["eval-ami", str(a), str(a)])
        assert result.stdout.strip() == "1.000000"

    def test_permuted_labels(self, runner, tmp_path):
        a = tmp_path / "a.part"
        b = tmp_path / "b.part"
        a.write_text("0 0\n1 0\n2 1\n3 1\n")
        b.write_text("0 9\n1 9\n2 4\n3 4\n")
        result = runner.invoke(main, ["eval-ami", str(a), str(b)])
        assert result.stdout.strip() == "1.000000"

    def test_node_set_mismatch_exit_one(self, runner, tmp_path):
        a = tmp_path / "a.part"
        b = tmp_path / "b.part"
        a.write_text("0 0\n1 1\n")
        b.write_text("0 0\n5 1\n")
        result = runner.invoke(main, ["eval-ami", str(a), str(b)])
        assert result.exit_code == 1

    def test_random_partitions_near_zero(self, runner, tmp_path):
        import numpy as np

        rng = np.random.default_rng(4)
        a = tmp_path / "a.part"
        b = tmp_path / "b.part"
        a.write_text("".join(f"{i} {rng.integers(0, 4)}\n" for i in range(200)))
        b.write_text("".join(f"{i} {rng.integers(0, 4)}\n" for i in range(200)))
        result = runner.invoke(main, ["eval-ami", str(a), str(b)])
        assert abs(float(result.stdout.strip())) < 0.2


class TestBench:
    def test_toy_corpus(self, runner, tmp_path):
        corpus = tmp_path / "corpus"
        corpus.mkdir()
        for name in ("triangle.edgelist", "two_triangles.edgelist", "barbell.edgelist"):
            (corpus / name).write_text((DATA_DIR / name).read_text())
        result = runner.invoke(main, ["bench", str(corpus)])
        assert result.exit_code == 0
        lines = result.stdout.strip().splitlines()
        assert lines[0] == "name,n,m,modularity,best_bound,gap,proven_optimal,runtime_s,error"
        assert len(lines) == 4
        names = [l.split(",")[0] for l in lines[1:]]
        assert names == sorted(names)
        assert all(",True," in l for l in lines[1:])

    def test_empty_directory(self, runner, tmp_path):
        corpus = tmp_path / "empty"
        corpus.mkdir()
        result = runner.invoke(main, ["bench", str(corpus)])
        assert result.exit_code == 0
        assert result.stdout.strip().splitlines() == [
            "name,n,m,modularity,best_bound,gap,proven_optimal,runtime_s,error"
        ]

    def test_malformed_file_recorded_not_fatal(self, runner, tmp_path):
        corpus = tmp_path / "corpus"
        corpus.mkdir()
        (corpus / "good.edgelist").write_text("0 1\n1 2\n0 2\n")
        (corpus / "bad.edgelist").write_text("0 1 2 3 4\n")
        result = runner.invoke(main, ["bench", str(corpus)])
        assert result.exit_code == 0
        lines = result.stdout.strip().splitlines()
        bad = next(l for l in lines if l.startswith("bad"))
        good = next(l for l in lines if l.startswith("good"))
        assert "line 1" in bad
        assert good.endswith(",")
