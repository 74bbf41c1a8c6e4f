import json

import numpy as np
import pytest

from lyapcum import __version__
from lyapcum.cli import main


def write_json(path, data):
    path.write_text(json.dumps(data))
    return str(path)


@pytest.fixture
def fig1_graph(tmp_path):
    return write_json(
        tmp_path / "fig1.json", {"p": 2, "edges": [[0, 0], [0, 1]]}
    )


@pytest.fixture
def fig1_params(tmp_path):
    return write_json(
        tmp_path / "params.json",
        {
            "A": [[0.5, 0.0], [1.0, 0.0]],
            "omega": {"2": [1.0, 1.0], "3": [1.0, 1.0], "4": [1.0, 1.0]},
        },
    )


class TestCumulants:
    def test_two_node_dump(self, tmp_path, fig1_graph, fig1_params):
        out = tmp_path / "dump.json"
        code = main(
            [
                "cumulants",
                "--graph", fig1_graph,
                "--params", fig1_params,
                "--out", str(out),
            ]
        )
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["version"] == __version__
        assert doc["tensors"]["2"]["entries"]["0,1"] == pytest.approx(2 / 3)
        assert all(v <= 1e-12 for v in doc["recursive_residuals"].values())

    def test_zero_matrix_dump_equals_noise(self, tmp_path, fig1_graph):
        params = write_json(
            tmp_path / "zero.json",
            {
                "A": [[0.0, 0.0], [0.0, 0.0]],
                "omega": {"2": [1.0, 2.0], "3": [0.5, -0.5], "4": [1.0, 1.0]},
            },
        )
        out = tmp_path / "dump.json"
        assert main(["cumulants", "--graph", fig1_graph, "--params", params, "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["tensors"]["2"]["entries"]["0,0"] == 1.0
        assert doc["tensors"]["2"]["entries"]["0,1"] == 0.0
        assert doc["tensors"]["3"]["entries"]["1,1,1"] == -0.5

    def test_unstable_exits_3(self, tmp_path, fig1_graph):
        params = write_json(
            tmp_path / "bad.json",
            {
                "A": [[1.5, 0.0], [1.0, 0.0]],
                "omega": {"2": [1.0, 1.0], "3": [1.0, 1.0], "4": [1.0, 1.0]},
            },
        )
        assert main(["cumulants", "--graph", fig1_graph, "--params", params, "--out", str(tmp_path / "x.json")]) == 3

    def test_malformed_graph_exits_2(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{ not json")
        assert main(["cumulants", "--graph", str(bad), "--out", str(tmp_path / "x.json")]) == 2

    def test_csv_format(self, tmp_path, fig1_graph, fig1_params):
        out = tmp_path / "s.csv"
        assert main(["cumulants", "--graph", fig1_graph, "--params", fig1_params, "--format", "csv", "--out", str(out)]) == 0
        first_row = out.read_text().splitlines()[0].split(",")
        assert float(first_row[0]) == pytest.approx(4 / 3)

    def test_deterministic_bytes(self, tmp_path, fig1_graph):
        outs = []
        for name in ("a.json", "b.json"):
            out = tmp_path / name
            main(["cumulants", "--graph", fig1_graph, "--seed", "9", "--out", str(out)])
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]


class TestIdentify:
    def test_tree_round_trip(self, tmp_path):
        graph = write_json(
            tmp_path / "tree.json",
            {"p": 4, "edges": [[0, 0], [0, 1], [1, 2], [1, 3]]},
        )
        stack = tmp_path / "stack.json"
        main(["cumulants", "--graph", graph, "--seed", "5", "--out", str(stack)])
        out = tmp_path / "report.json"
        code = main(["identify", "--graph", graph, "--stack", str(stack), "--out", str(out)])
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["report"]["verdict"] == "recovered"
        assert max(doc["report"]["forward_residuals"].values()) <= 1e-8

    def test_bare_two_cycle_exits_4_with_diagnostic(self, tmp_path):
        graph = write_json(
            tmp_path / "cycle.json", {"p": 2, "edges": [[0, 1], [1, 0]]}
        )
        params = write_json(
            tmp_path / "p.json",
            {
                "A": [[0.0, 0.6], [0.7, 0.0]],
                "omega": {"2": [1.0, 1.0], "3": [1.0, 1.0], "4": [1.0, 1.0]},
            },
        )
        stack = tmp_path / "stack.json"
        main(["cumulants", "--graph", graph, "--params", params, "--out", str(stack)])
        out = tmp_path / "report.json"
        code = main(["identify", "--graph", graph, "--stack", str(stack), "--out", str(out)])
        assert code == 4
        doc = json.loads(out.read_text())
        assert not doc["equation_count"]["bound_satisfied"]
        assert doc["equation_count"]["params"] == 2 + 2 * 3
        assert doc["equation_count"]["equations"] == 6

    def test_malformed_stack_exits_2(self, tmp_path, fig1_graph):
        stack = tmp_path / "stack.json"
        stack.write_text('{"tensors": {"2": {"oops": 1}}}')
        assert main(["identify", "--graph", fig1_graph, "--stack", str(stack), "--out", "-"]) == 2


class TestAnalyze:
    def test_collider_square_report(self, tmp_path):
        graph = write_json(
            tmp_path / "sq.json",
            {
                "p": 4,
                "edges": [[0, 1], [0, 3], [2, 3], [0, 0], [1, 1], [2, 2], [3, 3]],
            },
        )
        out = tmp_path / "an.json"
        assert main(["analyze", "--graph", graph, "--seed", "3", "--trials", "3", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["marginal_independence"] == [[0, 2], [1, 2]]
        ci = {(c["i"], c["j"], c["given"][0]) for c in doc["conditional_independence"]}
        assert ci == {(1, 2, 0), (0, 2, 1)}
        assert doc["local_identifiability"]["verdict"] == "locally-identifiable"
        assert all(r["rank"] <= r["bound"] for r in doc["rank_constraints"])

    def test_loops_only_all_pairs_independent(self, tmp_path):
        graph = write_json(
            tmp_path / "diag.json", {"p": 3, "edges": [[0, 0], [1, 1], [2, 2]]}
        )
        out = tmp_path / "an.json"
        main(["analyze", "--graph", graph, "--trials", "2", "--out", str(out)])
        doc = json.loads(out.read_text())
        assert doc["marginal_independence"] == [[0, 1], [0, 2], [1, 2]]

    def test_csv_singular_values(self, tmp_path):
        graph = write_json(
            tmp_path / "sq.json",
            {
                "p": 4,
                "edges": [[0, 1], [0, 3], [2, 3], [0, 0], [1, 1], [2, 2], [3, 3]],
            },
        )
        out = tmp_path / "sv.csv"
        assert main(["analyze", "--graph", graph, "--trials", "2", "--format", "csv", "--out", str(out)]) == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "trial,augmented,rank,singular_values"
        assert len(lines) == 3
        assert lines[1].split(",")[2] == "7"

    def test_two_cycle_notes_augmentation(self, tmp_path):
        graph = write_json(
            tmp_path / "tc.json",
            {"p": 2, "edges": [[0, 0], [1, 1], [0, 1], [1, 0]]},
        )
        out = tmp_path / "an.json"
        assert main(["analyze", "--graph", graph, "--trials", "3", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["local_identifiability"]["verdict"] == "locally-identifiable"
        assert doc["local_identifiability"]["augmented"] is True
        assert doc["local_identifiability"]["orders"] == [2, 3, 4]


def test_ppoly_table(capsys):
    assert main(["ppoly", "--xmax", "2", "--ymax", "2"]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "x\\y,0,1,2"
    assert out.splitlines()[3].split(",")[3] == "1;4;1"
