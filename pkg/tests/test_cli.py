import json
import subprocess
import sys

import pytest

from listrec import __version__
from listrec.cli import main


def run(tmp_path, *argv, name="out.json"):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    doc = json.loads(out.read_text()) if out.exists() else None
    return code, doc


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj) if not isinstance(obj, str) else obj)
    return str(p)


def test_params(tmp_path):
    code, doc = run(tmp_path, "params", "--alpha", "1/2", "--epsilon", "1/2", "--d", "2", "--n", "3")
    assert code == 0
    p = doc["result"]["params"]
    assert (p["K"], p["mu"], p["beta"], p["theta"]) == ("3", "1/12", "1/24", "1/11")
    assert doc["result"]["lower_bound"]["f"] == 1024
    assert doc["version"] == __version__
    assert doc["config"]["alpha"] == "1/2" and doc["config"]["subcommand"] == "params"


def test_params_plan(tmp_path):
    code, doc = run(tmp_path, "params", "--alpha", "1/2", "--epsilon", "1/2", "--d", "2", "--plan")
    assert code == 0 and doc["result"]["main_plan"]["B_N"]["20"] == 5


@pytest.mark.parametrize("alpha", ["0.5", "1", "abc"])
def test_bad_rationals_exit_3(tmp_path, alpha):
    code, _ = run(tmp_path, "params", "--alpha", alpha, "--epsilon", "1/2", "--d", "2")
    assert code == 3


def test_usage_error_exit_3(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["params"])
    assert exc.value.code == 3


def test_sample_check_oracle(tmp_path):
    code, doc = run(tmp_path, "sample", "--n", "3", "--d", "2", "--p", "5", "--seed", "1")
    assert code == 0 and doc["result"]["rank"] == 2
    cpath = write(tmp_path, "code.json", doc["result"]["code"])
    code, doc = run(tmp_path, "check", "--code", cpath, "--B", "3", name="c.json")
    assert code == 0 and doc["result"]["goodness"]["exact"]
    code, doc = run(tmp_path, "oracle", "--code", cpath, "--alpha", "0", "--ell", "2", "--L", "4", name="o.json")
    assert code == 0 and "recoverable" in doc["result"]
    lists = write(tmp_path, "lists.json", doc["result"]["lists"])
    code, doc2 = run(tmp_path, "oracle", "--code", cpath, "--alpha", "0", "--lists", lists, name="o2.json")
    assert doc2["result"]["report"]["count"] == doc["result"]["max_count"]


def test_check_budget_exit_2(tmp_path):
    code, doc = run(tmp_path, "sample", "--n", "8", "--d", "2", "--p", "101", "--seed", "1")
    cpath = write(tmp_path, "code.json", doc["result"]["code"])
    code, _ = run(tmp_path, "check", "--code", cpath, "--B", "6", "--certificate-budget", "10", name="c.json")
    assert code == 2


def test_malformed_inputs_exit_3(tmp_path):
    bad = write(tmp_path, "bad.json", "{not json")
    assert main(["oracle", "--code", bad, "--alpha", "0", "--ell", "1"]) == 3
    wrong = write(tmp_path, "wrong.json", {"p": 5, "rows": [[1]]})
    assert main(["oracle", "--code", wrong, "--alpha", "0", "--ell", "1"]) == 3
    grid = write(tmp_path, "grid.json", {"alphas": [0.5], "epsilons": ["1/2"], "d": 1, "n": 2, "p": 3, "ells": [1], "seeds": [0]})
    assert main(["experiment", "--config", grid]) == 3


def test_graph_and_certify(tmp_path):
    g = write(tmp_path, "g.json", {"w": 3, "m": 3, "edges": [[0, 1, 0], [1, 2, 1], [0, 2, 2]]})
    code, doc = run(tmp_path, "graph", "--graph", g, "--d", "1", "--seed", "0", "--gamma")
    assert code == 0 and doc["result"]["bundle_problems"] == []
    cert = write(tmp_path, "cert.json", {"w": 3, "trees": [[[0, 1, 0], [1, 2, 1]]]})
    co = write(tmp_path, "co.json", {"p": 7, "rows": [[2], [3]]})
    pts = write(tmp_path, "pts.json", [[1], [1], [1]])
    code, doc = run(tmp_path, "certify", "--cert", cert, "--coeffs", co, "--points", pts,
                    "--sanity-p", "101", "--show-matrix", name="c.json")
    r = doc["result"]
    assert r["det"] == 6 and r["R"] == [[2, 5], [0, 3]]
    assert r["specialization_det"] in (1, 100)
    assert r["collapse"] == {"consistent": True, "all_equal": True}


def test_attack_exit_codes(tmp_path):
    code, doc = run(tmp_path, "sample", "--n", "3", "--d", "2", "--p", "1031", "--seed", "3")
    cpath = write(tmp_path, "code.json", doc["result"]["code"])
    code, doc = run(tmp_path, "attack", "--code", cpath, "--alpha", "1/2", "--epsilon", "1/2",
                    "--ell", "300", "--seed", "3", name="a.json")
    assert code == 0 and doc["result"]["verified"] and doc["result"]["plan"]["P"] == 936
    code, _ = run(tmp_path, "attack", "--code", cpath, "--alpha", "1/2", "--epsilon", "1/2",
                  "--ell", "100", "--seed", "3", name="b.json")
    assert code == 3


def test_experiment_writes_json_csv_and_figure(tmp_path):
    grid = write(tmp_path, "grid.json", {"alphas": ["0", "1/n"], "epsilons": ["1/2"], "d": [1, 2], "n": [2],
                                         "p": [3], "ells": [1], "seeds": [0], "budgets": {"candidate_sets": 20}})
    out = tmp_path / "exp" / "report.json"
    assert main(["experiment", "--config", grid, "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert len(doc["result"]["cells"]) == 4
    assert (tmp_path / "exp" / "report.csv").read_text().count("\n") == 5
    assert (tmp_path / "exp" / "report.png").stat().st_size > 0


def test_szlab_and_determinism(tmp_path):
    args = ["szlab", "--B", "2", "--m", "3", "--d", "1", "--p", "7", "--trials", "40", "--seed", "9", "--union"]
    assert main([*args, "--out", str(tmp_path / "a" / "sz.json")]) == 0
    assert main([*args, "--out", str(tmp_path / "b" / "sz.json")]) == 0
    a = (tmp_path / "a" / "sz.json").read_bytes()
    assert a == (tmp_path / "b" / "sz.json").read_bytes()
    assert (tmp_path / "a" / "sz.png").exists()


def test_module_entry_point(tmp_path):
    res = subprocess.run(
        [sys.executable, "-m", "listrec", "params", "--alpha", "1/2", "--epsilon", "1/2", "--d", "2"],
        capture_output=True, text=True,
    )
    assert res.returncode == 0 and json.loads(res.stdout)["result"]["params"]["K"] == "3"
