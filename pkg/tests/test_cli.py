import json

import pytest

from jrsp.cli import main
from jrsp.instance import load


@pytest.fixture
def n5(tmp_path):
    path = tmp_path / "n5.json"
    assert main(["gen", "--nodes", "5", "--complete", "--levels", "0,2,4", "--antennas", "2",
                 "--seed", "7", "--out", str(path)]) == 0
    return path


def test_gen_prints_summary(n5, capsys, tmp_path):
    net = load(n5).net
    assert (net.num_nodes, net.num_links, net.power_levels) == (5, 20, (0.0, 2.0, 4.0))
    again = tmp_path / "again.json"
    main(["gen", "--nodes", "5", "--complete", "--levels", "0,2,4", "--antennas", "2",
          "--seed", "7", "--out", str(again)])
    assert again.read_bytes() == n5.read_bytes()
    assert "M=" in capsys.readouterr().out


def test_two_node_pipeline(tmp_path):
    inst = tmp_path / "n2.json"
    out = tmp_path / "n2.result.json"
    assert main(["gen", "--nodes", "2", "--flows", "0:1:1", "--out", str(inst)]) == 0
    assert main(["solve", "--exact", "--in", str(inst), "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["schema"] == "jrsp-result/1" and doc["method"] == "exact"
    assert doc["solution"]["lambda"] > 0


def test_exact_and_hcg_on_tiny_preset(tmp_path):
    inst = tmp_path / "t3.json"
    main(["gen", "--preset", "tiny3", "--out", str(inst)])
    ex, hc = tmp_path / "ex.json", tmp_path / "hc.json"
    assert main(["solve", "--exact", "--in", str(inst), "--out", str(ex)]) == 0
    assert main(["solve", "--hcg", "--starts", "10", "--in", str(inst), "--out", str(hc),
                 "--dump-lp", str(tmp_path / "m.lp")]) == 0
    lam_ex = json.loads(ex.read_text())["solution"]["lambda"]
    lam_hc = json.loads(hc.read_text())["solution"]["lambda"]
    assert lam_hc <= lam_ex + 1e-9
    assert (tmp_path / "hc.trace.csv").read_text().startswith("# schema: hcg-trace/1\n")
    assert (tmp_path / "m.lp").read_text().startswith("\\ tiny3\nMaximize")


def test_hcg_output_is_byte_identical(n5, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        assert main(["solve", "--hcg", "--starts", "2", "--seed", "3", "--in", str(n5),
                     "--out", str(out), "--trace", str(out) + ".csv"]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.json.csv").read_bytes() == (tmp_path / "b.json.csv").read_bytes()


def test_exit_codes(tmp_path, n5, capsys):
    out = str(tmp_path / "o.json")
    assert main(["solve", "--exact", "--cap", "10", "--in", str(n5), "--out", out]) == 3
    bad = tmp_path / "bad.json"
    bad.write_text('{"schema_version": 1}')
    assert main(["solve", "--exact", "--in", str(bad), "--out", out]) == 2
    assert main(["solve", "--exact", "--in", str(tmp_path / "missing.json"), "--out", out]) == 5
    assert main(["gen", "--out", out]) == 2
    assert "error:" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        main(["solve", "--in", str(n5), "--out", out])


def test_modes_count_experiment(tmp_path):
    assert main(["experiment", "modes-count", "--n-min", "2", "--n-max", "4",
                 "--out-dir", str(tmp_path)]) == 0
    lines = (tmp_path / "modes_count.csv").read_text().splitlines()
    assert lines[0] == "# schema: modes-count/1"
    body = [ln for ln in lines if not ln.startswith("#")]
    assert body[0] == "N,K,L,M"
    assert body[1] == "2,4,2,7" and body[2] == "3,4,6,19"


def test_gap_experiment(tmp_path):
    assert main(["experiment", "gap", "--instances", "1", "--starts", "2",
                 "--out-dir", str(tmp_path)]) == 0
    lines = [ln for ln in (tmp_path / "gap.csv").read_text().splitlines()
             if not ln.startswith("#")]
    assert lines[0] == "instance_seed,start,lambda_exact,lambda_hcg,lambda_hcg_best"
    assert len(lines) == 3
    for ln in lines[1:]:
        _, _, ex, _, best = ln.split(",")
        assert float(best) <= float(ex) + 1e-9
