import json
import math

import pytest

from emcmc import io
from emcmc.cli import main
from emcmc.engine import SampleRecord
from emcmc.graph import load_graph
from emcmc.model import canonical_id


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def _one_error_line(err, code):
    lines = err.strip().splitlines()
    assert len(lines) == 1
    assert lines[0].startswith(f"error {code}: ")


def test_generate_grid_round_trip(tmp_path, capsys):
    code, out, _ = _run(capsys, "generate", "grid", "--rows", 4, "--cols", 4, "--out", tmp_path)
    assert code == 0
    doc = io.read_json(tmp_path / "instance.json")
    assert doc["n"] == 16 and len(doc["edges"]) == 24
    assert load_graph(doc).to_document() == load_graph(load_graph(doc).to_document()).to_document()
    assert io.instance_checksum(doc) == io.instance_checksum(load_graph(doc))


def test_generate_grid_weights(tmp_path, capsys):
    code, *_ = _run(capsys, "generate", "grid", "--rows", 2, "--cols", 2, "--weights", "1,2,3,4", "--out", tmp_path)
    assert code == 0
    assert [u["weight"] for u in io.read_json(tmp_path / "instance.json")["units"]] == [1, 2, 3, 4]


def test_generate_bad_weights(tmp_path, capsys):
    code, _, err = _run(capsys, "generate", "grid", "--rows", 2, "--cols", 2, "--weights", "1,2", "--out", tmp_path)
    assert code != 0
    _one_error_line(err, "E_CONFIG")


def test_enumerate_counts(tmp_path, capsys):
    _run(capsys, "generate", "grid", "--rows", 1, "--cols", 3, "--out", tmp_path)
    io.write_json(tmp_path / "cfg.json", {"k": 2})
    code, out, _ = _run(capsys, "enumerate", "--instance", tmp_path / "instance.json", "--config", tmp_path / "cfg.json", "--out", tmp_path)
    assert code == 0
    assert "contiguous=2" in out and "unconstrained=3" in out
    assert io.read_catalog(tmp_path / "catalog.txt") == [(1, 1, 2), (1, 2, 2)]


def test_enumerate_stirling_count(tmp_path, capsys):
    io.write_json(tmp_path / "g.json", io.grid_document(1, 25))
    io.write_json(tmp_path / "cfg.json", {"k": 3, "epsilon": 0.0})
    code, out, _ = _run(capsys, "enumerate", "--instance", tmp_path / "g.json", "--config", tmp_path / "cfg.json", "--out", tmp_path)
    assert code == 0
    assert "unconstrained=141197991025" in out


def test_enumerate_budget_error(tmp_path, capsys):
    io.write_json(tmp_path / "g.json", io.grid_document(4, 4))
    io.write_json(tmp_path / "cfg.json", {"k": 3})
    code, _, err = _run(capsys, "enumerate", "--instance", tmp_path / "g.json", "--config", tmp_path / "cfg.json", "--budget", 50, "--out", tmp_path)
    assert code != 0
    _one_error_line(err, "E_BUDGET")


def test_sample_manifest_and_determinism(tmp_path, capsys):
    io.write_json(tmp_path / "g.json", io.grid_document(4, 4))
    io.write_json(tmp_path / "cfg.json", {"k": 2, "q": 16, "iterations": 30, "p_m": 0.8})
    args = ["sample", "--instance", tmp_path / "g.json", "--config", tmp_path / "cfg.json", "--seed", 5]
    assert _run(capsys, *args, "--out", tmp_path / "a")[0] == 0
    assert _run(capsys, *args, "--out", tmp_path / "b", "--workers", 2)[0] == 0
    assert (tmp_path / "a" / "stream.csv").read_bytes() == (tmp_path / "b" / "stream.csv").read_bytes()
    manifest = io.read_json(tmp_path / "a" / "manifest.json")
    assert len(manifest["chains"]) == 16
    assert manifest["seed"] == 5 and manifest["config"]["seed"] == 5
    assert manifest["instance_checksum"] == io.instance_checksum(io.read_json(tmp_path / "g.json"))
    for key in ("started", "finished", "unique_canonical_ids", "throughput_states_per_second"):
        assert key in manifest
    # the echoed config reproduces the run
    io.write_json(tmp_path / "echo.json", manifest["config"])
    _run(capsys, "sample", "--instance", tmp_path / "g.json", "--config", tmp_path / "echo.json", "--out", tmp_path / "c")
    assert (tmp_path / "c" / "stream.csv").read_bytes() == (tmp_path / "a" / "stream.csv").read_bytes()


def test_sample_mutation_only_has_no_crossover(tmp_path, capsys):
    io.write_json(tmp_path / "g.json", io.grid_document(4, 4))
    io.write_json(tmp_path / "cfg.json", {"k": 2, "q": 1, "iterations": 50, "p_m": 1.0})
    _run(capsys, "sample", "--instance", tmp_path / "g.json", "--config", tmp_path / "cfg.json", "--out", tmp_path)
    manifest = io.read_json(tmp_path / "manifest.json")
    assert manifest["chains"][0]["prcrx_attempts"] == 0


def test_sample_init_failure(tmp_path, capsys):
    io.write_json(tmp_path / "g.json", io.grid_document(1, 3))
    io.write_json(tmp_path / "cfg.json", {"k": 2, "q": 1, "p_m": 1.0, "epsilon": 0.2})
    code, _, err = _run(capsys, "sample", "--instance", tmp_path / "g.json", "--config", tmp_path / "cfg.json", "--out", tmp_path)
    assert code != 0
    _one_error_line(err, "E_INIT")


def test_bad_config_and_missing_files(tmp_path, capsys):
    io.write_json(tmp_path / "g.json", io.grid_document(2, 2))
    io.write_json(tmp_path / "cfg.json", {"q": 2})
    code, _, err = _run(capsys, "sample", "--instance", tmp_path / "g.json", "--config", tmp_path / "cfg.json")
    _one_error_line(err, "E_CONFIG")
    code, _, err = _run(capsys, "sample", "--instance", tmp_path / "nope.json", "--config", tmp_path / "cfg.json")
    assert code != 0
    _one_error_line(err, "E_LOAD")
    code, _, err = _run(capsys, "frobnicate")
    assert code != 0
    _one_error_line(err, "E_USAGE")


def _write_stream(path, ids):
    io.write_stream(path, [SampleRecord(i + 1, 0, cid, 0.5, 0.0, "ecmut", True) for i, cid in enumerate(ids)])


def test_analyze_uniform_pass(tmp_path, capsys):
    catalog = [(1, 1, 2), (1, 2, 2)]
    (tmp_path / "catalog.txt").write_text("1 1 2\n1 2 2\n")
    _write_stream(tmp_path / "stream.csv", [canonical_id(a) for a in catalog])
    code, out, _ = _run(capsys, "analyze", "--stream", tmp_path / "stream.csv", "--catalog", tmp_path / "catalog.txt", "--out", tmp_path)
    assert code == 0
    assert "tv=0.000000" in out and "pass=true" in out
    summary = io.read_json(tmp_path / "analysis.json")
    assert summary["tv"] == 0.0 and summary["pass"] is True
    hist = (tmp_path / "histogram.csv").read_text().splitlines()
    edges = hist[0].removeprefix("# edges=").split(",")
    assert len(edges) == 51 and float(edges[0]) == 0.0 and float(edges[-1]) == 1.0
    assert len(hist) == 2 + 50
    assert sum(int(line.rsplit(",", 1)[1]) for line in hist[2:]) == 2


def test_analyze_mismatch(tmp_path, capsys):
    (tmp_path / "catalog.txt").write_text("1 1 2\n1 2 2\n")
    _write_stream(tmp_path / "stream.csv", ["0123456789abcdef"])
    code, _, err = _run(capsys, "analyze", "--stream", tmp_path / "stream.csv", "--catalog", tmp_path / "catalog.txt", "--out", tmp_path)
    assert code != 0
    _one_error_line(err, "E_MISMATCH")


def test_stream_round_trip(tmp_path):
    recs = [SampleRecord(3, 1, "abc", math.nan, 0.25, "prcrx", False), SampleRecord(4, 0, "def", 0.1, 0.0, "ecmut", True)]
    io.write_stream(tmp_path / "s.csv", recs)
    back = list(io.read_stream(tmp_path / "s.csv"))
    assert [r.to_line() for r in back] == [r.to_line() for r in recs]


def test_config_parsing():
    cfg = io.parse_config({"k": 3, "epsilon": "inf", "balance_mode": "max_deviation", "q": 2, "p_m": 0.5}, seed=9)
    assert math.isinf(cfg.constraints.epsilon)
    assert cfg.engine.seed == 9 and cfg.engine.q == 2
    assert io.parse_config(cfg.to_document()) == cfg
    with pytest.raises(ValueError):
        io.parse_config({"q": 2})


def test_disconnection_demo_cli(tmp_path, capsys):
    code, *_ = _run(capsys, "generate", "disconnection-demo", "--seed", 3, "--out", tmp_path)
    assert code == 0
    code, out, _ = _run(capsys, "enumerate", "--instance", tmp_path / "instance.json", "--config", tmp_path / "config.json", "--reachability", "--out", tmp_path)
    comps = json.loads((tmp_path / "counts.json").read_text())["reachability_components"]
    assert len(comps) >= 2
