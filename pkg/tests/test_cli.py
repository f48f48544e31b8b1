import csv
import json
import os

import pytest

from stable_streams.cli import main
from stable_streams.documents import communities_doc, write_json
from stable_streams.multiscale import CommunityStore, StableCommunity


@pytest.fixture
def generated(tmp_path):
    out = tmp_path / "s.txt"
    assert main(["generate", "--T", "300", "--N", "30", "--p", "0.005", "--SC", "4", "--seed", "2", "-o", str(out)]) == 0
    return out


def load(path):
    return json.loads(open(path, encoding="utf-8").read())


def test_generate_writes_stream_truth_and_manifest(generated):
    truth = load(f"{generated}.truth.json")
    assert truth["schema"] == "stable-streams/ground-truth"
    assert len(truth["planted"]) == 4
    manifest = load(f"{generated}.manifest.json")
    assert manifest["command"] == "generate" and manifest["rng_seed"] == 2
    lines = generated.read_text().splitlines()
    assert lines and all(len(line.split()) == 3 for line in lines)


def test_generate_default_noise_is_ten_over_n(tmp_path):
    out = tmp_path / "s.txt"
    assert main(["generate", "--T", "40", "--N", "20", "-o", str(out)]) == 0
    assert load(f"{out}.manifest.json")["params"]["p"] == 0.5


def test_detect_then_evaluate_then_export(generated, tmp_path, capsys):
    comms = tmp_path / "c.json"
    assert main(["detect", str(generated), "-o", str(comms), "--workers", "1"]) == 0
    doc = load(comms)
    assert doc["schema"] == "stable-streams/communities"
    report = tmp_path / "r.json"
    table = tmp_path / "r.csv"
    rc = main(["evaluate", "--communities", str(comms), "--truth", f"{generated}.truth.json",
               "--stream", str(generated), "-o", str(report), "--table", str(table)])
    assert rc == 0
    assert "timeline NMI" in capsys.readouterr().out
    rep = load(report)
    assert 0.0 <= rep["nmi_mean"] <= 1.0
    assert rep["runs"][0]["stats"]["community_count"] == len(doc["communities"])
    assert table.read_text().startswith("run,method,gamma,nmi")
    assert main(["export-timeline", str(comms), "--csv", str(tmp_path / "t.csv"), "--svg", str(tmp_path / "t.svg")]) == 0
    assert (tmp_path / "t.svg").read_text().startswith("<svg")


def test_evaluate_baseline_over_ladder(generated, tmp_path):
    report = tmp_path / "b.json"
    rc = main(["evaluate", "--baseline", "detect-match", "--truth", f"{generated}.truth.json",
               "--stream", str(generated), "-o", str(report)])
    assert rc == 0
    gammas = [r["gamma"] for r in load(report)["runs"]]
    assert gammas == [99, 49, 24, 12, 6, 3, 1]


def test_missing_truth_is_a_usage_error(generated, tmp_path, capsys):
    rc = main(["evaluate", "--communities", str(generated), "--truth", str(tmp_path / "nope.json"),
               "-o", str(tmp_path / "r.json")])
    assert rc == 2
    assert "no such file" in capsys.readouterr().err


def test_unwritable_output_is_a_usage_error(generated):
    assert main(["detect", str(generated), "-o", "/nonexistent-dir/c.json", "--workers", "1"]) == 2


def test_bad_stream_is_a_usage_error(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("0 a a\n")
    assert main(["detect", str(bad), "-o", str(tmp_path / "c.json"), "--strict"]) == 2


def test_unknown_command_exits_2():
    assert main(["frobnicate"]) == 2


def test_flags_override_config_file(generated, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# detector settings\ntheta-p = 4\ntheta_q = 0.8\nseed = 5\n")
    out = tmp_path / "c.json"
    assert main(["detect", str(generated), "-o", str(out), "--config", str(cfg), "--theta-p", "5", "--workers", "1"]) == 0
    config = load(f"{out}.manifest.json")["config"]
    assert config["theta_p"] == 5 and config["theta_q"] == 0.8 and config["rng_seed"] == 5


def test_bad_config_file(generated, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("volume = 11\n")
    assert main(["detect", str(generated), "-o", str(tmp_path / "c.json"), "--config", str(cfg)]) == 2


def test_workers_env_default(generated, tmp_path, monkeypatch):
    monkeypatch.setenv("STABLE_STREAMS_WORKERS", "2")
    out = tmp_path / "c.json"
    assert main(["detect", str(generated), "-o", str(out)]) == 0
    assert load(f"{out}.manifest.json")["workers"] == 2


def _store_file(tmp_path, communities):
    path = tmp_path / "store.json"
    write_json(communities_doc(CommunityStore(communities)), path)
    return path


def test_export_empty_store_gives_header_only(tmp_path):
    path = _store_file(tmp_path, [])
    out = tmp_path / "t.csv"
    assert main(["export-timeline", str(path), "--csv", str(out), "--no-svg"]) == 0
    assert out.read_text().splitlines() == ["node,window_start,window_end,community_id,gamma"]
    assert not os.path.exists(f"{path}.timeline.svg")


def test_export_one_row_per_node_and_window(tmp_path):
    c = StableCommunity(frozenset("abcd"), (0, 30), 10, {0: 1.0, 10: 1.0, 20: 0.9}, 10)
    path = _store_file(tmp_path, [c])
    out = tmp_path / "t.csv"
    assert main(["export-timeline", str(path), "--csv", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 12
    assert {r["window_start"] for r in rows} == {"0", "10", "20"}
    assert main(["export-timeline", str(path), "--csv", str(out), "--min-length", "40"]) == 0
    assert len(out.read_text().splitlines()) == 1
