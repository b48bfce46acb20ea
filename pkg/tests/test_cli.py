from __future__ import annotations

import json

import pytest

from transit_sentiment.cli import main


@pytest.fixture
def synth(tmp_path):
    posts, truth = tmp_path / "posts.jsonl", tmp_path / "truth.jsonl"
    assert main(["synth", "-n", "300", "--seed", "4", "-o", str(posts), "--truth", str(truth)]) == 0
    return tmp_path


def test_stagewise_commands(synth, capsys):
    d = synth
    assert main(["ingest", str(d / "posts.jsonl"), "-o", str(d / "clean.jsonl")]) == 0
    assert main(["score", str(d / "clean.jsonl"), "-o", str(d / "scored.jsonl"), "--rule", "alpha=15"]) == 0
    assert main(["classify", str(d / "scored.jsonl"), "-o", str(d / "labeled.jsonl")]) == 0
    capsys.readouterr()
    assert main(["evaluate", str(d / "labeled.jsonl"), str(d / "truth.jsonl"), "--restrict", "-o", str(d / "eval.json")]) == 0
    assert "macro" in capsys.readouterr().out
    assert json.loads((d / "eval.json").read_text())["accuracy"] == 1.0
    assert main(["aggregate", str(d / "labeled.jsonl"), "--out-dir", str(d / "agg"), "--multi-assign"]) == 0
    assert (d / "agg" / "stations.geojson").is_file()


def test_evaluate_id_mismatch_exit_1(synth):
    d = synth
    main(["ingest", str(d / "posts.jsonl"), "-o", str(d / "clean.jsonl")])
    main(["score", str(d / "clean.jsonl"), "-o", str(d / "scored.jsonl")])
    main(["classify", str(d / "scored.jsonl"), "-o", str(d / "labeled.jsonl")])
    # keyword filtering dropped some posts, so the id sets differ without --restrict
    assert main(["evaluate", str(d / "labeled.jsonl"), str(d / "truth.jsonl")]) == 1


def test_lexicon_validate(tmp_path, capsys):
    assert main(["lexicon", "validate"]) == 0
    assert json.loads(capsys.readouterr().out)["entries"] > 7000
    bad = tmp_path / "bad.txt"
    bad.write_text("good\t9.0\n")
    assert main(["lexicon", "validate", str(bad)]) == 1


def test_run_and_exit_codes(synth, capsys):
    d = synth
    ini = d / "run.ini"
    ini.write_text("[paths]\ninput = posts.jsonl\ntruth = truth.jsonl\noutput_dir = out\n")
    assert main(["run", "--config", str(ini), "-q"]) == 0
    assert (d / "out" / "run_manifest.json").is_file()
    assert main(["run", "--config", str(ini), "--set", "classifier.k=11"]) == 1
    assert "classifier.k" in capsys.readouterr().err
    (d / "posts.jsonl").write_text((d / "posts.jsonl").read_text() + "not json\n")
    assert main(["run", "--config", str(ini), "-q"]) == 2


def test_config_validate_echo(synth, capsys):
    ini = synth / "run.ini"
    ini.write_text("[paths]\ninput = posts.jsonl\n[rules]\nalpha = 12\n")
    assert main(["config", "validate", str(ini)]) == 0
    out = capsys.readouterr().out
    assert "alpha = 12.0" in out and "k = 5" in out
    ini.write_text("[rules]\nalpha = -1\n")
    assert main(["config", "validate", str(ini)]) == 1


def test_remote_without_token_exit_2(synth, monkeypatch):
    d = synth
    monkeypatch.delenv("CHAT_API_TOKEN", raising=False)
    main(["score", str(d / "posts.jsonl"), "-o", str(d / "scored.jsonl")])
    code = main(["classify", str(d / "scored.jsonl"), "-o", str(d / "l.jsonl"), "--mode", "remote", "--endpoint", "http://127.0.0.1:9/v1"])
    assert code == 2


def test_bad_k_and_bad_replay_log_exit_1(synth):
    d = synth
    main(["score", str(d / "posts.jsonl"), "-o", str(d / "scored.jsonl")])
    log = d / "audit.jsonl"
    log.write_text(json.dumps({"id": "syn4-000000", "prompt_version": "fewshot-v1", "response": "Other"}) + "\n")
    remote = ["classify", str(d / "scored.jsonl"), "-o", str(d / "l.jsonl"), "--mode", "remote"]
    assert main(remote + ["-k", "0", "--replay-log", str(log)]) == 1
    assert main(remote + ["--replay-log", str(d / "truth.jsonl")]) == 1
