import json
import math

import numpy as np
import pytest

from noisegate.cli import main
from noisegate.corpus import Corpus, SentencePair, Task, load_corpus, save_corpus


def write_corpus(tmp_path, name, texts, task=Task.SR1, dim=4, poison_index=None):
    pairs = []
    for i, text in enumerate(texts):
        feats = np.full((len(text.split()), dim), float(i + 1))
        if poison_index == i:
            feats[0, 0] = math.nan
        pairs.append(SentencePair(feats, text, task))
    path = tmp_path / name
    save_corpus(Corpus(pairs, dim), path)
    return path


DESK_TOML = """
[data]
control = "uninformative"
seed = 3

[control]
n_sentences = 40
vocab_size = 12

[model]
feature_dim = 16
d_model = 16
n_heads = 2

[train]
batch_size = 4
learning_rate = 0.05
epochs = 2

[decode]
max_len = 10

[harness]
out_dir = "{out_dir}"
"""


def write_config(tmp_path, out_dir):
    path = tmp_path / "desk.toml"
    path.write_text(DESK_TOML.format(out_dir=out_dir))
    return path


# ---------------------------------------------------------------------------
# ingest


def test_ingest_merges_and_reports(tmp_path, capsys):
    a = write_corpus(tmp_path, "sr.jsonl", ["one two", "three four"], Task.SR1)
    b = write_corpus(tmp_path, "nr.jsonl", ["five six"], Task.NR1)
    out = tmp_path / "merged.jsonl"
    code = main(["ingest", str(a), str(b), "-o", str(out)])
    assert code == 0
    printed = capsys.readouterr().out
    assert "SR1: kept 2, dropped 0" in printed
    assert "NR1: kept 1, dropped 0" in printed
    merged = load_corpus(out)
    assert len(merged) == 3


def test_ingest_reports_dropped_nan(tmp_path, capsys):
    a = write_corpus(tmp_path, "sr.jsonl", ["one two", "bad words"], poison_index=1)
    out = tmp_path / "merged.jsonl"
    code = main(["ingest", str(a), "-o", str(out)])
    assert code == 0
    assert "SR1: kept 1, dropped 1" in capsys.readouterr().out
    assert len(load_corpus(out)) == 1


def test_ingest_missing_file(tmp_path, capsys):
    code = main(["ingest", str(tmp_path / "nope.jsonl"), "-o", str(tmp_path / "out.jsonl")])
    assert code == 1
    assert "nope.jsonl" in capsys.readouterr().err


def test_ingest_malformed_file(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"text": "x", "task": "SR1", "words": []}\n')
    code = main(["ingest", str(bad), "-o", str(tmp_path / "out.jsonl")])
    assert code == 1
    assert "error" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# score


def test_score_identical_files(tmp_path, capsys):
    hyp = tmp_path / "hyp.txt"
    ref = tmp_path / "ref.txt"
    hyp.write_text("the cat sat on mats\nanother line here\n")
    ref.write_text("the cat sat on mats\nanother line here\n")
    assert main(["score", str(hyp), str(ref)]) == 0
    out = capsys.readouterr().out.strip().split("\n")
    assert out[0] == "bleu1,bleu2,bleu3,bleu4,rouge1_p,rouge1_r,rouge1_f,wer"
    assert out[1] == "100.00,100.00,100.00,100.00,100.00,100.00,100.00,0.00"


def test_score_rouge_example(tmp_path, capsys):
    hyp = tmp_path / "hyp.txt"
    ref = tmp_path / "ref.txt"
    hyp.write_text("the cat sat\n")
    ref.write_text("the cat\n")
    assert main(["score", str(hyp), str(ref)]) == 0
    row = capsys.readouterr().out.strip().split("\n")[1].split(",")
    assert row[6] == "80.00"  # rouge1_f


def test_score_mismatched_counts(tmp_path, capsys):
    hyp = tmp_path / "hyp.txt"
    ref = tmp_path / "ref.txt"
    hyp.write_text("a\nb\n")
    ref.write_text("a\n")
    assert main(["score", str(hyp), str(ref)]) == 1
    assert "2 hypotheses vs 1 references" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# matrix


def test_matrix_dry_run(tmp_path, capsys):
    config = write_config(tmp_path, str(tmp_path / "runs"))
    code = main(["matrix", "--config", str(config), "--dry-run"])
    assert code == 0
    out = capsys.readouterr().out
    planned = [line for line in out.splitlines() if line.startswith("  ") and "_" in line]
    assert len([l for l in planned if not l.strip().endswith(":")]) >= 8
    assert out.count("teacher_forced") == 4 and out.count("free_running") == 4
    assert "resolved seeds" in out
    assert not (tmp_path / "runs").exists()


def test_matrix_end_to_end_and_reproducible(tmp_path, capsys):
    config = write_config(tmp_path, str(tmp_path / "runs"))
    code = main(["matrix", "--config", str(config), "--run-id", "run1"])
    assert code == 0
    first_md = capsys.readouterr().out
    assert first_md.count("| signal | signal |") == 2
    code = main(["matrix", "--config", str(config), "--run-id", "run2"])
    assert code == 0
    capsys.readouterr()
    csv1 = (tmp_path / "runs" / "run1" / "report.csv").read_bytes()
    csv2 = (tmp_path / "runs" / "run2" / "report.csv").read_bytes()
    assert csv1 == csv2


def test_matrix_config_error(tmp_path, capsys):
    missing = tmp_path / "nope.toml"
    assert main(["matrix", "--config", str(missing)]) == 1
    assert "not found" in capsys.readouterr().err


def test_matrix_unknown_key_rejected(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("[train]\nbatch_siz = 4\n")
    assert main(["matrix", "--config", str(bad), "--dry-run"]) == 1
    assert "batch_siz" in capsys.readouterr().err


def test_runs_dir_env_override(tmp_path, capsys, monkeypatch):
    config = write_config(tmp_path, str(tmp_path / "ignored"))
    env_dir = tmp_path / "env_runs"
    monkeypatch.setenv("NOISEGATE_RUNS_DIR", str(env_dir))
    code = main(["matrix", "--config", str(config), "--run-id", "envrun"])
    assert code == 0
    capsys.readouterr()
    assert (env_dir / "envrun" / "report.csv").exists()
    assert not (tmp_path / "ignored").exists()


# ---------------------------------------------------------------------------
# report


def test_report_rerenders_byte_identical(tmp_path, capsys):
    config = write_config(tmp_path, str(tmp_path / "runs"))
    assert main(["matrix", "--config", str(config), "--run-id", "rr"]) == 0
    capsys.readouterr()
    run_dir = tmp_path / "runs" / "rr"
    before_csv = (run_dir / "report.csv").read_bytes()
    before_md = (run_dir / "report.md").read_bytes()
    assert main(["report", str(run_dir), "--format", "csv"]) == 0
    printed = capsys.readouterr().out
    assert printed.encode() == before_csv
    assert (run_dir / "report.csv").read_bytes() == before_csv
    assert (run_dir / "report.md").read_bytes() == before_md


def test_report_missing_dir(tmp_path, capsys):
    assert main(["report", str(tmp_path / "absent")]) == 1
    assert "not found" in capsys.readouterr().err
