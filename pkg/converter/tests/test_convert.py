import json
import math
import shutil
import subprocess
import sys

import numpy as np
import pytest

from zuco_convert.cli import main
from zuco_convert.convert import convert
from zuco_convert.reader import ZucoFormatError, read_sentences

from conftest import write_zuco_fixture


def test_read_sentences_shapes(fixture_file):
    sentences = read_sentences(str(fixture_file))
    assert len(sentences) == 3
    first = sentences[0]
    assert first.text == "The movie was great."
    assert first.features.shape == (4, 24)  # 8 bands x 3 electrodes
    assert np.isfinite(first.features).all()
    # band-major order: word 0 features start with band t1 electrodes 0..2
    np.testing.assert_allclose(first.features[1, :3], [10.0, 10.1, 10.2])
    np.testing.assert_allclose(first.features[1, 3:6], [11.0, 11.1, 11.2])


def test_unfixated_word_is_all_nan(fixture_file):
    sentences = read_sentences(str(fixture_file))
    second = sentences[1]
    assert np.isnan(second.features[1]).all()
    assert np.isfinite(second.features[0]).all()
    assert np.isfinite(second.features[2]).all()


def test_zero_word_sentence_has_no_features(fixture_file):
    sentences = read_sentences(str(fixture_file))
    assert sentences[2].n_words == 0


def test_convert_writes_records_and_manifest(fixture_file, tmp_path):
    out = tmp_path / "corpus.jsonl"
    log = tmp_path / "manifest.json"
    manifest = convert([fixture_file], task="SR1", output_path=out, log_path=log)
    records = [json.loads(line) for line in out.read_text().splitlines()]
    assert len(records) == 2  # zero-word sentence dropped
    assert manifest.kept == 2
    assert manifest.dropped == 1
    assert all(r["task"] == "SR1" for r in records)
    # every value is a number or null; the unfixated word is all null
    second = records[1]
    null_words = [w for w in second["words"] if all(v is None for v in w["features"])]
    assert len(null_words) == 1
    flat = [v for w in records[0]["words"] for v in w["features"]]
    assert all(isinstance(v, float) for v in flat)

    log_data = json.loads(log.read_text())
    assert log_data["kept"] == 2 and log_data["dropped"] == 1
    assert len(log_data["sentences"]) == 3  # every input sentence appears once
    statuses = {e["sentence"]: e["status"] for e in log_data["sentences"]}
    assert statuses == {0: "kept", 1: "kept", 2: "dropped"}


def test_record_count_equals_manifest_kept(fixture_file, tmp_path):
    out = tmp_path / "corpus.jsonl"
    manifest = convert([fixture_file], task="SR1", output_path=out)
    lines = [l for l in out.read_text().splitlines() if l.strip()]
    assert len(lines) == manifest.kept


def test_default_log_path(fixture_file, tmp_path):
    out = tmp_path / "corpus.jsonl"
    convert([fixture_file], task="SR1", output_path=out)
    assert (tmp_path / "corpus.jsonl.manifest.json").exists()


def test_rejects_unknown_task(fixture_file, tmp_path):
    with pytest.raises(ValueError):
        convert([fixture_file], task="XX", output_path=tmp_path / "x.jsonl")


def test_unreadable_file_named(tmp_path):
    bad = tmp_path / "not_hdf5.mat"
    bad.write_bytes(b"plainly not hdf5")
    with pytest.raises(Exception) as err:
        read_sentences(str(bad))
    assert "not_hdf5" in str(err.value) or isinstance(err.value, OSError)


def test_missing_sentence_data_group(tmp_path):
    import h5py

    path = tmp_path / "empty.mat"
    with h5py.File(path, "w") as fh:
        fh.create_group("somethingElse")
    with pytest.raises(ZucoFormatError, match="sentenceData"):
        read_sentences(str(path))


def test_cli_end_to_end(fixture_file, tmp_path, capsys):
    out = tmp_path / "corpus.jsonl"
    code = main(
        ["--task", "SR1", "--in", str(fixture_file), "--out", str(out), "--log", str(tmp_path / "m.json")]
    )
    assert code == 0
    assert "kept 2, dropped 1" in capsys.readouterr().out
    assert out.exists()


def test_cli_missing_input(tmp_path, capsys):
    code = main(["--task", "SR1", "--in", str(tmp_path / "nope.mat"), "--out", str(tmp_path / "o.jsonl")])
    assert code == 1
    assert "nope.mat" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# interface with the primary harness: converted output must ingest cleanly


def _noisegate_available():
    return shutil.which("noisegate") is not None


@pytest.mark.skipif(not _noisegate_available(), reason="noisegate CLI not installed")
def test_output_ingests_via_primary_cli(fixture_file, tmp_path):
    out = tmp_path / "corpus.jsonl"
    convert([fixture_file], task="SR1", output_path=out)
    merged = tmp_path / "merged.jsonl"
    proc = subprocess.run(
        ["noisegate", "ingest", str(out), "-o", str(merged)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    # the unfixated-word sentence carries NaN and must be dropped by ingest
    assert "SR1: kept 1, dropped 1" in proc.stdout
    assert merged.exists()


def test_multi_subject_inputs_concatenate(tmp_path):
    sentences = [
        {"text": "Shared sentence one.", "words": [{"word": "Shared"}, {"word": "sentence"}, {"word": "one."}]},
    ]
    subj1 = write_zuco_fixture(tmp_path / "s1.mat", sentences)
    subj2 = write_zuco_fixture(tmp_path / "s2.mat", sentences)
    out = tmp_path / "corpus.jsonl"
    manifest = convert([subj1, subj2], task="TSR1", output_path=out)
    lines = out.read_text().splitlines()
    assert len(lines) == 2  # one record per subject-sentence
    assert manifest.kept == 2
