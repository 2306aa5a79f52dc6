"""Conversion from raw ZuCo sentences to the JSON-Lines corpus format.

One output record per (input file, sentence): subjects are separate files in
ZuCo, so converting a whole task directory naturally yields one record per
subject-sentence pair. NaN feature values are written as ``null``; infinite
values have no representation and fail the conversion. The manifest log
records every input sentence exactly once, kept or dropped-with-reason.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .reader import RawSentence, ZucoFormatError, read_sentences

VALID_TASKS = ("SR1", "NR1", "NR2", "TSR1")


@dataclass
class ConversionManifest:
    input_files: list[str]
    task: str
    output_path: str
    measure: str = "GD"
    subject: str | None = None
    log: list[dict] = field(default_factory=list)

    def record(self, source: str, index: int, status: str, reason: str = "") -> None:
        entry = {"file": source, "sentence": index, "status": status}
        if reason:
            entry["reason"] = reason
        self.log.append(entry)

    @property
    def kept(self) -> int:
        return sum(1 for e in self.log if e["status"] == "kept")

    @property
    def dropped(self) -> int:
        return sum(1 for e in self.log if e["status"] == "dropped")

    def to_json(self) -> dict:
        return {
            "inputs": self.input_files,
            "task": self.task,
            "measure": self.measure,
            "subject": self.subject,
            "output": self.output_path,
            "kept": self.kept,
            "dropped": self.dropped,
            "sentences": self.log,
        }


def sentence_to_record(sentence: RawSentence, task: str) -> dict:
    assert sentence.features is not None
    words = []
    for row in sentence.features:
        values = [None if math.isnan(v) else float(v) for v in row]
        if any(v is not None and math.isinf(v) for v in values):
            raise ZucoFormatError(f"sentence {sentence.index}: infinite feature value")
        words.append({"features": values})
    return {"text": sentence.text, "task": task, "words": words}


def convert(
    inputs: list[str | Path],
    task: str,
    output_path: str | Path,
    log_path: str | Path | None = None,
    measure: str = "GD",
    subject: str | None = None,
) -> ConversionManifest:
    """Convert MATLAB v7.3 files into one JSONL corpus plus a manifest log.

    Sentences with zero words or empty text are dropped and logged; words
    without fixations stay as all-null feature rows for the downstream
    filter. The manifest is written next to the output unless log_path says
    otherwise.
    """
    if task not in VALID_TASKS:
        raise ValueError(f"task must be one of {VALID_TASKS}, got {task!r}")
    output_path = Path(output_path)
    manifest = ConversionManifest(
        input_files=[str(p) for p in inputs],
        task=task,
        output_path=str(output_path),
        measure=measure,
        subject=subject,
    )
    with output_path.open("w", encoding="utf-8") as out:
        for source in inputs:
            source = str(source)
            sentences = read_sentences(source, measure=measure)
            for sentence in sentences:
                if sentence.n_words == 0:
                    manifest.record(source, sentence.index, "dropped", "no words")
                    continue
                if not sentence.text.strip():
                    manifest.record(source, sentence.index, "dropped", "empty text")
                    continue
                if sentence.features is None:
                    manifest.record(source, sentence.index, "dropped", "no band data anywhere in file")
                    continue
                out.write(json.dumps(sentence_to_record(sentence, task)) + "\n")
                manifest.record(source, sentence.index, "kept")
    log_file = Path(log_path) if log_path else output_path.with_suffix(output_path.suffix + ".manifest.json")
    log_file.write_text(json.dumps(manifest.to_json(), indent=2) + "\n", encoding="utf-8")
    return manifest
