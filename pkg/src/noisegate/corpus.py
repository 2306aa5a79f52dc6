"""Corpus representation, ingestion, splitting, and noise/control generation.

A corpus is a list of (word-level feature sequence, sentence) pairs. Features
for one sentence are held as a single float64 array of shape
(n_words, feature_dim); the JSON-Lines file format stores them per word, in
band-major order (8 bands, feature_dim/8 values per band), with NaN encoded
as ``null``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

BAND_NAMES = ("theta1", "theta2", "alpha1", "alpha2", "beta1", "beta2", "gamma1", "gamma2")


class Task(Enum):
    SR1 = "SR1"
    NR1 = "NR1"
    NR2 = "NR2"
    TSR1 = "TSR1"
    SYNTHETIC = "SYNTHETIC"


class InputKind(Enum):
    SIGNAL = "signal"
    NOISE = "noise"


class CorpusError(ValueError):
    """Malformed corpus file or corpus-invariant violation."""


@dataclass
class SentencePair:
    """One aligned (feature sequence, sentence) example.

    ``features`` has one row per word; ``text`` is the sentence, whitespace
    tokenizable. Both are non-empty for a valid pair.
    """

    features: np.ndarray
    text: str
    source_task: Task = Task.SYNTHETIC

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim != 2 or self.features.shape[0] == 0:
            raise CorpusError("sentence pair needs a non-empty (n_words, feature_dim) array")
        if not self.text.strip():
            raise CorpusError("sentence pair needs non-empty text")

    @property
    def n_words(self) -> int:
        return self.features.shape[0]

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.features).all())


@dataclass
class Corpus:
    pairs: list[SentencePair]
    feature_dim: int

    def __post_init__(self) -> None:
        if self.feature_dim <= 0:
            raise CorpusError("feature_dim must be positive")
        for i, pair in enumerate(self.pairs):
            if pair.features.shape[1] != self.feature_dim:
                raise CorpusError(
                    f"pair {i} has feature dim {pair.features.shape[1]}, corpus declares {self.feature_dim}"
                )

    def __len__(self) -> int:
        return len(self.pairs)

    def texts(self) -> list[str]:
        return [pair.text for pair in self.pairs]


@dataclass
class SplitDataset:
    train: Corpus
    dev: Corpus
    test: Corpus

    def __post_init__(self) -> None:
        seen: dict[str, str] = {}
        for name, corpus in (("train", self.train), ("dev", self.dev), ("test", self.test)):
            for text in corpus.texts():
                if text in seen and seen[text] != name:
                    raise CorpusError(f"sentence appears in both {seen[text]} and {name}: {text!r}")
                seen[text] = name


def load_corpus(path: str | Path) -> Corpus:
    """Parse a JSON-Lines corpus file.

    feature_dim is taken from the first record; every later record must agree.
    ``null`` feature entries are mapped to NaN (to be dropped by
    :func:`filter_invalid`). Errors name the offending 1-based line.
    """
    path = Path(path)
    pairs: list[SentencePair] = []
    feature_dim: int | None = None
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: malformed JSON: {exc}") from exc
            pairs.append(_parse_record(record, lineno, path))
            dim = pairs[-1].features.shape[1]
            if feature_dim is None:
                feature_dim = dim
            elif dim != feature_dim:
                raise CorpusError(
                    f"{path}:{lineno}: feature dim {dim} does not match corpus dim {feature_dim}"
                )
    if feature_dim is None:
        raise CorpusError(f"{path}: empty corpus file")
    return Corpus(pairs=pairs, feature_dim=feature_dim)


def _parse_record(record: object, lineno: int, path: Path) -> SentencePair:
    if not isinstance(record, dict):
        raise CorpusError(f"{path}:{lineno}: record is not a JSON object")
    try:
        text = record["text"]
        task_name = record["task"]
        words = record["words"]
    except (KeyError, TypeError) as exc:
        raise CorpusError(f"{path}:{lineno}: missing field {exc}") from exc
    if not isinstance(text, str) or not text.strip():
        raise CorpusError(f"{path}:{lineno}: 'text' must be a non-empty string")
    try:
        task = Task(task_name)
    except ValueError as exc:
        raise CorpusError(f"{path}:{lineno}: unknown task {task_name!r}") from exc
    if not isinstance(words, list) or not words:
        raise CorpusError(f"{path}:{lineno}: 'words' must be a non-empty list")
    rows = []
    width: int | None = None
    for w_idx, word in enumerate(words):
        if not isinstance(word, dict) or "features" not in word:
            raise CorpusError(f"{path}:{lineno}: word {w_idx} lacks a 'features' array")
        feats = word["features"]
        if not isinstance(feats, list) or not feats:
            raise CorpusError(f"{path}:{lineno}: word {w_idx} has an empty feature array")
        row = [math.nan if v is None else float(v) for v in feats]
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise CorpusError(
                f"{path}:{lineno}: word {w_idx} has {len(row)} features; earlier words have {width}"
            )
        rows.append(row)
    return SentencePair(features=np.array(rows, dtype=np.float64), text=text, source_task=task)


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write the JSON-Lines corpus format; inverse of :func:`load_corpus`.

    NaN is stored as ``null``. Infinite values have no representation in the
    format and are rejected.
    """
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for i, pair in enumerate(corpus.pairs):
            if np.isinf(pair.features).any():
                raise CorpusError(f"pair {i} contains infinite values; the corpus format stores only finite values and NaN")
            words = [
                {"features": [None if math.isnan(v) else v for v in row]}
                for row in pair.features.tolist()
            ]
            record = {"text": pair.text, "task": pair.source_task.value, "words": words}
            fh.write(json.dumps(record) + "\n")


def filter_invalid(corpus: Corpus) -> Corpus:
    """Drop every pair containing a non-finite feature value, preserving order."""
    kept = [pair for pair in corpus.pairs if pair.is_finite()]
    return Corpus(pairs=kept, feature_dim=corpus.feature_dim)


def split_corpus(
    corpus: Corpus,
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1),
    seed: int = 0,
) -> SplitDataset:
    """Partition over distinct sentence texts into train/dev/test.

    All pairs sharing a text land in the same split. Dev and test get
    floor(ratio * n_texts) distinct texts each; the remainder goes to train.
    A seeded permutation of the distinct texts (first-occurrence order) makes
    the split deterministic.
    """
    if not corpus.pairs:
        raise CorpusError("cannot split an empty corpus")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise CorpusError(f"split ratios must sum to 1, got {ratios}")
    distinct: list[str] = []
    seen: set[str] = set()
    for pair in corpus.pairs:
        if pair.text not in seen:
            seen.add(pair.text)
            distinct.append(pair.text)
    n = len(distinct)
    if n < 3:
        raise CorpusError(f"need at least 3 distinct sentences to split, got {n}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    shuffled = [distinct[i] for i in order]
    n_dev = int(math.floor(ratios[1] * n))
    n_test = int(math.floor(ratios[2] * n))
    n_train = n - n_dev - n_test
    buckets = {
        text: "train" for text in shuffled[:n_train]
    }
    buckets.update({text: "dev" for text in shuffled[n_train : n_train + n_dev]})
    buckets.update({text: "test" for text in shuffled[n_train + n_dev :]})
    parts: dict[str, list[SentencePair]] = {"train": [], "dev": [], "test": []}
    for pair in corpus.pairs:
        parts[buckets[pair.text]].append(pair)
    dim = corpus.feature_dim
    return SplitDataset(
        train=Corpus(parts["train"], dim),
        dev=Corpus(parts["dev"], dim),
        test=Corpus(parts["test"], dim),
    )


def split_corpus_by_task(
    corpus: Corpus,
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1),
    seed: int = 0,
) -> SplitDataset:
    """Split each task's pairs separately, then merge the per-task splits.

    Mirrors per-task sample accounting: every task contributes ~80/10/10 of
    its own distinct sentences. Per-task seeds are derived from ``seed`` by
    task ordinal so adding a task does not reshuffle the others.
    """
    tasks = []
    for pair in corpus.pairs:
        if pair.source_task not in tasks:
            tasks.append(pair.source_task)
    if len(tasks) <= 1:
        return split_corpus(corpus, ratios, seed)
    ordinals = {task: i for i, task in enumerate(Task)}
    merged = {"train": [], "dev": [], "test": []}
    for task in tasks:
        sub = Corpus([p for p in corpus.pairs if p.source_task == task], corpus.feature_dim)
        split = split_corpus(sub, ratios, seed + ordinals[task])
        merged["train"].extend(split.train.pairs)
        merged["dev"].extend(split.dev.pairs)
        merged["test"].extend(split.test.pairs)
    dim = corpus.feature_dim
    return SplitDataset(
        train=Corpus(merged["train"], dim),
        dev=Corpus(merged["dev"], dim),
        test=Corpus(merged["test"], dim),
    )


def merge_tasks(corpora: list[Corpus]) -> Corpus:
    """Concatenate corpora (task labels preserved); feature dims must agree."""
    if not corpora:
        raise CorpusError("cannot merge an empty list of corpora")
    dim = corpora[0].feature_dim
    for i, c in enumerate(corpora[1:], start=1):
        if c.feature_dim != dim:
            raise CorpusError(f"corpus {i} has feature_dim {c.feature_dim}, expected {dim}")
    pairs: list[SentencePair] = []
    for c in corpora:
        pairs.extend(c.pairs)
    return Corpus(pairs=pairs, feature_dim=dim)


def make_noise_like(corpus: Corpus, seed: int) -> Corpus:
    """Shape-matched noise corpus: same texts and word counts, every feature
    value replaced by an independent standard-normal draw."""
    rng = np.random.default_rng(seed)
    pairs = [
        SentencePair(
            features=rng.standard_normal(pair.features.shape),
            text=pair.text,
            source_task=pair.source_task,
        )
        for pair in corpus.pairs
    ]
    return Corpus(pairs=pairs, feature_dim=corpus.feature_dim)


# Deterministic pronounceable word list for the synthetic control grammar.
_ONSETS = ("b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z")
_VOWELS = ("a", "e", "i", "o", "u")


def _control_words(vocab_size: int) -> list[str]:
    words = []
    for i in range(vocab_size):
        a = _ONSETS[i % len(_ONSETS)]
        b = _VOWELS[(i // len(_ONSETS)) % len(_VOWELS)]
        c = _ONSETS[(i * 7 + 3) % len(_ONSETS)]
        d = _VOWELS[(i * 3 + 1) % len(_VOWELS)]
        words.append(f"{a}{b}{c}{d}")
    if len(set(words)) != vocab_size:
        # fall back to indexed suffixes on collision; keeps the list unique
        words = [f"{w}{i}" for i, w in enumerate(words)]
    return words


def gen_synthetic_control(
    kind: str,
    n_sentences: int,
    vocab_size: int,
    feature_dim: int,
    seed: int,
    n_distinct: int | None = None,
) -> Corpus:
    """Generate a control corpus from a fixed word-pair grammar.

    The grammar pairs up the vocabulary (word 2k is always followed by word
    2k+1) and a sentence is 1 to 3 distinct pairs in random order, with short
    sentences the most frequent (p = 0.6 / 0.25 / 0.15). Pair transitions are
    predictable from context while pair choice is not, which is what
    separates teacher-forced from free-running scores: with gold context half
    the words are foreseeable, while a model decoding freely from
    uninformative inputs has no cheap way to guess content. The skew toward
    short sentences gives length-normalized decoding one clearly best
    uninformed rollout (a single pair), so models that ignore their input
    collapse to near-identical degenerate outputs.

    Sentences are drawn from a pool of n_distinct texts (default ~0.4 *
    n_sentences), so texts repeat across the corpus the way ZuCo sentences
    repeat across subjects; each repeat gets an independent feature draw in
    the uninformative case, which is what makes label statistics learnable
    there instead of per-example input memorization.

    kind="uninformative": features are fresh standard-normal draws, carrying
    no information about the text. kind="informative": each word type gets a
    fixed template (unit one-hot at its vocabulary index plus frozen noise of
    std 0.1), so the features deterministically encode the sentence.

    Sentence sampling depends only on (n_sentences, vocab_size, seed,
    n_distinct), so both kinds produce identical texts for the same arguments.
    """
    if kind not in ("informative", "uninformative"):
        raise ValueError(f"unknown control kind {kind!r}")
    if vocab_size < 4:
        raise ValueError("control grammar needs vocab_size >= 4")
    if kind == "informative" and feature_dim < vocab_size:
        raise ValueError("informative control needs feature_dim >= vocab_size")
    if n_distinct is None:
        n_distinct = max(4, round(0.4 * n_sentences))
    if n_sentences > 0 and n_distinct < 1:
        raise ValueError("n_distinct must be >= 1")
    words = _control_words(vocab_size)
    n_pairs = vocab_size // 2
    sent_rng = np.random.default_rng(seed)
    feat_rng = np.random.default_rng(seed + (1 if kind == "informative" else 2))

    templates: np.ndarray | None = None
    if kind == "informative":
        templates = feat_rng.normal(0.0, 0.1, size=(vocab_size, feature_dim))
        templates[np.arange(vocab_size), np.arange(vocab_size)] += 1.0

    pool = _sentence_pool(n_distinct if n_sentences > 0 else 0, n_pairs, sent_rng)

    pairs: list[SentencePair] = []
    if pool and n_sentences > 0:
        # equal copies per text (remainder spread over the first texts), then
        # a seeded shuffle; keeps every word pair equally frequent corpus-wide
        copies = [n_sentences // len(pool)] * len(pool)
        for i in range(n_sentences % len(pool)):
            copies[i] += 1
        occurrences = [idxs for idxs, c in zip(pool, copies) for _ in range(c)]
        order = sent_rng.permutation(len(occurrences))
        for j in order:
            idxs = occurrences[j]
            text = " ".join(words[i] for i in idxs)
            if templates is not None:
                feats = templates[idxs].copy()
            else:
                feats = feat_rng.standard_normal((len(idxs), feature_dim))
            pairs.append(SentencePair(features=feats, text=text, source_task=Task.SYNTHETIC))
    return Corpus(pairs=pairs, feature_dim=feature_dim)


def _sentence_pool(n_distinct: int, n_pairs: int, rng: np.random.Generator) -> list[list[int]]:
    """Distinct sentences with balanced structure: lengths follow the fixed
    60/25/15 mix exactly, and word pairs are dealt from a reshuffled deck so
    every pair appears nearly equally often across the pool. Balance keeps
    the content of an unseen sentence maximally unpredictable (no modal pair
    for a label-memorizing model to bet on)."""
    if n_distinct <= 0:
        return []
    max_pairs = min(3, n_pairs)
    weights = [0.6, 0.25, 0.15][:max_pairs]
    total = sum(weights)
    counts = [int(round(w / total * n_distinct)) for w in weights]
    counts[0] += n_distinct - sum(counts)
    lengths = [l for l, c in zip(range(1, max_pairs + 1), counts) for _ in range(c)]

    deck: list[int] = []
    pool: list[list[int]] = []
    seen: set[tuple[int, ...]] = set()
    for length in lengths:
        for _ in range(200):  # duplicate texts are redrawn
            while len(deck) < n_pairs:
                deck.extend(int(k) for k in rng.permutation(n_pairs))
            chosen: list[int] = []
            for k in deck:
                if k not in chosen:
                    chosen.append(k)
                if len(chosen) == length:
                    break
            idxs = [i for k in chosen for i in (2 * k, 2 * k + 1)]
            if tuple(idxs) not in seen:
                for k in chosen:
                    deck.remove(k)
                seen.add(tuple(idxs))
                pool.append(idxs)
                break
            rng.shuffle(deck)
        # a length bucket can run out of distinct sentences (there are only
        # n_pairs one-pair texts); the pool is then smaller than requested
    return pool
