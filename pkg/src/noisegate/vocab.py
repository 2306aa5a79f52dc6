"""Word-level vocabulary with PAD/BOS/EOS/UNK specials.

Tokenization is lowercased whitespace splitting; punctuation stays attached
to its word. Scoring in the metrics module uses the same convention, so
casing never affects results.
"""

from __future__ import annotations

import hashlib
import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from .corpus import Corpus

PAD, BOS, EOS, UNK = 0, 1, 2, 3
SPECIAL_TOKENS = ("<pad>", "<bos>", "<eos>", "<unk>")


@dataclass
class Vocabulary:
    token_to_id: dict[str, int]
    id_to_token: list[str]
    min_freq: int = 1

    def __len__(self) -> int:
        return len(self.id_to_token)

    def sha256(self) -> str:
        """Content hash used to tie model checkpoints to their vocabulary."""
        payload = json.dumps({"tokens": self.id_to_token, "min_freq": self.min_freq})
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def tokenize(text: str) -> list[str]:
    return text.lower().split()


def build_vocab(corpus: Corpus, min_freq: int = 1) -> Vocabulary:
    """Collect whitespace tokens with frequency >= min_freq.

    Ids 0..3 are the specials; real tokens follow in descending-frequency
    order with lexicographic tie-break, so two builds over the same corpus
    assign identical ids.
    """
    if not corpus.pairs:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    if min_freq < 1:
        raise ValueError("min_freq must be >= 1")
    counts: Counter[str] = Counter()
    for pair in corpus.pairs:
        counts.update(tokenize(pair.text))
    kept = sorted(
        (tok for tok, c in counts.items() if c >= min_freq),
        key=lambda tok: (-counts[tok], tok),
    )
    id_to_token = list(SPECIAL_TOKENS) + kept
    token_to_id = {tok: i for i, tok in enumerate(id_to_token)}
    return Vocabulary(token_to_id=token_to_id, id_to_token=id_to_token, min_freq=min_freq)


def encode(vocab: Vocabulary, text: str) -> list[int]:
    """BOS + per-word ids (UNK for out-of-vocabulary words) + EOS."""
    ids = [vocab.token_to_id.get(tok, UNK) for tok in tokenize(text)]
    return [BOS] + ids + [EOS]


def decode(vocab: Vocabulary, ids: list[int]) -> str:
    """Join word tokens with single spaces; PAD/BOS/EOS are stripped and UNK
    renders as "<unk>"."""
    words = []
    for i in ids:
        if i < 0 or i >= len(vocab.id_to_token):
            raise ValueError(f"token id {i} out of range for vocabulary of size {len(vocab)}")
        if i in (PAD, BOS, EOS):
            continue
        words.append(vocab.id_to_token[i])
    return " ".join(words)


def save_vocab(vocab: Vocabulary, path: str | Path) -> None:
    payload = {"min_freq": vocab.min_freq, "tokens": vocab.id_to_token}
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def load_vocab(path: str | Path) -> Vocabulary:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    tokens = payload["tokens"]
    if tokens[:4] != list(SPECIAL_TOKENS):
        raise ValueError(f"{path}: vocabulary file must start with the four special tokens")
    return Vocabulary(
        token_to_id={tok: i for i, tok in enumerate(tokens)},
        id_to_token=list(tokens),
        min_freq=int(payload.get("min_freq", 1)),
    )
