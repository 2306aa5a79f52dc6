"""Reader for ZuCo MATLAB v7.3 (HDF5) sentence data.

Field mapping (ZuCo 1.0 release layout; see README for other releases):

    /sentenceData/content   (N, 1) object refs -> uint16 char arrays (text)
    /sentenceData/word      (N, 1) object refs -> per-sentence word group
    word group:
        content             (W, 1) object refs -> uint16 char arrays
        <MEASURE>_<band>    (W, 1) object refs -> float arrays, one value per
                            electrode; eight bands t1 t2 a1 a2 b1 b2 g1 g2

MEASURE is the eye-tracking window the EEG was averaged over (GD by
default; FFD and TRT exist in the datasets as well). A word without
fixations has empty band entries (MATLAB empty, stored as a 2x1 uint64
placeholder with the MATLAB_empty attribute); such words yield an all-NaN
feature vector so the downstream NaN filter drops the sentence.
"""

from __future__ import annotations

from dataclasses import dataclass

import h5py
import numpy as np

BANDS = ("t1", "t2", "a1", "a2", "b1", "b2", "g1", "g2")


class ZucoFormatError(ValueError):
    pass


@dataclass
class RawSentence:
    index: int
    text: str
    # (n_words, 8 * electrodes) with NaN rows for unfixated words; None when
    # the sentence has no words at all
    features: np.ndarray | None
    n_words: int


def _deref(fh: h5py.File, ref) -> h5py.Dataset | h5py.Group | None:
    if not ref:
        return None
    return fh[ref]


def _matlab_string(node) -> str:
    if node is None:
        return ""
    data = np.asarray(node[()])
    if data.size == 0:
        return ""
    return "".join(chr(int(c)) for c in data.ravel())


def _is_matlab_empty(node) -> bool:
    if node is None:
        return True
    if node.attrs.get("MATLAB_empty", 0):
        return True
    data = np.asarray(node[()])
    return data.size == 0


def _band_vector(fh: h5py.File, word_group: h5py.Group, field_name: str, index: int) -> np.ndarray | None:
    """One word's values for one band; None when missing or empty."""
    if field_name not in word_group:
        return None
    column = word_group[field_name]
    try:
        ref = column[index, 0]
    except (IndexError, ValueError):
        return None
    if isinstance(ref, h5py.Reference):
        node = _deref(fh, ref)
        if node is None or _is_matlab_empty(node):
            return None
        values = np.asarray(node[()], dtype=np.float64).ravel()
    else:
        values = np.asarray(ref, dtype=np.float64).ravel()
    if values.size == 0:
        return None
    return values


def read_sentences(path: str, measure: str = "GD") -> list[RawSentence]:
    """Extract every sentence with word-level band features, band-major.

    The per-band width is inferred from the first complete word in the file;
    words whose band data is missing, empty, or inconsistently sized become
    all-NaN rows.
    """
    sentences: list[RawSentence] = []
    with h5py.File(path, "r") as fh:
        if "sentenceData" not in fh:
            raise ZucoFormatError(f"{path}: no sentenceData group (not a ZuCo sentence file?)")
        root = fh["sentenceData"]
        if "content" not in root or "word" not in root:
            raise ZucoFormatError(f"{path}: sentenceData lacks content/word fields")
        content_refs = root["content"]
        word_refs = root["word"]
        n = content_refs.shape[0]
        band_width: int | None = None
        for i in range(n):
            text = _matlab_string(_deref(fh, content_refs[i, 0]))
            word_node = _deref(fh, word_refs[i, 0])
            if word_node is None or not isinstance(word_node, h5py.Group) or "content" not in word_node:
                sentences.append(RawSentence(index=i, text=text, features=None, n_words=0))
                continue
            n_words = word_node["content"].shape[0]
            if n_words == 0:
                sentences.append(RawSentence(index=i, text=text, features=None, n_words=0))
                continue
            rows = []
            for j in range(n_words):
                bands = []
                for band in BANDS:
                    vec = _band_vector(fh, word_node, f"{measure}_{band}", j)
                    if vec is None:
                        bands = None
                        break
                    if band_width is None:
                        band_width = vec.size
                    if vec.size != band_width:
                        bands = None
                        break
                    bands.append(vec)
                if bands is None:
                    rows.append(None)  # filled with NaN once the width is known
                else:
                    rows.append(np.concatenate(bands))
            if band_width is None:
                # no word in this sentence had usable data; emit NaN rows of
                # unknown width only if a later sentence fixes the width
                sentences.append(RawSentence(index=i, text=text, features=None, n_words=n_words))
                continue
            width = 8 * band_width
            features = np.full((n_words, width), np.nan)
            for j, row in enumerate(rows):
                if row is not None:
                    features[j] = row
            sentences.append(RawSentence(index=i, text=text, features=features, n_words=n_words))

    # second pass: sentences that had words but no usable band data anywhere
    # still need NaN features of the common width
    if band_width := _common_width(sentences):
        for s in sentences:
            if s.features is None and s.n_words > 0:
                s.features = np.full((s.n_words, band_width), np.nan)
    return sentences


def _common_width(sentences: list[RawSentence]) -> int | None:
    for s in sentences:
        if s.features is not None:
            return s.features.shape[1]
    return None
