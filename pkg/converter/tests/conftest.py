import h5py
import numpy as np
import pytest


def matlab_string_dataset(refs_group, name, text):
    codes = np.array([[ord(c)] for c in text], dtype=np.uint16)
    if codes.size == 0:
        codes = np.zeros((0, 1), dtype=np.uint16)
    return refs_group.create_dataset(name, data=codes)


def matlab_empty_dataset(refs_group, name):
    ds = refs_group.create_dataset(name, data=np.zeros((2,), dtype=np.uint64))
    ds.attrs["MATLAB_empty"] = np.uint8(1)
    return ds


BANDS = ("t1", "t2", "a1", "a2", "b1", "b2", "g1", "g2")


def write_zuco_fixture(path, sentences, band_width=3, measure="GD"):
    """Write a ZuCo-1.0-shaped MATLAB v7.3 file.

    sentences: list of dicts with keys
        text: sentence string
        words: list of word dicts {"word": str, "fixated": bool} (or None for
               a sentence whose word field is an empty struct array)
    Feature values are deterministic: sentence*100 + word*10 + band_index +
    electrode/10, so tests can recognize them after conversion.
    """
    with h5py.File(path, "w") as fh:
        refs = fh.create_group("#refs#")
        root = fh.create_group("sentenceData")
        n = len(sentences)
        content_refs = np.zeros((n, 1), dtype=h5py.ref_dtype)
        word_refs = np.zeros((n, 1), dtype=h5py.ref_dtype)
        counter = [0]

        def fresh(name):
            counter[0] += 1
            return f"{name}{counter[0]}"

        for i, sent in enumerate(sentences):
            content_refs[i, 0] = matlab_string_dataset(refs, fresh("c"), sent["text"]).ref
            words = sent["words"]
            group = refs.create_group(fresh("w"))
            if words is None:
                words = []
            w = len(words)
            wc = np.zeros((max(w, 0), 1), dtype=h5py.ref_dtype)
            band_cols = {b: np.zeros((max(w, 0), 1), dtype=h5py.ref_dtype) for b in BANDS}
            for j, word in enumerate(words):
                wc[j, 0] = matlab_string_dataset(refs, fresh("t"), word["word"]).ref
                for k, band in enumerate(BANDS):
                    if word.get("fixated", True):
                        values = np.array(
                            [[i * 100 + j * 10 + k + e / 10] for e in range(band_width)],
                            dtype=np.float64,
                        )
                        ds = refs.create_dataset(fresh("f"), data=values)
                    else:
                        ds = matlab_empty_dataset(refs, fresh("e"))
                    band_cols[band][j, 0] = ds.ref
            group.create_dataset("content", data=wc)
            for band in BANDS:
                group.create_dataset(f"{measure}_{band}", data=band_cols[band])
            word_refs[i, 0] = group.ref
        root.create_dataset("content", data=content_refs)
        root.create_dataset("word", data=word_refs)
    return path


@pytest.fixture
def fixture_file(tmp_path):
    path = tmp_path / "zuco_sr_subj01.mat"
    sentences = [
        {
            "text": "The movie was great.",
            "words": [
                {"word": "The"},
                {"word": "movie"},
                {"word": "was"},
                {"word": "great."},
            ],
        },
        {
            "text": "He skipped one word.",
            "words": [
                {"word": "He"},
                {"word": "skipped", "fixated": False},
                {"word": "one"},
                {"word": "word."},
            ],
        },
        {"text": "Ghost sentence.", "words": None},
    ]
    return write_zuco_fixture(path, sentences)
