"""Offline converter from ZuCo MATLAB v7.3 sentence data to the noisegate
JSON-Lines corpus format."""

from .convert import ConversionManifest, convert
from .reader import BANDS, RawSentence, ZucoFormatError, read_sentences

__version__ = "0.1.0"
