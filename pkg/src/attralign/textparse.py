"""Language stream: tokenize, chunk attribute phrases, embed, and assign categories.

Noun phrases come from a word-class lexicon and the chunk rule
``(adj)* (noun)+`` instead of a statistical POS tagger. Each phrase is embedded
as the mean of its word vectors and assigned to the attribute category whose
dictionary anchor has the highest cosine similarity.
"""
from __future__ import annotations

import hashlib
import re
import string
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .core import CATEGORIES, AttributeCategory

DEFAULT_THETA = 0.3

_PUNCT = str.maketrans("", "", string.punctuation)


class ResourceFormatError(ValueError):
    """A resource file is malformed; the message carries the line number."""


class EmptyPhrase(ValueError):
    pass


def tokenize(text: str) -> list[str]:
    return text.lower().translate(_PUNCT).split()


# ---------------------------------------------------------------- word vectors


class WordVectorStore:
    """Read-only token -> vector map with a deterministic hashed OOV fallback."""

    def __init__(self, vectors: Mapping[str, np.ndarray], dim: int):
        self.dim = dim
        self._vectors = {}
        for tok, v in vectors.items():
            v = np.array(v, dtype=np.float64)
            if v.shape != (dim,):
                raise ValueError(f"vector for {tok!r} has shape {v.shape}, expected ({dim},)")
            v.setflags(write=False)
            self._vectors[tok.lower()] = v

    @classmethod
    def load(cls, path) -> "WordVectorStore":
        vectors = {}
        with open(path, encoding="utf-8") as f:
            header = f.readline().split()
            if len(header) != 2 or header[0] != "d_w":
                raise ResourceFormatError(f"{path}:1: expected header 'd_w <integer>'")
            try:
                dim = int(header[1])
            except ValueError:
                raise ResourceFormatError(f"{path}:1: bad dimension {header[1]!r}") from None
            if dim <= 0:
                raise ResourceFormatError(f"{path}:1: dimension must be positive")
            for lineno, line in enumerate(f, start=2):
                parts = line.split()
                if not parts:
                    continue
                if len(parts) != dim + 1:
                    raise ResourceFormatError(
                        f"{path}:{lineno}: expected token and {dim} values, got {len(parts) - 1}")
                try:
                    vectors[parts[0]] = np.array([float(x) for x in parts[1:]])
                except ValueError:
                    raise ResourceFormatError(f"{path}:{lineno}: non-numeric value") from None
        return cls(vectors, dim)

    def __contains__(self, token: str) -> bool:
        return token.lower() in self._vectors

    def __len__(self) -> int:
        return len(self._vectors)

    def __getitem__(self, token: str) -> np.ndarray:
        token = token.lower()
        v = self._vectors.get(token)
        return v if v is not None else self._fallback(token)

    def _fallback(self, token: str) -> np.ndarray:
        return _hashed_vector(token, self.dim)


@lru_cache(maxsize=4096)
def _hashed_vector(token: str, dim: int) -> np.ndarray:
    seed = int.from_bytes(hashlib.sha256(token.encode("utf-8")).digest()[:8], "little")
    v = np.random.default_rng(seed).standard_normal(dim)
    v /= np.linalg.norm(v)
    v.setflags(write=False)
    return v


def embed_phrase(phrase: Sequence[str], store: WordVectorStore) -> np.ndarray:
    if len(phrase) == 0:
        raise EmptyPhrase("cannot embed an empty phrase")
    return np.mean([store[t] for t in phrase], axis=0)


# ---------------------------------------------------------------- dictionary


@dataclass(frozen=True)
class AttributeDictionary:
    words: Mapping[AttributeCategory, tuple[str, ...]]
    anchors: np.ndarray  # (N_ATT, d_w), rows in category order

    @classmethod
    def build(cls, words: Mapping[AttributeCategory, Sequence[str]], store: WordVectorStore):
        missing = [c.key for c in CATEGORIES if not words.get(c)]
        if missing:
            raise ValueError(f"empty word list for categories: {missing}")
        frozen = {c: tuple(w.lower() for w in words[c]) for c in CATEGORIES}
        anchors = np.stack([embed_phrase(frozen[c], store) for c in CATEGORIES])
        anchors.setflags(write=False)
        return cls(frozen, anchors)

    @classmethod
    def load(cls, path, store: WordVectorStore) -> "AttributeDictionary":
        words: dict[AttributeCategory, list[str]] = {}
        current = None
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if line.startswith("[") and line.endswith("]"):
                    try:
                        current = AttributeCategory.from_key(line[1:-1])
                    except ValueError:
                        raise ResourceFormatError(f"{path}:{lineno}: unknown section {line}") from None
                    words.setdefault(current, [])
                elif current is None:
                    raise ResourceFormatError(f"{path}:{lineno}: word outside of a section")
                elif len(line.split()) != 1:
                    raise ResourceFormatError(f"{path}:{lineno}: expected one word per line")
                else:
                    words[current].append(line)
        try:
            return cls.build(words, store)
        except ValueError as e:
            raise ResourceFormatError(f"{path}: {e}") from None


# ---------------------------------------------------------------- lexicon

WORD_CLASSES = ("adj", "noun", "verb", "stop")
_TAG = {"adj": "a", "noun": "n", "verb": "v", "stop": "s"}
_CHUNK = re.compile(r"a*n+")


class Lexicon(dict):
    """token -> word class; unknown tokens are noun-like."""

    def word_class(self, token: str) -> str:
        return self.get(token.lower(), "noun")

    @classmethod
    def load(cls, path) -> "Lexicon":
        lex = cls()
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                parts = line.split()
                if not parts or parts[0].startswith("#"):
                    continue
                if len(parts) != 2 or parts[1] not in WORD_CLASSES:
                    raise ResourceFormatError(f"{path}:{lineno}: expected '<token> <adj|noun|verb|stop>'")
                lex[parts[0].lower()] = parts[1]
        return lex


def chunk_phrases(tokens: Sequence[str], lexicon: Mapping[str, str]) -> list[list[str]]:
    """Maximal ``adj* noun+`` runs; verbs and stopwords break runs."""
    classes = lexicon.word_class if isinstance(lexicon, Lexicon) else (
        lambda t: lexicon.get(t.lower(), "noun"))
    tags = "".join(_TAG[classes(t)] for t in tokens)
    return [list(tokens[m.start():m.end()]) for m in _CHUNK.finditer(tags)]


# ---------------------------------------------------------------- assignment


@dataclass(frozen=True)
class ParsedPhrase:
    tokens: tuple[str, ...]
    category: Optional[AttributeCategory]
    score: float


def assign_category(phrase_vec, dictionary: AttributeDictionary, theta: float = DEFAULT_THETA):
    """Best (category, cosine) over the dictionary anchors, or None below ``theta``.

    ``np.argmax`` returns the first maximum, which is the fixed category order.
    """
    v = np.asarray(phrase_vec, dtype=np.float64)
    nv = np.linalg.norm(v)
    if nv == 0.0:
        return None
    anchors = dictionary.anchors
    scores = anchors @ v / (np.linalg.norm(anchors, axis=1) * nv)
    best = int(np.argmax(scores))
    score = float(scores[best])
    if score < theta:
        return None
    return CATEGORIES[best], score


@dataclass(frozen=True)
class ParsedDescription:
    tokens: tuple[str, ...]
    phrases: tuple[ParsedPhrase, ...]
    attrs: Mapping[AttributeCategory, tuple[str, ...]] = field(default_factory=dict)


@dataclass(frozen=True)
class LanguageResources:
    store: WordVectorStore
    dictionary: AttributeDictionary
    lexicon: Lexicon

    @classmethod
    def load(cls, wordvecs=None, dictionary=None, lexicon=None) -> "LanguageResources":
        wordvecs = wordvecs or _data_path("wordvecs.txt")
        dictionary = dictionary or _data_path("dictionary.txt")
        lexicon = lexicon or _data_path("lexicon.txt")
        store = WordVectorStore.load(wordvecs)
        return cls(store, AttributeDictionary.load(dictionary, store), Lexicon.load(lexicon))


def _data_path(name: str) -> Path:
    return Path(str(resources.files("attralign") / "data" / name))


@lru_cache(maxsize=1)
def default_resources() -> LanguageResources:
    return LanguageResources.load()


def parse_description(text: str, res: Optional[LanguageResources] = None,
                      theta: float = DEFAULT_THETA) -> ParsedDescription:
    res = res or default_resources()
    tokens = tokenize(text)
    phrases = []
    attrs: dict[AttributeCategory, list[str]] = {}
    for chunk in chunk_phrases(tokens, res.lexicon):
        hit = assign_category(embed_phrase(chunk, res.store), res.dictionary, theta)
        if hit is None:
            # keep the best score for diagnostics even when unassigned
            best = assign_category(embed_phrase(chunk, res.store), res.dictionary, -np.inf)
            phrases.append(ParsedPhrase(tuple(chunk), None, best[1] if best else 0.0))
            continue
        cat, score = hit
        phrases.append(ParsedPhrase(tuple(chunk), cat, score))
        attrs.setdefault(cat, []).extend(chunk)
    return ParsedDescription(
        tuple(tokens), tuple(phrases), {c: tuple(attrs[c]) for c in sorted(attrs)})
