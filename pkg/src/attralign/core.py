"""Shared domain types and elementary vector operations."""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

DEFAULT_DIM = 256


class AttributeCategory(enum.IntEnum):
    """The five aligned attribute slots. The global slot is not one of them."""

    HEAD = 0
    UPPER_BODY = 1
    LOWER_BODY = 2
    SHOES = 3
    BAGS = 4

    @property
    def key(self) -> str:
        return _KEYS[self]

    @classmethod
    def from_key(cls, key: str) -> "AttributeCategory":
        try:
            return _BY_KEY[key.lower()]
        except KeyError:
            raise ValueError(f"unknown attribute category {key!r}") from None


_KEYS = {
    AttributeCategory.HEAD: "head",
    AttributeCategory.UPPER_BODY: "upper",
    AttributeCategory.LOWER_BODY: "lower",
    AttributeCategory.SHOES: "shoes",
    AttributeCategory.BAGS: "bags",
}
_BY_KEY = {v: k for k, v in _KEYS.items()}
_BY_KEY.update({c.name.lower(): c for c in AttributeCategory})

CATEGORIES: tuple[AttributeCategory, ...] = tuple(AttributeCategory)
N_ATT = len(CATEGORIES)


class Modality(str, enum.Enum):
    VISUAL = "visual"
    TEXTUAL = "textual"


class ZeroNormVector(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


class EmptyPool(ValueError):
    pass


def as_vector(values, normalized: bool = False) -> np.ndarray:
    """Validate and freeze an embedding vector (1-d, finite, float64)."""
    v = np.array(values, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise DimensionMismatch(f"expected a non-empty 1-d vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("embedding contains NaN or Inf")
    if normalized and abs(np.linalg.norm(v) - 1.0) > 1e-6:
        raise ValueError("vector flagged normalized does not have unit norm")
    v.setflags(write=False)
    return v


@dataclass(frozen=True)
class AlignmentParams:
    """Parameters of the bounded logistic alignment loss.

    ``beta`` is derived as ``alpha - m`` (rounded to 12 decimals so that
    0.6 - 0.2 gives 0.4) when omitted; an explicit value must agree with
    ``alpha - m`` to 1e-12.
    """

    alpha: float = 0.6
    m: float = 0.2
    tau_p: float = 10.0
    tau_n: float = 40.0
    beta: Optional[float] = None

    def __post_init__(self):
        expected = round(self.alpha - self.m, 12)
        if self.beta is None:
            object.__setattr__(self, "beta", expected)
        elif abs(self.beta - (self.alpha - self.m)) > 1e-12:
            raise ValueError(f"beta must equal alpha - m ({expected!r}), got {self.beta!r}")
        if not (0.0 < self.m < self.alpha <= 1.0):
            raise ValueError("require 0 < m < alpha <= 1")
        if not (self.tau_p > 0 and self.tau_n > 0):
            raise ValueError("temperatures must be positive")


@dataclass(frozen=True)
class EmbeddingRecord:
    """Global plus per-attribute embeddings for one visual or textual item.

    ``attrs`` holds only present categories, so presence is ``c in attrs``.
    """

    person_id: int
    modality: Modality
    global_: np.ndarray
    attrs: Mapping[AttributeCategory, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "modality", Modality(self.modality))
        g = as_vector(self.global_)
        object.__setattr__(self, "global_", g)
        frozen = {}
        for c, v in self.attrs.items():
            v = as_vector(v)
            if v.shape != g.shape:
                raise DimensionMismatch("all embeddings in a record must share dimension")
            frozen[AttributeCategory(c)] = v
        object.__setattr__(self, "attrs", dict(sorted(frozen.items())))

    @property
    def dim(self) -> int:
        return self.global_.shape[0]

    @property
    def present(self) -> dict[AttributeCategory, bool]:
        return {c: c in self.attrs for c in CATEGORIES}


def _check_pair(a: np.ndarray, b: np.ndarray):
    if a.shape != b.shape:
        raise DimensionMismatch(f"dimension mismatch: {a.shape} vs {b.shape}")


# Every cosine in the package is "normalise each side, multiply elementwise,
# sum along the last axis". Unlike BLAS matmul, whose rounding depends on the
# operand shapes, this gives a pair the same bits whether it is scored alone,
# inside a matrix, or with its arguments swapped, so exact ties stay exact ties
# and the ascending-index tie-break is applied consistently everywhere.
_ROW_BLOCK = 64


def _unit_rows(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = np.linalg.norm(A, axis=-1)
    safe = np.where(n == 0, 1.0, n)
    return A / safe[..., None], n


def cosine(a, b, strict: bool = True) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_pair(a, b)
    ua, na = _unit_rows(a)
    ub, nb = _unit_rows(b)
    if na == 0.0 or nb == 0.0:
        if strict:
            raise ZeroNormVector("cosine of a zero-norm vector")
        warnings.warn("zero-norm vector scored as 0", RuntimeWarning, stacklevel=2)
        return 0.0
    return float(np.clip(np.sum(ua * ub, axis=-1), -1.0, 1.0))


def cosine_matrix(A: np.ndarray, B: np.ndarray, strict: bool = True) -> np.ndarray:
    """Pairwise cosine between rows of ``A`` (n, d) and rows of ``B`` (m, d)."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[1]:
        raise DimensionMismatch(f"dimension mismatch: {A.shape} vs {B.shape}")
    UA, na = _unit_rows(A)
    UB, nb = _unit_rows(B)
    if np.any(na == 0) or np.any(nb == 0):
        if strict:
            raise ZeroNormVector("cosine of a zero-norm vector")
        warnings.warn("zero-norm vectors scored as 0", RuntimeWarning, stacklevel=2)
    UA[na == 0] = 0.0
    UB[nb == 0] = 0.0
    out = np.empty((A.shape[0], B.shape[0]))
    for start in range(0, A.shape[0], _ROW_BLOCK):
        block = UA[start:start + _ROW_BLOCK]
        out[start:start + _ROW_BLOCK] = np.sum(block[:, None, :] * UB[None, :, :], axis=-1)
    return np.clip(out, -1.0, 1.0)


def l2_normalize(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    n = np.linalg.norm(a)
    if n == 0.0:
        raise ZeroNormVector("cannot normalize a zero-norm vector")
    return a / n


def rank_desc(scores: np.ndarray) -> np.ndarray:
    """Indices sorted by descending score, ties broken by ascending index."""
    scores = np.asarray(scores, dtype=np.float64)
    # lexsort is stable and sorts by the last key first
    return np.lexsort((np.arange(scores.shape[0]), -scores))


def top_k(query, pool: Sequence, k: int) -> list[int]:
    """Indices of the ``k`` pool vectors closest to ``query`` by cosine."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(pool) == 0:
        raise EmptyPool("top_k over an empty pool")
    q = np.asarray(query, dtype=np.float64)
    scores = cosine_matrix(q[None, :], np.asarray(pool, dtype=np.float64))[0]
    return rank_desc(scores)[:k].tolist()
