"""K-reciprocal mining of surrogate positive cross-modal pairs.

For one attribute category, a textual item ``t`` is a surrogate positive of a
visual item ``v`` when each is among the other's top-k cosine neighbours in the
opposite modality. Items lacking the attribute are left out of the pools.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import EmptyPool, ZeroNormVector, _unit_rows, cosine_matrix, rank_desc

DEFAULT_K = 8

SAME_ID = "same-id"
SURROGATE = "surrogate"


@dataclass(frozen=True)
class SamplerInput:
    visual: Sequence[tuple[int, np.ndarray]]
    textual: Sequence[tuple[int, np.ndarray]]
    k: int = DEFAULT_K

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if len(self.visual) == 0 or len(self.textual) == 0:
            raise EmptyPool("sampler needs non-empty visual and textual pools")


SurrogatePositiveSet = dict[int, set[int]]


def k_reciprocal_sample(inp: SamplerInput) -> SurrogatePositiveSet:
    v_idx = [i for i, _ in inp.visual]
    t_idx = [i for i, _ in inp.textual]
    sims = cosine_matrix(np.stack([v for _, v in inp.visual]),
                         np.stack([t for _, t in inp.textual]))
    n_v, n_t = sims.shape

    # near_t[i, j]: textual j is in the top-k of visual i
    near_t = np.zeros((n_v, n_t), dtype=bool)
    for i in range(n_v):
        near_t[i, rank_desc(sims[i])[:inp.k]] = True
    near_v = np.zeros((n_v, n_t), dtype=bool)
    for j in range(n_t):
        near_v[rank_desc(sims[:, j])[:inp.k], j] = True

    mutual = near_t & near_v
    return {v_idx[i]: {t_idx[j] for j in np.flatnonzero(mutual[i])} for i in range(n_v)}


def _unit(v) -> np.ndarray:
    u, n = _unit_rows(np.asarray(v, dtype=np.float64))
    if n == 0.0:
        raise ZeroNormVector("cosine of a zero-norm vector")
    return u


def k_reciprocal_oracle(inp: SamplerInput) -> SurrogatePositiveSet:
    """Brute-force reference: pair-by-pair cosines, full sorts, literal loop.

    Each vector is normalised once and every pair is scored with the same
    multiply-and-sum as ``cosine``, so the values match it bit for bit.
    """
    n_v, n_t = len(inp.visual), len(inp.textual)
    uv = [_unit(v) for _, v in inp.visual]
    ut = [_unit(t) for _, t in inp.textual]
    sims = [[min(1.0, max(-1.0, float(np.sum(uv[i] * ut[j])))) for j in range(n_t)]
            for i in range(n_v)]

    near_t = [sorted(range(n_t), key=lambda j: (-sims[i][j], j))[:inp.k] for i in range(n_v)]
    near_v = [sorted(range(n_v), key=lambda i: (-sims[i][j], i))[:inp.k] for j in range(n_t)]

    result = {}
    for i in range(n_v):
        found = set()
        for j in near_t[i]:
            if i in near_v[j]:
                found.add(inp.textual[j][0])
        result[inp.visual[i][0]] = found
    return result


def build_positive_pairs(visual_ids: Mapping[int, int], textual_ids: Mapping[int, int],
                         surrogates: Mapping[int, set[int]] | None = None
                         ) -> list[tuple[int, int, str]]:
    """Same-identity pairs plus surrogate pairs, sorted by (visual, textual).

    A surrogate pair that also shares identity keeps the same-id provenance.
    """
    pairs: dict[tuple[int, int], str] = {}
    for v, vid in visual_ids.items():
        for t, tid in textual_ids.items():
            if vid == tid:
                pairs[(v, t)] = SAME_ID
    for v, ts in (surrogates or {}).items():
        for t in ts:
            pairs.setdefault((v, t), SURROGATE)
    return [(v, t, prov) for (v, t), prov in sorted(pairs.items())]
