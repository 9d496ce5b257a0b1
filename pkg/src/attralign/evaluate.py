"""Retrieval protocol: combined scoring, Recall@K, mAP, attribute retrieval and the swap probe."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .core import CATEGORIES, AttributeCategory, DimensionMismatch, EmbeddingRecord, Modality, \
    cosine, cosine_matrix, rank_desc
from .data import ProbeCase, RawRecord, split_modalities, text_features
from .textparse import LanguageResources, default_resources, embed_phrase, parse_description

RECALL_KS = (1, 5, 10)


class NoRelevantItems(ValueError):
    pass


class PhraseUnassignable(ValueError):
    pass


@dataclass(frozen=True)
class RankingResult:
    query_id: int
    indices: np.ndarray
    scores: np.ndarray

    @classmethod
    def from_scores(cls, query_id: int, scores) -> "RankingResult":
        scores = np.asarray(scores, dtype=np.float64)
        order = rank_desc(scores)
        return cls(query_id, order, scores[order])


def combined_score(query: EmbeddingRecord, item: EmbeddingRecord, lam: float = 1.0) -> float:
    """Global cosine plus ``lam`` times the mean cosine over categories present on both sides."""
    if query.dim != item.dim:
        raise DimensionMismatch(f"dimension mismatch: {query.dim} vs {item.dim}")
    score = cosine(query.global_, item.global_)
    shared = [c for c in CATEGORIES if c in query.attrs and c in item.attrs]
    attr = float(np.mean([cosine(query.attrs[c], item.attrs[c]) for c in shared])) if shared else 0.0
    return score + lam * attr


def score_matrix(q_glob: np.ndarray, q_attrs: Mapping, g_glob: np.ndarray, g_attrs: Mapping,
                 lam: float = 1.0) -> np.ndarray:
    """Vectorised ``combined_score`` for every (query, gallery) pair.

    ``*_attrs`` map a category to ``(row indices, embeddings)``; an empty
    mapping disables the attribute term.
    """
    scores = cosine_matrix(q_glob, g_glob)
    nq, ng = scores.shape
    total = np.zeros((nq, ng))
    count = np.zeros((nq, ng))
    for c in CATEGORIES:
        if c not in q_attrs or c not in g_attrs:
            continue
        (qi, qe), (gi, ge) = q_attrs[c], g_attrs[c]
        total[np.ix_(qi, gi)] += cosine_matrix(qe, ge)
        count[np.ix_(qi, gi)] += 1
    attr = np.divide(total, count, out=np.zeros_like(total), where=count > 0)
    return scores + lam * attr


def rank_all(scores: np.ndarray) -> list[RankingResult]:
    return [RankingResult.from_scores(i, row) for i, row in enumerate(scores)]


def relevance_by_identity(query_ids: Sequence[int], gallery_ids: Sequence[int]) -> dict[int, set[int]]:
    gallery_ids = np.asarray(gallery_ids)
    return {q: set(np.flatnonzero(gallery_ids == pid).tolist()) for q, pid in enumerate(query_ids)}


def recall_at_k(rankings: Sequence[RankingResult], relevant: Mapping[int, set], k: int) -> float:
    """Fraction of queries with at least one relevant gallery index in the top ``k``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not rankings:
        return 0.0
    hits = sum(bool(relevant.get(r.query_id, set()) & set(r.indices[:k].tolist())) for r in rankings)
    return hits / len(rankings)


def average_precision(ranking: RankingResult, relevant: set) -> float:
    if not relevant:
        raise NoRelevantItems(f"query {ranking.query_id} has no relevant gallery items")
    is_rel = np.isin(ranking.indices, list(relevant))
    ranks = np.flatnonzero(is_rel) + 1
    return float(np.sum(np.arange(1, len(ranks) + 1) / ranks) / len(relevant))


def mean_ap(rankings: Sequence[RankingResult], relevant: Mapping[int, set]) -> float:
    if not rankings:
        raise NoRelevantItems("no queries")
    return float(np.mean([average_precision(r, relevant.get(r.query_id, set())) for r in rankings]))


# ---------------------------------------------------------------- model-level evaluation


def encode_split(model, records: Sequence[RawRecord], with_attrs: bool = True):
    visual, textual = split_modalities(records)
    vg, va = model.encode_arrays(visual, with_attrs)
    tg, ta = model.encode_arrays(textual, with_attrs)
    return (visual, vg, va), (textual, tg, ta)


def person_search_scores(model, records: Sequence[RawRecord], lam: float = 1.0,
                         global_only: bool = False):
    """Score matrix (textual queries x visual gallery) and the two id lists."""
    (visual, vg, va), (textual, tg, ta) = encode_split(model, records, not global_only)
    scores = score_matrix(tg, ta, vg, va, 0.0 if global_only else lam)
    return scores, [r.person_id for r in textual], [r.person_id for r in visual]


def person_search_metrics(model, records: Sequence[RawRecord], lam: float = 1.0,
                          ks: Sequence[int] = RECALL_KS, global_only: bool = False,
                          with_map: bool = False) -> dict:
    scores, q_ids, g_ids = person_search_scores(model, records, lam, global_only)
    rankings = rank_all(scores)
    relevant = relevance_by_identity(q_ids, g_ids)
    out = {f"R@{k}": recall_at_k(rankings, relevant, k) for k in ks}
    if with_map:
        out["mAP"] = mean_ap(rankings, relevant)
    return out


@dataclass(frozen=True)
class AttributeRetrieval:
    ranking: RankingResult
    recall_at_1: float
    mean_ap: float
    n_targets: int


def attribute_retrieve(phrase: str, gallery: Sequence[RawRecord], model,
                       category: AttributeCategory, relevant_label: Optional[str] = None,
                       res: Optional[LanguageResources] = None) -> AttributeRetrieval:
    """Rank gallery items by one category's visual embedding against a phrase query.

    A gallery item is relevant when its ground-truth label for ``category``
    contains every token of ``relevant_label`` (default: the phrase tokens),
    so ``relevant_label="black"`` scores colour-only retrieval.
    """
    res = res or default_resources()
    parsed = parse_description(phrase, res, model.cfg.theta)
    if category not in parsed.attrs:
        raise PhraseUnassignable(f"{phrase!r} does not parse to category {category.key}")
    tokens = parsed.attrs[category]
    q = model._slot_forward("t.attr", embed_phrase(tokens, res.store)[None, :])[0]

    candidates = [r for r in gallery if category in r.attrs]
    if not candidates:
        return AttributeRetrieval(RankingResult(0, np.zeros(0, dtype=int), np.zeros(0)), 0.0, 0.0, 0)
    _, attrs = model.encode_arrays(candidates)
    rows, E = attrs[category]
    scores = cosine_matrix(q, E)[0]
    ranking = RankingResult.from_scores(0, scores)
    want = set((relevant_label or " ".join(tokens)).lower().split())
    relevant = {i for i, r in enumerate(candidates)
                if want <= set(r.labels.get(category, "").lower().split())}
    if not relevant:
        return AttributeRetrieval(ranking, 0.0, 0.0, 0)
    rel = {0: relevant}
    return AttributeRetrieval(ranking, recall_at_k([ranking], rel, 1), mean_ap([ranking], rel), len(relevant))


def encode_one(model, record: RawRecord) -> EmbeddingRecord:
    return model.forward([record])[0]


def probe_malpositioned(cases: Sequence[ProbeCase], model, lam: float = 1.0, seed: int = 0,
                        global_only: bool = False, res: Optional[LanguageResources] = None) -> float:
    """Fraction of cases where the target outscores its swapped distractor.

    Exact ties are settled by a seeded coin flip.
    """
    if not cases:
        return 0.0
    res = res or default_resources()
    rng = np.random.default_rng(seed)
    wins = 0.0
    for case in cases:
        glob, attrs = text_features(case.text, res, model.cfg.theta)
        query = RawRecord(-1, Modality.TEXTUAL, glob, {} if global_only else attrs)
        q = encode_one(model, query)
        target, distractor = model.forward(
            [_strip(case.target, global_only), _strip(case.distractor, global_only)])
        st = combined_score(q, target, 0.0 if global_only else lam)
        sd = combined_score(q, distractor, 0.0 if global_only else lam)
        if st > sd:
            wins += 1
        elif st == sd:
            wins += float(rng.random() < 0.5)
    return wins / len(cases)


def _strip(rec: RawRecord, global_only: bool) -> RawRecord:
    if not global_only:
        return rec
    return RawRecord(rec.person_id, rec.modality, rec.global_, {}, labels=rec.labels)


def write_metrics(csv_path, json_path, metrics: dict):
    """``metric,k,value`` CSV plus a flat JSON summary."""
    with open(csv_path, "w", encoding="utf-8") as f:
        f.write("metric,k,value\n")
        for name, value in metrics.items():
            metric, _, k = name.partition("@")
            f.write(f"{metric},{k},{value!r}\n")
    with open(json_path, "w", encoding="utf-8") as f:
        json.dump(metrics, f, indent=2, sort_keys=True)
        f.write("\n")
