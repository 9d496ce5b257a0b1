"""Objective terms of the joint loss and their analytic gradients.

The alignment loss is a bounded logistic loss on cosine similarities: positive
pairs are pushed above ``alpha`` and negative pairs below ``beta``, with
temperatures controlling how sharply each side saturates.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .core import AlignmentParams


class EmptyBatch(ValueError):
    pass


class TargetOutOfRange(ValueError):
    pass


class ShapeMismatch(ValueError):
    pass


@dataclass(frozen=True)
class PairSimilarities:
    s_pos: np.ndarray
    s_neg: np.ndarray

    def __init__(self, s_pos: Sequence[float] = (), s_neg: Sequence[float] = ()):
        for name, vals in (("s_pos", s_pos), ("s_neg", s_neg)):
            arr = np.asarray(vals, dtype=np.float64).reshape(-1)
            if not np.all(np.isfinite(arr)) or np.any(np.abs(arr) > 1.0):
                raise ValueError(f"{name} entries must be finite and within [-1, 1]")
            object.__setattr__(self, name, arr)


def softplus(x):
    """log(1 + exp(x)) without overflow."""
    x = np.asarray(x, dtype=np.float64)
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def _check(sims: PairSimilarities):
    if sims.s_pos.size == 0 and sims.s_neg.size == 0:
        raise EmptyBatch("alignment loss needs at least one positive or negative pair")


def align_loss_terms(sims: PairSimilarities, p: AlignmentParams) -> tuple[np.ndarray, np.ndarray]:
    """Per-pair loss contributions before averaging."""
    _check(sims)
    return softplus(-p.tau_p * (sims.s_pos - p.alpha)), softplus(p.tau_n * (sims.s_neg - p.beta))


def align_loss(sims: PairSimilarities, p: AlignmentParams) -> float:
    """Positives and negatives are each averaged over their own count."""
    pos, neg = align_loss_terms(sims, p)
    loss = 0.0
    if pos.size:
        loss += float(np.mean(pos))
    if neg.size:
        loss += float(np.mean(neg))
    return loss


def align_loss_grad(sims: PairSimilarities, p: AlignmentParams) -> tuple[np.ndarray, np.ndarray]:
    """d loss / d S for every positive and negative similarity."""
    _check(sims)
    with np.errstate(over="ignore"):
        g_pos = -p.tau_p / (1.0 + np.exp(p.tau_p * (sims.s_pos - p.alpha)))
        g_neg = p.tau_n / (1.0 + np.exp(p.tau_n * (p.beta - sims.s_neg)))
    if sims.s_pos.size:
        g_pos = g_pos / sims.s_pos.size
    if sims.s_neg.size:
        g_neg = g_neg / sims.s_neg.size
    return g_pos, g_neg


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def cross_entropy(logits, targets) -> tuple[float, np.ndarray]:
    """Mean softmax cross-entropy over leading axes, and its gradient."""
    logits = np.asarray(logits, dtype=np.float64)
    targets = np.asarray(targets)
    if logits.shape[:-1] != targets.shape:
        raise ShapeMismatch(f"logits {logits.shape} do not match targets {targets.shape}")
    n_cls = logits.shape[-1]
    if np.any(targets < 0) or np.any(targets >= n_cls):
        raise TargetOutOfRange(f"targets must lie in [0, {n_cls})")
    logp = _log_softmax(logits)
    flat_logp = logp.reshape(-1, n_cls)
    flat_t = targets.reshape(-1).astype(np.int64)
    n = flat_t.size
    loss = -float(flat_logp[np.arange(n), flat_t].mean())
    grad = np.exp(flat_logp)
    grad[np.arange(n), flat_t] -= 1.0
    return loss, (grad / n).reshape(logits.shape)


def id_loss(logits, target: int) -> tuple[float, np.ndarray]:
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 1:
        raise ShapeMismatch("id_loss expects a 1-d logit vector")
    if not 0 <= int(target) < logits.shape[0]:
        raise TargetOutOfRange(f"target {target} outside [0, {logits.shape[0]})")
    return cross_entropy(logits, np.asarray(target))


@dataclass(frozen=True)
class SegGrid:
    logits: np.ndarray  # (H, W, C+1)
    labels: np.ndarray  # (H, W) in [0, C]

    def __post_init__(self):
        logits = np.asarray(self.logits, dtype=np.float64)
        labels = np.asarray(self.labels)
        if logits.ndim != 3 or labels.ndim != 2 or logits.shape[:2] != labels.shape:
            raise ShapeMismatch(f"logits {logits.shape} vs labels {labels.shape}")
        if labels.shape[0] < 1 or labels.shape[1] < 1:
            raise ShapeMismatch("grid must be at least 1x1")
        object.__setattr__(self, "logits", logits)
        object.__setattr__(self, "labels", labels)


def seg_loss(grid: SegGrid) -> tuple[float, np.ndarray]:
    """Per-pixel cross-entropy averaged over the grid."""
    return cross_entropy(grid.logits, grid.labels)


LOSS_TERMS = ("id", "seg", "align_glo", "align_attr")


def joint_loss(terms: Mapping[str, Optional[float]],
               weights: Optional[Mapping[str, float]] = None) -> float:
    """Sum of the four loss terms; missing or ``None`` terms count as zero."""
    unknown = set(terms) - set(LOSS_TERMS)
    if unknown:
        raise KeyError(f"unknown loss terms: {sorted(unknown)}")
    weights = weights or {}
    total = 0.0
    for name in LOSS_TERMS:
        value = terms.get(name)
        if value is not None:
            total += weights.get(name, 1.0) * value
    return total
