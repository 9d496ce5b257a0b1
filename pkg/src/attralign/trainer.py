"""Joint training of toy visual/textual encoders with analytic gradients.

Each slot (global plus one per attribute category) maps raw features to a
``dim``-dimensional embedding with an affine layer, optionally through one
tanh hidden layer. Textual attribute slots share a single parameter set.
All gradients are derived by hand; ``grad-check`` compares them against
central finite differences.
"""
from __future__ import annotations

import base64
import copy
import json
import logging
from dataclasses import asdict, dataclass, field, fields
from typing import Optional, Sequence

import numpy as np

from .core import CATEGORIES, DEFAULT_DIM, AlignmentParams, AttributeCategory, DimensionMismatch, \
    EmbeddingRecord, Modality, ZeroNormVector
from .data import SEG_CLASSES, RawRecord, split_modalities
from .losses import LOSS_TERMS, PairSimilarities, align_loss, align_loss_grad, cross_entropy, \
    joint_loss
from .sampler import SamplerInput, k_reciprocal_sample, build_positive_pairs
from .textparse import DEFAULT_THETA

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "attralign-checkpoint"
CHECKPOINT_VERSION = 1


class DegenerateBatch(ValueError):
    pass


@dataclass
class TrainConfig:
    batch_size: int = 64
    epochs: int = 70
    lr: float = 2e-4
    weight_decay: float = 4e-5
    lr_decay: float = 0.1
    decay_epoch: Optional[int] = 40
    seed: int = 0
    align: AlignmentParams = field(default_factory=AlignmentParams)
    k: int = 8
    theta: float = DEFAULT_THETA
    weights: dict = field(default_factory=lambda: {t: 1.0 for t in LOSS_TERMS})
    deterministic: bool = True
    dim: int = DEFAULT_DIM
    hidden: Optional[int] = None
    normalize_embeddings: bool = False
    id_on_text: bool = False
    eval_lambda: float = 1.0
    init: str = "normal"
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if isinstance(self.align, dict):
            self.align = AlignmentParams(**self.align)
        unknown = set(self.weights) - set(LOSS_TERMS)
        if unknown:
            raise ValueError(f"unknown loss weights: {sorted(unknown)}")
        self.weights = {t: float(self.weights.get(t, 1.0)) for t in LOSS_TERMS}
        if self.batch_size < 2:
            raise ValueError("batch_size must be >= 2")
        if self.k < 1 or self.dim < 1 or self.epochs < 0:
            raise ValueError("k, dim must be >= 1 and epochs >= 0")
        if self.init not in ("normal", "identity"):
            raise ValueError("init must be 'normal' or 'identity'")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["align"] = {k: v for k, v in asdict(self.align).items()}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**d)


# ---------------------------------------------------------------- model


def visual_slot(c: AttributeCategory) -> str:
    return f"v.{c.key}"


class Model:
    """Encoder parameters plus the metadata needed to rebuild them.

    ``dims`` holds the raw input widths: ``v_glo``, ``v_attr``, ``t_glo``,
    ``t_attr``. ``id_labels`` lists the person ids known to the ID head.
    """

    def __init__(self, params: dict, dims: dict, cfg: TrainConfig, id_labels: Sequence[int]):
        self.params = params
        self.dims = dict(dims)
        self.cfg = cfg
        self.id_labels = [int(i) for i in id_labels]
        self._id_index = {pid: i for i, pid in enumerate(self.id_labels)}

    @classmethod
    def init(cls, dims: dict, cfg: TrainConfig, id_labels: Sequence[int], rng=None) -> "Model":
        rng = rng if rng is not None else np.random.default_rng(cfg.seed)
        d, h = cfg.dim, cfg.hidden
        params = {}

        def affine(prefix, d_in, d_out, tag):
            if cfg.init == "identity":
                if d_in != d_out:
                    raise DimensionMismatch("identity init needs d_in == d_out")
                params[f"{prefix}.W{tag}"] = np.eye(d_out)
            else:
                params[f"{prefix}.W{tag}"] = rng.standard_normal((d_out, d_in)) / np.sqrt(d_in)
            params[f"{prefix}.b{tag}"] = np.zeros(d_out)

        def slot(prefix, d_in):
            if h:
                affine(prefix, d_in, h, 1)
                affine(prefix, h, d, 2)
            else:
                affine(prefix, d_in, d, 1)

        slot("v.glo", dims["v_glo"])
        for c in CATEGORIES:
            slot(visual_slot(c), dims["v_attr"])
        slot("t.glo", dims["t_glo"])
        slot("t.attr", dims["t_attr"])
        n_ids = max(len(id_labels), 1)
        params["id.W"] = rng.standard_normal((n_ids, d)) / np.sqrt(d)
        params["id.b"] = np.zeros(n_ids)
        params["seg.q"] = rng.standard_normal((len(CATEGORIES), d)) / np.sqrt(d)
        params["seg.b"] = np.zeros(SEG_CLASSES)
        params["seg.bg"] = rng.standard_normal(dims["v_attr"]) / np.sqrt(dims["v_attr"])
        return cls(params, dims, cfg, id_labels)

    def copy(self) -> "Model":
        return Model({k: v.copy() for k, v in self.params.items()}, self.dims,
                     copy.deepcopy(self.cfg), self.id_labels)

    def id_targets(self, person_ids) -> np.ndarray:
        """ID-head class per record, -1 for identities unknown to the head."""
        return np.array([self._id_index.get(int(p), -1) for p in person_ids], dtype=np.int64)

    # ------------------------------------------------------------ slots

    def _slot_forward(self, prefix: str, x: np.ndarray):
        p = self.params
        a = x @ p[f"{prefix}.W1"].T + p[f"{prefix}.b1"]
        if not self.cfg.hidden:
            y, cache = a, (x, None)
        else:
            z = np.tanh(a)
            y, cache = z @ p[f"{prefix}.W2"].T + p[f"{prefix}.b2"], (x, z)
        if self.cfg.normalize_embeddings:
            n = np.linalg.norm(y, axis=1, keepdims=True)
            if np.any(n == 0):
                raise ZeroNormVector("encoder produced a zero embedding")
            e = y / n
            return e, cache + (e, n)
        return y, cache + (None, None)

    def _slot_backward(self, prefix: str, dy: np.ndarray, cache, grads: dict):
        x, z, e, n = cache
        if e is not None:
            dy = (dy - np.sum(dy * e, axis=1, keepdims=True) * e) / n
        if z is None:
            grads[f"{prefix}.W1"] += dy.T @ x
            grads[f"{prefix}.b1"] += dy.sum(axis=0)
            return
        grads[f"{prefix}.W2"] += dy.T @ z
        grads[f"{prefix}.b2"] += dy.sum(axis=0)
        da = (dy @ self.params[f"{prefix}.W2"]) * (1.0 - z * z)
        grads[f"{prefix}.W1"] += da.T @ x
        grads[f"{prefix}.b1"] += da.sum(axis=0)

    # ------------------------------------------------------------ encoding

    def _encode(self, records: Sequence[RawRecord], modality: Modality, with_attrs: bool = True):
        """Returns global (n, d), {cat: (row indices, (m, d))} and backward caches."""
        glob_key, attr_key = ("v_glo", "v_attr") if modality is Modality.VISUAL else ("t_glo", "t_attr")
        n = len(records)
        if n == 0:
            return np.zeros((0, self.cfg.dim)), {}, {}
        X = np.stack([r.global_ for r in records])
        if X.shape[1] != self.dims[glob_key]:
            raise DimensionMismatch(
                f"{modality.value} global features have width {X.shape[1]}, encoder expects {self.dims[glob_key]}")
        glob_slot = "v.glo" if modality is Modality.VISUAL else "t.glo"
        G, gcache = self._slot_forward(glob_slot, X)
        attrs, caches = {}, {glob_slot: gcache}
        if not with_attrs:
            return G, attrs, caches
        for c in CATEGORIES:
            rows = [i for i, r in enumerate(records) if c in r.attrs]
            if not rows:
                continue
            Xa = np.stack([records[i].attrs[c] for i in rows])
            if Xa.shape[1] != self.dims[attr_key]:
                raise DimensionMismatch(
                    f"{modality.value} {c.key} features have width {Xa.shape[1]}, "
                    f"encoder expects {self.dims[attr_key]}")
            slot = visual_slot(c) if modality is Modality.VISUAL else "t.attr"
            E, cache = self._slot_forward(slot, Xa)
            attrs[c] = (np.array(rows), E)
            caches[(slot, c)] = cache
        return G, attrs, caches

    def encode_arrays(self, records: Sequence[RawRecord], with_attrs: bool = True):
        """Global embeddings and per-category embeddings for records of one modality."""
        modalities = {r.modality for r in records}
        if len(modalities) > 1:
            raise ValueError("encode_arrays expects records of a single modality")
        modality = modalities.pop() if modalities else Modality.VISUAL
        G, attrs, _ = self._encode(records, modality, with_attrs)
        return G, attrs

    def forward(self, records: Sequence[RawRecord]) -> list[EmbeddingRecord]:
        """Encode a mixed batch; output order follows the input."""
        out: list[Optional[EmbeddingRecord]] = [None] * len(records)
        for modality in Modality:
            idx = [i for i, r in enumerate(records) if r.modality is modality]
            if not idx:
                continue
            G, attrs = self.encode_arrays([records[i] for i in idx])
            per_row: list[dict] = [{} for _ in idx]
            for c, (rows, E) in attrs.items():
                for r, e in zip(rows, E):
                    per_row[r][c] = e
            for j, i in enumerate(idx):
                out[i] = EmbeddingRecord(records[i].person_id, modality, G[j], per_row[j])
        return out


# ---------------------------------------------------------------- loss and gradient


def _cos_forward(A: np.ndarray, B: np.ndarray):
    nA = np.linalg.norm(A, axis=1)
    nB = np.linalg.norm(B, axis=1)
    if np.any(nA == 0) or np.any(nB == 0):
        raise ZeroNormVector("zero-norm embedding in alignment loss")
    An, Bn = A / nA[:, None], B / nB[:, None]
    return An @ Bn.T, (An, Bn, nA, nB)


def _cos_backward(G: np.ndarray, cache):
    An, Bn, nA, nB = cache
    dAn = G @ Bn
    dBn = G.T @ An
    dA = (dAn - np.sum(dAn * An, axis=1, keepdims=True) * An) / nA[:, None]
    dB = (dBn - np.sum(dBn * Bn, axis=1, keepdims=True) * Bn) / nB[:, None]
    return dA, dB


def _align_term(S: np.ndarray, pos: np.ndarray, neg: np.ndarray, params: AlignmentParams):
    """Alignment loss over masked entries of a similarity matrix and dL/dS."""
    Sc = np.clip(S, -1.0, 1.0)
    sims = PairSimilarities(Sc[pos], Sc[neg])
    loss = align_loss(sims, params)
    g_pos, g_neg = align_loss_grad(sims, params)
    G = np.zeros_like(S)
    G[pos] = g_pos
    G[neg] = g_neg
    return loss, G


@dataclass
class BatchResult:
    total: float
    terms: dict
    grads: dict
    n_pos_global: int = 0
    n_neg_global: int = 0
    surrogates: dict = field(default_factory=dict)


def batch_loss(model: Model, visual: Sequence[RawRecord], textual: Sequence[RawRecord],
               with_grad: bool = True) -> BatchResult:
    """Weighted joint loss over one batch, with gradients for every parameter."""
    cfg = model.cfg
    w = cfg.weights
    ids_v = np.array([r.person_id for r in visual])
    ids_t = np.array([r.person_id for r in textual])
    if len(set(ids_v.tolist()) | set(ids_t.tolist())) < 2:
        raise DegenerateBatch("batch must contain at least two identities")

    need_attrs = w["align_attr"] != 0
    Vg, Va, vcache = model._encode(visual, Modality.VISUAL, need_attrs)
    Tg, Ta, tcache = model._encode(textual, Modality.TEXTUAL, need_attrs)
    grads = {k: np.zeros_like(v) for k, v in model.params.items()}
    dVg, dTg = np.zeros_like(Vg), np.zeros_like(Tg)
    dVa = {c: np.zeros_like(E) for c, (_, E) in Va.items()}
    dTa = {c: np.zeros_like(E) for c, (_, E) in Ta.items()}
    terms: dict = {}
    result = BatchResult(0.0, terms, grads)

    if w["id"] != 0:
        feats, targets = [Vg], [model.id_targets(ids_v)]
        if cfg.id_on_text:
            feats.append(Tg)
            targets.append(model.id_targets(ids_t))
        F = np.concatenate(feats)
        y = np.concatenate(targets)
        keep = y >= 0
        if keep.any():
            logits = F[keep] @ model.params["id.W"].T + model.params["id.b"]
            loss, dlogits = cross_entropy(logits, y[keep])
            terms["id"] = loss
            dlogits *= w["id"]
            grads["id.W"] += dlogits.T @ F[keep]
            grads["id.b"] += dlogits.sum(axis=0)
            dF = np.zeros_like(F)
            dF[keep] = dlogits @ model.params["id.W"]
            dVg += dF[:len(Vg)]
            if cfg.id_on_text:
                dTg += dF[len(Vg):]

    if w["align_glo"] != 0:
        S, cache = _cos_forward(Vg, Tg)
        pos = ids_v[:, None] == ids_t[None, :]
        neg = ~pos
        result.n_pos_global, result.n_neg_global = int(pos.sum()), int(neg.sum())
        loss, G = _align_term(S, pos, neg, cfg.align)
        terms["align_glo"] = loss
        dA, dB = _cos_backward(w["align_glo"] * G, cache)
        dVg += dA
        dTg += dB

    if need_attrs:
        per_cat = {}
        for c in CATEGORIES:
            if c not in Va or c not in Ta:
                continue
            (rows_v, Ev), (rows_t, Et) = Va[c], Ta[c]
            surrogates = k_reciprocal_sample(SamplerInput(
                list(enumerate(Ev)), list(enumerate(Et)), cfg.k))
            result.surrogates[c] = surrogates
            pairs = build_positive_pairs(
                dict(enumerate(ids_v[rows_v].tolist())), dict(enumerate(ids_t[rows_t].tolist())),
                surrogates)
            pos = np.zeros((len(rows_v), len(rows_t)), dtype=bool)
            for i, j, _ in pairs:
                pos[i, j] = True
            # surrogate positives are removed from the negative set
            neg = (ids_v[rows_v][:, None] != ids_t[rows_t][None, :]) & ~pos
            if not pos.any() and not neg.any():
                continue
            S, cache = _cos_forward(Ev, Et)
            per_cat[c] = (*_align_term(S, pos, neg, cfg.align), cache)
        if per_cat:
            terms["align_attr"] = float(np.mean([v[0] for v in per_cat.values()]))
            scale = w["align_attr"] / len(per_cat)
            for c, (_, G, cache) in per_cat.items():
                dA, dB = _cos_backward(scale * G, cache)
                dVa[c] += dA
                dTa[c] += dB

    seg_rows = [r for r in visual if r.seg_labels is not None]
    if w["seg"] != 0 and seg_rows:
        X = np.concatenate([r.seg_cells.reshape(-1, r.seg_cells.shape[-1]) for r in seg_rows])
        labels = np.concatenate([r.seg_labels.reshape(-1) for r in seg_rows])
        if X.shape[1] != model.dims["v_attr"]:
            raise DimensionMismatch(
                f"seg cell features have width {X.shape[1]}, encoder expects {model.dims['v_attr']}")
        q, b = model.params["seg.q"], model.params["seg.b"]
        logits = np.empty((X.shape[0], SEG_CLASSES))
        logits[:, 0] = X @ model.params["seg.bg"]
        seg_caches = {}
        for ci, c in enumerate(CATEGORIES):
            H, cache = model._slot_forward(visual_slot(c), X)
            seg_caches[c] = (H, cache)
            logits[:, ci + 1] = H @ q[ci]
        logits += b
        loss, dlogits = cross_entropy(logits, labels)
        terms["seg"] = loss
        dlogits *= w["seg"]
        grads["seg.b"] += dlogits.sum(axis=0)
        grads["seg.bg"] += X.T @ dlogits[:, 0]
        for ci, c in enumerate(CATEGORIES):
            H, cache = seg_caches[c]
            grads["seg.q"][ci] += dlogits[:, ci + 1] @ H
            model._slot_backward(visual_slot(c), np.outer(dlogits[:, ci + 1], q[ci]), cache, grads)

    if with_grad:
        model._slot_backward("v.glo", dVg, vcache["v.glo"], grads)
        model._slot_backward("t.glo", dTg, tcache["t.glo"], grads)
        for c, g in dVa.items():
            model._slot_backward(visual_slot(c), g, vcache[(visual_slot(c), c)], grads)
        for c, g in dTa.items():
            model._slot_backward("t.attr", g, tcache[("t.attr", c)], grads)

    result.total = joint_loss(terms, w)
    return result


# ---------------------------------------------------------------- optimizer


class Adam:
    """Adam with L2 weight decay folded into the gradient."""

    def __init__(self, params: dict, beta1=0.9, beta2=0.999, eps=1e-8, weight_decay=0.0):
        self.beta1, self.beta2, self.eps, self.weight_decay = beta1, beta2, eps, weight_decay
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict, grads: dict, lr: float):
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for k in sorted(params):
            g = grads[k]
            if self.weight_decay:
                g = g + self.weight_decay * params[k]
            self.m[k] = self.beta1 * self.m[k] + (1 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1 - self.beta2) * g * g
            params[k] -= lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)

    def state_dict(self) -> dict:
        return {"t": self.t, "m": self.m, "v": self.v}


class Trainer:
    """Owns a model, its optimizer state and the RNG used for batching."""

    def __init__(self, model: Model, rng=None):
        self.model = model
        cfg = model.cfg
        self.opt = Adam(model.params, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, cfg.weight_decay)
        self.rng = rng if rng is not None else np.random.default_rng(cfg.seed)

    def train_step(self, visual: Sequence[RawRecord], textual: Sequence[RawRecord],
                   lr: Optional[float] = None) -> BatchResult:
        lr = self.model.cfg.lr if lr is None else lr
        res = batch_loss(self.model, visual, textual)
        if lr != 0:
            self.opt.step(self.model.params, res.grads, lr)
        return res


def make_pairs(records: Sequence[RawRecord]) -> list[tuple[RawRecord, RawRecord]]:
    """Pair visual and textual records of each identity, cycling the shorter list."""
    visual, textual = split_modalities(records)
    by_id_v: dict[int, list] = {}
    by_id_t: dict[int, list] = {}
    for r in visual:
        by_id_v.setdefault(r.person_id, []).append(r)
    for r in textual:
        by_id_t.setdefault(r.person_id, []).append(r)
    pairs = []
    for pid in sorted(set(by_id_v) & set(by_id_t)):
        vs, ts = by_id_v[pid], by_id_t[pid]
        n = max(len(vs), len(ts))
        pairs.extend((vs[i % len(vs)], ts[i % len(ts)]) for i in range(n))
    return pairs


def infer_dims(records: Sequence[RawRecord]) -> dict:
    visual, textual = split_modalities(records)
    if not visual or not textual:
        raise ValueError("training data needs both visual and textual records")

    def attr_width(rs):
        for r in rs:
            for v in r.attrs.values():
                return v.shape[0]
        for r in rs:
            if r.seg_cells is not None:
                return r.seg_cells.shape[-1]
        return rs[0].global_.shape[0]

    return {"v_glo": visual[0].global_.shape[0], "v_attr": attr_width(visual),
            "t_glo": textual[0].global_.shape[0], "t_attr": attr_width(textual)}


# ---------------------------------------------------------------- checkpoints


@dataclass
class Checkpoint:
    model: Model
    epoch: int
    rng_state: dict

    @property
    def config(self) -> TrainConfig:
        return self.model.cfg

    def to_json(self) -> dict:
        return {
            "format": CHECKPOINT_FORMAT,
            "format_version": CHECKPOINT_VERSION,
            "epoch": self.epoch,
            "config": self.model.cfg.to_dict(),
            "dims": self.model.dims,
            "id_labels": self.model.id_labels,
            "rng_state": self.rng_state,
            "params": {k: _encode_array(v) for k, v in sorted(self.model.params.items())},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Checkpoint":
        if obj.get("format") != CHECKPOINT_FORMAT:
            raise ValueError("not a checkpoint file")
        if obj.get("format_version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {obj.get('format_version')}")
        cfg = TrainConfig.from_dict(obj["config"])
        params = {k: _decode_array(v) for k, v in obj["params"].items()}
        return cls(Model(params, obj["dims"], cfg, obj["id_labels"]), obj["epoch"], obj["rng_state"])

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_json(), f)

    @classmethod
    def load(cls, path) -> "Checkpoint":
        with open(path, encoding="utf-8") as f:
            return cls.from_json(json.load(f))


def _encode_array(a: np.ndarray) -> dict:
    a = np.ascontiguousarray(a, dtype="<f8")
    return {"shape": list(a.shape), "dtype": "<f8", "data": base64.b64encode(a.tobytes()).decode("ascii")}


def _decode_array(d: dict) -> np.ndarray:
    raw = base64.b64decode(d["data"])
    return np.frombuffer(raw, dtype=d["dtype"]).astype(np.float64).reshape(d["shape"])


# ---------------------------------------------------------------- fit


METRIC_COLUMNS = ("epoch", "loss_id", "loss_seg", "loss_align_glo", "loss_align_attr", "val_r1")


@dataclass
class FitResult:
    checkpoint: Checkpoint
    history: list
    final: Model


def fit(train: Sequence[RawRecord], val: Sequence[RawRecord], cfg: TrainConfig,
        model: Optional[Model] = None) -> FitResult:
    """Train for ``cfg.epochs`` epochs and return the best-validation checkpoint.

    Validation Recall@1 ranks val visual records for each val textual query
    with the combined score at ``cfg.eval_lambda``.
    """
    from .evaluate import person_search_metrics

    rng = np.random.default_rng(cfg.seed)
    if model is None:
        ids = sorted({r.person_id for r in train})
        model = Model.init(infer_dims(train), cfg, ids, rng)
    trainer = Trainer(model, rng)
    pairs = make_pairs(train)
    if not pairs:
        raise ValueError("no visual/textual pairs in the training data")

    best = Checkpoint(model.copy(), 0, _rng_state(rng))
    best_r1 = -1.0
    history = []
    for epoch in range(1, cfg.epochs + 1):
        lr = cfg.lr
        if cfg.decay_epoch is not None and epoch > cfg.decay_epoch:
            lr *= cfg.lr_decay
        order = rng.permutation(len(pairs))
        sums = {t: 0.0 for t in LOSS_TERMS}
        n_steps = 0
        for start in range(0, len(order), cfg.batch_size):
            chunk = [pairs[i] for i in order[start:start + cfg.batch_size]]
            visual = [p[0] for p in chunk]
            textual = [p[1] for p in chunk]
            try:
                res = trainer.train_step(visual, textual, lr)
            except DegenerateBatch:
                log.debug("epoch %d: skipped single-identity batch", epoch)
                continue
            for t in LOSS_TERMS:
                sums[t] += res.terms.get(t, 0.0)
            n_steps += 1
        val_r1 = person_search_metrics(model, val, lam=cfg.eval_lambda, ks=(1,))["R@1"] if val else float("nan")
        row = {"epoch": epoch}
        row.update({f"loss_{t}": sums[t] / max(n_steps, 1) for t in LOSS_TERMS})
        row["val_r1"] = val_r1
        history.append(row)
        log.info("epoch %d %s", epoch, " ".join(f"{k}={v:.4f}" for k, v in row.items() if k != "epoch"))
        if val_r1 > best_r1 or not val:
            best_r1 = val_r1
            best = Checkpoint(model.copy(), epoch, _rng_state(rng))
    return FitResult(best, history, model)


def _rng_state(rng) -> dict:
    return copy.deepcopy(rng.bit_generator.state)


def write_metric_log(path, history: Sequence[dict]):
    with open(path, "w", encoding="utf-8") as f:
        f.write(",".join(METRIC_COLUMNS) + "\n")
        for row in history:
            f.write(",".join(repr(float(row[c])) if c != "epoch" else str(row[c])
                             for c in METRIC_COLUMNS) + "\n")


def load_config(path) -> TrainConfig:
    with open(path, encoding="utf-8") as f:
        return TrainConfig.from_dict(json.load(f))
