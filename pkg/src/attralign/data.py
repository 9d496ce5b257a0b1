"""Dataset records, JSON-lines ingestion and the synthetic fixture generator."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from . import vocab
from .core import CATEGORIES, AttributeCategory, Modality
from .textparse import DEFAULT_THETA, LanguageResources, default_resources, embed_phrase, parse_description

SEG_CLASSES = len(CATEGORIES) + 1  # background is label 0


class DataError(ValueError):
    """Malformed dataset input; message starts with ``<path>:<line>:``."""


@dataclass
class RawRecord:
    """One visual or textual item before encoding.

    Textual items built from text carry word-vector features computed at
    load time; ``text`` keeps the original description.
    """

    person_id: int
    modality: Modality
    global_: np.ndarray
    attrs: dict[AttributeCategory, np.ndarray] = field(default_factory=dict)
    seg_cells: Optional[np.ndarray] = None  # (H, W, d_attr)
    seg_labels: Optional[np.ndarray] = None  # (H, W) ints in [0, 5]
    labels: dict[AttributeCategory, str] = field(default_factory=dict)
    text: Optional[str] = None

    def to_json(self, with_features: bool = True) -> dict:
        out: dict = {"person_id": int(self.person_id), "modality": self.modality.value}
        if self.text is not None:
            out["text"] = self.text
        if with_features or self.text is None:
            out["global"] = _floats(self.global_)
            if self.attrs:
                out["attrs"] = {c.key: _floats(v) for c, v in sorted(self.attrs.items())}
        if self.seg_labels is not None:
            out["seg"] = {"labels": self.seg_labels.astype(int).tolist(),
                          "cells": _floats(self.seg_cells)}
        if self.labels:
            out["labels"] = {c.key: v for c, v in sorted(self.labels.items())}
        return out


def _floats(a: np.ndarray):
    return np.round(np.asarray(a, dtype=np.float64), 6).tolist()


def text_features(text: str, res: Optional[LanguageResources] = None, theta: float = DEFAULT_THETA):
    """Sentence mean word vector plus one mean vector per assigned category."""
    res = res or default_resources()
    parsed = parse_description(text, res, theta)
    if not parsed.tokens:
        raise ValueError("description has no tokens")
    glob = embed_phrase(parsed.tokens, res.store)
    attrs = {c: embed_phrase(toks, res.store) for c, toks in parsed.attrs.items()}
    return glob, attrs


def record_from_json(obj: dict, res: Optional[LanguageResources] = None,
                     theta: float = DEFAULT_THETA) -> RawRecord:
    if not isinstance(obj, dict):
        raise ValueError("record must be a JSON object")
    pid = obj.get("person_id")
    if not isinstance(pid, int) or isinstance(pid, bool) or pid < 0:
        raise ValueError("person_id must be a non-negative integer")
    try:
        modality = Modality(obj.get("modality"))
    except ValueError:
        raise ValueError(f"modality must be 'visual' or 'textual', got {obj.get('modality')!r}") from None
    labels = {AttributeCategory.from_key(k): str(v) for k, v in obj.get("labels", {}).items()}
    text = obj.get("text")

    if "global" in obj:
        glob = _vector(obj["global"], "global")
        attrs = {AttributeCategory.from_key(k): _vector(v, f"attrs.{k}")
                 for k, v in obj.get("attrs", {}).items()}
    elif modality is Modality.TEXTUAL and isinstance(text, str):
        glob, attrs = text_features(text, res or default_resources(), theta)
    else:
        raise ValueError("record needs a 'global' feature vector (or 'text' for textual records)")

    seg_cells = seg_labels = None
    if "seg" in obj:
        if modality is not Modality.VISUAL:
            raise ValueError("only visual records may carry a seg grid")
        seg_labels = np.asarray(obj["seg"]["labels"])
        seg_cells = np.asarray(obj["seg"]["cells"], dtype=np.float64)
        if seg_labels.ndim != 2 or seg_cells.ndim != 3 or seg_cells.shape[:2] != seg_labels.shape:
            raise ValueError("seg.cells must be (H, W, d) and seg.labels (H, W)")
        if not np.issubdtype(seg_labels.dtype, np.integer) or seg_labels.min() < 0 \
                or seg_labels.max() >= SEG_CLASSES:
            raise ValueError(f"seg.labels must be integers in [0, {SEG_CLASSES})")
    return RawRecord(pid, modality, glob, attrs, seg_cells, seg_labels, labels, text)


def _vector(values, name: str) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size == 0 or not np.all(np.isfinite(v)):
        raise ValueError(f"{name} must be a non-empty list of finite numbers")
    return v


def load_records(path, res: Optional[LanguageResources] = None,
                 theta: float = DEFAULT_THETA) -> list[RawRecord]:
    """Read a JSON-lines dataset; any bad line aborts the whole load."""
    records = []
    dims: dict[tuple, int] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                rec = record_from_json(json.loads(line), res, theta)
                _check_dims(rec, dims)
            except (ValueError, KeyError, TypeError) as e:
                raise DataError(f"{path}:{lineno}: {e}") from None
            records.append(rec)
    return records


def _check_dims(rec: RawRecord, dims: dict):
    slots = [((rec.modality, "global"), rec.global_.shape[0])]
    slots += [((rec.modality, "attr"), v.shape[0]) for v in rec.attrs.values()]
    if rec.seg_cells is not None:
        slots.append(((rec.modality, "attr"), rec.seg_cells.shape[2]))
    for key, d in slots:
        expected = dims.setdefault(key, d)
        if d != expected:
            raise ValueError(f"{key[0].value} {key[1]} feature has dimension {d}, expected {expected}")


def save_records(path, records: Iterable[RawRecord], with_features: bool = True):
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec.to_json(with_features), separators=(",", ":")) + "\n")


def split_modalities(records: Sequence[RawRecord]):
    visual = [r for r in records if r.modality is Modality.VISUAL]
    textual = [r for r in records if r.modality is Modality.TEXTUAL]
    return visual, textual


# ---------------------------------------------------------------- probe cases


@dataclass
class ProbeCase:
    """A query, its true visual match, and a distractor with swapped attribute colours."""

    text: str
    target: RawRecord
    distractor: RawRecord
    swapped: tuple[AttributeCategory, AttributeCategory]

    def to_json(self) -> dict:
        return {"text": self.text, "swapped": [c.key for c in self.swapped],
                "target": self.target.to_json(), "distractor": self.distractor.to_json()}


def load_probe(path) -> list[ProbeCase]:
    cases = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                cases.append(ProbeCase(
                    str(obj["text"]), record_from_json(obj["target"]),
                    record_from_json(obj["distractor"]),
                    tuple(AttributeCategory.from_key(k) for k in obj["swapped"])))
            except (ValueError, KeyError, TypeError) as e:
                raise DataError(f"{path}:{lineno}: {e}") from None
    return cases


def save_probe(path, cases: Iterable[ProbeCase]):
    with open(path, "w", encoding="utf-8") as f:
        for case in cases:
            f.write(json.dumps(case.to_json(), separators=(",", ":")) + "\n")


# ---------------------------------------------------------------- generator


class InvalidSpec(ValueError):
    pass


@dataclass(frozen=True)
class SyntheticSpec:
    n_identities: int = 50
    values_per_category: int = 8
    noise_sigma: float = 0.1
    records_per_identity: int = 3
    d_in: int = 32
    seed: int = 7
    val_fraction: float = 0.4
    seg_height: int = 8
    seg_width: int = 4
    with_seg: bool = True
    bag_prob: float = 0.5
    mention_prob: float = 0.8
    n_probe: int = 200

    def validate(self):
        if self.n_identities < 2:
            raise InvalidSpec("need at least 2 identities")
        if not 1 <= self.values_per_category < self.n_identities:
            raise InvalidSpec("values_per_category must be in [1, n_identities)")
        for key, words in vocab.GARMENTS.items():
            if self.values_per_category > len(words) * len(vocab.COLORS):
                raise InvalidSpec(f"not enough distinct {key} values")
        if self.noise_sigma < 0 or self.records_per_identity < 1 or self.d_in < 1:
            raise InvalidSpec("noise_sigma >= 0, records_per_identity >= 1, d_in >= 1 required")
        if not 0.0 < self.val_fraction < 1.0:
            raise InvalidSpec("val_fraction must be in (0, 1)")
        n_val = self.n_val_identities
        if n_val < 2 or self.n_identities - n_val < 2:
            raise InvalidSpec("train and val splits need at least 2 identities each")
        if self.with_seg and (self.seg_height < 5 or self.seg_width < 2):
            raise InvalidSpec("seg grid must be at least 5x2")

    @property
    def n_val_identities(self) -> int:
        return int(round(self.n_identities * self.val_fraction))

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticSpec":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidSpec(f"unknown spec fields: {sorted(unknown)}")
        return cls(**d)


_TEMPLATES = (
    "a {person} wearing {phrases}",
    "the {person} is wearing {phrases}",
    "a {person} in {phrases}",
    "this {person} has {phrases}",
)


@dataclass
class _World:
    """Latent appearance model: shared colour codes, per-category garment codes."""

    spec: SyntheticSpec
    color_codes: dict[str, np.ndarray]
    garment_codes: dict[str, np.ndarray]
    mixers: dict[AttributeCategory, np.ndarray]
    background: np.ndarray

    def attr_feature(self, value: tuple[str, str], rng) -> np.ndarray:
        color, garment = value
        clean = self.color_codes[color] + self.garment_codes[garment]
        return clean + self.spec.noise_sigma * rng.standard_normal(self.spec.d_in)

    def visual_record(self, pid: int, values: dict, rng, with_seg: bool = True) -> RawRecord:
        attrs = {c: self.attr_feature(v, rng) for c, v in sorted(values.items())}
        # holistic feature: entangled mixture of all attribute regions
        glob = sum(self.mixers[c] @ a for c, a in attrs.items()) / np.sqrt(len(CATEGORIES))
        glob = glob + self.spec.noise_sigma * rng.standard_normal(self.spec.d_in)
        rec = RawRecord(pid, Modality.VISUAL, glob, attrs,
                        labels={c: f"{v[0]} {v[1]}" for c, v in values.items()})
        if self.spec.with_seg and with_seg:
            rec.seg_labels, rec.seg_cells = self.seg_grid(values, rng)
        return rec

    def seg_grid(self, values: dict, rng):
        H, W, d = self.spec.seg_height, self.spec.seg_width, self.spec.d_in
        labels = np.zeros((H, W), dtype=int)
        # rows: head | upper | lower | shoes, bags hang off the right column
        bounds = np.linspace(0, H, 5).round().astype(int)
        shift = rng.integers(-1, 2, size=3) if H >= 8 else np.zeros(3, dtype=int)
        b = [0, bounds[1] + shift[0], bounds[2] + shift[1], bounds[3] + shift[2], H]
        order = (AttributeCategory.HEAD, AttributeCategory.UPPER_BODY,
                 AttributeCategory.LOWER_BODY, AttributeCategory.SHOES)
        for cat, lo, hi in zip(order, b[:-1], b[1:]):
            if cat in values:
                cols = slice(1, W - 1) if cat is AttributeCategory.HEAD else slice(0, W - 1)
                labels[lo:hi, cols] = int(cat) + 1
        if AttributeCategory.BAGS in values:
            labels[b[1]:b[3], W - 1] = int(AttributeCategory.BAGS) + 1
        cells = self.background + self.spec.noise_sigma * rng.standard_normal((H, W, d))
        for cat, v in values.items():
            mask = labels == int(cat) + 1
            clean = self.color_codes[v[0]] + self.garment_codes[v[1]]
            cells[mask] = clean + self.spec.noise_sigma * rng.standard_normal((mask.sum(), d))
        return labels, cells

    def describe(self, values: dict, rng, must_mention: Sequence[AttributeCategory] = ()) -> str:
        mentioned = []
        for c, (color, garment) in sorted(values.items()):
            if c in must_mention or c in (AttributeCategory.UPPER_BODY, AttributeCategory.LOWER_BODY) \
                    or rng.random() < self.spec.mention_prob:
                mentioned.append(f"{color} {garment}")
        rng.shuffle(mentioned)
        if len(mentioned) > 1:
            phrases = ", ".join(mentioned[:-1]) + " and " + mentioned[-1]
        else:
            phrases = mentioned[0]
        template = _TEMPLATES[rng.integers(len(_TEMPLATES))]
        person = vocab.PERSON_NOUNS[rng.integers(len(vocab.PERSON_NOUNS))]
        return template.format(person=person, phrases=phrases)


def _make_world(spec: SyntheticSpec, rng) -> tuple[_World, dict]:
    d = spec.d_in
    color_codes = {c: rng.standard_normal(d) for c in vocab.COLORS}
    garment_codes = {g: rng.standard_normal(d) for words in vocab.GARMENTS.values() for g in words}
    mixers = {c: np.linalg.qr(rng.standard_normal((d, d)))[0] for c in CATEGORIES}
    background = rng.standard_normal(d)
    vocabulary = {}
    for c in CATEGORIES:
        combos = [(col, g) for col in vocab.COLORS for g in vocab.GARMENTS[c.key]]
        picks = rng.choice(len(combos), size=spec.values_per_category, replace=False)
        vocabulary[c] = [combos[i] for i in sorted(picks)]
    return _World(spec, color_codes, garment_codes, mixers, background), vocabulary


def gen_synthetic(spec: SyntheticSpec, res: Optional[LanguageResources] = None):
    """Generate (train, val, probe) for a spec; deterministic in ``spec.seed``.

    Identities draw one value per category from a shared vocabulary, so
    distinct identities share attributes. Visual attribute features are colour
    plus garment codes with gaussian noise; the global visual feature is a
    fixed random mixture of the attribute features. Textual records are
    template sentences naming the attribute values.
    """
    spec.validate()
    res = res or default_resources()
    rng = np.random.default_rng(spec.seed)
    world, vocabulary = _make_world(spec, rng)

    identities = []
    for pid in range(spec.n_identities):
        values = {}
        for c in CATEGORIES:
            if c is AttributeCategory.BAGS and rng.random() >= spec.bag_prob:
                continue
            values[c] = vocabulary[c][rng.integers(spec.values_per_category)]
        identities.append(values)

    n_train = spec.n_identities - spec.n_val_identities
    train, val = [], []
    for pid, values in enumerate(identities):
        out = train if pid < n_train else val
        for _ in range(spec.records_per_identity):
            out.append(world.visual_record(pid, values, rng))
            text = world.describe(values, rng)
            glob, attrs = text_features(text, res)
            out.append(RawRecord(pid, Modality.TEXTUAL, glob, attrs, text=text,
                                 labels={c: f"{v[0]} {v[1]}" for c, v in values.items()}))

    probe = []
    val_ids = list(range(n_train, spec.n_identities))
    while len(probe) < spec.n_probe:
        pid = val_ids[rng.integers(len(val_ids))]
        values = identities[pid]
        cats = [c for c in values]
        a, b = (cats[i] for i in sorted(rng.choice(len(cats), size=2, replace=False)))
        if values[a][0] == values[b][0]:
            continue
        swapped = dict(values)
        swapped[a] = (values[b][0], values[a][1])
        swapped[b] = (values[a][0], values[b][1])
        text = world.describe(values, rng, must_mention=(a, b))
        target = world.visual_record(pid, values, rng, with_seg=False)
        distractor = world.visual_record(pid, swapped, rng, with_seg=False)
        probe.append(ProbeCase(text, target, distractor, (a, b)))
    return train, val, probe


def write_dataset(out_dir, spec: SyntheticSpec):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    train, val, probe = gen_synthetic(spec)
    save_records(out / "train.jsonl", train, with_features=False)
    save_records(out / "val.jsonl", val, with_features=False)
    save_probe(out / "probe.jsonl", probe)
    with open(out / "spec.json", "w", encoding="utf-8") as f:
        json.dump(asdict(spec), f, indent=2, sort_keys=True)
        f.write("\n")
    return out


def load_dataset(data_dir, res: Optional[LanguageResources] = None, theta: float = DEFAULT_THETA):
    """Load ``train.jsonl`` and ``val.jsonl`` (and ``probe.jsonl`` if present)."""
    data_dir = Path(data_dir)
    train = load_records(data_dir / "train.jsonl", res, theta)
    val = load_records(data_dir / "val.jsonl", res, theta)
    probe_path = data_dir / "probe.jsonl"
    probe = load_probe(probe_path) if probe_path.exists() else []
    return train, val, probe
