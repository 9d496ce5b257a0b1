#!/usr/bin/env python3
"""Upper-body attribute retrieval: query each garment phrase against the val gallery.

For every distinct upper-body label in the val split (e.g. "red shirt") the
phrase is parsed, embedded by the textual attribute encoder, and matched
against the visual upper-body embeddings. Two relevance rules are reported:
the exact label, and the colour alone.

    python scripts/attribute_retrieval.py [--ckpt model.json] [--data DIR]

Without --ckpt the fixture config is trained first (about half a minute).
"""
import argparse
import json
from pathlib import Path

import numpy as np

from attralign.core import AttributeCategory
from attralign.data import SyntheticSpec, gen_synthetic, load_dataset
from attralign.evaluate import attribute_retrieve
from attralign.trainer import Checkpoint, fit, load_config

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
CATEGORY = AttributeCategory.UPPER_BODY


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ckpt", help="trained checkpoint (default: train the fixture config)")
    ap.add_argument("--data", help="dataset directory (default: generate the fixture)")
    args = ap.parse_args()

    if args.data:
        train, val, _ = load_dataset(args.data)
    else:
        spec = SyntheticSpec.from_dict(json.loads((CONFIGS / "fixture_spec.json").read_text()))
        train, val, _ = gen_synthetic(spec)
    model = Checkpoint.load(args.ckpt).model if args.ckpt else fit(train, val, load_config(CONFIGS / "fixture.json")).checkpoint.model

    gallery = [r for r in val if r.modality.value == "visual"]
    labels = sorted({r.labels[CATEGORY] for r in gallery if CATEGORY in r.labels})
    print(f"{'query':20s} {'targets':>7s} {'R@1':>5s} {'mAP':>6s} | colour: {'R@1':>5s} {'mAP':>6s}")
    exact, colour = [], []
    for label in labels:
        a = attribute_retrieve(label, gallery, model, CATEGORY)
        b = attribute_retrieve(label, gallery, model, CATEGORY, relevant_label=label.split()[0])
        exact.append((a.recall_at_1, a.mean_ap))
        colour.append((b.recall_at_1, b.mean_ap))
        print(f"{label:20s} {a.n_targets:7d} {a.recall_at_1:5.2f} {a.mean_ap:6.3f} | "
              f"colour: {b.recall_at_1:5.2f} {b.mean_ap:6.3f}")
    e, c = np.mean(exact, axis=0), np.mean(colour, axis=0)
    print(f"{'mean':20s} {'':7s} {e[0]:5.2f} {e[1]:6.3f} | colour: {c[0]:5.2f} {c[1]:6.3f}")


if __name__ == "__main__":
    main()
