#!/usr/bin/env python3
"""Regenerate the shipped lexicon, attribute dictionary and word-vector file.

Word vectors are synthetic: each garment word sits close to a per-category
direction, every other word is a random unit vector. Output is deterministic.

    python scripts/make_resources.py [--out src/attralign/data] [--dim 300]
"""
import argparse
from pathlib import Path

import numpy as np

from attralign import vocab

CATEGORY_WEIGHT = 0.9


def build_vectors(dim: int, seed: int) -> dict[str, np.ndarray]:
    rng = np.random.default_rng(seed)
    n_cat = len(vocab.GARMENTS)
    q, _ = np.linalg.qr(rng.standard_normal((dim, n_cat)))
    cat_dirs = q.T

    def unit():
        v = rng.standard_normal(dim)
        return v / np.linalg.norm(v)

    vectors = {}
    for ci, words in enumerate(vocab.GARMENTS.values()):
        for w in words:
            vectors[w] = CATEGORY_WEIGHT * cat_dirs[ci] + np.sqrt(1 - CATEGORY_WEIGHT**2) * unit()
    rest = (vocab.COLORS + vocab.OTHER_ADJECTIVES + vocab.PERSON_NOUNS
            + vocab.VERBS + vocab.STOPWORDS)
    for w in rest:
        vectors[w] = unit()
    return vectors


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "src/attralign/data"))
    ap.add_argument("--dim", type=int, default=300)
    ap.add_argument("--seed", type=int, default=2020)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    vectors = build_vectors(args.dim, args.seed)
    with open(out / "wordvecs.txt", "w", encoding="utf-8") as f:
        f.write(f"d_w {args.dim}\n")
        for w, v in vectors.items():
            f.write(w + " " + " ".join(f"{x:.6f}" for x in v) + "\n")

    with open(out / "dictionary.txt", "w", encoding="utf-8") as f:
        for key, words in vocab.GARMENTS.items():
            f.write(f"[{key}]\n")
            f.writelines(w + "\n" for w in words)
            f.write("\n")

    with open(out / "lexicon.txt", "w", encoding="utf-8") as f:
        for w in vocab.COLORS + vocab.OTHER_ADJECTIVES:
            f.write(f"{w} adj\n")
        for words in vocab.GARMENTS.values():
            for w in words:
                f.write(f"{w} noun\n")
        for w in vocab.PERSON_NOUNS:
            f.write(f"{w} noun\n")
        for w in vocab.VERBS:
            f.write(f"{w} verb\n")
        for w in vocab.STOPWORDS:
            f.write(f"{w} stop\n")
    print(f"wrote {len(vectors)} vectors (d_w={args.dim}) to {out}")


if __name__ == "__main__":
    main()
