import json
from dataclasses import replace

import numpy as np
import pytest

from attralign.core import CATEGORIES, AttributeCategory, Modality
from attralign.data import (DataError, InvalidSpec, SyntheticSpec, gen_synthetic, load_dataset,
                            load_records, record_from_json, split_modalities, text_features,
                            write_dataset)
from attralign.sampler import SamplerInput, k_reciprocal_oracle

SMALL = SyntheticSpec(n_identities=10, records_per_identity=2, n_probe=20, seed=3)


@pytest.fixture(scope="module")
def small():
    return gen_synthetic(SMALL)


def test_shapes_and_split(small):
    train, val, probe = small
    n_val = SMALL.n_val_identities
    assert len(train) == 2 * SMALL.records_per_identity * (SMALL.n_identities - n_val)
    assert len(val) == 2 * SMALL.records_per_identity * n_val
    assert not {r.person_id for r in train} & {r.person_id for r in val}
    assert len(probe) == SMALL.n_probe
    for r in split_modalities(train)[0]:
        assert r.seg_cells.shape == (SMALL.seg_height, SMALL.seg_width, SMALL.d_in)
        assert set(np.unique(r.seg_labels)) <= set(range(6))


def test_zero_noise_shared_values_have_identical_features():
    spec = replace(SMALL, noise_sigma=0.0, n_identities=30, values_per_category=2)
    train, val, _ = gen_synthetic(spec)
    visual = split_modalities(train + val)[0]
    by_label = {}
    for r in visual:
        key = r.labels[AttributeCategory.UPPER_BODY]
        by_label.setdefault(key, []).append(r)
    shared = [rs for rs in by_label.values() if len({r.person_id for r in rs}) > 1]
    assert shared
    for rs in shared:
        for r in rs[1:]:
            np.testing.assert_array_equal(r.attrs[AttributeCategory.UPPER_BODY],
                                          rs[0].attrs[AttributeCategory.UPPER_BODY])


def test_same_seed_byte_identical_files(tmp_path):
    a = write_dataset(tmp_path / "a", SMALL)
    b = write_dataset(tmp_path / "b", SMALL)
    for name in ("train.jsonl", "val.jsonl", "probe.jsonl", "spec.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_textual_records_carry_text_and_parse_at_load(tmp_path, small):
    out = write_dataset(tmp_path / "d", SMALL)
    first_text = next(json.loads(line) for line in (out / "train.jsonl").read_text().splitlines()
                      if json.loads(line)["modality"] == "textual")
    assert "text" in first_text and "global" not in first_text
    train, val, probe = load_dataset(out)
    orig_t = split_modalities(small[0])[1]
    loaded_t = split_modalities(train)[1]
    for a, b in zip(orig_t, loaded_t):
        assert a.text == b.text
        np.testing.assert_allclose(a.global_, b.global_, atol=1e-12)
        assert set(a.attrs) == set(b.attrs)
    assert len(probe) == SMALL.n_probe


def test_probe_cases_swap_colours(small):
    for case in small[2]:
        a, b = case.swapped
        t, d = case.target.labels, case.distractor.labels
        assert sorted(t.values()) != sorted(d.values()) or t != d
        assert t[a].split()[1] == d[a].split()[1] and t[b].split()[1] == d[b].split()[1]
        assert t[a].split()[0] == d[b].split()[0] and t[b].split()[0] == d[a].split()[0]
        # same multiset of colours and garments, arranged differently
        words = lambda lab: sorted(w for v in lab.values() for w in v.split())
        assert words(t) == words(d)
        for c in (a, b):
            assert t[c] in case.text


def test_fixture_has_cross_identity_surrogates():
    """On ground-truth appearance codes, k-reciprocal pairs span identities."""
    train, _, _ = gen_synthetic(SyntheticSpec())
    visual, textual = split_modalities(train)
    found = 0
    for c in CATEGORIES:
        vis = [(i, r.attrs[c]) for i, r in enumerate(visual) if c in r.attrs]
        # a textual item's ground-truth code: the mean appearance of its identity
        codes = {}
        for r in visual:
            if c in r.attrs:
                codes.setdefault(r.person_id, []).append(r.attrs[c])
        txt = [(j, np.mean(codes[r.person_id], axis=0)) for j, r in enumerate(textual)
               if r.person_id in codes and c in r.labels]
        pairs = k_reciprocal_oracle(SamplerInput(vis, txt, 8))
        found += sum(visual[v].person_id != textual[t].person_id for v, ts in pairs.items() for t in ts)
    assert found > 0


@pytest.mark.parametrize("kw", [dict(n_identities=1), dict(values_per_category=50),
                                dict(values_per_category=0), dict(noise_sigma=-1.0),
                                dict(val_fraction=1.0), dict(records_per_identity=0)])
def test_invalid_spec(kw):
    with pytest.raises(InvalidSpec):
        gen_synthetic(replace(SMALL, **kw))


def test_spec_from_dict_rejects_unknown():
    with pytest.raises(InvalidSpec):
        SyntheticSpec.from_dict({"n_ids": 3})


def _write(tmp_path, lines):
    path = tmp_path / "recs.jsonl"
    path.write_text("\n".join(lines) + "\n")
    return path


def test_loader_rejects_bad_lines_with_line_numbers(tmp_path):
    good = json.dumps({"person_id": 0, "modality": "visual", "global": [1.0, 2.0]})
    cases = [
        '{"person_id": 0, "modality": "visual"',
        json.dumps({"person_id": -1, "modality": "visual", "global": [1.0]}),
        json.dumps({"person_id": 1, "modality": "audio", "global": [1.0]}),
        json.dumps({"person_id": 1, "modality": "visual", "global": [1.0, "x"]}),
        json.dumps({"person_id": 1, "modality": "visual", "global": [1.0, 2.0, 3.0]}),
        json.dumps({"person_id": 1, "modality": "visual"}),
        json.dumps({"person_id": 1, "modality": "visual", "global": [1.0, 2.0], "attrs": {"torso": [1.0]}}),
        json.dumps({"person_id": 1, "modality": "textual", "global": [1.0], "seg": {"labels": [[0]], "cells": [[[1.0]]]}}),
        json.dumps({"person_id": 1, "modality": "visual", "global": [1.0, 2.0],
                    "seg": {"labels": [[9]], "cells": [[[1.0]]]}}),
    ]
    for bad in cases:
        with pytest.raises(DataError, match=r"recs.jsonl:2: "):
            load_records(_write(tmp_path, [good, bad, good]))


def test_loader_accepts_precomputed_text_features(tmp_path):
    line = json.dumps({"person_id": 2, "modality": "textual", "text": "ignored words",
                       "global": [0.5, 0.5], "attrs": {"upper": [1.0, 0.0]}})
    (rec,) = load_records(_write(tmp_path, [line]))
    assert rec.modality is Modality.TEXTUAL
    np.testing.assert_array_equal(rec.global_, [0.5, 0.5])
    assert list(rec.attrs) == [AttributeCategory.UPPER_BODY]


def test_text_features_match_parse(resources):
    glob, attrs = text_features("a girl in white shirt and black skirt", resources)
    assert glob.shape == (resources.store.dim,)
    assert set(attrs) == {AttributeCategory.UPPER_BODY, AttributeCategory.LOWER_BODY}
    np.testing.assert_allclose(attrs[AttributeCategory.UPPER_BODY],
                               (resources.store["white"] + resources.store["shirt"]) / 2)


def test_record_json_round_trip(small):
    for rec in small[0][:6]:
        back = record_from_json(json.loads(json.dumps(rec.to_json())))
        np.testing.assert_allclose(back.global_, rec.global_, atol=1e-6)
        assert back.labels == rec.labels and back.modality is rec.modality
