"""Seeded partitioning: fixed ratio, stratified k-fold, downsampling."""

from __future__ import annotations

import csv

import numpy as np
import pytest

from citeclass.corpus import SENTIMENT_SCHEME
from citeclass.errors import StratificationError
from citeclass.splits import (
    SplitPlan,
    balance_downsample,
    export_fixed_csv,
    export_kfold_csv,
    fixed_split,
    kfold,
    largest_remainder_allocation,
)

from conftest import corpus_from_counts

RAW_COUNTS = (829, 280, 7627)      # raw sentiment corpus
CLEAN_COUNTS = (728, 253, 6999)    # after cleansing


def test_split_plan_validation():
    SplitPlan("fixed_ratio", ratio=0.7)
    SplitPlan("kfold", k=10)
    with pytest.raises(ValueError):
        SplitPlan("fixed_ratio", ratio=1.2)
    with pytest.raises(ValueError):
        SplitPlan("kfold", k=1)
    with pytest.raises(ValueError):
        SplitPlan("sideways")


def test_largest_remainder_on_raw_counts():
    # 0.7 * (829, 280, 7627): exact seats 580.3, 196.0, 5338.9
    assert largest_remainder_allocation(RAW_COUNTS, 0.7) == [580, 196, 5339]
    assert sum(largest_remainder_allocation(RAW_COUNTS, 0.7)) == round(0.7 * sum(RAW_COUNTS))


def test_fixed_split_on_raw_sized_corpus():
    corpus = corpus_from_counts(RAW_COUNTS)
    train, test = fixed_split(corpus, 0.7, seed=11)
    assert len(train) == 6115 and len(test) == 2621
    assert train.class_counts() == (580, 196, 5339)
    for train_c, total_c in zip(train.class_counts(), RAW_COUNTS):
        assert abs(train_c - 0.7 * total_c) < 1.0


def test_fixed_split_single_class_ratio():
    corpus = corpus_from_counts((10, 0, 0))
    train, test = fixed_split(corpus, 0.7, seed=1, stratified=False)
    assert len(train) == 7 and len(test) == 3


def test_fixed_split_deterministic():
    corpus = corpus_from_counts((40, 25, 35))
    a_train, a_test = fixed_split(corpus, 0.7, seed=5)
    b_train, b_test = fixed_split(corpus, 0.7, seed=5)
    assert [i.id for i in a_train] == [i.id for i in b_train]
    assert [i.id for i in a_test] == [i.id for i in b_test]


def test_fixed_split_partitions_corpus():
    corpus = corpus_from_counts((13, 17, 29))
    train, test = fixed_split(corpus, 0.6, seed=3)
    train_ids = {i.id for i in train}
    test_ids = {i.id for i in test}
    assert train_ids.isdisjoint(test_ids)
    assert train_ids | test_ids == {inst.id for inst in corpus}


def test_fixed_split_stratified_needs_every_class():
    corpus = corpus_from_counts((5, 0, 5))
    with pytest.raises(StratificationError, match="negative"):
        fixed_split(corpus, 0.7, seed=0)


def test_kfold_fold_sizes_on_clean_counts():
    corpus = corpus_from_counts(CLEAN_COUNTS)
    assignments = kfold(corpus, 10, seed=7)
    assert len(assignments) == 10
    negative_sizes = []
    for a in assignments:
        test = a.test_corpus(corpus)
        for count, total in zip(test.class_counts(), CLEAN_COUNTS):
            assert count in (total // 10, total // 10 + 1)
        negative_sizes.append(test.class_counts()[1])
    # 253 = 10 * 25 + 3: exactly three folds carry the extra negative
    assert sorted(negative_sizes) == [25] * 7 + [26] * 3


def test_kfold_partitions_corpus():
    corpus = corpus_from_counts((30, 40, 50))
    assignments = kfold(corpus, 5, seed=0)
    seen = []
    all_ids = {inst.id for inst in corpus}
    for a in assignments:
        assert set(a.train_ids) == all_ids - set(a.test_ids)
        seen.extend(a.test_ids)
    assert len(seen) == len(all_ids)
    assert set(seen) == all_ids


def test_kfold_one_instance_per_fold():
    corpus = corpus_from_counts((10, 0, 0))
    # single-populated-class corpus still stratifies if every class with
    # members has >= k of them; empty classes cannot be stratified
    with pytest.raises(StratificationError):
        kfold(corpus, 10, seed=0)
    single_scheme_corpus = corpus_from_counts((10,), scheme=_one_class_scheme())
    assignments = kfold(single_scheme_corpus, 10, seed=0)
    assert all(len(a.test_ids) == 1 for a in assignments)


def _one_class_scheme():
    from citeclass.corpus import LabelScheme

    return LabelScheme("single", ("only",))


def test_kfold_error_names_offending_class():
    corpus = corpus_from_counts((20, 5, 20))
    with pytest.raises(StratificationError, match="negative"):
        kfold(corpus, 10, seed=0)


def test_kfold_determinism_and_seed_sensitivity():
    corpus = corpus_from_counts((400, 300, 300))
    a = kfold(corpus, 10, seed=1)
    b = kfold(corpus, 10, seed=1)
    c = kfold(corpus, 10, seed=2)
    assert [x.test_ids for x in a] == [x.test_ids for x in b]
    assert [x.test_ids for x in a] != [x.test_ids for x in c]


def test_balance_downsample_basic():
    corpus = corpus_from_counts((10, 4, 20))
    balanced = balance_downsample(corpus, seed=3)
    assert balanced.class_counts() == (4, 4, 4)
    original_ids = {inst.id for inst in corpus}
    assert all(inst.id in original_ids for inst in balanced)


def test_balance_downsample_identity_when_balanced():
    corpus = corpus_from_counts((5, 5, 5))
    assert balance_downsample(corpus, seed=9) is corpus


def test_balance_downsample_per_fold_negative_arithmetic():
    corpus = corpus_from_counts(CLEAN_COUNTS)
    for a in kfold(corpus, 10, seed=21)[:3]:
        train = a.train_corpus(corpus)
        fold_negative_test = a.test_corpus(corpus).class_counts()[1]
        expected = CLEAN_COUNTS[1] - fold_negative_test
        balanced = balance_downsample(train, seed=21)
        assert balanced.class_counts() == (expected, expected, expected)


def test_balance_downsample_is_submultiset_and_seeded():
    corpus = corpus_from_counts((50, 10, 30))
    one = balance_downsample(corpus, seed=4)
    two = balance_downsample(corpus, seed=4)
    other = balance_downsample(corpus, seed=5)
    assert [i.id for i in one] == [i.id for i in two]
    assert [i.id for i in one] != [i.id for i in other]
    assert one.class_counts() == (10, 10, 10)


def test_assignment_csv_exports(tmp_path):
    corpus = corpus_from_counts((12, 12, 12))
    train, test = fixed_split(corpus, 0.75, seed=0)
    fixed_path = tmp_path / "split.csv"
    export_fixed_csv(train, test, fixed_path)
    with open(fixed_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 36
    assert {r["tag"] for r in rows} == {"train", "test"}

    folds_path = tmp_path / "folds.csv"
    export_kfold_csv(kfold(corpus, 4, seed=0), folds_path)
    with open(folds_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 36
    assert {r["fold"] for r in rows} == {"0", "1", "2", "3"}
