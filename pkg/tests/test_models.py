"""Vocabulary, encoding, training, prediction, persistence, gradients."""

from __future__ import annotations

from collections import Counter

import numpy as np
import pytest

from citeclass.balance import LossConfig
from citeclass.corpus import SENTIMENT_SCHEME
from citeclass.errors import (
    ConfigError,
    ModelIntegrityError,
    ModelVersionError,
    TrainingDivergedError,
)
from citeclass.models import (
    ModelConfig,
    PAD_ID,
    UNK_ID,
    build_network,
    build_vocab,
    encode,
    encode_batch,
    finite_difference_check,
    load_model,
    predict,
    save_model,
    train,
)
from citeclass.synthetic import keyword_rule_labels, make_separable_corpus
from citeclass.text import tokenize

from conftest import corpus_from_pairs

TINY = dict(embedding_dim=12, max_seq_len=14, dropout=0.2, seed=1)


def tiny_cnn(**overrides):
    merged = {**TINY, "layers": 2, "filters": 8, "conv_widths": (2, 3), **overrides}
    return ModelConfig("cnn", **merged)


# --- vocabulary ------------------------------------------------------------------


def test_build_vocab_small():
    corpus = corpus_from_pairs([("a b", 0), ("a c", 1)])
    vocab = build_vocab(corpus, min_frequency=1)
    assert len(vocab) == 5  # pad, unk, a, b, c
    assert vocab.id_of("a") == 2  # most frequent first

    strict = build_vocab(corpus, min_frequency=2)
    assert len(strict) == 3
    assert strict.id_of("b") == UNK_ID


def test_build_vocab_matches_recount_oracle():
    corpus = make_separable_corpus(1000, seed=4)
    vocab = build_vocab(corpus)
    recount = Counter()
    for inst in corpus:
        recount.update(tokenize(inst.text.lower()))
    expected = sorted(recount, key=lambda t: (-recount[t], t))
    assert list(vocab.tokens[2:]) == expected


def test_encode_pads_truncates_and_maps_unknowns():
    corpus = corpus_from_pairs([("a b", 0), ("a c", 1)])
    vocab = build_vocab(corpus)
    row = encode("a b", vocab, 4)
    assert row.tolist() == [vocab.id_of("a"), vocab.id_of("b"), PAD_ID, PAD_ID]

    unknown = encode("zz yy", vocab, 3)
    assert unknown.tolist() == [UNK_ID, UNK_ID, PAD_ID]

    long_text = " ".join(f"t{i}" for i in range(300))
    row = encode(long_text, vocab, 256)
    assert row.shape == (256,)
    assert np.all(row == UNK_ID)  # prefix preserved, none of these in vocab

    ids, lengths = encode_batch(["a b", "a"], vocab, 4)
    assert lengths.tolist() == [2, 1]


# --- configuration -----------------------------------------------------------------


def test_modelconfig_grid_from_strings():
    grid = ["cnn L3 F100 C3,4,5", "cnn L3 F100 C2,4,6", "cnn L3 F100 C3,3,3",
            "cnn L3 F100 C3,5,7", "cnn L3 F100 C3,7,9",
            "lstm L2 F512", "lstm L4 F512", "lstm L4 F1024", "rnn L2 F512"]
    configs = [ModelConfig.from_string(s) for s in grid]
    assert [c.topology for c in configs[:5]] == ["cnn"] * 5
    assert configs[0].conv_widths == (3, 4, 5)
    assert configs[4].conv_widths == (3, 7, 9)
    assert configs[5].filters == 512 and configs[5].layers == 2
    assert configs[8].topology == "rnn"
    assert configs[1].arch_label() == "L3 F100 C2,4,6"


def test_modelconfig_validation():
    with pytest.raises(ConfigError):
        ModelConfig("cnn", layers=3, conv_widths=(3, 4))  # widths must match layers
    with pytest.raises(ConfigError):
        ModelConfig("cnn", layers=1, conv_widths=(9,), max_seq_len=4)
    with pytest.raises(ConfigError):
        ModelConfig("pretrained")
    with pytest.raises(ConfigError):
        ModelConfig("transformer")


def test_cnn_parameter_count_formula():
    corpus = make_separable_corpus(30, seed=0)
    config = ModelConfig("cnn", layers=3, filters=10, conv_widths=(3, 4, 5), **{
        "embedding_dim": 8, "max_seq_len": 16, "dropout": 0.0, "seed": 0})
    clf, _ = train(config, corpus, epochs=0, seed=0)
    v = len(clf.vocab)
    d, f, k = 8, 10, 3
    expected = v * d
    expected += sum(f * w * d + f for w in (3, 4, 5))     # one filter bank per width
    expected += (3 * f) * k + k                            # dense head over L*F features
    assert clf.parameter_count() == expected


# --- training behavior ---------------------------------------------------------------


def test_zero_epoch_training_returns_initialization():
    corpus = make_separable_corpus(12, seed=0)
    clf, report = train(tiny_cnn(), corpus, epochs=0, seed=0)
    assert report.train_loss == ()
    assert report.val_metric == ()
    assert report.best_epoch is None
    probs, labels = predict(clf, corpus)
    assert probs.shape == (12, 3)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-6)


def test_predict_contracts():
    corpus = make_separable_corpus(24, seed=2)
    clf, _ = train(tiny_cnn(), corpus, epochs=3, seed=5, learning_rate=0.05)
    duplicated = list(corpus) + [corpus[0]]
    probs, labels = predict(clf, duplicated)
    assert probs.shape == (25, 3)
    assert np.all(np.isfinite(probs))
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-6)
    np.testing.assert_array_equal(probs[0], probs[-1])  # identical input, identical row
    assert labels[0] == labels[-1]


def test_seed_determinism():
    corpus = make_separable_corpus(30, seed=1)
    probe = list(corpus)[:10]
    a, _ = train(tiny_cnn(), corpus, epochs=4, seed=9, learning_rate=0.05)
    b, _ = train(tiny_cnn(), corpus, epochs=4, seed=9, learning_rate=0.05)
    probs_a, _ = predict(a, probe)
    probs_b, _ = predict(b, probe)
    np.testing.assert_allclose(probs_a, probs_b, atol=1e-6)
    assert np.array_equal(probs_a, probs_b)  # same ops, bit-identical


def test_different_seed_changes_model():
    corpus = make_separable_corpus(30, seed=1)
    a, _ = train(tiny_cnn(), corpus, epochs=2, seed=1, learning_rate=0.05)
    b, _ = train(tiny_cnn(), corpus, epochs=2, seed=2, learning_rate=0.05)
    probs_a, _ = predict(a, list(corpus)[:10])
    probs_b, _ = predict(b, list(corpus)[:10])
    assert not np.array_equal(probs_a, probs_b)


@pytest.mark.parametrize("topology,kwargs", [
    ("cnn", {"layers": 2, "filters": 8, "conv_widths": (2, 3)}),
    ("lstm", {"layers": 1, "filters": 12}),
    ("rnn", {"layers": 1, "filters": 12}),
])
def test_each_topology_learns_separable_set(topology, kwargs):
    corpus = make_separable_corpus(60, seed=3)
    rule = keyword_rule_labels(corpus)
    gold = [inst.label for inst in corpus]
    assert rule == gold  # the construction is verifiable by a bag-of-words rule
    config = ModelConfig(topology, **{**TINY, **kwargs})
    clf, report = train(config, corpus, epochs=40, seed=7, learning_rate=0.05, batch_size=16)
    _, predicted = predict(clf, corpus)
    accuracy = float(np.mean(np.asarray(predicted) == np.asarray(gold)))
    assert accuracy >= 0.95
    assert len(report.train_loss) == report.epochs_run


def test_early_stopping_restores_best_epoch():
    corpus = make_separable_corpus(60, seed=6)
    train_part = corpus.select(range(0, 45), name="tr")
    val_part = corpus.select(range(45, 60), name="va")
    clf, report = train(
        tiny_cnn(), train_part, val_part,
        epochs=30, seed=3, patience=3, learning_rate=0.05,
    )
    assert report.best_epoch is not None
    assert report.best_epoch < report.epochs_run
    assert len(report.val_metric) == report.epochs_run
    assert max(report.val_metric) == report.val_metric[report.best_epoch]


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_training_divergence_aborts_with_diagnostic():
    # the softmax shift and probability floor keep moderate blowups finite,
    # so force genuine overflow in the weight products
    corpus = make_separable_corpus(20, seed=0)
    with pytest.raises(TrainingDivergedError, match="epoch"):
        train(tiny_cnn(), corpus, epochs=10, seed=0, learning_rate=1e200)


# --- strategies --------------------------------------------------------------------


@pytest.mark.parametrize("strategy", ["focal", "class_weights", "upsample", "smote"])
def test_strategies_run_and_learn(strategy):
    corpus = make_separable_corpus(60, seed=5, class_fractions=(0.5, 0.2, 0.3))
    clf, _ = train(
        tiny_cnn(), corpus, strategy=strategy,
        epochs=25, seed=11, learning_rate=0.05, batch_size=16, smote_k=3,
    )
    gold = [inst.label for inst in corpus]
    _, predicted = predict(clf, corpus)
    assert float(np.mean(np.asarray(predicted) == np.asarray(gold))) >= 0.9


def test_unknown_strategy_rejected():
    corpus = make_separable_corpus(12, seed=0)
    with pytest.raises(ConfigError, match="strategy"):
        train(tiny_cnn(), corpus, strategy="oversample", epochs=1, seed=0)


# --- gradient checks ------------------------------------------------------------------


@pytest.mark.parametrize("topology,kwargs", [
    ("cnn", {"layers": 3, "filters": 5, "conv_widths": (2, 3, 4)}),
    ("lstm", {"layers": 2, "filters": 7}),
    ("rnn", {"layers": 2, "filters": 7}),
])
@pytest.mark.parametrize("loss", [
    LossConfig("cross_entropy"),
    LossConfig("focal", gamma=2.0),
    LossConfig("weighted_cross_entropy", class_weights=(1.5, 2.5, 0.4)),
])
def test_gradients_match_finite_differences(topology, kwargs, loss):
    corpus = make_separable_corpus(8, seed=3)
    vocab = build_vocab(corpus)
    config = ModelConfig(topology, embedding_dim=6, max_seq_len=12, dropout=0.0, seed=1, **kwargs)
    network = build_network(config, len(vocab), 3)
    params = network.init_params(np.random.Generator(np.random.PCG64(2)))
    ids, lengths = encode_batch([inst.text for inst in corpus], vocab, 12)
    labels = np.asarray([inst.label for inst in corpus])
    worst = finite_difference_check(network, params, ids, lengths, labels, loss,
                                    sample_fraction=0.02, seed=0)
    assert worst <= 1e-3


# --- persistence ------------------------------------------------------------------------


def test_save_load_round_trip_bitwise(tmp_path):
    corpus = make_separable_corpus(40, seed=8)
    clf, _ = train(tiny_cnn(), corpus, epochs=3, seed=2, learning_rate=0.05)
    probe = list(corpus)[:32]
    path = tmp_path / "model.npz"
    save_model(clf, path)
    loaded = load_model(path)
    probs_orig, labels_orig = predict(clf, probe)
    probs_back, labels_back = predict(loaded, probe)
    assert np.array_equal(probs_orig, probs_back)
    assert labels_orig == labels_back
    assert loaded.config == clf.config
    assert loaded.vocab.tokens == clf.vocab.tokens


def test_load_corrupted_file_is_integrity_error(tmp_path):
    corpus = make_separable_corpus(12, seed=1)
    clf, _ = train(tiny_cnn(), corpus, epochs=1, seed=1)
    path = tmp_path / "model.npz"
    save_model(clf, path)
    raw = bytearray(path.read_bytes())
    raw[len(raw) // 2] ^= 0xFF  # flip one byte in the middle
    path.write_bytes(bytes(raw))
    with pytest.raises((ModelIntegrityError,)):
        load_model(path)
    garbage = tmp_path / "junk.npz"
    garbage.write_bytes(b"not a model at all")
    with pytest.raises(ModelIntegrityError):
        load_model(garbage)


def test_load_older_schema_is_version_error(tmp_path):
    import json

    path = tmp_path / "old.npz"
    meta = json.dumps({"schema_version": 0, "kind": "baseline"}).encode()
    with path.open("wb") as fh:
        np.savez_compressed(fh, __meta__=np.frombuffer(meta, dtype=np.uint8))
    with pytest.raises(ModelVersionError, match="schema version 0"):
        load_model(path)
