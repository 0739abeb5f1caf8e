"""Classifier topologies, training, prediction, and persistence."""

from .network import Adam, LSTMNet, RNNNet, TextCNN, finite_difference_check, parameter_count
from .serialize import load_model, save_model
from .train import (
    Classifier,
    ModelConfig,
    TrainReport,
    build_network,
    mean_embedding_features,
    predict,
    train,
)
from .vocab import PAD_ID, UNK_ID, Vocabulary, build_vocab, encode, encode_batch

__all__ = [
    "Adam",
    "Classifier",
    "LSTMNet",
    "ModelConfig",
    "PAD_ID",
    "RNNNet",
    "TextCNN",
    "TrainReport",
    "UNK_ID",
    "Vocabulary",
    "build_network",
    "build_vocab",
    "encode",
    "encode_batch",
    "finite_difference_check",
    "load_model",
    "mean_embedding_features",
    "parameter_count",
    "predict",
    "save_model",
    "train",
]
