"""Built-in desk-scale learners and their training loops."""

from .checkpoint import load_into_model, load_params, save_model, save_params
from .models import ConvSegmenter, LinearSoftmax, LossHeadModel, ReluMLP, softmax
from .objectives import (
    consistency_loss_and_grads,
    consistency_targets,
    cross_entropy_from_logits,
    l2_penalty,
    pair_ranking_loss_and_grads,
    per_sample_cross_entropy,
    pixel_loss_and_grads,
    sharpen,
    supervised_loss_and_grads,
)
from .predict import predict_bundle, predict_segmentation
from .scoremaps import entropy_map_from_probs
from .train import (
    CONSTANT,
    COSINE,
    GAUSSIAN_NOISE,
    INPUT_DROPOUT,
    EnsembleConfig,
    SSLConfig,
    TrainConfig,
    accuracy,
    cosine_lr,
    train_ensemble,
    train_loss_head,
    train_ssl,
    train_supervised,
)

__all__ = [
    "CONSTANT",
    "COSINE",
    "ConvSegmenter",
    "EnsembleConfig",
    "GAUSSIAN_NOISE",
    "INPUT_DROPOUT",
    "LinearSoftmax",
    "LossHeadModel",
    "ReluMLP",
    "SSLConfig",
    "TrainConfig",
    "accuracy",
    "consistency_loss_and_grads",
    "consistency_targets",
    "cosine_lr",
    "cross_entropy_from_logits",
    "entropy_map_from_probs",
    "l2_penalty",
    "load_into_model",
    "load_params",
    "pair_ranking_loss_and_grads",
    "per_sample_cross_entropy",
    "pixel_loss_and_grads",
    "predict_bundle",
    "predict_segmentation",
    "save_model",
    "save_params",
    "sharpen",
    "softmax",
    "supervised_loss_and_grads",
    "train_ensemble",
    "train_loss_head",
    "train_ssl",
    "train_supervised",
]
