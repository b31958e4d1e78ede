"""Contrastive objectives, EgoNCE sampling, gradient checks and the toy trainer."""

from .gradcheck import GradientCheckError, gradient_check, numeric_gradient
from .losses import (
    DEFAULT_TAU,
    AugmentedBatch,
    EmbeddingBatch,
    LossResult,
    build_positive_sets,
    ego_nce,
    info_nce,
    l2_normalize,
    mimm_loss,
    mimm_loss_embeddings,
    positive_mask,
)
from .sampling import BatchDraw, NegativeVariant, SceneNegatives, sample_batch, sample_scene_negatives
from .toy import ToyConfig, ToyResult, ToyTrainingError, train_toy
