from region_synth.model.checkpoint import CHECKPOINT_VERSION, load_checkpoint, save_checkpoint
from region_synth.model.networks import (
    ConditionalCritic,
    ConditionalGenerator,
    LinearClassifier,
    MergedClassifier,
    classifier_forward,
    discriminator_forward,
    generator_forward,
    seen_classifier_ids,
)
from region_synth.model.params import ModelParams, init_params, reset_parameters

__all__ = [
    "CHECKPOINT_VERSION",
    "ConditionalCritic",
    "ConditionalGenerator",
    "LinearClassifier",
    "MergedClassifier",
    "ModelParams",
    "classifier_forward",
    "discriminator_forward",
    "generator_forward",
    "init_params",
    "load_checkpoint",
    "reset_parameters",
    "save_checkpoint",
    "seen_classifier_ids",
]
