import logging

import pytest
import torch

from region_synth.data import (
    BenchmarkConfig,
    ClassifierTrainConfig,
    LossWeights,
    ModelDims,
    NoisePairConfig,
    TrainConfig,
    generate_benchmark,
)


@pytest.fixture
def silent_logger():
    logger = logging.getLogger("region_synth.tests")
    logger.setLevel(logging.WARNING)
    return logger


@pytest.fixture
def tiny_benchmark_config():
    return BenchmarkConfig(
        num_seen=3,
        num_unseen=2,
        d_f=6,
        d_w=3,
        samples_per_class_train=30,
        samples_per_class_test=20,
        background_count=40,
        seed=7,
    )


@pytest.fixture
def tiny_benchmark(tiny_benchmark_config):
    return generate_benchmark(tiny_benchmark_config)


def make_train_config(d_f: int = 6, d_w: int = 3, **overrides) -> TrainConfig:
    dims = ModelDims(d_f=d_f, d_w=d_w, d_z=4, hidden_g=16, hidden_d=16)
    settings = dict(
        dims=dims,
        weights=LossWeights(),
        noise=NoisePairConfig(radius=1e-6, num_negatives=3, d_z=dims.d_z),
        classifier=ClassifierTrainConfig(epochs=30, lr=1e-2, batch_size=16, patience=5, seed=0),
        epochs=2,
        batch_size=16,
        critic_steps=2,
        synth_per_class=20,
        seed=0,
    )
    settings.update(overrides)
    return TrainConfig(**settings)


@pytest.fixture
def tiny_train_config():
    return make_train_config()


@pytest.fixture
def gen():
    return torch.Generator().manual_seed(1234)


@pytest.fixture
def train_config_factory():
    return make_train_config
