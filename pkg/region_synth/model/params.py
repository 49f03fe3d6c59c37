from dataclasses import dataclass

import torch
from torch import nn

from region_synth.data import ModelDims
from region_synth.model.networks import (
    ConditionalCritic,
    ConditionalGenerator,
    LinearClassifier,
    MergedClassifier,
    seen_classifier_ids,
)


@dataclass
class ModelParams:
    generator: ConditionalGenerator
    discriminator: ConditionalCritic
    seen_classifier: LinearClassifier
    unseen_classifier: LinearClassifier

    def modules(self) -> list[nn.Module]:
        return [self.generator, self.discriminator, self.seen_classifier, self.unseen_classifier]

    def merged(self) -> MergedClassifier:
        return MergedClassifier(self.seen_classifier, self.unseen_classifier)


def reset_parameters(module: nn.Module, std: float, generator: torch.Generator) -> None:
    """Weights ~ N(0, std^2), biases 0, drawn in module registration order."""
    with torch.no_grad():
        for layer in module.modules():
            if isinstance(layer, nn.Linear):
                layer.weight.normal_(0.0, std, generator=generator)
                if layer.bias is not None:
                    layer.bias.zero_()


def init_params(
    dims: ModelDims,
    seen_ids: list[int],
    unseen_ids: list[int],
    seed: int,
    dtype: torch.dtype = torch.float64,
) -> ModelParams:
    gen = torch.Generator().manual_seed(seed)
    params = ModelParams(
        generator=ConditionalGenerator(dims, dtype=dtype),
        discriminator=ConditionalCritic(dims, dtype=dtype),
        seen_classifier=LinearClassifier(dims.d_f, seen_classifier_ids(seen_ids), dtype=dtype),
        unseen_classifier=LinearClassifier(dims.d_f, list(unseen_ids), dtype=dtype),
    )
    for module in params.modules():
        reset_parameters(module, dims.init_std, gen)
    return params
