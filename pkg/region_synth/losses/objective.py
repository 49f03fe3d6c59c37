from dataclasses import dataclass

import torch

from region_synth.data import LossWeights


@dataclass
class GeneratorLossParts:
    adv: torch.Tensor
    l_cs: torch.Tensor
    l_sd: torch.Tensor
    l_sp: torch.Tensor


def total_generator_objective(parts: GeneratorLossParts, weights: LossWeights) -> torch.Tensor:
    return (
        parts.adv
        + weights.lambda1 * parts.l_cs
        + weights.lambda2 * parts.l_sd
        + weights.lambda3 * parts.l_sp
    )
