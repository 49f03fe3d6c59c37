from dataclasses import dataclass

import torch

from region_synth.errors import ContractError, DimensionError
from region_synth.model import ConditionalCritic
from region_synth.numerics import Tape, input_grad_norms


@dataclass
class CriticLossOutput:
    wasserstein: torch.Tensor
    penalty: torch.Tensor
    total: torch.Tensor


def _require_batch(*tensors: torch.Tensor) -> None:
    if any(t.shape[0] == 0 for t in tensors):
        raise ContractError("empty batch")


def critic_loss_terms(
    D: ConditionalCritic,
    f_real: torch.Tensor,
    f_fake: torch.Tensor,
    w: torch.Tensor,
    gp_weight: float,
    tape: Tape,
    rng: torch.Generator | None = None,
) -> CriticLossOutput:
    """
    The critic's objective, split into its parts.

    ``total = -(mean D(real) - mean D(fake)) + gp_weight * mean (||grad_f D(f_hat)|| - 1)^2``
    with ``f_hat`` a per-sample U[0, 1] mix of the real and fake rows.
    """
    _require_batch(f_real, f_fake)
    if f_real.shape != f_fake.shape:
        raise DimensionError(f"real {tuple(f_real.shape)} and fake {tuple(f_fake.shape)} batches differ")
    wasserstein = D(f_real, w).mean() - D(f_fake, w).mean()

    mu = torch.rand(f_real.shape[0], 1, generator=rng, dtype=f_real.dtype)
    f_hat = tape.watch((mu * f_real + (1.0 - mu) * f_fake).detach())
    norms = input_grad_norms(tape, D(f_hat, w).sum(), f_hat)
    penalty = ((norms - 1.0) ** 2).mean()
    return CriticLossOutput(
        wasserstein=wasserstein,
        penalty=penalty,
        total=-wasserstein + gp_weight * penalty,
    )


def critic_loss(
    D: ConditionalCritic,
    f_real: torch.Tensor,
    f_fake: torch.Tensor,
    w: torch.Tensor,
    gp_weight: float,
    tape: Tape,
    rng: torch.Generator | None = None,
) -> torch.Tensor:
    return critic_loss_terms(D, f_real, f_fake, w, gp_weight, tape, rng).total


def generator_adv_loss(D: ConditionalCritic, f_fake: torch.Tensor, w: torch.Tensor) -> torch.Tensor:
    _require_batch(f_fake)
    return -D(f_fake, w).mean()
