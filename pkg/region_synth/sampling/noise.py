"""
Query / positive / negative noise vectors for the intra-class diverging loss.

Positives stay within ``radius`` of the query in every coordinate; negatives are standard
normal draws that differ from the query by more than ``radius`` in every coordinate.
"""

import torch

from region_synth.data import NoisePairConfig, NoiseTriplet
from region_synth.errors import SamplingInfeasibleError

REJECTION_CAP_PER_NEGATIVE = 1000


def sample_query(
    cfg: NoisePairConfig, rng: torch.Generator, count: int = 1, dtype: torch.dtype = torch.float64
) -> torch.Tensor:
    return torch.randn(count, cfg.d_z, generator=rng, dtype=dtype)


def sample_positive(z: torch.Tensor, cfg: NoisePairConfig, rng: torch.Generator) -> torch.Tensor:
    rho = (torch.rand(z.shape, generator=rng, dtype=z.dtype) * 2.0 - 1.0) * cfg.radius
    return z + rho


def outside_radius(candidates: torch.Tensor, z: torch.Tensor, radius: float) -> torch.Tensor:
    """True where a candidate differs from its query by more than ``radius`` on every coordinate."""
    return ((candidates - z.unsqueeze(-2)).abs() > radius).all(dim=-1)


def sample_negatives(z: torch.Tensor, cfg: NoisePairConfig, rng: torch.Generator) -> torch.Tensor:
    """
    Negatives for one query ``(d_z,)`` -> ``(N, d_z)``, or for a batch ``(B, d_z)`` ->
    ``(B, N, d_z)``.

    All slots are drawn at once; rejected slots are redrawn together, in row-major slot
    order, until every slot holds an accepted candidate.
    """
    if z.dim() == 1:
        return sample_negatives(z.unsqueeze(0), cfg, rng)[0]
    shape = (z.shape[0], cfg.num_negatives, z.shape[1])
    negatives = torch.randn(shape, generator=rng, dtype=z.dtype)
    rejected = ~outside_radius(negatives, z, cfg.radius)
    rounds = 0
    while bool(rejected.any()):
        rounds += 1
        if rounds >= REJECTION_CAP_PER_NEGATIVE:
            raise SamplingInfeasibleError(
                f"{int(rejected.sum())} negatives still rejected after {rounds} redraws "
                f"(radius={cfg.radius}, d_z={z.shape[1]}); radius is too large"
            )
        rows, slots = rejected.nonzero(as_tuple=True)
        redraw = torch.randn(rows.numel(), shape[2], generator=rng, dtype=z.dtype)
        negatives[rows, slots] = redraw
        rejected[rows, slots] = ~((redraw - z[rows]).abs() > cfg.radius).all(dim=-1)
    return negatives


def sample_triplets(
    count: int, cfg: NoisePairConfig, rng: torch.Generator, dtype: torch.dtype = torch.float64
) -> NoiseTriplet:
    query = sample_query(cfg, rng, count, dtype=dtype)
    return NoiseTriplet(
        query=query,
        positive=sample_positive(query, cfg, rng),
        negatives=sample_negatives(query, cfg, rng),
    )
