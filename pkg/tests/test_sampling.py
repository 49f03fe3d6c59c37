import math

import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from region_synth.data import NoisePairConfig
from region_synth.errors import SamplingInfeasibleError
from region_synth.sampling import (
    outside_radius,
    sample_negatives,
    sample_positive,
    sample_query,
    sample_triplets,
)


@pytest.mark.parametrize("radius", [1e-6, 1e-4])
def test_ten_thousand_triplets_respect_the_radius(radius):
    cfg = NoisePairConfig(radius=radius, num_negatives=10, d_z=32)
    triplets = sample_triplets(10_000, cfg, torch.Generator().manual_seed(0))
    q = triplets.query
    assert bool(((triplets.positive - q).abs() <= radius).all())
    assert bool(((triplets.negatives - q.unsqueeze(1)).abs() > radius).all())


def test_shapes():
    cfg = NoisePairConfig(radius=0.01, num_negatives=4, d_z=6)
    gen = torch.Generator().manual_seed(1)
    triplets = sample_triplets(3, cfg, gen)
    assert triplets.query.shape == (3, 6)
    assert triplets.positive.shape == (3, 6)
    assert triplets.negatives.shape == (3, 4, 6)
    assert sample_negatives(sample_query(cfg, gen)[0], cfg, gen).shape == (4, 6)


def test_same_seed_same_triplets():
    cfg = NoisePairConfig(radius=1e-3, num_negatives=5, d_z=8)
    a = sample_triplets(20, cfg, torch.Generator().manual_seed(9))
    b = sample_triplets(20, cfg, torch.Generator().manual_seed(9))
    assert torch.equal(a.query, b.query)
    assert torch.equal(a.positive, b.positive)
    assert torch.equal(a.negatives, b.negatives)


def test_positive_is_within_radius_but_not_identical():
    cfg = NoisePairConfig(radius=0.1, num_negatives=1, d_z=16)
    gen = torch.Generator().manual_seed(2)
    z = sample_query(cfg, gen, count=100)
    p = sample_positive(z, cfg, gen)
    assert bool(((p - z).abs() <= 0.1).all())
    assert not torch.equal(p, z)


def test_infeasible_radius_raises():
    cfg = NoisePairConfig(radius=10.0, num_negatives=2, d_z=32)
    with pytest.raises(SamplingInfeasibleError):
        sample_triplets(1, cfg, torch.Generator().manual_seed(0))


@settings(max_examples=30, deadline=None)
@given(radius=st.floats(min_value=1e-6, max_value=0.3), seed=st.integers(0, 2**31 - 1))
def test_bounds_hold_for_any_radius(radius, seed):
    cfg = NoisePairConfig(radius=radius, num_negatives=3, d_z=4)
    triplets = sample_triplets(8, cfg, torch.Generator().manual_seed(seed))
    q = triplets.query
    assert bool(((triplets.positive - q).abs() <= radius * (1 + 1e-12) + 1e-15).all())
    assert bool(((triplets.negatives - q.unsqueeze(1)).abs() > radius).all())


def test_query_moments_match_the_standard_normal():
    n, d = 100_000, 4
    z = sample_query(NoisePairConfig(d_z=d), torch.Generator().manual_seed(5), count=n)
    m = z.numel()
    # standard error of the mean is 1/sqrt(m); of the variance sqrt(2/m)
    assert abs(float(z.mean())) < 3 / math.sqrt(m)
    assert abs(float(z.var()) - 1.0) < 3 * math.sqrt(2 / m)


def test_positive_offset_is_centred():
    n, radius = 100_000, 1e-3
    cfg = NoisePairConfig(radius=radius, d_z=4)
    gen = torch.Generator().manual_seed(6)
    z = sample_query(cfg, gen, count=n)
    offset = sample_positive(z, cfg, gen) - z
    # uniform on (-r, r): variance r^2 / 3
    sigma = radius / math.sqrt(3)
    assert abs(float(offset.mean())) < 3 * sigma / math.sqrt(offset.numel())


def test_negative_acceptance_rate_at_small_radius():
    gen = torch.Generator().manual_seed(7)
    z = torch.randn(10_000, 32, generator=gen, dtype=torch.float64)
    candidates = torch.randn(10_000, 10, 32, generator=gen, dtype=torch.float64)
    assert float(outside_radius(candidates, z, 1e-4).double().mean()) > 0.99


def test_single_query_matches_batch_layout():
    cfg = NoisePairConfig(radius=0.05, num_negatives=6, d_z=5)
    z = sample_query(cfg, torch.Generator().manual_seed(8))
    single = sample_negatives(z[0], cfg, torch.Generator().manual_seed(3))
    batch = sample_negatives(z, cfg, torch.Generator().manual_seed(3))
    assert torch.equal(single, batch[0])


def test_rejected_slots_are_redrawn():
    cfg = NoisePairConfig(radius=0.5, num_negatives=8, d_z=2)
    z = torch.zeros(50, 2, dtype=torch.float64)
    negatives = sample_negatives(z, cfg, torch.Generator().manual_seed(0))
    assert negatives.shape == (50, 8, 2)
    assert bool(outside_radius(negatives, z, 0.5).all())
