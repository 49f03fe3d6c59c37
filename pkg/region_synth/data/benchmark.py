"""
Synthetic seen/unseen region-feature benchmark.

Class means are a noisy linear function of the class semantic vectors, so a model that
learns w -> f on seen classes can transfer to unseen ones. Features are rectified
Gaussians around the means, proposals are jittered copies of the training features and
background rows are low-magnitude, class-agnostic noise.
"""

import torch
from sklearn.linear_model import Ridge

from region_synth.data.data_models import Benchmark, BenchmarkConfig, ClassSpec, FeatureBatch
from region_synth.errors import ConfigError


def _class_features(spec: ClassSpec, count: int, gen: torch.Generator) -> torch.Tensor:
    noise = torch.randn(count, spec.mean.shape[0], generator=gen, dtype=torch.float64)
    return (spec.mean + spec.cov_scale * noise).clamp_min(0.0)


def _stack(parts: list[torch.Tensor], labels: list[torch.Tensor]) -> FeatureBatch:
    return FeatureBatch(features=torch.cat(parts), labels=torch.cat(labels))


def generate_benchmark(
    cfg: BenchmarkConfig,
    seed: int | None = None,
    seen_ids: list[int] | None = None,
    unseen_ids: list[int] | None = None,
) -> Benchmark:
    seed = cfg.seed if seed is None else seed
    seen_ids = list(range(cfg.num_seen)) if seen_ids is None else list(seen_ids)
    unseen_ids = (
        list(range(cfg.num_seen, cfg.num_seen + cfg.num_unseen))
        if unseen_ids is None
        else list(unseen_ids)
    )
    all_ids = seen_ids + unseen_ids
    if len(set(all_ids)) != len(all_ids) or any(c < 0 for c in all_ids):
        raise ConfigError(f"class ids must be distinct and non-negative: seen {seen_ids}, unseen {unseen_ids}")
    if len(seen_ids) < 2 or len(unseen_ids) < 1:
        raise ConfigError("need at least 2 seen classes and 1 unseen class")

    gen = torch.Generator().manual_seed(seed)
    semantic = torch.randn(len(all_ids), cfg.d_w, generator=gen, dtype=torch.float64)
    if cfg.normalize_semantic:
        semantic = semantic / torch.linalg.vector_norm(semantic, dim=1, keepdim=True)
    mapping = torch.randn(cfg.d_f, cfg.d_w, generator=gen, dtype=torch.float64)
    mapping *= cfg.mean_map_scale / cfg.d_w**0.5
    mean_noise = torch.randn(len(all_ids), cfg.d_f, generator=gen, dtype=torch.float64)
    means = (semantic @ mapping.T + cfg.mean_offset + cfg.semantic_noise * mean_noise).clamp_min(0.0)

    specs = [
        ClassSpec(
            class_id=cid,
            semantic=semantic[k],
            mean=means[k],
            cov_scale=cfg.cov_scale,
            train_count=cfg.samples_per_class_train if cid in seen_ids else 0,
            test_count=cfg.samples_per_class_test,
        )
        for k, cid in enumerate(all_ids)
    ]
    seen = specs[: len(seen_ids)]
    unseen = specs[len(seen_ids) :]

    train_parts, train_labels = [], []
    for spec in seen:
        train_parts.append(_class_features(spec, spec.train_count, gen))
        train_labels.append(torch.full((spec.train_count,), spec.class_id, dtype=torch.long))
    seen_train = _stack(train_parts, train_labels)

    jitter_std = cfg.jitter_ratio * cfg.cov_scale
    proposal_parts, proposal_labels = [], []
    for _ in range(cfg.proposals_per_sample):
        jitter = torch.randn(seen_train.features.shape, generator=gen, dtype=torch.float64).abs()
        proposal_parts.append(seen_train.features + jitter_std * jitter)
        proposal_labels.append(seen_train.labels)
    proposals = _stack(proposal_parts, proposal_labels)

    background = torch.randn(cfg.background_count, cfg.d_f, generator=gen, dtype=torch.float64).abs()
    background = FeatureBatch(features=cfg.background_scale * background)

    def test_split(group: list[ClassSpec]) -> FeatureBatch:
        parts = [_class_features(s, s.test_count, gen) for s in group]
        labels = [torch.full((s.test_count,), s.class_id, dtype=torch.long) for s in group]
        return _stack(parts, labels)

    return Benchmark(
        seen=seen,
        unseen=unseen,
        seen_train=seen_train,
        proposals=proposals,
        background=background,
        seen_test=test_split(seen),
        unseen_test=test_split(unseen),
    )


def ridge_transfer_cosine(benchmark: Benchmark, alpha: float = 1e-3) -> float:
    """
    Fit a ridge map from semantic vectors to class means on the seen classes and report
    the mean cosine similarity between predicted and actual unseen-class means.
    """
    seen_w = torch.stack([c.semantic for c in benchmark.seen]).numpy()
    seen_mu = torch.stack([c.mean for c in benchmark.seen]).numpy()
    model = Ridge(alpha=alpha).fit(seen_w, seen_mu)
    predicted = torch.from_numpy(model.predict(torch.stack([c.semantic for c in benchmark.unseen]).numpy()))
    actual = torch.stack([c.mean for c in benchmark.unseen])
    return float(torch.nn.functional.cosine_similarity(predicted, actual, dim=1).mean())
