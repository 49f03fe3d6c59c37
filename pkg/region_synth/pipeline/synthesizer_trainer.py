import csv
import logging
import math
from dataclasses import dataclass, field

import torch

from region_synth.data import Benchmark, FeatureBatch, TrainConfig, TrainingLogRow
from region_synth.errors import ContractError, NonFiniteLossError
from region_synth.losses import (
    GeneratorLossParts,
    build_hybrid_pool,
    cls_consistency_loss,
    critic_loss_terms,
    generator_adv_loss,
    inter_sp_loss,
    intra_sd_loss,
    total_generator_objective,
)
from region_synth.model import ConditionalCritic, ConditionalGenerator, LinearClassifier, init_params
from region_synth.numerics import Tape
from region_synth.pipeline.pipeline_base import PipelineBase
from region_synth.sampling import sample_triplets

LOG_COLUMNS = ("epoch", "critic_loss", "adv", "l_cs", "l_sd", "l_sp", "total")


def _nonzero_rows(x: torch.Tensor) -> torch.Tensor:
    return (x.detach() != 0).any(dim=-1)


@dataclass
class SynthesizerTrainingOutput:
    generator: ConditionalGenerator
    discriminator: ConditionalCritic
    log: list[TrainingLogRow] = field(default_factory=list)


class SynthesizerTrainer(PipelineBase):
    """
    Alternating WGAN-GP optimisation of the conditional generator and critic.

    Each generator step is preceded by ``critic_steps`` critic steps on fresh real
    batches. The generator minimises the adversarial term plus the weighted
    classifier-consistency, intra-class diverging and inter-class structure
    preserving terms; noise triplets are drawn per step and the hybrid pool is rebuilt
    per batch from that batch's synthesized rows, an equal number of real proposals and
    an equal number of background rows.
    """

    def __init__(self, config: TrainConfig, logger: logging.Logger | None = None):
        super().__init__(config, logger)
        self.rng = torch.Generator().manual_seed(config.seed + 1)

    def _semantic_table(self, benchmark: Benchmark) -> tuple[torch.Tensor, dict[int, int]]:
        ids = benchmark.seen_ids
        table = torch.stack([benchmark.semantic_vectors()[c] for c in ids]).to(self.config.dtype)
        return table, {c: k for k, c in enumerate(ids)}

    def _real_batch(self, features: torch.Tensor, labels: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        idx = torch.randint(features.shape[0], (self.config.batch_size,), generator=self.rng)
        return features[idx], labels[idx]

    def _check_finite(self, step: int, terms: dict[str, torch.Tensor]) -> None:
        values = {k: float(v.detach()) for k, v in terms.items()}
        if not all(math.isfinite(v) for v in values.values()):
            error = NonFiniteLossError(step, values)
            self.logger.error(str(error))
            raise error

    def critic_step(
        self,
        G: ConditionalGenerator,
        D: ConditionalCritic,
        optimizer: torch.optim.Optimizer,
        f_real: torch.Tensor,
        w: torch.Tensor,
        step: int,
    ) -> tuple[float, float]:
        z = torch.randn(f_real.shape[0], self.config.dims.d_z, generator=self.rng, dtype=self.config.dtype)
        with torch.no_grad():
            f_fake = G(z, w)
        with Tape() as tape:
            out = critic_loss_terms(D, f_real, f_fake, w, self.config.weights.gp_weight, tape, self.rng)
        self._check_finite(step, {"critic_loss": out.total, "wasserstein": out.wasserstein})
        optimizer.zero_grad()
        out.total.backward()
        optimizer.step()
        return float(out.total.detach()), float(out.wasserstein.detach())

    def generator_step(
        self,
        G: ConditionalGenerator,
        D: ConditionalCritic,
        seen_classifier: LinearClassifier,
        optimizer: torch.optim.Optimizer,
        labels: torch.Tensor,
        w: torch.Tensor,
        proposals: FeatureBatch,
        background: torch.Tensor,
        step: int,
    ) -> dict[str, float]:
        cfg = self.config
        weights = cfg.weights
        batch = labels.shape[0]
        triplets = sample_triplets(batch, cfg.noise, self.rng, dtype=cfg.dtype) if weights.lambda2 > 0 else None
        if triplets is not None:
            z = triplets.query
        else:
            z = torch.randn(batch, cfg.dims.d_z, generator=self.rng, dtype=cfg.dtype)
        f_fake = G(z, w)
        zero = f_fake.new_zeros(())
        # all-zero ReLU outputs have no direction; they only drop out of the cosine terms
        usable = _nonzero_rows(f_fake)

        l_sd = zero
        if triplets is not None:
            n = cfg.noise.num_negatives
            f_pos = G(triplets.positive, w)
            f_negs = G(triplets.negatives.reshape(batch * n, -1), w.repeat_interleave(n, dim=0)).reshape(batch, n, -1)
            keep = usable & _nonzero_rows(f_pos) & _nonzero_rows(f_negs).all(dim=1)
            if bool(keep.any()):
                l_sd = intra_sd_loss(f_fake[keep], f_pos[keep], f_negs[keep], weights.tau)

        l_sp = zero
        if weights.lambda3 > 0 and bool(usable.any()):
            real, bg = None, None
            if cfg.pool_mode == "hybrid":
                pick = torch.randint(len(proposals), (batch,), generator=self.rng)
                real = FeatureBatch(features=proposals.features[pick], labels=proposals.labels[pick])
                bg = background[torch.randint(background.shape[0], (batch,), generator=self.rng)]
            queries, query_labels = f_fake[usable], labels[usable]
            pool = build_hybrid_pool(queries, query_labels, real, bg)
            if bool((pool.labels != query_labels[:, None]).any(dim=1).all()):
                l_sp = inter_sp_loss(
                    queries,
                    query_labels,
                    pool,
                    weights.tau,
                    rng=self.rng,
                    query_indices=list(range(queries.shape[0])),
                    logger=self.logger,
                )
            else:
                self.logger.warning(f"step {step}: a class has no different-class pool entries; inter-class term skipped")

        parts = GeneratorLossParts(
            adv=generator_adv_loss(D, f_fake, w),
            l_cs=cls_consistency_loss(seen_classifier, f_fake, labels),
            l_sd=l_sd,
            l_sp=l_sp,
        )
        total = total_generator_objective(parts, weights)
        terms = {"adv": parts.adv, "l_cs": parts.l_cs, "l_sd": parts.l_sd, "l_sp": parts.l_sp, "total": total}
        self._check_finite(step, terms)
        optimizer.zero_grad()
        total.backward()
        optimizer.step()
        return {k: float(v.detach()) for k, v in terms.items()}

    def train(
        self,
        benchmark: Benchmark,
        seen_classifier: LinearClassifier,
        generator: ConditionalGenerator | None = None,
        discriminator: ConditionalCritic | None = None,
    ) -> SynthesizerTrainingOutput:
        cfg = self.config
        if len(benchmark.seen) < 2:
            raise ContractError("training the synthesizer needs at least 2 seen classes")
        if any(p.requires_grad for p in seen_classifier.parameters()):
            raise ContractError("the seen classifier must be trained and frozen first")
        if generator is None or discriminator is None:
            params = init_params(cfg.dims, benchmark.seen_ids, benchmark.unseen_ids, cfg.seed, cfg.dtype)
            generator = generator if generator is not None else params.generator
            discriminator = discriminator if discriminator is not None else params.discriminator
        G, D = generator, discriminator
        output = SynthesizerTrainingOutput(generator=G, discriminator=D)
        if cfg.epochs == 0:
            return output

        semantic, row_of = self._semantic_table(benchmark)
        features = benchmark.seen_train.features.to(cfg.dtype)
        labels = benchmark.seen_train.labels
        label_rows = torch.tensor([row_of[int(y)] for y in labels], dtype=torch.long)
        proposals = FeatureBatch(
            features=benchmark.proposals.features.to(cfg.dtype), labels=benchmark.proposals.labels
        )
        background = benchmark.background.features.to(cfg.dtype)
        if cfg.pool_mode == "hybrid" and (len(proposals) == 0 or background.shape[0] == 0):
            raise ContractError("the hybrid pool needs real proposals and background features")

        betas = (cfg.optimizer.beta1, cfg.optimizer.beta2)
        opt_g = torch.optim.Adam(G.parameters(), lr=cfg.optimizer.lr, betas=betas)
        opt_d = torch.optim.Adam(D.parameters(), lr=cfg.optimizer.lr, betas=betas)
        iterations = math.ceil(features.shape[0] / cfg.batch_size)

        step = 0
        for epoch in range(cfg.epochs):
            sums = dict.fromkeys(("critic_loss", "wasserstein", "adv", "l_cs", "l_sd", "l_sp", "total"), 0.0)
            for _ in range(iterations):
                for _ in range(cfg.critic_steps):
                    f_real, rows = self._real_batch(features, label_rows)
                    critic, gap = self.critic_step(G, D, opt_d, f_real, semantic[rows], step)
                    sums["critic_loss"] += critic / cfg.critic_steps
                    sums["wasserstein"] += gap / cfg.critic_steps
                _, rows = self._real_batch(features, label_rows)
                batch_labels = torch.tensor([benchmark.seen_ids[r] for r in rows.tolist()], dtype=torch.long)
                terms = self.generator_step(
                    G, D, seen_classifier, opt_g, batch_labels, semantic[rows], proposals, background, step
                )
                for key, value in terms.items():
                    sums[key] += value
                step += 1
            row = TrainingLogRow(epoch=epoch, **{k: v / iterations for k, v in sums.items()})
            output.log.append(row)
            self.logger.info(
                f"epoch {epoch}: critic={row.critic_loss:.4f} gap={row.wasserstein:.4f} "
                f"adv={row.adv:.4f} l_cs={row.l_cs:.4f} l_sd={row.l_sd:.4f} "
                f"l_sp={row.l_sp:.4f} total={row.total:.4f}"
            )
        return output


def train_synthesizer(
    benchmark: Benchmark,
    cfg: TrainConfig,
    seen_classifier: LinearClassifier,
    logger: logging.Logger | None = None,
) -> SynthesizerTrainingOutput:
    return SynthesizerTrainer(cfg, logger).train(benchmark, seen_classifier)


def synthesize_unseen(
    G: ConditionalGenerator,
    semantic_vectors: dict[int, torch.Tensor],
    count_per_class: int,
    seed: int,
    class_ids: list[int] | None = None,
) -> FeatureBatch:
    """``count_per_class`` features G(w_c, z) per class, each with fresh noise."""
    if count_per_class < 1:
        raise ContractError(f"count_per_class must be >= 1, got {count_per_class}")
    class_ids = list(semantic_vectors) if class_ids is None else list(class_ids)
    unknown = [c for c in class_ids if c not in semantic_vectors]
    if unknown:
        raise ContractError(f"no semantic vector for class ids {unknown}")
    dtype = G.fc1.weight.dtype
    gen = torch.Generator().manual_seed(seed)
    features, labels = [], []
    with torch.no_grad():
        for class_id in class_ids:
            z = torch.randn(count_per_class, G.dims.d_z, generator=gen, dtype=dtype)
            features.append(G(z, semantic_vectors[class_id].to(dtype)))
            labels.append(torch.full((count_per_class,), class_id, dtype=torch.long))
    return FeatureBatch(features=torch.cat(features), labels=torch.cat(labels))


def write_training_log(rows: list[TrainingLogRow], path: str) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(LOG_COLUMNS)
        for row in rows:
            writer.writerow([row.epoch] + [repr(getattr(row, c)) for c in LOG_COLUMNS[1:]])
