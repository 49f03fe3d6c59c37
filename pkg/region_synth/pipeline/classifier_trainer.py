import logging

import torch
import torch.nn.functional as F

from region_synth.data import BACKGROUND, Benchmark, ClassifierTrainConfig, FeatureBatch, TrainConfig
from region_synth.errors import ContractError
from region_synth.model import LinearClassifier, MergedClassifier, reset_parameters, seen_classifier_ids
from region_synth.pipeline.pipeline_base import PipelineBase


class ClassifierTrainer(PipelineBase):
    """
    Softmax cross-entropy training of a linear classifier.

    Trains until train accuracy has not improved for ``patience`` epochs, reaches 100%,
    or the epoch cap is hit. Shuffling uses a generator seeded from the config, so the
    result is a pure function of (features, labels, config).
    """

    def __init__(self, config: TrainConfig, logger: logging.Logger | None = None):
        super().__init__(config, logger)
        self.cls_config: ClassifierTrainConfig = config.classifier

    def fit(
        self,
        classifier: LinearClassifier | MergedClassifier,
        batch: FeatureBatch,
        name: str,
        seed: int,
        reset: bool = True,
    ) -> float:
        """Train the parameters of ``classifier`` that require grad; the rest stay fixed."""
        cfg = self.cls_config
        features = batch.features.to(self.config.dtype)
        targets = classifier.label_index(batch.labels)
        gen = torch.Generator().manual_seed(seed)
        if reset:
            reset_parameters(classifier, self.config.dims.init_std, gen)
        trainable = [p for p in classifier.parameters() if p.requires_grad]
        if not trainable:
            raise ContractError(f"{name} has no trainable parameters")
        optimizer = torch.optim.Adam(trainable, lr=cfg.lr)

        best_acc, stale, acc = -1.0, 0, 0.0
        for epoch in range(cfg.epochs):
            order = torch.randperm(features.shape[0], generator=gen)
            total_loss = 0.0
            for start in range(0, features.shape[0], cfg.batch_size):
                idx = order[start : start + cfg.batch_size]
                loss = F.cross_entropy(classifier(features[idx]), targets[idx])
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()
                total_loss += float(loss.detach()) * idx.numel()
            with torch.no_grad():
                acc = float((classifier(features).argmax(dim=1) == targets).double().mean()) * 100.0
            self.logger.debug(
                f"{name} epoch {epoch}: loss={total_loss / features.shape[0]:.6f} train_acc={acc:.2f}"
            )
            if acc > best_acc:
                best_acc, stale = acc, 0
            else:
                stale += 1
            if acc >= 100.0 or stale >= cfg.patience:
                break
        self.logger.info(f"{name} trained: train accuracy {acc:.2f}%")
        return acc

    def pretrain_seen_classifier(self, benchmark: Benchmark) -> LinearClassifier:
        labels = benchmark.seen_train.labels
        if labels is None or torch.unique(labels).numel() < 2:
            raise ContractError("the seen classifier needs training features from at least 2 classes")
        background = benchmark.background.features
        batch = FeatureBatch(
            features=torch.cat([benchmark.seen_train.features, background]),
            labels=torch.cat([labels, torch.full((background.shape[0],), BACKGROUND, dtype=torch.long)]),
        )
        classifier = LinearClassifier(
            benchmark.d_f, seen_classifier_ids(benchmark.seen_ids), dtype=self.config.dtype
        )
        self.fit(classifier, batch, "seen classifier", seed=self.cls_config.seed)
        return classifier.freeze()

    def train_unseen_classifier(
        self, synth_batch: FeatureBatch, unseen_ids: list[int] | None = None
    ) -> LinearClassifier:
        if synth_batch.labels is None or len(synth_batch) == 0:
            raise ContractError("the unseen classifier needs labelled synthesized features")
        present = sorted(set(synth_batch.labels.tolist()))
        class_ids = present if unseen_ids is None else list(unseen_ids)
        missing = [c for c in class_ids if c not in present]
        if missing:
            raise ContractError(f"no synthesized features for unseen classes {missing}")
        extra = [c for c in present if c not in class_ids]
        if extra:
            raise ContractError(f"synthesized features carry classes {extra} outside the unseen set")
        classifier = LinearClassifier(synth_batch.d_f, class_ids, dtype=self.config.dtype)
        self.fit(classifier, synth_batch, "unseen classifier", seed=self.cls_config.seed + 1)
        return classifier.freeze()

    def calibrate_unseen_classifier(
        self,
        seen_classifier: LinearClassifier,
        unseen_classifier: LinearClassifier,
        benchmark: Benchmark,
        synth_batch: FeatureBatch,
    ) -> LinearClassifier:
        """
        Fine-tune the unseen block inside the merged softmax.

        The batch is the real seen training features, the background rows and the
        synthesized unseen features, scored against every merged column. Only the unseen
        block moves; the seen block stays frozen, so its logits are unchanged.
        """
        if any(p.requires_grad for p in seen_classifier.parameters()):
            raise ContractError("the seen classifier must be trained and frozen first")
        background = benchmark.background.features
        batch = FeatureBatch(
            features=torch.cat([benchmark.seen_train.features, background, synth_batch.features.to(background.dtype)]),
            labels=torch.cat(
                [
                    benchmark.seen_train.labels,
                    torch.full((background.shape[0],), BACKGROUND, dtype=torch.long),
                    synth_batch.labels,
                ]
            ),
        )
        merged = MergedClassifier(seen_classifier, unseen_classifier)
        unseen_classifier.requires_grad_(True)
        try:
            self.fit(merged, batch, "unseen calibration", seed=self.cls_config.seed + 3, reset=False)
        finally:
            unseen_classifier.freeze()
        return unseen_classifier


def pretrain_seen_classifier(
    benchmark: Benchmark, cfg: TrainConfig, logger: logging.Logger | None = None
) -> LinearClassifier:
    return ClassifierTrainer(cfg, logger).pretrain_seen_classifier(benchmark)


def train_unseen_classifier(
    synth_batch: FeatureBatch,
    cfg: TrainConfig,
    unseen_ids: list[int] | None = None,
    logger: logging.Logger | None = None,
) -> LinearClassifier:
    return ClassifierTrainer(cfg, logger).train_unseen_classifier(synth_batch, unseen_ids)


def merge_classifiers(seen: LinearClassifier, unseen: LinearClassifier) -> MergedClassifier:
    return MergedClassifier(seen, unseen)


def calibrate_unseen_classifier(
    seen_classifier: LinearClassifier,
    unseen_classifier: LinearClassifier,
    benchmark: Benchmark,
    synth_batch: FeatureBatch,
    cfg: TrainConfig,
    logger: logging.Logger | None = None,
) -> LinearClassifier:
    return ClassifierTrainer(cfg, logger).calibrate_unseen_classifier(
        seen_classifier, unseen_classifier, benchmark, synth_batch
    )
