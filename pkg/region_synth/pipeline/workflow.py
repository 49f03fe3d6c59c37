import logging
from dataclasses import dataclass

from region_synth.data import Benchmark, FeatureBatch, TrainConfig, TrainingLogRow
from region_synth.model import MergedClassifier, ModelParams
from region_synth.pipeline.classifier_trainer import ClassifierTrainer, merge_classifiers
from region_synth.pipeline.synthesizer_trainer import SynthesizerTrainer, synthesize_unseen


@dataclass
class PipelineResult:
    params: ModelParams
    merged: MergedClassifier
    synthesized: FeatureBatch
    log: list[TrainingLogRow]


def run_pipeline(
    benchmark: Benchmark, cfg: TrainConfig, logger: logging.Logger | None = None
) -> PipelineResult:
    """Seen classifier -> synthesizer -> unseen features -> unseen classifier -> calibrate -> merge."""
    classifiers = ClassifierTrainer(cfg, logger)
    seen_classifier = classifiers.pretrain_seen_classifier(benchmark)
    trained = SynthesizerTrainer(cfg, logger).train(benchmark, seen_classifier)
    synthesized = synthesize_unseen(
        trained.generator,
        benchmark.semantic_vectors(benchmark.unseen_ids),
        cfg.synth_per_class,
        seed=cfg.seed + 2,
    )
    unseen_classifier = classifiers.train_unseen_classifier(synthesized, benchmark.unseen_ids)
    if cfg.calibrate_unseen:
        unseen_classifier = classifiers.calibrate_unseen_classifier(
            seen_classifier, unseen_classifier, benchmark, synthesized
        )
    params = ModelParams(
        generator=trained.generator,
        discriminator=trained.discriminator,
        seen_classifier=seen_classifier,
        unseen_classifier=unseen_classifier,
    )
    return PipelineResult(
        params=params,
        merged=merge_classifiers(seen_classifier, unseen_classifier),
        synthesized=synthesized,
        log=trained.log,
    )
