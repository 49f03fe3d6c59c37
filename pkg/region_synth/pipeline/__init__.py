from region_synth.pipeline.ablation import (
    ABLATION_VARIANTS,
    AblationRow,
    parse_variants,
    run_ablation,
    variant_config,
    write_ablation_csv,
)
from region_synth.pipeline.classifier_trainer import (
    ClassifierTrainer,
    calibrate_unseen_classifier,
    merge_classifiers,
    pretrain_seen_classifier,
    train_unseen_classifier,
)
from region_synth.pipeline.evaluation import evaluate, format_summary, harmonic_mean, write_report_csv
from region_synth.pipeline.gradcheck_suite import (
    GRADIENT_CHECKS,
    GradCheckReport,
    GradCheckResult,
    run_gradcheck_suite,
)
from region_synth.pipeline.pipeline_base import PipelineBase
from region_synth.pipeline.projection import ProjectionExport, export_features
from region_synth.pipeline.run_pool import RunPool, RunPoolConfig, RunPoolResult
from region_synth.pipeline.synthesizer_trainer import (
    LOG_COLUMNS,
    SynthesizerTrainer,
    SynthesizerTrainingOutput,
    synthesize_unseen,
    train_synthesizer,
    write_training_log,
)
from region_synth.pipeline.workflow import PipelineResult, run_pipeline

__all__ = [
    "ABLATION_VARIANTS",
    "GRADIENT_CHECKS",
    "LOG_COLUMNS",
    "AblationRow",
    "ClassifierTrainer",
    "GradCheckReport",
    "GradCheckResult",
    "PipelineBase",
    "PipelineResult",
    "ProjectionExport",
    "RunPool",
    "RunPoolConfig",
    "RunPoolResult",
    "SynthesizerTrainer",
    "SynthesizerTrainingOutput",
    "calibrate_unseen_classifier",
    "evaluate",
    "export_features",
    "format_summary",
    "harmonic_mean",
    "merge_classifiers",
    "parse_variants",
    "pretrain_seen_classifier",
    "run_ablation",
    "run_gradcheck_suite",
    "synthesize_unseen",
    "train_synthesizer",
    "train_unseen_classifier",
    "variant_config",
    "write_ablation_csv",
    "write_report_csv",
    "write_training_log",
]
