from region_synth.data.benchmark import generate_benchmark, ridge_transfer_cosine
from region_synth.data.benchmark_store import MANIFEST, load_benchmark, save_benchmark
from region_synth.data.data_models import (
    BACKGROUND,
    Benchmark,
    BenchmarkConfig,
    ClassifierTrainConfig,
    ClassSpec,
    EvalMode,
    EvalReport,
    FeatureBatch,
    LossWeights,
    ModelDims,
    NoisePairConfig,
    NoiseTriplet,
    OptimizerConfig,
    Origin,
    TrainConfig,
    TrainingLogRow,
    resolve_dtype,
)
from region_synth.data.feature_io import (
    load_features,
    load_semantic_vectors,
    load_split,
    save_features,
    save_semantic_vectors,
    save_split,
)

__all__ = [
    "MANIFEST",
    "BACKGROUND",
    "Benchmark",
    "BenchmarkConfig",
    "ClassSpec",
    "ClassifierTrainConfig",
    "EvalMode",
    "EvalReport",
    "FeatureBatch",
    "LossWeights",
    "ModelDims",
    "NoisePairConfig",
    "NoiseTriplet",
    "OptimizerConfig",
    "Origin",
    "TrainConfig",
    "TrainingLogRow",
    "generate_benchmark",
    "load_benchmark",
    "load_features",
    "load_semantic_vectors",
    "load_split",
    "resolve_dtype",
    "ridge_transfer_cosine",
    "save_benchmark",
    "save_features",
    "save_semantic_vectors",
    "save_split",
]
