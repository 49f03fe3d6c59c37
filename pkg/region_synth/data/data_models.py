from dataclasses import dataclass, field
from enum import Enum

import torch

from region_synth.errors import ConfigError

BACKGROUND = -1


class Origin(str, Enum):
    SYNTH = "synth"
    REAL_PROPOSAL = "real_proposal"
    BACKGROUND = "background"
    REAL = "real"


class EvalMode(str, Enum):
    ZSD = "zsd"
    GZSD = "gzsd"

    @classmethod
    def parse(cls, value: "str | EvalMode") -> "EvalMode":
        if isinstance(value, EvalMode):
            return value
        try:
            return cls(str(value).lower())
        except ValueError as e:
            raise ConfigError(f"invalid mode {value!r}, expected 'zsd' or 'gzsd'") from e


@dataclass
class BenchmarkConfig:
    num_seen: int = 8
    num_unseen: int = 3
    d_f: int = 32
    d_w: int = 4
    samples_per_class_train: int = 200
    samples_per_class_test: int = 100
    cov_scale: float = 0.25
    mean_offset: float = 1.5
    mean_map_scale: float = 1.0
    semantic_noise: float = 0.05
    background_count: int = 400
    background_scale: float = 0.1
    jitter_ratio: float = 0.2
    proposals_per_sample: int = 1
    normalize_semantic: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.num_seen < 2:
            raise ConfigError("data.num_seen must be >= 2")
        if self.num_unseen < 1:
            raise ConfigError("data.num_unseen must be >= 1")
        if self.d_f < 2 or self.d_w < 2:
            raise ConfigError("data.d_f and data.d_w must be >= 2")
        if self.cov_scale <= 0:
            raise ConfigError("data.cov_scale must be > 0")
        if min(self.samples_per_class_train, self.samples_per_class_test) < 1:
            raise ConfigError("per-class sample counts must be >= 1")

    @classmethod
    def from_config(cls, config) -> "BenchmarkConfig":
        return cls(**dict(config.data))


@dataclass
class ModelDims:
    d_f: int
    d_w: int
    d_z: int = 32
    hidden_g: int = 256
    hidden_d: int = 256
    leaky_slope: float = 0.2
    init_std: float = 0.02

    def __post_init__(self):
        if min(self.d_f, self.d_w, self.d_z, self.hidden_g, self.hidden_d) < 1:
            raise ConfigError("model dimensions must be positive")
        if not 0.0 < self.leaky_slope < 1.0:
            raise ConfigError("model.leaky_slope must lie in (0, 1)")

    @classmethod
    def from_config(cls, config) -> "ModelDims":
        return cls(d_f=config.data.d_f, d_w=config.data.d_w, **dict(config.model))


@dataclass
class LossWeights:
    gp_weight: float = 10.0
    lambda1: float = 0.01
    lambda2: float = 0.001
    lambda3: float = 0.001
    tau: float = 0.1

    def __post_init__(self):
        if min(self.gp_weight, self.lambda1, self.lambda2, self.lambda3) < 0:
            raise ConfigError("loss weights must be >= 0")
        if self.tau <= 0:
            raise ConfigError("loss.tau must be > 0")

    @classmethod
    def from_config(cls, config) -> "LossWeights":
        return cls(**dict(config.loss))


@dataclass
class NoisePairConfig:
    radius: float = 1e-6
    num_negatives: int = 10
    d_z: int = 32

    def __post_init__(self):
        if self.radius <= 0:
            raise ConfigError("sample.radius must be > 0")
        if self.num_negatives < 1:
            raise ConfigError("sample.num_negatives must be >= 1")

    @classmethod
    def from_config(cls, config) -> "NoisePairConfig":
        return cls(d_z=config.model.d_z, **dict(config.sample))


@dataclass
class OptimizerConfig:
    lr: float = 1e-4
    beta1: float = 0.5
    beta2: float = 0.999


@dataclass
class ClassifierTrainConfig:
    epochs: int = 50
    lr: float = 1e-3
    batch_size: int = 64
    patience: int = 5
    seed: int = 0

    @classmethod
    def from_config(cls, config) -> "ClassifierTrainConfig":
        return cls(
            epochs=config.train.classifier_epochs,
            lr=config.train.classifier_lr,
            batch_size=config.train.classifier_batch_size,
            patience=config.train.classifier_patience,
            seed=config.train.seed,
        )


@dataclass
class TrainConfig:
    dims: ModelDims
    weights: LossWeights = field(default_factory=LossWeights)
    noise: NoisePairConfig = field(default_factory=NoisePairConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    classifier: ClassifierTrainConfig = field(default_factory=ClassifierTrainConfig)
    epochs: int = 40
    batch_size: int = 64
    critic_steps: int = 5
    synth_per_class: int = 500
    # "hybrid": synthesized + real proposals + background; "synth": synthesized only
    pool_mode: str = "hybrid"
    # fine-tune the unseen block against the frozen seen block in the merged softmax
    calibrate_unseen: bool = True
    dtype: torch.dtype = torch.float64
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0:
            raise ConfigError("train.epochs must be >= 0")
        if min(self.batch_size, self.critic_steps, self.synth_per_class) < 1:
            raise ConfigError("train counts must be >= 1")
        if self.pool_mode not in ("hybrid", "synth"):
            raise ConfigError(f"train.pool_mode must be 'hybrid' or 'synth', got {self.pool_mode!r}")

    @classmethod
    def from_config(cls, config) -> "TrainConfig":
        return cls(
            dims=ModelDims.from_config(config),
            weights=LossWeights.from_config(config),
            noise=NoisePairConfig.from_config(config),
            optimizer=OptimizerConfig(
                lr=config.train.lr, beta1=config.train.beta1, beta2=config.train.beta2
            ),
            classifier=ClassifierTrainConfig.from_config(config),
            epochs=config.train.epochs,
            batch_size=config.train.batch_size,
            critic_steps=config.train.critic_steps,
            synth_per_class=config.train.synth_per_class,
            pool_mode=config.train.pool_mode,
            calibrate_unseen=config.train.calibrate_unseen,
            dtype=resolve_dtype(config.numerics.dtype),
            seed=config.train.seed,
        )


def resolve_dtype(name: str) -> torch.dtype:
    if name in ("float64", "double"):
        return torch.float64
    if name in ("float32", "float"):
        return torch.float32
    raise ConfigError(f"numerics.dtype must be float64 or float32, got {name!r}")


@dataclass
class ClassSpec:
    class_id: int
    semantic: torch.Tensor
    mean: torch.Tensor
    cov_scale: float
    train_count: int
    test_count: int


@dataclass
class FeatureBatch:
    features: torch.Tensor
    labels: torch.Tensor | None = None

    def __post_init__(self):
        if self.features.dim() != 2:
            raise ValueError("features must be a 2-D (count x d_f) tensor")
        if self.labels is not None and self.labels.shape != (self.features.shape[0],):
            raise ValueError("labels must have one entry per feature row")

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def d_f(self) -> int:
        return self.features.shape[1]


@dataclass
class Benchmark:
    seen: list[ClassSpec]
    unseen: list[ClassSpec]
    seen_train: FeatureBatch
    proposals: FeatureBatch
    background: FeatureBatch
    seen_test: FeatureBatch
    unseen_test: FeatureBatch

    @property
    def seen_ids(self) -> list[int]:
        return [c.class_id for c in self.seen]

    @property
    def unseen_ids(self) -> list[int]:
        return [c.class_id for c in self.unseen]

    @property
    def d_f(self) -> int:
        return self.seen_train.d_f

    def semantic_vectors(self, class_ids: list[int] | None = None) -> dict[int, torch.Tensor]:
        specs = {c.class_id: c.semantic for c in self.seen + self.unseen}
        if class_ids is None:
            return specs
        return {cid: specs[cid] for cid in class_ids}


@dataclass
class NoiseTriplet:
    query: torch.Tensor
    positive: torch.Tensor
    negatives: torch.Tensor


@dataclass
class TrainingLogRow:
    epoch: int
    critic_loss: float
    adv: float
    l_cs: float
    l_sd: float
    l_sp: float
    total: float
    wasserstein: float = 0.0


@dataclass
class EvalReport:
    mode: EvalMode
    per_class_accuracy: dict[int, float]
    unseen_accuracy: float
    zsd_accuracy: float
    seen_accuracy: float | None = None
    harmonic_mean: float | None = None
    # (true class, predicted class) -> count; predictions may be BACKGROUND
    confusion: dict[tuple[int, int], int] = field(default_factory=dict)
