from collections.abc import Iterable

from easydict import EasyDict as edict

from region_synth.data import (
    Benchmark,
    BenchmarkConfig,
    EvalMode,
    EvalReport,
    FeatureBatch,
    TrainConfig,
    generate_benchmark,
)
from region_synth.errors import ContractError
from region_synth.pipeline import (
    AblationRow,
    PipelineBase,
    PipelineResult,
    evaluate,
    parse_variants,
    run_ablation,
    run_pipeline,
    synthesize_unseen,
)
from region_synth.utils import ExperimentLogger, load_config, override_config


class RegionFeatureSynthesizer(PipelineBase):
    """
    The whole system behind one object.

    This class:
      1) builds the run configuration (packaged defaults, profile, file, overrides)
      2) owns the logger shared by every stage
      3) runs benchmark generation, training, synthesis, evaluation and ablations
    """

    def __init__(
        self,
        input_config: dict | None = None,
        config_path: str | None = None,
        overrides: Iterable[str] = (),
        log_path: str = "",
    ):
        self.raw_config = self.load_config(input_config, config_path, overrides)
        logger = ExperimentLogger("region_synth", log_path=log_path, logger_level=self.raw_config.logger_level)
        super().__init__(TrainConfig.from_config(self.raw_config), logger)
        self.benchmark_config = BenchmarkConfig.from_config(self.raw_config)
        self.result: PipelineResult | None = None

    def load_config(
        self, input_config: dict | None, config_path: str | None, overrides: Iterable[str]
    ) -> edict:
        """
        Merge the configuration layers.

        Args:
            input_config (dict): nested values applied last, e.g. ``{"train": {"epochs": 2}}``.
                A ``train.profile`` given here selects the preset before any explicit value.
            config_path (str): flat ``key=value`` file.
            overrides (Iterable[str]): ``key=value`` strings applied after the file.
        """
        profile = (input_config or {}).get("train", {}).get("profile")
        selection = [f"train.profile={profile}"] if profile else []
        config = load_config(config_path, list(overrides) + selection)
        if input_config:
            config = override_config(config, edict(input_config))
        return config

    def generate_benchmark(self, seed: int | None = None) -> Benchmark:
        benchmark = generate_benchmark(self.benchmark_config, seed=seed)
        self.logger.info(
            f"benchmark: {len(benchmark.seen)} seen / {len(benchmark.unseen)} unseen classes, "
            f"{len(benchmark.seen_train)} train, {len(benchmark.proposals)} proposals, "
            f"{len(benchmark.background)} background rows"
        )
        return benchmark

    def fit(self, benchmark: Benchmark) -> PipelineResult:
        self.result = run_pipeline(benchmark, self.config, self.logger)
        return self.result

    def _fitted(self) -> PipelineResult:
        if self.result is None:
            raise ContractError("call fit() first")
        return self.result

    def synthesize(self, benchmark: Benchmark, count_per_class: int | None = None, seed: int | None = None) -> FeatureBatch:
        return synthesize_unseen(
            self._fitted().params.generator,
            benchmark.semantic_vectors(benchmark.unseen_ids),
            count_per_class or self.config.synth_per_class,
            seed=self.config.seed + 2 if seed is None else seed,
        )

    def evaluate(self, benchmark: Benchmark, mode: EvalMode | str | None = None) -> EvalReport:
        report = evaluate(self._fitted().merged, benchmark, mode or self.raw_config.eval.mode)
        self.logger.info(
            f"{report.mode.value}: U={report.unseen_accuracy:.1f} ZSD={report.zsd_accuracy:.1f}"
            + (f" S={report.seen_accuracy:.1f} HM={report.harmonic_mean:.1f}" if report.harmonic_mean is not None else "")
        )
        return report

    def ablate(
        self, benchmark: Benchmark, variants: str | list[str] | None = None, seeds: list[int] | None = None
    ) -> list[AblationRow]:
        eval_cfg = self.raw_config.eval
        variants = parse_variants(eval_cfg.ablation_variants if variants is None else variants)
        if seeds is None:
            seeds = [self.config.seed + k for k in range(eval_cfg.ablation_seeds)]
        return run_ablation(
            benchmark,
            self.config,
            variants,
            seeds,
            self.logger,
            max_workers=self.raw_config.experiment_setup.max_workers,
        )
