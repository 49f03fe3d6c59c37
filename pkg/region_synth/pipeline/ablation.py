import csv
import dataclasses
import logging
from dataclasses import dataclass

from region_synth.data import Benchmark, EvalMode, EvalReport, TrainConfig
from region_synth.errors import ConfigError
from region_synth.pipeline.evaluation import evaluate
from region_synth.pipeline.run_pool import RunPool, RunPoolConfig
from region_synth.pipeline.workflow import run_pipeline

# b: adversarial + classifier consistency only; Sd adds the intra-class diverging term;
# Sp adds the inter-class term over the hybrid pool; Sps restricts that pool to
# synthesized features.
ABLATION_VARIANTS: dict[str, dict] = {
    "b": {"weights": {"lambda2": 0.0, "lambda3": 0.0}},
    "b+Sd": {"weights": {"lambda3": 0.0}},
    "b+Sd+Sps": {"pool_mode": "synth"},
    "b+Sd+Sp": {},
}


@dataclass
class AblationRow:
    variant: str
    seed: int
    gzsd: EvalReport
    zsd: EvalReport


def variant_config(cfg: TrainConfig, variant: str, seed: int | None = None) -> TrainConfig:
    if variant not in ABLATION_VARIANTS:
        raise ConfigError(f"unknown ablation variant {variant!r}, expected one of {list(ABLATION_VARIANTS)}")
    changes = dict(ABLATION_VARIANTS[variant])
    weights = dataclasses.replace(cfg.weights, **changes.pop("weights", {}))
    return dataclasses.replace(
        cfg, weights=weights, seed=cfg.seed if seed is None else seed, **changes
    )


def parse_variants(spec: str | list[str]) -> list[str]:
    variants = [v.strip() for v in spec.split(",")] if isinstance(spec, str) else list(spec)
    variants = [v for v in variants if v]
    for v in variants:
        if v not in ABLATION_VARIANTS:
            raise ConfigError(f"unknown ablation variant {v!r}, expected one of {list(ABLATION_VARIANTS)}")
    return variants


def run_ablation(
    benchmark: Benchmark,
    cfg: TrainConfig,
    variants: list[str],
    seeds: list[int] | None = None,
    logger: logging.Logger | None = None,
    max_workers: int = 4,
) -> list[AblationRow]:
    """Train every (variant, seed) from the same starting seed and evaluate both settings."""
    logger = logger or logging.getLogger("region_synth")
    variants = parse_variants(variants)
    seeds = [cfg.seed] if seeds is None else list(seeds)
    jobs = [(variant, seed) for seed in seeds for variant in variants]

    def run(job: tuple[str, int]) -> AblationRow:
        variant, seed = job
        result = run_pipeline(benchmark, variant_config(cfg, variant, seed), logger)
        return AblationRow(
            variant=variant,
            seed=seed,
            gzsd=evaluate(result.merged, benchmark, EvalMode.GZSD),
            zsd=evaluate(result.merged, benchmark, EvalMode.ZSD),
        )

    outcome = RunPool(RunPoolConfig(max_workers=max_workers), logger).process(jobs, run, "ablation runs")
    if outcome.failed_count:
        raise outcome.errors[0]
    return [row for row in outcome.results if row is not None]


def write_ablation_csv(rows: list[AblationRow], path: str) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["variant", "seed", "zsd_unseen", "gzsd_seen", "gzsd_unseen", "gzsd_hm"])
        for row in rows:
            writer.writerow(
                [
                    row.variant,
                    row.seed,
                    f"{row.zsd.unseen_accuracy:.4f}",
                    f"{row.gzsd.seen_accuracy:.4f}",
                    f"{row.gzsd.unseen_accuracy:.4f}",
                    f"{row.gzsd.harmonic_mean:.4f}",
                ]
            )
