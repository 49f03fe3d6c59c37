from region_synth.utils.utils import (
    DEFAULT_CONFIG,
    DATASET_PROFILES,
    ExperimentLogger,
    apply_profile,
    flatten_config,
    load_config,
    override_config,
)

__all__ = [
    "DEFAULT_CONFIG",
    "DATASET_PROFILES",
    "ExperimentLogger",
    "apply_profile",
    "flatten_config",
    "load_config",
    "override_config",
]
