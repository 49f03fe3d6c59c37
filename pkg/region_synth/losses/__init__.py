from region_synth.losses.adversarial import (
    CriticLossOutput,
    critic_loss,
    critic_loss_terms,
    generator_adv_loss,
)
from region_synth.losses.consistency import cls_consistency_loss
from region_synth.losses.contrastive import (
    POSITIVE_POLICIES,
    HybridPool,
    build_hybrid_pool,
    inter_sp_loss,
    intra_sd_loss,
    normalize_rows,
)
from region_synth.losses.objective import GeneratorLossParts, total_generator_objective

__all__ = [
    "POSITIVE_POLICIES",
    "CriticLossOutput",
    "GeneratorLossParts",
    "HybridPool",
    "build_hybrid_pool",
    "cls_consistency_loss",
    "critic_loss",
    "critic_loss_terms",
    "generator_adv_loss",
    "inter_sp_loss",
    "intra_sd_loss",
    "normalize_rows",
    "total_generator_objective",
]
