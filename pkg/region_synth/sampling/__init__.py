from region_synth.sampling.noise import (
    REJECTION_CAP_PER_NEGATIVE,
    outside_radius,
    sample_negatives,
    sample_positive,
    sample_query,
    sample_triplets,
)

__all__ = [
    "REJECTION_CAP_PER_NEGATIVE",
    "outside_radius",
    "sample_negatives",
    "sample_positive",
    "sample_query",
    "sample_triplets",
]
