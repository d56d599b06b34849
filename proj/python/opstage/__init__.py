"""Python bindings for the opstage library."""

from ._opstage import (
    Model,
    NumericError,
    OpstageError,
    feature_vector,
    final_stage,
    glcm,
    majority_vote,
    quantize,
    read_pgm,
    run_experiment,
    stage_assessment,
    texture_stats,
    train,
)

__all__ = [
    "Model",
    "NumericError",
    "OpstageError",
    "feature_vector",
    "final_stage",
    "glcm",
    "majority_vote",
    "quantize",
    "read_pgm",
    "run_experiment",
    "stage_assessment",
    "texture_stats",
    "train",
]
