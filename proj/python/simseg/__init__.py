"""Similarity-prompted segmentation and diagnosis toolkit."""

from simseg._core import (  # noqa: F401
    Error,
    InvalidInputError,
    IoError,
    NoSegTokenError,
    Nonlinearity,
    ProjectionHead,
    UnparseableVerdictError,
    accuracy,
    apply_tau,
    bce_loss,
    build_generation_prompt,
    decode,
    dice_loss,
    estimate_irregularity,
    extract_diagnosis,
    extract_features,
    extract_seg_token,
    generate_dataset,
    iou,
    mask_loss,
    parse_verdict,
    perturb_region,
    pool_regions,
    project,
    quality,
    run_eval,
    run_pipeline_mock,
    rvls2m,
    similarity,
    softmax_normalize,
    text_ce_loss,
    to_map,
    total_loss,
    toy_encode,
    vote_diagnosis,
)

__all__ = [
    "Error",
    "InvalidInputError",
    "IoError",
    "NoSegTokenError",
    "Nonlinearity",
    "ProjectionHead",
    "UnparseableVerdictError",
    "accuracy",
    "apply_tau",
    "bce_loss",
    "build_generation_prompt",
    "decode",
    "dice_loss",
    "estimate_irregularity",
    "extract_diagnosis",
    "extract_features",
    "extract_seg_token",
    "generate_dataset",
    "iou",
    "mask_loss",
    "parse_verdict",
    "perturb_region",
    "pool_regions",
    "project",
    "quality",
    "run_eval",
    "run_pipeline_mock",
    "rvls2m",
    "similarity",
    "softmax_normalize",
    "text_ce_loss",
    "to_map",
    "total_loss",
    "toy_encode",
    "vote_diagnosis",
]

__version__ = "0.1.0"
