"""Stepped wedge trial estimation with time-varying treatment effects."""

from ._core import (
    StudyDesign,
    TrialDataset,
    FittedModel,
    standard_design,
    derive_phi,
    weight,
    weight_vector,
    expected_it_estimate,
    generate,
    write_csv,
    read_csv,
    fit,
    estimate,
    effect_curve,
    fit_mec_lte,
)

__all__ = [
    "StudyDesign",
    "TrialDataset",
    "FittedModel",
    "standard_design",
    "derive_phi",
    "weight",
    "weight_vector",
    "expected_it_estimate",
    "generate",
    "write_csv",
    "read_csv",
    "fit",
    "estimate",
    "effect_curve",
    "fit_mec_lte",
]
