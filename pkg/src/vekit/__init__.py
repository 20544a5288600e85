"""Vaccine-effectiveness toolkit for multi-variant, multi-vaccine cohorts."""

from .model import (
    AllOrNoneProfile,
    CohortComponents,
    EpidemicRates,
    LeakyProfile,
    StudyHorizon,
    all_or_none_components,
    components_for,
    leaky_components,
    placebo_components,
    simulate_cohort_oracle,
    subset_mask,
)

__all__ = [
    "AllOrNoneProfile",
    "CohortComponents",
    "EpidemicRates",
    "LeakyProfile",
    "StudyHorizon",
    "all_or_none_components",
    "components_for",
    "leaky_components",
    "placebo_components",
    "simulate_cohort_oracle",
    "subset_mask",
]
