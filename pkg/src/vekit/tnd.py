"""Test-negative design: expected counts and the odds-ratio VE they yield.

Cases are care-seeking subjects infected with a target-pathogen variant;
controls are care-seekers infected with an off-target pathogen whose rate
is unaffected by vaccination and which confers no immunity. Controls are
counted every presentation over the whole window (inclusive sampling) or
only while still at risk of the target pathogen (incidence-density
sampling), which makes the design estimate the cumulative-risk or the
incidence-rate measure respectively.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping

from .errors import DimensionError, InvalidInputError, UndefinedVeError
from .measures import Comparison, VeMeasureKind, VeValue
from .model import PLACEBO_ARM, CohortComponents, StudyHorizon


class ControlSampling(str, Enum):
    INCLUSIVE = "inclusive"
    DENSITY = "density"


def _check_unit_interval(name: str, value: float, allow_zero: bool = False) -> float:
    value = float(value)
    low_ok = value >= 0.0 if allow_zero else value > 0.0
    if not (math.isfinite(value) and low_ok and value <= 1.0):
        raise InvalidInputError(f"{name} must lie in {'[' if allow_zero else '('}0, 1], got {value}")
    return value


@dataclass(frozen=True)
class TndParams:
    """Population, behaviour, and sampling parameters of a TND study."""

    population: float
    rate_offtarget: float
    p_symptom_case: tuple[float, ...]       # per variant
    p_symptom_offtarget: float
    p_seek_care: Mapping[str, float]        # per arm
    p_vaccinated: Mapping[str, float]       # per arm, sums to 1, includes placebo
    sampling: ControlSampling = ControlSampling.INCLUSIVE

    def __post_init__(self):
        if not self.population > 0:
            raise InvalidInputError("population must be > 0")
        if not (math.isfinite(self.rate_offtarget) and self.rate_offtarget > 0.0):
            raise InvalidInputError("off-target rate must be finite and > 0")
        # zero is allowed per variant: such a variant simply yields no cases
        object.__setattr__(
            self,
            "p_symptom_case",
            tuple(
                _check_unit_interval(f"p_symptom_case[{k + 1}]", v, allow_zero=True)
                for k, v in enumerate(self.p_symptom_case)
            ),
        )
        _check_unit_interval("p_symptom_offtarget", self.p_symptom_offtarget)
        for arm, v in self.p_seek_care.items():
            _check_unit_interval(f"p_seek_care[{arm}]", v)
        coverage_total = math.fsum(self.p_vaccinated.values())
        if abs(coverage_total - 1.0) > 1e-12:
            raise InvalidInputError(
                f"vaccination shares must sum to 1 within 1e-12, got {coverage_total!r}"
            )
        for arm, v in self.p_vaccinated.items():
            _check_unit_interval(f"p_vaccinated[{arm}]", v, allow_zero=True)
        if set(self.p_seek_care) != set(self.p_vaccinated):
            raise DimensionError("care-seeking and coverage must cover the same arms")

    @property
    def arms(self) -> tuple[str, ...]:
        return tuple(self.p_vaccinated)


@dataclass(frozen=True)
class TndExpectedCounts:
    """Expected case counts per arm and variant, and controls per arm."""

    cases: Mapping[str, tuple[float, ...]]
    controls: Mapping[str, float]
    sampling: ControlSampling

    def __post_init__(self):
        for arm, row in self.cases.items():
            if any(not math.isfinite(v) or v < 0.0 for v in row):
                raise InvalidInputError(f"case counts for arm {arm} must be finite and >= 0")
        for arm, v in self.controls.items():
            if not math.isfinite(v) or v < 0.0:
                raise InvalidInputError(f"control count for arm {arm} must be finite and >= 0")

    def case(self, variant: int, arm: str) -> float:
        return self.cases[arm][variant - 1]


def _check_arms(params: TndParams, components: Mapping[str, CohortComponents]) -> None:
    missing = set(params.arms) - set(components)
    if missing:
        raise DimensionError(f"components missing for arms: {sorted(missing)}")
    n_variants = len(params.p_symptom_case)
    for arm in params.arms:
        if components[arm].n_variants != n_variants:
            raise DimensionError(
                f"arm {arm} covers {components[arm].n_variants} variants, params cover {n_variants}"
            )


def expected_cases(
    params: TndParams, components: Mapping[str, CohortComponents]
) -> dict[str, tuple[float, ...]]:
    """Expected detected cases per arm and variant.

    Each count is population x P(seek care | symptoms, arm) x
    P(symptoms | variant) x P(infected by variant | arm) x P(arm).
    """
    _check_arms(params, components)
    out = {}
    for arm in params.arms:
        seek = params.p_seek_care[arm]
        share = params.p_vaccinated[arm]
        out[arm] = tuple(
            params.population * seek * p_sym * p_case * share
            for p_sym, p_case in zip(params.p_symptom_case, components[arm].p_case)
        )
    return out


def expected_controls(
    params: TndParams,
    components: Mapping[str, CohortComponents],
    horizon: StudyHorizon,
) -> dict[str, float]:
    """Expected detected controls per arm.

    Off-target infections recur at a constant rate, so counts can exceed
    the number of subjects. Inclusive sampling exposes subjects for the
    whole window; density sampling only for their expected time at risk of
    the target pathogen.
    """
    _check_arms(params, components)
    out = {}
    for arm in params.arms:
        exposure = (
            horizon.t
            if params.sampling is ControlSampling.INCLUSIVE
            else components[arm].expected_person_time
        )
        out[arm] = (
            params.population
            * exposure
            * params.p_seek_care[arm]
            * params.p_symptom_offtarget
            * params.p_vaccinated[arm]
            * params.rate_offtarget
        )
    return out


def expected_counts(
    params: TndParams,
    components: Mapping[str, CohortComponents],
    horizon: StudyHorizon,
) -> TndExpectedCounts:
    return TndExpectedCounts(
        cases=expected_cases(params, components),
        controls=expected_controls(params, components, horizon),
        sampling=params.sampling,
    )


def _estimated_kind(sampling: ControlSampling) -> VeMeasureKind:
    """Which cohort measure the TND odds ratio estimates under each sampling."""
    return VeMeasureKind.CRR if sampling is ControlSampling.INCLUSIVE else VeMeasureKind.IRR


def _cell(counts: TndExpectedCounts, description: str, value: float) -> float:
    if value == 0.0:
        raise UndefinedVeError(f"{description} is zero", vanished=description)
    return value


def tnd_ve(
    counts: TndExpectedCounts, variant: int, arm: str, reference: str = PLACEBO_ARM
) -> VeValue:
    """Variant-specific VE from the vaccination odds of cases vs controls.

    All four cells must be positive; a zero anywhere (even the comparison
    arm's cases) means the odds ratio does not exist for expected counts.
    """
    comparison = Comparison.variant_specific(variant, arm)
    case_m = _cell(counts, f"cases[{variant}] (comparison arm)", counts.case(variant, arm))
    case_ref = _cell(counts, f"cases[{variant}] (reference arm)", counts.case(variant, reference))
    ctrl_m = _cell(counts, "controls (comparison arm)", counts.controls[arm])
    ctrl_ref = _cell(counts, "controls (reference arm)", counts.controls[reference])
    value = 1.0 - (case_m / case_ref) / (ctrl_m / ctrl_ref)
    return VeValue(value, _estimated_kind(counts.sampling), comparison)


def tnd_relative_ve_variants(
    counts: TndExpectedCounts,
    variant_i: int,
    variant_j: int,
    arm: str,
    reference: str = PLACEBO_ARM,
) -> VeValue:
    """Relative VE of one vaccine across two variants; controls cancel."""
    comparison = Comparison.relative_variants(variant_i, variant_j, arm)
    case_im = _cell(counts, f"cases[{variant_i}] (comparison arm)", counts.case(variant_i, arm))
    case_jm = _cell(counts, f"cases[{variant_j}] (comparison arm)", counts.case(variant_j, arm))
    case_iref = _cell(
        counts, f"cases[{variant_i}] (reference arm)", counts.case(variant_i, reference)
    )
    case_jref = _cell(
        counts, f"cases[{variant_j}] (reference arm)", counts.case(variant_j, reference)
    )
    value = 1.0 - (case_im / case_jm) / (case_iref / case_jref)
    return VeValue(value, _estimated_kind(counts.sampling), comparison)


def tnd_relative_ve_vaccines(
    counts: TndExpectedCounts, variant: int, arm: str, reference_arm: str
) -> VeValue:
    """Relative VE of two vaccines against one variant."""
    comparison = Comparison.relative_vaccines(variant, arm, reference_arm)
    case_m = _cell(counts, f"cases[{variant}] (comparison arm)", counts.case(variant, arm))
    case_n = _cell(
        counts, f"cases[{variant}] (reference vaccine)", counts.case(variant, reference_arm)
    )
    ctrl_m = _cell(counts, "controls (comparison arm)", counts.controls[arm])
    ctrl_n = _cell(counts, "controls (reference vaccine)", counts.controls[reference_arm])
    value = 1.0 - (case_m / case_n) / (ctrl_m / ctrl_n)
    return VeValue(value, _estimated_kind(counts.sampling), comparison)
