"""VE measures for the multi-variant, multi-vaccine cohort model.

Three ratio bases (incidence rate, cumulative risk, exposure odds) for
variant-specific VE, relative VE of one vaccine across two variants, and
relative VE of two vaccines against one variant; closed forms for both
vaccine actions, asymptotic limits, VE-over-time curves, and the
constant-ratio time-varying-hazard result for relative VE.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

from .errors import (
    DimensionError,
    InvalidInputError,
    NotAvailableError,
    UndefinedVeError,
)
from .model import (
    AllOrNoneProfile,
    ArmAction,
    CohortComponents,
    EpidemicRates,
    LeakyProfile,
    StudyHorizon,
    components_for,
    one_minus_exp_neg,
)

#: Default absolute spread below which a curve is flagged time-invariant.
TIME_INVARIANCE_TOL = 1e-9

#: Combined-rate-times-horizon product used for numeric small-horizon limits.
SMALL_PRODUCT = 1e-9


class VeMeasureKind(str, Enum):
    """Ratio basis of a VE measure."""

    IRR = "irr"   # incidence rate ratio
    CRR = "crr"   # cumulative-risk ratio
    OR = "or"     # exposure odds ratio


class LimitKind(str, Enum):
    """Which end of the combined-rate-times-horizon axis to evaluate."""

    SMALL_LAMBDA_T = "small"
    LARGE_LAMBDA_T = "large"


class ComparisonScope(str, Enum):
    VARIANT_SPECIFIC = "variant_specific"
    RELATIVE_VARIANTS = "relative_variants"
    RELATIVE_VACCINES = "relative_vaccines"


@dataclass(frozen=True)
class Comparison:
    """What a VE value compares: arm(s) and variant(s)."""

    scope: ComparisonScope
    variant: int
    vaccine: str
    variant_other: Optional[int] = None
    vaccine_ref: Optional[str] = None

    def __post_init__(self):
        if self.variant < 1:
            raise InvalidInputError("variant ids are 1-based")
        if self.scope is ComparisonScope.RELATIVE_VARIANTS and self.variant_other is None:
            raise InvalidInputError("relative-variants comparison needs a second variant")
        if self.scope is ComparisonScope.RELATIVE_VACCINES and self.vaccine_ref is None:
            raise InvalidInputError("relative-vaccines comparison needs a reference vaccine")

    @classmethod
    def variant_specific(cls, variant: int, vaccine: str = "m") -> "Comparison":
        return cls(ComparisonScope.VARIANT_SPECIFIC, variant, vaccine)

    @classmethod
    def relative_variants(
        cls, variant: int, variant_other: int, vaccine: str = "m"
    ) -> "Comparison":
        return cls(ComparisonScope.RELATIVE_VARIANTS, variant, vaccine, variant_other)

    @classmethod
    def relative_vaccines(
        cls, variant: int, vaccine: str = "m", vaccine_ref: str = "n"
    ) -> "Comparison":
        return cls(
            ComparisonScope.RELATIVE_VACCINES, variant, vaccine, vaccine_ref=vaccine_ref
        )

    def label(self) -> str:
        if self.scope is ComparisonScope.VARIANT_SPECIFIC:
            return f"variant {self.variant}, vaccine {self.vaccine} vs placebo"
        if self.scope is ComparisonScope.RELATIVE_VARIANTS:
            return f"variants {self.variant} vs {self.variant_other}, vaccine {self.vaccine}"
        return f"variant {self.variant}, vaccine {self.vaccine} vs {self.vaccine_ref}"


@dataclass(frozen=True)
class VeValue:
    """A single VE number; ``value`` is None for a divergent limit."""

    value: Optional[float]
    kind: VeMeasureKind
    comparison: Comparison
    divergent: bool = False

    def __post_init__(self):
        if self.divergent:
            if self.value is not None:
                raise InvalidInputError("divergent VE carries no finite value")
            return
        if self.value is None or not math.isfinite(self.value) or self.value > 1.0:
            raise InvalidInputError(f"VE must be a finite number <= 1, got {self.value!r}")


@dataclass(frozen=True)
class VeCurve:
    """VE evaluated over a time grid, with a time-invariance flag."""

    times: tuple[float, ...]
    values: tuple[float, ...]
    kind: VeMeasureKind
    comparison: Comparison
    time_invariant: bool
    spread: float

    def __post_init__(self):
        if len(self.times) != len(self.values):
            raise InvalidInputError("times and values must have equal length")
        if any(t <= 0.0 for t in self.times):
            raise InvalidInputError("curve times must be > 0")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise InvalidInputError("curve times must be strictly increasing")


def _require_positive(quantity: float, description: str) -> float:
    if quantity == 0.0:
        raise UndefinedVeError(f"{description} is zero", vanished=description)
    return quantity


# ---------------------------------------------------------------------------
# VE from explicit components (works for any arm, any action)
# ---------------------------------------------------------------------------

def ve_from_components(
    kind: VeMeasureKind,
    comp_m: CohortComponents,
    comp_ref: CohortComponents,
    variant: int,
    comparison: Comparison | None = None,
) -> VeValue:
    """Variant-specific VE of the comparison arm against the reference arm.

    The reference is usually placebo; passing another vaccine's components
    yields relative VE of two vaccines instead.
    """
    if comp_m.n_variants != comp_ref.n_variants:
        raise DimensionError("arms cover different variant counts")
    comparison = comparison or Comparison.variant_specific(variant)
    p_m = comp_m.case(variant)
    p_ref = _require_positive(comp_ref.case(variant), f"p_case[{variant}] (reference arm)")
    if kind is VeMeasureKind.CRR:
        value = 1.0 - p_m / p_ref
    elif kind is VeMeasureKind.IRR:
        rate_m = p_m / comp_m.expected_person_time
        rate_ref = p_ref / comp_ref.expected_person_time
        value = 1.0 - rate_m / rate_ref
    else:
        p0_m = _require_positive(comp_m.p_control, "p_control (comparison arm)")
        p0_ref = _require_positive(comp_ref.p_control, "p_control (reference arm)")
        value = 1.0 - (p_m / p_ref) / (p0_m / p0_ref)
    return VeValue(value, kind, comparison)


def relative_ve_two_variants(
    kind: VeMeasureKind,
    comp_m: CohortComponents,
    comp_ref: CohortComponents,
    variant_i: int,
    variant_j: int,
    comparison: Comparison | None = None,
) -> VeValue:
    """Relative VE of one vaccine across two variants; same for all kinds."""
    if comp_m.n_variants != comp_ref.n_variants:
        raise DimensionError("arms cover different variant counts")
    comparison = comparison or Comparison.relative_variants(variant_i, variant_j)
    p_im = comp_m.case(variant_i)
    p_jm = _require_positive(comp_m.case(variant_j), f"p_case[{variant_j}] (comparison arm)")
    p_iref = _require_positive(
        comp_ref.case(variant_i), f"p_case[{variant_i}] (reference arm)"
    )
    p_jref = _require_positive(
        comp_ref.case(variant_j), f"p_case[{variant_j}] (reference arm)"
    )
    value = 1.0 - (p_im / p_jm) / (p_iref / p_jref)
    return VeValue(value, kind, comparison)


def relative_ve_two_vaccines(
    kind: VeMeasureKind,
    comp_m: CohortComponents,
    comp_n: CohortComponents,
    variant: int,
    comparison: Comparison | None = None,
) -> VeValue:
    """Relative VE of the comparison vaccine with another vaccine as reference."""
    if comp_m.n_variants != comp_n.n_variants:
        raise DimensionError("arms cover different variant counts")
    comparison = comparison or Comparison.relative_vaccines(variant)
    p_m = comp_m.case(variant)
    p_n = _require_positive(comp_n.case(variant), f"p_case[{variant}] (reference vaccine)")
    if kind is VeMeasureKind.CRR:
        value = 1.0 - p_m / p_n
    elif kind is VeMeasureKind.IRR:
        value = 1.0 - (p_m / comp_m.expected_person_time) / (
            p_n / comp_n.expected_person_time
        )
    else:
        p0_m = _require_positive(comp_m.p_control, "p_control (comparison vaccine)")
        p0_n = _require_positive(comp_n.p_control, "p_control (reference vaccine)")
        value = 1.0 - (p_m / p_n) / (p0_m / p0_n)
    return VeValue(value, kind, comparison)


# ---------------------------------------------------------------------------
# closed forms, leaky action
# ---------------------------------------------------------------------------

def _or_correction(theta_overall: float, product: float) -> float:
    """(e^{a x} - 1) / (e^{x} - 1) with a = theta_overall, overflow-free."""
    return math.exp((theta_overall - 1.0) * product) * (
        one_minus_exp_neg(theta_overall * product) / one_minus_exp_neg(product)
    )


def leaky_ve_closed_form(
    kind: VeMeasureKind,
    rates: EpidemicRates,
    profile: LeakyProfile,
    variant: int,
    t: float,
    comparison: Comparison | None = None,
) -> VeValue:
    """Variant-specific VE of a leaky vaccine; the IRR form is horizon-free."""
    profile._check_paired(rates)
    if not 1 <= variant <= rates.n_variants:
        raise DimensionError(f"variant {variant} outside 1..{rates.n_variants}")
    t = StudyHorizon(t).t
    comparison = comparison or Comparison.variant_specific(variant)
    theta = profile.thetas[variant - 1]
    overall = profile.overall(rates)
    if kind is VeMeasureKind.IRR:
        return VeValue(1.0 - theta, kind, comparison)
    if overall == 0.0:
        # fully protective vaccine: the ratio limit is 0, VE = 1
        return VeValue(1.0, kind, comparison)
    product = rates.total * t
    if kind is VeMeasureKind.CRR:
        value = 1.0 - theta * one_minus_exp_neg(overall * product) / (
            overall * one_minus_exp_neg(product)
        )
    else:
        value = 1.0 - theta * _or_correction(overall, product) / overall
    return VeValue(value, kind, comparison)


def leaky_relative_variants_closed_form(
    kind: VeMeasureKind,
    profile: LeakyProfile,
    variant_i: int,
    variant_j: int,
    comparison: Comparison | None = None,
) -> VeValue:
    """Relative VE of a leaky vaccine across two variants: 1 - theta_i/theta_j."""
    comparison = comparison or Comparison.relative_variants(variant_i, variant_j)
    theta_i = profile.thetas[variant_i - 1]
    theta_j = _require_positive(
        profile.thetas[variant_j - 1], f"theta[{variant_j}] (comparison arm)"
    )
    return VeValue(1.0 - theta_i / theta_j, kind, comparison)


def leaky_relative_vaccines_closed_form(
    kind: VeMeasureKind,
    rates: EpidemicRates,
    profile_m: LeakyProfile,
    profile_n: LeakyProfile,
    variant: int,
    t: float,
    comparison: Comparison | None = None,
) -> VeValue:
    """Relative VE of two leaky vaccines against one variant."""
    comparison = comparison or Comparison.relative_vaccines(variant)
    theta_m = profile_m.thetas[variant - 1]
    theta_n = _require_positive(
        profile_n.thetas[variant - 1], f"theta[{variant}] (reference vaccine)"
    )
    if kind is VeMeasureKind.IRR:
        return VeValue(1.0 - theta_m / theta_n, kind, comparison)
    if theta_m == 0.0:
        return VeValue(1.0, kind, comparison)
    overall_m = profile_m.overall(rates)
    overall_n = profile_n.overall(rates)
    product = rates.total * StudyHorizon(t).t
    if kind is VeMeasureKind.CRR:
        factor = (
            one_minus_exp_neg(overall_m * product)
            / one_minus_exp_neg(overall_n * product)
            * (overall_n / overall_m)
        )
    else:
        factor = (
            _or_correction(overall_m, product)
            / _or_correction(overall_n, product)
            * (overall_n / overall_m)
        )
    return VeValue(1.0 - theta_m / theta_n * factor, kind, comparison)


# ---------------------------------------------------------------------------
# closed forms, all-or-none action
# ---------------------------------------------------------------------------

def _aon_sums(
    rates: EpidemicRates, profile: AllOrNoneProfile, t: float
) -> tuple[dict[int, float], float]:
    """Per-stratum remaining rates and the reference normaliser 1 - e^{-At}."""
    if profile.n_variants != rates.n_variants:
        raise DimensionError("profile and rates cover different variant counts")
    full_mask = (1 << rates.n_variants) - 1
    remaining = {}
    for mask, _ in profile.positive_strata():
        if mask == full_mask:
            remaining[mask] = 0.0
        else:
            remaining[mask] = rates.total - math.fsum(
                rates.lambdas[i] for i in range(rates.n_variants) if mask >> i & 1
            )
    return remaining, one_minus_exp_neg(rates.total * t)


def _aon_case_sum(
    rates: EpidemicRates,
    profile: AllOrNoneProfile,
    variant: int,
    t: float,
) -> float:
    """Sum over strata not immune to ``variant`` of the risk-ratio weights.

    This is the cumulative-risk ratio of the arm for that variant.
    """
    remaining, norm = _aon_sums(rates, profile, t)
    bit = 1 << (variant - 1)
    total = 0.0
    for mask, theta in profile.positive_strata():
        if mask & bit:
            continue
        rem = remaining[mask]
        total += theta * rates.total * one_minus_exp_neg(rem * t) / (rem * norm)
    return total


def _aon_person_time_sum(
    rates: EpidemicRates, profile: AllOrNoneProfile, t: float
) -> float:
    """Person-time ratio of the arm against placebo (the IRR denominator)."""
    remaining, norm = _aon_sums(rates, profile, t)
    total = 0.0
    for mask, theta in profile.positive_strata():
        rem = remaining[mask]
        if rem == 0.0:
            total += theta * rates.total * t / norm
        else:
            total += theta * rates.total * one_minus_exp_neg(rem * t) / (rem * norm)
    return total


def _aon_survival_ratio(
    rates: EpidemicRates, profile: AllOrNoneProfile, t: float
) -> float:
    """e^{-At} / P(control | arm): the OR correction denominator, inverted."""
    remaining, _ = _aon_sums(rates, profile, t)
    p_control = math.fsum(
        theta * math.exp(-remaining[mask] * t) for mask, theta in profile.positive_strata()
    )
    return math.exp(-rates.total * t) / p_control


def aon_ve_closed_form(
    kind: VeMeasureKind,
    rates: EpidemicRates,
    profile: AllOrNoneProfile,
    variant: int,
    t: float,
    comparison: Comparison | None = None,
) -> VeValue:
    """Variant-specific VE of an all-or-none vaccine (time-dependent for I >= 2)."""
    if not 1 <= variant <= rates.n_variants:
        raise DimensionError(f"variant {variant} outside 1..{rates.n_variants}")
    t = StudyHorizon(t).t
    comparison = comparison or Comparison.variant_specific(variant)
    crr = _aon_case_sum(rates, profile, variant, t)
    if kind is VeMeasureKind.CRR:
        return VeValue(1.0 - crr, kind, comparison)
    if kind is VeMeasureKind.IRR:
        return VeValue(1.0 - crr / _aon_person_time_sum(rates, profile, t), kind, comparison)
    return VeValue(1.0 - crr * _aon_survival_ratio(rates, profile, t), kind, comparison)


def aon_relative_ve_closed_form(
    kind: VeMeasureKind,
    comparison: Comparison,
    rates: EpidemicRates,
    profile_m: AllOrNoneProfile,
    profile_n: AllOrNoneProfile | None = None,
    t: float = 1.0,
) -> VeValue:
    """Relative VE expansions for all-or-none vaccines.

    Across two variants for one vaccine the three measure kinds coincide;
    across two vaccines they differ by person-time or survival corrections.
    """
    t = StudyHorizon(t).t
    if comparison.scope is ComparisonScope.RELATIVE_VARIANTS:
        num = _aon_case_sum(rates, profile_m, comparison.variant, t)
        den = _require_positive(
            _aon_case_sum(rates, profile_m, comparison.variant_other, t),
            f"p_case[{comparison.variant_other}] (comparison arm)",
        )
        return VeValue(1.0 - num / den, kind, comparison)
    if comparison.scope is ComparisonScope.RELATIVE_VACCINES:
        if profile_n is None:
            raise InvalidInputError("relative-vaccines comparison needs both profiles")
        num = _aon_case_sum(rates, profile_m, comparison.variant, t)
        den = _require_positive(
            _aon_case_sum(rates, profile_n, comparison.variant, t),
            f"p_case[{comparison.variant}] (reference vaccine)",
        )
        crr = num / den
        if kind is VeMeasureKind.CRR:
            return VeValue(1.0 - crr, kind, comparison)
        if kind is VeMeasureKind.IRR:
            factor = _aon_person_time_sum(rates, profile_n, t) / _aon_person_time_sum(
                rates, profile_m, t
            )
            return VeValue(1.0 - crr * factor, kind, comparison)
        factor = _aon_survival_ratio(rates, profile_m, t) / _aon_survival_ratio(
            rates, profile_n, t
        )
        return VeValue(1.0 - crr * factor, kind, comparison)
    raise InvalidInputError("variant-specific comparisons use aon_ve_closed_form")


# ---------------------------------------------------------------------------
# pointwise dispatch, curves, limits
# ---------------------------------------------------------------------------

def ve_point(
    kind: VeMeasureKind,
    comparison: Comparison,
    rates: EpidemicRates,
    action_m: ArmAction,
    action_ref: ArmAction,
    t: float,
) -> VeValue:
    """Evaluate one VE value at horizon ``t``, via closed forms where they exist.

    ``action_ref`` is ignored (placebo) unless the comparison is between
    two vaccines. Arm pairs without a dedicated closed form (mixed leaky /
    all-or-none) are evaluated from their exact components instead.
    """
    horizon = StudyHorizon(t)
    scope = comparison.scope
    if scope is ComparisonScope.VARIANT_SPECIFIC:
        if isinstance(action_m, LeakyProfile):
            return leaky_ve_closed_form(kind, rates, action_m, comparison.variant, t, comparison)
        if isinstance(action_m, AllOrNoneProfile):
            return aon_ve_closed_form(kind, rates, action_m, comparison.variant, t, comparison)
        return ve_from_components(
            kind,
            components_for(rates, action_m, horizon),
            components_for(rates, None, horizon),
            comparison.variant,
            comparison,
        )
    if scope is ComparisonScope.RELATIVE_VARIANTS:
        if isinstance(action_m, LeakyProfile):
            return leaky_relative_variants_closed_form(
                kind, action_m, comparison.variant, comparison.variant_other, comparison
            )
        if isinstance(action_m, AllOrNoneProfile):
            return aon_relative_ve_closed_form(kind, comparison, rates, action_m, t=t)
        return relative_ve_two_variants(
            kind,
            components_for(rates, action_m, horizon),
            components_for(rates, None, horizon),
            comparison.variant,
            comparison.variant_other,
            comparison,
        )
    if isinstance(action_m, LeakyProfile) and isinstance(action_ref, LeakyProfile):
        return leaky_relative_vaccines_closed_form(
            kind, rates, action_m, action_ref, comparison.variant, t, comparison
        )
    if isinstance(action_m, AllOrNoneProfile) and isinstance(action_ref, AllOrNoneProfile):
        return aon_relative_ve_closed_form(kind, comparison, rates, action_m, action_ref, t)
    return relative_ve_two_vaccines(
        kind,
        components_for(rates, action_m, horizon),
        components_for(rates, action_ref, horizon),
        comparison.variant,
        comparison,
    )


def ve_curve(
    kind: VeMeasureKind,
    comparison: Comparison,
    rates: EpidemicRates,
    action_m: ArmAction,
    action_ref: ArmAction,
    time_grid: Sequence[float],
    invariance_tol: float = TIME_INVARIANCE_TOL,
) -> VeCurve:
    """Evaluate VE over a strictly increasing grid and flag time-invariance."""
    grid = tuple(float(t) for t in time_grid)
    if len(grid) < 2:
        raise InvalidInputError("a curve needs at least two grid points")
    values = tuple(
        ve_point(kind, comparison, rates, action_m, action_ref, t).value for t in grid
    )
    spread = max(values) - min(values)
    return VeCurve(grid, values, kind, comparison, spread < invariance_tol, spread)


def _leaky_limit(
    kind: VeMeasureKind,
    comparison: Comparison,
    rates: EpidemicRates,
    profile_m: LeakyProfile,
    profile_n: LeakyProfile | None,
    which: LimitKind,
) -> VeValue:
    scope = comparison.scope
    if scope is ComparisonScope.VARIANT_SPECIFIC:
        theta = profile_m.thetas[comparison.variant - 1]
        if which is LimitKind.SMALL_LAMBDA_T or kind is VeMeasureKind.IRR:
            return VeValue(1.0 - theta, kind, comparison)
        if kind is VeMeasureKind.OR:
            return VeValue(1.0, kind, comparison)
        overall = profile_m.overall(rates)
        if overall == 0.0:
            return VeValue(1.0, kind, comparison)
        return VeValue(1.0 - theta / overall, kind, comparison)
    if scope is ComparisonScope.RELATIVE_VARIANTS:
        return leaky_relative_variants_closed_form(
            kind, profile_m, comparison.variant, comparison.variant_other, comparison
        )
    theta_m = profile_m.thetas[comparison.variant - 1]
    theta_n = _require_positive(
        profile_n.thetas[comparison.variant - 1],
        f"theta[{comparison.variant}] (reference vaccine)",
    )
    if which is LimitKind.SMALL_LAMBDA_T or kind is VeMeasureKind.IRR:
        return VeValue(1.0 - theta_m / theta_n, kind, comparison)
    overall_m = profile_m.overall(rates)
    overall_n = profile_n.overall(rates)
    if kind is VeMeasureKind.CRR:
        if overall_m == 0.0:
            return VeValue(1.0, kind, comparison)
        return VeValue(1.0 - theta_m * overall_n / (theta_n * overall_m), kind, comparison)
    if overall_m < overall_n:
        return VeValue(1.0, kind, comparison)
    if overall_m > overall_n:
        return VeValue(None, kind, comparison, divergent=True)
    return VeValue(1.0 - theta_m / theta_n, kind, comparison)


def ve_limit(
    kind: VeMeasureKind,
    comparison: Comparison,
    rates: EpidemicRates,
    action_m: ArmAction,
    action_ref: ArmAction,
    which: LimitKind,
) -> VeValue:
    """Asymptotic VE as the combined rate-horizon product goes to 0 or infinity.

    Analytic values exist for leaky arms. For other arm pairs only the
    small-product end is available, evaluated numerically by shrinking the
    product to ``SMALL_PRODUCT`` (equivalent to scaling all rates down);
    the large-product end raises ``NotAvailableError`` for them.
    """
    leaky_m = isinstance(action_m, LeakyProfile)
    leaky_pair = leaky_m and (
        comparison.scope is not ComparisonScope.RELATIVE_VACCINES
        or isinstance(action_ref, LeakyProfile)
    )
    if leaky_pair:
        profile_n = action_ref if comparison.scope is ComparisonScope.RELATIVE_VACCINES else None
        return _leaky_limit(kind, comparison, rates, action_m, profile_n, which)
    if which is LimitKind.LARGE_LAMBDA_T:
        raise NotAvailableError(
            "large rate-horizon limits are only available for leaky vaccines"
        )
    t_small = SMALL_PRODUCT / rates.total
    return ve_point(kind, comparison, rates, action_m, action_ref, t_small)


# ---------------------------------------------------------------------------
# relative VE under proportionally varying hazards
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PiecewiseConstantHazard:
    """Hazard that is constant on [start_k, start_{k+1}); the last segment
    extends indefinitely. ``start_times[0]`` must be 0."""

    start_times: tuple[float, ...]
    rates: tuple[float, ...]

    def __init__(self, start_times: Sequence[float], rates: Sequence[float]):
        starts = tuple(float(s) for s in start_times)
        rs = tuple(float(r) for r in rates)
        if len(starts) != len(rs) or not starts:
            raise InvalidInputError("need one rate per segment start")
        if starts[0] != 0.0:
            raise InvalidInputError("first segment must start at 0")
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise InvalidInputError("segment starts must be strictly increasing")
        if any(not math.isfinite(r) or r < 0.0 for r in rs):
            raise InvalidInputError("hazard segments must be finite and >= 0")
        object.__setattr__(self, "start_times", starts)
        object.__setattr__(self, "rates", rs)

    @classmethod
    def constant(cls, rate: float) -> "PiecewiseConstantHazard":
        return cls((0.0,), (rate,))

    def segments_until(self, t: float) -> list[tuple[float, float]]:
        """(duration, rate) pairs covering [0, t]."""
        out = []
        for k, start in enumerate(self.start_times):
            if start >= t:
                break
            end = self.start_times[k + 1] if k + 1 < len(self.start_times) else t
            out.append((min(end, t) - start, self.rates[k]))
        return out


def _weighted_exposure(
    hazard: PiecewiseConstantHazard, multiplier: float, t: float
) -> float:
    """Exact integral of hazard(s) * survival(s) over [0, t].

    ``multiplier`` scales the hazard inside the survival term (the combined
    susceptibility of the arm, in units of the base hazard).
    """
    total = 0.0
    log_surv = 0.0
    for duration, rate in hazard.segments_until(t):
        increment = multiplier * rate * duration
        if rate > 0.0:
            if multiplier == 0.0:
                total += math.exp(log_surv) * rate * duration
            else:
                total += math.exp(log_surv) * one_minus_exp_neg(increment) / multiplier
        log_surv -= increment
    return total


def relative_ve_varying_hazard(
    hazard_j: PiecewiseConstantHazard,
    ratio_f: float,
    theta_i: float,
    theta_j: float,
    t: float,
    reference_thetas: tuple[float, float] = (1.0, 1.0),
    kind: VeMeasureKind = VeMeasureKind.CRR,
    comparison: Comparison | None = None,
) -> VeValue:
    """Relative VE across two variants whose hazards keep a constant ratio.

    Variant i's hazard is ``ratio_f`` times variant j's at every time; both
    may vary. The case probabilities are integrated exactly per segment, so
    the result reproduces the constant ratio 1 - theta_i/theta_j up to
    quadrature-free float error. All three measure kinds coincide.
    """
    if not ratio_f > 0.0 or not math.isfinite(ratio_f):
        raise InvalidInputError(f"hazard ratio must be finite and > 0, got {ratio_f}")
    for name, th in (("theta_i", theta_i), ("theta_j", theta_j)):
        if not 0.0 <= th <= 1.0:
            raise InvalidInputError(f"{name} must lie in [0, 1], got {th}")
    t = StudyHorizon(t).t
    comparison = comparison or Comparison.relative_variants(1, 2)

    def arm_cases(th_i: float, th_j: float) -> tuple[float, float]:
        combined = th_i * ratio_f + th_j
        exposure = _weighted_exposure(hazard_j, combined, t)
        return th_i * ratio_f * exposure, th_j * exposure

    p_im, p_jm = arm_cases(theta_i, theta_j)
    p_iref, p_jref = arm_cases(*reference_thetas)
    p_jm = _require_positive(p_jm, "p_case[j] (comparison arm)")
    p_iref = _require_positive(p_iref, "p_case[i] (reference arm)")
    p_jref = _require_positive(p_jref, "p_case[j] (reference arm)")
    return VeValue(1.0 - (p_im / p_jm) / (p_iref / p_jref), kind, comparison)
