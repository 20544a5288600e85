"""Sample-size machinery for the multi-variant, multi-vaccine setting.

Minimum detectable VE is found by inverting normal-approximation power
functions (two-proportion for cumulative risk, log rate ratio for
incidence rate, log odds ratio for case-based designs); expected precision
comes from seeded Monte-Carlo simulation of the data-generating process
rather than from a single expected cross-table. Confounder adjustment
inflates log-scale standard errors by 1/sqrt(1 - rho^2).
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.stats import norm

from .errors import (
    DegenerateDesignError,
    DegenerateReplicateError,
    DimensionError,
    InvalidInputError,
    NoInformationError,
    NotAvailableError,
    UnattainablePowerError,
)
from .measures import Comparison, ComparisonScope, VeMeasureKind, VeValue
from .model import (
    PLACEBO_ARM,
    ArmAction,
    CohortComponents,
    EpidemicRates,
    StudyHorizon,
    draw_cohort,
)

BISECTION_TOL = 1e-6       # width tolerance on the VE axis
BISECTION_MAX_ITER = 200
DEGENERATE_WARN_FRACTION = 0.10


class StudyDesign(str, Enum):
    COHORT_CRR = "cohort_crr"
    COHORT_IRR = "cohort_irr"
    CASE_CONTROL_OR = "case_control_or"
    TND_INCLUSIVE_OR = "tnd_inclusive_or"


_DESIGN_KIND = {
    StudyDesign.COHORT_CRR: VeMeasureKind.CRR,
    StudyDesign.COHORT_IRR: VeMeasureKind.IRR,
    StudyDesign.CASE_CONTROL_OR: VeMeasureKind.OR,
    StudyDesign.TND_INCLUSIVE_OR: VeMeasureKind.OR,
}

_COHORT_DESIGNS = (StudyDesign.COHORT_CRR, StudyDesign.COHORT_IRR)


@dataclass(frozen=True)
class DesignSpec:
    """Study design, size, and testing parameters.

    Cohort designs need the total cohort size ``n``; case-based designs
    need total cases ``x`` and controls-per-case ``r``. Tests are
    two-sided at level ``alpha``. ``confounder_rho`` is the multiple
    correlation between vaccination and the confounders adjusted for.
    """

    design: StudyDesign
    n: Optional[int] = None
    x: Optional[int] = None
    r: Optional[float] = None
    alpha: float = 0.05
    power: float = 0.8
    confounder_rho: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise InvalidInputError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0.0 < self.power < 1.0:
            raise InvalidInputError(f"power must lie in (0, 1), got {self.power}")
        if not 0.0 <= self.confounder_rho < 1.0:
            raise InvalidInputError(f"rho must lie in [0, 1), got {self.confounder_rho}")
        if self.design in _COHORT_DESIGNS:
            if self.n is None or self.n < 2:
                raise InvalidInputError("cohort designs need n >= 2")
        else:
            if self.x is None or self.x < 1:
                raise InvalidInputError("case-based designs need x >= 1")
            if self.r is None or not self.r > 0.0:
                raise InvalidInputError("case-based designs need r > 0")

    @property
    def vif(self) -> float:
        """Variance inflation from confounder adjustment."""
        return 1.0 / math.sqrt(1.0 - self.confounder_rho**2)


@dataclass(frozen=True)
class ScenarioJoint:
    """Joint infection-by-vaccination cell probabilities of the cohort.

    ``joint[arm][c]`` is P(C=c, V=arm) with c=0 the uninfected state and
    c=1..I the variants; derived from per-arm components and coverage at a
    fixed horizon. ``person_time[arm]`` is the arm's expected follow-up.
    """

    arm_ids: tuple[str, ...]
    horizon: float
    joint: Mapping[str, tuple[float, ...]]
    person_time: Mapping[str, float]

    def __post_init__(self):
        cells = [v for arm in self.arm_ids for v in self.joint[arm]]
        if any(not math.isfinite(v) or v < 0.0 for v in cells):
            raise InvalidInputError("joint cells must be finite and >= 0")
        total = math.fsum(cells)
        if abs(total - 1.0) > 1e-10:
            raise InvalidInputError(f"joint cells sum to {total!r}, not 1")

    @classmethod
    def from_components(
        cls,
        coverage: Mapping[str, float],
        components: Mapping[str, CohortComponents],
        horizon: StudyHorizon,
    ) -> "ScenarioJoint":
        if set(coverage) != set(components):
            raise DimensionError("coverage and components must cover the same arms")
        if abs(math.fsum(coverage.values()) - 1.0) > 1e-12:
            raise InvalidInputError("coverage must sum to 1 within 1e-12")
        arm_ids = tuple(coverage)
        joint = {
            arm: tuple(
                coverage[arm] * p
                for p in (components[arm].p_control, *components[arm].p_case)
            )
            for arm in arm_ids
        }
        person_time = {arm: components[arm].expected_person_time for arm in arm_ids}
        return cls(arm_ids, horizon.t, joint, person_time)

    @property
    def n_variants(self) -> int:
        return len(self.joint[self.arm_ids[0]]) - 1

    def arm_coverage(self, arm: str) -> float:
        return math.fsum(self.joint[arm])

    def case_cell(self, arm: str, variant: int) -> float:
        return self.joint[arm][variant]

    def control_cell(self, arm: str) -> float:
        return self.joint[arm][0]

    def p_any_case(self) -> float:
        return math.fsum(
            self.joint[arm][c] for arm in self.arm_ids for c in range(1, self.n_variants + 1)
        )

    def p_any_control(self) -> float:
        return math.fsum(self.joint[arm][0] for arm in self.arm_ids)

    def case_conditional(self, arm: str, variant: int) -> float:
        """P(V=arm, C=variant | case of any variant)."""
        return self.case_cell(arm, variant) / self.p_any_case()

    def control_conditional(self, arm: str) -> float:
        """P(V=arm | uninfected)."""
        return self.control_cell(arm) / self.p_any_control()


@dataclass(frozen=True)
class RestrictedComparison:
    """Design quantities recomputed over only the cells a comparison uses."""

    arm: str
    ref: str
    variant: int
    coverage: float            # restricted share of the comparison arm
    fraction: float            # share of the cohort inside the four cells
    risk_arm: float            # P(C=i | V=arm)
    risk_ref: float            # P(C=i | V=ref)
    case_fraction: float       # cases retained: P(V in {arm, ref}, C=i | C != 0)
    control_fraction: float    # controls retained: P(V in {arm, ref} | C=0)
    control_share_arm: float   # P(V=arm | C=0) within the retained controls

    def effective_n(self, n: int) -> float:
        return n * self.fraction

    def effective_cases(self, x: int) -> float:
        return x * self.case_fraction

    def effective_controls(self, x: int, r: float) -> float:
        return x * r * self.control_fraction

    def effective_r(self, x: int, r: float) -> float:
        return self.effective_controls(x, r) / self.effective_cases(x)


def comparison_arms(comparison: Comparison) -> tuple[str, str]:
    """(comparison arm, reference arm) for a sample-size comparison."""
    if comparison.scope is ComparisonScope.VARIANT_SPECIFIC:
        return comparison.vaccine, PLACEBO_ARM
    if comparison.scope is ComparisonScope.RELATIVE_VACCINES:
        return comparison.vaccine, comparison.vaccine_ref
    raise NotAvailableError(
        "sample size supports variant-specific and two-vaccine comparisons only"
    )


def restrict_to_comparison(
    joint: ScenarioJoint, comparison: Comparison
) -> RestrictedComparison:
    """Recompute coverage and totals over only the subjects a comparison uses."""
    arm, ref = comparison_arms(comparison)
    for a in (arm, ref):
        if a not in joint.arm_ids:
            raise DimensionError(f"arm {a!r} not present in the scenario")
    i = comparison.variant
    if not 1 <= i <= joint.n_variants:
        raise DimensionError(f"variant {i} outside 1..{joint.n_variants}")
    case_arm, control_arm = joint.case_cell(arm, i), joint.control_cell(arm)
    case_ref, control_ref = joint.case_cell(ref, i), joint.control_cell(ref)
    arm_total = case_arm + control_arm
    ref_total = case_ref + control_ref
    fraction = arm_total + ref_total
    if arm_total == 0.0 or ref_total == 0.0:
        raise DegenerateDesignError(f"comparison {comparison.label()} has an empty arm")
    if case_ref == 0.0:
        raise DegenerateDesignError("reference arm has no expected cases of the variant")
    retained_controls = joint.control_conditional(arm) + joint.control_conditional(ref)
    return RestrictedComparison(
        arm=arm,
        ref=ref,
        variant=i,
        coverage=arm_total / fraction,
        fraction=fraction,
        risk_arm=case_arm / joint.arm_coverage(arm),
        risk_ref=case_ref / joint.arm_coverage(ref),
        case_fraction=joint.case_conditional(arm, i) + joint.case_conditional(ref, i),
        control_fraction=retained_controls,
        control_share_arm=joint.control_conditional(arm) / retained_controls,
    )


# ---------------------------------------------------------------------------
# power functions and their inversion
# ---------------------------------------------------------------------------

def _two_sided_power(effect: float, se_alt: float, se_null: float, alpha: float) -> float:
    """P(|estimate| exceeds the null critical value), estimate ~ N(effect, se_alt)."""
    z = norm.ppf(1.0 - alpha / 2.0)
    main = norm.cdf((effect - z * se_null) / se_alt)
    other = norm.cdf((-effect - z * se_null) / se_alt)
    return float(main + other)


def power_at(
    spec: DesignSpec, joint: ScenarioJoint, comparison: Comparison, ve: float
) -> float:
    """Analytic power of the two-sided test of VE=0 at alternative ``ve``."""
    if not 0.0 < ve < 1.0:
        raise InvalidInputError(f"ve must lie in (0, 1), got {ve}")
    r = restrict_to_comparison(joint, comparison)
    vif = spec.vif
    if spec.design is StudyDesign.COHORT_CRR:
        n_eff = r.effective_n(spec.n)
        n1 = r.coverage * n_eff
        n0 = (1.0 - r.coverage) * n_eff
        if n1 <= 0.0 or n0 <= 0.0:
            raise DegenerateDesignError("restricted design leaves an empty arm")
        p0 = r.risk_ref
        p1 = (1.0 - ve) * p0
        pooled = (n1 * p1 + n0 * p0) / (n1 + n0)
        se_null = math.sqrt(pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n0)) * vif
        se_alt = math.sqrt(p1 * (1.0 - p1) / n1 + p0 * (1.0 - p0) / n0) * vif
        return _two_sided_power(ve * p0, se_alt, se_null, spec.alpha)
    if spec.design is StudyDesign.COHORT_IRR:
        n_eff = r.effective_n(spec.n)
        events_arm = r.coverage * n_eff * (1.0 - ve) * r.risk_ref
        events_ref = (1.0 - r.coverage) * n_eff * r.risk_ref
        if events_arm <= 0.0 or events_ref <= 0.0:
            raise DegenerateDesignError("restricted design expects no events in an arm")
        se = math.sqrt(1.0 / events_arm + 1.0 / events_ref) * vif
        return _two_sided_power(-math.log1p(-ve), se, se, spec.alpha)
    # case-based designs: log odds ratio on expected restricted counts
    cases = r.effective_cases(spec.x)
    controls = r.effective_controls(spec.x, spec.r)
    if cases <= 0.0 or controls <= 0.0:
        raise DegenerateDesignError("restricted design has no cases or no controls")
    p_ctrl = r.control_share_arm
    if not 0.0 < p_ctrl < 1.0:
        raise DegenerateDesignError("all restricted controls fall in one arm")
    psi = 1.0 - ve
    p_case = psi * p_ctrl / (1.0 - p_ctrl + psi * p_ctrl)
    a = cases * p_case
    b = cases * (1.0 - p_case)
    c = controls * p_ctrl
    d = controls * (1.0 - p_ctrl)
    se = math.sqrt(1.0 / a + 1.0 / b + 1.0 / c + 1.0 / d) * vif
    return _two_sided_power(-math.log(psi), se, se, spec.alpha)


@dataclass(frozen=True)
class MdveResult:
    """Smallest detectable VE with the power actually attained there."""

    ve: VeValue
    achieved_power: float
    target_power: float
    design: StudyDesign


def min_detectable_ve(
    spec: DesignSpec, joint: ScenarioJoint, comparison: Comparison
) -> MdveResult:
    """Smallest VE in (0, 1) at which the design reaches its target power.

    The power curve rises with the effect but can fall again as the
    vaccinated arm runs out of expected events, so the maximum is located
    first (golden-section search); bisection then finds the leftmost
    crossing. Raises ``UnattainablePowerError`` (carrying the maximum
    attainable power) when no effect size reaches the target.
    """
    lo_bound, hi_bound = 1e-9, 1.0 - 1e-9

    def p(ve: float) -> float:
        return power_at(spec, joint, comparison, ve)

    # golden-section search for the unimodal maximum
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo_bound, hi_bound
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    pc, pd = p(c), p(d)
    for _ in range(120):
        if pc >= pd:
            b, d, pd = d, c, pc
            c = b - inv_phi * (b - a)
            pc = p(c)
        else:
            a, c, pc = c, d, pd
            d = a + inv_phi * (b - a)
            pd = p(d)
    peak = c if pc >= pd else d
    max_power = max(pc, pd)
    if max_power < spec.power:
        raise UnattainablePowerError(
            f"target power {spec.power} unattainable; maximum is {max_power:.6f}",
            max_power=max_power,
        )
    if p(lo_bound) >= spec.power:
        return MdveResult(
            VeValue(lo_bound, _DESIGN_KIND[spec.design], comparison),
            p(lo_bound),
            spec.power,
            spec.design,
        )
    lo, hi = lo_bound, peak
    for _ in range(BISECTION_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if p(mid) >= spec.power:
            hi = mid
        else:
            lo = mid
        if hi - lo < BISECTION_TOL * 1e-8:
            break
    # hi is the conservative side: power(hi) >= target
    return MdveResult(
        VeValue(hi, _DESIGN_KIND[spec.design], comparison), p(hi), spec.power, spec.design
    )


# ---------------------------------------------------------------------------
# ratio confidence intervals
# ---------------------------------------------------------------------------

class RatioKind(str, Enum):
    OR = "or"
    RR = "rr"
    IRR = "irr"


@dataclass(frozen=True)
class RatioInterval:
    """Log-scale normal interval for a ratio estimate."""

    ratio: float
    lower: float
    upper: float
    se_log: float
    vif: float


def ci_for_ratio(
    kind: RatioKind,
    counts: Sequence[float],
    alpha: float,
    rho: float = 0.0,
    person_time: tuple[float, float] | None = None,
) -> RatioInterval:
    """Normal-approximation CI on the log scale, confounder-inflated.

    Counts are ``(a, b, c, d)`` for OR, ``(a, n1, c, n0)`` for RR, and
    ``(a, c)`` with ``person_time=(T1, T0)`` for IRR. A zero cell raises
    ``DegenerateReplicateError``; the caller decides the discard policy.
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidInputError(f"alpha must lie in (0, 1), got {alpha}")
    if not 0.0 <= rho < 1.0:
        raise InvalidInputError(f"rho must lie in [0, 1), got {rho}")
    if kind is RatioKind.OR:
        a, b, c, d = counts
        if min(a, b, c, d) <= 0.0:
            raise DegenerateReplicateError(f"zero cell in OR table {counts}")
        ratio = (a * d) / (b * c)
        se = math.sqrt(1.0 / a + 1.0 / b + 1.0 / c + 1.0 / d)
    elif kind is RatioKind.RR:
        a, n1, c, n0 = counts
        if a <= 0.0 or c <= 0.0 or n1 <= 0.0 or n0 <= 0.0:
            raise DegenerateReplicateError(f"zero cell in RR table {counts}")
        ratio = (a / n1) / (c / n0)
        se = math.sqrt(max(0.0, 1.0 / a - 1.0 / n1 + 1.0 / c - 1.0 / n0))
    elif kind is RatioKind.IRR:
        if person_time is None:
            raise InvalidInputError("IRR intervals need person_time=(T1, T0)")
        a, c = counts
        t1, t0 = person_time
        if a <= 0.0 or c <= 0.0 or t1 <= 0.0 or t0 <= 0.0:
            raise DegenerateReplicateError(f"zero events or person-time: {counts}, {person_time}")
        ratio = (a / t1) / (c / t0)
        se = math.sqrt(1.0 / a + 1.0 / c)
    else:
        raise InvalidInputError(f"unknown ratio kind {kind!r}")
    vif = 1.0 / math.sqrt(1.0 - rho**2)
    half = norm.ppf(1.0 - alpha / 2.0) * se * vif
    return RatioInterval(
        ratio=ratio,
        lower=math.exp(math.log(ratio) - half),
        upper=math.exp(math.log(ratio) + half),
        se_log=se,
        vif=vif,
    )


# ---------------------------------------------------------------------------
# Monte-Carlo precision
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VeInterval:
    """A VE point estimate with its CI, on the VE (1 - ratio) scale."""

    estimate: float
    lower: float
    upper: float


@dataclass(frozen=True)
class PrecisionResult:
    """Averaged CI bounds plus per-replicate diagnostics."""

    estimate_mean: float
    expected_ci: tuple[float, float]
    sd_of_estimates: float
    n_sim: int
    n_degenerate: int
    seed: int
    replicate_estimates: tuple[float, ...]
    replicate_lower: tuple[float, ...]
    replicate_upper: tuple[float, ...]


def _replicate_rng(seed: int, k: int) -> np.random.Generator:
    # counter-based stream per replicate: results do not depend on scheduling
    return np.random.Generator(np.random.Philox(key=(int(seed) << 64) + k))


def draw_joint_counts(
    joint: ScenarioJoint, n: int, rng: np.random.Generator
) -> dict[str, np.ndarray]:
    """One multinomial draw of all infection-by-vaccination cell counts."""
    probs = np.array([v for arm in joint.arm_ids for v in joint.joint[arm]])
    counts = rng.multinomial(n, probs / probs.sum())
    width = joint.n_variants + 1
    return {
        arm: counts[k * width : (k + 1) * width] for k, arm in enumerate(joint.arm_ids)
    }


def _ve_interval(interval: RatioInterval) -> VeInterval:
    return VeInterval(
        estimate=1.0 - interval.ratio,
        lower=1.0 - interval.upper,
        upper=1.0 - interval.lower,
    )


def _simulate_one(
    k: int,
    spec: DesignSpec,
    joint: ScenarioJoint,
    restricted: RestrictedComparison,
    seed: int,
    rates: EpidemicRates | None,
    actions: Mapping[str, ArmAction] | None,
) -> VeInterval | None:
    """One replicate; None marks a degenerate draw."""
    rng = _replicate_rng(seed, k)
    arm, ref, i = restricted.arm, restricted.ref, restricted.variant
    try:
        if spec.design is StudyDesign.COHORT_CRR:
            counts = draw_joint_counts(joint, spec.n, rng)
            a = float(counts[arm][i])
            n1 = a + float(counts[arm][0])
            c = float(counts[ref][i])
            n0 = c + float(counts[ref][0])
            ci = ci_for_ratio(
                RatioKind.RR, (a, n1, c, n0), spec.alpha, spec.confounder_rho
            )
        elif spec.design is StudyDesign.COHORT_IRR:
            coverage = np.array([joint.arm_coverage(a_) for a_ in joint.arm_ids])
            sizes = rng.multinomial(spec.n, coverage / coverage.sum())
            horizon = StudyHorizon(joint.horizon)
            events: dict[str, float] = {}
            times: dict[str, float] = {}
            for target in (arm, ref):
                size = int(sizes[joint.arm_ids.index(target)])
                if size == 0:
                    return None
                outcome, person_time = draw_cohort(
                    rates, actions[target], horizon, size, rng
                )
                events[target] = float(np.sum(outcome == i))
                times[target] = float(np.sum(person_time))
            ci = ci_for_ratio(
                RatioKind.IRR,
                (events[arm], events[ref]),
                spec.alpha,
                spec.confounder_rho,
                person_time=(times[arm], times[ref]),
            )
        else:
            case_probs = np.array(
                [
                    joint.case_conditional(a_, v)
                    for a_ in joint.arm_ids
                    for v in range(1, joint.n_variants + 1)
                ]
            )
            cases = rng.multinomial(spec.x, case_probs / case_probs.sum())
            control_probs = np.array(
                [joint.control_conditional(a_) for a_ in joint.arm_ids]
            )
            n_controls = int(round(spec.r * spec.x))
            controls = rng.multinomial(n_controls, control_probs / control_probs.sum())
            width = joint.n_variants
            a = float(cases[joint.arm_ids.index(arm) * width + (i - 1)])
            b = float(cases[joint.arm_ids.index(ref) * width + (i - 1)])
            c = float(controls[joint.arm_ids.index(arm)])
            d = float(controls[joint.arm_ids.index(ref)])
            ci = ci_for_ratio(
                RatioKind.OR, (a, b, c, d), spec.alpha, spec.confounder_rho
            )
    except DegenerateReplicateError:
        return None
    return _ve_interval(ci)


def simulate_precision(
    spec: DesignSpec,
    joint: ScenarioJoint,
    comparison: Comparison,
    n_sim: int,
    seed: int,
    rates: EpidemicRates | None = None,
    actions: Mapping[str, ArmAction] | None = None,
    workers: int = 1,
) -> PrecisionResult:
    """Expected VE confidence limits by simulating the full sampling process.

    Cohort replicates draw every infection-by-vaccination cell count from
    the joint multinomial; rate-ratio designs additionally draw
    subject-level competing infection times (``rates`` and per-arm
    ``actions`` are required for those). Case-based replicates draw cases
    and controls from their conditional distributions. Replicates with a
    zero cell are discarded and counted. Replicate k uses stream k of a
    counter-based generator, so results are bitwise identical for any
    ``workers`` count.
    """
    if n_sim < 1:
        raise InvalidInputError("n_sim must be >= 1")
    if seed < 0 or seed >= 2**64:
        raise InvalidInputError("seed must fit in an unsigned 64-bit integer")
    restricted = restrict_to_comparison(joint, comparison)
    if spec.design is StudyDesign.COHORT_IRR:
        if rates is None or actions is None:
            raise InvalidInputError("rate-ratio precision needs rates and per-arm actions")
        missing = {restricted.arm, restricted.ref} - set(actions)
        if missing:
            raise DimensionError(f"actions missing for arms: {sorted(missing)}")

    def run(k: int) -> VeInterval | None:
        return _simulate_one(k, spec, joint, restricted, seed, rates, actions)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(n_sim)))
    else:
        results = [run(k) for k in range(n_sim)]

    kept = [r for r in results if r is not None]
    n_degenerate = n_sim - len(kept)
    if not kept:
        raise NoInformationError("every replicate was degenerate")
    if n_degenerate > DEGENERATE_WARN_FRACTION * n_sim:
        warnings.warn(
            f"{n_degenerate}/{n_sim} replicates degenerate; averages may be biased",
            stacklevel=2,
        )
    estimates = tuple(r.estimate for r in kept)
    lowers = tuple(r.lower for r in kept)
    uppers = tuple(r.upper for r in kept)
    mean = math.fsum(estimates) / len(estimates)
    if len(estimates) > 1:
        sd = math.sqrt(
            math.fsum((e - mean) ** 2 for e in estimates) / (len(estimates) - 1)
        )
    else:
        sd = 0.0
    return PrecisionResult(
        estimate_mean=mean,
        expected_ci=(math.fsum(lowers) / len(lowers), math.fsum(uppers) / len(uppers)),
        sd_of_estimates=sd,
        n_sim=n_sim,
        n_degenerate=n_degenerate,
        seed=seed,
        replicate_estimates=estimates,
        replicate_lower=lowers,
        replicate_upper=uppers,
    )


def expected_cell_precision(
    spec: DesignSpec, joint: ScenarioJoint, comparison: Comparison
) -> VeInterval:
    """The single-cross-table interval computed from expected cell counts.

    This is the baseline that ignores sampling randomness; it is provided
    for comparison against ``simulate_precision``.
    """
    restricted = restrict_to_comparison(joint, comparison)
    arm, ref, i = restricted.arm, restricted.ref, restricted.variant
    try:
        if spec.design is StudyDesign.COHORT_CRR:
            a = spec.n * joint.case_cell(arm, i)
            n1 = a + spec.n * joint.control_cell(arm)
            c = spec.n * joint.case_cell(ref, i)
            n0 = c + spec.n * joint.control_cell(ref)
            ci = ci_for_ratio(RatioKind.RR, (a, n1, c, n0), spec.alpha, spec.confounder_rho)
        elif spec.design is StudyDesign.COHORT_IRR:
            a = spec.n * joint.case_cell(arm, i)
            c = spec.n * joint.case_cell(ref, i)
            t1 = spec.n * joint.arm_coverage(arm) * joint.person_time[arm]
            t0 = spec.n * joint.arm_coverage(ref) * joint.person_time[ref]
            ci = ci_for_ratio(
                RatioKind.IRR, (a, c), spec.alpha, spec.confounder_rho, person_time=(t1, t0)
            )
        else:
            a = spec.x * joint.case_conditional(arm, i)
            b = spec.x * joint.case_conditional(ref, i)
            c = spec.x * spec.r * joint.control_conditional(arm)
            d = spec.x * spec.r * joint.control_conditional(ref)
            ci = ci_for_ratio(RatioKind.OR, (a, b, c, d), spec.alpha, spec.confounder_rho)
    except DegenerateReplicateError as err:
        raise DegenerateDesignError(f"expected cell is zero: {err}") from err
    return _ve_interval(ci)
