"""Sample-size tests: restriction arithmetic, power inversion, ratio CIs,
and the seeded Monte-Carlo precision machinery."""
import math

import numpy as np
import pytest
from scipy.stats import norm

from vekit.errors import (
    DegenerateDesignError,
    DegenerateReplicateError,
    InvalidInputError,
    NoInformationError,
    NotAvailableError,
    UnattainablePowerError,
)
from vekit.measures import Comparison, VeMeasureKind
from vekit.model import (
    PLACEBO_ARM,
    EpidemicRates,
    LeakyProfile,
    StudyHorizon,
    leaky_components,
    placebo_components,
)
from vekit.samplesize import (
    DesignSpec,
    RatioKind,
    ScenarioJoint,
    StudyDesign,
    ci_for_ratio,
    draw_joint_counts,
    expected_cell_precision,
    min_detectable_ve,
    power_at,
    restrict_to_comparison,
    simulate_precision,
)

RATES = EpidemicRates([0.10, 0.05])
HORIZON = StudyHorizon(2.0)
LEAKY_M = LeakyProfile([0.4, 0.8])
P_CASE1_PLACEBO = 0.17278785287885473


def reference_joint(coverage_m=0.6):
    components = {
        PLACEBO_ARM: placebo_components(RATES, HORIZON),
        "m": leaky_components(RATES, LEAKY_M, HORIZON),
    }
    return ScenarioJoint.from_components(
        {PLACEBO_ARM: 1.0 - coverage_m, "m": coverage_m}, components, HORIZON
    )


def single_variant_joint(risk_ref=P_CASE1_PLACEBO, risk_arm=0.07, coverage=0.5):
    return ScenarioJoint(
        arm_ids=(PLACEBO_ARM, "m"),
        horizon=2.0,
        joint={
            PLACEBO_ARM: ((1.0 - coverage) * (1.0 - risk_ref), (1.0 - coverage) * risk_ref),
            "m": (coverage * (1.0 - risk_arm), coverage * risk_arm),
        },
        person_time={PLACEBO_ARM: 1.7, "m": 1.8},
    )


# ---------------------------------------------------------------------------
# restriction
# ---------------------------------------------------------------------------

def test_restriction_is_identity_for_single_vaccine_single_variant():
    joint = single_variant_joint()
    r = restrict_to_comparison(joint, Comparison.variant_specific(1, "m"))
    assert r.fraction == pytest.approx(1.0, abs=1e-12)
    assert r.coverage == pytest.approx(0.5, abs=1e-12)
    assert r.risk_ref == pytest.approx(P_CASE1_PLACEBO, rel=1e-12)


def test_restriction_symmetric_two_vaccines():
    comp = leaky_components(RATES, LEAKY_M, HORIZON)
    joint = ScenarioJoint.from_components(
        {PLACEBO_ARM: 0.2, "m": 0.4, "n": 0.4},
        {PLACEBO_ARM: placebo_components(RATES, HORIZON), "m": comp, "n": comp},
        HORIZON,
    )
    r = restrict_to_comparison(joint, Comparison.relative_vaccines(1, "m", "n"))
    assert r.coverage == pytest.approx(0.5, abs=1e-14)
    assert r.control_share_arm == pytest.approx(0.5, abs=1e-14)


def test_restriction_reference_scenario_cells():
    joint = reference_joint(coverage_m=0.6)
    r = restrict_to_comparison(joint, Comparison.variant_specific(1, "m"))
    # hand arithmetic on the joint cells of the closed forms
    p0 = placebo_components(RATES, HORIZON)
    pm = leaky_components(RATES, LEAKY_M, HORIZON)
    cell_case_m = 0.6 * pm.case(1)
    cell_ctrl_m = 0.6 * pm.p_control
    cell_case_0 = 0.4 * p0.case(1)
    cell_ctrl_0 = 0.4 * p0.p_control
    fraction = cell_case_m + cell_ctrl_m + cell_case_0 + cell_ctrl_0
    assert r.fraction == pytest.approx(fraction, rel=1e-14)
    assert r.coverage == pytest.approx((cell_case_m + cell_ctrl_m) / fraction, rel=1e-14)
    assert r.risk_ref == pytest.approx(p0.case(1), rel=1e-14)
    assert r.effective_n(1000) == pytest.approx(1000 * fraction, rel=1e-14)


def test_restriction_rejects_relative_variants():
    with pytest.raises(NotAvailableError):
        restrict_to_comparison(reference_joint(), Comparison.relative_variants(1, 2, "m"))


def test_restriction_degenerate_empty_arm():
    joint = reference_joint(coverage_m=0.0)
    with pytest.raises(DegenerateDesignError):
        restrict_to_comparison(joint, Comparison.variant_specific(1, "m"))


# ---------------------------------------------------------------------------
# power and its inversion
# ---------------------------------------------------------------------------

def crr_spec(n, power=0.8, rho=0.0):
    return DesignSpec(StudyDesign.COHORT_CRR, n=n, alpha=0.05, power=power, confounder_rho=rho)


def test_power_increases_with_effect_and_n():
    joint = single_variant_joint()
    comparison = Comparison.variant_specific(1, "m")
    p_small = power_at(crr_spec(2000), joint, comparison, 0.1)
    p_large = power_at(crr_spec(2000), joint, comparison, 0.4)
    assert p_small < p_large
    assert power_at(crr_spec(4000), joint, comparison, 0.1) > p_small


def test_mdve_power_matches_target():
    joint = single_variant_joint()
    comparison = Comparison.variant_specific(1, "m")
    for design, kwargs in (
        (StudyDesign.COHORT_CRR, dict(n=2000)),
        (StudyDesign.COHORT_IRR, dict(n=2000)),
        (StudyDesign.CASE_CONTROL_OR, dict(x=300, r=2.0)),
        (StudyDesign.TND_INCLUSIVE_OR, dict(x=300, r=2.0)),
    ):
        spec = DesignSpec(design, alpha=0.05, power=0.8, **kwargs)
        result = min_detectable_ve(spec, joint, comparison)
        assert abs(result.achieved_power - 0.8) < 1e-6
        assert abs(power_at(spec, joint, comparison, result.ve.value) - 0.8) < 1e-6
        assert 0.0 < result.ve.value < 1.0


def test_mdve_kind_follows_design():
    joint = single_variant_joint()
    comparison = Comparison.variant_specific(1, "m")
    assert (
        min_detectable_ve(crr_spec(2000), joint, comparison).ve.kind is VeMeasureKind.CRR
    )
    spec = DesignSpec(StudyDesign.TND_INCLUSIVE_OR, x=300, r=2.0)
    assert min_detectable_ve(spec, joint, comparison).ve.kind is VeMeasureKind.OR


def test_mdve_monotone_in_n_x_and_rho():
    joint = single_variant_joint()
    comparison = Comparison.variant_specific(1, "m")
    mdves = [
        min_detectable_ve(crr_spec(n), joint, comparison).ve.value
        for n in (1000, 2000, 4000, 8000)
    ]
    assert all(b < a for a, b in zip(mdves, mdves[1:]))
    xs = [
        min_detectable_ve(
            DesignSpec(StudyDesign.CASE_CONTROL_OR, x=x, r=2.0), joint, comparison
        ).ve.value
        for x in (100, 200, 400)
    ]
    assert all(b < a for a, b in zip(xs, xs[1:]))
    rhos = [
        min_detectable_ve(crr_spec(2000, rho=rho), joint, comparison).ve.value
        for rho in (0.0, 0.3, 0.6)
    ]
    assert all(b > a for a, b in zip(rhos, rhos[1:]))


def test_mdve_infinite_information_limit():
    joint = single_variant_joint()
    comparison = Comparison.variant_specific(1, "m")
    result = min_detectable_ve(crr_spec(10**9), joint, comparison)
    assert result.ve.value < 1e-3


def test_mdve_unattainable_carries_max_power():
    joint = single_variant_joint(risk_ref=1e-4)
    comparison = Comparison.variant_specific(1, "m")
    with pytest.raises(UnattainablePowerError) as err:
        min_detectable_ve(crr_spec(50, power=0.99), joint, comparison)
    assert 0.0 < err.value.max_power < 0.99


def test_mdve_rejection_rate_smoke():
    # simulated rejection rate of the matching z-test at the returned MDVE
    joint = single_variant_joint()
    comparison = Comparison.variant_specific(1, "m")
    spec = crr_spec(2000)
    mdve = min_detectable_ve(spec, joint, comparison).ve.value
    rng = np.random.Generator(np.random.Philox(key=2024))
    n1 = n0 = 1000
    p0 = P_CASE1_PLACEBO
    p1 = (1.0 - mdve) * p0
    reps = 3000
    x1 = rng.binomial(n1, p1, size=reps)
    x0 = rng.binomial(n0, p0, size=reps)
    ph1, ph0 = x1 / n1, x0 / n0
    pooled = (x1 + x0) / (n1 + n0)
    se = np.sqrt(pooled * (1 - pooled) * (1 / n1 + 1 / n0))
    z = np.abs(ph1 - ph0) / se
    rate = float(np.mean(z > norm.ppf(0.975)))
    assert abs(rate - 0.8) < 0.04


# ---------------------------------------------------------------------------
# ratio confidence intervals
# ---------------------------------------------------------------------------

def test_or_interval_reference_values():
    ci = ci_for_ratio(RatioKind.OR, (100, 100, 100, 100), alpha=0.05)
    assert ci.ratio == 1.0
    assert ci.lower == pytest.approx(0.6757089811370457, rel=1e-12)
    assert ci.upper == pytest.approx(1.4799270513132077, rel=1e-12)


def test_rho_zero_is_identity_and_inflation_ratio():
    base = ci_for_ratio(RatioKind.OR, (100, 100, 100, 100), alpha=0.05, rho=0.0)
    assert base.vif == 1.0
    inflated = ci_for_ratio(RatioKind.OR, (100, 100, 100, 100), alpha=0.05, rho=0.5)
    width = math.log(inflated.upper) - math.log(inflated.lower)
    base_width = math.log(base.upper) - math.log(base.lower)
    assert width / base_width == pytest.approx(1.0 / math.sqrt(0.75), rel=1e-12)


def test_rr_and_irr_intervals():
    rr = ci_for_ratio(RatioKind.RR, (30, 100, 60, 100), alpha=0.05)
    assert rr.ratio == pytest.approx(0.5, rel=1e-12)
    assert rr.se_log == pytest.approx(
        math.sqrt(1 / 30 - 1 / 100 + 1 / 60 - 1 / 100), rel=1e-12
    )
    irr = ci_for_ratio(RatioKind.IRR, (30, 60), alpha=0.05, person_time=(100.0, 100.0))
    assert irr.ratio == pytest.approx(0.5, rel=1e-12)
    assert irr.se_log == pytest.approx(math.sqrt(1 / 30 + 1 / 60), rel=1e-12)


def test_zero_cell_raises_degenerate_signal():
    with pytest.raises(DegenerateReplicateError):
        ci_for_ratio(RatioKind.OR, (0, 100, 100, 100), alpha=0.05)
    with pytest.raises(DegenerateReplicateError):
        ci_for_ratio(RatioKind.IRR, (0, 10), alpha=0.05, person_time=(1.0, 1.0))


def test_ci_validation():
    with pytest.raises(InvalidInputError):
        ci_for_ratio(RatioKind.OR, (1, 1, 1, 1), alpha=1.5)
    with pytest.raises(InvalidInputError):
        ci_for_ratio(RatioKind.OR, (1, 1, 1, 1), alpha=0.05, rho=1.0)
    with pytest.raises(InvalidInputError):
        ci_for_ratio(RatioKind.IRR, (1, 1), alpha=0.05)


# ---------------------------------------------------------------------------
# multinomial and person-time samplers
# ---------------------------------------------------------------------------

def test_person_time_sampler_matches_expected_within_3se():
    # the precision machinery reuses the subject-level cohort sampler
    from vekit.model import draw_cohort

    rng = np.random.Generator(np.random.Philox(key=4243))
    n = 200_000
    _, person_time = draw_cohort(RATES, LEAKY_M, HORIZON, n, rng)
    expected = leaky_components(RATES, LEAKY_M, HORIZON).expected_person_time
    se = float(np.std(person_time, ddof=1)) / math.sqrt(n)
    assert abs(float(np.mean(person_time)) - expected) <= 3 * se


def test_joint_sampler_frequencies_within_4se():
    joint = reference_joint()
    rng = np.random.Generator(np.random.Philox(key=99))
    n = 10**6
    counts = draw_joint_counts(joint, n, rng)
    assert sum(int(c.sum()) for c in counts.values()) == n
    for arm in joint.arm_ids:
        for c, p in enumerate(joint.joint[arm]):
            se = math.sqrt(p * (1 - p) / n)
            assert abs(counts[arm][c] / n - p) <= 4 * se + 1e-12


# ---------------------------------------------------------------------------
# precision simulation
# ---------------------------------------------------------------------------

def precision_args(design=StudyDesign.COHORT_CRR, **kwargs):
    joint = reference_joint()
    comparison = Comparison.variant_specific(1, "m")
    if design in (StudyDesign.COHORT_CRR, StudyDesign.COHORT_IRR):
        spec = DesignSpec(design, n=kwargs.pop("n", 2000), **kwargs)
    else:
        spec = DesignSpec(design, x=kwargs.pop("x", 400), r=kwargs.pop("r", 2.0), **kwargs)
    return spec, joint, comparison


def test_precision_deterministic_and_thread_invariant():
    spec, joint, comparison = precision_args()
    a = simulate_precision(spec, joint, comparison, n_sim=64, seed=7)
    b = simulate_precision(spec, joint, comparison, n_sim=64, seed=7)
    assert a == b
    c = simulate_precision(spec, joint, comparison, n_sim=64, seed=7, workers=4)
    assert a == c
    d = simulate_precision(spec, joint, comparison, n_sim=64, seed=8)
    assert d != a


def test_precision_single_replicate():
    spec, joint, comparison = precision_args()
    res = simulate_precision(spec, joint, comparison, n_sim=1, seed=3)
    assert res.n_sim == 1
    assert res.sd_of_estimates == 0.0
    assert res.expected_ci[0] <= res.estimate_mean <= res.expected_ci[1]


def test_precision_bounds_bracket_estimates():
    spec, joint, comparison = precision_args()
    res = simulate_precision(spec, joint, comparison, n_sim=200, seed=5)
    assert res.expected_ci[0] < res.estimate_mean < res.expected_ci[1]
    for lo, est, hi in zip(
        res.replicate_lower, res.replicate_estimates, res.replicate_upper
    ):
        assert lo < est < hi


def test_precision_rho_same_estimates_wider_intervals():
    spec0, joint, comparison = precision_args(confounder_rho=0.0)
    spec5, _, _ = precision_args(confounder_rho=0.5)
    r0 = simulate_precision(spec0, joint, comparison, n_sim=100, seed=11)
    r5 = simulate_precision(spec5, joint, comparison, n_sim=100, seed=11)
    assert r0.replicate_estimates == r5.replicate_estimates
    assert r5.expected_ci[0] < r0.expected_ci[0]
    assert r5.expected_ci[1] > r0.expected_ci[1]


def test_precision_irr_design_draws_person_time():
    spec, joint, comparison = precision_args(StudyDesign.COHORT_IRR)
    actions = {PLACEBO_ARM: None, "m": LEAKY_M}
    res = simulate_precision(
        spec, joint, comparison, n_sim=200, seed=13, rates=RATES, actions=actions
    )
    # IRR estimates centre near the horizon-free measure
    assert abs(res.estimate_mean - 0.6) < 0.05
    with pytest.raises(InvalidInputError):
        simulate_precision(spec, joint, comparison, n_sim=10, seed=1)


def test_precision_case_based_centres_near_or_measure():
    spec, joint, comparison = precision_args(StudyDesign.TND_INCLUSIVE_OR, x=2000)
    res = simulate_precision(spec, joint, comparison, n_sim=200, seed=17)
    # case-control odds ratio of case vs control cells is the OR measure
    assert abs(res.estimate_mean - 0.6280409398709003) < 0.03


def test_precision_quartered_cohort_doubles_width():
    _, joint, comparison = precision_args()
    widths = {}
    for n in (2000, 8000):
        res = simulate_precision(crr_spec(n), joint, comparison, n_sim=400, seed=23)
        logs = [
            math.log1p(-lo) - math.log1p(-hi)
            for lo, hi in zip(res.replicate_lower, res.replicate_upper)
        ]
        widths[n] = sum(logs) / len(logs)
    assert widths[8000] / widths[2000] == pytest.approx(0.5, abs=0.05)


def test_precision_all_degenerate_raises():
    spec = DesignSpec(StudyDesign.CASE_CONTROL_OR, x=1, r=1.0)
    joint = reference_joint()
    comparison = Comparison.variant_specific(1, "m")
    with pytest.raises(NoInformationError):
        simulate_precision(spec, joint, comparison, n_sim=20, seed=29)


def test_precision_degenerate_warning():
    spec = DesignSpec(StudyDesign.CASE_CONTROL_OR, x=4, r=1.0)
    joint = reference_joint()
    comparison = Comparison.variant_specific(1, "m")
    with pytest.warns(UserWarning, match="degenerate"):
        simulate_precision(spec, joint, comparison, n_sim=300, seed=31)


def test_precision_coverage_calibration_smoke():
    spec, joint, comparison = precision_args(n=2000)
    res = simulate_precision(spec, joint, comparison, n_sim=1500, seed=37)
    true_ve = 0.5721452388859366
    hits = [
        lo <= true_ve <= hi for lo, hi in zip(res.replicate_lower, res.replicate_upper)
    ]
    assert 0.92 <= sum(hits) / len(hits) <= 0.98


# ---------------------------------------------------------------------------
# expected-cell baseline
# ---------------------------------------------------------------------------

def test_expected_cell_rho_zero_identity():
    spec, joint, comparison = precision_args()
    a = expected_cell_precision(spec, joint, comparison)
    b = expected_cell_precision(crr_spec(2000, rho=0.0), joint, comparison)
    assert a == b


def test_expected_cell_symmetric_or():
    # symmetric case-control: expected OR interval straight from the formula
    joint = single_variant_joint(risk_ref=0.2, risk_arm=0.2, coverage=0.5)
    spec = DesignSpec(StudyDesign.CASE_CONTROL_OR, x=200, r=1.0)
    res = expected_cell_precision(spec, joint, Comparison.variant_specific(1, "m"))
    assert res.estimate == pytest.approx(0.0, abs=1e-12)
    a = b = 100.0
    c = d = 100.0
    half = norm.ppf(0.975) * math.sqrt(1 / a + 1 / b + 1 / c + 1 / d)
    assert res.lower == pytest.approx(1.0 - math.exp(half), rel=1e-12)


def test_expected_cell_matches_simulation_for_large_n():
    _, joint, comparison = precision_args()
    spec = crr_spec(200_000)
    cell = expected_cell_precision(spec, joint, comparison)
    sim = simulate_precision(spec, joint, comparison, n_sim=300, seed=41)
    assert sim.estimate_mean == pytest.approx(cell.estimate, abs=0.01)
    assert sim.expected_ci[0] == pytest.approx(cell.lower, abs=0.01)
    assert sim.expected_ci[1] == pytest.approx(cell.upper, abs=0.01)


def test_design_spec_validation():
    with pytest.raises(InvalidInputError):
        DesignSpec(StudyDesign.COHORT_CRR, n=1)
    with pytest.raises(InvalidInputError):
        DesignSpec(StudyDesign.CASE_CONTROL_OR, x=10)  # missing r
    with pytest.raises(InvalidInputError):
        DesignSpec(StudyDesign.COHORT_CRR, n=100, alpha=0.0)
    with pytest.raises(InvalidInputError):
        DesignSpec(StudyDesign.COHORT_CRR, n=100, confounder_rho=1.0)
