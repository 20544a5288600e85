"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines as they
complete. Expected values tagged as derived were computed with independent
oracles (hand expansions, direct formula evaluation, Monte-Carlo
simulation) and frozen here.
"""
import math
import time
from contextlib import contextmanager

import numpy as np
from scipy.stats import norm

from vekit.measures import (
    Comparison,
    LimitKind,
    PiecewiseConstantHazard,
    VeMeasureKind,
    aon_ve_closed_form,
    leaky_ve_closed_form,
    relative_ve_varying_hazard,
    ve_from_components,
    ve_limit,
    ve_point,
)
from vekit.model import (
    PLACEBO_ARM,
    AllOrNoneProfile,
    EpidemicRates,
    LeakyProfile,
    StudyHorizon,
    components_for,
    leaky_components,
    placebo_components,
    simulate_cohort_oracle,
)
from vekit.samplesize import (
    DesignSpec,
    ScenarioJoint,
    StudyDesign,
    min_detectable_ve,
    simulate_precision,
)
from vekit.tnd import ControlSampling, TndParams, expected_counts, tnd_ve

KINDS = (VeMeasureKind.IRR, VeMeasureKind.CRR, VeMeasureKind.OR)

RATES = EpidemicRates([0.10, 0.05])
LEAKY_M = LeakyProfile([0.4, 0.8])
LEAKY_N = LeakyProfile([0.5, 0.7])
AON = AllOrNoneProfile(2, {0: 0.4, 0b01: 0.3, 0b10: 0.2, 0b11: 0.1})
VE_CRR_REF = 0.5721452388859366


@contextmanager
def criterion(number: int, description: str):
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {number:>2} FAIL  {description}")
        raise
    elapsed = time.perf_counter() - start
    print(f"ACCEPTANCE {number:>2} PASS  {description}  [{elapsed:.2f}s]")


def random_action(rng, n_variants: int):
    """A random vaccine action: leaky or all-or-none."""
    if rng.random() < 0.5:
        return LeakyProfile(rng.uniform(0.05, 1.0, n_variants))
    weights = rng.uniform(0.0, 1.0, 2**n_variants)
    weights /= weights.sum()
    return AllOrNoneProfile(n_variants, dict(enumerate(weights)))


def random_scenario(rng, max_variants=5, max_vaccines=3):
    n = int(rng.integers(1, max_variants + 1))
    rates = EpidemicRates(rng.uniform(0.01, 1.0, n))
    actions = [random_action(rng, n) for _ in range(int(rng.integers(1, max_vaccines + 1)))]
    horizon = StudyHorizon(float(rng.uniform(0.1, 5.0)))
    return rates, actions, horizon


def test_c1_distribution_closure():
    with criterion(1, "distribution closure on 200 randomized scenarios"):
        start = time.perf_counter()
        rng = np.random.default_rng(20240101)
        for _ in range(200):
            rates, actions, horizon = random_scenario(rng)
            for action in (None, *actions):
                comp = components_for(rates, action, horizon)
                total = comp.p_control + math.fsum(comp.p_case)
                assert abs(total - 1.0) < 1e-10
        assert time.perf_counter() - start < 1.0


def test_c2_monte_carlo_agreement():
    with criterion(2, "closed forms match the cohort oracle within 3 SEs, 20 scenarios"):
        start = time.perf_counter()
        rng = np.random.default_rng(20240202)
        for k in range(20):
            rates, actions, horizon = random_scenario(rng)
            action = (None, *actions)[k % (len(actions) + 1)]
            exact = components_for(rates, action, horizon)
            sim = simulate_cohort_oracle(rates, action, horizon, 10**6, seed=5000 + k)
            assert abs(sim.components.p_control - exact.p_control) <= 3 * sim.se_control + 1e-9
            for emp, true, se in zip(sim.components.p_case, exact.p_case, sim.se_case):
                assert abs(emp - true) <= 3 * se + 1e-9
            assert (
                abs(sim.components.expected_person_time - exact.expected_person_time)
                <= 3 * sim.se_person_time + 1e-9
            )
        assert time.perf_counter() - start < 60.0


def test_c3_leaky_ordering_and_irr_constancy():
    with criterion(3, "leaky variant-specific ordering CRR <= IRR <= OR; IRR flat"):
        grid = np.linspace(0.1, 10.0, 34)
        rng = np.random.default_rng(20240303)
        cases = [(RATES, LEAKY_M, 1)]
        for _ in range(10):
            n = int(rng.integers(1, 6))
            cases.append(
                (
                    EpidemicRates(rng.uniform(0.01, 1.0, n)),
                    LeakyProfile(rng.uniform(0.05, 0.95, n)),
                    int(rng.integers(1, n + 1)),
                )
            )
        for rates, profile, variant in cases:
            irr_values = []
            strict = 0.0 < profile.thetas[variant - 1] < 1.0
            for t in grid:
                crr = leaky_ve_closed_form(VeMeasureKind.CRR, rates, profile, variant, t).value
                irr = leaky_ve_closed_form(VeMeasureKind.IRR, rates, profile, variant, t).value
                orv = leaky_ve_closed_form(VeMeasureKind.OR, rates, profile, variant, t).value
                if strict:
                    assert crr < irr < orv
                else:
                    assert crr <= irr <= orv
                irr_values.append(irr)
            assert max(irr_values) - min(irr_values) <= 1e-12


def test_c4_relative_variants_invariance_and_varying_hazard():
    with criterion(4, "leaky relative-variants VE constant, incl. varying hazards"):
        grid = np.linspace(0.1, 10.0, 34)
        comparison = Comparison.relative_variants(1, 2)
        expected = 1.0 - 0.4 / 0.8
        for kind in KINDS:
            for t in grid:
                value = ve_point(kind, comparison, RATES, LEAKY_M, None, float(t)).value
                assert abs(value - expected) <= 1e-12
        hazard = PiecewiseConstantHazard((0.0, 1.0), (0.05, 0.2))
        for t in (0.5, 2.0, 8.0):
            got = relative_ve_varying_hazard(hazard, 2.0, 0.4, 0.8, t=t).value
            assert abs(got - expected) <= 1e-10


def test_c5_all_or_none_headline():
    with criterion(5, "all-or-none CRR time-dependence with 2 variants"):
        # independent hand expansion of the four strata at t=2 (frozen; the
        # same expansion verified at 50-digit precision)
        lam1, lam2, total, t = 0.10, 0.05, 0.15, 2.0
        case1 = (
            0.4 * lam1 / total * (1.0 - math.exp(-total * t))
            + 0.2 * (1.0 - math.exp(-lam1 * t))
        )
        placebo1 = lam1 / total * (1.0 - math.exp(-total * t))
        oracle_t2 = 1.0 - case1 / placebo1
        assert abs(oracle_t2 - 0.3901828816067182) < 1e-15

        at_zero = aon_ve_closed_form(VeMeasureKind.CRR, RATES, AON, 1, 1e-9).value
        at_two = aon_ve_closed_form(VeMeasureKind.CRR, RATES, AON, 1, 2.0).value
        assert abs(at_zero - 0.400000) <= 1e-6
        assert abs(at_two - oracle_t2) <= 1e-6
        assert abs(at_zero - at_two) > 1e-3  # the time-dependence itself

        single = AllOrNoneProfile(1, {0: 0.7, 0b1: 0.3})
        rates1 = EpidemicRates([0.2])
        for t_ in (0.1, 1.0, 5.0, 20.0):
            value = aon_ve_closed_form(VeMeasureKind.CRR, rates1, single, 1, t_).value
            assert abs(value - 0.3) <= 1e-12


def test_c6_tnd_identities_and_cancellation():
    with criterion(6, "TND inclusive=CRR, density=IRR, behavioural cancellation"):
        rng = np.random.default_rng(20240606)
        for _ in range(40):
            rates, actions, horizon = random_scenario(rng, max_vaccines=2)
            arms = {PLACEBO_ARM: None}
            arms.update({f"v{k}": a for k, a in enumerate(actions)})
            components = {
                arm: components_for(rates, action, horizon) for arm, action in arms.items()
            }
            shares = rng.dirichlet(np.ones(len(arms)))
            coverage = {arm: float(s) for arm, s in zip(arms, shares)}
            coverage[PLACEBO_ARM] += 1.0 - math.fsum(coverage.values())

            def params(sampling, scale_case=1.0, scale_off=1.0, scale_seek=None):
                seek = {arm: float(rng_fixed[arm]) for arm in arms}
                if scale_seek:
                    seek = {arm: min(1.0, v * scale_seek[arm]) for arm, v in seek.items()}
                return TndParams(
                    population=1e5,
                    rate_offtarget=0.3,
                    p_symptom_case=tuple(
                        min(1.0, v * scale_case) for v in sym_case
                    ),
                    p_symptom_offtarget=min(1.0, 0.4 * scale_off),
                    p_seek_care=seek,
                    p_vaccinated=coverage,
                    sampling=sampling,
                )

            sym_case = rng.uniform(0.2, 0.9, rates.n_variants)
            rng_fixed = {arm: rng.uniform(0.2, 0.9) for arm in arms}
            variant = int(rng.integers(1, rates.n_variants + 1))
            vaccine = next(a for a in arms if a != PLACEBO_ARM)

            for sampling, kind in (
                (ControlSampling.INCLUSIVE, VeMeasureKind.CRR),
                (ControlSampling.DENSITY, VeMeasureKind.IRR),
            ):
                counts = expected_counts(params(sampling), components, horizon)
                got = tnd_ve(counts, variant, vaccine).value
                want = ve_from_components(
                    kind, components[vaccine], components[PLACEBO_ARM], variant
                ).value
                assert abs(got - want) <= 1e-12 * max(1.0, abs(want))

            base = expected_counts(params(ControlSampling.INCLUSIVE), components, horizon)
            rescaled = expected_counts(
                params(
                    ControlSampling.INCLUSIVE,
                    scale_case=0.7,
                    scale_off=1.4,
                    scale_seek={arm: (0.5 if arm == PLACEBO_ARM else 1.1) for arm in arms},
                ),
                components,
                horizon,
            )
            a = tnd_ve(base, variant, vaccine).value
            b = tnd_ve(rescaled, variant, vaccine).value
            assert abs(a - b) <= 1e-12 * max(1.0, abs(a))


def test_c7_limits_matched_by_curve_endpoints():
    with criterion(7, "small/large leaky limits matched by curve endpoints"):
        comparison = Comparison.variant_specific(1)
        t_small = 1e-9 / RATES.total
        t_large = 2000.0 / RATES.total
        for kind in KINDS:
            small = ve_limit(kind, comparison, RATES, LEAKY_M, None, LimitKind.SMALL_LAMBDA_T)
            at_small = ve_point(kind, comparison, RATES, LEAKY_M, None, t_small)
            assert abs(at_small.value - small.value) <= 1e-6
            large = ve_limit(kind, comparison, RATES, LEAKY_M, None, LimitKind.LARGE_LAMBDA_T)
            at_large = ve_point(kind, comparison, RATES, LEAKY_M, None, t_large)
            assert abs(at_large.value - large.value) <= 1e-3
        # odds-ratio saturation at 1 is part of the loop above (OR large limit)
        rel = Comparison.relative_vaccines(1)
        small = ve_limit(
            VeMeasureKind.CRR, rel, RATES, LEAKY_M, LEAKY_N, LimitKind.SMALL_LAMBDA_T
        )
        at_small = ve_point(VeMeasureKind.CRR, rel, RATES, LEAKY_M, LEAKY_N, t_small)
        assert abs(at_small.value - small.value) <= 1e-6
        large = ve_limit(
            VeMeasureKind.CRR, rel, RATES, LEAKY_M, LEAKY_N, LimitKind.LARGE_LAMBDA_T
        )
        at_large = ve_point(VeMeasureKind.CRR, rel, RATES, LEAKY_M, LEAKY_N, t_large)
        assert abs(at_large.value - large.value) <= 1e-3
        # the divergent direction: swap arms so the comparison vaccine is weaker
        swapped = Comparison.relative_vaccines(1, "n", "m")
        diverging = ve_limit(
            VeMeasureKind.OR, swapped, RATES, LEAKY_N, LEAKY_M, LimitKind.LARGE_LAMBDA_T
        )
        assert diverging.divergent
        trajectory = [
            ve_point(VeMeasureKind.OR, swapped, RATES, LEAKY_N, LEAKY_M, t).value
            for t in (1000.0, 2000.0, 4000.0)
        ]
        assert trajectory[0] > trajectory[1] > trajectory[2]
        assert trajectory[-1] < -1e3


def build_reference_joint():
    horizon = StudyHorizon(2.0)
    components = {
        PLACEBO_ARM: placebo_components(RATES, horizon),
        "m": leaky_components(RATES, LEAKY_M, horizon),
    }
    return ScenarioJoint.from_components(
        {PLACEBO_ARM: 0.5, "m": 0.5}, components, horizon
    )


def spec_example_joint():
    """Single-variant joint matching the stated example: coverage 0.5,
    reference risk 0.172788, restriction leaves everything unchanged."""
    risk_ref = 0.17278785287885473
    risk_arm = 0.07392810551689433
    return ScenarioJoint(
        arm_ids=(PLACEBO_ARM, "m"),
        horizon=2.0,
        joint={
            PLACEBO_ARM: (0.5 * (1.0 - risk_ref), 0.5 * risk_ref),
            "m": (0.5 * (1.0 - risk_arm), 0.5 * risk_arm),
        },
        person_time={PLACEBO_ARM: 1.7278785287885472, "m": 1.8482026379223577},
    )


def test_c8_sample_size():
    with criterion(8, "MDVE monotonicity, power match, rejection rate, coverage, scaling"):
        start = time.perf_counter()
        comparison = Comparison.variant_specific(1, "m")

        # monotone in n, x, rho; analytic power within 1e-6 of target
        joint = build_reference_joint()
        mdves = []
        for n in (1000, 2000, 4000, 8000):
            spec = DesignSpec(StudyDesign.COHORT_CRR, n=n)
            res = min_detectable_ve(spec, joint, comparison)
            assert abs(res.achieved_power - spec.power) <= 1e-6
            mdves.append(res.ve.value)
        assert all(b < a for a, b in zip(mdves, mdves[1:]))
        x_mdves = [
            min_detectable_ve(
                DesignSpec(StudyDesign.TND_INCLUSIVE_OR, x=x, r=2.0), joint, comparison
            ).ve.value
            for x in (200, 400, 800)
        ]
        assert all(b < a for a, b in zip(x_mdves, x_mdves[1:]))
        rho_mdves = [
            min_detectable_ve(
                DesignSpec(StudyDesign.COHORT_CRR, n=2000, confounder_rho=rho),
                joint,
                comparison,
            ).ve.value
            for rho in (0.0, 0.25, 0.5, 0.75)
        ]
        assert all(b > a for a, b in zip(rho_mdves, rho_mdves[1:]))

        # simulated rejection rate at the returned MDVE (spec example design)
        example = spec_example_joint()
        spec = DesignSpec(StudyDesign.COHORT_CRR, n=2000, alpha=0.05, power=0.8)
        restricted = min_detectable_ve(spec, example, comparison)
        mdve = restricted.ve.value
        rng = np.random.default_rng(np.random.Philox(key=20240808))
        reps = 10_000
        n1 = n0 = 1000
        p0 = 0.17278785287885473
        p1 = (1.0 - mdve) * p0
        x1 = rng.binomial(n1, p1, size=reps)
        x0 = rng.binomial(n0, p0, size=reps)
        pooled = (x1 + x0) / (n1 + n0)
        se = np.sqrt(pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n0))
        z = np.abs(x1 / n1 - x0 / n0) / se
        rejection = float(np.mean(z > norm.ppf(0.975)))
        assert abs(rejection - 0.8) <= 0.02

        # CI coverage of simulate_precision on the leaky reference scenario
        spec = DesignSpec(StudyDesign.COHORT_CRR, n=2000, alpha=0.05, power=0.8)
        res = simulate_precision(spec, joint, comparison, n_sim=10_000, seed=20240809)
        hits = [
            lo <= VE_CRR_REF <= hi
            for lo, hi in zip(res.replicate_lower, res.replicate_upper)
        ]
        coverage = sum(hits) / len(hits)
        assert 0.93 <= coverage <= 0.97

        # quadrupling n halves the mean log CI width within 10%
        widths = {}
        for n in (2000, 8000):
            spec_n = DesignSpec(StudyDesign.COHORT_CRR, n=n)
            r = simulate_precision(spec_n, joint, comparison, n_sim=2000, seed=20240810)
            logs = [
                math.log1p(-lo) - math.log1p(-hi)
                for lo, hi in zip(r.replicate_lower, r.replicate_upper)
            ]
            widths[n] = sum(logs) / len(logs)
        assert abs(widths[8000] / widths[2000] - 0.5) <= 0.05
        assert time.perf_counter() - start < 120.0


def test_c9_determinism():
    with criterion(9, "same seed gives bitwise-identical simulations, any workers"):
        horizon = StudyHorizon(2.0)
        a = simulate_cohort_oracle(RATES, LEAKY_M, horizon, 50_000, seed=99)
        b = simulate_cohort_oracle(RATES, LEAKY_M, horizon, 50_000, seed=99)
        assert a == b

        joint = build_reference_joint()
        comparison = Comparison.variant_specific(1, "m")
        spec = DesignSpec(StudyDesign.COHORT_CRR, n=2000)
        runs = [
            simulate_precision(spec, joint, comparison, n_sim=256, seed=7, workers=w)
            for w in (1, 2, 4)
        ]
        assert runs[0] == runs[1] == runs[2]

        irr_spec = DesignSpec(StudyDesign.COHORT_IRR, n=1000)
        actions = {PLACEBO_ARM: None, "m": LEAKY_M}
        irr_runs = [
            simulate_precision(
                irr_spec, joint, comparison, n_sim=64, seed=11,
                rates=RATES, actions=actions, workers=w,
            )
            for w in (1, 4)
        ]
        assert irr_runs[0] == irr_runs[1]
