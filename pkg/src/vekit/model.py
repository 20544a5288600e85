"""Competing-variants exponential cohort model.

Cumulative risks, survival, and expected person-time for placebo subjects
and for subjects vaccinated with a partial-protection ("leaky") or an
all-or-none vaccine, all variants competing. Closed forms assume constant
per-variant incidence rates over the follow-up window; a subject-level
Monte-Carlo sampler is included as an independent oracle for them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Sequence, Union

import numpy as np

from .errors import (
    CapacityError,
    DimensionError,
    InvalidInputError,
    InvalidProfileError,
)

MAX_VARIANTS = 32          # immunity subsets are bitmasks over variant ids
MIXTURE_TOL = 1e-12        # all-or-none proportions must sum to 1 within this
PROBABILITY_SUM_TOL = 1e-10

#: Arm id of the unvaccinated arm in per-arm mappings.
PLACEBO_ARM = "placebo"


def one_minus_exp_neg(x: float) -> float:
    """1 - exp(-x), accurate for x near 0."""
    return -math.expm1(-x)


def _require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise InvalidInputError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class EpidemicRates:
    """Per-variant forces of infection, variant ids 1..I."""

    lambdas: tuple[float, ...]

    def __init__(self, lambdas: Sequence[float]):
        lams = tuple(_require_finite(f"lambda[{k + 1}]", v) for k, v in enumerate(lambdas))
        if len(lams) < 1:
            raise InvalidInputError("at least one variant rate is required")
        if any(v <= 0.0 for v in lams):
            raise InvalidInputError("every per-variant rate must be > 0")
        object.__setattr__(self, "lambdas", lams)

    @cached_property
    def total(self) -> float:
        """Combined force of infection over all variants."""
        return math.fsum(self.lambdas)

    @property
    def n_variants(self) -> int:
        return len(self.lambdas)


@dataclass(frozen=True)
class StudyHorizon:
    """Follow-up window length, in the same time unit as the rates."""

    t: float

    def __post_init__(self):
        t = _require_finite("t", self.t)
        if t <= 0.0:
            raise InvalidInputError(f"study length must be > 0, got {t}")
        object.__setattr__(self, "t", t)


@dataclass(frozen=True)
class LeakyProfile:
    """Per-variant rate multipliers for a leaky vaccine (0 = full protection)."""

    thetas: tuple[float, ...]

    def __init__(self, thetas: Sequence[float]):
        ths = tuple(_require_finite(f"theta[{k + 1}]", v) for k, v in enumerate(thetas))
        if len(ths) < 1:
            raise InvalidInputError("at least one theta is required")
        if any(not 0.0 <= v <= 1.0 for v in ths):
            raise InvalidInputError("each theta must lie in [0, 1]")
        object.__setattr__(self, "thetas", ths)

    @property
    def n_variants(self) -> int:
        return len(self.thetas)

    def overall(self, rates: EpidemicRates) -> float:
        """Rate-weighted mean multiplier against the given rates (in [0, 1])."""
        self._check_paired(rates)
        return math.fsum(th * lam for th, lam in zip(self.thetas, rates.lambdas)) / rates.total

    def _check_paired(self, rates: EpidemicRates) -> None:
        if rates.n_variants != self.n_variants:
            raise DimensionError(
                f"profile covers {self.n_variants} variants, rates cover {rates.n_variants}"
            )


def subset_mask(variants: Sequence[int]) -> int:
    """Bitmask for a set of 1-based variant ids."""
    mask = 0
    for i in variants:
        if i < 1:
            raise InvalidInputError(f"variant ids are 1-based, got {i}")
        mask |= 1 << (i - 1)
    return mask


def mask_variants(mask: int) -> tuple[int, ...]:
    """1-based variant ids present in a bitmask."""
    return tuple(i + 1 for i in range(mask.bit_length()) if mask >> i & 1)


@dataclass(frozen=True)
class AllOrNoneProfile:
    """Mixture of fully-immune strata for an all-or-none vaccine.

    ``subset_thetas`` maps an immunity subset (bitmask over variant ids) to
    the proportion of vaccinated subjects immune to exactly that subset.
    The empty subset (mask 0) is the proportion left entirely unprotected
    and is stored explicitly; proportions must sum to one.
    """

    n_variants: int
    subset_thetas: Mapping[int, float]

    def __init__(self, n_variants: int, subset_thetas: Mapping[int, float]):
        if n_variants < 1:
            raise InvalidInputError("at least one variant is required")
        if n_variants > MAX_VARIANTS:
            raise CapacityError(
                f"{n_variants} variants exceed the supported maximum of {MAX_VARIANTS}"
            )
        universe = (1 << n_variants) - 1
        cleaned: dict[int, float] = {}
        for mask, theta in subset_thetas.items():
            mask = int(mask)
            theta = _require_finite(f"theta for subset {mask:#b}", theta)
            if mask < 0 or mask & ~universe:
                raise InvalidProfileError(
                    f"subset {mask:#b} is outside the {n_variants}-variant universe"
                )
            if theta < 0.0:
                raise InvalidProfileError(f"subset proportion must be >= 0, got {theta}")
            cleaned[mask] = cleaned.get(mask, 0.0) + theta
        total = math.fsum(cleaned.values())
        if abs(total - 1.0) > MIXTURE_TOL:
            raise InvalidProfileError(
                f"subset proportions must sum to 1 within {MIXTURE_TOL}, got {total!r}"
            )
        object.__setattr__(self, "n_variants", n_variants)
        object.__setattr__(self, "subset_thetas", dict(cleaned))

    @classmethod
    def with_remainder(
        cls, n_variants: int, protected: Mapping[int, float]
    ) -> "AllOrNoneProfile":
        """Build a profile whose unprotected share is one minus the given strata."""
        stated = math.fsum(float(v) for v in protected.values())
        if stated > 1.0 + MIXTURE_TOL:
            raise InvalidProfileError(f"protected proportions sum to {stated} > 1")
        remainder = max(0.0, 1.0 - stated)
        thetas = dict(protected)
        thetas[0] = thetas.get(0, 0.0) + remainder
        return cls(n_variants, thetas)

    def positive_strata(self) -> list[tuple[int, float]]:
        """(mask, proportion) pairs with positive mass, in ascending mask order."""
        return sorted((m, th) for m, th in self.subset_thetas.items() if th > 0.0)

    def variant_immunity(self, variant: int) -> float:
        """Proportion immune to the given variant (sum over subsets containing it)."""
        self._check_variant(variant)
        bit = 1 << (variant - 1)
        return math.fsum(th for m, th in self.subset_thetas.items() if m & bit)

    def _check_variant(self, variant: int) -> None:
        if not 1 <= variant <= self.n_variants:
            raise DimensionError(f"variant {variant} outside 1..{self.n_variants}")


#: Vaccine action of one study arm; ``None`` means placebo.
ArmAction = Union[None, LeakyProfile, AllOrNoneProfile]


@dataclass(frozen=True)
class CohortComponents:
    """Cumulative risks and expected person-time for one study arm."""

    p_control: float
    p_case: tuple[float, ...]
    expected_person_time: float

    def __post_init__(self):
        probs = (self.p_control, *self.p_case)
        if any(not math.isfinite(p) or not -1e-15 <= p <= 1.0 + 1e-15 for p in probs):
            raise InvalidInputError(f"probabilities outside [0, 1]: {probs}")
        total = math.fsum(probs)
        if abs(total - 1.0) > PROBABILITY_SUM_TOL:
            raise InvalidInputError(f"control and case probabilities sum to {total!r}, not 1")
        if not self.expected_person_time > 0.0:
            raise InvalidInputError("expected person-time must be > 0")

    @property
    def n_variants(self) -> int:
        return len(self.p_case)

    def case(self, variant: int) -> float:
        """Cumulative risk of infection by a 1-based variant id."""
        if not 1 <= variant <= self.n_variants:
            raise DimensionError(f"variant {variant} outside 1..{self.n_variants}")
        return self.p_case[variant - 1]


def _competing_components(lambdas: Sequence[float], t: float) -> CohortComponents:
    """Components for constant competing rates; handles the all-zero limit."""
    total = math.fsum(lambdas)
    # total * t == 0.0 catches subnormal underflow: survival is 1 to machine
    # precision, same as the exactly-zero-rate limit
    if total == 0.0 or total * t == 0.0:
        return CohortComponents(1.0, tuple(0.0 for _ in lambdas), t)
    risk_any = one_minus_exp_neg(total * t)
    return CohortComponents(
        p_control=math.exp(-total * t),
        p_case=tuple(lam / total * risk_any for lam in lambdas),
        # min() guards a one-ulp overshoot when total underflows to subnormal
        expected_person_time=min(risk_any / total, t),
    )


def placebo_components(rates: EpidemicRates, horizon: StudyHorizon) -> CohortComponents:
    """Control/case risks and expected person-time for the unvaccinated arm."""
    return _competing_components(rates.lambdas, horizon.t)


def leaky_components(
    rates: EpidemicRates, profile: LeakyProfile, horizon: StudyHorizon
) -> CohortComponents:
    """Components for a leaky arm: every rate thinned by its multiplier."""
    profile._check_paired(rates)
    thinned = tuple(th * lam for th, lam in zip(profile.thetas, rates.lambdas))
    return _competing_components(thinned, horizon.t)


def all_or_none_components(
    rates: EpidemicRates, profile: AllOrNoneProfile, horizon: StudyHorizon
) -> CohortComponents:
    """Components for an all-or-none arm, mixing over immunity strata.

    Each stratum competes only the variants it is not immune to; the
    fully-immune stratum contributes its full share to survival and the
    whole window to person-time.
    """
    if profile.n_variants != rates.n_variants:
        raise DimensionError(
            f"profile covers {profile.n_variants} variants, rates cover {rates.n_variants}"
        )
    t = horizon.t
    lams = rates.lambdas
    full_mask = (1 << rates.n_variants) - 1
    p_control = 0.0
    person_time = 0.0
    p_case = [0.0] * rates.n_variants
    for mask, theta in profile.positive_strata():
        remaining = 0.0 if mask == full_mask else rates.total - math.fsum(
            lams[i] for i in range(rates.n_variants) if mask >> i & 1
        )
        if remaining <= 0.0 or remaining * t == 0.0:
            p_control += theta
            person_time += theta * t
            continue
        risk_any = one_minus_exp_neg(remaining * t)
        p_control += theta * math.exp(-remaining * t)
        person_time += theta * risk_any / remaining
        for i in range(rates.n_variants):
            if not mask >> i & 1:
                p_case[i] += theta * lams[i] / remaining * risk_any
    return CohortComponents(p_control, tuple(p_case), min(person_time, t))


def components_for(
    rates: EpidemicRates, action: ArmAction, horizon: StudyHorizon
) -> CohortComponents:
    """Dispatch on the arm's vaccine action (None = placebo)."""
    if action is None:
        return placebo_components(rates, horizon)
    if isinstance(action, LeakyProfile):
        return leaky_components(rates, action, horizon)
    if isinstance(action, AllOrNoneProfile):
        return all_or_none_components(rates, action, horizon)
    raise InvalidInputError(f"unsupported arm action {type(action).__name__}")


def _rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(seed)))


def draw_cohort(
    rates: EpidemicRates,
    action: ArmAction,
    horizon: StudyHorizon,
    n_subjects: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Sample subject-level outcomes for one arm.

    Returns ``(outcome, person_time)`` where ``outcome[k]`` is 0 for a
    subject still uninfected at the end of follow-up and the 1-based
    variant id otherwise, and ``person_time[k]`` is the censored time on
    study. All-or-none subjects first draw their immunity stratum, then
    compete only the variants they are susceptible to.
    """
    if n_subjects < 1:
        raise InvalidInputError("n_subjects must be >= 1")
    t = horizon.t
    outcome = np.zeros(n_subjects, dtype=np.int64)
    person_time = np.full(n_subjects, t, dtype=np.float64)

    def fill_competing(idx: np.ndarray, lams: Sequence[float]) -> None:
        total = math.fsum(lams)
        if total == 0.0 or idx.size == 0:
            return
        times = rng.exponential(1.0 / total, size=idx.size)
        variants = rng.choice(
            np.arange(1, len(lams) + 1), size=idx.size, p=np.asarray(lams) / total
        )
        infected = times < t
        outcome[idx[infected]] = variants[infected]
        person_time[idx] = np.minimum(times, t)

    if isinstance(action, AllOrNoneProfile):
        if action.n_variants != rates.n_variants:
            raise DimensionError("profile and rates cover different variant counts")
        strata = action.positive_strata()
        probs = np.array([th for _, th in strata])
        assignment = rng.choice(len(strata), size=n_subjects, p=probs / probs.sum())
        for s, (mask, _) in enumerate(strata):
            idx = np.nonzero(assignment == s)[0]
            lams = [
                lam if not mask >> i & 1 else 0.0
                for i, lam in enumerate(rates.lambdas)
            ]
            fill_competing(idx, lams)
    else:
        if action is None:
            lams: Sequence[float] = rates.lambdas
        else:
            action._check_paired(rates)
            lams = [th * lam for th, lam in zip(action.thetas, rates.lambdas)]
        fill_competing(np.arange(n_subjects), lams)
    return outcome, person_time


@dataclass(frozen=True)
class SimulatedComponents:
    """Empirical components plus their Monte-Carlo standard errors."""

    components: CohortComponents
    se_control: float
    se_case: tuple[float, ...]
    se_person_time: float
    n_subjects: int


def simulate_cohort_oracle(
    rates: EpidemicRates,
    action: ArmAction,
    horizon: StudyHorizon,
    n_subjects: int,
    seed: int,
) -> SimulatedComponents:
    """Monte-Carlo estimate of one arm's components, deterministic given seed.

    Serves as an independent check on the closed forms: it never evaluates
    them, only counts simulated outcomes. Parallel callers must use
    distinct seeds; a private generator is used internally.
    """
    rng = _rng_for(seed)
    outcome, person_time = draw_cohort(rates, action, horizon, n_subjects, rng)
    n = n_subjects

    def freq_and_se(count: int) -> tuple[float, float]:
        p = count / n
        return p, math.sqrt(p * (1.0 - p) / n)

    p_control, se_control = freq_and_se(int(np.sum(outcome == 0)))
    cases, se_cases = zip(
        *(freq_and_se(int(np.sum(outcome == i))) for i in range(1, rates.n_variants + 1))
    )
    mean_pt = float(np.mean(person_time))
    se_pt = float(np.std(person_time, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return SimulatedComponents(
        components=CohortComponents(p_control, tuple(cases), mean_pt),
        se_control=se_control,
        se_case=tuple(se_cases),
        se_person_time=se_pt,
        n_subjects=n,
    )
