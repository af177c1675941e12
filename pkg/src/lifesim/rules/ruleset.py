"""Rule-set schema: year-indexed tax, contribution and benefit parameters.

A :class:`RuleSet` is an immutable snapshot of the institutional environment.
Reform overlays produce patched copies; nothing here mutates in place.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, is_dataclass, replace
from pathlib import Path
from typing import Any

import yaml

from ..errors import ParameterError

QUARTERS_PER_YEAR = 4
MONTHS_PER_QUARTER = 3
# 5 benefit days per week, 13 weeks per quarter.
BENEFIT_DAYS_PER_QUARTER = 65
BENEFIT_DAYS_PER_MONTH = 21.67


@dataclass(frozen=True, slots=True)
class TaxRules:
    state_brackets: tuple[tuple[float, float], ...]  # (lower bound EUR/yr, marginal rate)
    municipal_rate: float
    standard_deduction: float
    yle_rate: float
    yle_floor: float
    yle_cap: float
    vat_rate: float


@dataclass(frozen=True, slots=True)
class EmployeeContrib:
    pension: float
    unemployment: float
    health_medical: float
    health_daily: float

    @property
    def total_rate(self) -> float:
        return self.pension + self.unemployment + self.health_medical + self.health_daily


@dataclass(frozen=True, slots=True)
class EmployerContrib:
    pension: float
    health: float
    unemployment: float
    accident: float

    @property
    def total_rate(self) -> float:
        return self.pension + self.health + self.unemployment + self.accident


@dataclass(frozen=True, slots=True)
class ErBenefitRules:
    days_per_month: float
    rate_low: float
    rate_high: float
    breakpoint_monthly: float
    max_days_default: int
    short_career_days: int
    short_career_years: float
    senior_days: int
    senior_age: float
    senior_career_years: float
    condition_months: int
    condition_window_quarters: int
    # Grading: ordered (from-day, multiplier) steps; empty means no grading.
    grading: tuple[tuple[int, float], ...]
    extended_min_age: float | None


@dataclass(frozen=True, slots=True)
class UnemploymentRules:
    basic_daily: float
    days_per_week: int
    er: ErBenefitRules


@dataclass(frozen=True, slots=True)
class BasicPensionRules:
    full: float
    taper: float
    cutoff: float


@dataclass(frozen=True, slots=True)
class PartialEarlyRules:
    shares: tuple[float, ...]
    min_age: float
    reduction_per_year: float


@dataclass(frozen=True, slots=True)
class PensionRules:
    accrual_rate: float
    life_expectancy_coefficient: float
    basic: BasicPensionRules
    guarantee_level: float
    min_retirement_age: float
    max_insured_age: float
    partial_early: PartialEarlyRules
    survivor_share: float


@dataclass(frozen=True, slots=True)
class HousingBenefitSchedule:
    compensation_share: float
    income_deductible_rate: float
    income_base: float
    per_adult: float
    per_child: float
    earnings_disregard: float
    max_rent_by_size: tuple[float, ...]


@dataclass(frozen=True, slots=True)
class SocialAssistanceRules:
    norm_single: float
    norm_couple_each: float
    norm_child_under7: float
    norm_child_7_17: float
    single_parent_supplement: float
    earnings_disregard: float


@dataclass(frozen=True, slots=True)
class DaycareRules:
    rate: float
    income_threshold_monthly: float
    fee_cap_monthly: float
    sibling_share: float


@dataclass(frozen=True, slots=True)
class FamilyRules:
    child_benefit_monthly: float
    child_benefit_single_parent_supplement: float
    home_care_allowance_monthly: float
    parental_replacement: float
    sickness_replacement: float
    student_allowance_monthly: float
    daycare: DaycareRules


@dataclass(frozen=True, slots=True)
class RuleSet:
    year: int
    tax: TaxRules
    employee_contrib: EmployeeContrib
    employer_contrib: EmployerContrib
    unemployment: UnemploymentRules
    pension: PensionRules
    housing_general: HousingBenefitSchedule
    housing_retiree: HousingBenefitSchedule
    social_assistance: SocialAssistanceRules
    family: FamilyRules
    rent_table: tuple[float, ...]

    def rent_for_size(self, size: int) -> float:
        idx = min(max(size, 1), len(self.rent_table)) - 1
        return self.rent_table[idx]


def _rates_in_unit_interval(obj: Any, path: str, problems: list[str]) -> None:
    """Collect any rate-like field outside [0, 1]."""
    if is_dataclass(obj):
        for f in fields(obj):
            _rates_in_unit_interval(getattr(obj, f.name), f"{path}.{f.name}", problems)
    elif isinstance(obj, float) and ("rate" in path.split(".")[-1] or path.endswith("share")):
        if not 0.0 <= obj <= 1.0:
            problems.append(f"{path} = {obj} outside [0, 1]")


def validate_ruleset(rs: RuleSet) -> None:
    problems: list[str] = []
    _rates_in_unit_interval(rs, "ruleset", problems)

    bounds = [lo for lo, _ in rs.tax.state_brackets]
    if sorted(set(bounds)) != bounds:
        problems.append("state bracket bounds must be strictly increasing")

    grading = rs.unemployment.er.grading
    if grading:
        days = [d for d, _ in grading]
        mults = [m for _, m in grading]
        if days != sorted(set(days)):
            problems.append("grading day thresholds must be strictly increasing")
        if any(b > a for a, b in zip(mults, mults[1:])):
            problems.append("grading multipliers must be non-increasing")
        if any(not 0.0 < m <= 1.0 for m in mults):
            problems.append("grading multipliers must lie in (0, 1]")

    if rs.pension.basic.cutoff <= 0:
        problems.append("basic pension cutoff must be positive")
    if not 0.0 < rs.pension.life_expectancy_coefficient <= 1.0:
        problems.append("life expectancy coefficient outside (0, 1]")
    if not rs.rent_table:
        problems.append("rent table is empty")

    if problems:
        raise ParameterError("invalid rule set: " + "; ".join(problems))


def _brackets(raw: Any) -> tuple[tuple[float, float], ...]:
    return tuple((float(lo), float(rate)) for lo, rate in raw)


def ruleset_from_mapping(doc: dict[str, Any]) -> RuleSet:
    try:
        tax = doc["tax"]
        yle = tax["yle"]
        contrib = doc["contributions"]
        unemp = doc["unemployment"]
        er = unemp["er"]
        pen = doc["pension"]
        bp = pen["basic_pension"]
        pe = pen["partial_early"]
        hb = doc["housing_benefit"]
        sa = doc["social_assistance"]
        fam = doc["family"]
        dc = fam["daycare"]

        grading_raw = er.get("grading") or []
        extended = er.get("extended_min_age")

        def housing(raw: dict[str, Any]) -> HousingBenefitSchedule:
            return HousingBenefitSchedule(
                compensation_share=float(raw["compensation_share"]),
                income_deductible_rate=float(raw["income_deductible_rate"]),
                income_base=float(raw["income_base"]),
                per_adult=float(raw["per_adult"]),
                per_child=float(raw["per_child"]),
                earnings_disregard=float(raw["earnings_disregard"]),
                max_rent_by_size=tuple(float(x) for x in raw["max_rent_by_size"]),
            )

        rs = RuleSet(
            year=int(doc["year"]),
            tax=TaxRules(
                state_brackets=_brackets(tax["state_brackets"]),
                municipal_rate=float(tax["municipal_rate"]),
                standard_deduction=float(tax["standard_deduction"]),
                yle_rate=float(yle["rate"]),
                yle_floor=float(yle["floor"]),
                yle_cap=float(yle["cap"]),
                vat_rate=float(tax["vat_rate"]),
            ),
            employee_contrib=EmployeeContrib(**{k: float(v) for k, v in contrib["employee"].items()}),
            employer_contrib=EmployerContrib(**{k: float(v) for k, v in contrib["employer"].items()}),
            unemployment=UnemploymentRules(
                basic_daily=float(unemp["basic_daily"]),
                days_per_week=int(unemp["days_per_week"]),
                er=ErBenefitRules(
                    days_per_month=float(er["days_per_month"]),
                    rate_low=float(er["rate_low"]),
                    rate_high=float(er["rate_high"]),
                    breakpoint_monthly=float(er["breakpoint_monthly"]),
                    max_days_default=int(er["max_days_default"]),
                    short_career_days=int(er["short_career_days"]),
                    short_career_years=float(er["short_career_years"]),
                    senior_days=int(er["senior_days"]),
                    senior_age=float(er["senior_age"]),
                    senior_career_years=float(er["senior_career_years"]),
                    condition_months=int(er["condition_months"]),
                    condition_window_quarters=int(er["condition_window_quarters"]),
                    grading=tuple((int(d), float(m)) for d, m in grading_raw),
                    extended_min_age=None if extended is None else float(extended),
                ),
            ),
            pension=PensionRules(
                accrual_rate=float(pen["accrual_rate"]),
                life_expectancy_coefficient=float(pen["life_expectancy_coefficient"]),
                basic=BasicPensionRules(
                    full=float(bp["full"]), taper=float(bp["taper"]), cutoff=float(bp["cutoff"])
                ),
                guarantee_level=float(pen["guarantee_level"]),
                min_retirement_age=float(pen["min_retirement_age"]),
                max_insured_age=float(pen["max_insured_age"]),
                partial_early=PartialEarlyRules(
                    shares=tuple(float(s) for s in pe["shares"]),
                    min_age=float(pe["min_age"]),
                    reduction_per_year=float(pe["reduction_per_year"]),
                ),
                survivor_share=float(pen["survivor_share"]),
            ),
            housing_general=housing(hb["general"]),
            housing_retiree=housing(hb["retiree"]),
            social_assistance=SocialAssistanceRules(**{k: float(v) for k, v in sa.items()}),
            family=FamilyRules(
                child_benefit_monthly=float(fam["child_benefit_monthly"]),
                child_benefit_single_parent_supplement=float(
                    fam["child_benefit_single_parent_supplement"]
                ),
                home_care_allowance_monthly=float(fam["home_care_allowance_monthly"]),
                parental_replacement=float(fam["parental_replacement"]),
                sickness_replacement=float(fam["sickness_replacement"]),
                student_allowance_monthly=float(fam["student_allowance_monthly"]),
                daycare=DaycareRules(**{k: float(v) for k, v in dc.items()}),
            ),
            rent_table=tuple(float(x) for x in doc["rent_table"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParameterError(f"malformed rule-set document: {exc!r}") from exc
    validate_ruleset(rs)
    return rs


def load_ruleset(path: str | Path) -> RuleSet:
    path = Path(path)
    if not path.exists():
        raise ParameterError(f"rule-set file not found: {path}")
    with path.open() as f:
        doc = yaml.safe_load(f)
    if not isinstance(doc, dict):
        raise ParameterError(f"rule-set file is not a mapping: {path}")
    return ruleset_from_mapping(doc)
