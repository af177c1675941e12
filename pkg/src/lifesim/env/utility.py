"""Per-period utility: log consumption plus free-time terms.

``u = log(c / D) + kappa - mu`` for a living agent, 0 for a dead one.
``kappa`` prices lost free time by employment state (and weekly hours for
work states); ``mu`` adds extra taste for leisure around the minimum
retirement age.  Couples evaluate utility on half the household consumption.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

from ..errors import ContractViolation, ParameterError
from ..paramfiles import load_yaml, params_dir
from ..states import EmploymentState as S, UNEMPLOYMENT_STATES, WORKING_STATES


@dataclass(frozen=True, slots=True)
class GenderPrefs:
    kappa_work: dict[int, float]          # weekly hours -> kappa
    kappa_unemployed: tuple[float, float, float]   # young / middle / elderly
    kappa_sick: float
    kappa_student: float
    kappa_retired: float
    kappa_home_care: float
    kappa_child_under3: float
    kappa_outside: float
    kappa_parental: float
    q1: float                             # mu slope before retirement age, per h/40
    q2: float                             # mu slope after retirement age, per h/40
    s_age_offset: float                   # S_age = r_age + offset
    s_ret_offset: float                   # S_ret = r_age + offset


@dataclass(frozen=True, slots=True)
class UtilityParams:
    discount_annual: float
    dt: float
    deflator_base: float
    deflator_series: dict[int, float]
    prefs: dict[str, GenderPrefs]
    unemployed_age_cuts: tuple[float, float]
    feature_scales: dict[str, float]

    @property
    def step_discount(self) -> float:
        return self.discount_annual ** self.dt

    def deflator(self, year: int | None = None) -> float:
        if year is not None and year in self.deflator_series:
            return self.deflator_series[year]
        return self.deflator_base


def load_utility_params(path: str | Path | None = None) -> UtilityParams:
    doc = load_yaml(path or params_dir() / "utility.yaml")
    try:
        prefs = {}
        for gender, k in doc["kappa"].items():
            mu = doc["mu"][gender]
            prefs[gender] = GenderPrefs(
                kappa_work={int(h): float(v) for h, v in k["work_hours"].items()},
                kappa_unemployed=(
                    float(k["unemployed_young"]),
                    float(k["unemployed_middle"]),
                    float(k["unemployed_elderly"]),
                ),
                kappa_sick=float(k["sick_leave"]),
                kappa_student=float(k["student"]),
                kappa_retired=float(k["retired"]),
                kappa_home_care=float(k["home_care"]),
                kappa_child_under3=float(k["child_under3_bonus"]),
                kappa_outside=float(k["outside_wf"]),
                kappa_parental=float(k["parental_leave"]),
                q1=float(mu["q1"]),
                q2=float(mu["q2"]),
                s_age_offset=float(mu["s_age_offset"]),
                s_ret_offset=float(mu["s_ret_offset"]),
            )
        params = UtilityParams(
            discount_annual=float(doc["discount_annual"]),
            dt=float(doc["timestep_years"]),
            deflator_base=float(doc["deflator"]["base"]),
            deflator_series={int(y): float(v) for y, v in doc["deflator"].get("series", {}).items()},
            prefs=prefs,
            unemployed_age_cuts=tuple(float(c) for c in doc["unemployed_age_cuts"]),
            feature_scales={k: float(v) for k, v in doc["feature_scales"].items()},
        )
    except (KeyError, ValueError) as exc:
        raise ParameterError(f"malformed utility parameter file: {exc!r}") from exc
    if not 0.0 < params.discount_annual < 1.0:
        raise ParameterError("annual discount factor must lie in (0, 1)")
    for gender, p in params.prefs.items():
        hours = sorted(p.kappa_work)
        values = [p.kappa_work[h] for h in hours]
        if any(b > a for a, b in zip(values, values[1:])):
            raise ParameterError(f"work kappas must be non-increasing in hours ({gender})")
    return params


def kappa(
    state: S,
    gender: str,
    hours: int,
    age: float,
    pink_slip: bool,
    has_child_under3: bool,
    params: UtilityParams,
) -> float:
    p = params.prefs[gender]
    if state in WORKING_STATES:
        k = p.kappa_work[hours]
    elif state in UNEMPLOYMENT_STATES:
        if pink_slip:
            k = 0.0
        else:
            young_cut, elderly_cut = params.unemployed_age_cuts
            if age < young_cut:
                k = p.kappa_unemployed[0]
            elif age < elderly_cut:
                k = p.kappa_unemployed[1]
            else:
                k = p.kappa_unemployed[2]
    elif state is S.SICK_LEAVE:
        k = p.kappa_sick
    elif state is S.STUDENT:
        k = p.kappa_student
    elif state in (S.RETIRED, S.DISABLED):
        k = p.kappa_retired
    elif state is S.HOME_CARE:
        k = p.kappa_home_care
    elif state in (S.MOTHERS_LEAVE, S.FATHERS_LEAVE):
        k = p.kappa_parental
    elif state is S.OUTSIDE_WF:
        k = p.kappa_outside
    else:
        k = 0.0
    if has_child_under3:
        k += p.kappa_child_under3
    return k


def mu_term(
    age: float,
    gender: str,
    hours: int,
    retirement_age: float,
    params: UtilityParams,
) -> float:
    """Retirement-proximity leisure preference; zero when not working."""
    if not 18.0 <= age <= 100.0:
        raise ContractViolation(f"age {age} outside model range")
    if hours <= 0:
        return 0.0
    p = params.prefs[gender]
    s_age = retirement_age + p.s_age_offset
    s_ret = retirement_age + p.s_ret_offset
    h = hours / 40.0
    return p.q1 * h * max(0.0, min(age, retirement_age) - s_age) + p.q2 * h * max(
        0.0, min(age, s_ret) - retirement_age
    )


def utility(
    consumption_quarterly: float,
    state: S,
    gender: str,
    hours: int,
    age: float,
    pink_slip: bool,
    has_child_under3: bool,
    retirement_age: float,
    params: UtilityParams,
    year: int | None = None,
) -> float:
    """One-quarter utility for one agent (not yet scaled by dt)."""
    if state is S.DEAD:
        return 0.0
    if consumption_quarterly <= 0.0:
        raise ContractViolation(
            "living agents must have positive consumption; the social assistance floor should prevent this"
        )
    c_annual = 4.0 * consumption_quarterly
    k = kappa(state, gender, hours, age, pink_slip, has_child_under3, params)
    m = mu_term(age, gender, hours, retirement_age, params)
    return math.log(c_annual / params.deflator(year)) + k - m
