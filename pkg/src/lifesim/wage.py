"""Potential-wage process, paid wage, and wage-reduction dynamics.

The log of the wage relative to the group age profile follows an annual AR(1)
with autocorrelation ``c`` and shock s.d. ``sigma``; a ``-sigma^2/2`` drift
keeps the conditional mean of the lognormal on the profile.  Quarterly steps
use ``c**dt`` and ``sigma*sqrt(dt)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

from .errors import ContractViolation, ParameterError
from .paramfiles import load_yaml, params_dir
from .states import ALLOWED_HOURS, EmploymentState


@dataclass(frozen=True, slots=True)
class AgeProfile:
    """Quadratic mean-wage curve: base at 18, peak_ratio * base at peak_age."""

    base: float
    peak_ratio: float
    peak_age: float
    floor_ratio: float = 0.85

    def at(self, age: float) -> float:
        span = self.peak_age - 18.0
        rel = 1.0 - ((age - self.peak_age) / span) ** 2
        value = self.base * (1.0 + (self.peak_ratio - 1.0) * rel)
        return max(value, self.base * self.floor_ratio)


@dataclass(frozen=True, slots=True)
class WageParams:
    shock_sd: float
    autocorr: float
    initial_dispersion: float
    profiles: dict[tuple[str, str], AgeProfile]   # (gender, level) -> profile
    reduction_annual: dict[EmploymentState, float]
    recovery_annual: dict[EmploymentState, float]

    def profile(self, gender: str, group: int) -> AgeProfile:
        level = ("low", "mid", "high")[group % 3]
        return self.profiles[(gender, level)]


def load_wage_params(path: str | Path | None = None) -> WageParams:
    doc = load_yaml(path or params_dir() / "wages.yaml")
    try:
        floor = float(doc.get("floor_ratio", 0.85))
        profiles = {
            (gender, level): AgeProfile(
                base=float(p["base"]),
                peak_ratio=float(p["peak_ratio"]),
                peak_age=float(p["peak_age"]),
                floor_ratio=floor,
            )
            for gender, levels in doc["profiles"].items()
            for level, p in levels.items()
        }
        reduction = {EmploymentState[k]: float(v) for k, v in doc["reduction_annual"].items()}
        recovery = {EmploymentState[k]: float(v) for k, v in doc["recovery_annual"].items()}
        params = WageParams(
            shock_sd=float(doc["shock_sd"]),
            autocorr=float(doc["autocorr"]),
            initial_dispersion=float(doc["initial_dispersion"]),
            profiles=profiles,
            reduction_annual=reduction,
            recovery_annual=recovery,
        )
    except (KeyError, ValueError) as exc:
        raise ParameterError(f"malformed wage parameter file: {exc!r}") from exc
    if not 0.0 < params.autocorr < 1.0:
        raise ParameterError("wage autocorrelation must lie in (0, 1)")
    missing = set(EmploymentState) - set(reduction) | set(EmploymentState) - set(recovery)
    if missing:
        raise ParameterError(f"wage reduction table missing states: {sorted(s.name for s in missing)}")
    return params


def potential_wage_step(
    prev_wage: float,
    prev_age: float,
    age: float,
    gender: str,
    group: int,
    params: WageParams,
    shock: float,
    dt: float = 1.0,
) -> float:
    """One step of the relative log-wage AR(1).

    ``shock`` is a standard-normal draw supplied by the caller so parallel
    agents can use independent, seedable streams.
    """
    profile = params.profile(gender, group)
    a_prev = profile.at(prev_age)
    a_now = profile.at(age)
    c = params.autocorr ** dt
    sd = params.shock_sd * math.sqrt(dt)
    x = c * math.log(prev_wage / a_prev) + sd * shock - 0.5 * sd * sd
    return a_now * math.exp(x)


def paid_wage(potential_annual: float, hours: int, reduction: float) -> float:
    """Paid annual wage: (hours/40) * potential * (1 - reduction)."""
    if hours not in ALLOWED_HOURS:
        raise ContractViolation(f"weekly hours must be one of {ALLOWED_HOURS}, got {hours}")
    return (hours / 40.0) * potential_annual * (1.0 - reduction)


def update_wage_reduction(
    reduction: float,
    state: EmploymentState,
    params: WageParams,
    dt: float = 0.25,
) -> float:
    """Move the wage reduction by the state's net annual rate over ``dt``."""
    rate = params.reduction_annual[state] - params.recovery_annual[state]
    return min(1.0, max(0.0, reduction + rate * dt))
