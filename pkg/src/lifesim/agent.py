"""Agent and household state containers.

A household record always holds one or two adults (a fixed opposite-sex pair
when two) plus their common children; partnership toggles whether they pool
income and consumption.  All time counters are quarters unless a name says
years; wages are annual rates; pensions EUR/month.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .states import EmploymentState as S

NO_EVENT = -1   # clock value when no event is scheduled


@dataclass(slots=True)
class AgentState:
    gender: str                  # "men" / "women"
    group: int                   # 0 low, 1 mid, 2 high
    age: float
    state: S
    hours: int = 0
    potential_wage: float = 24000.0
    paid_wage: float = 0.0       # annual rate while working
    prev_paid_wage: float = 0.0
    wage_reduction: float = 0.0
    pink_slip: bool = False
    career_quarters: int = 0
    time_in_state: float = 0.0   # years
    # retirement block
    pension_accrued: float = 0.0     # EUR/mo before the life-expectancy cut
    pension_paid: float = 0.0        # EUR/mo in payment
    partial_early_share: float = 0.0
    partial_early_paid: float = 0.0  # EUR/mo
    # unemployment block
    fund_member: bool = True
    work_window: list[tuple[bool, float]] = field(default_factory=list)  # (worked, quarterly wage)
    new_condition_quarters: int = 0
    ub_basis: float = 0.0            # EUR/mo
    ub_days_used: float = 0.0
    ub_max_days: float = 400.0
    er_began_age: float = 0.0
    unemp_after_ra: bool = False
    # pre-drawn event clocks, in quarters
    until_disability: int = NO_EVENT
    until_student: int = NO_EVENT
    until_outsider: int = NO_EVENT
    life_left: int = 0
    # forced-spell bookkeeping
    spell_left: int = 0          # remaining forced quarters in a leave/spell
    sick_quarters: int = 0
    returning: bool = False      # spell just ended: D*/D^ decision node

    @property
    def alive(self) -> bool:
        return self.state is not S.DEAD

    def condition_quarters(self) -> int:
        return sum(1 for worked, _ in self.work_window if worked)

    def condition_wage_monthly(self) -> float:
        wages = [w for worked, w in self.work_window if worked]
        if not wages:
            return 0.0
        return sum(wages) / len(wages) / 3.0


@dataclass(slots=True)
class HouseholdState:
    index: int
    adults: tuple[AgentState, ...]
    partnered: bool = False
    child_ages: list[float] = field(default_factory=list)
    until_birth: int = NO_EVENT
    until_marriage: int = NO_EVENT
    until_divorce: int = NO_EVENT
    rng_exo: np.random.Generator | None = None
    rng_act: np.random.Generator | None = None

    def children_bands(self) -> tuple[int, int, int]:
        u3 = sum(1 for a in self.child_ages if a < 3.0)
        u7 = sum(1 for a in self.child_ages if a < 7.0)
        u18 = len(self.child_ages)
        return u3, u7, u18

    def alive_adults(self) -> list[AgentState]:
        return [a for a in self.adults if a.alive]

    def couple_active(self) -> bool:
        return self.partnered and len(self.adults) == 2


def mother_of(hh: HouseholdState) -> AgentState | None:
    women = [a for a in hh.adults if a.gender == "women"]
    return women[0] if women else None
