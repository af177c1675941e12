"""Employment states shared by the rules engine and the decision environment."""

from __future__ import annotations

from enum import IntEnum


class EmploymentState(IntEnum):
    FULL_TIME = 0
    PART_TIME = 1
    ER_UNEMPLOYED = 2       # earnings-related benefit
    BASIC_UNEMPLOYED = 3    # basic allowance / labor market support
    ER_EXTENDED = 4         # age-gated ER continuation until retirement
    RETIRED = 5
    RETIRED_PT = 6
    RETIRED_FT = 7
    DISABLED = 8
    MOTHERS_LEAVE = 9
    FATHERS_LEAVE = 10
    HOME_CARE = 11          # child home care allowance
    STUDENT = 12
    OUTSIDE_WF = 13
    SICK_LEAVE = 14
    DEAD = 15


S = EmploymentState

N_STATES = len(EmploymentState)

WORKING_STATES = frozenset({S.FULL_TIME, S.PART_TIME, S.RETIRED_PT, S.RETIRED_FT})
UNEMPLOYMENT_STATES = frozenset({S.ER_UNEMPLOYED, S.BASIC_UNEMPLOYED, S.ER_EXTENDED})
RETIRED_STATES = frozenset({S.RETIRED, S.RETIRED_PT, S.RETIRED_FT})
PENSION_STATES = frozenset({S.RETIRED, S.RETIRED_PT, S.RETIRED_FT, S.DISABLED})
LEAVE_STATES = frozenset({S.MOTHERS_LEAVE, S.FATHERS_LEAVE})
# States counted as part of the labor force.
WORKFORCE_STATES = WORKING_STATES | UNEMPLOYMENT_STATES

FULL_TIME_HOURS = (32, 40, 48)
PART_TIME_HOURS = (8, 16, 24)
ALLOWED_HOURS = PART_TIME_HOURS + FULL_TIME_HOURS
