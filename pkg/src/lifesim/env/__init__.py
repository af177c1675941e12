"""Quarterly household decision environment."""

from .actions import ACTIONS, N_ACTIONS, Action, Decision, legal_actions, legal_mask
from ..agent import NO_EVENT, AgentState, HouseholdState
from .features import OBS_DIM, encode
from .mdp import DECISION_END_AGE, DT, LifecycleEnv, StepOutcome
from .transitions import LEGAL, is_legal, legality_matrix
from .utility import UtilityParams, kappa, load_utility_params, mu_term, utility

__all__ = [
    "ACTIONS",
    "Action",
    "AgentState",
    "DECISION_END_AGE",
    "DT",
    "Decision",
    "HouseholdState",
    "LEGAL",
    "LifecycleEnv",
    "N_ACTIONS",
    "NO_EVENT",
    "OBS_DIM",
    "StepOutcome",
    "UtilityParams",
    "encode",
    "is_legal",
    "kappa",
    "legal_actions",
    "legal_mask",
    "legality_matrix",
    "load_utility_params",
    "mu_term",
    "utility",
]
