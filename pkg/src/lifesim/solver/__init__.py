"""Policy solvers: actor-critic learner and the tabular DP oracle."""

from .actor_critic import (
    TrainConfig,
    TrainResult,
    VectorEnv,
    a2c_loss_grads,
    policy_act,
    train_actor_critic,
    value_estimate,
)
from .checkpoint import config_hash, load_checkpoint, save_checkpoint
from .dp import DiscreteMDP, DpSolution, bellman_residual, dp_solve, greedy_policy_probs, policy_return
from .kfac import KfacPreconditioner
from .network import Adam, ForwardCache, PolicyValueNet, masked_distribution
from .reduced import ReducedConfig, ReducedVectorEnv, build_reduced_mdp

__all__ = [
    "Adam",
    "DiscreteMDP",
    "DpSolution",
    "ForwardCache",
    "KfacPreconditioner",
    "PolicyValueNet",
    "ReducedConfig",
    "ReducedVectorEnv",
    "TrainConfig",
    "TrainResult",
    "VectorEnv",
    "a2c_loss_grads",
    "bellman_residual",
    "config_hash",
    "dp_solve",
    "greedy_policy_probs",
    "load_checkpoint",
    "masked_distribution",
    "policy_act",
    "policy_return",
    "save_checkpoint",
    "train_actor_critic",
    "value_estimate",
]
