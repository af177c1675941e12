"""Wiring between parameter files, the trainer, the simulator and the
comparison machinery; shared by the command-line entry points and the
acceptance suite."""

from __future__ import annotations

import copy
import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .env import LifecycleEnv, load_utility_params
from .env.vector import LifecycleVectorEnv
from .errors import ConfigError
from .paramfiles import params_dir, ruleset_path
from .population import DemographicTables, init_population, load_demographics
from .reform import ComparisonReport, ReformSpec, apply_reform, compare_runs
from .rules import RuleSet, load_ruleset
from .simulate import RepeatResult, aggregate, repeat_protocol, run_cohort
from .solver import TrainConfig, TrainResult, train_actor_critic
from .solver.network import PolicyValueNet
from .wage import load_wage_params


@dataclass
class EnvPaths:
    ruleset: Path
    utility: Path
    wages: Path
    demographics: Path

    @classmethod
    def packaged(cls, year: int = 2023) -> "EnvPaths":
        p = params_dir()
        return cls(
            ruleset=ruleset_path(year),
            utility=p / "utility.yaml",
            wages=p / "wages.yaml",
            demographics=p / "demographics.yaml",
        )


def build_env(paths: EnvPaths, rules: RuleSet | None = None) -> LifecycleEnv:
    rules = rules if rules is not None else load_ruleset(paths.ruleset)
    return LifecycleEnv(
        rules=rules,
        uparams=load_utility_params(paths.utility),
        wparams=load_wage_params(paths.wages),
        tables=load_demographics(paths.demographics),
    )


def with_rules(env: LifecycleEnv, rules: RuleSet) -> LifecycleEnv:
    """Same tables and preferences, different institutional rules."""
    return LifecycleEnv(rules=rules, uparams=env.uparams, wparams=env.wparams, tables=env.tables)


def train_policy(env: LifecycleEnv, config: TrainConfig, n_households: int = 32,
                 base_net: PolicyValueNet | None = None, year: int | None = None) -> TrainResult:
    venv = LifecycleVectorEnv(env, n_households=n_households, seed=config.seed,
                              year=year if year is not None else env.rules.year)
    net = base_net.clone() if base_net is not None else None
    return train_actor_critic(venv, config, net=net)


@dataclass
class ProtocolConfig:
    refit_steps: int = 5_000_000
    n_repeats: int = 50
    cohort_size: int = 50_000
    n_households: int = 32
    mode: str = "sample"
    seed: int = 0
    collect_incentives: bool = False
    refit: TrainConfig | None = None

    def refit_config(self, repeat_index: int, base_seed_salt: int) -> TrainConfig:
        base = self.refit or TrainConfig(total_steps=self.refit_steps, seed=0)
        return dataclasses.replace(
            base,
            total_steps=self.refit_steps,
            seed=int(np.random.SeedSequence((self.seed, base_seed_salt, repeat_index)).generate_state(1)[0]),
        )


def run_repeat_protocol(base_net: PolicyValueNet, env: LifecycleEnv,
                        protocol: ProtocolConfig, arm_salt: int = 0) -> RepeatResult:
    """The refit-then-simulate loop; repeat ``i`` of every arm shares the
    population seed so rule changes are isolated from sampling noise."""

    def make_refit(i: int) -> PolicyValueNet:
        if protocol.refit_steps <= 0:
            return base_net
        cfg = protocol.refit_config(i, arm_salt)
        return train_policy(env, cfg, n_households=protocol.n_households,
                            base_net=base_net).net

    def make_population(i: int):
        # Population seeds are paired across arms: they do not carry the salt.
        return init_population(protocol.cohort_size, env.tables,
                               seed=int(np.random.SeedSequence((protocol.seed, i)).generate_state(1)[0]))

    return repeat_protocol(make_refit, make_population, env,
                           n_repeats=protocol.n_repeats, mode=protocol.mode,
                           collect_incentives=protocol.collect_incentives)


@dataclass
class ReformRun:
    comparison: ComparisonReport
    baseline: RepeatResult
    reform: RepeatResult


def reform_pipeline(base_net: PolicyValueNet, spec: ReformSpec, env: LifecycleEnv,
                    protocol: ProtocolConfig, confidence: float = 0.99) -> ReformRun:
    """Retrain under the reformed rules with identical preferences, run the
    repeat protocol on both arms with paired population seeds, compare."""
    reformed_rules, _ = apply_reform(env.rules, spec)
    env_reform = with_rules(env, reformed_rules)
    if env_reform.uparams is not env.uparams:
        raise ConfigError("utility parameters must be shared across arms")

    baseline = run_repeat_protocol(base_net, env, protocol, arm_salt=1)
    reform = run_repeat_protocol(base_net, env_reform, protocol, arm_salt=2)
    comparison = compare_runs(baseline.reports, reform.reports, confidence=confidence)
    return ReformRun(comparison=comparison, baseline=baseline, reform=reform)
