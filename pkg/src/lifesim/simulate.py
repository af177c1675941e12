"""Cohort simulation, outcome aggregation, population scaling, and the
repeat (refit-then-simulate) protocol.

A simulation runs the trained policy quarterly from age 18 to 75, then plays
the static phase to age 100.  The log keeps raw per-agent state histories
(for independent re-analysis) plus flow sums by age cell; aggregation turns
those into the report: rates by age and gender, occupancy shares, benefit
expenditure, wage sums, hours and incentive histograms, and the
unemployment-duration table.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from .agent import HouseholdState
from .env.actions import N_ACTIONS, legal_mask
from .env.features import OBS_DIM, encode
from .env.mdp import DECISION_END_AGE, DT, LifecycleEnv, MAX_AGE
from .errors import ContractViolation
from .population import CohortPopulation
from .rules import emtr as emtr_op, ptr as ptr_op
from .rules.engine import BENEFIT_FIELDS, CONTRIB_FIELDS, TAX_FIELDS, AdultSnapshot, HouseholdSnapshot
from .solver.network import PolicyValueNet, masked_distribution
from .states import (
    UNEMPLOYMENT_STATES,
    WORKING_STATES,
    EmploymentState as S,
)

AGE_MIN = 18
AGE_MAX = 100
N_AGES = AGE_MAX - AGE_MIN  # yearly cells 18..99
FLOW_NAMES = ("gross_wage",) + TAX_FIELDS + CONTRIB_FIELDS + BENEFIT_FIELDS + (
    "employer_contrib", "net_income", "vat", "consumption",
)
DURATION_AGE_BANDS = ((20, 29), (30, 39), (40, 49), (50, 59), (60, 65))
DURATION_BIN_EDGES = (130.0, 260.0, 390.0, 520.0)   # ER days at ~21.67/mo
HOURS_CHOICES = (8, 16, 24, 32, 40, 48)


@dataclass
class SimulationLog:
    """Raw per-agent histories plus per-age flow sums for one cohort run."""

    cohort_size: int
    seed: int
    n_quarters: int
    states: np.ndarray        # (agents, quarters) int8
    hours: np.ndarray         # (agents, quarters) int8
    paid_wage: np.ndarray     # (agents, quarters) float32, annual rate
    er_days_used: np.ndarray  # (agents, quarters) float32
    gender: np.ndarray        # (agents,) 0 men / 1 women
    group: np.ndarray         # (agents,) int8
    flows_by_age: dict[str, np.ndarray]  # name -> (N_AGES,) EUR sums
    consumption_by_age: np.ndarray
    emtr_samples: np.ndarray
    ptr_samples: np.ndarray

    def age_of_quarter(self, q: int) -> float:
        return AGE_MIN + q * DT


def _policy_actions_for_household(
    net: PolicyValueNet, env: LifecycleEnv, hh: HouseholdState, mode: str,
    obs_buf: np.ndarray,
) -> tuple[tuple[int, ...], list[np.ndarray]]:
    masks = []
    n = len(hh.adults)
    for slot, adult in enumerate(hh.adults):
        partner = hh.adults[1 - slot] if n == 2 else None
        encode(adult, partner, hh, env.uparams, out=obs_buf[slot])
        masks.append(legal_mask(adult, hh, env.rules))
    logits = net.masked_logits(obs_buf[:n], np.asarray(masks))
    u = hh.rng_act.random(2)
    if mode == "greedy":
        acts = tuple(int(i) for i in logits.argmax(axis=1))
    else:
        probs = masked_distribution(logits, np.asarray(masks))
        cdf = np.cumsum(probs, axis=1)
        acts = tuple(int((cdf[i] < u[i]).sum()) for i in range(n))
    return acts, masks


def _record_flows(flow_sums: dict[str, np.ndarray], cons_by_age: np.ndarray,
                  age_cell: int, flows) -> None:
    for cf in flows:
        rec = cf.as_record()
        for name in FLOW_NAMES:
            flow_sums[name][age_cell] += rec[name]
        cons_by_age[age_cell] += rec["consumption"]


def _counterfactual_unemployed(hh_snap: HouseholdSnapshot, adult_idx: int) -> HouseholdSnapshot:
    adults = list(hh_snap.adults)
    a = adults[adult_idx]
    adults[adult_idx] = AdultSnapshot(
        state=S.BASIC_UNEMPLOYED,
        wage_quarterly=0.0,
        age=a.age,
        ub_basis_monthly=a.ub_basis_monthly,
        ub_days_used=0.0,
        ub_max_days=a.ub_max_days,
        fund_member=a.fund_member,
        pension_paid_monthly=a.pension_paid_monthly,
        pension_accrued_monthly=a.pension_accrued_monthly,
        partial_early_monthly=a.partial_early_monthly,
        wage_basis_monthly=a.wage_basis_monthly,
    )
    return HouseholdSnapshot(
        adults=tuple(adults),
        children_under3=hh_snap.children_under3,
        children_under7=hh_snap.children_under7,
        children_under18=hh_snap.children_under18,
        partnered=hh_snap.partnered,
        rent_monthly=hh_snap.rent_monthly,
    )


def run_cohort(
    net: PolicyValueNet,
    pop: CohortPopulation,
    env: LifecycleEnv,
    mode: str = "sample",
    collect_incentives: bool = False,
) -> SimulationLog:
    """Simulate the whole cohort: quarterly decisions 18-75, static to 100."""
    decision_q = int(round((DECISION_END_AGE - AGE_MIN) / DT))
    total_q = int(round((MAX_AGE - AGE_MIN) / DT))
    agents = [(hh, slot) for hh in pop.households for slot in range(len(hh.adults))]
    n_agents = len(agents)
    agent_index = {(hh.index, slot): i for i, (hh, slot) in enumerate(agents)}

    states = np.zeros((n_agents, total_q), dtype=np.int8)
    hours = np.zeros((n_agents, total_q), dtype=np.int8)
    paid = np.zeros((n_agents, total_q), dtype=np.float32)
    er_days = np.zeros((n_agents, total_q), dtype=np.float32)
    gender = np.array([0 if hh.adults[slot].gender == "men" else 1 for hh, slot in agents], dtype=np.int8)
    group = np.array([hh.adults[slot].group for hh, slot in agents], dtype=np.int8)

    flow_sums = {name: np.zeros(N_AGES) for name in FLOW_NAMES}
    cons_by_age = np.zeros(N_AGES)
    emtr_samples: list[float] = []
    ptr_samples: list[float] = []

    obs_buf = np.zeros((2, OBS_DIM))

    for q in range(total_q):
        age_cell = min(int(q * DT), N_AGES - 1)
        decision_phase = q < decision_q
        for hh in pop.households:
            if decision_phase:
                acts, masks = _policy_actions_for_household(net, env, hh, mode, obs_buf)
                out = env.step(hh, acts, masks=masks)
            else:
                out = env.static_quarter(hh)
            _record_flows(flow_sums, cons_by_age, age_cell, out.flows)
            for slot, adult in enumerate(hh.adults):
                i = agent_index[(hh.index, slot)]
                states[i, q] = int(adult.state)
                hours[i, q] = adult.hours
                paid[i, q] = adult.paid_wage
                er_days[i, q] = adult.ub_days_used

            if collect_incentives and decision_phase and q % 4 == 0:
                for slot, adult in enumerate(hh.adults):
                    if adult.state in (S.FULL_TIME, S.PART_TIME) and adult.paid_wage > 0:
                        snap_adults = tuple(env._adult_snapshot(x) for x in hh.adults)
                        u3, u7, u18 = hh.children_bands()
                        snap = HouseholdSnapshot(
                            adults=snap_adults, children_under3=u3, children_under7=u7,
                            children_under18=u18, partnered=hh.partnered,
                            rent_monthly=env.rules.rent_for_size(len(hh.adults) + u18),
                        )
                        emtr_samples.append(emtr_op(snap, env.rules, adult=slot)["total"])
                        ptr_samples.append(ptr_op(snap, _counterfactual_unemployed(snap, slot), env.rules))
        if q == decision_q - 1:
            for hh in pop.households:
                env.freeze_for_static_phase(hh)

    return SimulationLog(
        cohort_size=pop.size,
        seed=pop.seed,
        n_quarters=total_q,
        states=states,
        hours=hours,
        paid_wage=paid,
        er_days_used=er_days,
        gender=gender,
        group=group,
        flows_by_age=flow_sums,
        consumption_by_age=cons_by_age,
        emtr_samples=np.asarray(emtr_samples),
        ptr_samples=np.asarray(ptr_samples),
    )


def merge_logs(parts: list[SimulationLog]) -> SimulationLog:
    """Concatenate chunk logs (order-stable reduction)."""
    first = parts[0]
    return SimulationLog(
        cohort_size=sum(p.cohort_size for p in parts),
        seed=first.seed,
        n_quarters=first.n_quarters,
        states=np.concatenate([p.states for p in parts], axis=0),
        hours=np.concatenate([p.hours for p in parts], axis=0),
        paid_wage=np.concatenate([p.paid_wage for p in parts], axis=0),
        er_days_used=np.concatenate([p.er_days_used for p in parts], axis=0),
        gender=np.concatenate([p.gender for p in parts]),
        group=np.concatenate([p.group for p in parts]),
        flows_by_age={k: np.sum([p.flows_by_age[k] for p in parts], axis=0)
                      for k in first.flows_by_age},
        consumption_by_age=np.sum([p.consumption_by_age for p in parts], axis=0),
        emtr_samples=np.concatenate([p.emtr_samples for p in parts]),
        ptr_samples=np.concatenate([p.ptr_samples for p in parts]),
    )


def _run_chunk(args) -> SimulationLog:
    net, households, env, mode, collect, seed, size = args
    chunk = CohortPopulation(households=households, seed=seed, size=size)
    return run_cohort(net, chunk, env, mode=mode, collect_incentives=collect)


def run_cohort_parallel(
    net: PolicyValueNet,
    pop: CohortPopulation,
    env: LifecycleEnv,
    workers: int = 1,
    mode: str = "sample",
    collect_incentives: bool = False,
) -> SimulationLog:
    """Chunk the cohort across processes; reduction order is fixed, so the
    merged log is identical for any worker count."""
    if workers <= 1 or len(pop.households) < 2 * workers:
        return run_cohort(net, pop, env, mode=mode, collect_incentives=collect_incentives)
    from concurrent.futures import ProcessPoolExecutor

    chunks = np.array_split(np.arange(len(pop.households)), workers)
    jobs = []
    for c in chunks:
        households = [pop.households[i] for i in c]
        size = sum(len(h.adults) for h in households)
        jobs.append((net, households, env, mode, collect_incentives, pop.seed, size))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_run_chunk, jobs))
    merged = merge_logs(parts)
    merged.cohort_size = pop.size
    return merged


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------

WORKING_CODES = np.array([int(s) for s in WORKING_STATES])
UNEMP_CODES = np.array([int(s) for s in UNEMPLOYMENT_STATES])
RETIRED_CODES = np.array([int(S.RETIRED), int(S.RETIRED_PT), int(S.RETIRED_FT)])


@dataclass
class AggregateReport:
    cohort_size: int
    ages: np.ndarray                      # yearly ages 18..99
    occupancy: np.ndarray                 # (N_AGES, 16) shares among alive
    employment_rate: np.ndarray           # (N_AGES, 2) by gender
    unemployment_rate: np.ndarray         # (N_AGES, 2) share of workforce
    parttime_share: np.ndarray            # (N_AGES, 2) among employed
    disability_rate: np.ndarray           # (N_AGES, 2)
    workforce_share_narrow: np.ndarray    # (N_AGES,) employed+unemployed
    workforce_share_broad: np.ndarray     # (N_AGES,) incl. retired
    alive_share: np.ndarray               # (N_AGES,)
    hours_histogram: dict[int, float]
    fte: dict[str, float]
    flows: dict[str, float]               # EUR per cohort-lifetime (or scaled)
    flows_by_age: dict[str, np.ndarray]
    public_net: float
    duration_bins: np.ndarray             # (bands, 5) row-normalized
    duration_counts: np.ndarray           # (bands, 5) raw spell counts
    emtr_histogram: np.ndarray
    ptr_histogram: np.ndarray
    emtr_median: float
    ptr_median: float
    scaled: bool = False

    def cells(self) -> dict[str, float]:
        """Flat scalar view used by the comparison machinery."""
        out: dict[str, float] = {}
        for k, v in self.fte.items():
            out[f"fte_{k}"] = v
        for k, v in self.flows.items():
            out[f"flow_{k}"] = v
        out["public_net"] = self.public_net
        for b, (lo, hi) in enumerate(DURATION_AGE_BANDS):
            for j, label in enumerate(("0_6m", "6_12m", "12_18m", "18_24m", "over_24m")):
                out[f"duration_{lo}_{hi}_{label}"] = float(self.duration_bins[b, j])
        bands = ((18, 62), (63, 74))
        for lo, hi in bands:
            sel = slice(lo - AGE_MIN, hi + 1 - AGE_MIN)
            out[f"employment_rate_{lo}_{hi}"] = float(np.nanmean(self.employment_rate[sel]))
            out[f"unemployment_rate_{lo}_{hi}"] = float(np.nanmean(self.unemployment_rate[sel]))
        out["emtr_median"] = self.emtr_median
        out["ptr_median"] = self.ptr_median
        return out


def scan_unemployment_spells(states: np.ndarray, er_days: np.ndarray,
                             decision_q: int | None = None) -> list[tuple[float, float]]:
    """(age at spell start, ER days used in spell) for every completed spell.

    A spell is consecutive quarters in any unemployment state; any other
    quarter ends it.
    """
    unemp = np.isin(states, UNEMP_CODES)
    n_agents, n_q = states.shape
    out: list[tuple[float, float]] = []
    horizon = n_q if decision_q is None else decision_q
    for i in range(n_agents):
        row = unemp[i]
        q = 0
        while q < horizon:
            if row[q]:
                start = q
                days0 = er_days[i, q - 1] if q > 0 else 0.0
                while q < horizon and row[q]:
                    q += 1
            else:
                q += 1
                continue
            days1 = er_days[i, q - 1]
            used = max(0.0, days1 - days0)
            out.append((AGE_MIN + start * DT, used))
    return out


def _duration_tables(log: SimulationLog) -> tuple[np.ndarray, np.ndarray]:
    counts = np.zeros((len(DURATION_AGE_BANDS), 5))
    decision_q = int(round((DECISION_END_AGE - AGE_MIN) / DT))
    for age, used in scan_unemployment_spells(log.states, log.er_days_used, decision_q):
        for b, (lo, hi) in enumerate(DURATION_AGE_BANDS):
            if lo <= age <= hi:
                j = int(np.searchsorted(DURATION_BIN_EDGES, used, side="right"))
                counts[b, j] += 1
                break
    shares = counts.copy()
    row_sums = shares.sum(axis=1, keepdims=True)
    np.divide(shares, row_sums, out=shares, where=row_sums > 0)
    return shares, counts


def aggregate(log: SimulationLog) -> AggregateReport:
    n_agents, total_q = log.states.shape
    ages = np.arange(AGE_MIN, AGE_MAX)
    occupancy = np.zeros((N_AGES, 16))
    employment_rate = np.zeros((N_AGES, 2))
    unemployment_rate = np.zeros((N_AGES, 2))
    parttime_share = np.zeros((N_AGES, 2))
    disability_rate = np.zeros((N_AGES, 2))
    workforce_narrow = np.zeros(N_AGES)
    workforce_broad = np.zeros(N_AGES)
    alive_share = np.zeros(N_AGES)

    hours_hist = {h: 0.0 for h in HOURS_CHOICES}
    fte_by_class = {"total": 0.0, "part_time": 0.0, "full_time": 0.0,
                    "age_18_62": 0.0, "age_63_plus": 0.0, "retired": 0.0}

    for a_idx in range(N_AGES):
        q0, q1 = a_idx * 4, min((a_idx + 1) * 4, total_q)
        s = log.states[:, q0:q1]
        h = log.hours[:, q0:q1]
        alive = s != int(S.DEAD)
        n_alive = alive.sum()
        if n_alive == 0:
            employment_rate[a_idx] = np.nan
            unemployment_rate[a_idx] = np.nan
            parttime_share[a_idx] = np.nan
            disability_rate[a_idx] = np.nan
            continue
        alive_share[a_idx] = n_alive / s.size
        # Shares among the living; the dead column carries the share of all.
        for code in range(15):
            occupancy[a_idx, code] = ((s == code) & alive).sum() / max(n_alive, 1)
        occupancy[a_idx, int(S.DEAD)] = 1.0 - n_alive / s.size
        working = np.isin(s, WORKING_CODES)
        unemployed = np.isin(s, UNEMP_CODES)
        retired = np.isin(s, RETIRED_CODES)
        disabled = s == int(S.DISABLED)
        for g in (0, 1):
            rows = log.gender == g
            alive_g = alive[rows].sum()
            if alive_g == 0:
                employment_rate[a_idx, g] = np.nan
                unemployment_rate[a_idx, g] = np.nan
                parttime_share[a_idx, g] = np.nan
                disability_rate[a_idx, g] = np.nan
                continue
            emp_g = working[rows].sum()
            un_g = unemployed[rows].sum()
            employment_rate[a_idx, g] = emp_g / alive_g
            wf = emp_g + un_g
            unemployment_rate[a_idx, g] = un_g / wf if wf > 0 else np.nan
            pt_g = ((s[rows] == int(S.PART_TIME)) | (s[rows] == int(S.RETIRED_PT))).sum()
            parttime_share[a_idx, g] = pt_g / emp_g if emp_g > 0 else np.nan
            disability_rate[a_idx, g] = disabled[rows].sum() / alive_g
        workforce_narrow[a_idx] = (working.sum() + unemployed.sum()) / n_alive
        workforce_broad[a_idx] = (working.sum() + unemployed.sum() + retired.sum()) / n_alive

        fte_cells = (h[working] / 40.0).sum() / 4.0
        fte_by_class["total"] += fte_cells
        fte_by_class["part_time"] += (h[working & (h <= 24)] / 40.0).sum() / 4.0
        fte_by_class["full_time"] += (h[working & (h >= 32)] / 40.0).sum() / 4.0
        if AGE_MIN + a_idx <= 62:
            fte_by_class["age_18_62"] += fte_cells
        else:
            fte_by_class["age_63_plus"] += fte_cells
        fte_by_class["retired"] += (h[retired & working] / 40.0).sum() / 4.0
        for hh_choice in HOURS_CHOICES:
            hours_hist[hh_choice] += ((h == hh_choice) & working).sum() / 4.0

    flows = {name: float(v.sum()) for name, v in log.flows_by_age.items()}
    taxes = sum(flows[name] for name in TAX_FIELDS)
    contribs = sum(flows[name] for name in CONTRIB_FIELDS)
    benefits = sum(flows[name] for name in BENEFIT_FIELDS)
    public_net = taxes + contribs + flows["employer_contrib"] + flows["vat"] - benefits

    duration_shares, duration_counts = _duration_tables(log)

    emtr_hist, _ = np.histogram(log.emtr_samples, bins=np.linspace(0, 1.5, 31))
    ptr_hist, _ = np.histogram(log.ptr_samples, bins=np.linspace(0, 1.5, 31))

    return AggregateReport(
        cohort_size=log.cohort_size,
        ages=ages,
        occupancy=occupancy,
        employment_rate=employment_rate,
        unemployment_rate=unemployment_rate,
        parttime_share=parttime_share,
        disability_rate=disability_rate,
        workforce_share_narrow=workforce_narrow,
        workforce_share_broad=workforce_broad,
        alive_share=alive_share,
        hours_histogram=hours_hist,
        fte=fte_by_class,
        flows=flows,
        flows_by_age={k: v.copy() for k, v in log.flows_by_age.items()},
        public_net=public_net,
        duration_bins=duration_shares,
        duration_counts=duration_counts,
        emtr_histogram=emtr_hist.astype(float),
        ptr_histogram=ptr_hist.astype(float),
        emtr_median=float(np.median(log.emtr_samples)) if log.emtr_samples.size else float("nan"),
        ptr_median=float(np.median(log.ptr_samples)) if log.ptr_samples.size else float("nan"),
    )


def scale_to_population(report: AggregateReport, weights_by_age) -> AggregateReport:
    """Rescale cohort sums to a cross-section population; rates unchanged.

    ``weights_by_age`` maps a yearly age to the number of persons in that
    cell (callable or banded table lookup); sums become persons-weighted
    per-capita aggregates, i.e. national euro/FTE totals per year.
    """
    scaled = copy.deepcopy(report)
    n = report.cohort_size
    weights = np.array([float(weights_by_age(a)) for a in report.ages])

    for name, by_age in report.flows_by_age.items():
        scaled.flows_by_age[name] = by_age * weights / n
        scaled.flows[name] = float(scaled.flows_by_age[name].sum())
    taxes = sum(scaled.flows[name] for name in TAX_FIELDS)
    contribs = sum(scaled.flows[name] for name in CONTRIB_FIELDS)
    benefits = sum(scaled.flows[name] for name in BENEFIT_FIELDS)
    scaled.public_net = taxes + contribs + scaled.flows["employer_contrib"] + scaled.flows["vat"] - benefits

    # FTE classes rescale by the age-0..61/62+ composition of the weights;
    # recompute from per-age FTE is not stored, so scale uniformly by the
    # alive-weighted average weight.
    avg_weight = float((weights * report.alive_share).sum() / max(report.alive_share.sum(), 1e-12))
    for k in scaled.fte:
        scaled.fte[k] = report.fte[k] * avg_weight / n
    for k in scaled.hours_histogram:
        scaled.hours_histogram[k] = report.hours_histogram[k] * avg_weight / n
    scaled.scaled = True
    return scaled


# ---------------------------------------------------------------------------
# Repeat protocol
# ---------------------------------------------------------------------------

@dataclass
class RepeatResult:
    mean_cells: dict[str, float]
    sd_cells: dict[str, float]
    reports: list[AggregateReport] = field(default_factory=list)


def summarize_reports(reports: list[AggregateReport]) -> RepeatResult:
    keys = reports[0].cells().keys()
    table = {k: np.array([r.cells()[k] for r in reports]) for k in keys}
    mean = {k: float(np.nanmean(v)) for k, v in table.items()}
    sd = {k: float(np.nanstd(v, ddof=1)) if len(reports) > 1 else 0.0 for k, v in table.items()}
    return RepeatResult(mean_cells=mean, sd_cells=sd, reports=list(reports))


def repeat_protocol(
    make_refit,          # (repeat_index) -> PolicyValueNet
    make_population,     # (repeat_index) -> CohortPopulation
    env: LifecycleEnv,
    n_repeats: int,
    mode: str = "sample",
    collect_incentives: bool = False,
) -> RepeatResult:
    """Refit-then-simulate ``n_repeats`` times and summarize per cell."""
    if n_repeats < 1:
        raise ContractViolation("repeat protocol needs at least one repeat")
    reports = []
    for r in range(n_repeats):
        net = make_refit(r)
        pop = make_population(r)
        log = run_cohort(net, pop, env, mode=mode, collect_incentives=collect_incentives)
        reports.append(aggregate(log))
    return summarize_reports(reports)
