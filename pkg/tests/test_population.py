import dataclasses

import numpy as np
import pytest

from lifesim.agent import NO_EVENT
from lifesim.errors import ContractViolation
from lifesim.population import (
    DemographicTables,
    fertility_step,
    init_population,
    load_demographics,
    mortality_step,
    partnership_step,
)
from lifesim.states import EmploymentState as S


@pytest.fixture(scope="module")
def tables():
    return load_demographics()


def zero_hazard_tables(tables) -> DemographicTables:
    return dataclasses.replace(
        tables,
        mortality={g: (0.0, 0.0) for g in tables.mortality},
        fertility_annual=[(18.0, 0.0)],
        marriage_annual=[(18.0, 0.0)],
        divorce_annual=[(18.0, 0.0)],
    )


def test_single_agent_reproducible(tables):
    a = init_population(1, tables, seed=42).households[0].adults[0]
    b = init_population(1, tables, seed=42).households[0].adults[0]
    assert (a.gender, a.group, a.state, a.potential_wage, a.life_left) == (
        b.gender, b.group, b.state, b.potential_wage, b.life_left,
    )
    assert a.age == 18.0


def test_zero_population_rejected(tables):
    with pytest.raises(ContractViolation):
        init_population(0, tables, seed=1)


def test_group_shares_concentrate(tables):
    pop = init_population(100_000, tables, seed=7)
    for gender in ("men", "women"):
        agents = [a for a in pop.agents() if a.gender == gender]
        expected = tables.shares_for_year(2023, gender)
        for g in range(3):
            observed = sum(1 for a in agents if a.group == g) / len(agents)
            assert observed == pytest.approx(expected[g], abs=0.01)


def test_initial_state_distribution(tables):
    pop = init_population(100_000, tables, seed=8)
    for gender in ("men", "women"):
        agents = [a for a in pop.agents() if a.gender == gender]
        dist = tables.initial_states[gender]
        total = sum(dist.values())
        student_share = sum(1 for a in agents if a.state is S.STUDENT) / len(agents)
        assert student_share == pytest.approx(dist[S.STUDENT] / total, abs=0.01)


def test_partnership_zero_hazard_no_change(tables):
    zt = zero_hazard_tables(tables)
    pop = init_population(500, zt, seed=3)
    before = [hh.partnered for hh in pop.households]
    for _ in range(8):
        partnership_step(pop, zt)
    assert [hh.partnered for hh in pop.households] == before
    assert all(not p for p in before)


def test_marriage_certain_event(tables):
    certain = dataclasses.replace(
        zero_hazard_tables(tables), marriage_annual=[(18.0, 4.0)]
    )  # quarterly hazard 1.0
    pop = init_population(2, certain, seed=4)
    pair = next(hh for hh in pop.households if len(hh.adults) == 2)
    assert pair.until_marriage == 1
    partnership_step(pop, certain)
    assert pair.partnered


def test_partnership_formation_count_within_3_sigma(tables):
    # Constant quarterly hazard p: expected formations over one year among
    # pairs follows the geometric first-event law.
    p = 0.05
    t = dataclasses.replace(zero_hazard_tables(tables), marriage_annual=[(18.0, 4 * p)])
    pop = init_population(100_000, t, seed=9)
    pairs = [hh for hh in pop.households if len(hh.adults) == 2]
    for _ in range(4):
        partnership_step(pop, t)
    formed = sum(1 for hh in pairs if hh.partnered)
    expect = len(pairs) * (1 - (1 - p) ** 4)
    sigma = np.sqrt(len(pairs) * (1 - (1 - p) ** 4) * (1 - p) ** 4)
    assert abs(formed - expect) < 3 * sigma


def test_fertility_zero_and_certain(tables):
    zt = zero_hazard_tables(tables)
    pop = init_population(200, zt, seed=5)
    fertility_step(pop, zt)
    assert all(not hh.child_ages for hh in pop.households)

    certain = dataclasses.replace(zt, fertility_annual=[(18.0, 4.0)])
    pop2 = init_population(200, certain, seed=5)
    fertility_step(pop2, certain)
    with_mother = [hh for hh in pop2.households if any(a.gender == "women" for a in hh.adults)]
    assert all(len(hh.child_ages) == 1 for hh in with_mother)


def test_fertility_count_within_3_sigma(tables):
    p = 0.02
    t = dataclasses.replace(zero_hazard_tables(tables), fertility_annual=[(18.0, 4 * p)])
    pop = init_population(60_000, t, seed=10)
    mothers = sum(1 for hh in pop.households if any(a.gender == "women" for a in hh.adults))
    births = 0
    for _ in range(4):
        fertility_step(pop, t)
    births = sum(len(hh.child_ages) for hh in pop.households)
    expect = mothers * (1 - (1 - p) ** 4)
    sigma = np.sqrt(expect)
    assert abs(births - expect) < 4 * sigma


def test_children_age_out_at_18(tables):
    zt = zero_hazard_tables(tables)
    pop = init_population(2, zt, seed=6)
    hh = pop.households[0]
    hh.child_ages = [17.8]
    fertility_step(pop, zt)
    assert hh.child_ages == []


def test_mortality_zero_and_certain(tables):
    zt = zero_hazard_tables(tables)
    pop = init_population(300, zt, seed=11)
    for _ in range(8):
        mortality_step(pop, zt)
    assert all(a.alive for a in pop.agents())

    lethal = dataclasses.replace(tables, mortality={g: (1.0, 0.0) for g in tables.mortality})
    pop2 = init_population(300, lethal, seed=11)
    mortality_step(pop2, lethal)
    assert all(not a.alive for a in pop2.agents())


def test_survival_curve_matches_table_product(tables):
    pop = init_population(80_000, tables, seed=12)
    agents = [a for a in pop.agents() if a.gender == "men"]
    horizon = 120  # quarters = 30 years
    # Independent product of the quarterly survival probabilities.
    s = 1.0
    expected = []
    for k in range(1, horizon + 1):
        s *= 1.0 - tables.mortality_quarterly("men", 18.0 + 0.25 * k)
        expected.append(s)
    for k in (40, 80, 120):
        observed = sum(1 for a in agents if a.life_left == NO_EVENT or a.life_left > k) / len(agents)
        se = np.sqrt(expected[k - 1] * (1 - expected[k - 1]) / len(agents))
        assert abs(observed - expected[k - 1]) < 4 * se + 1e-12


def test_partner_symmetry_and_conservation(tables):
    pop = init_population(2_000, tables, seed=13)
    n_agents = sum(len(hh.adults) for hh in pop.households)
    assert n_agents == 2_000
    for _ in range(40):
        partnership_step(pop, tables)
        fertility_step(pop, tables)
        mortality_step(pop, tables)
    # Pair records keep symmetry by construction; agents are conserved.
    assert sum(len(hh.adults) for hh in pop.households) == n_agents
    for hh in pop.households:
        u3, u7, u18 = hh.children_bands()
        assert 0 <= u3 <= u7 <= u18
        if hh.partnered:
            assert len(hh.adults) == 2
