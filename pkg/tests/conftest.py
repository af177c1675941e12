import pytest

from lifesim.paramfiles import ruleset_path
from lifesim.rules import load_ruleset


@pytest.fixture(scope="session")
def rules2023():
    return load_ruleset(ruleset_path(2023))


@pytest.fixture(scope="session")
def all_year_rules():
    return [load_ruleset(ruleset_path(y)) for y in range(2018, 2025)]
