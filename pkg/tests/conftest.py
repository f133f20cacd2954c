import pytest

from agora.agents import ScriptedBackend
from agora.population import elicit_needs, synthesize
from agora.scenario_gen import DHM_TEMPLATE, HLG_TEMPLATE, generate


@pytest.fixture(scope="session")
def hlg_scenario():
    return generate(HLG_TEMPLATE, seed=42)


@pytest.fixture(scope="session")
def dhm_scenario():
    return generate(DHM_TEMPLATE, seed=42)


@pytest.fixture(scope="session")
def hlg_population(hlg_scenario):
    """The golden-run population: 1000 base + 25 per vulnerable group."""
    population = synthesize(
        hlg_scenario, _stats(hlg_scenario), n=1000, n_vulnerable_each=25, seed=42
    )
    return elicit_needs(population, ScriptedBackend())


@pytest.fixture(scope="session")
def small_population(hlg_scenario):
    """Faster population for tests that don't need the full 1100 agents."""
    population = synthesize(
        hlg_scenario, _stats(hlg_scenario), n=80, n_vulnerable_each=5, seed=7
    )
    return elicit_needs(population, ScriptedBackend())


def _stats(scenario):
    from agora.population import DemographicStats

    return DemographicStats.from_dict(scenario.metadata["stats"])
