import numpy as np
import pytest

from riskfusion.parameters import load_parameters
from riskfusion.pedigree import Pedigree, Relative, RiskFactors
from riskfusion.simulate import SimConfig, simulate_cohort


@pytest.fixture(scope="session")
def params():
    return load_parameters(None)


@pytest.fixture(scope="session")
def sim_config():
    import json
    from importlib import resources

    text = (
        resources.files("riskfusion") / "data" / "sim-config-default.json"
    ).read_text()
    return SimConfig.from_json_dict(json.loads(text))


@pytest.fixture(scope="session")
def small_cohort(params, sim_config):
    """3000 simulated probands; enough events to fit and evaluate on."""
    records, summary = simulate_cohort(3000, sim_config, params, seed=2024)
    assert summary["cases_within_horizon"] >= 30
    return records


def single_proband(age: int = 45, **kwargs) -> Pedigree:
    pro = Relative(
        id=1,
        relation="proband",
        sex="female",
        current_age_or_death_age=age,
        alive=True,
        **kwargs,
    )
    return Pedigree(members=(pro,))


def baseline_factors(**overrides) -> RiskFactors:
    base = dict(
        age_at_menarche=14,
        num_biopsies=0,
        age_first_live_birth=19,
        affected_first_degree=0,
        atypical_hyperplasia=None,
    )
    base.update(overrides)
    return RiskFactors(**base)
