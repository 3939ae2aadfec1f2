import os
from pathlib import Path

import pytest

from hlcast.backtest import build_features
from hlcast.lti import LtiParams
from hlcast.synthetic import ScenarioConfig, generate

REAL_DATA_ENV = "HLCAST_REAL_DATA"
REAL_SERIES = ("house_price", "income", "interest_rate", "ltv", "interest_only_share")


@pytest.fixture(scope="session")
def scenario():
    return generate(ScenarioConfig(seed=7))


@pytest.fixture(scope="session")
def features(scenario):
    return build_features(scenario.frame, LtiParams())


def real_data_dir() -> Path | None:
    """Directory with user-supplied CBS/DNB series, if configured.

    Expected layout: one CSV per series named ``<series>.csv`` with header
    ``quarter,value``, values already in canonical units (euros; rates,
    loan-to-value, and shares as fractions).
    """
    root = os.environ.get(REAL_DATA_ENV)
    if not root:
        return None
    path = Path(root)
    if all((path / f"{name}.csv").is_file() for name in REAL_SERIES):
        return path
    return None
