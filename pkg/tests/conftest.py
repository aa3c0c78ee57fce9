import numpy as np
import pytest
from click.testing import CliRunner


@pytest.fixture
def beta_values() -> np.ndarray:
    """Выборка Beta(5, 2) для быстрых сквозных проверок"""
    return np.random.default_rng(7).beta(5, 2, size=20_000)


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner()


@pytest.fixture
def cli_logging(mocker):
    """CLI не должен перенастраивать корневой логгер pytest"""
    return mocker.patch("app.commands.base.setup_logging")
