import logging

import pytest


@pytest.fixture(autouse=True)
def restore_root_logger(monkeypatch):
    """main() reconfigures the root logger; put it back after each test."""
    monkeypatch.delenv("PDRO_WORKERS", raising=False)
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)


@pytest.fixture
def quadratic_config(tmp_path):
    path = tmp_path / "quadratic.cfg"
    path.write_text(
        "# small quadratic run\n"
        "scenario = QuadraticBall\n"
        "methods = normal-erm, normal-dro-chi2@0\n"
        "n_grid = 20, 40\n"
        "seeds = 2\n"
        "dim = 3\n"
        "monte_carlo_ratio = 5\n"
        "max_iter = 100\n"
        "comp_theta = 3\n"
        "coverage_seeds = 3\n",
        encoding="utf-8",
    )
    return path
