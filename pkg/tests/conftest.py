import pytest

from cmlab.degrees import exponents_from_tau, powerlaw_quantile_sequence, \
    retune_to_criticality


def pytest_addoption(parser):
    parser.addoption(
        "--run-scaling", action="store_true", default=False,
        help="run the long multi-n scaling acceptance suite (criteria 8 and 9)",
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-scaling"):
        return
    skip = pytest.mark.skip(reason="needs --run-scaling")
    for item in items:
        if "scaling" in item.keywords:
            item.add_marker(skip)


def pytest_configure(config):
    config.addinivalue_line("markers", "scaling: long multi-n Monte Carlo suite")


@pytest.fixture(scope="session")
def exp35():
    return exponents_from_tau(3.5, 0.0)


@pytest.fixture(scope="session")
def seq_1e4_base():
    """Supercritical tau=3.5 quantile sequence at n=10^4 (c_f = 1)."""
    return powerlaw_quantile_sequence(10_000, 3.5, 1.0)


@pytest.fixture(scope="session")
def seq_1e4_critical(exp35):
    """Critical-window tau=3.5 sequence at n=10^4 (c_f = 0.46, retuned)."""
    return retune_to_criticality(powerlaw_quantile_sequence(10_000, 3.5, 0.46), exp35).sequence
