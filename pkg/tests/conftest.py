import pytest

from qfe.measurement import ProbeModel

ACCEPTANCE_RESULTS: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def noon2():
    return ProbeModel.noon2()


@pytest.fixture
def single():
    return ProbeModel.single_photon()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")


ACCEPTANCE_SEED = 2020


@pytest.fixture(scope="session")
def default_campaign():
    """Full-mode campaign with the default parameters, run once per session."""
    from qfe.campaign import CampaignConfig, run_campaign

    config = CampaignConfig(seed=ACCEPTANCE_SEED)
    return config, run_campaign(config)
