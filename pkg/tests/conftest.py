import pathlib

import pytest

FIXTURES = pathlib.Path(__file__).parent / "fixtures"


@pytest.fixture
def kiosk_dir():
    return FIXTURES / "kiosk"


@pytest.fixture
def kiosk_bundle(kiosk_dir):
    return kiosk_dir / "bundle.yaml"


@pytest.fixture
def ideal_bundle(kiosk_dir):
    return kiosk_dir / "ideal-bundle.yaml"


def pytest_terminal_summary(terminalreporter):
    """Print the acceptance verdict lines collected by test_acceptance."""
    try:
        import test_acceptance
    except ImportError:
        return
    if test_acceptance.VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.VERDICTS:
            terminalreporter.write_line(line)
