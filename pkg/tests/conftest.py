import sys

import pytest

from hlab.catalog import load_catalog, newform


@pytest.fixture(scope="session")
def curves():
    return load_catalog()


@pytest.fixture(scope="session")
def forms(curves):
    """Bundled newforms at a truncation that suits path integrals and L-values."""
    return {label: newform(label, 2000, curves) for label in curves}


@pytest.fixture(scope="session")
def forms_long(curves):
    """Level-37 newforms long enough for the Gamma0(37) mesh."""
    return {label: newform(label, 3000, curves) for label in ("37a", "37b")}


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
