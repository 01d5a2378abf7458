import pytest

from vkglab.config import RunConfig
from vkglab.oscillation import split_field
from vkglab.report import scattering_study
from vkglab.run import run

import _gate


def pytest_terminal_summary(terminalreporter):
    if _gate.LINES:
        terminalreporter.section("acceptance criteria")
        for line in _gate.LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def reference_config():
    return RunConfig()


@pytest.fixture(scope="session")
def reference_run(reference_config, tmp_path_factory):
    """The 1-D small-data reference run, archived once per session."""
    out = tmp_path_factory.mktemp("reference") / "run"
    result = run(reference_config, out)
    result.archive = out
    return result


@pytest.fixture(scope="session")
def reference_split(reference_run):
    return split_field(reference_run.history)


@pytest.fixture(scope="session")
def reference_scattering(reference_config, reference_run):
    return scattering_study(reference_config, reference_run.history)
