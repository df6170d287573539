import numpy as np
import pytest

from dualiga.assembly import LoadSpec, TrussModel

# fixed-free truss used for spectra and the earthquake runs
WAVE_MODEL = TrussModel(L=10.0, EA=np.pi / 4, mu=1e-4 * np.pi / 4, bc=("fixed", "free"))
# sine-loaded truss with both ends fixed
STATIC_MODEL = TrussModel(L=10.0, EA=1649335.0, mu=1.0, bc=("fixed", "fixed"),
                          load=LoadSpec("sine", P0=100000.0))


@pytest.fixture
def wave_model():
    return WAVE_MODEL


@pytest.fixture
def static_model():
    return STATIC_MODEL


@pytest.fixture
def unit_model():
    return TrussModel(L=1.0, EA=1.0, mu=1.0, bc=("fixed", "fixed"))


_acceptance_module = []


def pytest_collection_modifyitems(items):
    for item in items:
        if item.get_closest_marker("acceptance") is not None:
            _acceptance_module[:] = [item.module]
            break


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion."""
    if not _acceptance_module:
        return
    terminalreporter.section("acceptance criteria")
    for line in _acceptance_module[0].summary_lines():
        terminalreporter.write_line(line)
