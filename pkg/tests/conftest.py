import numpy as np
import pytest
from hypothesis import strategies as st

from diracone.clifford import BUILTIN_NAMES, builtin_representation
from diracone.gridops import TRIM, SpacetimeGrid, SpinorGridField

PINNED_XI = np.array([0, 0, -1, 0], dtype=complex)
PINNED_ETA = np.array([0, 0, 0, 1], dtype=complex)

_ACCEPTANCE: list[str] = []


@pytest.fixture(params=BUILTIN_NAMES)
def rep(request):
    return builtin_representation(request.param)


@pytest.fixture
def chiral():
    return builtin_representation("chiral")


@pytest.fixture
def acceptance_log():
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)


finite = st.floats(min_value=-10, max_value=10, allow_nan=False, allow_infinity=False)
spinors = st.lists(finite, min_size=8, max_size=8).map(lambda v: np.array(v[:4]) + 1j * np.array(v[4:]))


def random_spinors(rng, n):
    return rng.normal(size=(n, 4)) + 1j * rng.normal(size=(n, 4))


def trim_grid(n, h, origin=(0.0, 0.0, 0.0, 0.0), active=(0, 1, 2, 3)):
    ext = tuple(n if m in active else 1 for m in range(4))
    return SpacetimeGrid(ext, (h,) * 4, origin, (TRIM,) * 4)


def random_trig_spinor(grid, rng, modes=3, kmax=2.0):
    """Smooth spinor field: a few plane waves with random wave vectors and amplitudes."""
    x = grid.coords
    vals = np.zeros(grid.extents + (4,), dtype=complex)
    for _ in range(modes):
        k = rng.uniform(-kmax, kmax, size=4)
        amp = rng.normal(size=4) + 1j * rng.normal(size=4)
        vals += np.exp(1j * (x @ k))[..., None] * amp
    return SpinorGridField(grid, vals)
