import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from chemns.spectral import SpectralGrid

settings.register_profile(
    "chemns",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("chemns")


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")
    config._criteria = {}


def pytest_runtest_logreport(report):
    crit = getattr(report, "_criterion", None)
    if crit is None:
        return
    table = report._criteria_table
    ok = report.passed if report.when == "call" else not report.failed
    prev = table.get(crit, True)
    table[crit] = prev and ok


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        report._criterion = (marker.args[0], marker.args[1])
        report._criteria_table = item.config._criteria


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    table = config._criteria
    if not table:
        return
    terminalreporter.section("acceptance criteria")
    for (num, title), ok in sorted(table.items()):
        terminalreporter.write_line(f"criterion {num:2d}  {'PASS' if ok else 'FAIL'}  {title}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def grid2():
    return SpectralGrid((32, 32))


@pytest.fixture(scope="session")
def grid3():
    return SpectralGrid((16, 16, 16))


def bandlimited(grid, rng, kmax=None, components=None):
    """Random real field with no energy at or above the Nyquist modes."""
    if kmax is None:
        kmax = min(grid.sizes) // 2 - 1
    shape = grid.shape if components is None else (components,) + grid.shape
    f = rng.standard_normal(shape)
    keep = np.ones(grid.spectral_shape, dtype=bool)
    for axis, m in enumerate(grid.mode_indices):
        s = [1] * grid.dim
        s[axis] = m.size
        keep &= (np.abs(m) <= kmax).reshape(s)
    if components is None:
        return grid.inverse(grid.forward(f) * keep)
    return np.stack([grid.inverse(grid.forward(fc) * keep) for fc in f])
