from fractions import Fraction

import pytest

# 30 significant digits from an independent mpmath evaluation (mp.dps = 50).
ORACLE = {
    "D_real": Fraction("1.44025268986944545315915399635"),
    "D_complex": Fraction("1.23539674258752353263438702416"),
    "log2_D_real": Fraction("0.526321952250529832036715921298"),
    "log2_D_complex": Fraction("0.304974431806048128356753580797"),
    "D_real_cubed": Fraction("2.98755620899735599149988796691"),
    "four_D_real": Fraction("5.7610107594777818126366159854"),
    "four_over_D_real_cubed": Fraction("1.33888694309869636613696996694"),
}
ORACLE_TOL = Fraction(1, 10**28)


def near(interval, value, tol=ORACLE_TOL):
    """The interval overlaps [value - tol, value + tol]."""
    lo, hi = (Fraction(*map(int, x.as_integer_ratio())) for x in (interval.lo, interval.hi))
    return lo <= value + tol and value - tol <= hi


@pytest.fixture
def oracle():
    return ORACLE


# -- acceptance summary: one line per criterion, printed after the run --------------

_ACCEPTANCE: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion implemented by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is not None and (report.when == "call" or report.failed):
        number, title = marker.args
        _ACCEPTANCE[number] = (title, "PASS" if report.passed else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, verdict = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {verdict}  {title}")
