import pytest

CRITERIA = {
    1: "delayed choice, setup 1: 50/50 detectors, path known and consistent",
    2: "delayed choice, setup 2: dark detector 1 never clicks",
    3: "delayed-choice invariance: late insertion equals static setup 2 bitwise",
    4: "eraser algebra: exact entangled-state coefficients",
    5: "eraser statistics: fringes/anti-fringes, pooled washout, linear correlation",
    6: "eraser case pools: L{1,3} R{2,4} H{1,2} V{3,4}",
    7: "independent beams: per-group visibility, pooled washout, phase-shifted peaks",
    8: "double slit: chi-square, fringe spacing, non-additivity, one-slit envelope",
    9: "non-collapse: screen field bytes unchanged by sampling",
    10: "universal invariants: unitarity, norm, one click, dark ports, parallel determinism",
}

_outcomes: dict[int, list[bool]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _outcomes.setdefault(marker.args[0], []).append(report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n, text in CRITERIA.items():
        results = _outcomes.get(n)
        if not results:
            status = "NOT RUN"
        else:
            status = "PASS" if all(results) else "FAIL"
        terminalreporter.write_line(f"criterion {n:2d}: {status:7s} {text}")
