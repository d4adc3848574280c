import warnings

import numpy as np
import pytest

from carbonshift.gridmodel import CarbonSignal
from carbonshift.synthetic import noisy_daily_signal, weekly_pattern_signal
from carbonshift.timeaxis import TimeAxis

_acceptance = []

# criteria that are checked by tests; the last one is an aggregate of the others
AGGREGATE = {6: (1, 2, 3, 4)}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(criterion): exit criterion from the build contract")


def pytest_runtest_logreport(report):
    marker = getattr(report, "acceptance", None)
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        notes = [v for k, v in report.user_properties if k == "note"]
        _acceptance.append((marker, report.outcome, report.nodeid.split("::")[-1], notes))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("acceptance")
    if m:
        rep.acceptance = m.args[0]


def _verdict(outcomes):
    if "failed" in outcomes:
        return "FAIL"
    if all(o == "skipped" for o in outcomes):
        return "SKIP"
    return "PASS"


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    by_criterion = {}
    for criterion, outcome, name, notes in _acceptance:
        by_criterion.setdefault(criterion, []).append((outcome, name, notes))
    verdicts = {}
    for criterion in sorted(by_criterion):
        rows = by_criterion[criterion]
        verdicts[criterion] = _verdict([o for o, _, _ in rows])
        terminalreporter.write_line(f"[{verdicts[criterion]}] criterion {criterion} "
                                    f"({len(rows)} test{'s' if len(rows) != 1 else ''})")
        for outcome, name, notes in sorted(rows, key=lambda r: r[1]):
            if outcome != "passed" or notes:
                terminalreporter.write_line(f"    {outcome}: {name}")
            for n in notes:
                terminalreporter.write_line(f"        {n}")
    for criterion, parts in AGGREGATE.items():
        if all(p in verdicts for p in parts):
            ok = all(verdicts[p] == "PASS" for p in parts)
            terminalreporter.write_line(
                f"[{'PASS' if ok else 'FAIL'}] criterion {criterion} (requires criteria {', '.join(map(str, parts))})")


@pytest.fixture
def note(request):
    """Attach a line of text to the acceptance summary."""
    def add(text):
        request.node.user_properties.append(("note", str(text)))
    return add


def make_signal(values, resolution="30min", start="2020-01-06", region="test", zone=None) -> CarbonSignal:
    values = np.asarray(values, dtype=float)
    return CarbonSignal(region, TimeAxis.for_zone(start, resolution, len(values), zone), values)


@pytest.fixture(scope="session")
def year_signal():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return noisy_daily_signal(days=380, region="syn", zone="Europe/Berlin")


@pytest.fixture(scope="session")
def pattern_signal():
    # the acceptance signal: weekday 300, weekend 150, dip to 100 from 00 to 04 h
    return weekly_pattern_signal(days=380, region="pattern")


@pytest.fixture(scope="session")
def berlin_axis():
    return TimeAxis.for_zone("2020-01-01", "30min", 48 * 380, "Europe/Berlin")
