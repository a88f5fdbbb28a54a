"""Shared pytest plumbing for the acceptance suite.

The tests in test_acceptance.py are named test_criterion_<n>; this
plugin collects their outcomes and prints one line per criterion in the
terminal summary, attaching any detail note the test registered while
it ran. Notes are registered before the final assert so a failing
criterion still reports its measured numbers.
"""

import re

import pytest

_CRITERION = re.compile(r"::test_criterion_(\d+[a-z]?)$")

_results = {}
_notes = {}


@pytest.fixture
def criterion_note():
    """Attach a short diagnostic string to a criterion's summary line."""

    def record(key, text):
        _notes[str(key)] = str(text)

    return record


def pytest_runtest_logreport(report):
    match = _CRITERION.search(report.nodeid)
    if match is None:
        return
    key = match.group(1)
    if report.when == "call":
        if report.skipped:
            _results[key] = "SKIP"
        else:
            _results[key] = "PASS" if report.passed else "FAIL"
    elif report.when == "setup":
        if report.skipped:
            _results[key] = "SKIP"
        elif report.failed:
            _results[key] = "FAIL"
    elif report.when == "teardown" and report.failed:
        _results[key] = "FAIL"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")

    def order(key):
        return (int("".join(ch for ch in key if ch.isdigit())), key)

    for key in sorted(_results, key=order):
        line = f"criterion {key}: {_results[key]}"
        note = _notes.get(key)
        if note:
            line += f" -- {note}"
        terminalreporter.write_line(line)
