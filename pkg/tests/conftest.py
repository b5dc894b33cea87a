"""Per-criterion pass/fail summary for the acceptance suite."""

CRITERIA = {
    "A": "eigenstate residuals on the lattice grid",
    "B": "10-site chain level-structure table",
    "C": "5x3 mixed-boundary level-structure table",
    "D": "off-diagonal correlations closed form",
    "E": "partner overlap at and between critical momenta",
    "F": "wavepacket scattering properties",
    "G": "dynamic generation fidelity and t^2 growth",
    "H": "numerical hygiene",
}

_outcomes: dict[str, list[bool]] = {}
_letters: dict[str, str] = {}


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark:
            _letters[item.nodeid] = mark.args[0]


def pytest_runtest_logreport(report):
    letter = _letters.get(report.nodeid)
    if letter is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _outcomes.setdefault(letter, []).append(report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for letter, text in CRITERIA.items():
        runs = _outcomes.get(letter)
        if not runs:
            status = "NOT RUN"
        else:
            status = "PASS" if all(runs) else "FAIL"
        detail = f"{sum(runs)}/{len(runs)} tests" if runs else ""
        terminalreporter.write_line(f"criterion {letter}: {status:7s} {text} {detail}".rstrip())
