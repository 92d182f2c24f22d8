import pytest

_RESULTS = {}


@pytest.fixture(scope="session")
def acceptance():
    """Criterion number -> result, evaluated once per session."""
    from bvlab.verify import run_all

    if not _RESULTS:
        for res in run_all():
            _RESULTS[res.number] = res
    return _RESULTS


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_RESULTS):
        terminalreporter.write_line(_RESULTS[k].line())
    bad = [k for k, r in _RESULTS.items() if not r.passed]
    terminalreporter.write_line(f"{len(_RESULTS) - len(bad)}/{len(_RESULTS)} passed"
                                + (f"; failed: {', '.join(map(str, sorted(bad)))}" if bad else ""))
