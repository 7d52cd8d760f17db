import pytest

_ACCEPTANCE: list[str] = []


def record_criterion(line: str) -> None:
    _ACCEPTANCE.append(line)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":abc"))):
        terminalreporter.write_line(line)


@pytest.fixture
def criterion():
    """Record a one-line PASS/FAIL verdict for an acceptance criterion.

    The test calls ``criterion(label, detail)`` before asserting; the verdict
    is whatever the test's outcome turns out to be.
    """
    state = {}

    def _set(label: str, detail: str = "") -> None:
        state["label"], state["detail"] = label, detail

    yield _set
    if state:
        state.setdefault("detail", "")
        _PENDING.append(state)


_PENDING: list[dict] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "teardown" and _PENDING:
        for state in _PENDING:
            verdict = "PASS" if item.stash.get(_OK, True) else "FAIL"
            line = f"criterion {state['label']}: {verdict}"
            if state["detail"]:
                line += f"  ({state['detail']})"
            record_criterion(line)
        _PENDING.clear()
    elif rep.when == "call":
        item.stash[_OK] = rep.passed


_OK = pytest.StashKey[bool]()
