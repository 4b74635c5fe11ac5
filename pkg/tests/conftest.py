import pytest


def pytest_addoption(parser):
    parser.addoption("--shuttle", default=None, metavar="PATH",
                     help="shuttle-format CSV for the real-data ordering check")


@pytest.fixture(scope="session")
def shuttle_path(request):
    return request.config.getoption("--shuttle")


_CRITERIA: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def criterion_log():
    """Record ``(number, passed, detail)`` for the end-of-run acceptance summary."""
    def record(number: int, passed: bool, detail: str) -> None:
        _CRITERIA[number] = (passed, detail)
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        passed, detail = _CRITERIA[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
