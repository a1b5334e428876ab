import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def report(request):
    """Record one acceptance line: ``report(label, passed, detail)``."""

    def _record(label: str, passed: bool, detail: str = "") -> None:
        _ACCEPTANCE[label] = (bool(passed), detail)
        print(f"{'PASS' if passed else 'FAIL'}  {label}  {detail}")

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[0].rstrip("."))):
        ok, detail = _ACCEPTANCE[label]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}  {detail}")
