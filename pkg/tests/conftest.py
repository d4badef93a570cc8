import pytest

_ACCEPTANCE = {}


class AcceptanceRecorder:
    """Collects one verdict per acceptance criterion for the terminal summary."""

    def __init__(self, number, title):
        self.number = number
        self.title = title
        self.checks = []

    def check(self, ok, detail):
        self.checks.append((bool(ok), detail))
        return bool(ok)

    @property
    def passed(self):
        return bool(self.checks) and all(ok for ok, _ in self.checks)

    def line(self):
        verdict = "PASS" if self.passed else "FAIL"
        details = "; ".join(d for _, d in self.checks) or "no checks ran"
        return f"ACCEPTANCE {self.number} [{verdict}] {self.title}: {details}"


@pytest.fixture
def acceptance():
    def make(number, title):
        rec = AcceptanceRecorder(number, title)
        _ACCEPTANCE[number] = rec
        return rec

    return make


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[number].line())
