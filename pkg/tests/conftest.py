
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

ACCEPTANCE_LINES = []


@pytest.fixture
def criterion(request):
    """Record a pass/fail line for an acceptance criterion."""
    entry = {"name": request.node.name, "detail": "", "ok": None}
    ACCEPTANCE_LINES.append(entry)

    def record(label, ok, detail=""):
        entry.update(name=label, ok=bool(ok), detail=detail)
        return ok

    yield record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for e in ACCEPTANCE_LINES:
        status = {True: "PASS", False: "FAIL", None: "ERROR"}[e["ok"]]
        terminalreporter.write_line(f"[{status}] {e['name']}  {e['detail']}")
