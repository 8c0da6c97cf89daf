import pytest

ROOT = (-1, 2, 2, 3)

# criterion number -> list of (part, outcome, seconds)
ACCEPTANCE: dict[int, list] = {}


@pytest.fixture
def record():
    """record(n, part, ok, seconds) stores one acceptance sub-result."""
    def _record(n, part, ok, seconds):
        ACCEPTANCE.setdefault(n, []).append((part, bool(ok), seconds))
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[n]
        ok = all(p[1] for p in parts)
        secs = sum(p[2] for p in parts)
        tr.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  ({secs:.2f} s)")
        for part, pok, s in parts:
            if not pok:
                tr.write_line(f"    failed: {part}")
