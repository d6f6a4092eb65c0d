import re

import pytest

# criterion -> list of (part, passed, detail)
_RESULTS: dict[int, list[tuple[str, bool, str]]] = {}


@pytest.fixture
def record():
    """record(part, passed, detail) files one sub-result under its criterion number."""

    def _record(part: str, passed: bool, detail: str):
        crit = int(re.match(r"\d+", part).group())
        _RESULTS.setdefault(crit, []).append((part, bool(passed), detail))
        print(f"[{'PASS' if passed else 'FAIL'}] criterion {part}: {detail}")
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(_RESULTS):
        parts = _RESULTS[crit]
        ok = all(p[1] for p in parts)
        detail = "; ".join(f"{name} {'ok' if good else 'FAILED'}: {d}" for name, good, d in parts)
        tr.write_line(f"{'PASS' if ok else 'FAIL'} criterion {crit:2d}: {detail}")
