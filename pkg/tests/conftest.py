import time
from contextlib import contextmanager

import pytest

RESULTS: dict[int, tuple[str, float, str]] = {}


class Criterion:
    def __init__(self, number: int, title: str, limit_s: float | None):
        self.number, self.title, self.limit_s = number, title, limit_s

    @contextmanager
    def run(self):
        t0 = time.perf_counter()
        status = "FAIL"
        try:
            yield self
            status = "PASS"
        finally:
            elapsed = time.perf_counter() - t0
            if status == "PASS" and self.limit_s is not None and elapsed >= self.limit_s:
                status = "FAIL"
            RESULTS[self.number] = (status, elapsed, self.title)
            print(f"\ncriterion {self.number:2d} {status} ({elapsed:.2f} s) {self.title}")
        assert self.limit_s is None or elapsed < self.limit_s, f"time limit {self.limit_s} s exceeded"


@pytest.fixture
def criterion():
    return Criterion


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(RESULTS):
        status, elapsed, title = RESULTS[k]
        terminalreporter.write_line(f"criterion {k:2d} {status} ({elapsed:7.2f} s) {title}")
