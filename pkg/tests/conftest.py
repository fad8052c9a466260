import pytest

from erfcurves import lm_solver

ACCEPTANCE_LINES: list[str] = []


class CostMonitor:
    """Checks every accepted LM iteration, in every test, never raises the cost."""

    def __init__(self):
        self.last = None
        self.checked = 0
        self.violations = []

    def __call__(self, iteration, cost):
        if iteration == 0:
            self.last = cost
            return
        self.checked += 1
        if cost > self.last:
            self.violations.append((iteration, self.last, cost))
        assert cost <= self.last, f"LM cost increased at iteration {iteration}: {self.last} -> {cost}"
        self.last = cost


MONITOR = CostMonitor()


@pytest.fixture(autouse=True, scope="session")
def lm_cost_monitor():
    lm_solver.iteration_hooks.append(MONITOR)
    yield MONITOR
    lm_solver.iteration_hooks.remove(MONITOR)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
