import os

import pytest
from hypothesis import HealthCheck, settings

from streamsim.stream import Event
from streamsim.tree import ProcessTree

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], derandomize=True
)
settings.register_profile("thorough", deadline=None, max_examples=500)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

LOAN = "→(request, ×('manual review', 'automated review'), notify)"


@pytest.fixture
def loan_tree():
    return ProcessTree.parse(LOAN)


def make_case(case_id, activities, start, step=600, resource="r1"):
    """Events of one case, back to back, each lasting ``step`` seconds."""
    out = []
    t = start
    for a in activities:
        out.append(Event(case_id, a, t + step, resource, {}, t))
        t += step
    return out


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        name, ok, detail = results[n]
        terminalreporter.write_line(f"criterion {n} ({name}): {'PASS' if ok else 'FAIL'} - {detail}")
