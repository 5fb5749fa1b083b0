from pathlib import Path

import pytest

DATA = Path(__file__).parent / "data"

ADDER = """// adds two numbers
public class Adder {

public int add(int a, int b) {
return a + b; // sum
}
}
"""


@pytest.fixture
def adder():
    return ADDER


@pytest.fixture(scope="session")
def reference_source():
    return (DATA / "MaximumSumOfNonAdjacentElements.java").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def replay_run(tmp_path_factory):
    """One full sample -> variants -> run -> analyze pass over the scripted fixture."""
    from scripted import replay_pipeline

    work = tmp_path_factory.mktemp("replay")
    return replay_pipeline(work, jobs=1)


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion."""
    verdicts = {}
    for outcome in ("passed", "failed", "error", "skipped"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py::test_criterion_" not in nodeid:
                continue
            n = int(nodeid.split("test_criterion_")[1][:2])
            ok = outcome == "passed" and verdicts.get(n, True)
            verdicts[n] = ok
    if not verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, 11):
        state = "PASS" if verdicts.get(n) else ("FAIL" if n in verdicts else "NOT RUN")
        terminalreporter.write_line(f"criterion {n}: {state}")
