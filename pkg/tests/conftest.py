import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

_ACCEPTANCE_SEEN = set()


def pytest_runtest_logreport(report):
    """One pass/fail line per acceptance criterion."""
    if "test_acceptance.py" not in report.nodeid or "criterion_" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    number = name.split("criterion_")[1].split("_")[0].split("[")[0]
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        key = (report.nodeid, report.when)
        if key in _ACCEPTANCE_SEEN:
            return
        _ACCEPTANCE_SEEN.add(key)
        verdict = "PASS" if report.outcome == "passed" else report.outcome.upper()
        print(f"\nACCEPTANCE criterion {number}: {verdict} [{name}]", flush=True)
