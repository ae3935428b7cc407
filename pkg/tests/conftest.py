import os

from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", deadline=None, max_examples=500,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE_LINES = {}


def record_acceptance(key: str, passed: bool, detail: str) -> None:
    """Remember one criterion's outcome; all are printed after the run."""
    prev = ACCEPTANCE_LINES.get(key)
    if prev is not None:
        passed = passed and prev[0]
        detail = prev[1] + "; " + detail
    ACCEPTANCE_LINES[key] = (passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: int(k.lstrip("A"))):
        passed, detail = ACCEPTANCE_LINES[key]
        terminalreporter.write_line(f"{key}: {'PASS' if passed else 'FAIL'}  {detail}")
