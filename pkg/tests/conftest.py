import math

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

_CRITERIA: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion():
    """Record one acceptance criterion's verdict for the terminal summary."""

    def record(number: int, ok: bool, detail: str = "") -> None:
        _CRITERIA[number] = (ok, detail)
        print(f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        ok, detail = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def sig_digits_match(computed: float, listed: str, digits: int) -> bool:
    """``computed`` agrees with the printed value to ``digits`` significant digits.

    Tolerance is half a unit in the ``digits``-th significant place of the
    printed value.
    """
    ref = float(listed)
    if ref == 0:
        return computed == 0
    e = math.floor(math.log10(abs(ref)))
    return abs(computed - ref) <= 0.5 * 10 ** (e - (digits - 1))
