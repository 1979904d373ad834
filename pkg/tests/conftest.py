import sys
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from berkdyn.parse import parse_poly
from berkdyn.valfield import FieldDescriptor

settings.register_profile(
    "default", max_examples=120, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

Q2 = FieldDescriptor.padic(2)
Q3 = FieldDescriptor.padic(3)
Q5 = FieldDescriptor.padic(5)
LT = FieldDescriptor.laurent("t")

PRIMES = st.sampled_from([2, 3, 5, 7])


def rationals(max_num: int = 200, max_den: int = 50):
    return st.builds(
        Fraction,
        st.integers(-max_num, max_num),
        st.integers(1, max_den),
    )


def nonzero_rationals(max_num: int = 200, max_den: int = 50):
    return rationals(max_num, max_den).filter(lambda x: x != 0)


def logdiams():
    return st.builds(Fraction, st.integers(-12, 12), st.integers(1, 4))


def poly(text: str, field=Q3):
    return parse_poly(text, field)


@pytest.fixture
def worked():
    """The quadratic (z^2 - z)/3 over Q_3."""
    return poly("(z^2 - z)/3")


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
