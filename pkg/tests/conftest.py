import pytest

from schcdns.schc import parse_ipv6_udp, parse_rule_file

from .helpers import FIXTURES, HAND_DATAGRAM


@pytest.fixture
def context_bytes():
    return (FIXTURES / "context.rules").read_bytes()


@pytest.fixture
def context(context_bytes):
    return parse_rule_file(context_bytes)


@pytest.fixture
def elide_rule(context):
    return context.rule(1)


@pytest.fixture
def mixed_rule(context):
    return context.rule(2)


@pytest.fixture
def header():
    return parse_ipv6_udp(HAND_DATAGRAM)


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
