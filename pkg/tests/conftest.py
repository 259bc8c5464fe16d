import numpy as np
import pytest

from contention_ppo.radio import Policy, layout, sample_configuration


@pytest.fixture
def net():
    return layout("L1", episode_len=30)


@pytest.fixture
def config(net):
    return sample_configuration(net, 7)


class RandomPolicy(Policy):
    """Transmit with probability ``p`` using the simulator's own uniforms."""

    def __init__(self, p=0.5):
        self.p = p

    def decide(self, bs, lanes, obs, u):
        return (u < self.p).astype(np.int8)


@pytest.fixture
def random_policy():
    return RandomPolicy()


_ACCEPTANCE: list[str] = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line per acceptance criterion; printed in the terminal summary."""

    def _record(number, title, ok, detail, notes=()):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {title} ({detail})"
        _ACCEPTANCE.append(line)
        _ACCEPTANCE.extend(f"    {n}" for n in notes)
        print(line, *notes, sep="\n")
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
