import sys

import numpy as np
import pytest

from jrsp.experiments import SUITE_SPEC
from jrsp.instance import generate_instance
from jrsp.mimo import generate_channels
from jrsp.netmodel import Flow, Network, complete_links


def make_net(n=4, links=None, flows=((0, 1, 1.0),), levels=(0.0, 1.0, 2.0, 4.0),
             avg=4.0, antennas=2, noise=1.0):
    links = complete_links(n) if links is None else links
    return Network(n, links, [Flow(*f) for f in flows], levels, (avg,) * n, antennas, noise)


@pytest.fixture
def net4():
    return make_net(4)


@pytest.fixture
def suite5():
    inst = generate_instance(SUITE_SPEC, 3)
    return inst.net, inst.channels


@pytest.fixture
def two_link():
    """Two node-disjoint links that interfere with each other."""
    net = make_net(4, links=[(0, 1), (2, 3)], flows=[(0, 1, 1.0)], levels=(0.0, 4.0))
    return net, generate_channels(net, 11)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    verdicts = getattr(mod, "VERDICTS", None)
    if not verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(verdicts):
        terminalreporter.write_line(verdicts[n])
