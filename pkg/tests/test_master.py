from dataclasses import replace

import numpy as np
import pytest

from jrsp.colgen import random_initial_modes
from jrsp.errors import InstanceError
from jrsp.master import MasterProblem, build_master, solve_master, theta
from jrsp.mimo import CapacityCache
from jrsp.netmodel import Flow, Mode, node_power_profile

from conftest import make_net


def two_node(cap=2.0, demand=1.0, avg=4.0):
    net = make_net(2, links=[(0, 1), (1, 0)], flows=[(0, 1, demand)], levels=(0.0, 4.0), avg=avg)
    idle = Mode.idle(2)
    on = Mode((4.0, 0.0))
    return net, MasterProblem(net, [idle, on], [np.zeros(2), np.array([cap, 0.0])])


def seeded_master(suite5, count=12, seed=1, **kw):
    net, ch = suite5
    cache = CapacityCache(net, ch)
    modes = [Mode.idle(net.num_links)] + random_initial_modes(net, count, seed)
    return net, cache, MasterProblem(net, modes, [cache(m) for m in modes], **kw)


def test_idle_only():
    net = make_net(3, flows=[(0, 2, 1.0)])
    sol = solve_master(MasterProblem(net, [Mode.idle(net.num_links)], [np.zeros(net.num_links)]))
    assert sol.lam == pytest.approx(0.0, abs=1e-12)
    assert sol.alpha[0] == pytest.approx(1.0)
    assert sol.beta <= 1e-12


def test_two_node_hand_solution():
    net, mp = two_node()
    sol = solve_master(mp)
    assert sol.lam == pytest.approx(2.0)
    assert sol.alpha[1] == pytest.approx(1.0)
    assert sol.rates[0] == pytest.approx(2.0)
    assert sol.link_flows[0, 0] == pytest.approx(2.0)


def test_two_node_power_budget_binds():
    # average power 1 on a 4-unit mode allows only a quarter of the airtime
    _, mp = two_node(avg=1.0)
    sol = solve_master(mp)
    assert sol.lam == pytest.approx(0.5)
    assert sol.alpha[1] == pytest.approx(0.25)


def test_destination_rows_are_redundant(suite5):
    _, _, mp = seeded_master(suite5)
    _, _, mp_all = seeded_master(suite5, all_conservation_rows=True)
    assert mp_all.lp.num_eq == mp.lp.num_eq + mp.net.num_flows
    a, b = solve_master(mp), solve_master(mp_all)
    assert a.lam == pytest.approx(b.lam, abs=1e-8)


def test_theta_examples(suite5):
    net, cache, _ = seeded_master(suite5)
    idle = Mode.idle(net.num_links)
    u = np.arange(net.num_links, dtype=float)
    v = np.ones(net.num_nodes)
    assert theta(net, u, v, 0.7, idle, cache(idle)) == pytest.approx(-0.7)
    m = random_initial_modes(net, 1, 0)[0]
    assert theta(net, np.zeros(net.num_links), np.zeros(net.num_nodes), 0.0, m, cache(m)) == 0.0
    want = u @ cache(m).capacities - v @ node_power_profile(net, m) - 0.7
    assert theta(net, u, v, 0.7, m, cache(m)) == pytest.approx(want)
    with pytest.raises(InstanceError):
        theta(net, u[:-1], v, 0.0, m, cache(m))


def test_theta_equals_column_reduced_cost(suite5):
    net, _, mp = seeded_master(suite5)
    sol = solve_master(mp)
    assert sol.lam > 0
    for k, (m, a) in enumerate(zip(sol.modes, sol.alpha)):
        t = theta(net, sol.u, sol.v, sol.beta, m, sol.capacities[:, k])
        assert t <= 1e-8
        if a > 1e-9:
            assert abs(t) <= 1e-8
    assert sol.max_mode_reduced_cost <= 1e-8


def test_solution_invariants(suite5):
    net, _, mp = seeded_master(suite5)
    sol = solve_master(mp)
    assert sol.alpha.sum() == pytest.approx(1.0)
    assert (sol.alpha >= -1e-12).all()
    for f, flow in enumerate(net.flows):
        assert sol.rates[f] >= sol.lam * flow.demand - 1e-9
    load = sol.link_flows.sum(axis=1)
    assert (load <= sol.capacities @ sol.alpha + 1e-9).all()
    power = np.column_stack([node_power_profile(net, m) for m in sol.modes]) @ sol.alpha
    assert (power <= np.asarray(net.avg_power) + 1e-9).all()
    assert (sol.u >= -1e-12).all() and (sol.v >= -1e-12).all()
    assert sol.primal_residual <= 1e-8 and sol.duality_gap <= 1e-8


def test_doubling_demands_halves_lambda(suite5):
    net, ch = suite5
    _, cache, mp = seeded_master(suite5)
    lam = solve_master(mp).lam
    net2 = replace(net, flows=tuple(Flow(f.src, f.dest, 2 * f.demand) for f in net.flows))
    mp2 = MasterProblem(net2, mp.modes, mp.capacities)
    assert solve_master(mp2).lam == pytest.approx(lam / 2, abs=1e-9)


def test_add_and_replace(suite5):
    net, cache, mp = seeded_master(suite5, count=4)
    extra = random_initial_modes(net, 8, 99)
    new = next(m for m in extra if mp.index_of(m) is None)
    k = mp.add_mode(new, cache(new))
    assert mp.index_of(new) == k and mp.lp.num_cols == mp.n_fixed + mp.num_modes
    old = mp.replace_mode(1, new, cache(new))
    assert old not in mp.modes[1:2]
    with pytest.raises(InstanceError):
        mp.replace_mode(0, new, cache(new))


def test_master_validation():
    net, _ = two_node()
    idle, on = Mode.idle(2), Mode((4.0, 0.0))
    with pytest.raises(InstanceError):
        MasterProblem(net, [on], [np.array([1.0, 0.0])])              # no idle
    with pytest.raises(InstanceError):
        MasterProblem(net, [idle, on], [np.zeros(2), np.array([1.0, 1.0])])  # cap on idle link
    with pytest.raises(InstanceError):
        MasterProblem(net, [idle, Mode((4.0, 4.0))], [np.zeros(2), np.ones(2)])  # invalid
    with pytest.raises(InstanceError):
        MasterProblem(net, [idle], [np.zeros(2), np.zeros(2)])


def test_build_master_and_to_dict(suite5):
    net, cache, mp = seeded_master(suite5)
    mp2 = build_master(net, [(m, cache(m)) for m in mp.modes])
    sol = solve_master(mp2)
    d = sol.to_dict(net)
    assert d["lambda"] == sol.lam and d["num_modes"] == mp.num_modes
    assert sum(e["alpha"] for e in d["alpha"]) == pytest.approx(1.0)
    assert all(e["alpha"] > 0 for e in d["alpha"])
