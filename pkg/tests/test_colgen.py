import numpy as np
import pytest

from jrsp.colgen import (HcgConfig, column_generation, heuristic_subproblem, random_initial_modes,
                         run_hcg)
from jrsp.errors import InstanceError
from jrsp.master import MasterProblem, solve_master, theta
from jrsp.mimo import CapacityCache, generate_channels
from jrsp.netmodel import Mode, is_valid_mode
from jrsp.oracle import ModeUniverse, exact_pricing, solve_exact

from conftest import make_net

FAST = dict(num_starts=2, max_cg_iterations=60)


def test_random_modes_deterministic_and_valid(suite5):
    net, _ = suite5
    a = random_initial_modes(net, 5, 42)
    assert a == random_initial_modes(net, 5, 42)
    assert len(a) == 5 == len(set(a))
    assert all(is_valid_mode(net, m) and not m.is_idle for m in a)


def test_random_modes_two_node():
    net = make_net(2)
    modes = random_initial_modes(net, 10, 0)
    # only 6 non-idle modes exist
    assert len(modes) == 6
    assert all(len(m.active) <= 1 for m in modes)


def test_random_modes_cover_perfect_matchings():
    net = make_net(4, levels=(0.0, 1.0))
    seen = set()
    rng = np.random.default_rng(3)
    for _ in range(1000):
        m = random_initial_modes(net, 1, rng.integers(2**32))[0]
        if len(m.active) == 2:
            seen.add(frozenset(frozenset(net.links[k]) for k in m.active))
    assert len(seen) == 3


def test_heuristic_zero_duals_returns_idle(suite5):
    net, ch = suite5
    m, val = heuristic_subproblem(net, ch, np.zeros(net.num_links), np.zeros(net.num_nodes),
                                  0.0, HcgConfig())
    assert m.is_idle and val == 0.0


def test_heuristic_single_link():
    net = make_net(2, links=[(0, 1)], levels=(0.0, 1.0, 2.0, 4.0))
    ch = generate_channels(net, 0)
    m, val = heuristic_subproblem(net, ch, np.array([10.0]), np.array([0.01, 0.01]), 0.0,
                                  HcgConfig())
    assert m.powers[0] > 0 and val > 0
    # capacity grows with power while the power price is tiny, so it climbs to the top
    assert m.powers[0] == 4.0


def test_heuristic_never_beats_exact_pricing(suite5):
    net, ch = suite5
    cfg = HcgConfig()
    cache = CapacityCache(net, ch)
    uni = ModeUniverse.build(net, ch, cache=cache)
    modes = [Mode.idle(net.num_links)] + random_initial_modes(net, 6, 5)
    mp = MasterProblem(net, modes, [cache(m) for m in modes])
    for _ in range(5):
        sol = solve_master(mp)
        m, val = heuristic_subproblem(net, ch, sol.u, sol.v, sol.beta, cfg, full=cache)
        _, best = exact_pricing(net, sol.u, sol.v, sol.beta, uni.modes, uni.capacities)
        assert is_valid_mode(net, m)
        assert val <= best + 1e-12
        assert val == pytest.approx(theta(net, sol.u, sol.v, sol.beta, m, cache(m)))
        if val <= 1e-7 or mp.index_of(m) is not None:
            break
        mp.add_mode(m, cache(m))


def test_zero_iterations_returns_initial_master(suite5):
    net, ch = suite5
    cfg = HcgConfig(num_starts=1, max_cg_iterations=0)
    sol, trace = run_hcg(net, ch, cfg)
    seed = cfg.start_seeds()[0]
    init = [Mode.idle(net.num_links)] + random_initial_modes(net, cfg.initial_count(net), seed)
    cache = CapacityCache(net, ch)
    ref = solve_master(MasterProblem(net, init, [cache(m) for m in init]))
    assert sol.lam == ref.lam
    assert len(trace.records) == 1 and trace.start_status == ["iteration_limit"]


def test_full_universe_start_converges_immediately(suite5):
    net, ch = suite5
    cache = CapacityCache(net, ch)
    uni = ModeUniverse.build(net, ch, cache=cache)
    exact = solve_exact(net, ch, universe=uni)
    sol, trace = run_hcg(net, ch, HcgConfig(num_starts=1), initial_modes=uni.modes, full=cache)
    assert trace.start_status == ["converged"]
    assert len(trace.records) == 1 and trace.records[0].theta_star <= 1e-7
    assert sol.lam == pytest.approx(exact.lam, abs=1e-9)


def test_hcg_bounded_by_exact_and_monotone(suite5):
    net, ch = suite5
    cache = CapacityCache(net, ch)
    exact = solve_exact(net, ch, universe=ModeUniverse.build(net, ch, cache=cache))
    sol, trace = run_hcg(net, ch, HcgConfig(num_starts=3), full=cache)
    assert sol.lam <= exact.lam + 1e-9
    for r in range(3):
        lams = trace.lambdas(r)
        assert all(b >= a - 1e-9 for a, b in zip(lams, lams[1:]))
    assert sol.lam == max(trace.start_lambdas)
    assert trace.start_lambdas[trace.best_start] == sol.lam


def test_best_of_r_prefix(suite5):
    net, ch = suite5
    cache = CapacityCache(net, ch)
    _, t3 = run_hcg(net, ch, HcgConfig(num_starts=3, seed=4), full=cache)
    _, t5 = run_hcg(net, ch, HcgConfig(num_starts=5, seed=4), full=cache)
    assert t5.start_lambdas[:3] == t3.start_lambdas
    assert max(t5.start_lambdas) >= max(t3.start_lambdas)


def test_determinism(suite5):
    net, ch = suite5
    a, ta = run_hcg(net, ch, HcgConfig(**FAST))
    b, tb = run_hcg(net, ch, HcgConfig(**FAST))
    assert a.lam == b.lam and ta.to_csv() == tb.to_csv()


def test_trace_csv_layout(suite5):
    net, ch = suite5
    _, trace = run_hcg(net, ch, HcgConfig(**FAST))
    lines = trace.to_csv({"seed": 0}).splitlines()
    assert lines[0] == "# schema: hcg-trace/1"
    assert lines[1] == "# seed: 0"
    assert lines[2] == "start,iteration,lambda,theta_star"
    assert len(lines) == 3 + len(trace.records)


def test_column_generation_stops_on_iteration_limit(suite5):
    net, ch = suite5
    cache = CapacityCache(net, ch)
    idle = Mode.idle(net.num_links)
    mp = MasterProblem(net, [idle], [cache(idle)])
    uni = ModeUniverse.build(net, ch, cache=cache)

    def pricer(u, v, beta):
        return exact_pricing(net, u, v, beta, uni.modes, uni.capacities)

    sol, records, status = column_generation(mp, pricer, cache, 2, 1e-9)
    assert status == "iteration_limit" and len(records) == 3


@pytest.mark.parametrize("kwargs", [
    dict(num_starts=0), dict(max_cg_iterations=-1), dict(pricing_tolerance=0.0),
    dict(initial_extra_modes=0), dict(heuristic_capacity_max_iters=0),
])
def test_config_validation(kwargs):
    with pytest.raises(InstanceError):
        HcgConfig(**kwargs)
