"""Heuristic column generation (HCG) with multi-start.

Each start builds a restricted master from the idle mode plus random matchings,
then alternates master solves with a greedy pricing heuristic. A priced mode
takes the slot of a column that received no airtime (the idle column is never
evicted); the best fairness over all starts is returned.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from jrsp.errors import InstanceError
from jrsp.master import JrspSolution, MasterProblem, solve_master, theta
from jrsp.mimo import CapacityCache, ChannelSet, ModeCapacities
from jrsp.netmodel import Mode, Network, active_nodes, interferers, next_level

logger = logging.getLogger(__name__)

ALPHA_ZERO = 1e-12
TRACE_SCHEMA = "hcg-trace/1"


@dataclass
class HcgConfig:
    initial_extra_modes: int | None = None  # None -> N + L + 1
    max_cg_iterations: int = 200
    pricing_tolerance: float = 1e-7
    num_starts: int = 10
    seed: int = 0
    capacity_eps: float = 1e-6
    capacity_max_iters: int = 200
    heuristic_capacity_max_iters: int = 30

    def __post_init__(self):
        counts = {"num_starts": self.num_starts, "capacity_max_iters": self.capacity_max_iters,
                  "heuristic_capacity_max_iters": self.heuristic_capacity_max_iters}
        if self.initial_extra_modes is not None:
            counts["initial_extra_modes"] = self.initial_extra_modes
        for name, val in counts.items():
            if val < 1:
                raise InstanceError("must be >= 1", f"HcgConfig.{name}")
        if self.max_cg_iterations < 0:
            raise InstanceError("must be >= 0", "HcgConfig.max_cg_iterations")
        if not (self.pricing_tolerance > 0 and self.capacity_eps > 0):
            raise InstanceError("tolerances must be positive", "HcgConfig")

    def initial_count(self, net: Network) -> int:
        if self.initial_extra_modes is not None:
            return self.initial_extra_modes
        return net.num_nodes + net.num_links + 1

    def start_seeds(self) -> list[np.random.SeedSequence]:
        # spawned children do not depend on how many are requested (prefix-stable)
        return np.random.SeedSequence(self.seed).spawn(self.num_starts)


@dataclass
class IterationRecord:
    start: int
    iteration: int
    lam: float
    theta_star: float = math.nan
    replaced: int | None = None
    primal_residual: float = 0.0
    duality_gap: float = 0.0
    slackness_residual: float = 0.0
    max_mode_reduced_cost: float = 0.0


@dataclass
class HcgTrace:
    records: list[IterationRecord] = field(default_factory=list)
    start_lambdas: list[float] = field(default_factory=list)
    start_status: list[str] = field(default_factory=list)
    best_start: int = -1

    def lambdas(self, start: int) -> list[float]:
        return [r.lam for r in self.records if r.start == start]

    def to_csv(self, header: dict | None = None) -> str:
        buf = io.StringIO()
        buf.write(f"# schema: {TRACE_SCHEMA}\n")
        for key, val in (header or {}).items():
            buf.write(f"# {key}: {val}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["start", "iteration", "lambda", "theta_star"])
        for r in self.records:
            w.writerow([r.start, r.iteration, repr(r.lam),
                        "" if math.isnan(r.theta_star) else repr(r.theta_star)])
        return buf.getvalue()


def random_initial_modes(net: Network, count: int, seed) -> list[Mode]:
    """Up to ``count`` distinct non-idle random modes.

    Each draw visits the links in random order and admits each with
    probability 1/2 when it is node-disjoint from those already admitted,
    at a uniformly chosen nonzero level. If the universe has fewer than
    ``count`` non-idle modes the draw stops once it stops finding new ones.
    """
    rng = np.random.default_rng(seed)
    nonzero = net.power_levels[1:]
    found: dict[Mode, None] = {}
    attempts = 0
    budget = 50 * count + 1000
    while len(found) < count and attempts < budget:
        attempts += 1
        used: set[int] = set()
        powers = [0.0] * net.num_links
        for k in rng.permutation(net.num_links):
            s, d = net.links[k]
            if rng.random() < 0.5 and s not in used and d not in used:
                used.update((s, d))
                powers[k] = nonzero[rng.integers(len(nonzero))]
        m = Mode(tuple(powers))
        if not m.is_idle:
            found.setdefault(m)
    return list(found)


def heuristic_subproblem(net: Network, ch: ChannelSet, u: np.ndarray, v: np.ndarray,
                         beta: float, cfg: HcgConfig, inner: CapacityCache | None = None,
                         full: CapacityCache | None = None) -> tuple[Mode, float]:
    """Greedy level-raising search for a mode with positive reduced cost.

    Starting from the idle mode, every round tries raising each allowed link
    by one power level and commits the single best raise if it beats the
    last accepted value. Activating a link removes its interferers from the
    allowed set. Candidate values use capacities capped at
    ``cfg.heuristic_capacity_max_iters`` sweeps; the returned value is recomputed
    at full precision.
    """
    inner = inner or CapacityCache(net, ch, cfg.capacity_eps, cfg.heuristic_capacity_max_iters)
    full = full or CapacityCache(net, ch, cfg.capacity_eps, cfg.capacity_max_iters)
    good = Mode.idle(net.num_links)
    last = -beta
    allowed = set(range(net.num_links))
    while allowed:
        used = active_nodes(net, good.active)
        best_val, best_link = -math.inf, None
        for i in sorted(allowed):
            cur = good.powers[i]
            nxt = next_level(net, cur)
            if nxt is None:
                continue
            s, d = net.links[i]
            if cur == 0 and (s in used or d in used):
                continue
            cand = good.with_power(i, nxt)
            val = theta(net, u, v, beta, cand, inner(cand))
            if val > best_val:
                best_val, best_link = val, i
        if best_link is None or best_val <= last:
            break
        last = best_val
        if good.powers[best_link] == 0:
            allowed -= interferers(net, best_link)
        good = good.with_power(best_link, next_level(net, good.powers[best_link]))
    return good, theta(net, u, v, beta, good, full(good))


Pricer = Callable[[np.ndarray, np.ndarray, float], tuple[Mode, float]]


def column_generation(mp: MasterProblem, pricer: Pricer, full: CapacityCache,
                      max_iterations: int, tolerance: float,
                      start: int = 0) -> tuple[JrspSolution, list[IterationRecord], str]:
    """Run the CG loop on ``mp`` in place.

    Stops when the priced value is ``<= tolerance`` ("converged"), when the
    priced mode is already a column ("stalled"), or after ``max_iterations``
    pricing rounds ("iteration_limit").
    """
    records: list[IterationRecord] = []
    sol = solve_master(mp)
    status = "iteration_limit"
    # modes evicted since lambda last strictly improved; re-pricing one of
    # them means replace-on-zero-alpha is cycling, so grow the master instead
    evicted: set[Mode] = set()
    plateau = sol.lam
    for it in range(max_iterations + 1):
        rec = IterationRecord(start, it, sol.lam, primal_residual=sol.primal_residual,
                              duality_gap=sol.duality_gap,
                              slackness_residual=sol.slackness_residual,
                              max_mode_reduced_cost=sol.max_mode_reduced_cost)
        records.append(rec)
        if it == max_iterations:
            break
        mode, val = pricer(sol.u, sol.v, sol.beta)
        rec.theta_star = val
        if val <= tolerance:
            status = "converged"
            break
        if mp.index_of(mode) is not None:
            status = "stalled"
            break
        caps = full(mode)
        free = [k for k, a in enumerate(sol.alpha)
                if a <= ALPHA_ZERO and not mp.modes[k].is_idle]
        if free and mode not in evicted:
            rec.replaced = free[0]
            evicted.add(mp.replace_mode(free[0], mode, caps))
        else:
            mp.add_mode(mode, caps)
        sol = solve_master(mp)
        if sol.lam > plateau + 1e-9:
            plateau = sol.lam
            evicted.clear()
    sol.meta.update({"iterations": len(records) - 1, "status": status})
    return sol, records, status


def run_hcg(net: Network, ch: ChannelSet, cfg: HcgConfig,
            initial_modes: Sequence[Mode] | None = None,
            full: CapacityCache | None = None) -> tuple[JrspSolution, HcgTrace]:
    """Multi-start heuristic column generation; returns the best start's solution.

    ``full`` may pass in a capacity cache already filled for the same network
    and channels (with matching capacity settings).
    """
    full = full or CapacityCache(net, ch, cfg.capacity_eps, cfg.capacity_max_iters)
    inner = CapacityCache(net, ch, cfg.capacity_eps, cfg.heuristic_capacity_max_iters)

    def pricer(u, v, beta):
        return heuristic_subproblem(net, ch, u, v, beta, cfg, inner, full)

    trace = HcgTrace()
    best: JrspSolution | None = None
    idle = Mode.idle(net.num_links)
    for r, seed in enumerate(cfg.start_seeds()):
        if initial_modes is None:
            modes = [idle] + random_initial_modes(net, cfg.initial_count(net), seed)
        else:
            modes = list(initial_modes)
            if idle not in modes:
                modes.insert(0, idle)
        mp = MasterProblem(net, modes, [full(m) for m in modes])
        sol, records, status = column_generation(
            mp, pricer, full, cfg.max_cg_iterations, cfg.pricing_tolerance, start=r)
        sol.meta.update({"method": "hcg", "start": r})
        trace.records.extend(records)
        trace.start_lambdas.append(sol.lam)
        trace.start_status.append(status)
        logger.info("start %d: lambda=%.6g after %d iterations (%s)",
                    r, sol.lam, len(records) - 1, status)
        if best is None or sol.lam > best.lam:
            best = sol
            trace.best_start = r
    assert best is not None
    return best, trace
