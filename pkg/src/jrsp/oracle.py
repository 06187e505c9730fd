"""Exact baseline: the full valid-mode universe, the full LP, exact pricing."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from jrsp.errors import EnumerationCapError
from jrsp.master import JrspSolution, build_master, solve_master, theta
from jrsp.mimo import CapacityCache, ChannelSet, ModeCapacities
from jrsp.netmodel import Mode, Network

DEFAULT_CAP = 10**6


def count_modes(net: Network, state_budget: int = 200_000) -> int | None:
    """Size of the mode universe, ``sum over matchings S of (K-1)^|S|``.

    Counted by recursion over nodes (lowest free node is either unmatched or
    paired with a free neighbour), which is independent of the link-order
    backtracking in :func:`enumerate_modes`. Returns ``None`` if the memo
    would exceed ``state_budget`` entries.
    """
    n = net.num_nodes
    pair_weight: dict[tuple[int, int], int] = {}
    for s, d in net.links:
        key = (min(s, d), max(s, d))
        pair_weight[key] = pair_weight.get(key, 0) + (net.num_levels - 1)
    nbrs: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for (v, w), wt in sorted(pair_weight.items()):
        nbrs[v].append((w, wt))

    memo: dict[int, int] = {}

    def count(free: int) -> int:
        if free == 0:
            return 1
        hit = memo.get(free)
        if hit is not None:
            return hit
        if len(memo) >= state_budget:
            raise OverflowError
        v = (free & -free).bit_length() - 1
        rest = free & ~(1 << v)
        total = count(rest)
        for w, wt in nbrs[v]:
            if rest >> w & 1:
                total += wt * count(rest & ~(1 << w))
        memo[free] = total
        return total

    try:
        return count((1 << n) - 1)
    except OverflowError:
        return None


def enumerate_modes(net: Network, cap: int = DEFAULT_CAP) -> list[Mode]:
    """Every valid mode exactly once, idle first, in link-index backtracking order."""
    estimate = count_modes(net)
    if estimate is None or estimate > cap:
        raise EnumerationCapError(estimate, cap)
    levels = net.power_levels[1:]
    links = net.links
    nl = net.num_links
    out: list[Mode] = []
    powers = [0.0] * nl
    used: set[int] = set()

    def walk(k: int):
        if k == nl:
            out.append(Mode(tuple(powers)))
            return
        walk(k + 1)
        s, d = links[k]
        if s in used or d in used:
            return
        used.add(s)
        used.add(d)
        for p in levels:
            powers[k] = p
            walk(k + 1)
        powers[k] = 0.0
        used.discard(s)
        used.discard(d)

    walk(0)
    return out


@dataclass
class ModeUniverse:
    modes: list[Mode]
    capacities: list[ModeCapacities]

    @classmethod
    def build(cls, net: Network, ch: ChannelSet, eps: float = 1e-6, max_iters: int = 200,
              cap: int = DEFAULT_CAP, cache: CapacityCache | None = None) -> ModeUniverse:
        cache = cache or CapacityCache(net, ch, eps, max_iters)
        modes = enumerate_modes(net, cap)
        return cls(modes, [cache(m) for m in modes])


def solve_exact(net: Network, ch: ChannelSet, eps: float = 1e-6, max_iters: int = 200,
                cap: int = DEFAULT_CAP, universe: ModeUniverse | None = None) -> JrspSolution:
    """Optimal fairness over the full mode universe."""
    universe = universe or ModeUniverse.build(net, ch, eps, max_iters, cap)
    mp = build_master(net, list(zip(universe.modes, universe.capacities)))
    sol = solve_master(mp)
    sol.meta.update({"method": "exact", "num_modes": len(universe.modes)})
    return sol


def exact_pricing(net: Network, u: np.ndarray, v: np.ndarray, beta: float,
                  modes: Sequence[Mode], capacities: Sequence) -> tuple[Mode, float]:
    """Mode of maximum reduced cost; ties go to the earliest mode in the list."""
    best, best_val = modes[0], -np.inf
    for m, c in zip(modes, capacities):
        val = theta(net, u, v, beta, m, c)
        if val > best_val:
            best, best_val = m, val
    return best, best_val
