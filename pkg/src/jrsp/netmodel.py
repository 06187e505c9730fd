"""Network, flow and transmission-mode model.

Nodes are numbered ``0 .. N-1``; links and flows are referenced by their
position in ``Network.links`` / ``Network.flows``. A *mode* is an L-vector of
per-link transmit powers taken from the network's discrete level set; it is
valid when its active links form a matching (no node is on two active links).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from jrsp.errors import InstanceError

Link = tuple[int, int]


@dataclass(frozen=True)
class Flow:
    src: int
    dest: int
    demand: float


@dataclass(frozen=True)
class Network:
    """Directed multihop network with flows, power levels and budgets.

    All invariants are checked at construction, so any ``Network`` instance
    seen elsewhere in the package is valid.
    """

    num_nodes: int
    links: tuple[Link, ...]
    flows: tuple[Flow, ...]
    power_levels: tuple[float, ...]
    avg_power: tuple[float, ...]
    antennas: int = 1
    noise_variance: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "links", tuple((int(s), int(d)) for s, d in self.links))
        object.__setattr__(
            self, "flows",
            tuple(f if isinstance(f, Flow) else Flow(int(f[0]), int(f[1]), float(f[2]))
                  for f in self.flows))
        object.__setattr__(self, "power_levels", tuple(float(x) for x in self.power_levels))
        object.__setattr__(self, "avg_power", tuple(float(x) for x in self.avg_power))
        self._validate()

    def _validate(self):
        n = self.num_nodes
        if not isinstance(n, (int, np.integer)) or n < 1:
            raise InstanceError("must be a positive integer", "num_nodes")
        seen = set()
        for k, (s, d) in enumerate(self.links):
            if not (0 <= s < n and 0 <= d < n):
                raise InstanceError(f"endpoint out of range 0..{n - 1}", f"links[{k}]")
            if s == d:
                raise InstanceError("self-loop", f"links[{k}]")
            if (s, d) in seen:
                raise InstanceError(f"duplicate link ({s}, {d})", f"links[{k}]")
            seen.add((s, d))
        if not self.flows:
            raise InstanceError("at least one flow is required", "flows")
        for k, f in enumerate(self.flows):
            if not (0 <= f.src < n and 0 <= f.dest < n):
                raise InstanceError("endpoint out of range", f"flows[{k}]")
            if f.src == f.dest:
                raise InstanceError("source equals destination", f"flows[{k}]")
            if not f.demand > 0:
                raise InstanceError("demand must be positive", f"flows[{k}].demand")
        levels = self.power_levels
        if len(levels) < 2:
            raise InstanceError("need at least two levels", "power_levels")
        if levels[0] != 0.0:
            raise InstanceError("first level must be 0", "power_levels")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise InstanceError("must be strictly increasing", "power_levels")
        if not all(np.isfinite(levels)):
            raise InstanceError("levels must be finite", "power_levels")
        if len(self.avg_power) != n:
            raise InstanceError(f"length {len(self.avg_power)} != num_nodes {n}", "avg_power")
        if any(not (p >= 0) for p in self.avg_power):
            raise InstanceError("must be non-negative", "avg_power")
        if self.antennas < 1:
            raise InstanceError("must be >= 1", "antennas")
        if not self.noise_variance > 0:
            raise InstanceError("must be positive", "noise_variance")

    @property
    def num_links(self) -> int:
        return len(self.links)

    @property
    def num_flows(self) -> int:
        return len(self.flows)

    @property
    def num_levels(self) -> int:
        return len(self.power_levels)

    @cached_property
    def _level_index(self) -> dict[float, int]:
        return {x: k for k, x in enumerate(self.power_levels)}

    @cached_property
    def _link_index(self) -> dict[Link, int]:
        return {lk: k for k, lk in enumerate(self.links)}

    def link_id(self, src: int, dest: int) -> int:
        try:
            return self._link_index[(src, dest)]
        except KeyError:
            raise InstanceError(f"no link ({src}, {dest})") from None

    def level_index(self, x: float) -> int:
        try:
            return self._level_index[float(x)]
        except KeyError:
            raise InstanceError(f"{x} is not a power level") from None

    @cached_property
    def _interferers(self) -> tuple[frozenset[int], ...]:
        touching: dict[int, set[int]] = {v: set() for v in range(self.num_nodes)}
        for k, (s, d) in enumerate(self.links):
            touching[s].add(k)
            touching[d].add(k)
        return tuple(
            frozenset((touching[s] | touching[d]) - {k}) for k, (s, d) in enumerate(self.links)
        )


def complete_links(num_nodes: int) -> tuple[Link, ...]:
    """All ordered pairs ``(i, j)``, ``i != j``, in lexicographic order."""
    return tuple((i, j) for i in range(num_nodes) for j in range(num_nodes) if i != j)


@dataclass(frozen=True)
class Mode:
    """Per-link transmit powers. Hashable, so it doubles as a cache key."""

    powers: tuple[float, ...]
    _array: np.ndarray = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "powers", tuple(float(p) for p in self.powers))
        arr = np.array(self.powers, dtype=float)
        arr.flags.writeable = False
        object.__setattr__(self, "_array", arr)

    @classmethod
    def idle(cls, num_links: int) -> Mode:
        return cls((0.0,) * num_links)

    @classmethod
    def from_active(cls, num_links: int, active: dict[int, float]) -> Mode:
        powers = [0.0] * num_links
        for k, p in active.items():
            powers[k] = p
        return cls(tuple(powers))

    def __len__(self) -> int:
        return len(self.powers)

    @property
    def array(self) -> np.ndarray:
        return self._array

    @property
    def active(self) -> tuple[int, ...]:
        return tuple(k for k, p in enumerate(self.powers) if p > 0)

    @property
    def is_idle(self) -> bool:
        return not any(self.powers)

    def with_power(self, link: int, power: float) -> Mode:
        powers = list(self.powers)
        powers[link] = power
        return Mode(tuple(powers))


def _as_powers(net: Network, m) -> tuple[float, ...]:
    powers = m.powers if isinstance(m, Mode) else tuple(float(p) for p in m)
    if len(powers) != net.num_links:
        raise InstanceError(f"mode has length {len(powers)}, network has {net.num_links} links")
    return powers


def incidence(net: Network) -> np.ndarray:
    """Node-by-link matrix with +1 at the source and -1 at the destination."""
    a = np.zeros((net.num_nodes, net.num_links))
    for k, (s, d) in enumerate(net.links):
        a[s, k] = 1.0
        a[d, k] = -1.0
    return a


def is_valid_mode(net: Network, m: Mode | Sequence[float]) -> bool:
    powers = _as_powers(net, m)
    levels = net._level_index
    used: set[int] = set()
    for k, p in enumerate(powers):
        if p not in levels:
            return False
        if p > 0:
            s, d = net.links[k]
            if s in used or d in used:
                return False
            used.update((s, d))
    return True


def interferers(net: Network, link: int) -> frozenset[int]:
    """Links other than ``link`` sharing at least one endpoint with it."""
    if not 0 <= link < net.num_links:
        raise InstanceError(f"unknown link {link}")
    return net._interferers[link]


def next_level(net: Network, x: float) -> float | None:
    k = net.level_index(x)
    if k + 1 == net.num_levels:
        return None
    return net.power_levels[k + 1]


def node_power_profile(net: Network, m: Mode | Sequence[float]) -> np.ndarray:
    """Power spent by each node in mode ``m``; only transmitters consume power."""
    powers = _as_powers(net, m)
    if not is_valid_mode(net, powers):
        raise InstanceError("invalid mode")
    p = np.zeros(net.num_nodes)
    for k, pk in enumerate(powers):
        if pk > 0:
            p[net.links[k][0]] = pk
    return p


def active_nodes(net: Network, links: Iterable[int]) -> set[int]:
    out: set[int] = set()
    for k in links:
        out.update(net.links[k])
    return out
