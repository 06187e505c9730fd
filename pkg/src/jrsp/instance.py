"""Instance files: JSON (de)serialization, seeded generation and presets.

File layout (``schema_version`` 1)::

    {
      "schema_version": 1,
      "label": "paper15",
      "creation_seed": 7,
      "network": {
        "num_nodes": 15,
        "links": [[0, 1], ...],
        "flows": [{"src": 6, "dest": 12, "demand": 10.0}, ...],
        "power_levels": [0.0, 4.0],
        "avg_power": [3.0, ...],
        "antennas": 5,
        "noise_variance": 1.0
      },
      "channels": {"kind": "seeded", "seed": 7}
    }

Explicit channels use ``{"kind": "explicit", "matrices": [{"src": i, "dest": j,
"data": [re, im, re, im, ...]}]}`` with each ``a x a`` matrix flattened
row-major. Floats are written with Python's shortest round-trip repr, so a
save/load cycle is bit-exact. Node ids are 0-based.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from jrsp.errors import InstanceError
from jrsp.mimo import ChannelSet, generate_channels
from jrsp.netmodel import Flow, Network, complete_links

SCHEMA_VERSION = 1


@dataclass
class Instance:
    net: Network
    channels: ChannelSet
    channel_seed: int | None = None
    label: str = ""
    creation_seed: int | None = None

    def to_dict(self, explicit_channels: bool | None = None) -> dict[str, Any]:
        explicit = self.channel_seed is None if explicit_channels is None else explicit_channels
        net = self.net
        if explicit:
            chans: dict[str, Any] = {"kind": "explicit", "matrices": [
                {"src": i, "dest": j,
                 "data": [float(x) for z in self.channels[i, j].ravel() for x in (z.real, z.imag)]}
                for (i, j) in sorted(self.channels)
            ]}
        else:
            if self.channel_seed is None:
                raise InstanceError("instance has no channel seed; save explicit channels")
            chans = {"kind": "seeded", "seed": self.channel_seed}
        return {
            "schema_version": SCHEMA_VERSION,
            "label": self.label,
            "creation_seed": self.creation_seed,
            "network": {
                "num_nodes": net.num_nodes,
                "links": [list(lk) for lk in net.links],
                "flows": [{"src": f.src, "dest": f.dest, "demand": f.demand} for f in net.flows],
                "power_levels": list(net.power_levels),
                "avg_power": list(net.avg_power),
                "antennas": net.antennas,
                "noise_variance": net.noise_variance,
            },
            "channels": chans,
        }

    def dumps(self, explicit_channels: bool | None = None) -> str:
        return json.dumps(self.to_dict(explicit_channels), indent=1) + "\n"


def _get(d: Any, key: str, path: str, kind=None):
    if not isinstance(d, dict):
        raise InstanceError("expected an object", path)
    if key not in d:
        raise InstanceError("missing field", f"{path}.{key}" if path else key)
    val = d[key]
    if kind is not None and (not isinstance(val, kind) or isinstance(val, bool)):
        name = "number" if kind is _NUM else kind.__name__
        raise InstanceError(f"expected {name}", f"{path}.{key}" if path else key)
    return val


_NUM = (int, float)


def _number_list(d: dict, key: str, path: str) -> list[float]:
    vals = _get(d, key, path, list)
    for k, x in enumerate(vals):
        if isinstance(x, bool) or not isinstance(x, _NUM):
            raise InstanceError("expected a number", f"{path}.{key}[{k}]")
    return [float(x) for x in vals]


def from_dict(doc: Any) -> Instance:
    version = _get(doc, "schema_version", "", int)
    if version != SCHEMA_VERSION:
        raise InstanceError(f"unsupported schema version {version}", "schema_version")
    nd = _get(doc, "network", "", dict)
    p = "network"
    links = _get(nd, "links", p, list)
    for k, lk in enumerate(links):
        if (not isinstance(lk, list) or len(lk) != 2
                or not all(isinstance(v, int) and not isinstance(v, bool) for v in lk)):
            raise InstanceError("expected [src, dest] integer pair", f"{p}.links[{k}]")
    flows = []
    for k, fd in enumerate(_get(nd, "flows", p, list)):
        fp = f"{p}.flows[{k}]"
        flows.append(Flow(_get(fd, "src", fp, int), _get(fd, "dest", fp, int),
                          float(_get(fd, "demand", fp, _NUM))))
    try:
        net = Network(
            num_nodes=_get(nd, "num_nodes", p, int),
            links=tuple(tuple(lk) for lk in links),
            flows=tuple(flows),
            power_levels=tuple(_number_list(nd, "power_levels", p)),
            avg_power=tuple(_number_list(nd, "avg_power", p)),
            antennas=_get(nd, "antennas", p, int),
            noise_variance=float(_get(nd, "noise_variance", p, _NUM)),
        )
    except InstanceError as exc:
        if exc.path and not exc.path.startswith(p):
            raise InstanceError(exc.message, f"{p}.{exc.path}") from None
        raise

    cd = _get(doc, "channels", "", dict)
    kind = _get(cd, "kind", "channels", str)
    seed = None
    if kind == "seeded":
        seed = _get(cd, "seed", "channels", int)
        channels = generate_channels(net, seed)
    elif kind == "explicit":
        a = net.antennas
        mats = {}
        for k, md in enumerate(_get(cd, "matrices", "channels", list)):
            mp = f"channels.matrices[{k}]"
            i, j = _get(md, "src", mp, int), _get(md, "dest", mp, int)
            data = _number_list(md, "data", mp)
            if len(data) != 2 * a * a:
                raise InstanceError(f"expected {2 * a * a} numbers, got {len(data)}", f"{mp}.data")
            arr = np.array(data, dtype=float)
            if (i, j) in mats:
                raise InstanceError(f"duplicate channel ({i}, {j})", mp)
            mats[(i, j)] = (arr[0::2] + 1j * arr[1::2]).reshape(a, a)
        channels = ChannelSet(mats, a)
        if not channels.covers(net):
            raise InstanceError("missing matrices for some ordered pair of link endpoints",
                                "channels.matrices")
    else:
        raise InstanceError(f"unknown kind {kind!r}", "channels.kind")
    return Instance(net, channels, seed, str(doc.get("label", "")), doc.get("creation_seed"))


def loads(text: str) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"invalid JSON: {exc}") from exc
    return from_dict(doc)


def load(path: str | os.PathLike) -> Instance:
    return loads(Path(path).read_text())


def atomic_write(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        # mkstemp creates 0600; use the permissions a plain open() would give
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def save(inst: Instance, path: str | os.PathLike, explicit_channels: bool | None = None) -> None:
    atomic_write(path, inst.dumps(explicit_channels))


@dataclass
class GeneratorSpec:
    """Parameters for :func:`generate_instance`.

    ``num_links=None`` gives the complete digraph. Otherwise a random
    bidirectional spanning tree is laid down first (so every node is
    reachable) and random extra links are added until ``num_links`` is met.
    Flows are either given explicitly as ``(src, dest, demand)`` or drawn at
    random (``num_flows`` distinct pairs, integer demands in ``demand_range``).
    """

    num_nodes: int
    num_links: int | None = None
    power_levels: Sequence[float] = (0.0, 2.0, 4.0)
    antennas: int = 2
    avg_power: float = 2.0
    noise_variance: float = 1.0
    flows: Sequence[tuple[int, int, float]] | None = None
    num_flows: int = 2
    demand_range: tuple[int, int] = (1, 10)
    label: str = ""


def _random_links(n: int, target: int, rng: np.random.Generator) -> tuple[tuple[int, int], ...]:
    if not 2 * (n - 1) <= target <= n * (n - 1):
        raise InstanceError(f"must be between {2 * (n - 1)} and {n * (n - 1)} for {n} nodes",
                            "num_links")
    order = rng.permutation(n)
    chosen: set[tuple[int, int]] = set()
    for k in range(1, n):
        v, w = int(order[k]), int(order[rng.integers(k)])
        chosen.update({(v, w), (w, v)})
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if (i, j) not in chosen]
    for idx in rng.permutation(len(pairs)):
        if len(chosen) >= target:
            break
        i, j = pairs[idx]
        if target - len(chosen) >= 2:
            chosen.update({(i, j), (j, i)})
        else:
            chosen.add((i, j) if rng.random() < 0.5 else (j, i))
    return tuple(sorted(chosen))


def generate_instance(spec: GeneratorSpec, seed: int) -> Instance:
    """Deterministic instance; channels are regenerated from ``seed``."""
    rng = np.random.default_rng([seed, 1])
    n = spec.num_nodes
    if n < 2:
        raise InstanceError("need at least 2 nodes", "num_nodes")
    links = complete_links(n) if spec.num_links is None else _random_links(n, spec.num_links, rng)
    if spec.flows is not None:
        flows = tuple(Flow(int(s), int(d), float(dm)) for s, d, dm in spec.flows)
    else:
        pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
        if spec.num_flows > len(pairs):
            raise InstanceError("more flows than node pairs", "num_flows")
        idx = rng.choice(len(pairs), size=spec.num_flows, replace=False)
        lo, hi = spec.demand_range
        flows = tuple(Flow(*pairs[k], float(rng.integers(lo, hi + 1))) for k in idx)
    net = Network(n, links, flows, tuple(spec.power_levels), (float(spec.avg_power),) * n,
                  spec.antennas, spec.noise_variance)
    return Instance(net, generate_channels(net, seed), seed, spec.label, seed)


def _one_based(flows):
    return [(s - 1, d - 1, dm) for s, d, dm in flows]


# Fixed 15- and 30-node parameter sets. Topology and channels come from the
# generator seed, so fairness values are specific to the seed used.
PRESETS: dict[str, GeneratorSpec] = {
    "paper15": GeneratorSpec(
        num_nodes=15, num_links=60, power_levels=(0.0, 4.0), antennas=5, avg_power=3.0,
        flows=_one_based([(7, 13, 10.0), (10, 5, 15.0), (11, 8, 20.0)]), label="paper15"),
    "paper15-fine": GeneratorSpec(
        num_nodes=15, num_links=60, power_levels=(0.0, 1.0, 2.0, 3.0, 4.0), antennas=5,
        avg_power=3.0, flows=_one_based([(7, 13, 10.0), (10, 5, 15.0), (11, 8, 20.0)]),
        label="paper15-fine"),
    "paper30": GeneratorSpec(
        num_nodes=30, num_links=110, power_levels=(0.0, 4.0), antennas=4, avg_power=3.0,
        flows=_one_based([(2, 30, 10.0), (5, 10, 50.0), (1, 30, 20.0), (4, 6, 60.0)]),
        label="paper30"),
    "tiny3": GeneratorSpec(
        num_nodes=3, power_levels=(0.0, 1.0, 2.0, 4.0), antennas=2, avg_power=2.0,
        flows=[(0, 2, 1.0)], label="tiny3"),
}
