"""Experiment suites behind the CLI: mode counts, heuristic gap, MIMO gain."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import asdict, dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from jrsp.colgen import HcgConfig, HcgTrace, run_hcg
from jrsp.instance import GeneratorSpec, Instance, generate_instance
from jrsp.master import JrspSolution
from jrsp.mimo import CapacityCache, generate_channels
from jrsp.netmodel import Network, complete_links
from jrsp.oracle import ModeUniverse, count_modes, enumerate_modes, solve_exact

logger = logging.getLogger(__name__)

SUITE_SPEC = GeneratorSpec(num_nodes=5, power_levels=(0.0, 2.0, 4.0), antennas=2,
                           avg_power=2.0, num_flows=2, label="suite-n5")


def write_csv(columns: Sequence[str], rows: Iterable[Sequence], header: dict | None = None,
              schema: str = "") -> str:
    buf = io.StringIO()
    if schema:
        buf.write(f"# schema: {schema}\n")
    for key, val in (header or {}).items():
        buf.write(f"# {key}: {val}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def complete_network(n: int, levels: Sequence[float]) -> Network:
    return Network(n, complete_links(n), [(0, n - 1, 1.0)], tuple(levels), (1.0,) * n)


def modes_count(ns: Iterable[int], levels: Sequence[float], cap: int = 10**6) -> list[tuple]:
    """Rows ``(N, K, L, M)`` for complete digraphs; M by enumeration, checked by count."""
    rows = []
    for n in ns:
        net = complete_network(n, levels)
        m = len(enumerate_modes(net, cap))
        formula = count_modes(net)
        if formula != m:
            raise AssertionError(f"N={n}: enumeration gave {m}, matching sum gave {formula}")
        rows.append((n, net.num_levels, net.num_links, m))
    return rows


@dataclass
class GapRow:
    instance_seed: int
    lambda_exact: float
    lambda_hcg: list[float]
    trace: HcgTrace
    exact: JrspSolution
    hcg: JrspSolution

    @property
    def best(self) -> float:
        return max(self.lambda_hcg)


def solve_both(inst: Instance, cfg: HcgConfig) -> tuple[JrspSolution, JrspSolution, HcgTrace]:
    net, ch = inst.net, inst.channels
    cache = CapacityCache(net, ch, cfg.capacity_eps, cfg.capacity_max_iters)
    universe = ModeUniverse.build(net, ch, cache=cache)
    exact = solve_exact(net, ch, universe=universe)
    hcg, trace = run_hcg(net, ch, cfg, full=cache)
    return exact, hcg, trace


def gap_suite(seeds: Iterable[int], cfg: HcgConfig,
              spec: GeneratorSpec = SUITE_SPEC) -> list[GapRow]:
    out = []
    for s in seeds:
        inst = generate_instance(spec, s)
        exact, hcg, trace = solve_both(inst, replace(cfg, seed=s))
        out.append(GapRow(s, exact.lam, list(trace.start_lambdas), trace, exact, hcg))
        logger.info("gap seed %d: exact %.6g, hcg best %.6g", s, exact.lam, hcg.lam)
    return out


def gap_csv(rows: Sequence[GapRow], header: dict | None = None) -> str:
    body = [(r.instance_seed, k, r.lambda_exact, lam, r.best)
            for r in rows for k, lam in enumerate(r.lambda_hcg)]
    return write_csv(["instance_seed", "start", "lambda_exact", "lambda_hcg", "lambda_hcg_best"],
                     body, header, schema="gap/1")


@dataclass
class GainRow:
    antennas: int
    exact: JrspSolution
    hcg: JrspSolution
    trace: HcgTrace


def mimo_gain(antennas: Iterable[int], seed: int, cfg: HcgConfig,
              spec: GeneratorSpec = SUITE_SPEC) -> list[GainRow]:
    """Same topology and flows for every antenna count; fresh a x a channels per point."""
    base = generate_instance(spec, seed)
    rows = []
    for a in antennas:
        net = replace(base.net, antennas=a)
        ch = generate_channels(net, [seed, a])
        inst = Instance(net, ch, None, f"{spec.label}-a{a}", seed)
        exact, hcg, trace = solve_both(inst, cfg)
        rows.append(GainRow(a, exact, hcg, trace))
        logger.info("antennas %d: exact %.6g, hcg %.6g", a, exact.lam, hcg.lam)
    return rows


def linear_fit(x: Sequence[float], y: Sequence[float]) -> tuple[float, float, float]:
    """Least-squares ``y = slope x + intercept``; returns (slope, intercept, R^2)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


def gain_csv(rows: Sequence[GainRow], header: dict | None = None) -> str:
    return write_csv(["antennas", "lambda_exact", "lambda_hcg_best"],
                     [(r.antennas, r.exact.lam, r.hcg.lam) for r in rows], header,
                     schema="mimo-gain/1")


def config_header(cfg: HcgConfig, **extra) -> dict:
    return {**extra, "config": ",".join(f"{k}={v}" for k, v in asdict(cfg).items())}
