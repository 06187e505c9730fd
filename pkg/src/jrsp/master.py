"""Max-min-fair multicommodity-flow LP over a set of transmission modes.

Column layout of the assembled LP::

    [ lambda | r_0 .. r_{F-1} | X[l, f] (link-major) | alpha_0 .. alpha_{M-1} ]

Rows: fairness ``lambda d_f - r_f <= 0``, link capacity
``sum_f X[l, f] - sum_m C[l, m] alpha_m <= 0``, node power
``sum_m P[n, m] alpha_m <= P_avg[n]``, flow conservation per (flow, node) and
the convexity row ``sum_m alpha_m = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from jrsp.errors import InstanceError, SolverError
from jrsp.lpcore import LpProblem, LpSolution, solve_lp
from jrsp.mimo import ModeCapacities
from jrsp.netmodel import Mode, Network, incidence, is_valid_mode, node_power_profile


def _cap_vector(caps) -> np.ndarray:
    return np.asarray(caps.capacities if isinstance(caps, ModeCapacities) else caps, dtype=float)


class MasterProblem:
    """Restricted (or full) master LP over a working list of modes.

    Columns are mutated only through :meth:`add_mode` / :meth:`replace_mode`;
    the ``LpProblem`` is reassembled on demand.
    """

    def __init__(self, net: Network, modes: Sequence[Mode], capacities: Sequence,
                 all_conservation_rows: bool = False):
        if len(modes) != len(capacities):
            raise InstanceError("modes and capacities differ in length")
        self.net = net
        self.all_conservation_rows = all_conservation_rows
        self.modes: list[Mode] = []
        self.capacities: list[np.ndarray] = []
        self.profiles: list[np.ndarray] = []
        for m, c in zip(modes, capacities):
            self._check(m, c)
            self.modes.append(m)
            self.capacities.append(_cap_vector(c))
            self.profiles.append(node_power_profile(net, m))
        if not any(m.is_idle for m in self.modes):
            raise InstanceError("mode list must contain the idle mode")
        self._static = self._static_rows()
        self._lp: LpProblem | None = None

    def _check(self, m: Mode, caps):
        c = _cap_vector(caps)
        if c.shape != (self.net.num_links,):
            raise InstanceError(f"capacity column has shape {c.shape}, "
                                f"expected ({self.net.num_links},)")
        if not is_valid_mode(self.net, m):
            raise InstanceError(f"invalid mode {m.powers}")
        if np.any(c[m.array == 0] != 0) or np.any(c < 0):
            raise InstanceError("capacity must be zero on inactive links and non-negative")

    # index helpers -------------------------------------------------------
    @property
    def num_modes(self) -> int:
        return len(self.modes)

    @property
    def n_fixed(self) -> int:
        net = self.net
        return 1 + net.num_flows + net.num_links * net.num_flows

    def rate_col(self, f: int) -> int:
        return 1 + f

    def x_col(self, link: int, f: int) -> int:
        return 1 + self.net.num_flows + link * self.net.num_flows + f

    def alpha_col(self, m: int) -> int:
        return self.n_fixed + m

    @property
    def fairness_rows(self) -> range:
        return range(0, self.net.num_flows)

    @property
    def capacity_rows(self) -> range:
        f = self.net.num_flows
        return range(f, f + self.net.num_links)

    @property
    def power_rows(self) -> range:
        start = self.net.num_flows + self.net.num_links
        return range(start, start + self.net.num_nodes)

    @property
    def conservation_rows(self) -> dict[tuple[int, int], int]:
        """``(node, flow) -> equality row``; destination rows omitted by default."""
        return self._static[2]

    @property
    def convexity_row(self) -> int:
        return len(self.conservation_rows)

    # assembly ----------------------------------------------------------
    def _static_rows(self):
        net = self.net
        nf, nl, nn = net.num_flows, net.num_links, net.num_nodes
        nx = self.n_fixed
        a_inc = incidence(net)
        fair = np.zeros((nf, nx))
        for f, flow in enumerate(net.flows):
            fair[f, 0] = flow.demand
            fair[f, self.rate_col(f)] = -1.0
        cap = np.zeros((nl, nx))
        for l in range(nl):
            for f in range(nf):
                cap[l, self.x_col(l, f)] = 1.0
        rows = []
        index: dict[tuple[int, int], int] = {}
        for f, flow in enumerate(net.flows):
            for n in range(nn):
                if n == flow.dest and not self.all_conservation_rows:
                    continue
                row = np.zeros(nx)
                for l in np.flatnonzero(a_inc[n]):
                    row[self.x_col(l, f)] = a_inc[n, l]
                if n == flow.src:
                    row[self.rate_col(f)] = -1.0
                elif n == flow.dest:
                    row[self.rate_col(f)] = 1.0
                index[(n, f)] = len(rows)
                rows.append(row)
        cons = np.array(rows).reshape(len(rows), nx)
        return fair, cap, index, cons

    def _assemble(self) -> LpProblem:
        net = self.net
        fair, cap, index, cons = self._static
        nm = self.num_modes
        cmat = sp.csr_array(np.column_stack(self.capacities))
        pmat = sp.csr_array(np.column_stack(self.profiles))
        a_ineq = sp.block_array([
            [sp.csr_array(fair), None],
            [sp.csr_array(cap), -cmat],
            [sp.csr_array((net.num_nodes, self.n_fixed)), pmat],
        ], format="csr")
        b_ineq = np.concatenate([np.zeros(net.num_flows + net.num_links), net.avg_power])
        a_eq = sp.block_array([
            [sp.csr_array(cons), sp.csr_array((cons.shape[0], nm))],
            [sp.csr_array((1, self.n_fixed)), sp.csr_array(np.ones((1, nm)))],
        ], format="csr")
        b_eq = np.zeros(cons.shape[0] + 1)
        b_eq[-1] = 1.0
        c = np.zeros(self.n_fixed + nm)
        c[0] = 1.0
        return LpProblem(c, a_ineq, b_ineq, a_eq, b_eq)

    @property
    def lp(self) -> LpProblem:
        if self._lp is None:
            self._lp = self._assemble()
        return self._lp

    def index_of(self, m: Mode) -> int | None:
        try:
            return self.modes.index(m)
        except ValueError:
            return None

    def add_mode(self, m: Mode, caps) -> int:
        self._check(m, caps)
        self.modes.append(m)
        self.capacities.append(_cap_vector(caps))
        self.profiles.append(node_power_profile(self.net, m))
        self._lp = None
        return len(self.modes) - 1

    def replace_mode(self, idx: int, m: Mode, caps) -> Mode:
        if self.modes[idx].is_idle:
            raise InstanceError("the idle mode cannot be replaced")
        self._check(m, caps)
        old = self.modes[idx]
        self.modes[idx] = m
        self.capacities[idx] = _cap_vector(caps)
        self.profiles[idx] = node_power_profile(self.net, m)
        self._lp = None
        return old


def build_master(net: Network, modes: Sequence[tuple[Mode, ModeCapacities]],
                 all_conservation_rows: bool = False) -> MasterProblem:
    return MasterProblem(net, [m for m, _ in modes], [c for _, c in modes],
                         all_conservation_rows=all_conservation_rows)


@dataclass
class JrspSolution:
    lam: float
    rates: np.ndarray
    link_flows: np.ndarray
    alpha: np.ndarray
    modes: list[Mode]
    capacities: np.ndarray
    u: np.ndarray
    v: np.ndarray
    beta: float
    primal_residual: float = 0.0
    duality_gap: float = 0.0
    slackness_residual: float = 0.0
    max_mode_reduced_cost: float = 0.0
    meta: dict = field(default_factory=dict)

    def to_dict(self, net: Network) -> dict:
        return {
            "lambda": self.lam,
            "rates": [float(r) for r in self.rates],
            "num_modes": len(self.modes),
            # only scheduled modes; each as its active (link, power) pairs
            "alpha": [
                {"mode": i, "active": [[k, m.powers[k]] for k in m.active], "alpha": float(a)}
                for i, (m, a) in enumerate(zip(self.modes, self.alpha)) if a > 0
            ],
            "link_flows": [
                [l, f, float(self.link_flows[l, f])]
                for l in range(net.num_links) for f in range(net.num_flows)
                if self.link_flows[l, f] != 0
            ],
            "duals": {"u": [float(x) for x in self.u], "v": [float(x) for x in self.v],
                      "beta": float(self.beta)},
            "certificates": {
                "primal_residual": self.primal_residual,
                "duality_gap": self.duality_gap,
                "slackness_residual": self.slackness_residual,
                "max_mode_reduced_cost": self.max_mode_reduced_cost,
            },
            "meta": self.meta,
        }


def solve_master(mp: MasterProblem) -> JrspSolution:
    lp = mp.lp
    sol: LpSolution = solve_lp(lp)
    if not sol.optimal:
        # lambda = r = X = 0 with alpha on the idle mode is always feasible
        raise SolverError(f"internal error: master LP reported {sol.status}")
    net = mp.net
    x = sol.x
    nf, nl = net.num_flows, net.num_links
    rates = x[1:1 + nf].copy()
    link_flows = x[1 + nf:mp.n_fixed].reshape(nl, nf).copy()
    alpha = x[mp.n_fixed:].copy()
    u = sol.y_ineq[list(mp.capacity_rows)]
    v = sol.y_ineq[list(mp.power_rows)]
    beta = float(sol.y_eq[mp.convexity_row])
    return JrspSolution(
        lam=float(x[0]),
        rates=rates,
        link_flows=link_flows,
        alpha=alpha,
        modes=list(mp.modes),
        capacities=np.column_stack(mp.capacities),
        u=u,
        v=v,
        beta=beta,
        primal_residual=sol.primal_residual,
        duality_gap=sol.duality_gap,
        slackness_residual=sol.slackness_residual,
        max_mode_reduced_cost=float(sol.reduced_costs[mp.n_fixed:].max()),
    )


def theta(net: Network, u: np.ndarray, v: np.ndarray, beta: float, m: Mode, caps) -> float:
    """Reduced cost ``u^T C_m - v^T P^m - beta`` of the column for mode ``m``."""
    c = _cap_vector(caps)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if c.shape != u.shape or v.shape != (net.num_nodes,) or len(m) != net.num_links:
        raise InstanceError("dual/capacity dimensions do not match the network")
    return float(u @ c - v @ node_power_profile(net, m) - beta)
