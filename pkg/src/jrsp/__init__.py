"""Joint routing, scheduling and power control for multihop MIMO networks."""

from jrsp.colgen import HcgConfig, heuristic_subproblem, run_hcg
from jrsp.instance import Instance, generate_instance, load, save
from jrsp.master import JrspSolution, build_master, solve_master, theta
from jrsp.mimo import ChannelSet, generate_channels, mode_capacities, waterfill
from jrsp.netmodel import Flow, Mode, Network, complete_links
from jrsp.oracle import enumerate_modes, exact_pricing, solve_exact

__all__ = [
    "ChannelSet", "Flow", "HcgConfig", "Instance", "JrspSolution", "Mode", "Network",
    "build_master", "complete_links", "enumerate_modes", "exact_pricing", "generate_channels",
    "generate_instance", "heuristic_subproblem", "load", "mode_capacities", "run_hcg", "save",
    "solve_exact", "solve_master", "theta", "waterfill",
]
