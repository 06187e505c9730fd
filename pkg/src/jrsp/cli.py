"""``jrsp`` command line: generate instances, solve them, run experiment suites.

Exit codes::

    0  success
    2  invalid input (bad flags, instance validation failure)
    3  exact enumeration refused (mode universe above --cap)
    4  LP solver failure
    5  I/O error
    6  numerical conditioning failure in the capacity computation

Set ``JRSP_LOG_LEVEL`` (e.g. ``INFO``, ``DEBUG``) for progress logging on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, replace
from pathlib import Path

from jrsp import experiments
from jrsp.colgen import HcgConfig, run_hcg
from jrsp.errors import (ConditioningError, EnumerationCapError, InstanceError, JrspError,
                         SolverError)
from jrsp.instance import PRESETS, GeneratorSpec, Instance, atomic_write, generate_instance, load, save
from jrsp.lpcore import to_lp_format
from jrsp.master import build_master
from jrsp.oracle import DEFAULT_CAP, count_modes, solve_exact

EXIT_OK, EXIT_INPUT, EXIT_CAP, EXIT_SOLVER, EXIT_IO, EXIT_CONDITIONING = 0, 2, 3, 4, 5, 6
RESULT_SCHEMA = "jrsp-result/1"

log = logging.getLogger("jrsp")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _flows(text: str) -> list[tuple[int, int, float]]:
    out = []
    for part in text.split(","):
        try:
            s, d, dm = part.split(":")
            out.append((int(s), int(d), float(dm)))
        except ValueError:
            raise argparse.ArgumentTypeError(f"flow {part!r} is not src:dest:demand")
    return out


def _summary(inst: Instance) -> str:
    net = inst.net
    m = count_modes(net)
    est = "unknown (too many to count)" if m is None else str(m)
    return (f"N={net.num_nodes} L={net.num_links} F={net.num_flows} a={net.antennas} "
            f"K={net.num_levels} M={est}")


def cmd_gen(args) -> int:
    if args.preset:
        spec = PRESETS[args.preset]
    else:
        if args.nodes is None:
            raise InstanceError("--nodes or --preset is required")
        spec = GeneratorSpec(num_nodes=args.nodes)
    overrides = {}
    if args.nodes is not None and args.preset:
        overrides["num_nodes"] = args.nodes
    if args.links is not None:
        overrides["num_links"] = args.links
    elif args.complete:
        overrides["num_links"] = None
    for flag, key in (("levels", "power_levels"), ("antennas", "antennas"),
                      ("avg_power", "avg_power"), ("noise", "noise_variance"),
                      ("flows", "flows"), ("num_flows", "num_flows"), ("label", "label")):
        val = getattr(args, flag)
        if val is not None:
            overrides[key] = tuple(val) if flag == "levels" else val
    spec = replace(spec, **overrides)
    inst = generate_instance(spec, args.seed)
    save(inst, args.out, explicit_channels=args.explicit_channels)
    print(f"wrote {args.out}: {_summary(inst)} seed={args.seed}")
    return EXIT_OK


def _config(args) -> HcgConfig:
    return HcgConfig(
        initial_extra_modes=args.initial_modes,
        max_cg_iterations=args.max_iters,
        pricing_tolerance=args.pricing_tol,
        num_starts=args.starts,
        seed=args.seed,
        capacity_eps=args.capacity_eps,
        capacity_max_iters=args.capacity_max_iters,
        heuristic_capacity_max_iters=args.heuristic_iters,
    )


def cmd_solve(args) -> int:
    inst = load(args.input)
    net, ch = inst.net, inst.channels
    cfg = _config(args)
    out = Path(args.out)
    doc = {"schema": RESULT_SCHEMA, "instance": inst.label or str(args.input),
           "method": "exact" if args.exact else "hcg", "seed": args.seed}
    if args.exact:
        sol = solve_exact(net, ch, cfg.capacity_eps, cfg.capacity_max_iters, cap=args.cap)
        doc["config"] = {"capacity_eps": cfg.capacity_eps,
                         "capacity_max_iters": cfg.capacity_max_iters,
                         "cap": args.cap}
        print(f"exact: {sol.meta['num_modes']} modes")
    else:
        sol, trace = run_hcg(net, ch, cfg)
        doc["config"] = asdict(cfg)
        doc["start_lambdas"] = trace.start_lambdas
        doc["start_status"] = trace.start_status
        doc["best_start"] = trace.best_start
        trace_path = Path(args.trace) if args.trace else out.with_suffix(".trace.csv")
        atomic_write(trace_path, trace.to_csv(experiments.config_header(cfg, instance=doc["instance"])))
        iters = [len(trace.lambdas(r)) - 1 for r in range(cfg.num_starts)]
        print(f"hcg: {cfg.num_starts} starts, iterations per start {iters}, "
              f"best start {trace.best_start}; trace -> {trace_path}")
    doc["solution"] = sol.to_dict(net)
    atomic_write(out, json.dumps(doc, indent=1) + "\n")
    if args.dump_lp:
        mp = build_master(net, list(zip(sol.modes, [sol.capacities[:, k]
                                                    for k in range(len(sol.modes))])))
        atomic_write(args.dump_lp, to_lp_format(mp.lp, name=doc["instance"]))
    print(f"lambda = {sol.lam:.10g}")
    for f, (flow, r) in enumerate(zip(net.flows, sol.rates)):
        print(f"  r[{f}] ({flow.src}->{flow.dest}, demand {flow.demand:g}) = {r:.10g}")
    print(f"result -> {out}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    out_dir = Path(args.out_dir)
    cfg = HcgConfig(num_starts=args.starts, seed=args.seed)
    if args.suite == "modes-count":
        levels = args.levels or [0.0, 1.0, 2.0, 4.0]
        rows = experiments.modes_count(range(args.n_min, args.n_max + 1), levels, args.cap)
        text = experiments.write_csv(["N", "K", "L", "M"], rows,
                                     {"levels": ",".join(map(repr, levels)), "graph": "complete"},
                                     schema="modes-count/1")
        path = out_dir / "modes_count.csv"
        for row in rows:
            print("N=%d K=%d L=%d M=%d" % row)
    elif args.suite == "gap":
        rows = experiments.gap_suite(range(args.seed, args.seed + args.instances), cfg)
        text = experiments.gap_csv(rows, experiments.config_header(cfg, suite="gap",
                                                                   instances=args.instances))
        path = out_dir / "gap.csv"
        for r in rows:
            print(f"seed {r.instance_seed}: exact {r.lambda_exact:.6g} hcg best {r.best:.6g} "
                  f"ratio {r.best / r.lambda_exact if r.lambda_exact else float('nan'):.4f}")
    else:
        ants = range(args.a_min, args.a_max + 1)
        rows = experiments.mimo_gain(ants, args.seed, cfg)
        slope, intercept, r2 = experiments.linear_fit([r.antennas for r in rows],
                                                      [r.exact.lam for r in rows])
        text = experiments.gain_csv(rows, experiments.config_header(
            cfg, suite="mimo-gain", fit=f"slope={slope!r},intercept={intercept!r},r2={r2!r}"))
        path = out_dir / "mimo_gain.csv"
        for r in rows:
            print(f"a={r.antennas}: exact {r.exact.lam:.6g} hcg {r.hcg.lam:.6g}")
        print(f"linear fit: slope {slope:.4g}, R^2 {r2:.4f}")
    atomic_write(path, text)
    print(f"-> {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="jrsp", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate an instance file")
    g.add_argument("--preset", choices=sorted(PRESETS))
    g.add_argument("--nodes", type=int)
    g.add_argument("--complete", action="store_true", help="complete digraph (default)")
    g.add_argument("--links", type=int, help="number of directed links (random connected graph)")
    g.add_argument("--levels", type=_floats, help="power levels, e.g. 0,2,4")
    g.add_argument("--antennas", type=int)
    g.add_argument("--avg-power", type=float)
    g.add_argument("--noise", type=float)
    g.add_argument("--flows", type=_flows, help="src:dest:demand[,...] (0-based nodes)")
    g.add_argument("--num-flows", type=int, help="number of random flows")
    g.add_argument("--label")
    g.add_argument("--explicit-channels", action="store_true",
                   help="store channel matrices instead of the seed")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="solve an instance")
    how = s.add_mutually_exclusive_group(required=True)
    how.add_argument("--exact", action="store_true")
    how.add_argument("--hcg", action="store_true")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--trace", help="HCG trace CSV path (default: <out>.trace.csv)")
    s.add_argument("--dump-lp", help="write the final master LP in CPLEX LP format")
    s.add_argument("--starts", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--max-iters", type=int, default=200)
    s.add_argument("--initial-modes", type=int, default=None)
    s.add_argument("--pricing-tol", type=float, default=1e-7)
    s.add_argument("--capacity-eps", type=float, default=1e-6)
    s.add_argument("--capacity-max-iters", type=int, default=200)
    s.add_argument("--heuristic-iters", type=int, default=30)
    s.add_argument("--cap", type=int, default=DEFAULT_CAP)
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("experiment", help="run an experiment suite")
    e.add_argument("suite", choices=["modes-count", "gap", "mimo-gain"])
    e.add_argument("--out-dir", default="results")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--starts", type=int, default=10)
    e.add_argument("--n-min", type=int, default=2)
    e.add_argument("--n-max", type=int, default=5)
    e.add_argument("--levels", type=_floats)
    e.add_argument("--cap", type=int, default=DEFAULT_CAP)
    e.add_argument("--instances", type=int, default=10)
    e.add_argument("--a-min", type=int, default=1)
    e.add_argument("--a-max", type=int, default=4)
    e.set_defaults(func=cmd_experiment)
    return p


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("JRSP_LOG_LEVEL", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except EnumerationCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except ConditioningError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONDITIONING
    except SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except InstanceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except JrspError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
