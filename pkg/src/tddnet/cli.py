"""Command-line front end: analyze, simulate, sweep, validate.

Exit codes: 0 success, 1 validation/check failure, 2 usage or config error.
Worker count defaults to the TDDNET_WORKERS environment variable, then to
the CPU count.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources

from . import analysis, simulator, validation
from .core import (
    DYNAMIC,
    STATIC,
    TddPolicy,
    TrafficConfig,
    config_from_dict,
    load_config,
)
from .errors import TddNetError

UL, DL = "UL", "DL"


def _fmt(x) -> str:
    if x is None:
        return "NA"
    return f"{x:.10g}"


def default_workers() -> int:
    env = os.environ.get("TDDNET_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _load_doc(path: str | None) -> dict:
    if path is None:
        with resources.files("tddnet.data").joinpath("default_config.json").open() as fh:
            return json.load(fh)
    if not os.path.exists(path):
        raise FileNotFoundError(f"config file not found: {path}")
    return load_config(path)


def _dl_fraction(policy: TddPolicy, traffic: TrafficConfig) -> float:
    if policy.dl_fraction is not None:
        return policy.dl_fraction
    return analysis.optimal_dl_fraction(traffic)


def _analyze_bundle(net, traffic, policy):
    pmf = analysis.cell_load_pmf(net.density_ratio, net.ue_cap)
    p = _dl_fraction(policy, traffic)
    if policy.variant == DYNAMIC:
        return analysis.dtdd_throughput(net, traffic, pmf)
    return analysis.stdd_throughput(net, traffic, p, pmf)


def cmd_analyze(args) -> int:
    doc = _load_doc(args.config)
    net, traffic, policy = config_from_dict(doc)
    report = _analyze_bundle(net, traffic, policy)
    print(f"mode: {policy.variant}")
    print(f"DL throughput: {report.dl_throughput:.6f} packets/slot")
    print(f"UL throughput: {report.ul_throughput:.6f} packets/slot")
    for key, val in sorted(report.diagnostics.items()):
        print(f"  {key}: {val:.6g}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        print(f"wrote {args.out}")
    return 0


def _sim_block(doc: dict) -> dict:
    sim = doc.get("simulation")
    if not sim:
        raise TddNetError("config: missing 'simulation' block")
    block = {
        "region_radius_m": float(sim.get("region_radius_m", 500.0)),
        "slots": int(sim["slots"]),
        "warmup": int(sim.get("warmup", 0)),
        "replications": int(sim.get("replications", 1)),
        "base_seed": int(sim.get("base_seed", 1)),
    }
    if block["slots"] <= block["warmup"]:
        raise TddNetError("config: simulation.slots must exceed simulation.warmup")
    return block


def _run_reps(net, traffic, policy, sim, workers):
    jobs = [
        (net, traffic, policy, sim["region_radius_m"], sim["slots"],
         sim["warmup"], sim["base_seed"] + 1000 * i)
        for i in range(sim["replications"])
    ]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_rep_worker, jobs))
    else:
        results = [_rep_worker(j) for j in jobs]
    return results  # ordered by replication index / seed


def _rep_worker(job):
    net, traffic, policy, radius, slots, warmup, seed = job
    metrics, report = simulator.run_replication(
        net, traffic, policy, radius, slots, warmup, seed
    )

    def busy(col):
        att = metrics.tier_tx[1:, col].sum()
        tot = metrics.tier_slots[1:, col].sum()
        return att / tot if tot > 0 else 0.0

    report.diagnostics["dl_busy_fraction"] = float(busy(0))
    report.diagnostics["ul_busy_fraction"] = float(busy(1))
    return seed, report


def _write_sim_csv(path, results, aggregate):
    rows = ["seed,direction,mean_throughput,ci,service_rate_est,busy_fraction"]
    for seed, rep in results:
        d = rep.diagnostics
        rows.append(f"{seed},{DL},{_fmt(rep.dl_throughput)},NA,"
                    f"{_fmt(d['dl_service_rate_est'])},{_fmt(d['dl_busy_fraction'])}")
        rows.append(f"{seed},{UL},{_fmt(rep.ul_throughput)},NA,"
                    f"{_fmt(d['ul_service_rate_est'])},{_fmt(d['ul_busy_fraction'])}")
    d = aggregate.diagnostics
    rows.append(f"NA,{DL},{_fmt(aggregate.dl_throughput)},{_fmt(aggregate.dl_ci_halfwidth)},"
                f"{_fmt(d['dl_service_rate_est'])},{_fmt(d['dl_busy_fraction'])}")
    rows.append(f"NA,{UL},{_fmt(aggregate.ul_throughput)},{_fmt(aggregate.ul_ci_halfwidth)},"
                f"{_fmt(d['ul_service_rate_est'])},{_fmt(d['ul_busy_fraction'])}")
    with open(path, "w") as fh:
        fh.write("\n".join(rows) + "\n")


def cmd_simulate(args) -> int:
    doc = _load_doc(args.config)
    net, traffic, policy = config_from_dict(doc)
    sim = _sim_block(doc)
    if args.seed is not None:
        sim["base_seed"] = args.seed
    results = _run_reps(net, traffic, policy, sim, args.workers)
    aggregate = simulator.aggregate_reports([r for _, r in results])
    out = args.out or "sim_results.csv"
    _write_sim_csv(out, results, aggregate)
    print(f"mode: {policy.variant}, replications: {sim['replications']}")
    print(f"DL throughput: {aggregate.dl_throughput:.6f} "
          f"+/- {aggregate.dl_ci_halfwidth:.6f} packets/slot")
    print(f"UL throughput: {aggregate.ul_throughput:.6f} "
          f"+/- {aggregate.ul_ci_halfwidth:.6f} packets/slot")
    print(f"wrote {out}")
    return 0


TRAFFIC_PRESETS = {
    "light": TrafficConfig(ul_rate=0.005, dl_rate=0.01),
    "medium": TrafficConfig(ul_rate=0.05, dl_rate=0.1),
}


def _sweep_point(axis, value, base_net, base_traffic, preset):
    if axis == "dl_ul_ratio":
        traffic = TrafficConfig(ul_rate=base_traffic.ul_rate,
                                dl_rate=value * base_traffic.ul_rate)
        return base_net, traffic
    if axis == "sap_ue_density_ratio":
        traffic = TRAFFIC_PRESETS[preset] if preset else base_traffic
        net = validation.paper_network(
            sap_density=value * 1e-3,
            ue_density=1e-3,
            sap_power=base_net.sap_power,
            ue_power=base_net.ue_power,
            path_loss_exp=base_net.path_loss_exp,
            sir_threshold=base_net.sir_threshold,
            ue_cap=base_net.ue_cap,
        )
        return net, traffic
    raise TddNetError(f"sweep spec: unknown axis '{axis}'")


def _sweep_eval(job):
    axis, value, mode, engine, net, traffic, sim, workers = job
    policy = TddPolicy(variant=STATIC if mode == "STDD" else DYNAMIC, dl_fraction=None)
    try:
        if engine == "analysis":
            report = _analyze_bundle(net, traffic, policy)
        else:
            results = _run_reps(net, traffic, policy, sim, workers)
            report = simulator.aggregate_reports([r for _, r in results])
        return [
            (value, mode, engine, DL, report.dl_throughput, report.dl_ci_halfwidth, ""),
            (value, mode, engine, UL, report.ul_throughput, report.ul_ci_halfwidth, ""),
        ]
    except TddNetError as exc:
        return [
            (value, mode, engine, DL, None, None, str(exc)),
            (value, mode, engine, UL, None, None, str(exc)),
        ]


def cmd_sweep(args) -> int:
    if not os.path.exists(args.spec):
        raise FileNotFoundError(f"sweep spec not found: {args.spec}")
    with open(args.spec) as fh:
        spec = json.load(fh)
    doc = _load_doc(args.config)
    base_net, base_traffic, _policy = config_from_dict(doc)

    axis = spec["axis"]
    values = [float(v) for v in spec["values"]]
    if not values or any(b <= a for a, b in zip(values, values[1:])):
        raise TddNetError("sweep spec: values must be non-empty and strictly increasing")
    modes = spec.get("modes", ["STDD", "DTDD"])
    engines = spec.get("engines", ["analysis"])
    if not modes or not engines:
        raise TddNetError("sweep spec: need at least one mode and one engine")
    preset = spec.get("traffic_preset")
    out = args.out or spec.get("output_path", "sweep.csv")

    sim = _sim_block(doc) if "simulation" in engines else None
    if sim and "simulation" in spec:
        sim.update({k: spec["simulation"][k] for k in spec["simulation"]})

    rows = ["axis_value,mode,engine,direction,throughput,ci,error"]
    for value in values:
        net, traffic = _sweep_point(axis, value, base_net, base_traffic, preset)
        for mode in modes:
            for engine in engines:
                job = (axis, value, mode, engine, net, traffic, sim, args.workers)
                for (v, m, e, direction, thr, ci, err) in _sweep_eval(job):
                    rows.append(
                        f"{_fmt(v)},{m},{e},{direction},{_fmt(thr)},{_fmt(ci)},{err}"
                    )
    with open(out, "w") as fh:
        fh.write("\n".join(rows) + "\n")
    print(f"wrote {out} ({len(rows) - 1} rows)")
    return 0


def cmd_validate(args) -> int:
    results = validation.run_checks(args.level)
    failed = 0
    for res in results:
        print(res.line())
        failed += 0 if res.passed else 1
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tddnet",
        description="Packet throughput of small cell networks under static/dynamic TDD",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze", help="closed-form throughput for one config")
    pa.add_argument("--config", help="JSON config path (default: packaged paper setup)")
    pa.add_argument("--out", help="write the report as JSON")
    pa.set_defaults(func=cmd_analyze)

    ps = sub.add_parser("simulate", help="Monte Carlo throughput for one config")
    ps.add_argument("--config", help="JSON config path with a simulation block")
    ps.add_argument("--out", help="per-replication CSV output path")
    ps.add_argument("--seed", type=int, help="override simulation.base_seed")
    ps.add_argument("--workers", type=int, default=default_workers())
    ps.set_defaults(func=cmd_simulate)

    pw = sub.add_parser("sweep", help="evaluate a sweep spec over both engines")
    pw.add_argument("--spec", required=True, help="sweep spec JSON path")
    pw.add_argument("--config", help="base JSON config path")
    pw.add_argument("--out", help="override the spec's output_path")
    pw.add_argument("--workers", type=int, default=default_workers())
    pw.set_defaults(func=cmd_sweep)

    pv = sub.add_parser("validate", help="run the oracle cross-check suite")
    pv.add_argument("--level", choices=("fast", "full"), default="fast")
    pv.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (TddNetError, KeyError, ValueError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
