"""``aoi-patrol`` command line: gen, plan, eval, simulate, reduce, export-tsplib, import-tour.

Exit codes: 0 success, 2 invalid input, 3 infeasible for the exact solver,
4 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import glob
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import construction, exact, local_search, scenarios, simulate
from .model import Instance, InstanceError, Route, RouteError, metrics, validate

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE, EXIT_IO = 0, 2, 3, 4

ALGORITHMS = ("greedy", "srtt", "enforced", "dp", "ls", "hybrid")

RESULT_COLUMNS = (
    "scenario_id", "n_data", "distribution", "algorithm",
    "mai_s", "normalized_mai", "round_trip_s", "plan_time_ms",
)
SUMMARY_COLUMNS = (
    "n_data", "distribution", "algorithm", "scenarios",
    "mean_normalized_mai", "max_normalized_mai", "optimal_count",
)
OPTIMAL_TOL = 1e-9


class CliError(Exception):
    def __init__(self, message, code=EXIT_INVALID):
        super().__init__(message, code)
        self.code = code

    def __str__(self):
        return str(self.args[0])


def plan(instance: Instance, algo: str, config=None, external_solver=None) -> Route:
    """Run one planner by name."""
    config = config or local_search.ImproverConfig()
    if algo == "greedy":
        return construction.nearest_neighbor(instance)
    if algo == "srtt":
        return construction.srtt(instance)
    if algo == "enforced":
        return construction.enforced(instance)
    if algo == "dp":
        return exact.dp_optimal(instance)
    if algo == "ls":
        if external_solver:
            return local_search.solve_external(instance, external_solver, seed=config.seed)
        return local_search.ls_route(instance, config)
    if algo == "hybrid":
        if external_solver:
            cands = [construction.enforced(instance),
                     local_search.solve_external(instance, external_solver, seed=config.seed)]
            return min(cands, key=lambda r: metrics(instance, r).mai)
        return construction.hybrid(instance, config=config)
    raise CliError(f"unknown algorithm {algo!r}; pick from {', '.join(ALGORITHMS)}")


def timed_plan(instance, algo, config=None, external_solver=None):
    start = time.perf_counter()
    route = plan(instance, algo, config, external_solver)
    return route, (time.perf_counter() - start) * 1e3


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def load_instance(path) -> Instance:
    try:
        inst = scenarios.load_scenario(path)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_IO) from exc
    except (ValueError, KeyError, InstanceError) as exc:
        raise CliError(f"{path}: {exc}") from exc
    report = validate(inst)
    if not report.ok:
        lines = "\n".join(f"  {v}" for v in report.violations)
        raise CliError(f"{path}: instance fails validation:\n{lines}")
    for w in report.warnings:
        print(f"warning: {path}: {w}", file=sys.stderr)
    return inst


def route_payload(instance, route, algo=None, plan_ms=None) -> dict:
    m = metrics(instance, route)
    out = {"order": list(route.order), **m.as_dict()}
    if algo is not None:
        out["algorithm"] = algo
        out["plan_time_ms"] = plan_ms
    return out


def cmd_gen(args) -> int:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        batch = scenarios.gen_batch(args.n, args.dist, args.count, args.seed, args.area, args.speed)
        for sc in batch:
            sc.save(out)
    except OSError as exc:
        raise CliError(f"cannot write scenarios to {out}: {exc}", EXIT_IO) from exc
    print(f"wrote {len(batch)} scenarios to {out}")
    return EXIT_OK


def _improver(args):
    return local_search.ImproverConfig(
        max_passes=args.max_passes, seed=args.seed, restarts=args.restarts
    )


def cmd_plan(args) -> int:
    inst = load_instance(args.scenario)
    try:
        route, ms = timed_plan(inst, args.algo, _improver(args), args.external_solver)
    except exact.InfeasibleError as exc:
        raise CliError(str(exc), EXIT_INFEASIBLE) from exc
    _emit(_dump(route_payload(inst, route, args.algo, None if args.no_timing else ms)), args.out)
    return EXIT_OK


@dataclass
class EvalRecord:
    scenario_id: str
    n_data: int
    distribution: str
    algorithm: str
    mai_s: float
    normalized_mai: float | None
    round_trip_s: float
    plan_time_ms: float | None

    def row(self) -> list:
        def fmt(v):
            return "" if v is None else repr(float(v))

        return [self.scenario_id, self.n_data, self.distribution, self.algorithm,
                fmt(self.mai_s), fmt(self.normalized_mai), fmt(self.round_trip_s), fmt(self.plan_time_ms)]


def read_results(path) -> list:
    def opt(v):
        return None if v == "" else float(v)

    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != RESULT_COLUMNS:
            raise CliError(f"{path}: unexpected columns {reader.fieldnames}")
        return [
            EvalRecord(r["scenario_id"], int(r["n_data"]), r["distribution"], r["algorithm"],
                       float(r["mai_s"]), opt(r["normalized_mai"]), float(r["round_trip_s"]),
                       opt(r["plan_time_ms"]))
            for r in reader
        ]


def _scenario_key(path, inst):
    meta = inst.meta or {}
    dist = str(meta.get("distribution", ""))
    if dist and "seed" in meta:
        return f"{dist}_{inst.n_data}_{meta['seed']}", dist
    return Path(path).stem, dist


def evaluate_scenario(path, algos, normalize, config, timing=True, external_solver=None) -> list:
    """EvalRecords for one scenario file, one per algorithm."""
    inst = load_instance(path)
    sid, dist = _scenario_key(path, inst)
    results = {}
    for algo in algos:
        try:
            results[algo] = timed_plan(inst, algo, config, external_solver)
        except exact.InfeasibleError as exc:
            raise CliError(f"{path}: {exc}", EXIT_INFEASIBLE) from exc
    ref = None
    if normalize == "dp":
        if "dp" not in results:
            try:
                results_dp = exact.dp_optimal(inst)
            except exact.InfeasibleError as exc:
                raise CliError(f"{path}: {exc}", EXIT_INFEASIBLE) from exc
        else:
            results_dp = results["dp"][0]
        ref = metrics(inst, results_dp).mai
    out = []
    for algo in algos:
        route, ms = results[algo]
        m = metrics(inst, route)
        out.append(EvalRecord(sid, inst.n_data, dist, algo, m.mai,
                              None if ref is None else m.mai / ref, m.round_trip,
                              ms if timing else None))
    return out


def _worker_count(requested):
    cap = os.environ.get("AOI_PATROL_THREADS")
    n = requested or os.cpu_count() or 1
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


def summarize_records(records) -> list:
    groups = {}
    for r in records:
        groups.setdefault((r.n_data, r.distribution, r.algorithm), []).append(r)
    rows = []
    for (n, dist, algo), recs in groups.items():
        norm = [r.normalized_mai for r in recs if r.normalized_mai is not None]
        rows.append([
            n, dist, algo, len(recs),
            repr(sum(norm) / len(norm)) if norm else "",
            repr(max(norm)) if norm else "",
            sum(1 for v in norm if v <= 1 + OPTIMAL_TOL) if norm else "",
        ])
    return rows


def sort_for_plot(records, algos) -> list:
    """Group by setup; inside a group order scenarios by Enforced's normalized MAI."""
    by_sid = {}
    for r in records:
        by_sid.setdefault(r.scenario_id, []).append(r)
    pivot = "enforced" if "enforced" in algos else algos[0]

    def key(sid):
        recs = by_sid[sid]
        ref = next((r for r in recs if r.algorithm == pivot), recs[0])
        score = ref.normalized_mai if ref.normalized_mai is not None else ref.mai_s
        return (ref.n_data, ref.distribution, score, sid)

    rank = {a: i for i, a in enumerate(algos)}
    out = []
    for sid in sorted(by_sid, key=key):
        out.extend(sorted(by_sid[sid], key=lambda r: rank[r.algorithm]))
    return out


def cmd_eval(args) -> int:
    paths = sorted({p for pattern in args.scenarios for p in glob.glob(pattern)})
    if not paths:
        raise CliError(f"no scenario files match {args.scenarios}", EXIT_IO)
    algos = [a.strip() for a in args.algos.split(",") if a.strip()]
    for a in algos:
        if a not in ALGORITHMS:
            raise CliError(f"unknown algorithm {a!r}; pick from {', '.join(ALGORITHMS)}")
    config = _improver(args)
    jobs = [(p, algos, args.normalize_by, config, not args.no_timing, args.external_solver) for p in paths]
    workers = _worker_count(args.workers)
    if workers > 1 and len(paths) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_eval_job, jobs))
    else:
        chunks = [_eval_job(j) for j in jobs]
    records = sort_for_plot([r for chunk in chunks for r in chunk], algos)

    try:
        with Path(args.out).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(RESULT_COLUMNS)
            w.writerows(r.row() for r in records)
        summary_path = Path(args.summary) if args.summary else Path(args.out).with_suffix(".summary.csv")
        with summary_path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SUMMARY_COLUMNS)
            w.writerows(summarize_records(records))
    except OSError as exc:
        raise CliError(f"cannot write results: {exc}", EXIT_IO) from exc
    print(f"evaluated {len(paths)} scenarios x {len(algos)} algorithms -> {args.out}, {summary_path}")
    return EXIT_OK


def _eval_job(job):
    return evaluate_scenario(*job)


def _load_route(inst, path) -> Route:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_IO) from exc
    order = data["order"] if isinstance(data, dict) else data
    try:
        route = Route(order)
    except RouteError as exc:
        raise CliError(f"{path}: {exc}") from exc
    if len(route) != inst.n_data:
        raise CliError(f"{path}: route covers {len(route)} nodes, scenario has {inst.n_data}")
    return route


def _process(args):
    if args.process == "worst_case":
        return simulate.GenerationProcess.worst_case(args.delta)
    if args.process == "periodic":
        return simulate.GenerationProcess.periodic(args.interval, args.phase)
    return simulate.GenerationProcess.poisson(args.rate, args.seed)


def cmd_simulate(args) -> int:
    inst = load_instance(args.scenario)
    route = _load_route(inst, args.route) if args.route else plan(inst, args.algo)
    try:
        process = _process(args)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    trace = simulate.run(inst, route, process, args.cycles)
    try:
        trace.to_csv(args.out)
    except OSError as exc:
        raise CliError(f"cannot write {args.out}: {exc}", EXIT_IO) from exc
    payload = {"order": list(route.order), "mai_s": metrics(inst, route).mai, "packets": len(trace)}
    if len(trace):
        s = simulate.summarize(trace)
        payload.update(
            steady_packets=s.steady_packets,
            observed_max_aoi_s=s.route_max,
            per_node={str(k): v for k, v in sorted(s.per_node.items())},
        )
    _emit(_dump(payload), args.summary)
    return EXIT_OK


def cmd_reduce(args) -> int:
    try:
        n, edges = scenarios.read_edge_list(args.edges)
        inst = scenarios.ham_path_reduction(n, edges)
    except OSError as exc:
        raise CliError(f"cannot read {args.edges}: {exc}", EXIT_IO) from exc
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    if args.out:
        try:
            inst.save(args.out)
        except OSError as exc:
            raise CliError(f"cannot write {args.out}: {exc}", EXIT_IO) from exc
    if n <= exact.HK_LIMIT:
        try:
            route = exact.dp_optimal(inst)
        except exact.InfeasibleError as exc:
            raise CliError(str(exc), EXIT_INFEASIBLE) from exc
        mai = metrics(inst, route).mai
        threshold = 2 * n + 1
        verdict = "yes" if mai <= threshold + 1e-9 else "no"
        print(f"optimal MAI {mai:g} (threshold {threshold})")
        print(f"HAM-PATH: {verdict}")
    else:
        print(f"{n} vertices exceed the exact solver limit of {exact.HK_LIMIT}; no verdict", file=sys.stderr)
    return EXIT_OK


def cmd_export(args) -> int:
    inst = load_instance(args.scenario)
    try:
        local_search.export_tsplib(inst, args.out)
    except OSError as exc:
        raise CliError(f"cannot write {args.out}: {exc}", EXIT_IO) from exc
    return EXIT_OK


def cmd_import(args) -> int:
    inst = load_instance(args.scenario)
    try:
        route = local_search.import_tour(inst, args.tour)
    except OSError as exc:
        raise CliError(f"cannot read {args.tour}: {exc}", EXIT_IO) from exc
    except local_search.TourFormatError as exc:
        raise CliError(str(exc)) from exc
    _emit(_dump(route_payload(inst, route)), args.out)
    return EXIT_OK


def _add_improver_flags(p):
    p.add_argument("--seed", type=int, default=0, help="local-search restart seed")
    p.add_argument("--restarts", type=int, default=4)
    p.add_argument("--max-passes", type=int, default=1000)
    p.add_argument("--external-solver", help="LKH-style binary run as '<path> <parfile>'")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="aoi-patrol", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate random scenarios")
    p.add_argument("--n", type=int, required=True, help="data nodes per scenario")
    p.add_argument("--dist", choices=scenarios.DISTRIBUTIONS, required=True)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, default=0, help="seed of the first scenario")
    p.add_argument("--area", type=float, help="side length in meters (default 1000 for n<=8, else 8000)")
    p.add_argument("--speed", type=float, default=scenarios.DEFAULT_SPEED, help="drone speed, m/s")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("plan", help="plan one route")
    p.add_argument("scenario")
    p.add_argument("--algo", choices=ALGORITHMS, default="hybrid")
    p.add_argument("--out")
    p.add_argument("--no-timing", action="store_true", help="leave plan_time_ms empty (reproducible output)")
    _add_improver_flags(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("eval", help="batch-evaluate planners")
    p.add_argument("scenarios", nargs="+", help="scenario files or glob patterns")
    p.add_argument("--algos", default="greedy,srtt,enforced,ls,hybrid,dp")
    p.add_argument("--normalize-by", choices=("dp", "none"), default="dp")
    p.add_argument("--out", default="results.csv")
    p.add_argument("--summary", help="summary CSV (default: <out>.summary.csv)")
    p.add_argument("--workers", type=int, help="parallel workers (capped by AOI_PATROL_THREADS)")
    p.add_argument("--no-timing", action="store_true")
    _add_improver_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("simulate", help="replay a route and trace packet ages")
    p.add_argument("scenario")
    p.add_argument("--route", help="route JSON (e.g. output of plan); default: plan with --algo")
    p.add_argument("--algo", choices=ALGORITHMS, default="enforced")
    p.add_argument("--process", choices=("worst_case", "periodic", "poisson"), default="worst_case")
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--interval", type=float, default=1.0)
    p.add_argument("--phase", type=float, default=0.0)
    p.add_argument("--rate", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cycles", type=int, default=10)
    p.add_argument("--out", default="trace.csv")
    p.add_argument("--summary", help="write summary JSON here instead of stdout")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reduce", help="Hamiltonian-path reduction of an edge list")
    p.add_argument("edges")
    p.add_argument("--out")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("export-tsplib", help="write a TSPLIB .tsp file")
    p.add_argument("scenario")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("import-tour", help="read a TSPLIB .tour file as a route")
    p.add_argument("scenario")
    p.add_argument("tour")
    p.add_argument("--out")
    p.set_defaults(func=cmd_import)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
