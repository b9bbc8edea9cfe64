"""
VNF Placement & Chaining - Command Line
Generate scenarios, solve instances with the particle swarm or a baseline, and run benchmarks
"""

import argparse
import asyncio
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from pydantic import ValidationError

from services.baseline_service import BaselineService
from services.config import configure_logging, get_settings
from services.errors import PlacementError, ScenarioSpecError
from services.evaluation_service import EvaluationService
from services.experiment_service import ALGORITHMS, ExperimentService, aggregate, write_summary
from services.io_utils import atomic_write_text, dumps_json, read_json
from services.models import load_instance
from services.pso_service import PSOService
from services.scenario_service import generate, grid, load_manifest, make_spec, preset, write_scenarios

logger = logging.getLogger("vnf_pso")

SPEC_FLAGS = {
    "servers": "servers",
    "demands": "demand_count",
    "avg_degree": "avg_degree",
    "chain_min": "chain_min",
    "chain_max": "chain_max",
    "vnf_types": "vnf_types",
    "vnf_capacity": "vnf_capacity",
    "vnf_bandwidth": "vnf_bandwidth",
    "server_capacity": "server_capacity",
    "link_bandwidth": "link_bandwidth",
    "dp_max": "dp_max",
    "seed": "seed",
    "name": "name",
}

SOLVER_FLAGS = ["particles", "iterations", "w1", "w2", "w3", "c1", "c2", "inertia_start", "inertia_end",
                "dp_max", "seed", "penalty_weight", "v_max_fraction"]


def parse_sweep(items: Sequence[str]) -> Dict[str, List[Any]]:
    """Parse `axis:1..9` or `axis:8,16,32` sweep arguments"""
    sweep: Dict[str, List[Any]] = {}
    for item in items:
        axis, sep, values = item.partition(":")
        if not sep or not values:
            raise ScenarioSpecError(f"sweep {item!r} must look like axis:1..9 or axis:a,b,c")
        if ".." in values:
            low, high = values.split("..", 1)
            sweep[axis] = list(range(int(low), int(high) + 1))
        else:
            sweep[axis] = [_number(v) for v in values.split(",")]
    return sweep


def _number(text: str) -> Any:
    try:
        return int(text)
    except ValueError:
        return float(text)


def cmd_gen(args: argparse.Namespace) -> int:
    if args.preset:
        specs = preset(args.preset, seed=args.seed if args.seed is not None else get_settings().default_seed)
    else:
        values: Dict[str, Any] = read_json(args.spec) if args.spec else {}
        values.update({field: getattr(args, flag) for flag, field in SPEC_FLAGS.items()
                       if getattr(args, flag) is not None})
        if args.delay_min is not None or args.delay_max is not None:
            low, high = values.get("delay_range", (1.0, 10.0))
            values["delay_range"] = (args.delay_min or low, args.delay_max or high)
        if args.clone_demands:
            values["clone_demands"] = True
        values.setdefault("seed", get_settings().default_seed)
        template = make_spec(**values)
        sweep = parse_sweep(args.sweep or [])
        if not sweep:
            path = Path(args.out or f"{template.name}.json")
            atomic_write_text(path, dumps_json(generate(template).to_json()))
            logger.info("wrote %s", path)
            print(path)
            return 0
        specs = grid(template, sweep)
    manifest = write_scenarios(specs, args.out or "scenarios")
    print(manifest)
    return 0


def cmd_solve(args: argparse.Namespace) -> int:
    instance = load_instance(args.instance)
    overrides = {flag: getattr(args, flag) for flag in SOLVER_FLAGS}
    if overrides["seed"] is None and instance.config is None:
        overrides["seed"] = get_settings().default_seed
    config = instance.solver_config(**overrides)
    evaluator = EvaluationService(instance, config)
    if args.algo == "pso":
        result = PSOService(instance, config, evaluator).run()
    elif args.algo == "random":
        result = BaselineService(instance, config, evaluator).random_solve(config.seed, args.attempts)
    else:
        result = BaselineService(instance, config, evaluator).brute_force_solve()

    payload = {
        "success": True,
        "algorithm": args.algo,
        "instance": instance.name,
        "seed": config.seed,
        "data": result.to_dict(),
        "message": "feasible placement found" if result.report.feasible else "best placement violates constraints",
    }
    text = dumps_json(payload)
    if args.output:
        atomic_write_text(args.output, text)
    else:
        sys.stdout.write(text)
    if args.trace and result.trace is not None:
        result.trace.write_csv(args.trace)
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest)
    algorithms = [a.strip() for a in args.algos.split(",") if a.strip()]
    out_dir = Path(args.out or get_settings().results_dir)
    overrides = {"particles": args.particles, "iterations": args.iterations}
    service = ExperimentService(out_dir, workers=args.workers or get_settings().workers,
                                master_seed=args.master_seed, attempts=args.attempts,
                                config_overrides=overrides, write_traces=not args.no_traces)
    records = asyncio.run(service.run_experiment(manifest, algorithms, args.reps))
    write_summary(aggregate(records), out_dir)
    print(out_dir / "results.csv")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vnf-pso", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING (default from VNF_PSO_LOG_LEVEL)")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate instance files")
    gen.add_argument("--spec", help="JSON scenario spec; flags override it")
    gen.add_argument("--preset", help="built-in sweep: chain-length, servers, capacity, capacity-150, baseline")
    gen.add_argument("--sweep", action="append", help="axis:1..9 or axis:a,b,c (repeatable)")
    gen.add_argument("--out", help="instance file, or directory for sweeps")
    gen.add_argument("--servers", type=int)
    gen.add_argument("--demands", type=int)
    gen.add_argument("--avg-degree", dest="avg_degree", type=float)
    gen.add_argument("--chain-min", dest="chain_min", type=int)
    gen.add_argument("--chain-max", dest="chain_max", type=int)
    gen.add_argument("--vnf-types", dest="vnf_types", type=int)
    gen.add_argument("--vnf-capacity", dest="vnf_capacity", type=float)
    gen.add_argument("--vnf-bandwidth", dest="vnf_bandwidth", type=float)
    gen.add_argument("--server-capacity", dest="server_capacity", type=float)
    gen.add_argument("--link-bandwidth", dest="link_bandwidth", type=float)
    gen.add_argument("--delay-min", dest="delay_min", type=float)
    gen.add_argument("--delay-max", dest="delay_max", type=float)
    gen.add_argument("--dp-max", dest="dp_max", type=float)
    gen.add_argument("--clone-demands", dest="clone_demands", action="store_true")
    gen.add_argument("--seed", type=int)
    gen.add_argument("--name")
    gen.set_defaults(handler=cmd_gen)

    for name in ("solve", "oracle"):
        solve = sub.add_parser(name, help="solve one instance" if name == "solve" else "alias for solve --algo oracle")
        solve.add_argument("instance")
        if name == "solve":
            solve.add_argument("--algo", choices=ALGORITHMS, default="pso")
        else:
            solve.set_defaults(algo="oracle")
        solve.add_argument("--output", help="placement JSON file (default stdout)")
        solve.add_argument("--trace", help="convergence trace CSV file")
        solve.add_argument("--attempts", type=int, default=100, help="random baseline draws")
        solve.add_argument("--particles", type=int)
        solve.add_argument("--iterations", type=int)
        for weight in ("w1", "w2", "w3", "c1", "c2"):
            solve.add_argument(f"--{weight}", type=float)
        solve.add_argument("--inertia-start", dest="inertia_start", type=float)
        solve.add_argument("--inertia-end", dest="inertia_end", type=float)
        solve.add_argument("--dp-max", dest="dp_max", type=float)
        solve.add_argument("--penalty-weight", dest="penalty_weight", type=float)
        solve.add_argument("--v-max-fraction", dest="v_max_fraction", type=float)
        solve.add_argument("--seed", type=int)
        solve.set_defaults(handler=cmd_solve)

    bench = sub.add_parser("bench", help="run algorithms over a manifest")
    bench.add_argument("manifest")
    bench.add_argument("--reps", type=int, default=20)
    bench.add_argument("--algos", default="pso,random")
    bench.add_argument("--workers", type=int, help="parallel runs (default 1 keeps timings clean)")
    bench.add_argument("--master-seed", dest="master_seed", type=int, default=0)
    bench.add_argument("--attempts", type=int, default=100)
    bench.add_argument("--particles", type=int)
    bench.add_argument("--iterations", type=int)
    bench.add_argument("--out", help="results directory (default VNF_PSO_RESULTS_DIR)")
    bench.add_argument("--no-traces", dest="no_traces", action="store_true")
    bench.set_defaults(handler=cmd_bench)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    try:
        return args.handler(args)
    except PlacementError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (ValidationError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
