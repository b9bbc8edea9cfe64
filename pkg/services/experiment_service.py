"""
Experiment Service
Runs solvers and baselines over scenario manifests, aggregates and persists results
"""

import asyncio
import csv
import io
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from services.baseline_service import BaselineService
from services.errors import InstanceError
from services.evaluation_service import EvaluationService
from services.io_utils import atomic_write_text, write_json
from services.models import load_instance
from services.pso_service import PSOService, SolveResult
from services.scenario_service import Manifest

logger = logging.getLogger(__name__)

ALGORITHMS = ("pso", "random", "oracle")
RESULT_COLUMNS = ["scenario_id", "algorithm", "seed", "wall_time_s", "objective", "T", "U", "dp_hat", "feasible"]
EXTRA_COLUMNS = ["repetition", "penalized_fitness", "acceptance_rate", "trace_file"]
METRICS = ["wall_time_s", "T", "U", "dp_hat", "objective", "acceptance_rate"]

# (view name, sweep parameter, metric)
PLOT_VIEWS = [
    ("chain_vs_time", "chain", "wall_time_s"),
    ("chain_vs_dp_hat", "chain", "dp_hat"),
    ("servers_vs_time", "servers", "wall_time_s"),
    ("requested_vnfs_vs_time", "requested_vnfs", "wall_time_s"),
    ("capacity_vs_time", "vnf_capacity", "wall_time_s"),
    ("demands_vs_U", "demand_count", "U"),
]


@dataclass(frozen=True)
class RunRecord:
    scenario_id: str
    algorithm: str
    seed: int
    wall_time_s: float
    objective: float
    T: int
    U: float
    dp_hat: float
    feasible: bool
    repetition: int = 0
    penalized_fitness: float = 0.0
    acceptance_rate: float = 0.0
    trace_file: str = ""
    params: Dict[str, Any] = field(default_factory=dict)

    def to_row(self) -> List[Any]:
        values = asdict(self)
        return [values[c] for c in RESULT_COLUMNS + EXTRA_COLUMNS]

    def flat(self) -> Dict[str, Any]:
        values = asdict(self)
        params = values.pop("params")
        values.update({f"param_{k}": v for k, v in params.items()})
        return values


@dataclass(frozen=True)
class RunJob:
    scenario_id: str
    instance_path: str
    algorithm: str
    seed: int
    repetition: int
    params: Dict[str, Any]
    overrides: Dict[str, Any]
    attempts: int
    trace_path: Optional[str] = None


def derive_seed(master_seed: int, entry_index: int, repetition: int) -> int:
    """Distinct, reproducible per-run seed"""
    state = np.random.SeedSequence([master_seed, entry_index, repetition]).generate_state(1, dtype=np.uint32)
    return int(state[0])


def run_job(job: RunJob) -> RunRecord:
    """Execute one (instance, algorithm, repetition); wall time excludes instance loading"""
    instance = load_instance(job.instance_path)
    config = instance.solver_config(**{**job.overrides, "seed": job.seed})
    start = time.perf_counter()
    evaluator = EvaluationService(instance, config)
    if job.algorithm == "pso":
        result: SolveResult = PSOService(instance, config, evaluator).run()
    elif job.algorithm == "random":
        result = BaselineService(instance, config, evaluator).random_solve(job.seed, job.attempts)
    elif job.algorithm == "oracle":
        result = BaselineService(instance, config, evaluator).brute_force_solve()
    else:
        raise ValueError(f"unknown algorithm {job.algorithm!r}")
    wall = time.perf_counter() - start

    trace_file = ""
    if job.trace_path and result.trace is not None:
        result.trace.write_csv(job.trace_path)
        trace_file = job.trace_path
    report = result.report
    return RunRecord(
        scenario_id=job.scenario_id,
        algorithm=job.algorithm,
        seed=job.seed,
        wall_time_s=wall,
        objective=report.objective,
        T=report.T,
        U=report.U,
        dp_hat=report.dp_hat,
        feasible=report.feasible,
        repetition=job.repetition,
        penalized_fitness=report.penalized_fitness,
        acceptance_rate=report.acceptance_rate,
        trace_file=trace_file,
        params=dict(job.params),
    )


class ResultsStore:
    """Append-only CSV written under a .part name and renamed once complete"""

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        self.partial = self.path.with_name(self.path.name + ".part")
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.partial, "w", encoding="utf-8", newline="") as handle:
            csv.writer(handle, lineterminator="\n").writerow(RESULT_COLUMNS + EXTRA_COLUMNS)

    def append(self, record: RunRecord) -> None:
        buffer = io.StringIO()
        csv.writer(buffer, lineterminator="\n").writerow(record.to_row())
        # one write per row so a reader never sees half a record
        with open(self.partial, "a", encoding="utf-8", newline="") as handle:
            handle.write(buffer.getvalue())
            handle.flush()

    def finalize(self) -> Path:
        os.replace(self.partial, self.path)
        return self.path


class ExperimentService:
    def __init__(self, results_dir: Union[str, Path], workers: int = 1, master_seed: int = 0,
                 attempts: int = 100, config_overrides: Optional[Dict[str, Any]] = None,
                 write_traces: bool = True):
        self.results_dir = Path(results_dir)
        self.workers = max(1, workers)
        self.master_seed = master_seed
        self.attempts = attempts
        self.config_overrides = {k: v for k, v in (config_overrides or {}).items() if v is not None}
        self.write_traces = write_traces

    def _plan(self, manifest: Manifest, algorithms: Sequence[str], repetitions: int) -> List[RunJob]:
        unknown = [a for a in algorithms if a not in ALGORITHMS]
        if unknown:
            raise ValueError(f"unknown algorithms {unknown}; choose from {list(ALGORITHMS)}")
        if repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        paths = []
        for entry in manifest.instances:
            path = manifest.path_of(entry)
            if not path.exists():
                raise InstanceError(f"instance file {path} listed as {entry.id!r} does not exist")
            load_instance(path)
            paths.append(path)
        jobs = []
        for index, (entry, path) in enumerate(zip(manifest.instances, paths)):
            for algorithm in algorithms:
                for rep in range(repetitions):
                    trace = None
                    if self.write_traces and algorithm == "pso":
                        trace = str(self.results_dir / "traces" / f"{entry.id}__{algorithm}__r{rep:03d}.csv")
                    jobs.append(RunJob(
                        scenario_id=entry.id,
                        instance_path=str(path),
                        algorithm=algorithm,
                        seed=derive_seed(self.master_seed, index, rep),
                        repetition=rep,
                        params=dict(entry.params),
                        overrides=self.config_overrides,
                        attempts=self.attempts,
                        trace_path=trace,
                    ))
        return jobs

    async def run_experiment(self, manifest: Manifest, algorithms: Sequence[str],
                             repetitions: int) -> List[RunRecord]:
        """
        Run every instance x algorithm `repetitions` times

        Args:
            manifest: Scenario manifest (every instance is loaded and validated first)
            algorithms: Subset of pso, random, oracle
            repetitions: Runs per (instance, algorithm)

        Returns:
            One RunRecord per run, in plan order
        """
        jobs = self._plan(manifest, algorithms, repetitions)
        store = ResultsStore(self.results_dir / "results.csv")
        logger.info("experiment: %d runs on %d instances with %d worker(s)",
                    len(jobs), len(manifest.instances), self.workers)
        records: List[RunRecord] = []
        if self.workers == 1:
            for i, job in enumerate(jobs, 1):
                record = run_job(job)
                store.append(record)
                records.append(record)
                logger.info("[%d/%d] %s %s rep %d: U=%.4f dp_hat=%.4f %.3fs", i, len(jobs), job.scenario_id,
                            job.algorithm, job.repetition, record.U, record.dp_hat, record.wall_time_s)
        else:
            loop = asyncio.get_running_loop()
            with ProcessPoolExecutor(max_workers=self.workers) as pool:

                async def submit(job: RunJob) -> RunRecord:
                    record = await loop.run_in_executor(pool, run_job, job)
                    store.append(record)
                    return record

                records = list(await asyncio.gather(*(submit(job) for job in jobs)))
        store.finalize()
        return records


def _group_label(keys: Sequence[str], values: Sequence[Any]) -> str:
    parts = [f"{k[len('param_'):] if k.startswith('param_') else k}={v}" for k, v in zip(keys, values)]
    return ",".join(parts)


@dataclass
class ExperimentSummary:
    table: pd.DataFrame
    reductions: pd.DataFrame
    group_keys: List[str]

    def to_dict(self) -> Dict[str, Any]:
        groups: Dict[str, Dict[str, Any]] = {}
        for row in self.table.to_dict(orient="records"):
            label = _group_label(self.group_keys, [row[k] for k in self.group_keys])
            stats = {k: _plain(v) for k, v in row.items() if k not in self.group_keys and k != "algorithm"}
            groups.setdefault(label, {})[row["algorithm"]] = stats
        reductions = {}
        for row in self.reductions.to_dict(orient="records"):
            label = _group_label(self.group_keys, [row[k] for k in self.group_keys])
            reductions[label] = {k: _plain(v) for k, v in row.items() if k not in self.group_keys}
        return {"group_keys": [k.replace("param_", "", 1) for k in self.group_keys],
                "groups": groups, "reductions": reductions}


def _plain(value: Any) -> Any:
    if isinstance(value, (np.floating, float)):
        return None if np.isnan(value) else float(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def _population_std(series: pd.Series) -> float:
    values = series.to_numpy(dtype=float)
    # identical values must give exactly 0, which np.std does not guarantee
    if values.size == 0 or np.all(values == values[0]):
        return 0.0
    return float(np.std(values))


def aggregate(records: Sequence[RunRecord]) -> ExperimentSummary:
    """
    Mean/stddev per (sweep parameter values, algorithm) and random-vs-pso reductions

    Records are sorted before reduction so the result does not depend on their order.
    """
    ordered = sorted(records, key=lambda r: (r.scenario_id, r.algorithm, r.repetition, r.seed))
    if not ordered:
        return ExperimentSummary(pd.DataFrame(), pd.DataFrame(), [])
    frame = pd.DataFrame([r.flat() for r in ordered])
    param_keys = sorted(c for c in frame.columns if c.startswith("param_"))
    keys = param_keys or ["scenario_id"]
    frame["feasible"] = frame["feasible"].astype(float)

    named = {}
    for metric in METRICS:
        named[f"{metric}_mean"] = (metric, "mean")
        named[f"{metric}_std"] = (metric, _population_std)
    named["feasibility_rate"] = ("feasible", "mean")
    named["runs"] = ("seed", "count")
    table = frame.groupby(keys + ["algorithm"], sort=True, dropna=False).agg(**named).reset_index()

    rows = []
    for values, group in table.groupby(keys, sort=True, dropna=False):
        values = values if isinstance(values, tuple) else (values,)
        by_algo = group.set_index("algorithm")
        if "pso" not in by_algo.index or "random" not in by_algo.index:
            continue
        row = dict(zip(keys, values))
        for metric in ("U", "dp_hat", "T"):
            baseline = float(by_algo.loc["random", f"{metric}_mean"])
            ours = float(by_algo.loc["pso", f"{metric}_mean"])
            row[f"{metric}_reduction"] = (baseline - ours) / baseline if baseline else float("nan")
        rows.append(row)
    reductions = pd.DataFrame(rows, columns=keys + ["U_reduction", "dp_hat_reduction", "T_reduction"])
    return ExperimentSummary(table=table, reductions=reductions, group_keys=keys)


def plot_views(summary: ExperimentSummary) -> Dict[str, pd.DataFrame]:
    """Tabular data per plotted view, one column per algorithm"""
    views = {}
    for name, param, metric in PLOT_VIEWS:
        column = f"param_{param}"
        if summary.table.empty or column not in summary.table.columns:
            continue
        pivot = summary.table.pivot_table(index=column, columns="algorithm", values=f"{metric}_mean", aggfunc="mean")
        pivot.index.name = param
        views[name] = pivot.reset_index()
    if not summary.reductions.empty and "param_demand_count" in summary.reductions.columns:
        reduction = summary.reductions.groupby("param_demand_count", sort=True)["U_reduction"].mean()
        views["demands_vs_U_reduction"] = reduction.rename_axis("demand_count").reset_index()
    return views


def write_summary(summary: ExperimentSummary, out_dir: Union[str, Path]) -> List[Path]:
    out = Path(out_dir)
    written = [write_json(out / "summary.json", summary.to_dict())]
    for name, frame in plot_views(summary).items():
        written.append(atomic_write_text(out / f"{name}.tsv", frame.to_csv(sep="\t", index=False)))
    return written


def run_experiment(manifest: Manifest, algorithms: Sequence[str], repetitions: int,
                   results_dir: Union[str, Path], **options: Any) -> List[RunRecord]:
    return asyncio.run(ExperimentService(results_dir, **options).run_experiment(manifest, algorithms, repetitions))
