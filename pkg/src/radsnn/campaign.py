"""Period-discretized exposure experiments across many seeds.

One run (seed) clones the pretrained baseline, logs its pre-exposure
accuracy, then for every period injects the period's upsets, evaluates,
and (when learning is on) executes one unsupervised epoch followed by
label re-assignment. Runs are fully determined by their seed: fault
streams are keyed by (model seed, run seed, period) and encoding draws by
(run seed, dataset role), so learning on/off never perturbs the fault
sequence and seeds can execute in any order or in parallel.
"""

from __future__ import annotations

import csv
import hashlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import crng
from .faultsim import FaultModel, TmrMemory, inject_period, period_stream
from .kernels import run_sample
from .memory import SynapticMemory
from .network import Dataset, NetworkConfig, NeuronPool, classify_counts, evaluate
from .plasticity import SdspParams, assign_labels, learning_epoch

# Dataset roles used to derive per-run encoding seeds.
ROLE_EVAL = 0
ROLE_EPOCH = 1
ROLE_TRAIN = 2

SCHEDULES = ("epoch", "continuous")


@dataclass
class BaselineNetwork:
    """Pretrained network bundle cloned at the start of every run."""

    memory: SynapticMemory
    config: NetworkConfig  # label_map must be set
    sdsp: SdspParams


@dataclass
class CampaignConfig:
    eval_set: Dataset
    epoch_set: Dataset
    period_hours: float = 120.0
    n_periods: int = 7
    learning_enabled: bool = True
    tmr_enabled: bool = False
    schedule: str = "epoch"
    n_seeds: int = 45
    base_seed: int = 1

    def __post_init__(self):
        if self.n_seeds < 1:
            raise ValueError("need at least one seed")
        if self.n_periods < 0 or self.period_hours < 0:
            raise ValueError("periods and period length must be non-negative")
        if self.schedule not in SCHEDULES:
            raise ValueError(f"schedule must be one of {SCHEDULES}")

    @property
    def total_hours(self) -> float:
        return self.period_hours * self.n_periods


@dataclass
class PeriodRecord:
    period_index: int
    equivalent_hours: float
    flips_injected: int
    cumulative_flips: int
    accuracy: float
    epoch_ran: bool


@dataclass
class RunLog:
    seed: int
    config_hash: str
    records: list[PeriodRecord] = field(default_factory=list)


def config_hash(config: CampaignConfig, baseline: BaselineNetwork,
                model: FaultModel) -> str:
    net = baseline.config
    parts = [
        config.period_hours, config.n_periods, config.learning_enabled,
        config.tmr_enabled, config.schedule, config.n_seeds, config.base_seed,
        config.eval_set.name, len(config.eval_set),
        config.epoch_set.name, len(config.epoch_set),
        model.sigma, model.flux, model.eta, model.scope, model.seed,
        net.n_pre, net.n_post, net.n_inputs, net.n_outputs, net.theta_v,
        net.leak_v, net.refractory, net.t_steps, net.r_max,
        baseline.sdsp,
    ]
    h = hashlib.sha256()
    h.update(repr(parts).encode())
    if net.label_map is not None:
        h.update(net.label_map.tobytes())
    h.update(baseline.memory.content_hash().encode())
    return h.hexdigest()[:12]


# -- per-sample plumbing shared by plain and TMR targets ------------------------


def _eval_target(target, neurons: NeuronPool, dataset: Dataset,
                 cfg: NetworkConfig, enc_seed: int) -> float:
    if not isinstance(target, TmrMemory):
        return evaluate(target, neurons, dataset, cfg, enc_seed)
    correct = 0
    for i in range(len(dataset)):
        voted = target.vote()
        run_sample(voted.w, voted.m, neurons, dataset.pixels[i], enc_seed,
                   int(dataset.ids[i]), cfg, sdsp=None)
        target.scrub_to(voted)
        pred = classify_counts(neurons.spike_count, neurons.enabled_idx, cfg.label_map)
        if pred == int(dataset.labels[i]):
            correct += 1
    return correct / len(dataset)


def _epoch_target(target, neurons: NeuronPool, dataset: Dataset,
                  cfg: NetworkConfig, sdsp: SdspParams, enc_seed: int) -> None:
    if not isinstance(target, TmrMemory):
        learning_epoch(target, neurons, dataset, cfg, sdsp,
                       mode="unsupervised", seed=enc_seed)
        return
    for i in range(len(dataset)):
        voted = target.vote()
        run_sample(voted.w, voted.m, neurons, dataset.pixels[i], enc_seed,
                   int(dataset.ids[i]), cfg, sdsp=sdsp)
        target.scrub_to(voted)


def _eval_learning_target(target, neurons: NeuronPool, dataset: Dataset,
                          cfg: NetworkConfig, sdsp: SdspParams,
                          enc_seed: int) -> float:
    """Continuous schedule: measure accuracy while learning stays on."""
    correct = 0
    for i in range(len(dataset)):
        mem = target.vote() if isinstance(target, TmrMemory) else target
        run_sample(mem.w, mem.m, neurons, dataset.pixels[i], enc_seed,
                   int(dataset.ids[i]), cfg, sdsp=sdsp)
        if isinstance(target, TmrMemory):
            target.scrub_to(mem)
        pred = classify_counts(neurons.spike_count, neurons.enabled_idx, cfg.label_map)
        if pred == int(dataset.labels[i]):
            correct += 1
    return correct / len(dataset)


def _assign_target(target, neurons: NeuronPool, dataset: Dataset,
                   cfg: NetworkConfig, enc_seed: int) -> np.ndarray:
    mem = target.vote() if isinstance(target, TmrMemory) else target
    label_map, _ = assign_labels(mem, neurons, dataset, cfg, enc_seed)
    return label_map


def run_one_seed(config: CampaignConfig, baseline: BaselineNetwork,
                 model: FaultModel, seed_index: int,
                 cfg_hash: str | None = None) -> RunLog:
    run_seed = config.base_seed + seed_index
    mem = baseline.memory.copy()
    target = TmrMemory(mem) if config.tmr_enabled else mem
    cfg = replace(baseline.config, label_map=baseline.config.label_map.copy())
    neurons = NeuronPool.for_config(cfg)
    enc_eval = crng.mix(run_seed, crng.TAG_ENCODE, ROLE_EVAL)
    enc_epoch = crng.mix(run_seed, crng.TAG_ENCODE, ROLE_EPOCH)
    if cfg_hash is None:
        cfg_hash = config_hash(config, baseline, model)

    log = RunLog(seed=run_seed, config_hash=cfg_hash)
    acc0 = _eval_target(target, neurons, config.eval_set, cfg, enc_eval)
    log.records.append(PeriodRecord(0, 0.0, 0, 0, acc0, False))

    cumulative = 0
    for p in range(1, config.n_periods + 1):
        stream = period_stream(model, run_seed, p)
        flips = inject_period(target, model, config.period_hours, stream,
                              enabled=neurons.enabled_idx)
        cumulative += flips
        epoch_ran = False
        if config.learning_enabled and config.schedule == "continuous":
            acc = _eval_learning_target(target, neurons, config.eval_set, cfg,
                                        baseline.sdsp, enc_eval)
            cfg.label_map = _assign_target(target, neurons, config.epoch_set,
                                           cfg, enc_epoch)
            epoch_ran = True
        else:
            acc = _eval_target(target, neurons, config.eval_set, cfg, enc_eval)
            if config.learning_enabled:
                _epoch_target(target, neurons, config.epoch_set, cfg,
                              baseline.sdsp, enc_epoch)
                cfg.label_map = _assign_target(target, neurons, config.epoch_set,
                                               cfg, enc_epoch)
                epoch_ran = True
        log.records.append(PeriodRecord(
            p, p * config.period_hours, flips, cumulative, acc, epoch_ran,
        ))
    return log


def _run_seed_star(args):
    return run_one_seed(*args)


def run_campaign(config: CampaignConfig, baseline: BaselineNetwork,
                 model: FaultModel, workers: int = 1) -> list[RunLog]:
    """All seeds' run logs, ordered by seed."""
    if baseline.config.label_map is None:
        raise ValueError("baseline network has no label map; pretrain first")
    cfg_hash = config_hash(config, baseline, model)
    jobs = [(config, baseline, model, i, cfg_hash) for i in range(config.n_seeds)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            logs = list(pool.map(_run_seed_star, jobs))
    else:
        logs = [run_one_seed(*job) for job in jobs]
    return sorted(logs, key=lambda log: log.seed)


# -- aggregation and CSV export -------------------------------------------------


@dataclass
class AggregateRow:
    period_index: int
    equivalent_hours: float
    min: float
    mean: float
    max: float


@dataclass
class Aggregate:
    rows: list[AggregateRow]

    @property
    def end_of_run(self) -> AggregateRow:
        return self.rows[-1]


def aggregate(logs: list[RunLog]) -> Aggregate:
    """Element-wise min/mean/max accuracy per period across runs."""
    if not logs:
        raise ValueError("no run logs to aggregate")
    n = len(logs[0].records)
    if any(len(log.records) != n for log in logs):
        raise ValueError("run logs have differing period counts")
    rows = []
    for k in range(n):
        accs = [log.records[k].accuracy for log in logs]
        rows.append(AggregateRow(
            logs[0].records[k].period_index,
            logs[0].records[k].equivalent_hours,
            min(accs), sum(accs) / len(accs), max(accs),
        ))
    return Aggregate(rows)


RUNS_COLUMNS = [
    "seed", "period_index", "equivalent_hours", "flips_injected",
    "cumulative_flips", "accuracy", "epoch_ran", "config_hash",
]
AGGREGATE_COLUMNS = ["period_index", "equivalent_hours", "min", "mean", "max"]


def write_csv(path: str | Path, columns: list[str], rows: list[list]) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(rows)
    tmp.replace(path)


def export_csv(logs: list[RunLog], path: str | Path) -> None:
    """One row per (seed, period); floats as shortest round-trip reprs."""
    rows = []
    for log in sorted(logs, key=lambda log: log.seed):
        for rec in log.records:
            rows.append([
                log.seed, rec.period_index, repr(rec.equivalent_hours),
                rec.flips_injected, rec.cumulative_flips, repr(rec.accuracy),
                int(rec.epoch_ran), log.config_hash,
            ])
    write_csv(path, RUNS_COLUMNS, rows)


def export_aggregate_csv(agg: Aggregate, path: str | Path) -> None:
    rows = [
        [row.period_index, repr(row.equivalent_hours), repr(row.min),
         repr(row.mean), repr(row.max)]
        for row in agg.rows
    ]
    write_csv(path, AGGREGATE_COLUMNS, rows)


def read_runs_csv(path: str | Path) -> list[RunLog]:
    logs: dict[int, RunLog] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            seed = int(row["seed"])
            log = logs.setdefault(seed, RunLog(seed, row["config_hash"]))
            log.records.append(PeriodRecord(
                int(row["period_index"]), float(row["equivalent_hours"]),
                int(row["flips_injected"]), int(row["cumulative_flips"]),
                float(row["accuracy"]), bool(int(row["epoch_ran"])),
            ))
    return [logs[s] for s in sorted(logs)]


def read_aggregate_csv(path: str | Path) -> Aggregate:
    rows = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append(AggregateRow(
                int(row["period_index"]), float(row["equivalent_hours"]),
                float(row["min"]), float(row["mean"]), float(row["max"]),
            ))
    return Aggregate(rows)
