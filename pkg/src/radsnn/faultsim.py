"""Calibrated single-event-upset injection over the synaptic crossbar.

The upset process is a homogeneous Poisson stream whose rate comes from a
measured cross-section and beam flux. Scope "relevant_bits" restricts both
the rate (via the relevant-bit fraction eta) and the target bit set to the
columns of enabled neurons; "full_memory" covers every bit in the array.

Schedules are generated from exponential inter-arrival times on a keyed
SplitMix64 stream: the resulting event count is exactly Poisson(rate * T)
and event times are uniform order statistics, already sorted. For TMR
targets, one replica is drawn per event after the schedule is complete.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .crng import TAG_FAULT, Stream, stream_for
from .memory import BITS_PER_ENTRY, SynapticMemory

# Reference beam calibration (neutron campaign at a spallation facility):
# 492 bit flips over 1.18e11 particles/cm^2 on a 262,144-bit array with 10
# of 256 neurons enabled.
REF_SIGMA_CM2 = 4.17e-9
REF_FLIP_COUNT = 492
REF_FLUENCE = 1.18e11
REF_ETA = 10240 / 262144
REF_MTTU_FULL_S = 46.0  # quoted mean time to any-bit upset
REF_MTTU_RELEVANT_S = 1185.0  # quoted mean time to relevant-bit upset

SCOPES = ("full_memory", "relevant_bits")


@dataclass(frozen=True)
class FaultModel:
    """Immutable upset-process parameters."""

    sigma: float = REF_SIGMA_CM2  # cross-section, cm^2
    flux: float = 0.0  # particles/cm^2/s
    eta: float = REF_ETA  # relevant-bit fraction
    scope: str = "relevant_bits"
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if self.flux < 0:
            raise ValueError("flux must be non-negative")
        if not 0 < self.eta <= 1:
            raise ValueError("eta must be in (0, 1]")
        if self.scope not in SCOPES:
            raise ValueError(f"scope must be one of {SCOPES}")

    @classmethod
    def from_mttu(cls, mttu_s: float, scope: str = "relevant_bits",
                  eta: float = REF_ETA, seed: int = 0) -> "FaultModel":
        """Model with the given mean time to upset, keeping the reference
        cross-section and solving for the flux."""
        if mttu_s <= 0:
            raise ValueError("mean time to upset must be positive")
        rate = 1.0 / mttu_s
        factor = eta if scope == "relevant_bits" else 1.0
        return cls(REF_SIGMA_CM2, rate / (REF_SIGMA_CM2 * factor), eta, scope, seed)

    def with_seed(self, seed: int) -> "FaultModel":
        return replace(self, seed=seed)


def upset_rate(model: FaultModel) -> float:
    """Upset events per second for the model's scope."""
    factor = model.eta if model.scope == "relevant_bits" else 1.0
    return model.sigma * model.flux * factor


def mean_time_to_upset(model: FaultModel) -> float:
    rate = upset_rate(model)
    return float("inf") if rate == 0 else 1.0 / rate


def _scope_bit_count(model: FaultModel, memory: SynapticMemory,
                     enabled: np.ndarray | None) -> int:
    if model.scope == "full_memory":
        return memory.total_bits
    if enabled is None or len(enabled) == 0:
        raise ValueError("relevant_bits scope requires enabled neuron indices")
    return memory.n_pre * len(enabled) * BITS_PER_ENTRY


def _scope_bit_at(rank: int, model: FaultModel, memory: SynapticMemory,
                  enabled: np.ndarray | None) -> int:
    """Bijection from scope rank to flat bit index."""
    if model.scope == "full_memory":
        return rank
    k = rank % BITS_PER_ENTRY
    entry = rank // BITS_PER_ENTRY
    pre, which = divmod(entry, len(enabled))
    return memory.encode_bit(pre, int(enabled[which]), k)


def schedule_upsets(model: FaultModel, duration_s: float, rng: Stream,
                    memory: SynapticMemory,
                    enabled: np.ndarray | None = None) -> list[tuple[float, int]]:
    """Poisson upset schedule for a duration: sorted (time_s, flat_bit)."""
    if duration_s < 0:
        raise ValueError("duration must be non-negative")
    rate = upset_rate(model)
    if rate == 0 or duration_s == 0:
        return []
    n_bits = _scope_bit_count(model, memory, enabled)
    events: list[tuple[float, int]] = []
    t = rng.next_exp(rate)
    while t < duration_s:
        rank = rng.next_below(n_bits)
        events.append((t, _scope_bit_at(rank, model, memory, enabled)))
        t += rng.next_exp(rate)
    return events


def apply_flip(memory: SynapticMemory, flat_bit: int) -> None:
    """Invert exactly one bit (raises IndexError when out of range)."""
    memory.set_bit(flat_bit, 1 - memory.get_bit(flat_bit))


class TmrMemory:
    """Three synaptic-memory replicas with bitwise majority voting."""

    def __init__(self, baseline: SynapticMemory):
        self.replicas = [baseline.copy(), baseline.copy(), baseline.copy()]

    @property
    def n_pre(self) -> int:
        return self.replicas[0].n_pre

    @property
    def n_post(self) -> int:
        return self.replicas[0].n_post

    def vote(self) -> SynapticMemory:
        """Majority-voted view of the three replicas."""
        a, b, c = self.replicas
        out = SynapticMemory(a.n_pre, a.n_post)
        out.w[:] = (a.w & b.w) | (a.w & c.w) | (b.w & c.w)
        out.m[:] = (a.m & b.m) | (a.m & c.m) | (b.m & c.m)
        return out

    def scrub_to(self, voted: SynapticMemory) -> None:
        """Rewrite every replica with the given (voted) content."""
        for r in self.replicas:
            r.w[:] = voted.w
            r.m[:] = voted.m


def tmr_read(tmr: TmrMemory, flat_bit: int) -> int:
    """Majority of the three replica bits at one position."""
    total = sum(r.get_bit(flat_bit) for r in tmr.replicas)
    return 1 if total >= 2 else 0


def tmr_scrub(tmr: TmrMemory) -> None:
    tmr.scrub_to(tmr.vote())


def inject_period(target: SynapticMemory | TmrMemory, model: FaultModel,
                  period_hours: float, rng: Stream,
                  enabled: np.ndarray | None = None,
                  log: list | None = None) -> int:
    """Schedule and apply one period's upsets in time order; returns the
    number of flips applied. TMR targets get a uniformly drawn replica per
    event (drawn after the schedule, in event order)."""
    if period_hours < 0:
        raise ValueError("period must be non-negative")
    is_tmr = isinstance(target, TmrMemory)
    geometry = target.replicas[0] if is_tmr else target
    events = schedule_upsets(model, period_hours * 3600.0, rng, geometry, enabled)
    for time_s, bit in events:
        replica = rng.next_below(3) if is_tmr else -1
        mem = target.replicas[replica] if is_tmr else target
        apply_flip(mem, bit)
        if log is not None:
            pre, post, _ = mem.decode_bit(bit)
            log.append({
                "time_s": time_s, "bit_index": bit,
                "pre": pre, "post": post, "replica": replica,
            })
    return len(events)


def period_stream(model: FaultModel, run_seed: int, period_index: int) -> Stream:
    """Fault stream for one period: independent across periods and runs,
    and insensitive to whether learning or evaluation draws happen."""
    return stream_for(model.seed, run_seed, TAG_FAULT, period_index)


EVENT_LOG_COLUMNS = ["time_s", "bit_index", "pre", "post", "replica"]


def write_event_log(path: str | Path, rows: list[dict]) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=EVENT_LOG_COLUMNS)
        writer.writeheader()
        for row in rows:
            out = dict(row)
            out["time_s"] = f"{row['time_s']:.6f}"
            writer.writerow(out)
    tmp.replace(path)
