"""Spike-driven synaptic weight updates and learning epochs.

Every presynaptic spike arriving at an enabled, mapped synapse triggers one
update decision while learning is on:

    potentiate (w+1, saturating at w_max) when the postsynaptic membrane,
        as stored at step entry, is at or above theta_up and calcium lies
        in [ca1, ca3];
    depress (w-1, floored at w_min) when the membrane is below theta_up and
        calcium lies in [ca1, ca2];
    otherwise leave the weight alone (the stop-learning region).

Mapping bits are never touched by learning. Calcium tracks recent firing
(one up per spike, saturating; one down every ca_leak_period steps) so only
moderately active neurons keep learning.

The baseline network is built by teacher-assisted pretraining: each class
drives its designated output neuron with a constant extra current, which
steers potentiation onto that class's active input lines.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .crng import TAG_SHUFFLE, stream_for
from .memory import SynapticMemory, W_MAX
from .network import Dataset, NetworkConfig, NeuronPool


@dataclass
class SdspParams:
    theta_up: int = 32  # membrane comparison threshold
    ca1: int = 2  # calcium window bounds: ca1 <= ca2 <= ca3
    ca2: int = 6
    ca3: int = 10
    ca_max: int = 15
    ca_leak_period: int = 16  # steps between calcium decays
    w_min: int = 0
    w_max: int = W_MAX
    teacher_current: int = 32  # injected into the label's neuron in teacher mode
    enabled: bool = True  # global learning switch

    def __post_init__(self):
        if not self.ca1 <= self.ca2 <= self.ca3:
            raise ValueError("calcium window must satisfy ca1 <= ca2 <= ca3")
        if not 0 <= self.w_min <= self.w_max <= W_MAX:
            raise ValueError(f"weights must fit in [0, {W_MAX}]")


def sdsp_update(weight: int, mapping: int, v_post: int, ca: int,
                params: SdspParams) -> tuple[int, int]:
    """One update decision for a synapse receiving a presynaptic spike.

    Scalar reference for the rule the kernels apply inline; returns the
    (weight, mapping) pair after the decision.
    """
    if v_post >= params.theta_up and params.ca1 <= ca <= params.ca3:
        return min(weight + 1, params.w_max), mapping
    if v_post < params.theta_up and params.ca1 <= ca <= params.ca2:
        return max(weight - 1, params.w_min), mapping
    return weight, mapping


def learning_epoch(memory: SynapticMemory, neurons: NeuronPool, dataset: Dataset,
                   config: NetworkConfig, params: SdspParams,
                   mode: str = "unsupervised", seed: int = 0,
                   teacher_map: np.ndarray | None = None) -> None:
    """Stream every sample once with learning on, mutating the weights.

    In teacher mode the neuron designated for each sample's label receives
    ``teacher_current`` every step and plasticity is gated to that neuron,
    so each output learns only its own class; unsupervised mode injects
    nothing and every enabled neuron learns.
    """
    from . import kernels

    if mode not in ("unsupervised", "teacher"):
        raise ValueError(f"unknown learning mode {mode!r}")
    if len(dataset) == 0:
        raise ValueError("cannot run a learning epoch on an empty dataset")
    if not params.enabled:
        return
    if mode == "teacher" and teacher_map is None:
        teacher_map = default_teacher_map(neurons, int(np.max(dataset.labels)) + 1)
    for i in range(len(dataset)):
        teacher_neuron = -1
        if mode == "teacher":
            teacher_neuron = int(teacher_map[int(dataset.labels[i])])
        kernels.run_sample(
            memory.w, memory.m, neurons, dataset.pixels[i], seed,
            int(dataset.ids[i]), config, sdsp=params, teacher_neuron=teacher_neuron,
            learn_neuron=teacher_neuron,
        )


def default_teacher_map(neurons: NeuronPool, n_classes: int = 10) -> np.ndarray:
    """Class c drives the c-th enabled neuron."""
    if len(neurons.enabled_idx) < n_classes:
        raise ValueError("need at least one enabled neuron per class")
    return neurons.enabled_idx[:n_classes].astype(np.int64)


def assign_labels(memory: SynapticMemory, neurons: NeuronPool, dataset: Dataset,
                  config: NetworkConfig, seed: int,
                  n_classes: int | None = None) -> tuple[np.ndarray, list[int]]:
    """Map each enabled neuron to the class it spiked most for.

    Ties break to the lower class id. Neurons silent across the whole
    subset map to class 0 and are returned in the flagged list.
    """
    from . import kernels

    if n_classes is None:
        n_classes = int(np.max(dataset.labels)) + 1
    present = np.unique(np.asarray(dataset.labels))
    if len(present) < n_classes:
        raise ValueError(
            f"label subset covers {len(present)} of {n_classes} classes"
        )
    counts = np.zeros((neurons.n_post, n_classes), dtype=np.int64)
    for i in range(len(dataset)):
        kernels.run_sample(
            memory.w, memory.m, neurons, dataset.pixels[i], seed,
            int(dataset.ids[i]), config, sdsp=None,
        )
        counts[:, int(dataset.labels[i])] += neurons.spike_count
    label_map = np.full(neurons.n_post, -1, dtype=np.int16)
    flagged = []
    for j in neurons.enabled_idx:
        if counts[j].max() == 0:
            label_map[j] = 0
            flagged.append(int(j))
        else:
            label_map[j] = int(np.argmax(counts[j]))  # first max = lowest class
    return label_map, flagged


def pretrain(memory: SynapticMemory, neurons: NeuronPool, train: Dataset,
             config: NetworkConfig, params: SdspParams, passes: int = 3,
             seed: int = 0, n_classes: int | None = None) -> tuple[np.ndarray, list[int]]:
    """Teacher-assisted pretraining: ``passes`` shuffled passes over the
    training set, then label assignment on the same set."""
    for p in range(passes):
        order = list(range(len(train)))
        stream_for(seed, TAG_SHUFFLE, p).shuffle(order)
        learning_epoch(
            memory, neurons, train.subset(order), config, params,
            mode="teacher", seed=seed,
        )
    return assign_labels(memory, neurons, train, config, seed, n_classes)


def init_baseline_memory(config: NetworkConfig, neurons: NeuronPool) -> SynapticMemory:
    """Blank crossbar with all synapses onto enabled neurons mapped in."""
    mem = SynapticMemory(config.n_pre, config.n_post)
    mem.m[:, neurons.enabled_idx] = 1
    return mem
