"""Event-driven network state and inference.

Integer LIF dynamics over the 4-bit synaptic crossbar. One sample is
replayed for a fixed number of time steps; within each step the update
order is pinned so the pure-Python reference below, the numpy kernel, and
the compiled kernel stay bit-identical:

    1. snapshot which enabled neurons are refractory, and their membranes
    2. every enabled neuron accumulates mapped weights from this step's
       input spikes (teacher current, when configured, adds here);
       refractory neurons keep integrating, they just cannot fire or learn
    3. weight updates fire (learning mode only; see plasticity module) on
       non-refractory neurons, using the stored step-entry membrane and the
       pre-fire calcium
    4. leak, floored at zero
    5. any non-refractory neuron at or above threshold spikes: count,
       reset, calcium up (saturating), refractory starts
    6. neurons refractory at step entry count down
    7. on every ca_leak_period-th step, calcium decays by one

Spike encoding is rate coding: input i fires at step t when a SplitMix64
draw keyed by (seed, sample_id, i, t) falls below pixel_i / 255 * r_max.
Draws compare the top 53 bits of the u64 against pixel * scale where
scale = r_max * 2**53 / 255, so both kernels agree to the bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import crng

NO_DECISION = -1


@dataclass
class NetworkConfig:
    n_pre: int = 256
    n_post: int = 256
    n_inputs: int = 256  # 16x16 downscaled image
    n_outputs: int = 10  # enabled neuron count
    theta_v: int = 64  # firing threshold
    leak_v: int = 1  # membrane leak per step
    refractory: int = 2  # steps a neuron ignores input after firing
    t_steps: int = 64  # time steps per sample
    r_max: float = 0.5  # peak per-step spike probability
    label_map: np.ndarray | None = None  # int16 [n_post], -1 = unmapped

    def __post_init__(self):
        if self.n_outputs > self.n_post:
            raise ValueError("cannot enable more outputs than post neurons")
        if self.n_inputs > self.n_pre:
            raise ValueError("cannot have more input lines than pre lines")

    @property
    def encode_scale(self) -> float:
        return self.r_max * 9007199254740992.0 / 255.0  # r_max * 2**53 / 255


class NeuronPool:
    """Per-neuron LIF state arrays; disabled neurons never change."""

    def __init__(self, n_post: int, enabled: np.ndarray | int):
        self.n_post = n_post
        mask = np.zeros(n_post, dtype=bool)
        if isinstance(enabled, (int, np.integer)):
            mask[: int(enabled)] = True
        else:
            mask[np.asarray(enabled, dtype=np.int64)] = True
        self.enabled = mask
        self.enabled_idx = np.flatnonzero(mask).astype(np.int32)
        self.v = np.zeros(n_post, dtype=np.int32)
        self.ca = np.zeros(n_post, dtype=np.int32)
        self.refrac = np.zeros(n_post, dtype=np.int32)
        self.spike_count = np.zeros(n_post, dtype=np.int32)

    @classmethod
    def for_config(cls, config: NetworkConfig) -> "NeuronPool":
        return cls(config.n_post, config.n_outputs)

    def reset_sample_state(self) -> None:
        self.v[:] = 0
        self.ca[:] = 0
        self.refrac[:] = 0
        self.spike_count[:] = 0


# -- dataset ingestion ---------------------------------------------------------


def downscale(image: np.ndarray) -> np.ndarray:
    """28x28 -> 16x16 by 2x2 block averaging over the centered zero-padded
    32x32 frame (floor division)."""
    if image.shape != (28, 28):
        raise ValueError(f"expected 28x28 image, got {image.shape}")
    return downscale_batch(image[None])[0]


def downscale_batch(images: np.ndarray) -> np.ndarray:
    """Vectorized downscale of (n, 28, 28) to (n, 256)."""
    n = images.shape[0]
    frame = np.zeros((n, 32, 32), dtype=np.uint16)
    frame[:, 2:30, 2:30] = images
    blocks = frame.reshape(n, 16, 2, 16, 2).sum(axis=(2, 4)) // 4
    return blocks.astype(np.uint8).reshape(n, 256)


@dataclass
class Dataset:
    """Downscaled samples with stable per-sample encoding ids."""

    pixels: np.ndarray  # (n, n_inputs) uint8
    labels: np.ndarray  # (n,) int16
    ids: np.ndarray  # (n,) uint64, keys the encoding draws
    name: str = "dataset"

    @classmethod
    def from_images(cls, images: np.ndarray, labels: np.ndarray, name: str = "dataset") -> "Dataset":
        pixels = downscale_batch(np.asarray(images))
        return cls(
            pixels=pixels,
            labels=np.asarray(labels, dtype=np.int16),
            ids=np.arange(len(labels), dtype=np.uint64),
            name=name,
        )

    def subset(self, indices: np.ndarray | list | slice, name: str | None = None) -> "Dataset":
        return Dataset(
            self.pixels[indices], self.labels[indices], self.ids[indices],
            name or self.name,
        )

    def __len__(self) -> int:
        return len(self.labels)


@dataclass
class EncodedSample:
    """Per-step input spike lines for one sample."""

    steps: list  # list of int arrays, one per time step
    label: int


def encode_sample(image: np.ndarray, config: NetworkConfig, seed: int,
                  sample_id: int = 0, label: int = -1) -> EncodedSample:
    """Downscale and rate-code one 28x28 image."""
    from . import kernels

    pixels = downscale(image)
    bits = kernels.encode_bits(
        pixels, seed, sample_id, config.t_steps, config.encode_scale, config.r_max
    )
    return EncodedSample([np.flatnonzero(row) for row in bits], label)


# -- reference dynamics --------------------------------------------------------


def step(memory, neurons: NeuronPool, input_lines, config: NetworkConfig,
         step_index: int = 0, sdsp=None, teacher_neuron: int = -1,
         learn_neuron: int = -1) -> np.ndarray:
    """One time step of the reference dynamics. Returns fired neuron indices.

    ``learn_neuron`` >= 0 restricts weight updates to that neuron (teacher
    mode gates plasticity to the driven neuron); -1 lets every enabled
    neuron learn.

    This is the readable specification of the update order; the kernels
    reimplement it for speed and are pinned to it by tests.
    """
    en = neurons.enabled_idx
    in_ref = neurons.refrac[en] > 0
    active = en[~in_ref]
    v_entry = neurons.v.copy()

    lines = np.asarray(input_lines, dtype=np.int64)
    for j in en:
        acc = 0
        for i in lines:
            if memory.m[i, j]:
                acc += int(memory.w[i, j])
        if j == teacher_neuron and sdsp is not None and sdsp.teacher_current:
            acc += sdsp.teacher_current
        neurons.v[j] += acc

    if sdsp is not None and sdsp.enabled:
        for j in active:
            if learn_neuron >= 0 and j != learn_neuron:
                continue
            vp, cap = int(v_entry[j]), int(neurons.ca[j])
            for i in lines:
                if not memory.m[i, j]:
                    continue
                w = int(memory.w[i, j])
                if vp >= sdsp.theta_up and sdsp.ca1 <= cap <= sdsp.ca3:
                    memory.w[i, j] = min(w + 1, sdsp.w_max)
                elif vp < sdsp.theta_up and sdsp.ca1 <= cap <= sdsp.ca2:
                    memory.w[i, j] = max(w - 1, sdsp.w_min)

    neurons.v[en] = np.maximum(neurons.v[en] - config.leak_v, 0)

    fired = active[neurons.v[active] >= config.theta_v]
    neurons.spike_count[fired] += 1
    neurons.v[fired] = 0
    ca_max = sdsp.ca_max if sdsp is not None else 15
    neurons.ca[fired] = np.minimum(neurons.ca[fired] + 1, ca_max)
    neurons.refrac[fired] = config.refractory

    neurons.refrac[en[in_ref]] -= 1

    ca_leak = sdsp.ca_leak_period if sdsp is not None else 0
    if ca_leak > 0 and (step_index + 1) % ca_leak == 0:
        neurons.ca[en] = np.maximum(neurons.ca[en] - 1, 0)
    return fired


# -- inference -----------------------------------------------------------------


def classify_counts(counts: np.ndarray, enabled_idx: np.ndarray,
                    label_map: np.ndarray) -> int:
    """Argmax over enabled spike counts; ties break to the lowest neuron
    index; all-zero counts yield NO_DECISION."""
    en_counts = counts[enabled_idx]
    best = int(en_counts.max()) if en_counts.size else 0
    if best == 0:
        return NO_DECISION
    winner = int(enabled_idx[int(np.argmax(en_counts))])
    return int(label_map[winner])


def infer(memory, neurons: NeuronPool, dataset: Dataset, index: int,
          config: NetworkConfig, seed: int) -> int:
    """Classify one sample; resets per-sample state, mutates no weights."""
    from . import kernels

    if config.label_map is None:
        raise ValueError("label_map not set; run assign_labels or pretrain first")
    kernels.run_sample(
        memory.w, memory.m, neurons, dataset.pixels[index], seed,
        int(dataset.ids[index]), config, sdsp=None,
    )
    return classify_counts(neurons.spike_count, neurons.enabled_idx, config.label_map)


def evaluate(memory, neurons: NeuronPool, dataset: Dataset,
             config: NetworkConfig, seed: int) -> float:
    """Classification accuracy over a dataset; no-decision counts as wrong."""
    if len(dataset) == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    correct = 0
    for i in range(len(dataset)):
        if infer(memory, neurons, dataset, i, config, seed) == int(dataset.labels[i]):
            correct += 1
    return correct / len(dataset)
