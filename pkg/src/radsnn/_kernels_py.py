"""Pure-numpy hot kernels: spike encoding and single-sample simulation.

Fallback for environments without the compiled extension. Must stay
bit-identical to both the reference dynamics in ``network.step`` and the
compiled kernel; ``tests/test_kernels.py`` enforces this.
"""

from __future__ import annotations

import numpy as np

from .crng import splitmix64

_G = np.uint64(0x9E3779B97F4A7C15)
_C1 = np.uint64(0xBF58476D1CE4E5B9)
_C2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)

BACKEND = "python"


def _sm64(x: np.ndarray) -> np.ndarray:
    x = x + _G
    x = (x ^ (x >> _S30)) * _C1
    x = (x ^ (x >> _S27)) * _C2
    return x ^ (x >> _S31)


def encode_bits_raw(pixels: np.ndarray, seed: int, sample_id: int,
                    t_steps: int, scale: float, r_max: float) -> np.ndarray:
    """0/1 spike matrix of shape (t_steps, n_inputs)."""
    n = pixels.shape[0]
    h = np.uint64(splitmix64(splitmix64(seed) ^ sample_id))
    with np.errstate(over="ignore"):
        per_line = _sm64(h ^ np.arange(n, dtype=np.uint64))
        draws = _sm64(per_line[None, :] ^ np.arange(t_steps, dtype=np.uint64)[:, None])
    u53 = (draws >> _S11).astype(np.float64)
    pix = pixels.astype(np.float64)
    spikes = (u53 < pix[None, :] * scale) | (pix[None, :] * r_max >= 255.0)
    return spikes.astype(np.uint8)


def run_sample_raw(
    w: np.ndarray, m: np.ndarray, enabled_idx: np.ndarray,
    v: np.ndarray, ca: np.ndarray, refrac: np.ndarray, spike_count: np.ndarray,
    pixels: np.ndarray, seed: int, sample_id: int,
    t_steps: int, theta_v: int, leak_v: int, refractory: int,
    scale: float, r_max: float,
    learn: int, theta_up: int, ca1: int, ca2: int, ca3: int,
    ca_max: int, ca_leak_period: int, w_min: int, w_max: int,
    teacher_neuron: int, teacher_current: int, learn_neuron: int,
) -> None:
    """Replay one sample, updating neuron state (and weights when learning)."""
    v[:] = 0
    ca[:] = 0
    refrac[:] = 0
    spike_count[:] = 0
    spk = encode_bits_raw(pixels, seed, sample_id, t_steps, scale, r_max)
    en = enabled_idx

    for t in range(t_steps):
        in_ref = refrac[en] > 0
        act = en[~in_ref]
        lines = np.flatnonzero(spk[t])

        learn_to = act
        if learn_neuron >= 0:
            learn_to = act[act == learn_neuron]
        learn_now = learn and lines.size and learn_to.size
        if learn_now:
            v_entry = v[learn_to].copy()  # step-entry membrane, for the learning rule
        if lines.size:
            idx = np.ix_(lines, en)
            v[en] += (w[idx] * m[idx]).sum(axis=0, dtype=np.int32)
        if teacher_neuron >= 0 and teacher_current:
            v[teacher_neuron] += teacher_current

        if learn_now:
            idx = np.ix_(lines, learn_to)
            cap = ca[learn_to]
            in_window = cap >= ca1
            pot = (v_entry >= theta_up) & in_window & (cap <= ca3)
            dep = (v_entry < theta_up) & in_window & (cap <= ca2)
            dw = pot.astype(np.int16) - dep.astype(np.int16)
            if dw.any():
                new_w = w[idx].astype(np.int16) + m[idx] * dw[None, :]
                np.clip(new_w, w_min, w_max, out=new_w)
                w[idx] = new_w.astype(np.uint8)

        v[en] = np.maximum(v[en] - leak_v, 0)

        fired = act[v[act] >= theta_v]
        if fired.size:
            spike_count[fired] += 1
            v[fired] = 0
            ca[fired] = np.minimum(ca[fired] + 1, ca_max)
            refrac[fired] = refractory

        cooling = en[in_ref]
        if cooling.size:
            refrac[cooling] -= 1

        if ca_leak_period > 0 and (t + 1) % ca_leak_period == 0:
            ca[en] = np.maximum(ca[en] - 1, 0)
