"""Kernel backend selection: compiled extension when present, numpy otherwise.

Set RADSNN_KERNEL=python or RADSNN_KERNEL=compiled to force a backend
(compiled raises if the extension is missing). Both backends implement the
same raw API and produce bit-identical results.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

_FORCE = os.environ.get("RADSNN_KERNEL", "auto")

if _FORCE == "python":
    _impl = _kernels_py
elif _FORCE == "compiled":
    from . import _speedups as _impl  # noqa: F401
else:
    try:
        from . import _speedups as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = _impl.BACKEND


def get_backend(name: str):
    """Raw kernel module by name ('python' or 'compiled'); for benchmarks."""
    if name == "python":
        return _kernels_py
    if name == "compiled":
        from . import _speedups

        return _speedups
    raise ValueError(f"unknown backend {name!r}")


def available_backends() -> list[str]:
    names = ["python"]
    try:
        from . import _speedups  # noqa: F401

        names.append("compiled")
    except ImportError:
        pass
    return names


def encode_bits(pixels: np.ndarray, seed: int, sample_id: int, t_steps: int,
                scale: float, r_max: float) -> np.ndarray:
    """Spike raster (t_steps, n_inputs) of 0/1 for one sample."""
    pixels = np.ascontiguousarray(pixels, dtype=np.uint8)
    return _impl.encode_bits_raw(pixels, seed, sample_id, t_steps, scale, r_max)


def run_sample(w: np.ndarray, m: np.ndarray, neurons, pixels: np.ndarray,
               seed: int, sample_id: int, config, sdsp=None,
               teacher_neuron: int = -1, learn_neuron: int = -1) -> None:
    """Reset per-sample state and replay one sample through the network.

    ``sdsp=None`` runs pure inference (weights untouched); passing params
    with ``enabled=True`` applies the plasticity rule, and a non-negative
    ``teacher_neuron`` receives ``teacher_current`` every step. A
    non-negative ``learn_neuron`` restricts weight updates to that neuron.
    """
    if sdsp is None or not sdsp.enabled:
        learn = 0
        theta_up = ca1 = ca2 = ca3 = 0
        ca_max, ca_leak, w_min, w_max = 15, 0, 0, 7
        teacher_neuron, teacher_current = -1, 0
    else:
        learn = 1
        theta_up, ca1, ca2, ca3 = sdsp.theta_up, sdsp.ca1, sdsp.ca2, sdsp.ca3
        ca_max, ca_leak = sdsp.ca_max, sdsp.ca_leak_period
        w_min, w_max = sdsp.w_min, sdsp.w_max
        teacher_current = sdsp.teacher_current if teacher_neuron >= 0 else 0
    _impl.run_sample_raw(
        w, m, neurons.enabled_idx,
        neurons.v, neurons.ca, neurons.refrac, neurons.spike_count,
        np.ascontiguousarray(pixels, dtype=np.uint8), seed, sample_id,
        config.t_steps, config.theta_v, config.leak_v, config.refractory,
        config.encode_scale, config.r_max,
        learn, theta_up, ca1, ca2, ca3, ca_max, ca_leak, w_min, w_max,
        teacher_neuron, teacher_current, learn_neuron,
    )
