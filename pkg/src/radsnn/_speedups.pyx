# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: spike encoding and single-sample simulation.

Semantics are pinned to _kernels_py (and through it to network.step);
any change here must keep the two backends bit-identical.
"""

import numpy as np

from libc.stdint cimport int32_t, uint8_t, uint64_t

BACKEND = "compiled"


cdef inline uint64_t sm64(uint64_t x) noexcept nogil:
    x += <uint64_t>0x9E3779B97F4A7C15
    x = (x ^ (x >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    x = (x ^ (x >> 27)) * <uint64_t>0x94D049BB133111EB
    return x ^ (x >> 31)


def encode_bits_raw(const uint8_t[::1] pixels, uint64_t seed, uint64_t sample_id,
                    int t_steps, double scale, double r_max):
    """0/1 spike matrix of shape (t_steps, n_inputs)."""
    cdef int n = pixels.shape[0]
    out = np.zeros((t_steps, n), dtype=np.uint8)
    cdef uint8_t[:, ::1] o = out
    cdef uint64_t h = sm64(sm64(seed) ^ sample_id)
    cdef uint64_t b, u
    cdef int i, t
    cdef double thr
    cdef bint always
    with nogil:
        for i in range(n):
            b = sm64(h ^ <uint64_t>i)
            thr = <double>pixels[i] * scale
            always = <double>pixels[i] * r_max >= 255.0
            for t in range(t_steps):
                u = sm64(b ^ <uint64_t>t)
                if always or <double>(u >> 11) < thr:
                    o[t, i] = 1
    return out


def run_sample_raw(uint8_t[:, ::1] w, const uint8_t[:, ::1] m,
                   const int32_t[::1] enabled_idx,
                   int32_t[::1] v, int32_t[::1] ca, int32_t[::1] refrac,
                   int32_t[::1] spike_count,
                   const uint8_t[::1] pixels, uint64_t seed, uint64_t sample_id,
                   int t_steps, int theta_v, int leak_v, int refractory,
                   double scale, double r_max,
                   int learn, int theta_up, int ca1, int ca2, int ca3,
                   int ca_max, int ca_leak_period, int w_min, int w_max,
                   int teacher_neuron, int teacher_current, int learn_neuron):
    """Replay one sample, updating neuron state (and weights when learning)."""
    cdef int n_post = v.shape[0]
    cdef int n_en = enabled_idx.shape[0]
    cdef int n_in = pixels.shape[0]
    cdef int i, t, k, j, ii, nl, acc, vp, cap

    for j in range(n_post):
        v[j] = 0
        ca[j] = 0
        refrac[j] = 0
        spike_count[j] = 0

    spk_arr = encode_bits_raw(pixels, seed, sample_id, t_steps, scale, r_max)
    cdef const uint8_t[:, ::1] spk = spk_arr
    lines_arr = np.empty(n_in, dtype=np.int32)
    cdef int32_t[::1] lines = lines_arr
    in_ref_arr = np.empty(n_en, dtype=np.uint8)
    cdef uint8_t[::1] in_ref = in_ref_arr
    v_entry_arr = np.empty(n_en, dtype=np.int32)
    cdef int32_t[::1] v_entry = v_entry_arr

    with nogil:
        for t in range(t_steps):
            for k in range(n_en):
                in_ref[k] = 1 if refrac[enabled_idx[k]] > 0 else 0
                v_entry[k] = v[enabled_idx[k]]

            nl = 0
            for i in range(n_in):
                if spk[t, i]:
                    lines[nl] = i
                    nl += 1

            for k in range(n_en):
                j = enabled_idx[k]
                acc = 0
                for ii in range(nl):
                    i = lines[ii]
                    if m[i, j]:
                        acc += w[i, j]
                if j == teacher_neuron:
                    acc += teacher_current
                v[j] += acc

            if learn and nl > 0:
                for k in range(n_en):
                    if in_ref[k]:
                        continue
                    j = enabled_idx[k]
                    if learn_neuron >= 0 and j != learn_neuron:
                        continue
                    vp = v_entry[k]
                    cap = ca[j]
                    if ca1 <= cap <= ca3 and vp >= theta_up:
                        for ii in range(nl):
                            i = lines[ii]
                            if m[i, j] and w[i, j] < w_max:
                                w[i, j] = w[i, j] + 1
                    elif ca1 <= cap <= ca2 and vp < theta_up:
                        for ii in range(nl):
                            i = lines[ii]
                            if m[i, j] and w[i, j] > w_min:
                                w[i, j] = w[i, j] - 1

            for k in range(n_en):
                j = enabled_idx[k]
                v[j] = v[j] - leak_v
                if v[j] < 0:
                    v[j] = 0
                if in_ref[k]:
                    refrac[j] -= 1
                elif v[j] >= theta_v:
                    spike_count[j] += 1
                    v[j] = 0
                    if ca[j] < ca_max:
                        ca[j] += 1
                    refrac[j] = refractory

            if ca_leak_period > 0 and (t + 1) % ca_leak_period == 0:
                for k in range(n_en):
                    j = enabled_idx[k]
                    if ca[j] > 0:
                        ca[j] -= 1
