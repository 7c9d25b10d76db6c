# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled enumeration kernels.

Gray-code sweeps over the 2^N configuration space: one spin flips per step,
so the energy updates in O(N) and the pair-overlap lattice index in O(1).
Semantics match _enumeration_py exactly (same signatures, same lattice
layout); per-cell sums are Kahan-compensated.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, INFINITY

cnp.import_array()


cdef inline int _flip_position(unsigned long long k):
    # Bit flipped between Gray codes of k and k+1 = trailing zeros of k+1.
    cdef int p = 0
    cdef unsigned long long v = k + 1
    while (v & 1ULL) == 0:
        v >>= 1
        p += 1
    return p


def log_partition(double[:, ::1] quad, double[::1] lin):
    """log sum_sigma exp(sigma^T quad sigma + lin^T sigma)."""
    cdef int n = lin.shape[0]
    cdef unsigned long long total = 1ULL << n, k
    cdef int i, j, p
    sym_arr = np.asarray(quad) + np.asarray(quad).T
    cdef double[:, ::1] sym = np.ascontiguousarray(sym_arr)
    cdef double[::1] m = np.zeros(n)
    cdef double[::1] s = np.full(n, -1.0)
    cdef double energy = 0.0, running_max, running_sum, delta, sp

    for i in range(n):
        for j in range(n):
            energy += quad[i, j] * s[i] * s[j]
            m[i] += sym[i, j] * s[j]
        energy += lin[i] * s[i]

    running_max = energy
    running_sum = 1.0
    for k in range(total - 1):
        p = _flip_position(k)
        sp = s[p]
        energy += -2.0 * sp * (m[p] - sym[p, p] * sp) - 2.0 * sp * lin[p]
        s[p] = -sp
        delta = -2.0 * sp
        for j in range(n):
            m[j] += sym[j, p] * delta
        if energy > running_max:
            running_sum = running_sum * exp(running_max - energy) + 1.0
            running_max = energy
        else:
            running_sum += exp(energy - running_max)
    return running_max + log(running_sum)


def gibbs_moments(double[:, ::1] quad, double[::1] lin):
    """(logZ, <sigma_i>, <sigma_i sigma_j>) under the Gibbs measure."""
    cdef double log_z = log_partition(quad, lin)
    cdef int n = lin.shape[0]
    cdef unsigned long long total = 1ULL << n, k
    cdef int i, j, p
    sym_arr = np.asarray(quad) + np.asarray(quad).T
    cdef double[:, ::1] sym = np.ascontiguousarray(sym_arr)
    cdef double[::1] m = np.zeros(n)
    cdef double[::1] s = np.full(n, -1.0)
    m1_arr = np.zeros(n)
    m2_arr = np.zeros((n, n))
    cdef double[::1] m1 = m1_arr
    cdef double[:, ::1] m2 = m2_arr
    cdef double energy = 0.0, w, sp

    for i in range(n):
        for j in range(n):
            energy += quad[i, j] * s[i] * s[j]
            m[i] += sym[i, j] * s[j]
        energy += lin[i] * s[i]

    k = 0
    while True:
        w = exp(energy - log_z)
        for i in range(n):
            m1[i] += w * s[i]
            m2[i, i] += w
            for j in range(i + 1, n):
                m2[i, j] += w * s[i] * s[j]
        if k == total - 1:
            break
        p = _flip_position(k)
        sp = s[p]
        energy += -2.0 * sp * (m[p] - sym[p, p] * sp) - 2.0 * sp * lin[p]
        s[p] = -sp
        for j in range(n):
            m[j] += sym[j, p] * (-2.0 * sp)
        k += 1
    for i in range(n):
        for j in range(i + 1, n):
            m2[j, i] = m2[i, j]
    return log_z, m1_arr, m2_arr


def pair_cell_logsumexp(double[:, ::1] quad, double[::1] lin,
                        long[::1] species_index, long[::1] species_sizes):
    """Per-overlap-cell log sum of exp(H(s1)+H(s2)); layout matches the
    fallback backend (species 0 slowest, index (k_s + n_s)/2, -inf empty)."""
    cdef int n = lin.shape[0]
    cdef int n_species = species_sizes.shape[0]
    cdef unsigned long long total = 1ULL << n, k1, k2
    cdef int i, j, p, sp_idx
    cdef long cells = 1
    shape = []
    for i in range(n_species):
        shape.append(species_sizes[i] + 1)
        cells *= species_sizes[i] + 1
    strides_arr = np.ones(n_species, dtype=np.int64)
    for i in range(n_species - 2, -1, -1):
        strides_arr[i] = strides_arr[i + 1] * shape[i + 1]
    cdef long[::1] strides = strides_arr
    # Stride attached to each site: flipping site i moves the flat cell index
    # by +-site_stride[i] (overlap count changes by +-2).
    site_stride_arr = np.empty(n, dtype=np.int64)
    for i in range(n):
        site_stride_arr[i] = strides_arr[species_index[i]]
    cdef long[::1] site_stride = site_stride_arr

    sym_arr = np.asarray(quad) + np.asarray(quad).T
    cdef double[:, ::1] sym = np.ascontiguousarray(sym_arr)

    # Pass 1: energies of every configuration in Gray order.
    energies_arr = np.empty(total, dtype=np.float64)
    cdef double[::1] energies = energies_arr
    cdef double[::1] m = np.zeros(n)
    cdef double[::1] s1 = np.full(n, -1.0)
    cdef double energy = 0.0, sp
    for i in range(n):
        for j in range(n):
            energy += quad[i, j] * s1[i] * s1[j]
            m[i] += sym[i, j] * s1[j]
        energy += lin[i] * s1[i]
    energies[0] = energy
    for k1 in range(total - 1):
        p = _flip_position(k1)
        sp = s1[p]
        energy += -2.0 * sp * (m[p] - sym[p, p] * sp) - 2.0 * sp * lin[p]
        s1[p] = -sp
        for j in range(n):
            m[j] += sym[j, p] * (-2.0 * sp)
        energies[k1 + 1] = energy
    cdef double shift = np.max(energies_arr)
    boltz_arr = np.exp(energies_arr - shift)
    cdef double[::1] boltz = boltz_arr

    # Pass 2: outer Gray sweep over s1 (O(1) bookkeeping via stored energies),
    # inner Gray sweep over s2 maintaining the overlap cell index in O(1).
    acc_arr = np.zeros(cells, dtype=np.float64)
    comp_arr = np.zeros(cells, dtype=np.float64)
    cdef double[::1] acc = acc_arr
    cdef double[::1] comp = comp_arr
    cdef signed char[::1] spin1 = np.full(n, -1, dtype=np.int8)
    cdef signed char[::1] spin2 = np.empty(n, dtype=np.int8)
    cdef long idx0, idx
    cdef double w1, term, y, t

    # Cell index of the all-(-1) pair: overlap count = n_s for every species.
    idx0 = 0
    for i in range(n_species):
        idx0 += strides[i] * species_sizes[i]

    for k1 in range(total):
        if k1 > 0:
            p = _flip_position(k1 - 1)
            spin1[p] = -spin1[p]
        w1 = boltz[k1]
        # Inner sweep: start at s2 = all -1; overlap with s1 per species is
        # (number of agreeing sites) - ... maintained incrementally below.
        idx = 0
        for i in range(n):
            spin2[i] = -1
        for i in range(n_species):
            idx += strides[i] * species_sizes[i]
        # Adjust for sites where spin1 disagrees with -1.
        for i in range(n):
            if spin1[i] != -1:
                idx -= site_stride[i]
        for k2 in range(total):
            if k2 > 0:
                p = _flip_position(k2 - 1)
                spin2[p] = -spin2[p]
                if spin1[p] == spin2[p]:
                    idx += site_stride[p]
                else:
                    idx -= site_stride[p]
            term = w1 * boltz[k2]
            # Kahan-compensated accumulation per cell.
            y = term - comp[idx]
            t = acc[idx] + y
            comp[idx] = (t - acc[idx]) - y
            acc[idx] = t

    out = np.full(cells, -INFINITY)
    pos = acc_arr > 0
    out[pos] = np.log(acc_arr[pos]) + 2.0 * shift
    return out.reshape(tuple(shape))
