"""Pure-numpy enumeration kernels (fallback backend).

Same contracts as the compiled extension: exact sums over all 2^N spin
configurations of H(sigma) = sigma^T quad sigma + lin^T sigma, blocked so no
array of size 2^N x 2^N is ever materialized.  The compiled backend is an
order of magnitude faster on the pair sweeps; results agree to rounding.
"""

from __future__ import annotations

import math

import numpy as np

_BLOCK_BITS = 14


def _spin_block(start: int, stop: int, n: int) -> np.ndarray:
    idx = np.arange(start, stop, dtype=np.uint64)
    bits = (idx[:, None] >> np.arange(n, dtype=np.uint64)[None, :]) & np.uint64(1)
    return 2.0 * bits.astype(np.float64) - 1.0


def _energies(spins: np.ndarray, quad: np.ndarray, lin: np.ndarray) -> np.ndarray:
    return ((spins @ quad) * spins).sum(axis=1) + spins @ lin


def log_partition(quad: np.ndarray, lin: np.ndarray) -> float:
    """log sum_sigma exp(sigma^T quad sigma + lin^T sigma)."""
    n = lin.size
    total = 1 << n
    block = min(total, 1 << _BLOCK_BITS)
    running_max = -math.inf
    running_sum = 0.0
    for start in range(0, total, block):
        e = _energies(_spin_block(start, min(start + block, total), n), quad, lin)
        m = float(e.max())
        if m > running_max:
            running_sum *= math.exp(running_max - m)
            running_max = m
        running_sum += float(np.exp(e - running_max).sum())
    return running_max + math.log(running_sum)


def gibbs_moments(quad: np.ndarray, lin: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """(logZ, <sigma_i>, <sigma_i sigma_j>) under the Gibbs measure."""
    n = lin.size
    total = 1 << n
    block = min(total, 1 << _BLOCK_BITS)
    log_z = log_partition(quad, lin)
    m1 = np.zeros(n)
    m2 = np.zeros((n, n))
    for start in range(0, total, block):
        spins = _spin_block(start, min(start + block, total), n)
        w = np.exp(_energies(spins, quad, lin) - log_z)
        m1 += w @ spins
        m2 += spins.T @ (w[:, None] * spins)
    return log_z, m1, m2


def pair_cell_logsumexp(
    quad: np.ndarray,
    lin: np.ndarray,
    species_index: np.ndarray,
    species_sizes: np.ndarray,
) -> np.ndarray:
    """Per-overlap-cell log sum of exp(H(s1) + H(s2)) over all configuration
    pairs, on the lattice of per-species overlap counts.

    Output shape is (n_0+1, ..., n_{S-1}+1); cell index (k_s + n_s)/2 holds
    the pairs with sum_{i in species s} s1_i s2_i = k_s.  Unreachable cells
    (wrong parity) hold -inf.  Inner sums are compensated so the relative
    error stays near rounding even with 4^N terms.
    """
    n = lin.size
    total = 1 << n
    sizes = np.asarray(species_sizes, dtype=int)
    shape = tuple(int(k) + 1 for k in sizes)
    cells = np.prod(shape)
    strides = np.ones(len(shape), dtype=np.int64)
    for s in range(len(shape) - 2, -1, -1):
        strides[s] = strides[s + 1] * shape[s + 1]

    spins = _spin_block(0, total, n)
    energies = _energies(spins, quad, lin)
    shift = float(energies.max())
    boltz = np.exp(energies - shift)

    # Per-species overlap counts of every pair, assembled row-block by
    # row-block; accumulation per chunk is short enough to keep naive
    # summation error below ~1e-11 relative.
    acc = np.zeros(cells, dtype=np.longdouble)
    chunk = 16
    species_cols = [np.nonzero(species_index == s)[0] for s in range(len(shape))]
    for start in range(0, total, chunk):
        stop = min(start + chunk, total)
        flat = np.zeros((stop - start, total), dtype=np.int64)
        for s, cols in enumerate(species_cols):
            counts = spins[start:stop, cols] @ spins[:, cols].T
            flat += strides[s] * ((counts.astype(np.int64) + sizes[s]) >> 1)
        w = boltz[start:stop, None] * boltz[None, :]
        acc += np.bincount(flat.ravel(), weights=w.ravel(), minlength=cells).astype(np.longdouble)

    out = np.full(cells, -np.inf)
    pos = acc > 0
    out[pos] = np.log(acc[pos].astype(np.float64)) + 2.0 * shift
    return out.reshape(shape)
