"""Finite-size exact-enumeration simulator of the interpolated Hamiltonian.

H(sigma) = sqrt(t)/sqrt(N) * sum_{ij} J_ij sigma_i sigma_j
         + sqrt(1-t) * sum_i (2 (Delta^2 Lambda q*)_{s(i)})^{1/2} z_i sigma_i
         + sum_i h_i sigma_i

with J, h, z drawn once per seed (counter-based generator, so instances are
bit-reproducible and the same Gaussians couple all t values).  The double sum
runs over all ordered pairs including the diagonal, exactly as the model is
defined.  Free energies, Gibbs overlap statistics, and the overlap-constrained
pair free energy are all exact enumerations, no sampling beyond the disorder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import enumeration
from .fixedpoint import solve_qstar
from .gauss import QuadratureSpec
from .model import SpeciesSystem

MAX_SITES = 24
MAX_PAIR_SITES_COMPILED = 16
MAX_PAIR_SITES_FALLBACK = 12
MAX_CONSTRAINED_SITES = 12


@dataclass(frozen=True)
class FiniteInstance:
    sys: SpeciesSystem
    sites_per_species: np.ndarray
    t: float
    seed: int
    species_index: np.ndarray  # site -> species
    couplings: np.ndarray  # J, already scaled to variance Delta^2_{s(i)s(j)}
    field: np.ndarray  # h, variance tau^2_{s(i)}
    cavity: np.ndarray  # z, standard
    q_star: np.ndarray
    lam_empirical: np.ndarray

    @property
    def n_sites(self) -> int:
        return self.species_index.size

    def quad_matrix(self) -> np.ndarray:
        """Coefficient matrix of the quadratic part at this t."""
        n = self.n_sites
        return math.sqrt(self.t) / math.sqrt(n) * self.couplings

    def linear_field(self) -> np.ndarray:
        """Combined site field: interpolation cavity term plus external field."""
        weight = np.sqrt(2.0 * np.clip(self.sys.interaction() @ self.q_star, 0.0, None))
        return math.sqrt(1.0 - self.t) * weight[self.species_index] * self.cavity + self.field

    def hamiltonian(self, spins: np.ndarray) -> float:
        spins = np.asarray(spins, dtype=float)
        return float(spins @ self.quad_matrix() @ spins + self.linear_field() @ spins)


def derived_seed(base_seed: int, sample: int) -> int:
    """Stable per-sample seed for embarrassingly parallel disorder averages."""
    return (int(base_seed) << 20) + int(sample)


def overlap_vector(inst: FiniteInstance, spins_a, spins_b) -> np.ndarray:
    """Per-species normalized inner product of two configurations."""
    prod = np.asarray(spins_a, dtype=float) * np.asarray(spins_b, dtype=float)
    return np.array(
        [prod[inst.species_index == s].sum() / n for s, n in enumerate(inst.sites_per_species)]
    )


def sample_instance(
    sys: SpeciesSystem,
    sites_per_species,
    t: float,
    seed: int,
    spec: QuadratureSpec | None = None,
    q_star: np.ndarray | None = None,
) -> FiniteInstance:
    """Draw one disorder realization.  Deterministic given the seed."""
    sites = np.asarray(sites_per_species, dtype=int)
    if sites.size != sys.species_count:
        raise ValueError("sites_per_species length does not match species count")
    if np.any(sites <= 0):
        raise ValueError("every species needs at least one site")
    n = int(sites.sum())
    if n > MAX_SITES:
        raise ValueError(f"exact enumeration capped at {MAX_SITES} sites, got {n}")
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    if q_star is None:
        q_star = solve_qstar(sys, spec or QuadratureSpec()).q_star

    species_index = np.repeat(np.arange(sys.species_count), sites)
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    coupling_std = np.sqrt(sys.delta2)[np.ix_(species_index, species_index)]
    couplings = rng.standard_normal((n, n)) * coupling_std
    field = rng.standard_normal(n) * np.sqrt(sys.tau2)[species_index]
    cavity = rng.standard_normal(n)
    return FiniteInstance(
        sys=sys,
        sites_per_species=sites,
        t=float(t),
        seed=int(seed),
        species_index=species_index,
        couplings=couplings,
        field=field,
        cavity=cavity,
        q_star=np.asarray(q_star, dtype=float),
        lam_empirical=sites / n,
    )


def exact_free_energy(inst: FiniteInstance) -> float:
    """F_N = (1/N) log sum_sigma exp H(sigma), by full enumeration."""
    log_z = enumeration.log_partition(
        np.ascontiguousarray(inst.quad_matrix()), np.ascontiguousarray(inst.linear_field())
    )
    return log_z / inst.n_sites


def free_energy_t_derivative(
    sys: SpeciesSystem,
    sites_per_species,
    t: float,
    seed: int,
    step: float = 1e-3,
    spec: QuadratureSpec | None = None,
    q_star: np.ndarray | None = None,
) -> float:
    """Central difference of F_N in t at fixed disorder (shared Gaussians)."""
    if not step < t < 1.0 - step:
        raise ValueError("need t in (step, 1-step) for the central difference")
    lo = sample_instance(sys, sites_per_species, t - step, seed, spec=spec, q_star=q_star)
    hi = sample_instance(sys, sites_per_species, t + step, seed, spec=spec, q_star=q_star)
    return (exact_free_energy(hi) - exact_free_energy(lo)) / (2.0 * step)


@dataclass(frozen=True)
class OverlapStatistics:
    mean_overlap: np.ndarray  # <R_s>
    overlap_second_moment: np.ndarray  # <R_s R_t>
    gibbs_b_displacement: float  # <B_N(R - q*)> with empirical ratios
    log_z: float
    pair_log_cells: np.ndarray | None  # full pair law when small enough
    overlap_values: list[np.ndarray] | None

    def pair_pmf(self) -> np.ndarray | None:
        if self.pair_log_cells is None:
            return None
        return np.exp(self.pair_log_cells - 2.0 * self.log_z)


def overlap_statistics(inst: FiniteInstance, want_pair_law: bool | None = None) -> OverlapStatistics:
    """Exact two-replica overlap statistics under the product Gibbs measure.

    Moments come from single-replica marginals (<s_i s_j>^2 tensorization);
    the full lattice law additionally enumerates pairs and is only attempted
    below the pair-size cap of the active backend.
    """
    n = inst.n_sites
    quad = np.ascontiguousarray(inst.quad_matrix())
    lin = np.ascontiguousarray(inst.linear_field())
    log_z, m1, m2 = enumeration.gibbs_moments(quad, lin)

    n_species = inst.sys.species_count
    sizes = inst.sites_per_species
    mean_r = np.empty(n_species)
    second = np.empty((n_species, n_species))
    for s in range(n_species):
        mask_s = inst.species_index == s
        mean_r[s] = float(np.sum(np.square(m1[mask_s]))) / sizes[s]
        for t in range(n_species):
            mask_t = inst.species_index == t
            block = m2[np.ix_(mask_s, mask_t)]
            second[s, t] = float(np.sum(np.square(block))) / (sizes[s] * sizes[t])

    lam_n = inst.lam_empirical
    kernel = lam_n[:, None] * inst.sys.delta2 * lam_n[None, :]
    qs = inst.q_star
    displacement = float(
        np.sum(kernel * (second - np.outer(mean_r, qs) - np.outer(qs, mean_r) + np.outer(qs, qs)))
    )

    cap = MAX_PAIR_SITES_COMPILED if enumeration.COMPILED else MAX_PAIR_SITES_FALLBACK
    if want_pair_law is None:
        want_pair_law = n <= cap
    cells = None
    values = None
    if want_pair_law:
        if n > cap:
            raise ValueError(f"pair law capped at {cap} sites for the {enumeration.backend_name()} backend")
        cells = enumeration.pair_cell_logsumexp(
            quad, lin, inst.species_index.astype(np.int64), sizes.astype(np.int64)
        )
        values = [np.arange(-k, k + 1, 2) / k for k in sizes]
    return OverlapStatistics(
        mean_overlap=mean_r,
        overlap_second_moment=second,
        gibbs_b_displacement=displacement,
        log_z=log_z,
        pair_log_cells=cells,
        overlap_values=values,
    )


def constrained_psi_cells(inst: FiniteInstance) -> np.ndarray:
    """(1/N) log sum_{pairs at fixed overlap} exp(H(s1)+H(s2)) for every
    lattice cell at once; empty cells are -inf."""
    if inst.n_sites > MAX_CONSTRAINED_SITES:
        raise ValueError(f"constrained pair enumeration capped at {MAX_CONSTRAINED_SITES} sites")
    cells = enumeration.pair_cell_logsumexp(
        np.ascontiguousarray(inst.quad_matrix()),
        np.ascontiguousarray(inst.linear_field()),
        inst.species_index.astype(np.int64),
        inst.sites_per_species.astype(np.int64),
    )
    return cells / inst.n_sites


def constrained_psi(inst: FiniteInstance, u) -> float:
    """Per-sample constrained pair free energy at an exact lattice overlap u.

    u_s must equal k_s / n_s with k_s an integer of the same parity as n_s;
    anything else has an empty constraint set and raises.
    """
    u = np.asarray(u, dtype=float)
    sizes = inst.sites_per_species
    counts = u * sizes
    rounded = np.rint(counts)
    if np.max(np.abs(counts - rounded)) > 1e-9:
        raise ValueError("overlap is not on the lattice of this site partition")
    rounded = rounded.astype(int)
    if np.any((rounded + sizes) % 2 != 0):
        raise ValueError("overlap has the wrong parity for this site partition")
    idx = tuple((rounded + sizes) // 2)
    value = constrained_psi_cells(inst)[idx]
    if not np.isfinite(value):
        raise ValueError("empty constraint set at the requested overlap")
    return float(value)
