"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line
with its wall time (run with -s to see them live).  Tolerances and runtime
budgets are pinned here, not configurable."""

import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from conftest import consistency_system, random_system, system_with_rho
from mskphase.fixedpoint import FixedPointKind, solve_qstar
from mskphase.gauss import QuadratureSpec
from mskphase.model import bilinear_B, spectral_radius, validate_system
from mskphase.parisi import (
    DiscreteOrderedMeasure,
    MinimizeOptions,
    dirac_measure,
    minimize_rsb,
    parisi_gradient_q,
    parisi_value,
    support_diagnostics,
    w1_ordered,
)
from mskphase.rs_at import Phase, gamma_and_at, interpolate_profile, rs_value
from mskphase.gtbound import GTParams, gt_upper_bound
from mskphase.finite_n import (
    derived_seed,
    exact_free_energy,
    free_energy_t_derivative,
    overlap_statistics,
    sample_instance,
)
from mskphase.sweep import config_from_dict, trace_at_surface

SPEC = QuadratureSpec()


@contextmanager
def criterion(name: str, budget_seconds: float):
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {name}: FAIL ({time.perf_counter() - start:.1f}s)")
        raise
    elapsed = time.perf_counter() - start
    print(f"ACCEPTANCE {name}: PASS ({elapsed:.1f}s, budget {budget_seconds:.0f}s)")
    assert elapsed < budget_seconds


def test_single_species_at_point():
    with criterion("single-species AT point", 1.0):
        cfg = config_from_dict(
            {
                "system": {"lambda": [1.0], "delta2": [[0.0]], "tau2": [0.0]},
                "axes": {
                    "axis1": {
                        "kind": "delta2_affine",
                        "range": [0.1, 1.0],
                        "count": 10,
                        "direction": [[1.0]],
                    }
                },
                "quadrature": {"nodes": 40},
            }
        )
        trace = trace_at_surface(cfg, tol=1e-8)
        assert trace.crossed
        assert trace.bracket_hi - trace.bracket_lo <= 1e-8
        assert trace.bracket_lo <= 0.5 <= trace.bracket_hi
        # inside and at the surface: zero fixed point and identity criterion
        # matrix hold exactly, so the classifier value is exact there
        for d2 in (0.3, 0.5):
            report = gamma_and_at(validate_system([1.0], [[d2]], [0.0]), SPEC)
            assert np.all(report.q_star == 0.0)
            assert np.all(report.gamma_diag == 1.0)
            assert report.rho == d2
            assert report.phase is Phase.RS
        assert gamma_and_at(validate_system([1.0], [[0.6]], [0.0]), SPEC).phase is Phase.RSB


def test_fixed_point_dichotomy():
    with criterion("fixed-point dichotomy", 30.0):
        rng = np.random.default_rng(101)
        for _ in range(100):
            sys = random_system(rng, species=int(rng.integers(2, 4)))
            report = solve_qstar(sys, SPEC, tol=1e-12)
            assert report.classification is FixedPointKind.UNIQUE_INTERIOR
            assert np.max(np.abs(report.q_star - report.q_min)) < 1e-9
        for _ in range(20):
            sys = random_system(rng, species=int(rng.integers(2, 4)), zero_field=True)
            target = rng.uniform(0.55, 1.4)
            scale = target / spectral_radius(sys.interaction())
            sys = validate_system(sys.lam, scale * sys.delta2, sys.tau2)
            report = solve_qstar(sys, SPEC, tol=1e-12)
            assert report.classification is FixedPointKind.ZERO_AND_INTERIOR
            assert np.all(report.q_star > 0.0)


def test_two_level_coincides_with_rs():
    with criterion("two-level/RS coincidence", 30.0):
        rng = np.random.default_rng(102)
        hi = QuadratureSpec(nodes=80)
        for _ in range(50):
            sys = consistency_system(rng)
            q1 = rng.uniform(0.0, 1.0, sys.species_count)
            gap = abs(parisi_value(sys, dirac_measure(q1), hi).value - rs_value(sys, q1, hi))
            assert gap < 1e-10


def test_gradient_fidelity():
    with criterion("gradient fidelity", 120.0):
        rng = np.random.default_rng(103)
        step = 1e-4
        for _ in range(20):
            sys = consistency_system(rng, species=2)
            lo = rng.uniform(0.1, 0.45, 2)
            hi_q = lo + rng.uniform(0.15, 0.45, 2)
            mu = DiscreteOrderedMeasure(
                zeta=np.array([0.0, rng.uniform(0.25, 0.75), 1.0]),
                q=np.vstack([lo, np.clip(hi_q, 0, 1)]),
            )
            grad = parisi_gradient_q(sys, mu, SPEC)
            for l in range(2):
                for sp in range(2):
                    qp, qm = mu.q.copy(), mu.q.copy()
                    qp[l, sp] += step
                    qm[l, sp] -= step
                    vp = parisi_value(sys, DiscreteOrderedMeasure(zeta=mu.zeta, q=qp), SPEC).value
                    vm = parisi_value(sys, DiscreteOrderedMeasure(zeta=mu.zeta, q=qm), SPEC).value
                    fd = (vp - vm) / (2 * step)
                    assert abs(grad[l, sp] - fd) < 1e-4 * (abs(fd) + abs(grad[l, sp]) + 1e-6)


def _random_ordered_measure(rng, levels, species):
    if levels == 1:
        return DiscreteOrderedMeasure(zeta=rng.uniform(0.1, 0.9, 1), q=np.empty((0, species)))
    zeta = np.sort(rng.uniform(0.02, 0.98, levels))
    while np.min(np.diff(zeta)) < 5e-3:
        zeta = np.sort(rng.uniform(0.02, 0.98, levels))
    return DiscreteOrderedMeasure(zeta=zeta, q=np.sort(rng.uniform(0, 1, (levels - 1, species)), axis=0))


def test_lipschitz_suite():
    with criterion("Lipschitz suite", 120.0):
        rng = np.random.default_rng(104)
        sys = consistency_system(rng, species=2)
        constant = np.max(np.abs(sys.quadratic_kernel()))
        for _ in range(200):
            mu1 = _random_ordered_measure(rng, int(rng.integers(2, 4)), 2)
            mu2 = _random_ordered_measure(rng, int(rng.integers(2, 4)), 2)
            gap = abs(parisi_value(sys, mu1, SPEC).value - parisi_value(sys, mu2, SPEC).value)
            assert gap <= constant * w1_ordered(mu1, mu2) + 1e-8
        for _ in range(200):
            lam1 = rng.uniform(0.25, 0.75, 2)
            lam1 /= lam1.sum()
            lam2 = np.clip(lam1 + rng.uniform(-0.08, 0.08, 2), 0.1, None)
            lam2 /= lam2.sum()
            raw = rng.uniform(0.05, 0.4, (2, 2))
            d2a = 0.5 * (raw + raw.T)
            pert = rng.uniform(-0.08, 0.08, (2, 2))
            d2b = np.clip(d2a + 0.5 * (pert + pert.T), 0.0, None)
            t2a = rng.uniform(0.0, 0.35, 2)
            t2b = np.clip(t2a + rng.uniform(-0.08, 0.08, 2), 0.0, None)
            s1 = validate_system(lam1, d2a, t2a)
            s2 = validate_system(lam2, d2b, t2b)
            mu = _random_ordered_measure(rng, int(rng.integers(2, 4)), 2)
            gap = abs(parisi_value(s1, mu, SPEC).value - parisi_value(s2, mu, SPEC).value)
            lam_gap = np.abs(s1.lam - s2.lam).sum()
            bound = (
                np.max(0.5 * s1.tau2 + s1.interaction() @ np.ones(2)) * lam_gap
                + 0.5 * np.max(np.abs(s1.tau2 - s2.tau2))
                + np.max(np.abs(s1.delta2 - s2.delta2).sum(axis=1))
                + np.max(np.maximum(s1.delta2, s2.delta2)) * lam_gap
                + 0.5 * np.abs(s1.quadratic_kernel() - s2.quadratic_kernel()).sum()
            )
            assert gap <= bound + 1e-8


def test_gt_specializations():
    with criterion("GT specializations", 120.0):
        rng = np.random.default_rng(105)
        gt_spec = QuadratureSpec(nodes=48)
        ones = np.ones(2)
        for _ in range(5):
            sys = consistency_system(rng, species=2)
            fp = solve_qstar(sys, gt_spec, tol=1e-12)
            q_star = fp.q_star
            two_rs = 2.0 * rs_value(sys, q_star, gt_spec)
            # analytic limit of the exponent: equality with twice the
            # symmetric minimum for any correlations and admissible lower leg
            c = rng.uniform(-1, 1, 2)
            c_prime = rng.uniform(-1, 1, 2)
            q1 = q_star * rng.uniform(0, 1)
            p0 = GTParams(c=c, c_prime=c_prime, q1=q1, q2=q_star, m=0.0, b=np.zeros(2))
            assert abs(gt_upper_bound(sys, p0, gt_spec) - two_rs) < 1e-8
            # half exponent with fully correlated replicas never exceeds it
            for _ in range(20):
                q2 = np.clip(q_star + rng.uniform(0, 1, 2) * (1 - q_star), 0, 1)
                ph = GTParams(c=ones, c_prime=ones, q1=q_star, q2=q2, m=0.5, b=np.zeros(2))
                assert gt_upper_bound(sys, ph, gt_spec) <= two_rs + 1e-8
            # diagonal Hessian in the Lagrange parameters within [0, lambda_s]
            step = 1e-3
            u_hi = np.clip(q_star + rng.uniform(0.1, 0.3, 2), 0, 1)
            u_lo = q_star * rng.uniform(0.3, 0.7)
            settings = [
                GTParams(c=ones, c_prime=ones, q1=q_star, q2=u_hi, m=0.5, b=np.zeros(2)),
                GTParams(c=ones, c_prime=np.zeros(2), q1=u_lo, q2=q_star, m=0.0, b=np.zeros(2)),
            ]
            for base in settings:
                for k in range(2):
                    vals = []
                    for offset in (-step, 0.0, step):
                        b = np.zeros(2)
                        b[k] = offset
                        p = GTParams(
                            c=base.c, c_prime=base.c_prime, q1=base.q1, q2=base.q2, m=base.m, b=b
                        )
                        vals.append(gt_upper_bound(sys, p, gt_spec))
                    second = (vals[0] - 2 * vals[1] + vals[2]) / step**2
                    assert -1e-6 <= second <= sys.lam[k] + 1e-6


def test_rsb_detection_consistency():
    with criterion("RSB detection", 600.0):
        shape2 = [[1.0, 0.4], [0.4, 0.7]]
        inside = [
            system_with_rho(0.35, [1.0], [[1.0]], [0.05], SPEC),
            system_with_rho(0.45, [1.0], [[1.0]], [0.03], SPEC),
            system_with_rho(0.45, [0.4, 0.6], shape2, [0.05, 0.03], SPEC),
        ]
        for sys in inside:
            res = minimize_rsb(sys, 3, SPEC, MinimizeOptions(starts=2, max_iterations=400))
            assert res.rs_gap < 1e-6
        outside = [
            system_with_rho(0.6, [1.0], [[1.0]], [0.05], SPEC),
            system_with_rho(0.75, [1.0], [[1.0]], [0.02], SPEC),
            system_with_rho(0.6, [0.4, 0.6], shape2, [0.05, 0.03], SPEC),
        ]
        for sys in outside:
            res = minimize_rsb(sys, 3, SPEC, MinimizeOptions(starts=2, max_iterations=400))
            assert res.rs_gap > 10 * res.quadrature_error
            q_star = solve_qstar(sys, SPEC, tol=1e-12).q_star
            diag = support_diagnostics(res.measure, q_star, tol=1e-4)
            assert diag.ordered_around_qstar
            assert diag.counts_equal


def test_qstar_stability_along_interpolation():
    with criterion("q* interpolation stability", 60.0):
        rng = np.random.default_rng(106)
        for _ in range(20):
            sys = random_system(rng)
            fp = solve_qstar(sys, SPEC, tol=1e-12)
            worst = 0.0
            for t in np.arange(0.1, 1.01, 0.1):
                prof = interpolate_profile(sys, float(t), SPEC, fp=fp)
                again = solve_qstar(prof.system(sys), SPEC, tol=1e-12)
                worst = max(worst, float(np.max(np.abs(again.q_star - fp.q_star))))
            assert worst < 1e-8


def test_finite_n_consistency_inside_at():
    with criterion("finite-size consistency", 600.0):
        sys = system_with_rho(0.4, [0.5, 0.5], [[1.0, 0.5], [0.5, 0.8]], [0.05, 0.04], SPEC)
        report = gamma_and_at(sys, SPEC)
        assert report.rho == pytest.approx(0.4, abs=1e-9)
        q_star = report.q_star
        seeds = 500
        values = np.empty(seeds)
        for k in range(seeds):
            inst = sample_instance(sys, [6, 6], 1.0, derived_seed(2024, k), spec=SPEC, q_star=q_star)
            values[k] = exact_free_energy(inst)
        assert abs(values.mean() - report.rs_min_value) <= 0.06
        # Gaussian integration-by-parts derivative identity at t = 1/2
        base = bilinear_B(sys, 1.0 - q_star)
        diffs = np.empty(seeds)
        for k in range(seeds):
            seed = derived_seed(77, k)
            lhs = free_energy_t_derivative(sys, [6, 6], 0.5, seed, step=1e-3, spec=SPEC, q_star=q_star)
            inst = sample_instance(sys, [6, 6], 0.5, seed, spec=SPEC, q_star=q_star)
            stats = overlap_statistics(inst, want_pair_law=False)
            diffs[k] = lhs - 0.5 * (base - stats.gibbs_b_displacement)
        stderr = diffs.std(ddof=1) / math.sqrt(seeds)
        assert abs(diffs.mean()) <= 3 * stderr
