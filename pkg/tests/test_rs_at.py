import math

import numpy as np
import pytest
from scipy.optimize import brentq

from conftest import consistency_system, random_psd_system, random_system
from mskphase.fixedpoint import solve_qstar
from mskphase.gauss import QuadratureSpec
from mskphase.model import bilinear_B, validate_system
from mskphase.parisi import dirac_measure, parisi_value
from mskphase.rs_at import (
    Phase,
    gamma_and_at,
    interpolate_profile,
    rs_terms,
    rs_value,
    rs_vectorfield,
)


def test_rs_zero_overlap_zero_field(spec):
    beta2 = 0.7
    s = validate_system([1.0], [[beta2]], [0.0])
    assert rs_value(s, np.zeros(1), spec) == pytest.approx(math.log(2) + beta2 / 2, abs=1e-14)


def test_rs_no_interaction_is_q_independent(spec):
    s = validate_system([0.5, 0.5], [[0, 0], [0, 0]], [0.4, 0.9])
    base = rs_value(s, np.zeros(2), spec)
    from mskphase.gauss import expect_log_cosh

    expected = math.log(2) + float(s.lam @ expect_log_cosh(np.sqrt(s.tau2), spec))
    assert base == pytest.approx(expected, abs=1e-14)
    for q in (np.array([0.3, 0.8]), np.ones(2)):
        assert rs_value(s, q, spec) == pytest.approx(base, abs=1e-14)


def test_rs_terms_sum_exactly(spec):
    rng = np.random.default_rng(0)
    s = random_system(rng)
    q = rng.uniform(0, 1, s.species_count)
    terms = rs_terms(s, q, spec)
    assert terms.value == rs_value(s, q, spec)
    assert terms.entropy == math.log(2.0)


def test_qstar_is_grid_minimum(spec):
    # the fixed point minimizes the functional for positive-definite
    # interactions (indefinite ones can dip lower on the cube boundary)
    rng = np.random.default_rng(1)
    s = random_psd_system(rng, species=2)
    report = solve_qstar(s, spec, tol=1e-12)
    best = rs_value(s, report.q_star, spec)
    grid = np.arange(0.0, 1.0001, 0.02)
    lowest = min(rs_value(s, np.array([a, b]), spec) for a in grid for b in grid)
    assert lowest >= best - 1e-6


def test_vectorfield_vanishes_at_fixed_point(spec):
    rng = np.random.default_rng(2)
    s = random_system(rng)
    report = solve_qstar(s, spec, tol=1e-12)
    field = rs_vectorfield(s, report.q_star, spec)
    assert np.max(np.abs(field.direction)) < 1e-10


def test_directional_derivative_matches_finite_difference():
    # the closed form is an integration-by-parts identity, so the comparison
    # runs at high node count in the consistency zone
    rng = np.random.default_rng(3)
    hi = QuadratureSpec(nodes=80)
    for _ in range(5):
        s = consistency_system(rng)
        q = rng.uniform(0.1, 0.9, s.species_count)
        field = rs_vectorfield(s, q, hi)
        eps = 1e-5
        fd = (
            rs_value(s, q + eps * field.direction, hi) - rs_value(s, q - eps * field.direction, hi)
        ) / (2 * eps)
        assert fd == pytest.approx(field.directional_derivative, rel=1e-5, abs=1e-10)


def test_descent_direction_for_psd_systems(spec):
    rng = np.random.default_rng(4)
    for _ in range(20):
        n = int(rng.integers(2, 4))
        lam = rng.uniform(0.2, 1, n)
        lam /= lam.sum()
        root = rng.uniform(0.1, 0.8, (n, n))
        s = validate_system(lam, root @ root.T, rng.uniform(0, 0.5, n))  # psd by construction
        if not s.irreducible:
            continue
        q = rng.uniform(0, 1, n)
        assert rs_vectorfield(s, q, spec).directional_derivative <= 1e-12


def test_at_report_critical_zero_field(spec):
    s = validate_system([1.0], [[0.5]], [0.0])
    report = gamma_and_at(s, spec)
    assert np.all(report.q_star == 0.0)
    assert np.all(report.gamma_diag == 1.0)
    assert report.rho == pytest.approx(0.5, abs=1e-15)
    assert report.phase is Phase.RS


def test_at_report_subcritical(spec):
    s = validate_system([1.0], [[0.3]], [0.0])
    report = gamma_and_at(s, spec)
    assert report.rho == pytest.approx(0.3, abs=1e-15)
    assert report.phase is Phase.RS


def test_at_crossing_matches_scalar_bisection(spec):
    # single species with field: the crossing of rho - 1/2 in Delta^2
    tau2 = [0.1]

    def rho_of(d2):
        return gamma_and_at(validate_system([1.0], [[d2]], tau2), spec).rho

    crossing = brentq(lambda d2: rho_of(d2) - 0.5, 0.3, 3.0, xtol=1e-10)
    assert rho_of(crossing - 1e-4) < 0.5 < rho_of(crossing + 1e-4)
    assert gamma_and_at(validate_system([1.0], [[0.75]], tau2), spec).rho == pytest.approx(
        rho_of(0.75), abs=0
    )


def test_gamma_entries_in_unit_interval(spec):
    rng = np.random.default_rng(5)
    for _ in range(10):
        s = random_system(rng)
        report = gamma_and_at(s, spec)
        assert np.all(report.gamma_diag > 0) and np.all(report.gamma_diag <= 1.0)


def test_interpolation_endpoint_and_slope(spec):
    rng = np.random.default_rng(6)
    s = random_system(rng)
    fp = solve_qstar(s, spec, tol=1e-12)
    prof1 = interpolate_profile(s, 1.0, spec, fp=fp)
    assert np.array_equal(prof1.delta2_t, s.delta2)
    assert prof1.rs_star_t == pytest.approx(rs_value(s, fp.q_star, spec), abs=1e-13)
    prof0 = interpolate_profile(s, 0.0, spec, fp=fp)
    slope = 0.5 * bilinear_B(s, 1.0 - fp.q_star)
    ts = np.linspace(0.0, 1.0, 5)
    vals = [interpolate_profile(s, float(t), spec, fp=fp).rs_star_t for t in ts]
    assert np.allclose(np.diff(vals) / np.diff(ts), slope, atol=1e-12)
    assert prof0.rs_star_t == pytest.approx(vals[0])


def test_qstar_stable_along_interpolation(spec):
    rng = np.random.default_rng(7)
    s = random_system(rng)
    fp = solve_qstar(s, spec, tol=1e-12)
    for t in np.arange(0.1, 1.01, 0.2):
        prof = interpolate_profile(s, float(t), spec, fp=fp)
        again = solve_qstar(prof.system(s), spec, tol=1e-12)
        assert np.max(np.abs(again.q_star - fp.q_star)) < 1e-8


def test_rho_monotone_along_coupling_ray(spec):
    shape = np.array([[1.0, 0.4], [0.4, 0.7]])
    tau2 = [0.05, 0.08]
    rhos = [
        gamma_and_at(validate_system([0.5, 0.5], b2 * shape, tau2), spec).rho
        for b2 in np.linspace(0.1, 2.0, 8)
    ]
    assert np.all(np.diff(rhos) >= -1e-10)


def test_min_rs_parameter_lipschitz(spec):
    # two-level specialization of the model-parameter bound, on minima
    rng = np.random.default_rng(8)
    for _ in range(50):
        n = 2
        lam = rng.uniform(0.3, 0.7, n)
        lam /= lam.sum()
        raw = rng.uniform(0.1, 0.8, (n, n))
        d2a = 0.5 * (raw + raw.T)
        pert = rng.uniform(-0.05, 0.05, (n, n))
        d2b = np.clip(d2a + 0.5 * (pert + pert.T), 1e-3, None)
        t2a = rng.uniform(0.05, 0.5, n)
        t2b = np.clip(t2a + rng.uniform(-0.05, 0.05, n), 0, None)
        s1 = validate_system(lam, d2a, t2a)
        s2 = validate_system(lam, d2b, t2b)
        r1 = gamma_and_at(s1, spec).rs_min_value
        r2 = gamma_and_at(s2, spec).rs_min_value
        bound = (
            0.5 * np.max(np.abs(t2a - t2b))
            + np.max(np.abs(d2a - d2b).sum(axis=1))
            + 0.5 * np.abs(s1.quadratic_kernel() - s2.quadratic_kernel()).sum()
        )
        assert abs(r1 - r2) <= bound + 1e-8


def test_rs_is_two_level_functional():
    rng = np.random.default_rng(9)
    hi = QuadratureSpec(nodes=80)
    for _ in range(5):
        s = consistency_system(rng)
        q = rng.uniform(0, 1, s.species_count)
        assert parisi_value(s, dirac_measure(q), hi).value == pytest.approx(
            rs_value(s, q, hi), abs=1e-10
        )
