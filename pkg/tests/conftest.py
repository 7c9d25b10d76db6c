import numpy as np
import pytest
from scipy.optimize import brentq

from mskphase.gauss import QuadratureSpec
from mskphase.model import validate_system
from mskphase.rs_at import gamma_and_at


@pytest.fixture(scope="session")
def spec():
    return QuadratureSpec()


def random_system(rng, species=None, tau_floor=0.05, coupling_scale=1.0, zero_field=False):
    """Random irreducible system.  Fine for internal-consistency checks (both
    sides of the comparison share the quadrature); possibly indefinite."""
    n = int(species if species is not None else rng.integers(2, 4))
    lam = rng.uniform(0.2, 1.0, n)
    lam /= lam.sum()
    raw = rng.uniform(0.1, 1.0, (n, n))
    delta2 = coupling_scale * 0.5 * (raw + raw.T)
    tau2 = np.zeros(n) if zero_field else rng.uniform(tau_floor, 0.6, n)
    return validate_system(lam, delta2, tau2)


def random_psd_system(rng, species=None, tau_floor=0.05, coupling_scale=1.0, zero_field=False):
    """Random irreducible positive-semidefinite system (Gram construction
    with nonnegative factors, so entries stay nonnegative)."""
    n = int(species if species is not None else rng.integers(2, 4))
    lam = rng.uniform(0.2, 1.0, n)
    lam /= lam.sum()
    g = rng.uniform(0.15, 0.8, (n, n))
    delta2 = coupling_scale * (g @ g.T) / n
    tau2 = np.zeros(n) if zero_field else rng.uniform(tau_floor, 0.5, n)
    sys = validate_system(lam, delta2, tau2)
    assert sys.psd and sys.irreducible
    return sys


def consistency_system(rng, species=None):
    """System kept inside the quadrature consistency zone: every effective
    standard deviation tau_s^2 + 2(Delta^2 Lambda q)_s stays below ~1.2, where
    different Gauss-Hermite discretizations of the same expectation agree far
    beyond the cross-check tolerances (at 80 nodes, to ~1e-11)."""
    n = int(species if species is not None else rng.integers(2, 4))
    lam = rng.uniform(0.2, 1.0, n)
    lam /= lam.sum()
    raw = rng.uniform(0.05, 0.42, (n, n))
    tau2 = rng.uniform(0.05, 0.35, n)
    return validate_system(lam, 0.5 * (raw + raw.T), tau2)


def system_with_rho(target, lam, delta2_shape, tau2, spec, lo=0.005, hi=4.0):
    """Scale a coupling shape so the AT number rho(Gamma Delta^2 Lambda) hits
    the target.  The bracket stays below coupling scale ~4 where the default
    quadrature keeps rho monotone in the scale."""
    delta2_shape = np.asarray(delta2_shape, dtype=float)

    def objective(scale):
        return gamma_and_at(validate_system(lam, scale * delta2_shape, tau2), spec).rho - target

    scale = brentq(objective, lo, hi, xtol=1e-12)
    return validate_system(lam, scale * delta2_shape, tau2)
