import numpy as np
import pytest

from nestfactor import (
    canonical_factor,
    channel_assembly,
    channel_volterra_family,
    default_probes,
    exp_volterra_operator,
    stability_harness,
    standard_nest,
    volterra_family,
)

KAPPA = 0.3
ALPHAS = (2.0, 4.0, 8.0, 16.0, 32.0, 64.0)


@pytest.fixture(scope="session")
def volterra128():
    """Canonical factorization of the smooth Volterra operator, n=128,
    five dyadic refinements, no early stopping."""
    c = exp_volterra_operator(KAPPA, 128)
    nest = standard_nest(128)
    return c, nest, canonical_factor(c, nest, schedule=5, full_schedule=True)


@pytest.fixture(scope="session")
def volterra128_family():
    return volterra_family(KAPPA, ALPHAS, 128), standard_nest(128)


@pytest.fixture(scope="session")
def volterra128_harness(volterra128_family):
    fam, nest = volterra128_family
    return stability_harness(fam, nest, schedule=5)


@pytest.fixture(scope="session")
def channels8():
    """Eight Volterra channels scaled by 1/l, n=16 each, plus the matching
    perturbation family and its harness."""
    base = exp_volterra_operator(KAPPA, 16)
    blocks = [base / l for l in range(1, 9)]
    nests = [standard_nest(16)] * 8
    asm = channel_assembly(blocks, nests, schedule=4)
    fam, cnest = channel_volterra_family(KAPPA, ALPHAS, 16, 8)
    har = stability_harness(fam, cnest, schedule=4)
    return asm, har


def random_spd(rng, dim):
    a = rng.standard_normal((dim, dim))
    c = a.T @ a
    return c + (0.05 * np.trace(c) / dim) * np.eye(dim)
