import os

import numpy as np
import pytest

from subradiant import DirectCoupling, EmitterDescriptor, ModeDescriptor, SystemModel

OMEGA = 1.778


def make_model(g, omegas=None, kappas=None, omega_e=OMEGA, ms=None):
    """Model with explicit couplings ``g`` of shape (N, 2)."""
    g = np.atleast_2d(np.asarray(g, dtype=complex))
    n = len(g)
    omegas = [omega_e] * n if omegas is None else omegas
    kappas = [0.1] * n if kappas is None else kappas
    ms = [0] * n if ms is None else ms
    modes = [
        ModeDescriptor(f"m{k}", max(1, abs(ms[k])), ms[k], omegas[k], kappas[k], DirectCoupling(tuple(g[k])))
        for k in range(n)
    ]
    em = EmitterDescriptor(omega_e)
    return SystemModel(modes, (em, em))


def random_density(rng, dim=4, rank=None):
    rank = rank or dim
    a = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_unitary(rng, dim=2):
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


@pytest.fixture
def rng():
    return np.random.default_rng(int(os.environ.get("SUBRADIANT_TEST_SEED", "20241015")))
