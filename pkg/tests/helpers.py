"""Shared random-matrix helpers."""
import numpy as np


def random_density(rng, n, rank=None):
    """Random full-rank (or rank-``rank``) density matrix."""
    k = n if rank is None else rank
    a = rng.normal(size=(n, k)) + 1j * rng.normal(size=(n, k))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def random_hermitian(rng, n, scale=1.0):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * (a + a.conj().T) / 2
