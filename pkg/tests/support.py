"""Shared random-instance generators for the test suite."""

import numpy as np

from qmaxlik import Dataset


def random_density(rng, dim):
    """Full-rank random density matrix (Ginibre construction)."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / rho.trace().real


def random_pure_state(rng, dim):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_complete_povm(rng, dim, n_outcomes):
    """Random PSD elements pushed through S^-1/2 so they sum to the identity."""
    mats = []
    for _ in range(n_outcomes):
        g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        mats.append(g @ g.conj().T)
    s = np.sum(mats, axis=0)
    values, vectors = np.linalg.eigh(s)
    s_inv_half = (vectors / np.sqrt(values)) @ vectors.conj().T
    return np.stack([s_inv_half @ m @ s_inv_half for m in mats])


def random_dataset(rng, dim=None, n_outcomes=None, normalized_weights=False):
    """Random complete-POVM dataset with positive real counts."""
    if dim is None:
        dim = int(rng.integers(2, 9))
    if n_outcomes is None:
        n_outcomes = int(rng.integers(dim, 2 * dim + 1))
    counts = rng.uniform(0.5, 10.0, size=n_outcomes)
    if normalized_weights:
        counts = counts / counts.sum()
    return Dataset(elements=random_complete_povm(rng, dim, n_outcomes), counts=counts)


def random_instance(rng, dim=None, normalized_weights=False):
    """(state, dataset) pair sharing a dimension."""
    if dim is None:
        dim = int(rng.integers(2, 9))
    return random_density(rng, dim), random_dataset(rng, dim, normalized_weights=normalized_weights)
