"""Shared helpers for the test modules."""

import numpy as np

from pwclra.channel import ChannelRealization


def rel_err(a, b):
    return np.linalg.norm(np.asarray(a) - np.asarray(b)) / np.linalg.norm(np.asarray(b))


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_realization(rng, n, m, k, l, rank=None):
    """Gaussian channels; ``rank`` limits the RIS-BS channel's rank."""
    if rank is None:
        h_rb = crandn(rng, n, m)
    else:
        h_rb = crandn(rng, n, rank) @ crandn(rng, rank, m)
    return ChannelRealization(h_rb, np.zeros_like(h_rb), crandn(rng, k, m, l))


def subspace_distance(a, b):
    """Sine of the largest principal angle between two column spaces."""
    qa, _ = np.linalg.qr(a)
    qb, _ = np.linalg.qr(b)
    # residual form keeps accuracy for tiny angles (1 - cos^2 does not)
    return float(np.linalg.norm(qb - qa @ (qa.conj().T @ qb), 2))
