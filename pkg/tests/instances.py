"""Random problem generators shared by the test modules."""

import numpy as np

from eot.herm import symmetrize_operator


def random_hermitian(rng, n, norm=None):
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    A = (A + A.conj().T) / 2
    if norm is not None:
        A *= norm / np.max(np.abs(np.linalg.eigvalsh(A)))
    return A


def random_density(rng, d, floor=0.05):
    """Full-rank density matrix with smallest eigenvalue at least ``floor / d``."""
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    G = A @ A.conj().T
    G = G / np.trace(G).real
    G = (1 - floor) * G + floor * np.eye(d) / d
    return (G + G.conj().T) / 2


def random_pure(rng, d):
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    v /= np.linalg.norm(v)
    return np.outer(v, v.conj())


def random_weights(rng, n, floor=0.05):
    w = rng.dirichlet(np.ones(n))
    return (1 - floor) * w + floor / n


def random_classical(rng, shape, eps):
    c = rng.uniform(0, 1, size=shape)
    marginals = [random_weights(rng, k) for k in shape]
    return c, eps, marginals


def symmetric_hamiltonian(rng, d, N, norm=2.0):
    H = symmetrize_operator(random_hermitian(rng, d**N), d, N)
    H = (H + H.conj().T) / 2
    return H * norm / np.max(np.abs(np.linalg.eigvalsh(H)))


def strict_pauli_marginal(rng, d, N, margin=0.05):
    """Density matrix with spectrum strictly inside (0, 1/N)."""
    while True:
        lam = rng.dirichlet(np.ones(d))
        if lam.max() < 1 / N - margin and lam.min() > margin / d:
            break
    v = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))[0]
    G = (v * lam) @ v.conj().T
    return (G + G.conj().T) / 2
