"""Shared oracles and random-state factories for the test suite."""

import math

import numpy as np


def random_density(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_hermitian(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (a + a.conj().T)


def monomial_matrix(basis, creates, annihilates):
    """Dense matrix of adag_{j1}..adag_{jN} a_{i1}..a_{iN} by ladder algebra."""
    dim = basis.dim
    out = np.zeros((dim, dim), dtype=complex)
    for col, occ in enumerate(basis.states):
        vec = list(occ)
        amp = 1.0
        ok = True
        for i in annihilates:
            if vec[i] == 0:
                ok = False
                break
            amp *= math.sqrt(vec[i])
            vec[i] -= 1
        if not ok:
            continue
        for j in creates:
            amp *= math.sqrt(vec[j] + 1)
            vec[j] += 1
        out[basis.index[tuple(vec)], col] += amp
    return out


def double_commutator_generator(matrix, gen):
    """Noise generator by explicit matrix double commutators (independent path)."""
    out = np.zeros_like(matrix, dtype=complex)
    for j in range(gen.num_sites):
        n = np.diag(gen.basis.occupations[:, j]).astype(complex)
        o = np.diag(gen.feedback_diagonals[:, j]).astype(complex)
        out += -0.5 * gen.xi * (n @ n @ matrix - 2 * n @ matrix @ n + matrix @ n @ n)
        out += (-0.5 / gen.xi) * (o @ o @ matrix - 2 * o @ matrix @ o + matrix @ o @ o)
    return out


def choi_matrix(channel, dim):
    """Choi matrix sum_ab |a><b| (x) channel(|a><b|); PSD iff the map is CP."""
    out = np.zeros((dim * dim, dim * dim), dtype=complex)
    for a in range(dim):
        for b in range(dim):
            e = np.zeros((dim, dim), dtype=complex)
            e[a, b] = 1.0
            block = channel(e)
            out[a * dim : (a + 1) * dim, b * dim : (b + 1) * dim] += block
    return out
