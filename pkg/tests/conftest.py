"""Shared oracle helpers: dense Kronecker-product operators, independent of the package."""

import numpy as np
import pytest

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def kron_word(num_sites: int, assignment: dict) -> np.ndarray:
    """Dense matrix of a Pauli word; site k acts on bit k of the basis index."""
    out = np.array([[1.0]], dtype=complex)
    for site in range(num_sites - 1, -1, -1):
        out = np.kron(out, PAULI[assignment.get(site, "I")])
    return out


def dense_hamiltonian(ham) -> np.ndarray:
    """Dense matrix of a models.PauliHamiltonian, built independently via kron."""
    dim = 2**ham.num_sites
    out = np.zeros((dim, dim), dtype=complex)
    for coeff, word in ham.terms:
        assignment = {k: letter for k, letter in enumerate(word) if letter != "I"}
        out += coeff * kron_word(ham.num_sites, assignment)
    return out


def layer_generator_matrix(num_sites: int, kind: str) -> np.ndarray:
    """Dense sum_k P(k)(P(k+1)) for kind in {zz, x, y, xx, yy}, periodic."""
    dim = 2**num_sites
    out = np.zeros((dim, dim), dtype=complex)
    for k in range(num_sites):
        if kind in ("x", "y"):
            out += kron_word(num_sites, {k: kind.upper()})
        else:
            letter = kind[0].upper()
            out += kron_word(
                num_sites, {k: letter, (k + 1) % num_sites: letter}
            )
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
