"""Spin-chain Hamiltonians, exact ground energies, and the relative-error metric.

Two periodic chains are supported:

* transverse-field Ising,  H = -sum_k Z(k)Z(k+1) - t sum_k X(k),
  exactly solvable through its free-fermion representation;
* anisotropic Heisenberg,  H = sum_k [X(k)X(k+1) + Y(k)Y(k+1) + D Z(k)Z(k+1)],
  whose ground energy is obtained from dense/sparse diagonalization.

Site N+1 is identified with site 1 throughout (periodic boundary conditions),
and the sums run over all N bonds, so at N=2 the single bond appears twice.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

PAULI_LETTERS = "IXYZ"

#: Largest qubit count the diagonalization oracle accepts.
MAX_ORACLE_SITES = 16

# Below this Hilbert-space dimension the oracle diagonalizes densely;
# above it, a Lanczos solve for the smallest eigenvalue is used instead.
_DENSE_ORACLE_MAX_DIM = 2048


class CapacityError(ValueError):
    """A request exceeds the size the exact solvers can handle."""


@dataclass(frozen=True)
class TfimSpec:
    """Transverse-field Ising chain: `num_sites` spins, field strength `field`."""

    num_sites: int
    field: float = 1.0

    def __post_init__(self) -> None:
        if self.num_sites < 2:
            raise ValueError(f"need at least 2 sites, got {self.num_sites}")

    @property
    def num_blocks(self) -> int:
        """Number of independent two-level systems in the fermionic picture."""
        return self.num_sites // 2


@dataclass(frozen=True)
class XxzSpec:
    """Anisotropic Heisenberg chain: `num_sites` spins (even), anisotropy `anisotropy`."""

    num_sites: int
    anisotropy: float = 1.0

    def __post_init__(self) -> None:
        if self.num_sites < 2:
            raise ValueError(f"need at least 2 sites, got {self.num_sites}")
        if self.num_sites % 2:
            raise ValueError("the staggered initial state needs an even number of sites")


@dataclass(frozen=True)
class PauliHamiltonian:
    """Sum of real-weighted Pauli words on `num_sites` qubits.

    `terms` holds (coefficient, word) pairs where `word[k]` is the letter
    acting on site k.  Real coefficients keep the operator Hermitian.
    """

    num_sites: int
    terms: tuple[tuple[float, str], ...]

    def __post_init__(self) -> None:
        for coeff, word in self.terms:
            if len(word) != self.num_sites:
                raise ValueError(f"word {word!r} does not have {self.num_sites} letters")
            if any(ch not in PAULI_LETTERS for ch in word):
                raise ValueError(f"invalid Pauli letter in {word!r}")
            if not np.isfinite(coeff):
                raise ValueError("coefficients must be finite reals")

    @property
    def num_terms(self) -> int:
        return len(self.terms)


def _word(num_sites: int, assignment: dict[int, str]) -> str:
    letters = ["I"] * num_sites
    for site, letter in assignment.items():
        letters[site] = letter
    return "".join(letters)


def tfim_hamiltonian(spec: TfimSpec) -> PauliHamiltonian:
    """H = -sum_k Z(k)Z(k+1) - t sum_k X(k) with periodic boundaries."""
    n = spec.num_sites
    terms = [(-1.0, _word(n, {k: "Z", (k + 1) % n: "Z"})) for k in range(n)]
    if spec.field != 0.0:
        terms += [(-float(spec.field), _word(n, {k: "X"})) for k in range(n)]
    return PauliHamiltonian(n, tuple(terms))


def xxz_hamiltonian(spec: XxzSpec) -> PauliHamiltonian:
    """H = sum_k [X(k)X(k+1) + Y(k)Y(k+1) + D Z(k)Z(k+1)] with periodic boundaries."""
    n = spec.num_sites
    terms: list[tuple[float, str]] = []
    for k in range(n):
        k2 = (k + 1) % n
        terms.append((1.0, _word(n, {k: "X", k2: "X"})))
        terms.append((1.0, _word(n, {k: "Y", k2: "Y"})))
        if spec.anisotropy != 0.0:
            terms.append((float(spec.anisotropy), _word(n, {k: "Z", k2: "Z"})))
    return PauliHamiltonian(n, tuple(terms))


def tfim_alphas(spec: TfimSpec) -> np.ndarray:
    """Mode angles of the fermionic two-level systems.

    alpha_q = (2q-1)*pi/N for even N and 2q*pi/N for odd N, q = 1..floor(N/2).
    """
    n = spec.num_sites
    q = np.arange(1, spec.num_blocks + 1, dtype=float)
    if n % 2 == 0:
        return (2.0 * q - 1.0) * np.pi / n
    return 2.0 * q * np.pi / n


def tfim_ground_energy(spec: TfimSpec) -> float:
    """Exact ground energy -E' - 2 sum_q sqrt(1 + t^2 + 2 t cos(alpha_q)).

    E' vanishes for even N; for odd N the unpaired fermionic mode
    contributes E' = 1 + t.
    """
    t = float(spec.field)
    alphas = tfim_alphas(spec)
    e_prime = 0.0 if spec.num_sites % 2 == 0 else 1.0 + t
    return float(-e_prime - 2.0 * np.sum(np.sqrt(1.0 + t * t + 2.0 * t * np.cos(alphas))))


@lru_cache(maxsize=64)
def sparse_matrix(ham: PauliHamiltonian) -> sp.csr_matrix:
    """Assemble the Hamiltonian as a sparse matrix over the computational basis.

    Site k maps to bit k of the basis index.  A Pauli word contributes the
    entry  i^{#Y} * (-1)^{popcount(b & z_mask)}  at (b ^ flip_mask, b).
    """
    dim = 1 << ham.num_sites
    idx = np.arange(dim, dtype=np.int64)
    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    data: list[np.ndarray] = []
    for coeff, word in ham.terms:
        flip_mask = 0
        sign_mask = 0
        num_y = 0
        for site, letter in enumerate(word):
            if letter in ("X", "Y"):
                flip_mask |= 1 << site
            if letter in ("Z", "Y"):
                sign_mask |= 1 << site
            if letter == "Y":
                num_y += 1
        signs = 1 - 2 * (np.bitwise_count(idx & sign_mask).astype(np.int64) & 1)
        rows.append(idx ^ flip_mask)
        cols.append(idx)
        data.append(coeff * (1j**num_y) * signs)
    mat = sp.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dim, dim),
        dtype=np.complex128,
    )
    return mat.tocsr()


def ground_energy_oracle(ham: PauliHamiltonian) -> float:
    """Smallest eigenvalue of the 2^N x 2^N Hermitian matrix of `ham`.

    Dense diagonalization up to dimension 2048; Lanczos (smallest algebraic,
    deterministic start vector) beyond that.  Refuses more than 16 qubits.
    """
    if ham.num_sites > MAX_ORACLE_SITES:
        raise CapacityError(
            f"{ham.num_sites} sites exceed the {MAX_ORACLE_SITES}-site oracle limit"
        )
    mat = sparse_matrix(ham)
    if np.all(mat.data.imag == 0.0):
        mat = sp.csr_matrix((mat.data.real, mat.indices, mat.indptr), shape=mat.shape)
    dim = mat.shape[0]
    if dim <= _DENSE_ORACLE_MAX_DIM:
        return float(np.linalg.eigvalsh(mat.toarray())[0])
    v0 = np.random.default_rng(7).standard_normal(dim)
    vals = spla.eigsh(
        mat, k=1, which="SA", v0=v0, tol=0, maxiter=20 * dim, ncv=min(dim, 64),
        return_eigenvectors=False,
    )
    return float(vals[0])


def relative_error(energy: float, ground_energy: float) -> float:
    """delta = (E - E0) / |E0|; undefined (raises) for E0 = 0."""
    if ground_energy == 0.0:
        raise ValueError("relative error is undefined for a vanishing ground energy")
    return (energy - ground_energy) / abs(ground_energy)
