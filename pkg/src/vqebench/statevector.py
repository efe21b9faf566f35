"""Dense statevector simulation of translationally invariant rotation-layer circuits.

A circuit is an ordered list of layers, each of kind ZZ, X, Y, XX or YY and
bound to a parameter slot.  A layer of kind P applies

    prod_k exp[-i (theta/2) P(k) (P(k+1))]        (site N+1 == site 1)

to the state; the gates within a layer commute.  Site k corresponds to bit k
of the basis index.

Every layer kind is diagonal in a product basis: ZZ and XX/YY have the
eigenvalue pattern of sum_k Z(k)Z(k+1), X and Y that of sum_k Z(k), after
rotating each site with the Hadamard (X, XX) or with S*Hadamard (Y, YY).
Layers, their generators, adjoint-mode gradients and derivative states are
all evaluated through these cached basis changes, applied as two dense
matrix products over the high/low halves of the site register.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from . import _kernels
from .models import CapacityError, PauliHamiltonian, sparse_matrix

#: Largest qubit count accepted by `prepare` (2^20 amplitudes, 16 MiB).
MAX_SITES = 20

NORM_TOL = 1e-10

PLUS_ALL = "plus_all"
NEEL_SUPERPOSITION = "neel_superposition"


class LayerKind(Enum):
    ZZ = "zz"
    X = "x"
    Y = "y"
    XX = "xx"
    YY = "yy"


@dataclass(frozen=True)
class CircuitSpec:
    """Initial-state tag plus ordered (layer kind, parameter slot) pairs.

    Slot indices must be dense 0..n-1; a slot may be shared by several layers
    (their gradient and metric contributions then add).
    """

    num_sites: int
    initial_state: str
    layers: tuple[tuple[LayerKind, int], ...]

    def __post_init__(self) -> None:
        if self.num_sites < 1:
            raise ValueError("need at least one site")
        if self.initial_state not in (PLUS_ALL, NEEL_SUPERPOSITION):
            raise ValueError(f"unknown initial state tag {self.initial_state!r}")
        if not self.layers:
            raise ValueError("circuit has no layers")
        slots = sorted({slot for _, slot in self.layers})
        if slots != list(range(len(slots))):
            raise ValueError(f"parameter slots must be dense 0..n-1, got {slots}")

    @property
    def num_parameters(self) -> int:
        return 1 + max(slot for _, slot in self.layers)


@dataclass(frozen=True)
class StateVector:
    """Normalized vector of 2^num_sites complex amplitudes."""

    num_sites: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        if self.amplitudes.shape != (1 << self.num_sites,):
            raise ValueError("amplitude count does not match the qubit count")
        norm_sq = float(np.sum(np.abs(self.amplitudes) ** 2))
        if abs(norm_sq - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized: |psi|^2 = {norm_sq}")


# ---------------------------------------------------------------------------
# cached tables: diagonal weights and basis-change blocks


@lru_cache(maxsize=None)
def _z_weights(n: int) -> np.ndarray:
    """Eigenvalues of sum_k Z(k): n - 2 popcount(b)."""
    idx = np.arange(1 << n, dtype=np.int64)
    return (n - 2 * np.bitwise_count(idx).astype(np.int64)).astype(np.float64)


@lru_cache(maxsize=None)
def _zz_weights(n: int) -> np.ndarray:
    """Eigenvalues of sum_k Z(k)Z(k+1) (cyclic): n - 2 * #(unequal neighbours)."""
    idx = np.arange(1 << n, dtype=np.int64)
    rot = (idx >> 1) | ((idx & 1) << (n - 1))
    return (n - 2 * np.bitwise_count(idx ^ rot).astype(np.int64)).astype(np.float64)


@lru_cache(maxsize=None)
def _hadamard_block(h: int) -> np.ndarray:
    """H^{(x)h} with entries 2^{-h/2} (-1)^{popcount(i & j)}; real, self-inverse."""
    idx = np.arange(1 << h, dtype=np.int64)
    signs = 1 - 2 * (np.bitwise_count(idx[:, None] & idx[None, :]).astype(np.int64) & 1)
    return signs * 2.0 ** (-h / 2.0)


@lru_cache(maxsize=None)
def _sh_block(h: int) -> np.ndarray:
    """(S H)^{(x)h} with entries 2^{-h/2} i^{popcount(i)} (-1)^{popcount(i & j)}."""
    idx = np.arange(1 << h, dtype=np.int64)
    signs = 1 - 2 * (np.bitwise_count(idx[:, None] & idx[None, :]).astype(np.int64) & 1)
    phases = 1j ** (np.bitwise_count(idx).astype(np.int64) % 4)
    return (phases[:, None] * signs) * 2.0 ** (-h / 2.0)


# per-site basis change diagonalizing each layer kind: X = H Z H, Y = (SH) Z (SH)^+
_LAYER_BASIS = {
    LayerKind.ZZ: None,
    LayerKind.X: "h",
    LayerKind.Y: "sh",
    LayerKind.XX: "h",
    LayerKind.YY: "sh",
}

_LAYER_WEIGHTS = {
    LayerKind.ZZ: _zz_weights,
    LayerKind.X: _z_weights,
    LayerKind.Y: _z_weights,
    LayerKind.XX: _zz_weights,
    LayerKind.YY: _zz_weights,
}


def _halves(n: int) -> tuple[int, int]:
    low = n // 2
    return n - low, low


def _matmul_pair(amps: np.ndarray, n: int, left: np.ndarray, right_t: np.ndarray) -> np.ndarray:
    """(left (x) right) amps for per-site blocks, batched over leading axes."""
    high, low = _halves(n)
    lead = amps.shape[:-1]
    x = amps.reshape(-1, 1 << high, 1 << low)
    y = (left @ x) @ right_t
    return y.reshape(*lead, 1 << n)


def _to_basis(amps: np.ndarray, n: int, basis: str) -> np.ndarray:
    high, low = _halves(n)
    if basis == "h":
        return _matmul_pair(amps, n, _hadamard_block(high), _hadamard_block(low))
    wc_high = _sh_block(high).conj().T
    wc_low = _sh_block(low).conj()  # (W^+)^T = conj(W)
    return _matmul_pair(amps, n, wc_high, wc_low)


def _from_basis(amps: np.ndarray, n: int, basis: str) -> np.ndarray:
    high, low = _halves(n)
    if basis == "h":
        return _matmul_pair(amps, n, _hadamard_block(high), _hadamard_block(low))
    return _matmul_pair(amps, n, _sh_block(high), _sh_block(low).T)


def _phase_table(n: int, weights: np.ndarray, angle: float) -> np.ndarray:
    """exp(-i angle/2 w) looked up per basis state; w takes values n-2c, c=0..n."""
    table = np.exp(-0.5j * angle * (n - 2.0 * np.arange(n + 1)))
    counts = ((n - weights) / 2).astype(np.intp)
    return table[counts]


# ---------------------------------------------------------------------------
# raw kernels (operate on stacks shaped (..., 2^n) along the last axis)


def _as_stack(amps: np.ndarray) -> np.ndarray:
    """C-contiguous complex (rows, dim) copy of an arbitrary stack."""
    out = np.array(amps, dtype=np.complex128, order="C", copy=True)
    return out.reshape(-1, out.shape[-1])


def _apply_layer_raw(amps: np.ndarray, n: int, kind: LayerKind, angle: float) -> np.ndarray:
    """Apply prod_k exp[-i(angle/2) generator(k)] to a stack of vectors."""
    if kind is LayerKind.ZZ:
        return amps * _phase_table(n, _zz_weights(n), angle)
    if _kernels.HAVE_NUMBA:
        half = 0.5 * angle
        c, s = float(np.cos(half)), float(np.sin(half))
        stack = _as_stack(amps)
        if kind in (LayerKind.X, LayerKind.Y):
            if stack.shape[0] >= 4:  # the float-view variant vectorizes better
                _kernels.rotate_sites_wide(stack.view(np.float64), n, c, s, kind is LayerKind.Y)
            else:
                _kernels.rotate_sites(stack, n, c, s, kind is LayerKind.Y)
        else:
            _kernels.mix_bonds(stack, n, c, s, kind is LayerKind.YY)
        return stack.reshape(amps.shape)
    weights = _LAYER_WEIGHTS[kind](n)
    basis = _LAYER_BASIS[kind]
    return _from_basis(_to_basis(amps, n, basis) * _phase_table(n, weights, angle), n, basis)


def _apply_generator_raw(amps: np.ndarray, n: int, kind: LayerKind) -> np.ndarray:
    """Apply the Hermitian layer generator sum_k P(k)(P(k+1)) to a stack."""
    if kind is LayerKind.ZZ:
        return amps * _zz_weights(n)
    if _kernels.HAVE_NUMBA:
        stack = _as_stack(amps)
        out = np.empty_like(stack)
        if kind in (LayerKind.X, LayerKind.Y):
            _kernels.sum_site_flips(stack, out, n, kind is LayerKind.Y)
        else:
            _kernels.sum_bond_flips(stack, out, n, kind is LayerKind.YY)
        return out.reshape(amps.shape)
    weights = _LAYER_WEIGHTS[kind](n)
    basis = _LAYER_BASIS[kind]
    return _from_basis(_to_basis(amps, n, basis) * weights, n, basis)


def _prepare_raw(circuit: CircuitSpec) -> np.ndarray:
    n = circuit.num_sites
    dim = 1 << n
    if circuit.initial_state == PLUS_ALL:
        return np.full(dim, 2.0 ** (-n / 2.0), dtype=np.complex128)
    if n % 2:
        raise ValueError("the staggered superposition needs an even number of sites")
    amps = np.zeros(dim, dtype=np.complex128)
    odd_sites = sum(1 << k for k in range(1, n, 2))
    even_sites = sum(1 << k for k in range(0, n, 2))
    sign = 1.0 if n % 4 == 0 else -1.0
    amps[odd_sites] = 1.0 / np.sqrt(2.0)
    amps[even_sites] = sign / np.sqrt(2.0)
    return amps


def _run_raw(circuit: CircuitSpec, theta: np.ndarray) -> np.ndarray:
    amps = _prepare_raw(circuit).astype(np.complex128)
    n = circuit.num_sites
    for kind, slot in circuit.layers:
        amps = _apply_layer_raw(amps, n, kind, theta[slot])
    return amps


def _check_theta(circuit: CircuitSpec, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (circuit.num_parameters,):
        raise ValueError(
            f"expected {circuit.num_parameters} parameters, got shape {theta.shape}"
        )
    if not np.all(np.isfinite(theta)):
        raise ValueError("parameters must be finite")
    return theta


# ---------------------------------------------------------------------------
# public surface


def prepare(circuit: CircuitSpec) -> StateVector:
    """Initial state: |+>^N for PLUS_ALL, (|0101..> +- |1010..>)/sqrt(2) otherwise.

    The superposition is symmetric (+) for N mod 4 = 0 and antisymmetric (-)
    for N mod 4 = 2, matching the momentum sector of the target ground state.
    """
    if circuit.num_sites > MAX_SITES:
        raise CapacityError(f"{circuit.num_sites} sites exceed the {MAX_SITES}-site limit")
    return StateVector(circuit.num_sites, _prepare_raw(circuit))


def apply_layer(state: StateVector, kind: LayerKind, angle: float) -> StateVector:
    """Apply one translationally invariant rotation layer; the norm is preserved."""
    return StateVector(
        state.num_sites,
        _apply_layer_raw(state.amplitudes, state.num_sites, kind, float(angle)),
    )


def apply_hamiltonian(state: StateVector, ham: PauliHamiltonian) -> np.ndarray:
    """H|psi> as a raw complex vector."""
    if ham.num_sites != state.num_sites:
        raise ValueError("Hamiltonian and state act on different qubit counts")
    return sparse_matrix(ham) @ state.amplitudes


def energy(state: StateVector, ham: PauliHamiltonian) -> float:
    """<psi|H|psi>, checked to be real up to numerical residue."""
    val = np.vdot(state.amplitudes, apply_hamiltonian(state, ham))
    if abs(val.imag) > 1e-12 * max(1.0, abs(val.real)):
        raise AssertionError(f"energy has a non-real residue: {val}")
    return float(val.real)


def run_circuit(circuit: CircuitSpec, theta) -> StateVector:
    """Prepare the initial state and apply every layer with its bound angle."""
    if circuit.num_sites > MAX_SITES:
        raise CapacityError(f"{circuit.num_sites} sites exceed the {MAX_SITES}-site limit")
    theta = _check_theta(circuit, theta)
    return StateVector(circuit.num_sites, _run_raw(circuit, theta))


def gradient(circuit: CircuitSpec, theta, ham: PauliHamiltonian) -> np.ndarray:
    """Exact energy gradient via a reverse sweep.

    With |k_i> the state after layer i and <b_i| = <psi|H U_L..U_{i+1}, each
    layer contributes Im <b_i| G_i |k_i> to its slot, G_i being the layer's
    generator sum; shared slots accumulate.  Per layer, bra and ket are moved
    into the layer's diagonal basis once, contracted there, unwound by the
    conjugate phases and transformed back.
    """
    theta = _check_theta(circuit, theta)
    n = circuit.num_sites
    ket = _run_raw(circuit, theta)
    bra = sparse_matrix(ham) @ ket
    grads = np.zeros(circuit.num_parameters)
    stack = np.stack([bra, ket])
    for kind, slot in reversed(circuit.layers):
        gen_ket = _apply_generator_raw(stack[1], n, kind)
        grads[slot] += np.vdot(stack[0], gen_ket).imag
        stack = _apply_layer_raw(stack, n, kind, -theta[slot])
    return grads


def derivative_states(circuit: CircuitSpec, theta) -> tuple[np.ndarray, np.ndarray]:
    """Final state plus the unnormalized derivative vector for every slot.

    Returns (psi, derivs) with derivs[j] = d|psi>/d theta_j, built in a single
    forward sweep: each layer propagates the stack and then deposits
    -(i/2) G |psi_so_far> into its slot's row (G commutes with its layer, so
    the deposit happens inside the layer's diagonal basis).
    """
    theta = _check_theta(circuit, theta)
    n = circuit.num_sites
    nparams = circuit.num_parameters
    stack = np.zeros((nparams + 1, 1 << n), dtype=np.complex128)
    stack[0] = _prepare_raw(circuit)
    # rows for slots no layer has touched yet are still zero; only propagate
    # the state row plus the slots already holding a deposit
    live = 1
    for kind, slot in circuit.layers:
        live = max(live, slot + 2)
        stack[:live] = _apply_layer_raw(stack[:live], n, kind, theta[slot])
        stack[slot + 1] += -0.5j * _apply_generator_raw(stack[0], n, kind)
    return stack[0], stack[1:]


def fubini(circuit: CircuitSpec, theta) -> np.ndarray:
    """Quantum-geometric metric F_ij = Re<d_i psi|d_j psi> - <d_i psi|psi><psi|d_j psi>."""
    psi, derivs = derivative_states(circuit, theta)
    gram = derivs.conj() @ derivs.T
    overlaps = derivs @ psi.conj()
    metric = gram.real - np.outer(overlaps.conj(), overlaps).real
    return 0.5 * (metric + metric.T)
