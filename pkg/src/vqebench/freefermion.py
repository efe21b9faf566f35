"""Exact free-fermion simulation of the alternating ZZ/X circuit for the Ising chain.

For even N the chain and its circuit generators decompose into r = N/2
independent fermionic two-level systems with mode angles alpha_q.  On block q

* the ZZ layer acts as  exp[-i theta (cos(alpha_q) Z + sin(alpha_q) Y)],
* the X  layer acts as  exp[-i phi Z],

and the Hamiltonian is h_q = -2 [(t + cos(alpha_q)) Z + sin(alpha_q) Y].
The conventions reproduce the statevector layers
L_zz(theta) = prod_k exp[-i(theta/2) Z(k)Z(k+1)] and
L_x(phi) = prod_k exp[-i(phi/2) X(k)] applied to |+>^N bit for bit; the
constant block phases for even N vanish identically and are dropped.

One full evaluation costs O(p r) and the gradient/metric O(p^2 r), so chains
of hundreds of sites are cheap.  Y layers break the fermionic structure and
are deliberately not representable here; route such circuits to the dense
statevector backend.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import TfimSpec, tfim_alphas

_NORM_TOL = 1e-12


@dataclass(frozen=True)
class QaoaParams:
    """Angles of the alternating circuit: p ZZ-layer angles, p X-layer angles.

    Application order is zz(thetas[0]), x(phis[0]), ..., zz(thetas[p-1]),
    x(phis[p-1]); the flat vector form interleaves them the same way.
    """

    thetas: tuple[float, ...]
    phis: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.thetas) != len(self.phis) or not self.thetas:
            raise ValueError("need equally many ZZ and X angles, at least one block")

    @property
    def num_blocks(self) -> int:
        return len(self.thetas)

    @classmethod
    def from_vector(cls, vec) -> "QaoaParams":
        vec = np.asarray(vec, dtype=float)
        if vec.ndim != 1 or vec.size == 0 or vec.size % 2:
            raise ValueError("flat parameter vector must have even positive length")
        return cls(tuple(vec[0::2]), tuple(vec[1::2]))

    def to_vector(self) -> np.ndarray:
        out = np.empty(2 * self.num_blocks)
        out[0::2] = self.thetas
        out[1::2] = self.phis
        return out


@dataclass(frozen=True)
class FermionState:
    """r unit-norm two-component block states plus the chain data they refer to."""

    blocks: np.ndarray  # shape (r, 2), complex
    alphas: np.ndarray
    field: float

    def __post_init__(self) -> None:
        if self.blocks.ndim != 2 or self.blocks.shape[1] != 2:
            raise ValueError("blocks must have shape (r, 2)")
        norms = np.sum(np.abs(self.blocks) ** 2, axis=1)
        if np.max(np.abs(norms - 1.0)) > _NORM_TOL:
            raise ValueError("block states must have unit norm")


def _require_even(spec: TfimSpec) -> None:
    if spec.num_sites % 2:
        raise ValueError("the free-fermion backend covers even site counts only")


def prepare_initial(spec: TfimSpec) -> FermionState:
    """|+>^N in the block picture: every two-level system in (1, 0)."""
    _require_even(spec)
    blocks = np.zeros((spec.num_blocks, 2), dtype=np.complex128)
    blocks[:, 0] = 1.0
    return FermionState(blocks, tfim_alphas(spec), float(spec.field))


def _zz_unitaries(alphas: np.ndarray, theta: float) -> np.ndarray:
    """Per-block exp[-i theta (cos(a) Z + sin(a) Y)] as an (r, 2, 2) stack."""
    c, s = np.cos(theta), np.sin(theta)
    ca, sa = np.cos(alphas), np.sin(alphas)
    u = np.empty((alphas.size, 2, 2), dtype=np.complex128)
    u[:, 0, 0] = c - 1j * s * ca
    u[:, 0, 1] = -s * sa
    u[:, 1, 0] = s * sa
    u[:, 1, 1] = c + 1j * s * ca
    return u


def apply_zz_layer(state: FermionState, theta: float) -> FermionState:
    """Rotate every block about its tilted axis (0, sin(alpha_q), cos(alpha_q))."""
    u = _zz_unitaries(state.alphas, float(theta))
    blocks = np.einsum("qij,qj->qi", u, state.blocks)
    return FermionState(blocks, state.alphas, state.field)


def apply_x_layer(state: FermionState, phi: float) -> FermionState:
    """Rotate every block about z: multiply components by exp(-+ i phi)."""
    phase = np.exp(-1j * float(phi))
    blocks = np.stack([state.blocks[:, 0] * phase, state.blocks[:, 1] / phase], axis=1)
    return FermionState(blocks, state.alphas, state.field)


def simulate(spec: TfimSpec, params: QaoaParams) -> FermionState:
    """Run the full alternating circuit from the |+>^N block state."""
    state = prepare_initial(spec)
    for theta, phi in zip(params.thetas, params.phis):
        state = apply_zz_layer(state, theta)
        state = apply_x_layer(state, phi)
    return state


def state_energy(state: FermionState) -> float:
    """sum_q <psi_q| h_q |psi_q> with h_q = -2[(t + cos a_q) Z + sin a_q Y]."""
    v0 = state.blocks[:, 0]
    v1 = state.blocks[:, 1]
    expect_z = np.abs(v0) ** 2 - np.abs(v1) ** 2
    expect_y = 2.0 * np.imag(np.conj(v0) * v1)
    ca = np.cos(state.alphas)
    sa = np.sin(state.alphas)
    return float(np.sum(-2.0 * ((state.field + ca) * expect_z + sa * expect_y)))


def energy(spec: TfimSpec, params: QaoaParams) -> float:
    """Circuit energy <psi(params)| H |psi(params)>."""
    return state_energy(simulate(spec, params))


def block_derivatives(spec: TfimSpec, params: QaoaParams) -> tuple[np.ndarray, np.ndarray]:
    """Block states and their parameter derivatives in one forward sweep.

    Returns (psi, derivs): psi has shape (r, 2) and derivs (2p, r, 2), with
    derivs[j] = d psi / d theta_j in the interleaved parameter order.  Each
    layer propagates all columns, then deposits -i G_q |psi> into its own
    column (the generator commutes with its layer).
    """
    _require_even(spec)
    alphas = tfim_alphas(spec)
    r = alphas.size
    p = params.num_blocks
    ncols = 2 * p + 1
    # column 0 is the state; column 1+j is the derivative for parameter j
    stack = np.zeros((r, 2, ncols), dtype=np.complex128)
    stack[:, 0, 0] = 1.0
    axis = np.empty((r, 2, 2), dtype=np.complex128)  # cos(a) Z + sin(a) Y
    axis[:, 0, 0] = np.cos(alphas)
    axis[:, 0, 1] = -1j * np.sin(alphas)
    axis[:, 1, 0] = 1j * np.sin(alphas)
    axis[:, 1, 1] = -np.cos(alphas)
    col = 1
    for theta, phi in zip(params.thetas, params.phis):
        stack = _zz_unitaries(alphas, theta) @ stack
        stack[:, :, col] += -1j * np.einsum("qij,qj->qi", axis, stack[:, :, 0])
        col += 1
        phase = np.exp(-1j * phi)
        stack[:, 0, :] *= phase
        stack[:, 1, :] /= phase
        stack[:, 0, col] += -1j * stack[:, 0, 0]
        stack[:, 1, col] += 1j * stack[:, 1, 0]
        col += 1
    psi = stack[:, :, 0]
    derivs = np.moveaxis(stack[:, :, 1:], -1, 0)
    return psi, derivs


def gradient(spec: TfimSpec, params: QaoaParams) -> np.ndarray:
    """Exact gradient dE/d theta_j, length 2p, interleaved parameter order."""
    psi, derivs = block_derivatives(spec, params)
    return gradient_from_blocks(spec, psi, derivs)


def gradient_from_blocks(spec: TfimSpec, psi: np.ndarray, derivs: np.ndarray) -> np.ndarray:
    """dE/d theta_j = 2 Re sum_q <psi_q| h_q |d_j psi_q> from precomputed blocks."""
    alphas = tfim_alphas(spec)
    h = np.empty((alphas.size, 2, 2), dtype=np.complex128)
    ca = np.cos(alphas)
    sa = np.sin(alphas)
    h[:, 0, 0] = -2.0 * (spec.field + ca)
    h[:, 0, 1] = 2.0j * sa
    h[:, 1, 0] = -2.0j * sa
    h[:, 1, 1] = 2.0 * (spec.field + ca)
    h_psi = np.einsum("qij,qj->qi", h, psi)
    return 2.0 * np.real(np.einsum("qa,jqa->j", h_psi.conj(), derivs))


def fubini(spec: TfimSpec, params: QaoaParams) -> np.ndarray:
    """Metric of the block-product manifold, additive over blocks.

    F_ij = sum_q Re[<d_i psi_q|d_j psi_q> - <d_i psi_q|psi_q><psi_q|d_j psi_q>];
    cross-block terms cancel because every block stays normalized.
    """
    psi, derivs = block_derivatives(spec, params)
    return fubini_from_blocks(psi, derivs)


def fubini_from_blocks(psi: np.ndarray, derivs: np.ndarray) -> np.ndarray:
    """Assemble the metric from precomputed block states and derivatives."""
    gram = np.einsum("iqa,jqa->ij", derivs.conj(), derivs)
    overlaps = np.einsum("qa,jqa->qj", psi.conj(), derivs)
    berry = np.einsum("qi,qj->ij", overlaps.conj(), overlaps)
    metric = (gram - berry).real
    return 0.5 * (metric + metric.T)
