"""Circuit builders for the benchmark experiments.

Three variants are produced:

* "qaoa": the alternating (ZZ, X) circuit for the Ising chain, p = N/2
  blocks on |+>^N, one fresh slot per layer (n = N parameters);
* "qaoa_y": the same circuit with an extra Y-rotation layer (one fresh
  parameter each) inserted after selected blocks, which breaks the
  fermionic structure on purpose;
* "xxz_trotter": p = N blocks of (XX, YY, ZZ) layers on the staggered
  superposition (n = 3N parameters).
"""

from __future__ import annotations

from dataclasses import dataclass

from ..models import TfimSpec, XxzSpec
from ..statevector import NEEL_SUPERPOSITION, PLUS_ALL, CircuitSpec, LayerKind

VARIANTS = ("qaoa", "qaoa_y", "xxz_trotter")


@dataclass(frozen=True)
class CircuitBuild:
    """A circuit plus the routing metadata the harness needs."""

    circuit: CircuitSpec
    num_blocks: int
    y_slots: tuple[int, ...]
    pure_tfim_qaoa: bool  # eligible for the free-fermion backend


def default_y_positions(num_sites: int, num_y_layers: int) -> tuple[int, ...]:
    """Block positions for the Y insertions: {floor(N/4)} or {floor(N/4), floor(N/2)-1}."""
    if num_y_layers == 0:
        return ()
    if num_y_layers == 1:
        return (num_sites // 4,)
    if num_y_layers == 2:
        return (num_sites // 4, num_sites // 2 - 1)
    raise ValueError("only zero, one or two extra Y layers are supported")


def build_tfim_qaoa(spec: TfimSpec, y_positions: tuple[int, ...] = ()) -> CircuitBuild:
    """Alternating ZZ/X blocks, optionally with Y layers after 1-based block positions."""
    n = spec.num_sites
    if n % 2:
        raise ValueError("the benchmark circuits need an even number of sites")
    p = n // 2
    for pos in y_positions:
        if not 1 <= pos <= p:
            raise ValueError(f"Y position {pos} outside the block range 1..{p}")
    layers: list[tuple[LayerKind, int]] = []
    y_slots: list[int] = []
    slot = 0
    for block in range(1, p + 1):
        layers.append((LayerKind.ZZ, slot))
        layers.append((LayerKind.X, slot + 1))
        slot += 2
        for _ in range(y_positions.count(block)):
            layers.append((LayerKind.Y, slot))
            y_slots.append(slot)
            slot += 1
    circuit = CircuitSpec(n, PLUS_ALL, tuple(layers))
    return CircuitBuild(circuit, p, tuple(y_slots), pure_tfim_qaoa=not y_positions)


def build_xxz_trotter(spec: XxzSpec) -> CircuitBuild:
    """p = N blocks of (XX, YY, ZZ) layers on the staggered superposition."""
    n = spec.num_sites
    p = n
    layers: list[tuple[LayerKind, int]] = []
    slot = 0
    for _ in range(p):
        layers.append((LayerKind.XX, slot))
        layers.append((LayerKind.YY, slot + 1))
        layers.append((LayerKind.ZZ, slot + 2))
        slot += 3
    circuit = CircuitSpec(n, NEEL_SUPERPOSITION, tuple(layers))
    return CircuitBuild(circuit, p, (), pure_tfim_qaoa=False)


def build_circuit(
    model: TfimSpec | XxzSpec, variant: str, y_positions: tuple[int, ...] = ()
) -> CircuitBuild:
    if variant == "qaoa":
        if not isinstance(model, TfimSpec):
            raise ValueError("the alternating circuit is defined for the Ising chain")
        if y_positions:
            raise ValueError('use variant "qaoa_y" for circuits with Y layers')
        return build_tfim_qaoa(model)
    if variant == "qaoa_y":
        if not isinstance(model, TfimSpec):
            raise ValueError("Y-extended circuits are defined for the Ising chain")
        if not y_positions:
            raise ValueError("qaoa_y needs at least one Y position")
        return build_tfim_qaoa(model, y_positions)
    if variant == "xxz_trotter":
        if not isinstance(model, XxzSpec):
            raise ValueError("the Trotter circuit is defined for the Heisenberg chain")
        return build_xxz_trotter(model)
    raise ValueError(f"unknown circuit variant {variant!r}; choose from {VARIANTS}")
