"""Comparator and experiment circuit construction.

The comparator evaluates ``[a < b]`` as the carry out of ``~a + b`` with a
ripple of majority (MAJ) cells. The clean ancilla seeds the carry chain,
the top carry is copied onto the output qubit, and the chain is run
backwards to restore every other wire.
"""
from __future__ import annotations

from dataclasses import dataclass

from .ir import (
    CNOT,
    H,
    T,
    TDG,
    TOFFOLI,
    Circuit,
    CircuitError,
    Gate,
    GateKind,
    RegisterLayout,
    X,
)


@dataclass(frozen=True)
class ComparatorSpec:
    n: int
    uncompute: bool = True

    def __post_init__(self) -> None:
        if isinstance(self.n, bool) or not isinstance(self.n, int) or self.n < 1:
            raise CircuitError(f"comparator bit width must be >= 1, got {self.n!r}")


def _maj(carry: int, b: int, a: int) -> list[Gate]:
    return [CNOT(a, b), CNOT(a, carry), TOFFOLI(carry, b, a)]


def comparator_gates(layout: RegisterLayout, uncompute: bool = True) -> list[Gate]:
    a, b = layout.a_qubits, layout.b_qubits
    gates = [X(q) for q in a]

    chain: list[Gate] = []
    carry = layout.ancilla
    for i in range(layout.n):
        chain += _maj(carry, b[i], a[i])
        carry = a[i]
    gates += chain
    gates.append(CNOT(carry, layout.output))

    if uncompute:
        gates += reversed(chain)
        gates += [X(q) for q in a]
    return gates


def build_comparator(spec: ComparatorSpec | int) -> Circuit:
    if not isinstance(spec, ComparatorSpec):
        spec = ComparatorSpec(spec)
    layout = RegisterLayout(spec.n)
    return Circuit(layout, comparator_gates(layout, spec.uncompute))


def build_experiment(n: int) -> Circuit:
    """Hadamards on both input registers, the comparator, then measure everything."""
    comparator = build_comparator(ComparatorSpec(n))
    layout = comparator.layout
    prep = [H(q) for q in layout.a_qubits + layout.b_qubits]
    return Circuit(layout, tuple(prep) + comparator.gates, measure_all=True)


def comparator_stages(n: int) -> dict[str, tuple[int, int]]:
    """Gate-index ranges ``[start, stop)`` of each stage of ``build_experiment(n)``."""
    stages = {}
    pos = 0
    for name, size in (
        ("prepare", 2 * n),
        ("complement", n),
        ("maj_chain", 3 * n),
        ("copy_out", 1),
        ("unmaj_chain", 3 * n),
        ("uncomplement", n),
    ):
        stages[name] = (pos, pos + size)
        pos += size
    return stages


def _toffoli_decomposition(c1: int, c2: int, t: int) -> list[Gate]:
    # Standard 6-CNOT, 7-T construction (Nielsen & Chuang Fig. 4.9).
    return [
        H(t),
        CNOT(c2, t),
        TDG(t),
        CNOT(c1, t),
        T(t),
        CNOT(c2, t),
        TDG(t),
        CNOT(c1, t),
        T(c2),
        T(t),
        H(t),
        CNOT(c1, c2),
        T(c1),
        TDG(c2),
        CNOT(c1, c2),
    ]


def lower_toffoli(circuit: Circuit) -> Circuit:
    if circuit.has_errors():
        raise CircuitError("lower_toffoli does not accept PAULI_ERROR gates")
    gates: list[Gate] = []
    for gate in circuit.gates:
        if gate.kind is GateKind.TOFFOLI:
            gates += _toffoli_decomposition(*gate.qubits)
        else:
            gates.append(gate)
    return circuit.with_gates(gates)
