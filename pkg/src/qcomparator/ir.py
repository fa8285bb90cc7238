"""Gate-level circuit representation.

Qubits are plain integer indices into a flat array laid out as
``a[0..n) | b[0..n) | ancilla | output`` with both registers LSB first.
Circuits are frozen; ``append`` and friends return new objects.
"""
from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

QubitId = int


class GateKind(str, enum.Enum):
    X = "x"
    H = "h"
    CNOT = "cx"
    TOFFOLI = "ccx"
    # T/TDG only appear in circuits produced by ``lower_toffoli``.
    T = "t"
    TDG = "tdg"
    PAULI_ERROR = "pauli_error"

    @property
    def arity(self) -> int:
        return _ARITY[self]


_ARITY = {
    GateKind.X: 1,
    GateKind.H: 1,
    GateKind.CNOT: 2,
    GateKind.TOFFOLI: 3,
    GateKind.T: 1,
    GateKind.TDG: 1,
    GateKind.PAULI_ERROR: 1,
}

PAULIS = ("X", "Y", "Z")


class CircuitError(ValueError):
    """Raised for structurally invalid gates or circuits."""


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    qubits: tuple[QubitId, ...]
    pauli: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", GateKind(self.kind))
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if len(self.qubits) != self.kind.arity:
            raise CircuitError(
                f"{self.kind.name} takes {self.kind.arity} operand(s), got {len(self.qubits)}"
            )
        if len(set(self.qubits)) != len(self.qubits):
            raise CircuitError(f"repeated operand in {self.kind.name}{self.qubits}")
        if any(q < 0 for q in self.qubits):
            raise CircuitError(f"negative qubit index in {self.kind.name}{self.qubits}")
        if self.kind is GateKind.PAULI_ERROR:
            if self.pauli not in PAULIS:
                raise CircuitError(f"PAULI_ERROR needs pauli in {PAULIS}, got {self.pauli!r}")
        elif self.pauli is not None:
            raise CircuitError(f"{self.kind.name} does not carry a pauli label")

    def __str__(self) -> str:
        ops = ", ".join(f"q{q}" for q in self.qubits)
        if self.kind is GateKind.PAULI_ERROR:
            return f"ERR_{self.pauli}({ops})"
        return f"{self.kind.name}({ops})"


def X(q: QubitId) -> Gate:
    return Gate(GateKind.X, (q,))


def H(q: QubitId) -> Gate:
    return Gate(GateKind.H, (q,))


def CNOT(control: QubitId, target: QubitId) -> Gate:
    return Gate(GateKind.CNOT, (control, target))


def TOFFOLI(c1: QubitId, c2: QubitId, target: QubitId) -> Gate:
    return Gate(GateKind.TOFFOLI, (c1, c2, target))


def T(q: QubitId) -> Gate:
    return Gate(GateKind.T, (q,))


def TDG(q: QubitId) -> Gate:
    return Gate(GateKind.TDG, (q,))


def PAULI_ERROR(q: QubitId, pauli: str) -> Gate:
    return Gate(GateKind.PAULI_ERROR, (q,), pauli.upper())


@dataclass(frozen=True)
class RegisterLayout:
    """Role-addressed view of the ``2n+2`` qubits."""

    n: int
    a_qubits: tuple[QubitId, ...] = field(init=False)
    b_qubits: tuple[QubitId, ...] = field(init=False)
    ancilla: QubitId = field(init=False)
    output: QubitId = field(init=False)

    def __post_init__(self) -> None:
        if isinstance(self.n, bool) or not isinstance(self.n, int) or self.n < 1:
            raise CircuitError(f"bit width must be a positive integer, got {self.n!r}")
        n = self.n
        object.__setattr__(self, "a_qubits", tuple(range(n)))
        object.__setattr__(self, "b_qubits", tuple(range(n, 2 * n)))
        object.__setattr__(self, "ancilla", 2 * n)
        object.__setattr__(self, "output", 2 * n + 1)

    @property
    def num_qubits(self) -> int:
        return 2 * self.n + 2

    @classmethod
    def for_qubits(cls, num_qubits: int) -> RegisterLayout:
        if num_qubits < 4 or num_qubits % 2:
            raise CircuitError(f"no register layout has {num_qubits} qubits")
        return cls((num_qubits - 2) // 2)

    def describe(self) -> str:
        a = ",".join(map(str, self.a_qubits))
        b = ",".join(map(str, self.b_qubits))
        return f"n={self.n} a={a} b={b} ancilla={self.ancilla} output={self.output}"


@dataclass(frozen=True)
class Circuit:
    layout: RegisterLayout
    gates: tuple[Gate, ...] = ()
    measure_all: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "gates", tuple(self.gates))
        for gate in self.gates:
            _check_operands(gate, self.layout.num_qubits)

    @property
    def n(self) -> int:
        return self.layout.n

    @property
    def num_qubits(self) -> int:
        return self.layout.num_qubits

    def __len__(self) -> int:
        return len(self.gates)

    def has_errors(self) -> bool:
        return any(g.kind is GateKind.PAULI_ERROR for g in self.gates)

    def extend(self, gates: Iterable[Gate]) -> Circuit:
        return Circuit(self.layout, self.gates + tuple(gates), self.measure_all)

    def with_gates(self, gates: Sequence[Gate]) -> Circuit:
        return Circuit(self.layout, tuple(gates), self.measure_all)

    def with_measurement(self, measure_all: bool = True) -> Circuit:
        return Circuit(self.layout, self.gates, measure_all)


def _check_operands(gate: Gate, num_qubits: int) -> None:
    for q in gate.qubits:
        if q >= num_qubits:
            raise CircuitError(
                f"operand q{q} of {gate} out of range for a {num_qubits}-qubit circuit"
            )


def new_circuit(n: int) -> Circuit:
    return Circuit(RegisterLayout(n))


def append(circuit: Circuit, gate: Gate) -> Circuit:
    return circuit.extend((gate,))


def validate(circuit: Circuit) -> None:
    """Re-check every gate against the layout; raises ``CircuitError``."""
    for gate in circuit.gates:
        if not isinstance(gate, Gate):
            raise CircuitError(f"not a gate: {gate!r}")
        _check_operands(gate, circuit.num_qubits)


_INVERSE_KIND = {GateKind.T: GateKind.TDG, GateKind.TDG: GateKind.T}


def inverse(circuit: Circuit) -> Circuit:
    if circuit.has_errors():
        raise CircuitError("cannot invert a circuit containing PAULI_ERROR gates")
    gates = [
        Gate(_INVERSE_KIND.get(g.kind, g.kind), g.qubits) for g in reversed(circuit.gates)
    ]
    return circuit.with_gates(gates)


def asap_layers(circuit: Circuit) -> list[int]:
    """Layer index of each gate under greedy as-soon-as-possible scheduling."""
    frontier = [0] * circuit.num_qubits
    layers = []
    for gate in circuit.gates:
        layer = max(frontier[q] for q in gate.qubits)
        for q in gate.qubits:
            frontier[q] = layer + 1
        layers.append(layer)
    return layers


def depth(circuit: Circuit) -> int:
    layers = asap_layers(circuit)
    return max(layers) + 1 if layers else 0


@dataclass(frozen=True)
class Metrics:
    num_qubits: int
    depth: int
    counts: dict[str, int]

    def count(self, kind: GateKind) -> int:
        return self.counts.get(kind.name, 0)

    def to_dict(self) -> dict:
        return {"qubits": self.num_qubits, "depth": self.depth, "counts": dict(self.counts)}


def metrics(circuit: Circuit) -> Metrics:
    tally = Counter(g.kind for g in circuit.gates)
    counts = {kind.name: tally.get(kind, 0) for kind in GateKind}
    return Metrics(circuit.num_qubits, depth(circuit), counts)
