from hypothesis import strategies as st

from qcomparator.ir import Circuit, Gate, GateKind, RegisterLayout

UNITARY_KINDS = [GateKind.X, GateKind.H, GateKind.CNOT, GateKind.TOFFOLI, GateKind.T, GateKind.TDG]


@st.composite
def gates(draw, num_qubits: int, kinds=UNITARY_KINDS, errors: bool = False):
    pool = list(kinds) + ([GateKind.PAULI_ERROR] if errors else [])
    kind = draw(st.sampled_from(pool))
    qubits = draw(st.permutations(range(num_qubits)))[: kind.arity]
    pauli = draw(st.sampled_from("XYZ")) if kind is GateKind.PAULI_ERROR else None
    return Gate(kind, tuple(qubits), pauli)


@st.composite
def circuits(draw, max_n: int = 3, max_gates: int = 25, kinds=UNITARY_KINDS, errors: bool = False):
    n = draw(st.integers(1, max_n))
    layout = RegisterLayout(n)
    body = draw(st.lists(gates(layout.num_qubits, kinds, errors), max_size=max_gates))
    return Circuit(layout, tuple(body), draw(st.booleans()))
