"""Minimal QASM-like text format.

    # qcomparator circuit
    qubits 8
    # layout n=3 a=0,1,2 b=3,4,5 ancilla=6 output=7
    h q[0]
    cx q[0], q[1]
    # pauli_error y q[6]
    measure

Injected Pauli errors are kept as ``# pauli_error`` comment lines so a
noisy trajectory can be replayed, but no QASM consumer will execute them.
"""
from __future__ import annotations

import re

from .ir import Circuit, CircuitError, Gate, GateKind, RegisterLayout

_MNEMONICS = {kind.value: kind for kind in GateKind if kind is not GateKind.PAULI_ERROR}
_OPERAND = re.compile(r"^q\[(\d+)\]$")
_ERROR_LINE = re.compile(r"^#\s*pauli_error\s+([xyz])\s+(.+)$", re.IGNORECASE)
_HEADER = re.compile(r"^qubits\s+(\d+)$")


class QasmError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def export_qasm(circuit: Circuit) -> str:
    lines = [
        "# qcomparator circuit",
        f"qubits {circuit.num_qubits}",
        f"# layout {circuit.layout.describe()}",
    ]
    for gate in circuit.gates:
        ops = ", ".join(f"q[{q}]" for q in gate.qubits)
        if gate.kind is GateKind.PAULI_ERROR:
            lines.append(f"# pauli_error {gate.pauli.lower()} {ops}")
        else:
            lines.append(f"{gate.kind.value} {ops}")
    if circuit.measure_all:
        lines.append("measure")
    return "\n".join(lines) + "\n"


def _operands(text: str, lineno: int, num_qubits: int) -> tuple[int, ...]:
    qubits = []
    for token in text.split(","):
        m = _OPERAND.match(token.strip())
        if not m:
            raise QasmError(f"malformed operand {token.strip()!r}", lineno)
        q = int(m.group(1))
        if q >= num_qubits:
            raise QasmError(f"qubit index {q} out of range (declared {num_qubits})", lineno)
        qubits.append(q)
    return tuple(qubits)


def parse_qasm(text: str) -> Circuit:
    layout: RegisterLayout | None = None
    gates: list[Gate] = []
    measure_all = False

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            m = _ERROR_LINE.match(line)
            if m and layout is not None:
                (q,) = _operands(m.group(2), lineno, layout.num_qubits)
                gates.append(Gate(GateKind.PAULI_ERROR, (q,), m.group(1).upper()))
            elif m:
                raise QasmError("gate before 'qubits' header", lineno)
            continue

        header = _HEADER.match(line)
        if header:
            if layout is not None:
                raise QasmError("duplicate 'qubits' header", lineno)
            try:
                layout = RegisterLayout.for_qubits(int(header.group(1)))
            except CircuitError as exc:
                raise QasmError(str(exc), lineno) from None
            continue
        if layout is None:
            raise QasmError("expected 'qubits <N>' header first", lineno)
        if measure_all:
            raise QasmError("statement after 'measure'", lineno)
        if line == "measure":
            measure_all = True
            continue

        mnemonic, _, rest = line.partition(" ")
        kind = _MNEMONICS.get(mnemonic)
        if kind is None:
            raise QasmError(f"unknown mnemonic {mnemonic!r}", lineno)
        try:
            gates.append(Gate(kind, _operands(rest, lineno, layout.num_qubits)))
        except CircuitError as exc:
            raise QasmError(str(exc), lineno) from None

    if layout is None:
        raise QasmError("missing 'qubits <N>' header")
    return Circuit(layout, tuple(gates), measure_all)
