"""Shot simulation with Monte Carlo Pauli noise.

Two backends share one noise model:

* basis path -- every post-Hadamard gate is a permutation of computational
  basis states, so each shot is a single packed bitstring pushed through the
  circuit.  Shots are vectorised as a ``uint64`` array.
* statevector -- exact amplitudes, Z errors applied as real phases.  Shots
  are grouped by their sampled error pattern and each distinct trajectory is
  simulated once.

Randomness is drawn per chunk of ``CHUNK`` shots from a stream keyed by
``(seed, n, chunk index)``, so results depend only on the arguments.
"""
from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from typing import Iterator

import numpy as np

from .ir import PAULIS, Circuit, CircuitError, Gate, GateKind, RegisterLayout, asap_layers

CHUNK = 1 << 14
MAX_STATEVECTOR_QUBITS = 26
MAX_BASIS_QUBITS = 64
# "auto" only picks the statevector backend for small circuits: the number of
# distinct error trajectories explodes with size, and Z errors cannot change
# outcome statistics of this circuit shape anyway.
AUTO_STATEVECTOR_MAX_QUBITS = 10

# Fixed ratios of the one-parameter model used for calibration.
P1_OVER_P2 = 0.1
P3_OVER_P2 = 2.0

_CODE = {"X": 1, "Y": 2, "Z": 3}
_PAULI_OF_CODE = {1: "X", 2: "Y", 3: "Z"}


class BackendError(ValueError):
    """The requested backend cannot run this circuit."""


@dataclass(frozen=True)
class NoiseModel:
    """Independent Pauli channel after every gate.

    ``p2``/``p3`` fire independently on *each operand* of a two/three-qubit
    gate.  ``p_idle`` hits every qubit once per ASAP layer in which it does
    nothing.  ``pauli_weights`` is the (X, Y, Z) split once an error fires.
    """

    p1: float = 0.0
    p2: float = 0.0
    p3: float = 0.0
    pauli_weights: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    readout_flip: float = 0.0
    p_idle: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("p1", "p2", "p3", "readout_flip", "p_idle"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        weights = tuple(float(w) for w in self.pauli_weights)
        if len(weights) != 3 or any(w < 0 for w in weights):
            raise ValueError(f"pauli_weights must be three nonnegative numbers, got {weights}")
        if not math.isclose(sum(weights), 1.0, abs_tol=1e-9):
            raise ValueError(f"pauli_weights must sum to 1, got {sum(weights)}")
        object.__setattr__(self, "pauli_weights", weights)

    @classmethod
    def noiseless(cls, seed: int = 0) -> NoiseModel:
        return cls(seed=seed)

    @classmethod
    def one_parameter(cls, p2: float, base: NoiseModel | None = None) -> NoiseModel:
        """``p1 = p2/10``, ``p3 = 2 p2``, no readout error; other fields from ``base``."""
        base = base or cls()
        return replace(
            base, p1=P1_OVER_P2 * p2, p2=p2, p3=min(1.0, P3_OVER_P2 * p2), readout_flip=0.0
        )

    @property
    def has_gate_noise(self) -> bool:
        return self.p1 > 0 or self.p2 > 0 or self.p3 > 0 or self.p_idle > 0

    @property
    def has_z(self) -> bool:
        return self.has_gate_noise and self.pauli_weights[2] > 0

    def gate_error_rate(self, kind: GateKind) -> float:
        if kind is GateKind.PAULI_ERROR:
            return 0.0
        return {1: self.p1, 2: self.p2, 3: self.p3}[kind.arity]

    def to_dict(self) -> dict:
        return {
            "p1": self.p1,
            "p2": self.p2,
            "p3": self.p3,
            "pauli_weights": list(self.pauli_weights),
            "readout_flip": self.readout_flip,
            "p_idle": self.p_idle,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class NoiseSite:
    """A place where the channel may fire: before gate ``position`` on ``qubit``."""

    position: int
    qubit: int
    probability: float


def noise_sites(circuit: Circuit, model: NoiseModel) -> list[NoiseSite]:
    """All sites with nonzero error probability, ordered by position."""
    sites = []
    for i, gate in enumerate(circuit.gates):
        p = model.gate_error_rate(gate.kind)
        if p > 0:
            sites += [NoiseSite(i + 1, q, p) for q in gate.qubits]

    if model.p_idle > 0 and circuit.gates:
        layers = asap_layers(circuit)
        total = max(layers) + 1
        busy: dict[int, list[tuple[int, int]]] = {q: [] for q in range(circuit.num_qubits)}
        for i, (gate, layer) in enumerate(zip(circuit.gates, layers)):
            for q in gate.qubits:
                busy[q].append((layer, i))
        for q, slots in busy.items():
            occupied = {layer for layer, _ in slots}
            for layer in range(total):
                if layer in occupied:
                    continue
                # An idle error only has to precede the qubit's next gate.
                nxt = next((i for lay, i in slots if lay > layer), len(circuit.gates))
                sites.append(NoiseSite(nxt, q, model.p_idle))

    sites.sort(key=lambda s: s.position)
    return sites


def _rng(seed: int, n: int, chunk: int, salt: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(n, chunk, salt)))


def _chunks(shots: int) -> Iterator[tuple[int, int]]:
    for k, start in enumerate(range(0, shots, CHUNK)):
        yield k, min(CHUNK, shots - start)


def _sample_codes(sites: Sequence[NoiseSite], model: NoiseModel, size: int, rng) -> np.ndarray:
    """Error code per (site, shot): 0 none, 1 X, 2 Y, 3 Z."""
    codes = np.zeros((len(sites), size), dtype=np.int8)
    if not sites:
        return codes
    probs = np.array([s.probability for s in sites])[:, None]
    fire = rng.random((len(sites), size)) < probs
    which = rng.random((len(sites), size))
    wx, wy, _ = model.pauli_weights
    kind = np.where(which < wx, 1, np.where(which < wx + wy, 2, 3)).astype(np.int8)
    codes[fire] = kind[fire]
    return codes


def _readout_masks(num_qubits: int, p: float, size: int, rng) -> np.ndarray:
    flips = rng.random((size, num_qubits)) < p
    weights = np.left_shift(np.uint64(1), np.arange(num_qubits, dtype=np.uint64))
    return (flips.astype(np.uint64) * weights).sum(axis=1, dtype=np.uint64)


# -- shot records -----------------------------------------------------------


@dataclass(frozen=True)
class ShotRecord:
    a_meas: int
    b_meas: int
    ancilla_meas: int
    output_meas: int


def encode_basis_state(layout: RegisterLayout, a: int, b: int, ancilla: int = 0, output: int = 0) -> int:
    n = layout.n
    return a | (b << n) | (ancilla << layout.ancilla) | (output << layout.output)


@dataclass(frozen=True)
class Shots(Sequence):
    """Columnar table of measured bitstrings, viewable as ``ShotRecord`` items."""

    layout: RegisterLayout
    bits: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "bits", np.asarray(self.bits, dtype=np.uint64))

    @property
    def n(self) -> int:
        return self.layout.n

    @property
    def a_meas(self) -> np.ndarray:
        return (self.bits & np.uint64((1 << self.n) - 1)).astype(np.int64)

    @property
    def b_meas(self) -> np.ndarray:
        return ((self.bits >> np.uint64(self.n)) & np.uint64((1 << self.n) - 1)).astype(np.int64)

    @property
    def ancilla_meas(self) -> np.ndarray:
        return ((self.bits >> np.uint64(self.layout.ancilla)) & np.uint64(1)).astype(np.int64)

    @property
    def output_meas(self) -> np.ndarray:
        return ((self.bits >> np.uint64(self.layout.output)) & np.uint64(1)).astype(np.int64)

    def __len__(self) -> int:
        return len(self.bits)

    def __getitem__(self, index):
        if isinstance(index, slice):
            return Shots(self.layout, self.bits[index])
        return ShotRecord(
            int(self.a_meas[index]),
            int(self.b_meas[index]),
            int(self.ancilla_meas[index]),
            int(self.output_meas[index]),
        )

    def records(self) -> list[ShotRecord]:
        return [
            ShotRecord(int(a), int(b), int(c), int(o))
            for a, b, c, o in zip(self.a_meas, self.b_meas, self.ancilla_meas, self.output_meas)
        ]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Shots):
            return NotImplemented
        return self.layout == other.layout and np.array_equal(self.bits, other.bits)

    def histogram(self) -> dict[int, int]:
        values, counts = np.unique(self.bits, return_counts=True)
        return {int(v): int(c) for v, c in zip(values, counts)}


# -- basis-path backend -----------------------------------------------------


def _check_basis_shape(circuit: Circuit) -> None:
    if circuit.num_qubits > MAX_BASIS_QUBITS:
        raise BackendError(f"basis backend packs at most {MAX_BASIS_QUBITS} qubits")
    seen_body = False
    prepared = set()
    for gate in circuit.gates:
        if gate.kind is GateKind.H:
            (q,) = gate.qubits
            if seen_body or q in prepared:
                raise BackendError(
                    "basis backend needs every H before all other gates and on distinct "
                    "qubits; use the statevector backend for this circuit"
                )
            prepared.add(q)
        elif gate.kind in (GateKind.X, GateKind.CNOT, GateKind.TOFFOLI):
            seen_body = True
        elif gate.kind is not GateKind.PAULI_ERROR:
            raise BackendError(
                f"basis backend cannot apply {gate.kind.name}; use the statevector backend"
            )


_ONE = np.uint64(1)


def apply_classical(states: np.ndarray, gate: Gate) -> None:
    """Apply an X/CNOT/TOFFOLI (or X/Y error) in place to packed basis states."""
    kind, qs = gate.kind, [np.uint64(q) for q in gate.qubits]
    if kind is GateKind.X:
        states ^= _ONE << qs[0]
    elif kind is GateKind.CNOT:
        states ^= ((states >> qs[0]) & _ONE) << qs[1]
    elif kind is GateKind.TOFFOLI:
        states ^= ((states >> qs[0]) & (states >> qs[1]) & _ONE) << qs[2]
    elif kind is GateKind.PAULI_ERROR:
        if gate.pauli in ("X", "Y"):
            states ^= _ONE << qs[0]
    else:
        raise BackendError(f"{kind.name} is not a basis permutation")


def evolve_basis_states(circuit: Circuit, states: np.ndarray) -> np.ndarray:
    """Noiseless image of each packed input state; H gates are not allowed."""
    out = np.array(states, dtype=np.uint64, copy=True)
    for gate in circuit.gates:
        apply_classical(out, gate)
    return out


def run_shots_basis(circuit: Circuit, noise: NoiseModel | None, shots: int) -> Shots:
    noise = noise or NoiseModel.noiseless()
    _check_basis_shape(circuit)
    if shots < 1:
        raise ValueError("shots must be >= 1")
    sites = noise_sites(circuit, noise)
    by_position: dict[int, list[int]] = {}
    for k, site in enumerate(sites):
        by_position.setdefault(site.position, []).append(k)

    out = np.empty(shots, dtype=np.uint64)
    start = 0
    for chunk, size in _chunks(shots):
        rng = _rng(noise.seed, circuit.n, chunk)
        codes = _sample_codes(sites, noise, size, rng)
        flips = (codes == 1) | (codes == 2)
        state = np.zeros(size, dtype=np.uint64)

        masks = [flips[k].astype(np.uint64) << np.uint64(site.qubit) for k, site in enumerate(sites)]
        for k in by_position.get(0, ()):
            state ^= masks[k]
        for i, gate in enumerate(circuit.gates):
            if gate.kind is GateKind.H:
                q = np.uint64(gate.qubits[0])
                # Exact: H|0> measures uniformly, and any Pauli before it is irrelevant.
                bit = rng.integers(0, 2, size=size, dtype=np.uint64)
                state &= ~(_ONE << q)
                state |= bit << q
            else:
                apply_classical(state, gate)
            for k in by_position.get(i + 1, ()):
                state ^= masks[k]

        if noise.readout_flip > 0:
            state ^= _readout_masks(circuit.num_qubits, noise.readout_flip, size, rng)
        out[start : start + size] = state
        start += size
    return Shots(circuit.layout, out)


# -- statevector backend ----------------------------------------------------


def _check_statevector_size(circuit: Circuit) -> None:
    if circuit.num_qubits > MAX_STATEVECTOR_QUBITS:
        raise BackendError(
            f"statevector backend is limited to {MAX_STATEVECTOR_QUBITS} qubits, "
            f"circuit has {circuit.num_qubits}"
        )


_SQRT_HALF = 1 / math.sqrt(2)
_T_PHASE = np.exp(1j * math.pi / 4)


def apply_gate(psi: np.ndarray, gate: Gate, index: np.ndarray) -> np.ndarray:
    """Return ``gate`` applied to amplitudes ``psi`` (last axis indexed by bitstring)."""
    kind, qs = gate.kind, gate.qubits
    mask = 1 << qs[0]
    if kind is GateKind.X or (kind is GateKind.PAULI_ERROR and gate.pauli == "X"):
        return psi[..., index ^ mask]
    if kind is GateKind.CNOT:
        c, t = qs
        return psi[..., index ^ (((index >> c) & 1) << t)]
    if kind is GateKind.TOFFOLI:
        c1, c2, t = qs
        return psi[..., index ^ (((index >> c1) & (index >> c2) & 1) << t)]
    bit = (index >> qs[0]) & 1
    if kind is GateKind.H:
        lo = psi[..., index & ~mask]
        hi = psi[..., index | mask]
        return (lo + np.where(bit, -1, 1) * hi) * _SQRT_HALF
    if kind is GateKind.T:
        return psi * np.where(bit, _T_PHASE, 1)
    if kind is GateKind.TDG:
        return psi * np.where(bit, np.conj(_T_PHASE), 1)
    if kind is GateKind.PAULI_ERROR and gate.pauli == "Z":
        return psi * np.where(bit, -1, 1)
    if kind is GateKind.PAULI_ERROR and gate.pauli == "Y":
        return psi[..., index ^ mask] * np.where(bit, 1j, -1j)
    raise CircuitError(f"unsupported gate {gate}")


def simulate_statevector(
    circuit: Circuit, initial: np.ndarray | int | None = None, check_norm: bool = False
) -> np.ndarray:
    """Final amplitudes.  ``initial`` may be a basis index, an amplitude
    vector, or a batch of vectors stacked along the leading axis."""
    _check_statevector_size(circuit)
    dim = 1 << circuit.num_qubits
    if initial is None or isinstance(initial, (int, np.integer)):
        psi = np.zeros(dim, dtype=complex)
        psi[int(initial or 0)] = 1.0
    else:
        psi = np.array(initial, dtype=complex)
        if psi.shape[-1] != dim:
            raise ValueError(f"state has length {psi.shape[-1]}, expected {dim}")
    index = np.arange(dim)
    for gate in circuit.gates:
        psi = apply_gate(psi, gate, index)
        if check_norm:
            norms = np.sum(np.abs(psi) ** 2, axis=-1)
            if not np.allclose(norms, 1.0, rtol=0, atol=1e-10):
                raise AssertionError(f"norm drift after {gate}: {norms}")
    return psi


def outcome_probabilities(circuit: Circuit) -> np.ndarray:
    """Born-rule probabilities over packed bitstrings; PAULI_ERROR gates allowed."""
    probs = np.abs(simulate_statevector(circuit)) ** 2
    return probs / probs.sum()


def exact_distribution_statevector(circuit: Circuit) -> np.ndarray:
    if circuit.has_errors():
        raise CircuitError("exact distribution is defined for noiseless circuits only")
    return outcome_probabilities(circuit)


def distribution_table(probs: np.ndarray, tol: float = 1e-12) -> dict[int, float]:
    nonzero = np.flatnonzero(probs > tol)
    return {int(i): float(probs[i]) for i in nonzero}


def inject_error_at(circuit: Circuit, site: int, qubit: int, pauli: str) -> Circuit:
    """Insert a Pauli error after the first ``site`` gates (``0 <= site <= len``)."""
    if not 0 <= site <= len(circuit.gates):
        raise CircuitError(f"site {site} outside 0..{len(circuit.gates)}")
    if not 0 <= qubit < circuit.num_qubits:
        raise CircuitError(f"qubit {qubit} outside 0..{circuit.num_qubits - 1}")
    if pauli.upper() not in PAULIS:
        raise CircuitError(f"pauli must be one of {PAULIS}, got {pauli!r}")
    err = Gate(GateKind.PAULI_ERROR, (qubit,), pauli.upper())
    gates = circuit.gates[:site] + (err,) + circuit.gates[site:]
    return circuit.with_gates(gates)


def _with_pattern(circuit: Circuit, sites: Sequence[NoiseSite], pattern: np.ndarray) -> Circuit:
    if not pattern.any():
        return circuit
    inserts: dict[int, list[Gate]] = {}
    for site, code in zip(sites, pattern):
        if code:
            err = Gate(GateKind.PAULI_ERROR, (site.qubit,), _PAULI_OF_CODE[int(code)])
            inserts.setdefault(site.position, []).append(err)
    gates: list[Gate] = []
    for i in range(len(circuit.gates) + 1):
        gates += inserts.get(i, ())
        if i < len(circuit.gates):
            gates.append(circuit.gates[i])
    return circuit.with_gates(gates)


def run_shots_statevector(circuit: Circuit, noise: NoiseModel | None, shots: int) -> Shots:
    noise = noise or NoiseModel.noiseless()
    _check_statevector_size(circuit)
    if shots < 1:
        raise ValueError("shots must be >= 1")
    sites = noise_sites(circuit, noise)
    dim = 1 << circuit.num_qubits
    cache: dict[bytes, np.ndarray] = {}

    out = np.empty(shots, dtype=np.uint64)
    start = 0
    for chunk, size in _chunks(shots):
        rng = _rng(noise.seed, circuit.n, chunk)
        codes = _sample_codes(sites, noise, size, rng)
        patterns, group = np.unique(codes.T, axis=0, return_inverse=True)
        group = group.reshape(-1)
        bits = np.empty(size, dtype=np.uint64)
        for g, pattern in enumerate(patterns):
            key = pattern.tobytes()
            if key not in cache:
                cache[key] = outcome_probabilities(_with_pattern(circuit, sites, pattern))
            members = np.flatnonzero(group == g)
            bits[members] = rng.choice(dim, size=len(members), p=cache[key])
        if noise.readout_flip > 0:
            bits ^= _readout_masks(circuit.num_qubits, noise.readout_flip, size, rng)
        out[start : start + size] = bits
        start += size
    return Shots(circuit.layout, out)


def run_shots(circuit: Circuit, noise: NoiseModel | None, shots: int, backend: str = "auto") -> Shots:
    if backend == "auto":
        backend = resolve_backend(circuit.num_qubits, noise)
    if backend == "basis":
        return run_shots_basis(circuit, noise, shots)
    if backend == "statevector":
        return run_shots_statevector(circuit, noise, shots)
    raise ValueError(f"unknown backend {backend!r}")


def resolve_backend(num_qubits: int, noise: NoiseModel | None) -> str:
    if noise is not None and noise.has_z and num_qubits <= AUTO_STATEVECTOR_MAX_QUBITS:
        return "statevector"
    return "basis"
