import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import chisquare

from oracles import multinomial_tv_bound, pack, simulate_bits, unpack
from qcomparator.analysis import OutcomeCategory, aggregate, classify_shot
from qcomparator.ir import H, Circuit, CircuitError, GateKind, RegisterLayout, new_circuit
from qcomparator.simulator import (
    BackendError,
    NoiseModel,
    ShotRecord,
    Shots,
    distribution_table,
    evolve_basis_states,
    exact_distribution_statevector,
    inject_error_at,
    noise_sites,
    outcome_probabilities,
    resolve_backend,
    run_shots,
    run_shots_basis,
    run_shots_statevector,
    simulate_statevector,
)
from qcomparator.synth import build_comparator, build_experiment, comparator_stages
from strategies import circuits

CLASSICAL = [GateKind.X, GateKind.CNOT, GateKind.TOFFOLI]


def tv(p, q):
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def empirical(shots: Shots) -> np.ndarray:
    return np.bincount(shots.bits.astype(np.int64), minlength=1 << shots.layout.num_qubits) / len(shots)


# -- noise model ------------------------------------------------------------


@pytest.mark.parametrize(
    "kwargs",
    [{"p1": -0.1}, {"p2": 1.5}, {"readout_flip": 2}, {"pauli_weights": (0.5, 0.5, 0.5)}, {"pauli_weights": (1, -0.5, 0.5)}],
)
def test_noise_model_validation(kwargs):
    with pytest.raises(ValueError):
        NoiseModel(**kwargs)


def test_one_parameter_ties():
    m = NoiseModel.one_parameter(0.01, NoiseModel(seed=7, readout_flip=0.2))
    assert (m.p1, m.p2, m.p3, m.readout_flip, m.seed) == (pytest.approx(0.001), 0.01, 0.02, 0.0, 7)


def test_noise_sites_per_operand():
    c = build_experiment(2)
    sites = noise_sites(c, NoiseModel(p2=0.1))
    assert len(sites) == 2 * sum(g.kind is GateKind.CNOT for g in c.gates)
    sites = noise_sites(c, NoiseModel(p1=0.1, p2=0.1, p3=0.1))
    assert len(sites) == sum(len(g.qubits) for g in c.gates)


def test_idle_sites_fill_every_empty_layer():
    c = build_experiment(2)
    from qcomparator.ir import asap_layers, depth

    layers = asap_layers(c)
    busy = sum(len(g.qubits) for g in c.gates)
    idle = noise_sites(c, NoiseModel(p_idle=0.01))
    assert len(idle) == depth(c) * c.num_qubits - busy
    # Idle errors sit before the qubit's next gate in a later layer.
    for site in idle:
        if site.position < len(c.gates):
            assert site.qubit in c.gates[site.position].qubits


# -- basis-path backend -----------------------------------------------------


@given(circuits(max_n=3, max_gates=30, kinds=CLASSICAL, errors=True), st.data())
def test_basis_evolution_matches_bit_oracle(c, data):
    n = c.n
    a, b = data.draw(st.integers(0, (1 << n) - 1)), data.draw(st.integers(0, (1 << n) - 1))
    anc, out = data.draw(st.integers(0, 1)), data.draw(st.integers(0, 1))
    start = a | (b << n) | (anc << (2 * n)) | (out << (2 * n + 1))
    got = int(evolve_basis_states(c, np.array([start], dtype=np.uint64))[0])
    bits = simulate_bits(c.gates, pack(n, a, b, anc, out))
    assert got == sum(bit << i for i, bit in enumerate(bits))


def test_noiseless_basis_shots_are_always_correct():
    shots = run_shots_basis(build_experiment(3), None, 5000)
    assert np.array_equal(shots.output_meas, (shots.a_meas < shots.b_meas).astype(int))
    assert not shots.ancilla_meas.any()
    assert {classify_shot(r) for r in shots[:200]} == {OutcomeCategory.ANCILLA_INCLUSIVE_SUCCESS}


def test_readout_half_flip_randomises_output():
    shots = run_shots_basis(build_experiment(3), NoiseModel(readout_flip=0.5, seed=3), 100_000)
    assert aggregate(shots, 3).conventional_rate == pytest.approx(0.5, abs=0.01)


@pytest.mark.parametrize("runner", [run_shots_basis, run_shots_statevector])
def test_same_seed_same_records(runner):
    model = NoiseModel.one_parameter(0.02, NoiseModel(seed=11, readout_flip=0.0))
    first = runner(build_experiment(2), model, 3000)
    second = runner(build_experiment(2), model, 3000)
    assert first == second
    assert first.records() == second.records()
    third = runner(build_experiment(2), NoiseModel.one_parameter(0.02, NoiseModel(seed=12)), 3000)
    assert first != third


def test_basis_backend_rejects_other_shapes():
    layout = RegisterLayout(1)
    late_h = Circuit(layout, tuple(build_comparator(1).gates) + (H(0),))
    with pytest.raises(BackendError, match="statevector"):
        run_shots_basis(late_h, None, 10)
    from qcomparator.synth import lower_toffoli

    with pytest.raises(BackendError):
        run_shots_basis(lower_toffoli(build_comparator(1)), None, 10)


def test_basis_y_errors_flip_like_x():
    base = build_experiment(2)
    x = run_shots_basis(base, NoiseModel(p2=0.05, pauli_weights=(1, 0, 0), seed=5), 20_000)
    y = run_shots_basis(base, NoiseModel(p2=0.05, pauli_weights=(0, 1, 0), seed=5), 20_000)
    assert x == y


def test_basis_z_errors_do_nothing():
    base = build_experiment(3)
    z = run_shots_basis(base, NoiseModel(p1=0.2, p2=0.2, p3=0.2, pauli_weights=(0, 0, 1), seed=5), 5000)
    assert aggregate(z, 3).strict_rate == 1.0


def test_shot_record_view():
    shots = run_shots_basis(build_experiment(2), None, 10)
    rec = shots[3]
    assert isinstance(rec, ShotRecord)
    assert rec == shots.records()[3]
    assert len(shots[2:5]) == 3


# -- statevector backend ----------------------------------------------------


@given(circuits(max_n=2, max_gates=30, errors=True))
def test_statevector_norm_preserved(c):
    simulate_statevector(c, check_norm=True)


@given(circuits(max_n=2, max_gates=20, kinds=CLASSICAL, errors=True), st.data())
def test_statevector_agrees_with_basis_oracle_on_permutations(c, data):
    start = data.draw(st.integers(0, (1 << c.num_qubits) - 1))
    bits = [(start >> i) & 1 for i in range(c.num_qubits)]
    end = sum(bit << i for i, bit in enumerate(simulate_bits(c.gates, bits)))
    psi = simulate_statevector(c, start)
    assert abs(psi[end]) == pytest.approx(1.0)


def test_hadamard_single_qubit_is_fair():
    c = new_circuit(1).extend([H(0)]).with_measurement()
    shots = run_shots_statevector(c, None, 100_000)
    p = float(np.mean(shots.bits & np.uint64(1)))
    assert p == pytest.approx(0.5, abs=4 * np.sqrt(0.25 / 100_000))
    assert not (shots.bits >> np.uint64(1)).any()


def test_exact_distribution_empty_circuit():
    probs = exact_distribution_statevector(new_circuit(1))
    assert distribution_table(probs) == {0: pytest.approx(1.0)}


def test_exact_distribution_experiment_n1():
    table = distribution_table(exact_distribution_statevector(build_experiment(1)))
    expected = {}
    for a in (0, 1):
        for b in (0, 1):
            expected[a | (b << 1) | (int(a < b) << 3)] = 0.25
    assert table.keys() == expected.keys()
    for key, p in expected.items():
        assert table[key] == pytest.approx(p, abs=1e-12)


def test_exact_distribution_rejects_errors():
    with pytest.raises(CircuitError):
        exact_distribution_statevector(inject_error_at(build_experiment(1), 0, 0, "X"))


def test_noiseless_statevector_n2_uniform_and_correct():
    shots = run_shots_statevector(build_experiment(2), None, 100_000)
    assert np.array_equal(shots.output_meas, (shots.a_meas < shots.b_meas).astype(int))
    assert not shots.ancilla_meas.any()
    pairs = np.bincount(shots.a_meas * 4 + shots.b_meas, minlength=16)
    assert chisquare(pairs).pvalue > 1e-3


def test_z_only_noise_statevector_matches_noiseless():
    circuit = build_experiment(3)
    model = NoiseModel(p1=0.01, p2=0.01, p3=0.01, pauli_weights=(0, 0, 1), seed=2)
    shots = run_shots_statevector(circuit, model, 100_000)
    exact = exact_distribution_statevector(circuit)
    assert aggregate(shots, 3).strict_rate == 1.0
    assert tv(empirical(shots), exact) < multinomial_tv_bound(exact, 100_000)


def test_x_noise_statevector_and_basis_agree_statistically():
    circuit = build_experiment(2)
    model = NoiseModel(p1=0.01, p2=0.02, p3=0.03, seed=4)
    sv = aggregate(run_shots_statevector(circuit, model, 40_000), 2)
    bp = aggregate(run_shots_basis(circuit, model, 40_000), 2)
    sigma = np.sqrt(2 * 0.25 / 40_000)
    assert abs(sv.strict_rate - bp.strict_rate) < 4 * sigma
    assert abs(sv.conventional_rate - bp.conventional_rate) < 4 * sigma


def test_statevector_guard():
    with pytest.raises(BackendError):
        run_shots_statevector(build_experiment(13), None, 1)


def test_auto_backend():
    assert resolve_backend(8, None) == "basis"
    assert resolve_backend(8, NoiseModel(p2=0.01)) == "statevector"
    assert resolve_backend(8, NoiseModel(p2=0.01, pauli_weights=(1, 0, 0))) == "basis"
    assert resolve_backend(20, NoiseModel(p2=0.01)) == "basis"
    assert len(run_shots(build_experiment(1), NoiseModel(p2=0.01), 50)) == 50


# -- deterministic fault injection -------------------------------------------


def test_inject_validates_arguments():
    c = build_experiment(1)
    for args in [(-1, 0, "X"), (len(c) + 1, 0, "X"), (0, 4, "X"), (0, 0, "W")]:
        with pytest.raises(CircuitError):
            inject_error_at(c, *args)
    assert inject_error_at(c, len(c), 0, "z").gates[-1].pauli == "Z"


def _all_input_records(circuit) -> list[ShotRecord]:
    n = circuit.n
    records = []
    for a in range(1 << n):
        for b in range(1 << n):
            bits = simulate_bits(circuit.gates, pack(n, a, b, 0, 0))
            records.append(ShotRecord(*unpack(n, bits)))
    return records


def test_x_on_ancilla_after_maj_chain_never_corrupts_result():
    # Exhaustive fault simulation: the error either surfaces on the ancilla
    # or is pushed into (a0, b0) where no criterion can see it.
    comparator = build_comparator(3)
    site = 3 + 3 * 3
    faulty = inject_error_at(comparator, site, comparator.layout.ancilla, "X")
    cats = [classify_shot(r) for r in _all_input_records(faulty)]
    assert OutcomeCategory.FAIL_RESULT not in cats and OutcomeCategory.FAIL_BOTH not in cats
    assert cats.count(OutcomeCategory.FAIL_ANCILLA) == 32
    assert cats.count(OutcomeCategory.ANCILLA_INCLUSIVE_SUCCESS) == 32

    # The statevector backend sees the same thing.
    start, stop = comparator_stages(3)["maj_chain"]
    experiment = inject_error_at(build_experiment(3), stop, comparator.layout.ancilla, "X")
    shots = run_shots_statevector(experiment, None, 20_000)
    report = aggregate(shots, 3)
    assert report.count(OutcomeCategory.FAIL_RESULT) == report.count(OutcomeCategory.FAIL_BOTH) == 0
    assert report.fraction(OutcomeCategory.FAIL_ANCILLA) == pytest.approx(0.5, abs=0.02)


def test_x_on_ancilla_at_the_end_always_fails_ancilla():
    c = build_experiment(3)
    shots = run_shots_basis(inject_error_at(c, len(c), c.layout.ancilla, "X"), None, 2000)
    assert aggregate(shots, 3).count(OutcomeCategory.FAIL_ANCILLA) == 2000


def test_x_on_output_after_copy_flips_every_result():
    c = build_experiment(3)
    _, stop = comparator_stages(3)["copy_out"]
    for site in (stop, len(c)):
        shots = run_shots_basis(inject_error_at(c, site, c.layout.output, "X"), None, 2000)
        assert aggregate(shots, 3).count(OutcomeCategory.FAIL_RESULT) == 2000


@given(st.data())
def test_single_z_injection_n2_unchanged(data):
    c = build_experiment(2)
    site = data.draw(st.integers(0, len(c)))
    qubit = data.draw(st.integers(0, c.num_qubits - 1))
    faulty = outcome_probabilities(inject_error_at(c, site, qubit, "Z"))
    assert np.allclose(faulty, exact_distribution_statevector(c), atol=1e-10, rtol=0)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_some_x_injection_changes_distribution(n):
    c = build_experiment(n)
    clean = exact_distribution_statevector(c)
    changed = [
        (site, q)
        for site in range(len(c) + 1)
        for q in range(c.num_qubits)
        if not np.allclose(outcome_probabilities(inject_error_at(c, site, q, "X")), clean, atol=1e-10)
    ]
    assert changed
