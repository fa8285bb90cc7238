"""Command-line entry point: ``qcomparator {synth,run,reproduce,verify}``.

Exit codes: 0 success, 1 verification/calibration failure, 2 usage or
configuration error.  Output directory defaults to ``$QCOMPARATOR_OUTPUT_DIR``
(or the working directory).
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

from . import analysis, ir
from .analysis import (
    HARDWARE_CONVENTIONAL,
    HARDWARE_STRICT,
    CalibrationError,
    OutcomeCategory,
    aggregate,
    calibrate_noise,
    comparator_counterexample,
)
from .qasm import export_qasm
from .simulator import MAX_STATEVECTOR_QUBITS, BackendError, NoiseModel, resolve_backend, run_shots
from .synth import build_comparator, build_experiment, lower_toffoli

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

OUTPUT_DIR_ENV = "QCOMPARATOR_OUTPUT_DIR"
RUN_SCHEMA = "qcomparator.run/v1"
REPRODUCE_SCHEMA = "qcomparator.reproduce/v1"
CSV_HEADER = ["n", "category", "count", "rate_conventional", "rate_strict", "ci_low", "ci_high"]
HARDWARE_NS = (3, 5, 7, 9)


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("; ".join(problems))


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV, "."))


def write_atomic(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def dump_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# -- run configuration ------------------------------------------------------


@dataclass
class RunConfig:
    n_values: list[int] = field(default_factory=lambda: list(HARDWARE_NS))
    shots: int = 100
    backend: str = "auto"
    noise: str = "none"  # none | fitted | custom
    p1: float = 0.0
    p2: float = 0.0
    p3: float = 0.0
    pauli_weights: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    readout_flip: float = 0.0
    p_idle: float = 0.0
    seed: int = 0
    output_path: Path | None = None
    format: str = "json"
    records: bool = True
    calibration_shots: int = 10_000

    def validate(self) -> None:
        problems = []
        if not self.n_values:
            problems.append("n_values: must list at least one bit width")
        problems += [f"n_values: bit width {n} must be >= 1" for n in self.n_values if n < 1]
        if self.shots < 1:
            problems.append(f"shots: must be >= 1, got {self.shots}")
        if self.backend not in ("auto", "basis", "statevector"):
            problems.append(f"backend: expected auto|basis|statevector, got {self.backend!r}")
        if self.noise not in ("none", "fitted", "custom"):
            problems.append(f"noise: expected none|fitted|custom, got {self.noise!r}")
        if self.format not in ("json", "csv"):
            problems.append(f"format: expected json|csv, got {self.format!r}")
        if self.calibration_shots < 10_000:
            problems.append("calibration_shots: must be >= 10000")
        if self.noise == "custom":
            try:
                self.noise_model()
            except ValueError as exc:
                problems.append(f"noise: {exc}")
        if self.backend == "statevector":
            problems += [
                f"backend: statevector needs 2n+2 <= {MAX_STATEVECTOR_QUBITS}, n={n} is too wide"
                for n in self.n_values
                if 2 * n + 2 > MAX_STATEVECTOR_QUBITS
            ]
        if problems:
            raise ConfigError(problems)

    def noise_model(self) -> NoiseModel | None:
        if self.noise == "none":
            return None
        return NoiseModel(
            p1=self.p1,
            p2=self.p2,
            p3=self.p3,
            pauli_weights=self.pauli_weights,
            readout_flip=self.readout_flip,
            p_idle=self.p_idle,
            seed=self.seed,
        )

    def echo(self) -> dict:
        return {
            "n_values": list(self.n_values),
            "shots": self.shots,
            "backend": self.backend,
            "noise": self.noise,
            "seed": self.seed,
            "format": self.format,
            "records": self.records,
        }


_FLOAT_KEYS = ("p1", "p2", "p3", "readout_flip", "p_idle")
_INT_KEYS = ("shots", "seed", "calibration_shots")
_STR_KEYS = ("backend", "noise", "format")


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.replace(",", " ").split()]


def load_config(path: Path) -> RunConfig:
    """Read ``key = value`` lines (``#`` comments) into a ``RunConfig``."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        text = Path(path).read_text(encoding="utf-8")
        parser.read_string("[run]\n" + text)
    except (OSError, configparser.Error) as exc:
        raise ConfigError([f"config file {path}: {exc}"]) from None

    config = RunConfig()
    problems = []
    for key, value in parser["run"].items():
        try:
            if key == "n_values":
                config.n_values = _int_list(value)
            elif key in _INT_KEYS:
                setattr(config, key, int(value))
            elif key in _FLOAT_KEYS:
                setattr(config, key, float(value))
            elif key in _STR_KEYS:
                setattr(config, key, value.strip())
            elif key == "pauli_weights":
                config.pauli_weights = tuple(float(t) for t in value.replace(",", " ").split())
            elif key == "output_path":
                config.output_path = Path(value.strip())
            elif key == "records":
                config.records = parser["run"].getboolean(key)
            else:
                problems.append(f"{key}: unknown field")
        except ValueError:
            problems.append(f"{key}: cannot parse {value!r}")
    if problems:
        raise ConfigError(problems)
    return config


def config_from_args(args: argparse.Namespace) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    overrides = {
        "n_values": args.n,
        "shots": args.shots,
        "backend": args.backend,
        "noise": args.noise,
        "p1": args.p1,
        "p2": args.p2,
        "p3": args.p3,
        "readout_flip": args.readout_flip,
        "p_idle": args.p_idle,
        "seed": args.seed,
        "output_path": args.out,
        "format": args.format,
        "calibration_shots": args.calibration_shots,
    }
    if args.pauli_weights is not None:
        overrides["pauli_weights"] = tuple(args.pauli_weights)
    if args.no_records:
        overrides["records"] = False
    config = replace(config, **{k: v for k, v in overrides.items() if v is not None})
    if config.output_path is None:
        config.output_path = default_output_dir() / f"run.{config.format}"
    config.validate()
    return config


# -- run --------------------------------------------------------------------


def execute_run(config: RunConfig) -> dict:
    """Simulate every configured bit width; returns the JSON-ready document."""
    calibration = None
    model = config.noise_model()
    if config.noise == "fitted":
        calibration = calibrate_noise(
            HARDWARE_CONVENTIONAL, NoiseModel(seed=config.seed), shots=config.calibration_shots
        )
        model = calibration.model

    reports, records = [], {}
    for n in config.n_values:
        circuit = build_experiment(n)
        backend = config.backend
        if backend == "auto":
            backend = resolve_backend(circuit.num_qubits, model)
        shots = run_shots(circuit, model, config.shots, backend)
        report = aggregate(shots, n).to_dict()
        report["backend"] = backend
        reports.append(report)
        if config.records:
            records[str(n)] = [
                [int(a), int(b), int(c), int(o)]
                for a, b, c, o in zip(shots.a_meas, shots.b_meas, shots.ancilla_meas, shots.output_meas)
            ]

    doc = {
        "schema": RUN_SCHEMA,
        "config": config.echo(),
        "noise_model": model.to_dict() if model else None,
        "calibration": calibration.to_dict() if calibration else None,
        "reports": reports,
    }
    if config.records:
        doc["records"] = records
    return doc


def reports_csv(reports: Sequence[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for rep in reports:
        for category in OutcomeCategory:
            count = rep["category_counts"][category.value]
            low, high = analysis.wilson_interval(count, rep["shots"])
            writer.writerow(
                [
                    rep["n"],
                    category.value,
                    count,
                    repr(rep["conventional_rate"]),
                    repr(rep["strict_rate"]),
                    repr(low),
                    repr(high),
                ]
            )
    return buf.getvalue()


def records_csv(records: dict[str, list[list[int]]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["n", "a_meas", "b_meas", "ancilla_meas", "output_meas"])
    for n, rows in records.items():
        for row in rows:
            writer.writerow([n, *row])
    return buf.getvalue()


def cmd_run(args: argparse.Namespace) -> int:
    try:
        config = config_from_args(args)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_USAGE
    try:
        doc = execute_run(config)
    except CalibrationError as exc:
        print(f"calibration failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    out = Path(config.output_path)
    if config.format == "json":
        write_atomic(out, dump_json(doc))
    else:
        write_atomic(out, reports_csv(doc["reports"]))
        if config.records:
            write_atomic(out.with_suffix(".records.csv"), records_csv(doc["records"]))
    for rep in doc["reports"]:
        print(
            f"n={rep['n']}: conventional={rep['conventional_rate']:.4f} "
            f"strict={rep['strict_rate']:.4f} ({rep['shots']} shots, {rep['backend']})",
            file=sys.stderr,
        )
    print(f"wrote {out}", file=sys.stderr)
    return EXIT_OK


# -- reproduce --------------------------------------------------------------


def execute_reproduce(shots: int, seed: int, calibration_shots: int = 10_000) -> dict:
    calibration = calibrate_noise(
        HARDWARE_CONVENTIONAL, NoiseModel(seed=seed), shots=calibration_shots, check=False
    )
    reports = [aggregate(run_shots(build_experiment(n), calibration.model, shots, "basis"), n) for n in HARDWARE_NS]
    ns = [r.n for r in reports]
    conv = [r.conventional_rate for r in reports]
    strict = [r.strict_rate for r in reports]
    largest = reports[-1]
    dominant = largest.dominant_failure()
    findings = {
        "strict_below_conventional": all(s < c for s, c in zip(strict, conv)),
        "conventional_slope": analysis.slope(ns, conv),
        "strict_slope": analysis.slope(ns, strict),
        "ancilla_dominates_at_largest_n": dominant is OutcomeCategory.FAIL_ANCILLA,
        "dominant_failure_at_largest_n": dominant.value if dominant else None,
        "hardware_reports_ancilla_dominance": True,
    }
    findings["strict_falls_faster"] = findings["strict_slope"] < findings["conventional_slope"]
    return {
        "schema": REPRODUCE_SCHEMA,
        "shots": shots,
        "seed": seed,
        "calibration": calibration.to_dict(),
        "reports": [r.to_dict() for r in reports],
        "findings": findings,
    }


def fig3_csv(doc: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["n", "shots", "rate_conventional", "ci_low", "ci_high", "hardware_rate", "residual"])
    for rep in doc["reports"]:
        target = HARDWARE_CONVENTIONAL[rep["n"]]
        low, high = rep["conventional_ci"]
        rate = rep["conventional_rate"]
        writer.writerow([rep["n"], rep["shots"], repr(rate), repr(low), repr(high), target, repr(rate - target)])
    return buf.getvalue()


def fig4_csv(doc: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["n", "category", "count", "fraction", "ci_low", "ci_high", "hardware_strict_rate"])
    for rep in doc["reports"]:
        for category in OutcomeCategory:
            count = rep["category_counts"][category.value]
            low, high = analysis.wilson_interval(count, rep["shots"])
            writer.writerow(
                [rep["n"], category.value, count, repr(count / rep["shots"]), repr(low), repr(high), HARDWARE_STRICT[rep["n"]]]
            )
    return buf.getvalue()


def write_reproduce_outputs(doc: dict, out_dir: Path) -> None:
    write_atomic(out_dir / "fig3_conventional.csv", fig3_csv(doc))
    write_atomic(out_dir / "fig4_categories.csv", fig4_csv(doc))
    write_atomic(out_dir / "reproduce.json", dump_json(doc))


def cmd_reproduce(args: argparse.Namespace) -> int:
    if args.shots < 1:
        print("usage error: --shots must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    if args.calibration_shots < 10_000:
        print("usage error: --calibration-shots must be >= 10000", file=sys.stderr)
        return EXIT_USAGE
    doc = execute_reproduce(args.shots, args.seed, args.calibration_shots)
    write_reproduce_outputs(doc, Path(args.out_dir) if args.out_dir else default_output_dir())

    cal = doc["calibration"]
    print(f"fitted p2={cal['p2']:.6g} max residual={cal['max_residual']:.4f}", file=sys.stderr)
    for rep in doc["reports"]:
        print(
            f"n={rep['n']}: conventional={rep['conventional_rate']:.4f} "
            f"(hardware {HARDWARE_CONVENTIONAL[rep['n']]:.2f}) strict={rep['strict_rate']:.4f} "
            f"(hardware {HARDWARE_STRICT[rep['n']]:.2f}) dominant failure={rep['dominant_failure']}",
            file=sys.stderr,
        )
    if not cal["converged"]:
        print(f"calibration failed: residuals {cal['residuals']}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


# -- synth / verify ---------------------------------------------------------


def cmd_synth(args: argparse.Namespace) -> int:
    circuit = build_comparator(args.n)
    if args.lower:
        circuit = lower_toffoli(circuit)
    text = export_qasm(circuit)
    m = ir.metrics(circuit)
    counts = " ".join(f"{k}={v}" for k, v in m.counts.items() if v)
    print(f"qubits={m.num_qubits} depth={m.depth} {counts}", file=sys.stderr)
    if args.out is None:
        sys.stdout.write(text)
        return EXIT_OK
    try:
        write_atomic(Path(args.out), text)
    except OSError as exc:
        print(f"cannot write {args.out}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    failed = False
    for n in range(1, args.n_max + 1):
        circuit = build_comparator(n)
        if args.drop_gate is not None:
            gates = list(circuit.gates)
            del gates[args.drop_gate % len(gates)]
            circuit = circuit.with_gates(gates)
        exhaustive = n <= args.exhaustive_max
        samples = None if exhaustive else args.samples
        bad = comparator_counterexample(circuit, samples, seed=args.seed)
        mode = f"exhaustive {1 << (2 * n + 1)} inputs" if exhaustive else f"random {samples} inputs"
        if bad is None:
            print(f"n={n}: PASS ({mode})")
        else:
            failed = True
            print(f"n={n}: FAIL ({mode}) counterexample {bad}")
    return EXIT_FAILURE if failed else EXIT_OK


# -- argument parsing -------------------------------------------------------


def _bit_width(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"bit width must be >= 1, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qcomparator", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="emit the comparator circuit as QASM-style text")
    p.add_argument("n", type=_bit_width)
    p.add_argument("--lower", action="store_true", help="decompose Toffolis into CNOT/H/T")
    p.add_argument("--out", type=Path, help="output file (default: stdout)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("run", help="simulate the experiment and score the shots")
    p.add_argument("--config", type=Path, help="key = value configuration file")
    p.add_argument("--n", type=_bit_width, nargs="+", help="bit widths (default 3 5 7 9)")
    p.add_argument("--shots", type=int)
    p.add_argument("--backend", choices=["auto", "basis", "statevector"])
    p.add_argument("--noise", choices=["none", "fitted", "custom"])
    p.add_argument("--p1", type=float)
    p.add_argument("--p2", type=float)
    p.add_argument("--p3", type=float)
    p.add_argument("--readout-flip", type=float)
    p.add_argument("--p-idle", type=float)
    p.add_argument("--pauli-weights", type=float, nargs=3, metavar=("WX", "WY", "WZ"))
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path)
    p.add_argument("--format", choices=["json", "csv"])
    p.add_argument("--calibration-shots", type=int)
    p.add_argument("--no-records", action="store_true", help="omit the raw shot table")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("reproduce", help="calibrate noise and emit the figure tables")
    p.add_argument("--shots", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--calibration-shots", type=int, default=10_000)
    p.add_argument("--out-dir", type=Path)
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("verify", help="check the comparator against the a<b oracle")
    p.add_argument("--n-max", type=_bit_width, default=9)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--exhaustive-max", type=int, default=5, help=argparse.SUPPRESS)
    p.add_argument("--seed", type=int, default=0)
    # Mutation-testing hook: delete one gate before verifying.
    p.add_argument("--drop-gate", type=int, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
