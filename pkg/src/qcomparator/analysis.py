"""Outcome classification, success statistics and noise calibration."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

import numpy as np
from scipy.stats import binomtest

from .ir import RegisterLayout
from .simulator import NoiseModel, ShotRecord, Shots, run_shots_basis
from .synth import build_experiment

CONVENTIONAL_BASELINE = 0.5
STRICT_BASELINE = 0.25

# Reported hardware rates per bit width (100 shots each).
HARDWARE_CONVENTIONAL = {3: 0.98, 5: 0.97, 7: 0.97, 9: 0.95}
HARDWARE_STRICT = {3: 0.95, 5: 0.92, 7: 0.89, 9: 0.69}


class OutcomeCategory(str, enum.Enum):
    ANCILLA_INCLUSIVE_SUCCESS = "ancilla_inclusive_success"
    FAIL_RESULT = "fail_result"
    FAIL_ANCILLA = "fail_ancilla"
    FAIL_BOTH = "fail_both"


FAILURE_CATEGORIES = (
    OutcomeCategory.FAIL_RESULT,
    OutcomeCategory.FAIL_ANCILLA,
    OutcomeCategory.FAIL_BOTH,
)


def oracle_f(a: int, b: int) -> int:
    return int(a < b)


def _category(output_ok: bool, ancilla_ok: bool) -> OutcomeCategory:
    if output_ok:
        return (
            OutcomeCategory.ANCILLA_INCLUSIVE_SUCCESS if ancilla_ok else OutcomeCategory.FAIL_ANCILLA
        )
    return OutcomeCategory.FAIL_RESULT if ancilla_ok else OutcomeCategory.FAIL_BOTH


def classify_shot(record: ShotRecord) -> OutcomeCategory:
    output_ok = record.output_meas == oracle_f(record.a_meas, record.b_meas)
    return _category(output_ok, record.ancilla_meas == 0)


def category_codes(shots: Shots) -> np.ndarray:
    """Vectorised ``classify_shot``: 0 success, 1 fail result, 2 fail ancilla, 3 fail both."""
    output_bad = shots.output_meas != (shots.a_meas < shots.b_meas)
    ancilla_bad = shots.ancilla_meas != 0
    return np.where(output_bad, np.where(ancilla_bad, 3, 1), np.where(ancilla_bad, 2, 0))


_CODE_ORDER = (
    OutcomeCategory.ANCILLA_INCLUSIVE_SUCCESS,
    OutcomeCategory.FAIL_RESULT,
    OutcomeCategory.FAIL_ANCILLA,
    OutcomeCategory.FAIL_BOTH,
)


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    ci = binomtest(int(successes), int(trials)).proportion_ci(confidence, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass(frozen=True)
class SuccessReport:
    n: int
    shots: int
    category_counts: dict[OutcomeCategory, int]
    conventional_rate: float
    strict_rate: float
    conventional_ci: tuple[float, float]
    strict_ci: tuple[float, float]
    baselines: dict[str, float] = field(
        default_factory=lambda: {"conventional": CONVENTIONAL_BASELINE, "strict": STRICT_BASELINE}
    )

    def count(self, category: OutcomeCategory) -> int:
        return self.category_counts[category]

    def fraction(self, category: OutcomeCategory) -> float:
        return self.category_counts[category] / self.shots

    def dominant_failure(self) -> OutcomeCategory | None:
        """Most frequent failure category; ties go to the earlier of result/ancilla/both."""
        best = max(FAILURE_CATEGORIES, key=lambda c: self.category_counts[c])
        return best if self.category_counts[best] > 0 else None

    def to_dict(self) -> dict:
        dominant = self.dominant_failure()
        return {
            "n": self.n,
            "shots": self.shots,
            "category_counts": {c.value: self.category_counts[c] for c in OutcomeCategory},
            "conventional_rate": self.conventional_rate,
            "strict_rate": self.strict_rate,
            "conventional_ci": list(self.conventional_ci),
            "strict_ci": list(self.strict_ci),
            "baselines": dict(self.baselines),
            "dominant_failure": dominant.value if dominant else None,
        }


def _as_shots(records: Shots | Iterable[ShotRecord], n: int) -> Shots:
    if isinstance(records, Shots):
        if records.n != n:
            raise ValueError(f"records are for n={records.n}, not n={n}")
        return records
    layout = RegisterLayout(n)
    bits = [
        r.a_meas | (r.b_meas << n) | (r.ancilla_meas << layout.ancilla) | (r.output_meas << layout.output)
        for r in records
    ]
    return Shots(layout, np.array(bits, dtype=np.uint64))


def aggregate(records: Shots | Iterable[ShotRecord], n: int) -> SuccessReport:
    shots = _as_shots(records, n)
    total = len(shots)
    if total == 0:
        raise ValueError("cannot aggregate an empty shot list")
    tally = np.bincount(category_codes(shots), minlength=4)
    counts = {cat: int(tally[i]) for i, cat in enumerate(_CODE_ORDER)}
    strict = counts[OutcomeCategory.ANCILLA_INCLUSIVE_SUCCESS]
    conventional = strict + counts[OutcomeCategory.FAIL_ANCILLA]
    return SuccessReport(
        n=n,
        shots=total,
        category_counts=counts,
        conventional_rate=conventional / total,
        strict_rate=strict / total,
        conventional_ci=wilson_interval(conventional, total),
        strict_ci=wilson_interval(strict, total),
    )


def random_shots(n: int, size: int, seed: int = 0) -> Shots:
    """Uniformly random measured bitstrings, the no-information baseline."""
    layout = RegisterLayout(n)
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 1 << layout.num_qubits, size=size, dtype=np.uint64)
    return Shots(layout, bits)


# -- calibration ------------------------------------------------------------


class CalibrationError(RuntimeError):
    def __init__(self, result: CalibrationResult):
        self.result = result
        super().__init__(
            f"calibration did not reach max residual {result.threshold} "
            f"(best p2={result.p2:.6g}, residuals={result.residuals})"
        )


@dataclass(frozen=True)
class CalibrationResult:
    model: NoiseModel
    p2: float
    rates: dict[int, float]
    residuals: dict[int, float]
    threshold: float
    evaluations: int

    @property
    def max_residual(self) -> float:
        return max(abs(r) for r in self.residuals.values())

    @property
    def converged(self) -> bool:
        return self.max_residual < self.threshold

    def to_dict(self) -> dict:
        return {
            "p2": self.p2,
            "model": self.model.to_dict(),
            "rates": {str(n): r for n, r in self.rates.items()},
            "residuals": {str(n): r for n, r in self.residuals.items()},
            "max_residual": self.max_residual,
            "threshold": self.threshold,
            "converged": self.converged,
            "evaluations": self.evaluations,
        }


def conventional_rate(n: int, model: NoiseModel, shots: int) -> float:
    return aggregate(run_shots_basis(build_experiment(n), model, shots), n).conventional_rate


def calibrate_noise(
    targets: Mapping[int, float],
    model_shape: NoiseModel | None = None,
    *,
    shots: int = 10_000,
    grid: Iterable[float] | None = None,
    refine_steps: int = 12,
    threshold: float = 0.02,
    shape: Callable[[float, NoiseModel], NoiseModel] | None = None,
    check: bool = True,
) -> CalibrationResult:
    """Fit the single free rate ``p2`` so simulated conventional rates match ``targets``.

    Every candidate reuses the seed of ``model_shape``, so the objective is
    evaluated with common random numbers and is monotone in ``p2`` shot by
    shot.  The grid minimum is refined by repeated halving of the bracket
    around it.  Ties go to the smaller ``p2``.
    """
    if not targets:
        raise ValueError("calibration needs at least one target rate")
    for n, rate in targets.items():
        if not 0.0 < rate <= 1.0:
            raise ValueError(f"target rate for n={n} must lie in (0, 1], got {rate}")
    if shots < 10_000:
        raise ValueError("calibration uses at least 10^4 shots per bit width")
    base = model_shape or NoiseModel()
    make = shape or (lambda p2, b: NoiseModel.one_parameter(p2, b))
    grid = sorted(set(float(p) for p in (grid if grid is not None else np.linspace(0, 0.02, 41))))

    cache: dict[float, tuple[float, dict[int, float]]] = {}

    def loss(p2: float) -> float:
        if p2 not in cache:
            model = make(p2, base)
            rates = {n: conventional_rate(n, model, shots) for n in sorted(targets)}
            cache[p2] = (sum((rates[n] - targets[n]) ** 2 for n in targets), rates)
        return cache[p2][0]

    def best() -> float:
        return min(cache, key=lambda p: (cache[p][0], p))

    for p in grid:
        loss(p)
    k = grid.index(best())
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, len(grid) - 1)]
    for _ in range(refine_steps):
        centre = best()
        left, right = (lo + centre) / 2, (centre + hi) / 2
        loss(left)
        loss(right)
        nxt = best()
        # Halve the bracket around whichever point is now best.
        width = (hi - lo) / 4
        lo, hi = max(nxt - width, lo), min(nxt + width, hi)
        if hi - lo < 1e-9:
            break

    p2 = best()
    rates = cache[p2][1]
    result = CalibrationResult(
        model=make(p2, base),
        p2=p2,
        rates=rates,
        residuals={n: rates[n] - targets[n] for n in sorted(targets)},
        threshold=threshold,
        evaluations=len(cache),
    )
    if check and not result.converged:
        raise CalibrationError(result)
    return result


def slope(xs: Iterable[float], ys: Iterable[float]) -> float:
    """Least-squares slope of ``ys`` against ``xs``."""
    return float(np.polyfit(np.asarray(list(xs), float), np.asarray(list(ys), float), 1)[0])


def r_squared(xs: Iterable[float], ys: Iterable[float]) -> float:
    x = np.asarray(list(xs), float)
    y = np.asarray(list(ys), float)
    fit = np.polyval(np.polyfit(x, y, 1), x)
    ss_res = float(np.sum((y - fit) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    return 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot


def binomial_sigma(p: float, trials: int) -> float:
    return math.sqrt(p * (1 - p) / trials)


# -- functional verification ------------------------------------------------


@dataclass(frozen=True)
class Counterexample:
    n: int
    a: int
    b: int
    c: int
    detail: str

    def __str__(self) -> str:
        return f"(n={self.n}, a={self.a}, b={self.b}, c={self.c}): {self.detail}"


def comparator_inputs(n: int, samples: int | None = None, seed: int = 0) -> tuple[np.ndarray, ...]:
    """All ``(a, b, c)`` triples, or ``samples`` uniform random ones."""
    if samples is None:
        idx = np.arange(1 << (2 * n + 1), dtype=np.int64)
        return idx & ((1 << n) - 1), (idx >> n) & ((1 << n) - 1), idx >> (2 * n)
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(n,)))
    return (
        rng.integers(0, 1 << n, size=samples),
        rng.integers(0, 1 << n, size=samples),
        rng.integers(0, 2, size=samples),
    )


def comparator_counterexample(
    circuit, samples: int | None = None, seed: int = 0
) -> Counterexample | None:
    """First basis input on which ``circuit`` breaks ``|a,b,0,c> -> |a,b,0,c^[a<b]>``."""
    from .simulator import evolve_basis_states

    layout = circuit.layout
    n = layout.n
    a, b, c = comparator_inputs(n, samples, seed)
    start = (a | (b << n) | (c << layout.output)).astype(np.uint64)
    shots = Shots(layout, evolve_basis_states(circuit, start))
    expected_out = c ^ (a < b)
    checks = (
        ("a register not restored", shots.a_meas != a),
        ("b register not restored", shots.b_meas != b),
        ("ancilla not returned to 0", shots.ancilla_meas != 0),
        ("output is not c xor [a<b]", shots.output_meas != expected_out),
    )
    bad = np.zeros(len(a), dtype=bool)
    for _, mask in checks:
        bad |= mask
    if not bad.any():
        return None
    i = int(np.flatnonzero(bad)[0])
    detail = "; ".join(msg for msg, mask in checks if mask[i])
    return Counterexample(n, int(a[i]), int(b[i]), int(c[i]), detail)
