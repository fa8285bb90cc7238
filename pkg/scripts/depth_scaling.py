"""Print qubits, gate counts and depth of the comparator for a range of widths."""
import argparse

from qcomparator.analysis import r_squared, slope
from qcomparator.ir import GateKind, metrics
from qcomparator.synth import build_comparator, lower_toffoli


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n-max", type=int, default=16)
    parser.add_argument("--lower", action="store_true", help="count after Toffoli decomposition")
    args = parser.parse_args()

    ns, depths = [], []
    print("n  qubits  toffoli  cnot  depth")
    for n in range(1, args.n_max + 1):
        circuit = build_comparator(n)
        if args.lower:
            circuit = lower_toffoli(circuit)
        m = metrics(circuit)
        ns.append(n)
        depths.append(m.depth)
        print(f"{n:<2} {m.num_qubits:>6} {m.count(GateKind.TOFFOLI):>8} {m.count(GateKind.CNOT):>5} {m.depth:>6}")
    if len(ns) > 1:
        print(f"depth ~ {slope(ns, depths):.3f} n, R^2 = {r_squared(ns, depths):.6f}")


if __name__ == "__main__":
    main()
