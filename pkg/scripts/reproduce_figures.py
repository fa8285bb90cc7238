"""Calibrate the one-parameter noise model and tabulate the four outcome categories.

Writes the same CSV/JSON artefacts as ``qcomparator reproduce`` and prints a
small table to stdout.
"""
import argparse
from pathlib import Path

from qcomparator.cli import execute_reproduce, write_reproduce_outputs


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--shots", type=int, default=100_000)
    parser.add_argument("--calibration-shots", type=int, default=10_000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out-dir", type=Path, default=Path("results"))
    args = parser.parse_args()

    doc = execute_reproduce(args.shots, args.seed, args.calibration_shots)
    write_reproduce_outputs(doc, args.out_dir)
    print(f"fitted p2 = {doc['calibration']['p2']:.5f}")
    print("n  conventional  strict   dominant failure")
    for report in doc["reports"]:
        print(f"{report['n']:<2} {report['conventional_rate']:>12.4f} {report['strict_rate']:>7.4f}   {report['dominant_failure']}")
    for key, value in doc["findings"].items():
        print(f"{key}: {value}")


if __name__ == "__main__":
    main()
