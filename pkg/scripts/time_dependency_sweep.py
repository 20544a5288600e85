"""Sweep VE(t) for every measure kind over a scenario and write a CSV.

Useful for eyeballing how much a chosen measure drifts over the study
window before committing to a design.

    python scripts/time_dependency_sweep.py scenarios/leaky_reference.json \
        --variant 1 --vaccine m --t-stop 10 --out curves.csv
"""
import argparse
import csv
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from vekit.api import curve_result, make_grid
from vekit.scenario import ComparisonDoc, load_document


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("scenario", type=Path)
    parser.add_argument("--variant", type=int, default=1)
    parser.add_argument("--vaccine", default="m")
    parser.add_argument("--t-start", type=float, default=0.05)
    parser.add_argument("--t-stop", type=float, default=10.0)
    parser.add_argument("--points", type=int, default=100)
    parser.add_argument("--out", type=Path, default=None)
    args = parser.parse_args()

    doc = load_document(args.scenario.read_text())
    comparison = ComparisonDoc(
        type="variant_specific", variant=args.variant, vaccine=args.vaccine
    )
    grid = make_grid(args.t_start, args.t_stop, args.points)

    handle = open(args.out, "w", newline="") if args.out else sys.stdout
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(["t", "irr", "crr", "or"])
    bodies = {
        kind: curve_result(doc, kind, comparison, grid) for kind in ("irr", "crr", "or")
    }
    for k, t in enumerate(grid):
        writer.writerow(
            [t, bodies["irr"]["values"][k], bodies["crr"]["values"][k], bodies["or"]["values"][k]]
        )
    for kind, body in bodies.items():
        print(
            f"# {kind}: spread {body['spread']:.3e}"
            f"{' (time-invariant)' if body['time_invariant'] else ''}",
            file=sys.stderr,
        )
    if args.out:
        handle.close()


if __name__ == "__main__":
    main()
