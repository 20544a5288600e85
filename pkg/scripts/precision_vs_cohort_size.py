"""Simulated precision against cohort size, next to the expected-cell baseline.

Shows the 1/sqrt(n) shrinkage of the expected CI and how far the naive
single-cross-table interval sits from the simulation average at small n.

    python scripts/precision_vs_cohort_size.py scenarios/leaky_reference.json \
        --sizes 500 1000 2000 4000 8000 --n-sim 2000 --seed 7
"""
import argparse
import csv
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from vekit.measures import Comparison
from vekit.samplesize import (
    DesignSpec,
    StudyDesign,
    expected_cell_precision,
    simulate_precision,
)
from vekit.scenario import load_document, to_scenario


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("scenario", type=Path)
    parser.add_argument("--variant", type=int, default=1)
    parser.add_argument("--vaccine", default="m")
    parser.add_argument("--sizes", type=int, nargs="+", default=[500, 1000, 2000, 4000, 8000])
    parser.add_argument("--n-sim", type=int, default=2000)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--out", type=Path, default=None)
    args = parser.parse_args()

    scenario = to_scenario(load_document(args.scenario.read_text()))
    joint = scenario.joint()
    comparison = Comparison.variant_specific(args.variant, args.vaccine)

    handle = open(args.out, "w", newline="") if args.out else sys.stdout
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(
        ["n", "sim_mean", "sim_lower", "sim_upper", "cell_lower", "cell_upper", "n_degenerate"]
    )
    for n in args.sizes:
        spec = DesignSpec(StudyDesign.COHORT_CRR, n=n)
        sim = simulate_precision(
            spec, joint, comparison, n_sim=args.n_sim, seed=args.seed,
            rates=scenario.rates, actions=scenario.actions(),
        )
        cell = expected_cell_precision(spec, joint, comparison)
        writer.writerow(
            [
                n,
                sim.estimate_mean,
                sim.expected_ci[0],
                sim.expected_ci[1],
                cell.lower,
                cell.upper,
                sim.n_degenerate,
            ]
        )
    if args.out:
        handle.close()


if __name__ == "__main__":
    main()
