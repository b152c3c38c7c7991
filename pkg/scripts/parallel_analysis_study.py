"""Retained-component counts from parallel analysis over seeded synthetic data sets."""

from __future__ import annotations

import argparse
from collections import Counter

from tolerance_index.studies import parallel_analysis_study, population_pa_check

from _common import write_result


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repetitions", type=int, default=100)
    parser.add_argument("--n", type=int, default=1696)
    parser.add_argument("--replications", type=int, default=1000)
    parser.add_argument("--out", default="results")
    args = parser.parse_args()
    model = parallel_analysis_study(args.repetitions, args.n, False, args.replications)
    noise = parallel_analysis_study(args.repetitions, args.n, True, args.replications)
    population = population_pa_check(args.n, args.replications)
    print("model data retained:", dict(sorted(Counter(model).items())))
    print("noise data retained:", dict(sorted(Counter(noise).items())))
    print("population eigenvalues:", [round(v, 3) for v in population["population_eigenvalues"][:4]])
    print("thresholds:            ", [round(v, 3) for v in population["thresholds"][:4]])
    write_result(
        args.out,
        "parallel_analysis.json",
        {"n": args.n, "model_counts": model, "noise_counts": noise, **population},
    )


if __name__ == "__main__":
    main()
