"""Monte Carlo check of the probit average marginal effect in a two-arm design."""

from __future__ import annotations

import argparse

from tolerance_index.studies import coverage, intercept_only_probit_error, summarize, two_arm_run

from _common import write_result


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--runs", type=int, default=100)
    parser.add_argument("--ame", type=float, default=-0.05)
    parser.add_argument("--out", default="results")
    args = parser.parse_args()
    ames = [two_arm_run(seed, args.ame) for seed in range(args.runs)]
    hits, mc_se = coverage(ames, args.ame)
    err = intercept_only_probit_error()
    print(f"AME {hits}/{args.runs} within 2 MC SE (mean {sum(ames) / len(ames):.4f}, MC SE {mc_se:.4f})")
    print(f"intercept-only probit error {err:.2e}")
    write_result(
        args.out,
        "information_treatment.json",
        {"target": args.ame, "within_2_mc_se": hits, "mc_se": mc_se, **summarize(ames), "ames": ames,
         "intercept_only_error": err},
    )


if __name__ == "__main__":
    main()
