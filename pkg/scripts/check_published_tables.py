"""Cross-check the published loading and variance tables against each other."""

from __future__ import annotations

import argparse

import pandas as pd

from tolerance_index.studies import table_consistency

from _common import write_result


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results")
    args = parser.parse_args()
    rows = table_consistency()
    frame = pd.DataFrame(rows)
    with pd.option_context("display.width", 200, "display.max_columns", 20):
        print(frame[["indicator", "std_diff", "unstd_sq_rel_diff", "r2_diff", "mc_diff", "mc2_equals_r2"]])
    write_result(args.out, "published_tables.json", rows)


if __name__ == "__main__":
    main()
