"""Stability sweep for the Volterra perturbation family.

Runs the weak-comparison harness, the regular-convergence check, the
uniformity diagnostic across refinement steps, and the four-term bound sweep
over every (refinement level, family member) pair.  Writes the same CSVs the
``stability`` CLI subcommand produces.
"""

import argparse
from pathlib import Path

from nestfactor import (
    gap_term_sweep,
    regular_convergence_check,
    stability_harness,
    standard_nest,
    uniformity_diagnostic,
    volterra_family,
)
from nestfactor.serialize import STABILITY_HEADER, convergence_rows, write_csv

GAP_HEADER = ["range", "alpha", "max_pairing", "term1", "term2", "term3",
              "term4", "bound_margin"]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--kappa", type=float, default=0.3, help="kernel weight")
    ap.add_argument("--n", type=int, default=128, help="grid size")
    ap.add_argument("--schedule", type=int, default=5, help="refinement count")
    ap.add_argument("--alphas", type=float, nargs="+",
                    default=[2.0, 4.0, 8.0, 16.0, 32.0, 64.0],
                    help="family parameters, ascending")
    ap.add_argument("--out", default="out/stability_sweep", help="output directory")
    args = ap.parse_args()

    fam = volterra_family(args.kappa, args.alphas, args.n)
    nest = standard_nest(args.n)

    harness = stability_harness(fam, nest, args.schedule)
    print(f"harness: {harness.verdict}"
          + (f" ({harness.failure})" if harness.failure else ""))
    print(f"{'alpha':>8} {'sqrt gap':>11} {'proj gap':>11} {'pairing':>11} "
          f"{'margin':>11}")
    for r in harness.rows:
        print(f"{r.alpha:>8g} {r.op_defect:>11.3e} {r.proj_defect:>11.3e} "
              f"{r.max_pairing:>11.3e} {r.bound_margin:>11.1e}")

    reg = regular_convergence_check(fam, nest)
    print(f"regular convergence: {reg.verdict}"
          + (f" ({reg.failure})" if reg.failure else ""))

    uni = uniformity_diagnostic(fam, nest, args.schedule)
    sup = uni.max(axis=0)
    print("uniformity sup per refinement step: "
          + "  ".join(f"{v:.3e}" for v in sup))

    sweep = gap_term_sweep(fam, nest, args.schedule)
    worst_margin = min(row[-1] for row in sweep)
    print(f"gap-term sweep: {len(sweep)} rows, worst bound margin "
          f"{worst_margin:.1e}")

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    write_csv(outdir / "stability.csv", STABILITY_HEADER, convergence_rows(harness))
    uni_rows = [[alpha] + list(row) for alpha, row in zip(fam.alphas, uni)]
    uni_rows.append(["sup"] + list(sup))
    write_csv(outdir / "uniformity.csv",
              ["alpha"] + [f"step{j + 1}" for j in range(uni.shape[1])], uni_rows)
    write_csv(outdir / "gap_terms.csv", GAP_HEADER, sweep)
    print(f"wrote stability.csv, uniformity.csv, gap_terms.csv under {outdir}")


if __name__ == "__main__":
    main()
