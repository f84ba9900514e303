"""Reproduce the projection-escape family.

The members converge to the limit in norm at rate 2/n, yet the projections
onto the transformed subspace stay away from the limit projection: the
defect at the first basis vector tends to one.  The regular-convergence
check must therefore fail, and the measured projections must match the
closed forms.
"""

import argparse
from pathlib import Path

import numpy as np

from nestfactor import (
    counterexample_family,
    counterexample_instance,
    op_norm,
    range_projection,
    regular_convergence_check,
)
from nestfactor.serialize import write_csv


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-max", type=int, default=32, help="largest member index")
    ap.add_argument("--trunc", type=int, default=64, help="truncation dimension")
    ap.add_argument("--out", default="out/counterexample", help="output directory")
    args = ap.parse_args()

    n_values = []
    n = 2
    while n <= args.n_max:
        n_values.append(n)
        n *= 2

    print(f"{'n':>4} {'op gap':>10} {'2/n':>10} {'proj gap':>10} "
          f"{'closed':>10} {'agreement':>11}")
    rows = []
    for n in n_values:
        inst = counterexample_instance(n, args.trunc)
        measured = range_projection(inst.w_n, inst.m)
        agreement = op_norm(measured.matrix - inst.p_n.matrix)
        phi1 = np.zeros(args.trunc)
        phi1[0] = 1.0
        proj_gap = float(np.linalg.norm((measured.matrix - inst.p.matrix) @ phi1))
        closed = float(np.sqrt(1.0 - 1.0 / (1.0 + n * n / 4.0)))
        op_gap = op_norm(inst.w_n - inst.w)
        print(f"{n:>4} {op_gap:>10.3e} {2.0 / n:>10.3e} {proj_gap:>10.6f} "
              f"{closed:>10.6f} {agreement:>11.3e}")
        rows.append([n, op_gap, 2.0 / n, proj_gap, closed, agreement])

    fam, nest = counterexample_family(n_values, args.trunc)
    reg = regular_convergence_check(fam, nest)
    print(f"regular convergence: {reg.verdict}"
          + (f" ({reg.failure})" if reg.failure else ""))

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    write_csv(outdir / "counterexample.csv",
              ["n", "op_gap", "op_gap_bound", "proj_gap", "proj_gap_closed",
               "projection_agreement"], rows)
    print(f"wrote {outdir / 'counterexample.csv'}")


if __name__ == "__main__":
    main()
