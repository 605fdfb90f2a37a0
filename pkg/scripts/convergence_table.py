"""Max |F_N - F| over a beta grid as the truncation N grows.

    python3 scripts/convergence_table.py --matrix 11,10 --kind power --order 2 --p 0.3 --N 4 6 8 12 16
"""

import argparse
import sys

import numpy as np

from treeldp import matrix_tree as mt
from treeldp.free_energy import ClosedFormFreeEnergy, FiniteFreeEnergy
from treeldp.ising_blocks import ModelSpec


def parse_matrix(text: str) -> mt.TransitionMatrix:
    return mt.validate([[int(c) for c in row] for row in text.split(",")])


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--matrix", default="11,10", help="rows of M, comma separated (default golden mean)")
    ap.add_argument("--kind", choices=["power", "linear"], default="power")
    ap.add_argument("--order", type=int, default=2, help="alpha or q")
    ap.add_argument("--p", type=float, default=0.5)
    ap.add_argument("--N", type=int, nargs="+", default=[2, 4, 6, 8, 10, 12, 16])
    ap.add_argument("--beta-max", type=float, default=2.0)
    args = ap.parse_args(argv)

    M = parse_matrix(args.matrix)
    model = ModelSpec(args.kind, args.order, args.p)
    gamma = mt.check_growth_condition(M)
    betas = np.linspace(-args.beta_max, args.beta_max, 81)
    closed = ClosedFormFreeEnergy(model, gamma).value(betas)

    out = sys.stdout
    out.write(f"# {model.kind} {model.label} p={args.p} gamma={gamma:.12f} coefficient={model.coefficient(gamma):.12f}\n")
    out.write("N,top_level,blocks,max_abs_err,err_at_beta_max\n")
    for N in args.N:
        F = FiniteFreeEnergy(model, M, N, check_growth=False)
        v = F.value(betas)
        err = np.abs(v - closed)
        out.write(f"{N},{F.layout.top_level},{len(F.layout.log_weights)},{err.max():.6e},{err[-1]:.6e}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
