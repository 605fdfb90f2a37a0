"""Tabulate the rate function I(x) across the effective domain, with the kink-induced flat stretch for p != 1/2.

    python3 scripts/rate_curve.py --p 0.2 --gamma 2 --points 41
"""

import argparse
import sys

import numpy as np

from treeldp.free_energy import ClosedFormFreeEnergy
from treeldp.ising_blocks import ModelSpec
from treeldp.ldp_rate import effective_domain, half_parametric, rate_function


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--kind", choices=["power", "linear"], default="power")
    ap.add_argument("--order", type=int, default=2)
    ap.add_argument("--p", type=float, default=0.5)
    ap.add_argument("--gamma", type=float, default=2.0)
    ap.add_argument("--points", type=int, default=41)
    args = ap.parse_args(argv)

    model = ModelSpec(args.kind, args.order, args.p)
    F = ClosedFormFreeEnergy(model, args.gamma)
    lo, hi = effective_domain(model, args.gamma)
    s0 = F.derivative(0.0)

    out = sys.stdout
    out.write(f"# {model.kind} {model.label} p={args.p} gamma={args.gamma} domain=({lo:.10f},{hi:.10f})\n")
    out.write(f"# subgradient at 0: [{s0.left:.10f}, {s0.right:.10f}]\n")
    out.write("x,I,eta" + (",I_parametric" if args.p == 0.5 else "") + "\n")
    for x in np.linspace(lo, hi, args.points + 2)[1:-1]:
        r = rate_function(F, float(x))
        line = f"{x:.10f},{r.value:.12e},{r.eta:.10f}"
        if args.p == 0.5:
            # parametric value at the same maximizer
            line += f",{half_parametric(model, args.gamma, r.eta).value:.12e}"
        out.write(line + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
