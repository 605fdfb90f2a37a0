"""Command-line front end.

    treeldp info CONFIG
    treeldp free-energy CONFIG [--beta-min B --beta-max B --steps K --N N --out FILE]
    treeldp rate CONFIG [--x X ... | --x-grid MIN MAX STEPS] [--N N]
    treeldp oracle-check CONFIG [--N N --p-grid ... --beta-grid ... --tol T]
    treeldp mc CONFIG [--N N --samples S --seed SEED --truncated --workers W]

CONFIG is a JSON file::

    {"matrix": [[1,1],[1,0]], "p": 0.5, "model": {"kind": "linear", "q": 2},
     "numeric": {"exact_cap": 64, "tol_gamma": 1e-12, "branch_threshold": 30}}

Exit codes: 0 ok, 2 config, 3 growth condition, 4 size limit, 5 oracle mismatch.
Every failure prints one line ``error[<kind>]: <message>`` on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import free_energy as fe
from . import ising_blocks as ib
from . import ldp_rate
from . import matrix_tree as mt
from . import oracle
from .errors import (
    DepthInsufficient,
    GrowthConditionViolated,
    InvalidMatrix,
    InvalidModel,
    MaxIterExceeded,
    SizeLimitExceeded,
)

log = logging.getLogger("treeldp")

EXIT_OK, EXIT_CONFIG, EXIT_GROWTH, EXIT_SIZE, EXIT_MISMATCH = 0, 2, 3, 4, 5


class ConfigError(ValueError):
    pass


class OracleMismatch(Exception):
    pass


@dataclass(frozen=True)
class NumericConfig:
    exact_cap: int = mt.DEFAULT_EXACT_CAP
    tol_gamma: float = mt.DEFAULT_GROWTH_TOL
    branch_threshold: float = ib.DEFAULT_BRANCH_THRESHOLD


@dataclass(frozen=True)
class RunConfig:
    matrix: mt.TransitionMatrix
    model: ib.ModelSpec
    numeric: NumericConfig = field(default_factory=NumericConfig)

    @property
    def p(self) -> float:
        return self.model.p


def _reject_unknown(obj: dict, allowed: set, where: str) -> None:
    extra = sorted(set(obj) - allowed)
    if extra:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(map(repr, extra))}")


def config_from_dict(raw) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    _reject_unknown(raw, {"matrix", "p", "model", "numeric"}, "config")
    for key in ("matrix", "p", "model"):
        if key not in raw:
            raise ConfigError(f"config: missing required key {key!r}")
    try:
        matrix = mt.validate(raw["matrix"])
    except TypeError as exc:
        raise ConfigError(f"matrix: {exc}") from None
    except InvalidMatrix as exc:
        raise ConfigError(f"matrix: {exc}") from None

    model_raw = raw["model"]
    if not isinstance(model_raw, dict):
        raise ConfigError("model: must be an object")
    kind = model_raw.get("kind")
    if kind not in (ib.POWER, ib.LINEAR):
        raise ConfigError(f"model.kind: unknown kind {kind!r} (expected 'power' or 'linear')")
    order_key = "alpha" if kind == ib.POWER else "q"
    _reject_unknown(model_raw, {"kind", order_key}, "model")
    if order_key not in model_raw:
        raise ConfigError(f"model.{order_key}: required for kind {kind!r}")
    p = raw["p"]
    if isinstance(p, bool) or not isinstance(p, (int, float)):
        raise ConfigError("p: must be a number")
    try:
        model = ib.ModelSpec(kind, model_raw[order_key], float(p))
    except InvalidModel as exc:
        field_name = "p" if "p must" in str(exc) else f"model.{order_key}"
        raise ConfigError(f"{field_name}: {exc}") from None

    numeric_raw = raw.get("numeric", {})
    if not isinstance(numeric_raw, dict):
        raise ConfigError("numeric: must be an object")
    _reject_unknown(numeric_raw, {"exact_cap", "tol_gamma", "branch_threshold"}, "numeric")
    numeric = NumericConfig(
        exact_cap=int(numeric_raw.get("exact_cap", mt.DEFAULT_EXACT_CAP)),
        tol_gamma=float(numeric_raw.get("tol_gamma", mt.DEFAULT_GROWTH_TOL)),
        branch_threshold=float(numeric_raw.get("branch_threshold", ib.DEFAULT_BRANCH_THRESHOLD)),
    )
    if numeric.exact_cap < 1 or not numeric.tol_gamma > 0:
        raise ConfigError("numeric: exact_cap must be >= 1 and tol_gamma > 0")
    return RunConfig(matrix, model, numeric)


def parse_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return config_from_dict(raw)


# ----------------------------------------------------------------------------
# output helpers


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == 0.0:
        return "0"  # no "-0" in output
    return format(x, ".17g")


def write_csv(out, comments: Sequence[str], header: Sequence[str], rows) -> None:
    for line in comments:
        out.write(f"# {line}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])


def _describe(cfg: RunConfig) -> str:
    rows = ";".join("".join(map(str, r)) for r in cfg.matrix.entries)
    return f"matrix={rows} model={cfg.model.kind}({cfg.model.label}) p={fmt(cfg.p)}"


def _gamma(cfg: RunConfig) -> float:
    return mt.check_growth_condition(cfg.matrix, cfg.numeric.tol_gamma)


def _default_n(cfg: RunConfig, n: Optional[int]) -> int:
    return n if n is not None else fe.DEFAULT_N[cfg.model.kind]


# ----------------------------------------------------------------------------
# commands


def cmd_info(cfg: RunConfig, args, out) -> int:
    out.write(f"d {cfg.matrix.d}\n")
    out.write(f"model {cfg.model.kind} {cfg.model.label} p={fmt(cfg.p)}\n")
    est = mt.growth_rate(cfg.matrix, cfg.numeric.tol_gamma, keep_ratios=args.ratios)
    out.write(f"gamma {est.gamma:.10f}\n")
    out.write(f"gamma_iterations {est.iterations} residual {est.residual:.3e}\n")
    out.write("iteration,ratio\n")
    for i, r in enumerate(est.ratios, 1):
        out.write(f"{i},{fmt(r)}\n")
    counts = mt.level_counts(cfg.matrix, args.levels, cfg.numeric.exact_cap)
    out.write("level,count,log_count\n")
    for n, (exact, lg) in enumerate(zip(counts.exact, counts.log)):
        out.write(f"{n},{'' if exact is None else exact},{fmt(lg)}\n")
    out.write(f"coefficient {fmt(cfg.model.coefficient(est.gamma))}\n")
    return EXIT_OK


def cmd_free_energy(cfg: RunConfig, args, out) -> int:
    gamma = _gamma(cfg)
    N = _default_n(cfg, args.N)
    finite = fe.FiniteFreeEnergy(cfg.model, cfg.matrix, N, check_growth=False,
                                 threshold=cfg.numeric.branch_threshold)
    closed = fe.ClosedFormFreeEnergy(cfg.model, gamma)
    betas = np.linspace(args.beta_min, args.beta_max, args.steps)
    f_fin, g_fin = finite.value(betas), finite.g_term(betas)
    f_cl, g_cl = closed.value(betas), closed.g_term(betas)
    rows = [
        (b, ff, fc, gf, gc, fe.branch_of(b, cfg.p).value, abs(ff - fc))
        for b, ff, fc, gf, gc in zip(betas, f_fin, f_cl, g_fin, g_cl)
    ]
    write_csv(
        out,
        [
            "treeldp free-energy",
            _describe(cfg),
            f"gamma={fmt(gamma)} coefficient={fmt(closed.c)} N={N}",
            f"beta_min={fmt(args.beta_min)} beta_max={fmt(args.beta_max)} steps={args.steps}",
        ],
        ["beta", "F_finite", "F_closed", "G_finite", "G_closed", "branch", "abs_diff"],
        rows,
    )
    return EXIT_OK


def _x_values(args, c: float) -> np.ndarray:
    if args.x and args.x_grid:
        raise ValueError("give either --x or --x-grid, not both")
    if args.x:
        return np.array(args.x, dtype=np.float64)
    if args.x_grid:
        lo, hi, steps = args.x_grid
        return np.linspace(float(lo), float(hi), int(steps))
    return np.linspace(-c, c, 41)[1:-1]


def cmd_rate(cfg: RunConfig, args, out) -> int:
    gamma = _gamma(cfg)
    if args.N is not None:
        curve = fe.FiniteFreeEnergy(cfg.model, cfg.matrix, args.N, check_growth=False,
                                    threshold=cfg.numeric.branch_threshold)
        source = f"finite N={args.N}"
    else:
        curve = fe.ClosedFormFreeEnergy(cfg.model, gamma)
        source = "closed form"
    c = cfg.model.coefficient(gamma)
    xs = _x_values(args, c)
    points = [ldp_rate.rate_function(curve, float(x)) for x in xs]
    write_csv(
        out,
        ["treeldp rate", _describe(cfg), f"gamma={fmt(gamma)} domain=({fmt(-c)},{fmt(c)}) free_energy={source}"],
        ["x", "I", "eta", "finite"],
        [(pt.y, pt.value, pt.eta, pt.finite) for pt in points],
    )
    return EXIT_OK


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def cmd_oracle_check(cfg: RunConfig, args, out) -> int:
    _gamma(cfg)
    N = args.N
    ps = sorted(set(_float_list(args.p_grid)) | {cfg.p})
    betas = _float_list(args.beta_grid)
    bound = ib.head_bound(cfg.model, cfg.matrix, N, cfg.numeric.exact_cap)
    rows = []
    worst = 0.0
    ok = True
    for p in ps:
        model = cfg.model.with_p(p)
        finite = fe.FiniteFreeEnergy(model, cfg.matrix, N, check_growth=False,
                                     threshold=cfg.numeric.branch_threshold)
        for b in betas:
            exact = oracle.exact_mgf(model, cfg.matrix, N, b, truncated=True).log_value
            full = oracle.exact_mgf(model, cfg.matrix, N, b, truncated=False).log_value
            factorized = float(finite.value(b)) * math.exp(finite.layout.log_delta)
            rel = abs(math.expm1(exact - factorized))
            gap = abs(full - exact)
            sandwich = gap <= abs(b) * 2 * bound + 1e-12
            passed = rel <= args.tol and sandwich
            ok &= passed
            worst = max(worst, rel)
            rows.append((p, b, exact, factorized, rel, gap, sandwich, passed))
    write_csv(
        out,
        ["treeldp oracle-check", _describe(cfg), f"N={N} head_bound={bound} tol={fmt(args.tol)}"],
        ["p", "beta", "log_mgf_exact", "log_mgf_factorized", "rel_err", "head_gap", "head_bound_ok", "pass"],
        rows,
    )
    out.write(f"# summary {'PASS' if ok else 'FAIL'} max_rel_err={fmt(worst)} rows={len(rows)}\n")
    if not ok:
        raise OracleMismatch(f"factorized and enumerated log-MGF differ (max relative error {worst:.3e})")
    return EXIT_OK


def cmd_mc(cfg: RunConfig, args, out) -> int:
    _gamma(cfg)
    hist = oracle.mc_sample(cfg.model, cfg.matrix, args.N, args.samples, args.seed,
                            truncated=args.truncated, workers=args.workers)
    rows = zip(hist.energies, hist.values, hist.counts, hist.masses, hist.empirical_rates())
    write_csv(
        out,
        [
            "treeldp mc",
            _describe(cfg),
            f"N={args.N} samples={args.samples} seed={args.seed} truncated={fmt(bool(args.truncated))} "
            f"nodes={hist.n_nodes}",
        ],
        ["S", "x", "count", "mass", "rate"],
        rows,
    )
    for x in args.x or ():
        mass = hist.mass_at(x, args.eps)
        rate = -math.log(mass) / hist.n_nodes if mass > 0 else math.inf
        line = f"# window x={fmt(x)} eps={fmt(args.eps)} mass={fmt(mass)} rate={fmt(rate)}"
        if hist.n_nodes <= oracle.ENUMERATION_CAP:
            exact = oracle.exact_probability(cfg.model, cfg.matrix, args.N, x, args.eps, truncated=args.truncated)
            line += f" exact_mass={fmt(exact)} exact_rate={fmt(-math.log(exact) / hist.n_nodes if exact > 0 else math.inf)}"
        out.write(line + "\n")
    return EXIT_OK


COMMANDS = {
    "info": cmd_info,
    "free-energy": cmd_free_energy,
    "rate": cmd_rate,
    "oracle-check": cmd_oracle_check,
    "mc": cmd_mc,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="treeldp", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="verb", required=True)

    def add(name, help_text):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("config", help="JSON run configuration")
        sp.add_argument("--out", help="write output here instead of stdout")
        return sp

    sp = add("info", "tree statistics and growth rate")
    sp.add_argument("--levels", type=int, default=12)
    sp.add_argument("--ratios", type=int, default=20, help="number of growth ratios to print")

    sp = add("free-energy", "finite and limiting free energy on a beta grid")
    sp.add_argument("--beta-min", type=float, default=-3.0)
    sp.add_argument("--beta-max", type=float, default=3.0)
    sp.add_argument("--steps", type=int, default=121)
    sp.add_argument("--N", type=int, default=None, help="truncation (default 8 power, 24 linear)")

    sp = add("rate", "rate function by Legendre transform")
    sp.add_argument("--x", type=float, action="append")
    sp.add_argument("--x-grid", nargs=3, metavar=("MIN", "MAX", "STEPS"))
    sp.add_argument("--N", type=int, default=None, help="use the finite free energy at this N")

    sp = add("oracle-check", "compare block factorization with exact enumeration")
    sp.add_argument("--N", type=int, default=2)
    sp.add_argument("--p-grid", default="0.2,0.5,0.7")
    sp.add_argument("--beta-grid", default="-2,-0.5,0,0.5,2")
    sp.add_argument("--tol", type=float, default=1e-10)

    sp = add("mc", "Monte Carlo histogram of S/|Delta|")
    sp.add_argument("--N", type=int, default=1)
    sp.add_argument("--samples", type=int, default=100_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--truncated", action="store_true")
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--x", type=float, action="append", help="report the mass of S/|Delta| in [x-eps, x+eps]")
    sp.add_argument("--eps", type=float, default=0.0)
    return parser


def _fail(kind: str, message: str, code: int) -> int:
    sys.stderr.write(f"error[{kind}]: {' '.join(str(message).split())}\n")
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(name)s: %(message)s")
    try:
        cfg = parse_config(args.config)
        log.info("loaded %s", _describe(cfg))
        buf = io.StringIO()
        code = COMMANDS[args.verb](cfg, args, buf)
    except ConfigError as exc:
        return _fail("config", exc, EXIT_CONFIG)
    except (GrowthConditionViolated, MaxIterExceeded) as exc:
        return _fail("growth", exc, EXIT_GROWTH)
    except (SizeLimitExceeded, DepthInsufficient) as exc:
        return _fail("size", exc, EXIT_SIZE)
    except OracleMismatch as exc:
        _emit(args, buf)
        return _fail("oracle", exc, EXIT_MISMATCH)
    except ValueError as exc:
        return _fail("usage", exc, EXIT_CONFIG)
    _emit(args, buf)
    return code


def _emit(args, buf: io.StringIO) -> None:
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


if __name__ == "__main__":
    sys.exit(main())
