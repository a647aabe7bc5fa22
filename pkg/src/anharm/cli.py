"""Command-line front end.

Subcommands produce CSV on stdout (or --output FILE) so runs are easy to
diff and to feed to plotting scripts; given the same arguments and
precision the bytes are identical between runs.  Exact rational columns
are written as quoted "p/q" strings, floating columns in a fixed
scientific format rendered digit-by-digit (the mpfr type does not honor
the stdlib float format spec).  Every table starts with a single
"# key=value ..." comment line recording the potential, precision, and
tolerance settings that produced it.

Exit codes: 0 success, 1 failed verification checks, 2 invalid
potential, 3 shape profile not monotone, 4 a numeric routine failed to
converge (including precision exhaustion and order overflow), 5 bad
arguments or a quantity undefined for the arguments given (divergent
growth integral, no saddle, crossover band, out-of-range profile
variable).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import gmpy2
from gmpy2 import mpfr, mpq

from .density import (
    BoundaryRegion,
    Divergent,
    NoSaddle,
    matrix_element_asymptotic,
    matrix_element_exact,
    rho_order_exact,
    rho_saddle,
)
from .euclidean import (
    NegativeRadicand,
    NotMonotone,
    OutOfRange,
    euclidean_constants,
    exponent_A,
    point_of,
    prefactor_M,
)
from .fixed_point import build_ladder, energy_asymptotic, eval_ladder_normalized
from .numerics import (
    DEFAULT_PRECISION,
    DomainError,
    NonConvergence,
    NoSignChange,
    PrecisionExhausted,
    SignedLog,
    workprec,
)
from .potential import (
    MissingQuartic,
    NoTurningPoint,
    ShapeViolation,
    WrongSignQuartic,
    potential_from_config,
    quartic_potential,
)
from .recursion import (
    OrderOverflow,
    ZeroNormalizer,
    ZeroValue,
    compute_series,
    convergence_profile_A,
    convergence_profile_M,
    fixed_x_profile,
)
from .verify import run_battery

EXIT_OK = 0
EXIT_CHECKS_FAILED = 1
EXIT_BAD_POTENTIAL = 2
EXIT_NOT_MONOTONE = 3
EXIT_NO_CONVERGENCE = 4
EXIT_USAGE = 5

_MAX_ORDER = 200
_ENV_BITS = "LOPT_PRECISION_BITS"

class UsageError(Exception):
    pass


class PotentialConfigError(Exception):
    """Potential file missing, unreadable, or rejected by validation."""


_POTENTIAL_ERRORS = (MissingQuartic, WrongSignQuartic, NoTurningPoint,
                     ShapeViolation, PotentialConfigError)
_CONVERGENCE_ERRORS = (NonConvergence, PrecisionExhausted, OrderOverflow,
                       NoSignChange)
_ARGUMENT_ERRORS = (ValueError, DomainError, OutOfRange, NegativeRadicand,
                    ZeroValue, ZeroNormalizer, NoSaddle, BoundaryRegion,
                    Divergent)


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 by itself, which collides with the
    # invalid-potential code; raise instead and map to EXIT_USAGE.
    def error(self, message):
        raise UsageError(message)


class RunConfig:
    """Validated settings shared by every subcommand.

    Invariants are enforced at construction: precision at least 64 bits,
    no requested order above 200, every grid and order list nonempty.
    """

    __slots__ = ("pot", "label", "bits")

    def __init__(self, pot, label: str, bits: int):
        if bits < 64:
            raise UsageError(f"precision must be at least 64 bits, got {bits}")
        self.pot = pot
        self.label = label
        self.bits = bits

    def meta(self, **extra) -> dict:
        base = {"potential": self.label, "precision_bits": self.bits,
                "certified_agreement_bits": 40}
        base.update(extra)
        return base


def _sci(x, digits: int = 12) -> str:
    """Fixed-width scientific rendering of an mpfr, e.g. -1.5e-3 ->
    "-1.500000000000e-03"."""
    x = mpfr(x)
    if gmpy2.is_nan(x):
        return "nan"
    if gmpy2.is_infinite(x):
        return "inf" if x > 0 else "-inf"
    if x == 0:
        return "0." + "0" * digits + "e+00"
    mant, exp, _ = gmpy2.digits(x, 10, digits + 1)
    sign = "-" if mant.startswith("-") else ""
    ds = mant.lstrip("-")
    return f"{sign}{ds[0]}.{ds[1:]}e{exp - 1:+03d}"


def _rat(q) -> str:
    return f'"{q}"'


def _emit(stream, meta: dict, header, rows) -> None:
    stream.write("# " + " ".join(f"{k}={v}" for k, v in meta.items()) + "\n")
    stream.write(",".join(header) + "\n")
    for row in rows:
        stream.write(",".join(row) + "\n")


def _parse_grid(spec: str, bits: int):
    parts = spec.split(":")
    if len(parts) != 3:
        raise UsageError(f"grid must be min:max:steps, got {spec!r}")
    lo_s, hi_s, steps_s = parts
    try:
        steps = int(steps_s)
    except ValueError:
        raise UsageError(f"grid steps must be an integer, got {steps_s!r}")
    if steps < 1:
        raise UsageError("grid needs at least one point")
    with workprec(bits + 16):
        try:
            lo, hi = mpfr(lo_s), mpfr(hi_s)
        except ValueError:
            raise UsageError(f"bad grid bounds in {spec!r}")
        if gmpy2.is_nan(lo) or gmpy2.is_nan(hi) or hi < lo:
            raise UsageError(f"bad grid bounds in {spec!r}")
        if steps == 1:
            return [lo]
        return [lo + (hi - lo) * i / (steps - 1) for i in range(steps)]


def _parse_orders(spec: str, minimum: int = 1):
    try:
        ks = [int(tok) for tok in spec.split(",")]
    except ValueError:
        raise UsageError(f"order list must be comma-separated integers, got {spec!r}")
    if not ks:
        raise UsageError("order list is empty")
    for k in ks:
        if k < minimum or k > _MAX_ORDER:
            raise UsageError(f"orders must lie in [{minimum}, {_MAX_ORDER}], got {k}")
    return ks


def _parse_number(spec: str, bits: int):
    with workprec(bits + 16):
        try:
            return mpfr(mpq(spec))
        except ValueError:
            pass
        try:
            value = mpfr(spec)
        except ValueError:
            raise UsageError(f"could not parse number {spec!r}")
        if gmpy2.is_nan(value):
            raise UsageError(f"could not parse number {spec!r}")
        return value


def _check_order(k: int, minimum: int = 0) -> int:
    if k < minimum or k > _MAX_ORDER:
        raise UsageError(f"order must lie in [{minimum}, {_MAX_ORDER}], got {k}")
    return k


def _signedlog_ratio(num: SignedLog, den: SignedLog, bits: int):
    with workprec(bits):
        return num.sign * den.sign * gmpy2.exp(num.log_magnitude - den.log_magnitude)


# ---------------------------------------------------------------------------
# subcommands


def _cmd_series(cfg: RunConfig, args, out) -> int:
    k_max = _check_order(args.k_max)
    ser = compute_series(cfg.pot, args.n, k_max)
    rows = []
    for k in range(k_max + 1):
        lead = ser.orders[k].coefficient(4 * k + args.n)
        rows.append([str(k), _rat(ser.energies[k]), _rat(lead),
                     str(4 * k + args.n)])
    _emit(out, cfg.meta(command="series", n=args.n, k_max=k_max),
          ["k", "energy", "leading_coefficient", "leading_degree"], rows)
    return EXIT_OK


def _cmd_curve_a(cfg: RunConfig, args, out) -> int:
    ks = _parse_orders(args.k)
    grid = _parse_grid(args.xi, cfg.bits)
    consts = euclidean_constants(cfg.pot, bits=cfg.bits)
    ser = compute_series(cfg.pot, args.n, max(ks))
    header = ["xi", "A"]
    for k in ks:
        header += [f"A_{k}", f"absdev_{k}"]
    rows = []
    for xi in grid:
        a_ref = exponent_A(cfg.pot, consts, xi)
        row = [_sci(xi), _sci(a_ref)]
        for k in ks:
            ak = convergence_profile_A(ser, k, xi, bits=cfg.bits)
            row += [_sci(ak), _sci(abs(ak - a_ref))]
        rows.append(row)
    _emit(out, cfg.meta(command="curve-A", n=args.n, k=args.k), header, rows)
    return EXIT_OK


def _cmd_curve_m(cfg: RunConfig, args, out) -> int:
    ks = _parse_orders(args.k)
    grid = _parse_grid(args.xi, cfg.bits)
    consts = euclidean_constants(cfg.pot, bits=cfg.bits)
    ser = compute_series(cfg.pot, args.n, max(ks))
    header = ["xi", "M"]
    for k in ks:
        header += [f"M_{k}", f"absdev_{k}"]
    rows = []
    for xi in grid:
        a_ref = exponent_A(cfg.pot, consts, xi)
        m_ref = prefactor_M(cfg.pot, consts, xi, args.n)
        row = [_sci(xi), _sci(m_ref)]
        for k in ks:
            mk = convergence_profile_M(ser, k, xi, a_ref, bits=cfg.bits)
            row += [_sci(mk), _sci(abs(mk - m_ref))]
        rows.append(row)
    _emit(out, cfg.meta(command="curve-M", n=args.n, k=args.k), header, rows)
    return EXIT_OK


def _cmd_fixed_x(cfg: RunConfig, args, out) -> int:
    ks = _parse_orders(args.k)
    grid = _parse_grid(args.x, cfg.bits)
    ladder = build_ladder(0)
    ser = compute_series(cfg.pot, 0, max(ks))
    header = ["x", "Xhat0"]
    for k in ks:
        header += [f"X_{k}", f"absdev_{k}"]
    rows = []
    for x in grid:
        ref = eval_ladder_normalized(ladder, x, bits=cfg.bits)
        row = [_sci(x), _sci(ref)]
        for k in ks:
            xk = fixed_x_profile(ser, k, x, bits=cfg.bits)
            row += [_sci(xk), _sci(abs(xk - ref))]
        rows.append(row)
    _emit(out, cfg.meta(command="fixed-x", k=args.k), header, rows)
    return EXIT_OK


def _cmd_eigen_ratio(cfg: RunConfig, args, out) -> int:
    k_max = _check_order(args.k_max, minimum=1)
    consts = euclidean_constants(cfg.pot, bits=cfg.bits)
    ser = compute_series(cfg.pot, args.n, k_max)
    rows = []
    for k in range(1, k_max + 1):
        exact = SignedLog.from_rational(ser.energies[k], bits=cfg.bits)
        asym = energy_asymptotic(consts, args.n, k)
        ratio = _signedlog_ratio(exact, asym, cfg.bits)
        rows.append([str(k), _rat(ser.energies[k]), _sci(asym.log_magnitude),
                     _sci(ratio), _sci(abs(ratio - 1))])
    _emit(out, cfg.meta(command="eigen-ratio", n=args.n, k_max=k_max),
          ["k", "energy", "asymptote_log", "ratio", "absdev"], rows)
    return EXIT_OK


def _cmd_matelem(cfg: RunConfig, args, out) -> int:
    ks = _parse_orders(args.k)
    consts = euclidean_constants(cfg.pot, bits=cfg.bits)
    ser1 = compute_series(cfg.pot, args.n1, max(ks))
    ser2 = compute_series(cfg.pot, args.n2, max(ks))
    rows = []
    with workprec(cfg.bits):
        half_log_pi = gmpy2.log(gmpy2.const_pi()) / 2
    for k in ks:
        exact = matrix_element_exact(ser1, ser2, args.m1, args.m2, k)
        asym = matrix_element_asymptotic(cfg.pot, consts, args.n1, args.n2,
                                         args.m1, args.m2, k)
        if exact.rational_part == 0:
            ratio = mpfr(0)
        else:
            num = SignedLog.from_rational(exact.rational_part, bits=cfg.bits)
            num = SignedLog(num.sign, num.log_magnitude + half_log_pi)
            ratio = _signedlog_ratio(num, asym, cfg.bits)
        rows.append([str(k), _rat(exact), _sci(exact.to_mpfr(cfg.bits)),
                     _sci(asym.log_magnitude), _sci(ratio)])
    _emit(out, cfg.meta(command="matelem", n1=args.n1, n2=args.n2,
                        m1=args.m1, m2=args.m2),
          ["k", "exact", "exact_decimal", "asymptote_log", "ratio"], rows)
    return EXIT_OK


def _cmd_density(cfg: RunConfig, args, out) -> int:
    ks = _parse_orders(args.k)
    kappa = _parse_number(args.kappa, cfg.bits)
    eta = _parse_number(args.eta, cfg.bits)
    consts = euclidean_constants(cfg.pot, bits=cfg.bits)
    ser1 = compute_series(cfg.pot, args.n1, max(ks))
    ser2 = compute_series(cfg.pot, args.n2, max(ks))
    shift = mpfr(args.n1 + args.n2 - 1) / 2
    rows = []
    for k in ks:
        with workprec(cfg.bits + 16):
            big_n = k / kappa
            x = mpq(eta * gmpy2.sqrt(big_n))  # snap the sample to a rational
            eta_eff = x / gmpy2.sqrt(big_n)
        coeff, gauss = rho_order_exact(ser1, ser2, k, x, x)
        exact = SignedLog.from_rational(coeff, bits=cfg.bits)
        saddle = rho_saddle(cfg.pot, consts, args.n1, args.n2,
                            kappa, eta_eff, eta_eff)
        with workprec(cfg.bits + 16):
            exact_log = exact.log_magnitude + mpfr(gauss)
            predicted = ((k + shift) * gmpy2.log(big_n) - big_n * saddle.B_0
                         + gmpy2.log(saddle.gamma))
            gap = (exact_log - predicted) / k
        rows.append([str(k), _sci(big_n), _sci(x), str(exact.sign),
                     _sci(exact_log), _sci(predicted), _sci(gap)])
    _emit(out, cfg.meta(command="density", n1=args.n1, n2=args.n2,
                        kappa=args.kappa, eta=args.eta),
          ["k", "N", "x", "sign", "exact_log", "predicted_log", "gap_over_k"],
          rows)
    return EXIT_OK


def _cmd_trajectories(cfg: RunConfig, args, out) -> int:
    grid = _parse_grid(args.tau, cfg.bits)
    consts = euclidean_constants(cfg.pot, bits=cfg.bits)
    rows = []
    for tau in grid:
        pt = point_of(cfg.pot, consts, by_tau=tau)
        rows.append([_sci(pt.tau), pt.branch, _sci(pt.Q), _sci(pt.P),
                     _sci(pt.s), _sci(pt.lam), _sci(pt.lambda_dot),
                     _sci(pt.xi), _sci(pt.A)])
    _emit(out, cfg.meta(command="trajectories", tau=args.tau),
          ["tau", "branch", "Q", "P", "s", "lambda", "lambda_dot", "xi", "A"],
          rows)
    return EXIT_OK


def _cmd_verify(cfg: RunConfig, args, out) -> int:
    pot = None if cfg.label == "builtin-quartic" else cfg.pot
    results = run_battery(pot, bits=cfg.bits)
    for r in results:
        tag = "PASS" if r.passed else "FAIL"
        out.write(f"{tag} {r.name}: {r.detail} [{r.seconds:.1f}s]\n")
    n_pass = sum(r.passed for r in results)
    out.write(f"{n_pass}/{len(results)} checks passed\n")
    return EXIT_OK if n_pass == len(results) else EXIT_CHECKS_FAILED


# ---------------------------------------------------------------------------
# wiring


def _build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--potential", metavar="FILE",
                        help="JSON potential config; defaults to the quartic "
                             "reference x^2/2 - x^4")
    common.add_argument("--bits", type=int, default=None,
                        help=f"working precision in bits (default: "
                             f"${_ENV_BITS} or {DEFAULT_PRECISION})")
    common.add_argument("--output", metavar="FILE", default=None,
                        help="write the table here instead of stdout")

    parser = _Parser(prog="anharm",
                     description="Large-order perturbation theory for even "
                                 "anharmonic oscillators.")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p = sub.add_parser("series", parents=[common],
                       help="exact energy orders and leading coefficients")
    p.add_argument("--n", type=int, default=0)
    p.add_argument("--k-max", type=int, required=True)
    p.set_defaults(handler=_cmd_series)

    p = sub.add_parser("curve-A", parents=[common],
                       help="decay exponent profile A_k(xi) against its limit")
    p.add_argument("--n", type=int, default=0)
    p.add_argument("--k", required=True, help="comma-separated orders")
    p.add_argument("--xi", required=True, help="grid min:max:steps")
    p.set_defaults(handler=_cmd_curve_a)

    p = sub.add_parser("curve-M", parents=[common],
                       help="prefactor profile M_k(xi) against its limit")
    p.add_argument("--n", type=int, default=0)
    p.add_argument("--k", required=True, help="comma-separated orders")
    p.add_argument("--xi", required=True, help="grid min:max:steps")
    p.set_defaults(handler=_cmd_curve_m)

    p = sub.add_parser("fixed-x", parents=[common],
                       help="normalized ground-level orders against the "
                            "fixed-argument limit")
    p.add_argument("--k", required=True, help="comma-separated orders")
    p.add_argument("--x", required=True, help="grid min:max:steps")
    p.set_defaults(handler=_cmd_fixed_x)

    p = sub.add_parser("eigen-ratio", parents=[common],
                       help="exact energy orders against the growth asymptote")
    p.add_argument("--n", type=int, default=0)
    p.add_argument("--k-max", type=int, required=True)
    p.set_defaults(handler=_cmd_eigen_ratio)

    p = sub.add_parser("matelem", parents=[common],
                       help="matrix elements <n2|x^m1 (-d/dx)^m2|n1>_k, exact "
                            "and asymptotic")
    p.add_argument("--n1", type=int, default=0)
    p.add_argument("--n2", type=int, default=0)
    p.add_argument("--m1", type=int, default=0)
    p.add_argument("--m2", type=int, default=0)
    p.add_argument("--k", required=True, help="comma-separated orders")
    p.set_defaults(handler=_cmd_matelem)

    p = sub.add_parser("density", parents=[common],
                       help="density-matrix orders at scaled arguments "
                            "against the saddle prediction")
    p.add_argument("--n1", type=int, default=0)
    p.add_argument("--n2", type=int, default=0)
    p.add_argument("--kappa", required=True, help="scale k/N, e.g. 1 or 2/3")
    p.add_argument("--eta", required=True, help="scaled argument x/sqrt(N)")
    p.add_argument("--k", required=True, help="comma-separated orders")
    p.set_defaults(handler=_cmd_density)

    p = sub.add_parser("trajectories", parents=[common],
                       help="bounce trajectory data on a tau grid")
    p.add_argument("--tau", required=True, help="grid min:max:steps")
    p.set_defaults(handler=_cmd_trajectories)

    p = sub.add_parser("verify", parents=[common],
                       help="run the verification battery and report "
                            "PASS/FAIL per check")
    p.set_defaults(handler=_cmd_verify)

    return parser


def _resolve_bits(args) -> int:
    if args.bits is not None:
        return args.bits
    env = os.environ.get(_ENV_BITS)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{_ENV_BITS} must be an integer, got {env!r}")
    return DEFAULT_PRECISION


def _configure(args) -> RunConfig:
    bits = _resolve_bits(args)
    if bits < 64:
        raise UsageError(f"precision must be at least 64 bits, got {bits}")
    if args.potential is None:
        return RunConfig(quartic_potential(bits), "builtin-quartic", bits)
    try:
        with open(args.potential, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise PotentialConfigError(f"cannot read potential file: {exc}")
    except json.JSONDecodeError as exc:
        raise PotentialConfigError(f"potential file is not valid JSON: {exc}")
    try:
        pot = potential_from_config(raw, bits=bits)
    except ValueError as exc:
        # malformed config counts as an invalid potential, not bad usage
        raise PotentialConfigError(str(exc))
    return RunConfig(pot, args.potential, bits)


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _configure(args)
        if args.output is None:
            return args.handler(cfg, args, sys.stdout)
        with open(args.output, "w", encoding="utf-8", newline="") as out:
            return args.handler(cfg, args, out)
    except UsageError as exc:
        print(f"anharm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _POTENTIAL_ERRORS as exc:
        print(f"anharm: invalid potential: {exc}", file=sys.stderr)
        return EXIT_BAD_POTENTIAL
    except NotMonotone as exc:
        print(f"anharm: profile not monotone: {exc}", file=sys.stderr)
        return EXIT_NOT_MONOTONE
    except _CONVERGENCE_ERRORS as exc:
        print(f"anharm: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except _ARGUMENT_ERRORS as exc:
        print(f"anharm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
