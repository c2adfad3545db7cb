"""Command-line interface wiring the library into reproducible experiments.

Subcommands: ``hubbard`` builds a chain and writes its FCIDUMP; ``solve``
diagonalizes one; ``fit`` runs the fitting pipeline and prints a report;
``sweep`` scans a (u, order) grid into a CSV.  Exit codes: 0 success, 1 on
usage or input errors, 2 on numerical failure.  Identical invocations
produce identical output; nothing is written outside paths named in flags.
``OCCFACTOR_THREADS`` caps sweep-cell parallelism (default 1).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import asdict

import numpy as np

from .ansatz import FitConfig, MagnitudeFitError, save_model
from .baselines import BaselineScheme
from .fci import ConvergenceError
from .integrals import (FcidumpError, HubbardSpec, build_hubbard,
                        read_fcidump, read_fcidump_header, write_fcidump)
from .metrics import SweepSpec, evaluate_fit, sweep, write_csv
from .solvers import NonFiniteObjectiveError

_SCHEMES = ("main", "weighted_abs", "weighted_square", "irls_pnorm",
            "irls_capped", "irls_kl", "iols")

_NUMERICAL_ERRORS = (ConvergenceError, MagnitudeFitError,
                     NonFiniteObjectiveError, np.linalg.LinAlgError,
                     FloatingPointError, ValueError, ArithmeticError)


class _UsageError(Exception):
    pass


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="occfactor",
        description="Fit occupation-product wavefunction models to exact CI states.")
    sub = parser.add_subparsers(dest="command", required=True)

    hub = sub.add_parser("hubbard", help="build a Hubbard chain FCIDUMP")
    hub.add_argument("--sites", type=int, required=True)
    hub.add_argument("--u", type=float, required=True)
    hub.add_argument("--alpha", type=float, default=0.0)
    hub.add_argument("--beta", type=float, default=-1.0)
    hub.add_argument("--periodic", action="store_true")
    hub.add_argument("--nalpha", type=int, default=None)
    hub.add_argument("--nbeta", type=int, default=None)
    hub.add_argument("--out", required=True)

    solve = sub.add_parser("solve", help="ground state of an FCIDUMP Hamiltonian")
    solve.add_argument("--fcidump", required=True)
    solve.add_argument("--basis", choices=("site", "no"), default="site")
    solve.add_argument("--mode", choices=("auto", "dense", "davidson"),
                       default="auto")
    solve.add_argument("--nalpha", type=int, default=None)
    solve.add_argument("--nbeta", type=int, default=None)

    fit = sub.add_parser("fit", help="fit the occupation-product model")
    fit.add_argument("--fcidump", required=True)
    fit.add_argument("--order", type=int, required=True)
    fit.add_argument("--basis", choices=("site", "no"), default="no")
    fit.add_argument("--mode", choices=("auto", "dense", "davidson"),
                     default="auto")
    fit.add_argument("--scheme", choices=_SCHEMES, default="main")
    fit.add_argument("--target", choices=("squared", "absolute"),
                     default="squared")
    fit.add_argument("--step-scale", type=float, default=1.0)
    fit.add_argument("--delta", type=float, default=1e-3,
                     help="guard/shift hyperparameter of the *_capped/kl/iols schemes")
    fit.add_argument("--p", type=float, default=1.0,
                     help="residual exponent of the irls_pnorm scheme")
    fit.add_argument("--nalpha", type=int, default=None)
    fit.add_argument("--nbeta", type=int, default=None)
    fit.add_argument("--save-model", default=None)
    fit.add_argument("--format", choices=("text", "json"), default="text")
    fit.add_argument("--seed", type=int, default=0,
                     help="reserved for randomized probes; the pipeline is deterministic")

    swp = sub.add_parser("sweep", help="scan (u, order) cells into a CSV")
    swp.add_argument("--sites", type=int, required=True)
    swp.add_argument("--orders", default="1",
                     help="comma list or a..b range, e.g. '1,2,5' or '1..5'")
    swp.add_argument("--u", dest="u_list", default=None,
                     help="comma list (use --u=-10,-5,... for negatives)")
    swp.add_argument("--basis", choices=("site", "no"), default="no")
    swp.add_argument("--periodic", action="store_true")
    swp.add_argument("--alpha", type=float, default=0.0)
    swp.add_argument("--beta", type=float, default=-1.0)
    swp.add_argument("--nalpha", type=int, default=None)
    swp.add_argument("--nbeta", type=int, default=None)
    swp.add_argument("--target", choices=("squared", "absolute"),
                     default="squared")
    swp.add_argument("--step-scale", type=float, default=1.0)
    swp.add_argument("--seed", type=int, default=0,
                     help="reserved for randomized probes; the pipeline is deterministic")
    swp.add_argument("--out", required=True)
    return parser


def _parse_orders(text):
    text = text.strip()
    if ".." in text:
        lo, _, hi = text.partition("..")
        return tuple(range(int(lo), int(hi) + 1))
    return tuple(int(tok) for tok in text.split(",") if tok)


def _parse_u_list(text):
    return tuple(float(tok) for tok in text.split(",") if tok)


def _electron_counts(header, n_spatial, nalpha, nbeta):
    """Counts from flags when given, otherwise from the FCIDUMP header."""
    if (nalpha is None) != (nbeta is None):
        raise _UsageError("--nalpha and --nbeta must be given together")
    if nalpha is None:
        if header.nelec > 0:
            nalpha = (header.nelec + header.ms2) // 2
            nbeta = header.nelec - nalpha
        elif n_spatial % 2 == 0:
            nalpha = nbeta = n_spatial // 2
        else:
            raise _UsageError("cannot infer electron counts; pass --nalpha/--nbeta")
    if not (0 <= nalpha <= n_spatial and 0 <= nbeta <= n_spatial):
        raise _UsageError(
            f"electron counts ({nalpha}, {nbeta}) outside [0, {n_spatial}]")
    return nalpha, nbeta


def _cmd_hubbard(args):
    try:
        spec = HubbardSpec(n_sites=args.sites, u=args.u, alpha=args.alpha,
                           beta=args.beta,
                           boundary="periodic" if args.periodic else "open")
    except ValueError as exc:
        raise _UsageError(str(exc)) from exc
    integrals = build_hubbard(spec)
    n_elec = args.sites if args.nalpha is None else args.nalpha + args.nbeta
    ms2 = 0 if args.nalpha is None else args.nalpha - args.nbeta
    write_fcidump(integrals, args.out, n_elec=n_elec, ms2=ms2)
    print(f"wrote {args.out}: {args.sites} sites, u={args.u}, "
          f"{'periodic' if args.periodic else 'open'} chain")
    return 0


def _cmd_solve(args):
    integrals = read_fcidump(args.fcidump)
    header = read_fcidump_header(args.fcidump)
    na, nb = _electron_counts(header, integrals.n_spatial, args.nalpha, args.nbeta)
    if args.basis == "no":
        from .natorb import no_pipeline
        psi, _, _ = no_pipeline(integrals, na, nb, mode=args.mode)
    else:
        from .fci import solve_ground_state
        psi = solve_ground_state(integrals, na, nb, mode=args.mode)
    print(f"energy: {psi.energy:.10f}")
    print(f"determinants: {len(psi.basis)}")
    print("dominant determinants (alpha|beta  coefficient):")
    for det, coeff in psi.dominant(8):
        print(f"  {det}  {coeff:+.8f}")
    return 0


def _make_scheme(args):
    if args.scheme == "main":
        return "main"
    return BaselineScheme(kind=args.scheme, p=args.p, delta=args.delta)


def _cmd_fit(args):
    integrals = read_fcidump(args.fcidump)
    header = read_fcidump_header(args.fcidump)
    na, nb = _electron_counts(header, integrals.n_spatial, args.nalpha, args.nbeta)
    scheme = _make_scheme(args)
    if args.save_model and scheme != "main":
        raise _UsageError("--save-model applies to the main scheme only")
    config = FitConfig(magnitude_target=args.target, step_scale=args.step_scale)
    report, model, _, _ = evaluate_fit(integrals, na, nb, args.order,
                                       basis=args.basis, scheme=scheme,
                                       config=config, mode=args.mode)
    if args.save_model:
        save_model(model, args.save_model)
    if args.format == "json":
        print(report.to_json())
    else:
        print(f"scheme: {args.scheme}")
        print(f"basis: {args.basis}")
        for key, value in asdict(report).items():
            print(f"{key}: {value}")
    return 0


def _cmd_sweep(args):
    u_values = (_parse_u_list(args.u_list) if args.u_list
                else tuple(float(u) for u in (-10, -5, -2, -1, 0, 1, 2, 5, 10)))
    spec = SweepSpec(
        n_sites=args.sites,
        orders=_parse_orders(args.orders),
        u_values=u_values,
        basis=args.basis,
        boundary="periodic" if args.periodic else "open",
        alpha=args.alpha,
        beta=args.beta,
        n_alpha=args.nalpha,
        n_beta=args.nbeta,
        config=FitConfig(magnitude_target=args.target,
                         step_scale=args.step_scale),
    )
    rows = sweep(spec)
    write_csv(rows, args.out)
    failures = sum(1 for row in rows if row["error"])
    print(f"wrote {args.out}: {len(rows)} cells, {failures} failed")
    return 0


_COMMANDS = {"hubbard": _cmd_hubbard, "solve": _cmd_solve,
             "fit": _cmd_fit, "sweep": _cmd_sweep}


def run(argv) -> int:
    """Entry point used by tests and ``main``; returns the exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        command = _COMMANDS[args.command]
    except KeyError:  # pragma: no cover - argparse enforces the choices
        return 1
    try:
        return command(args)
    except (_UsageError, FcidumpError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
