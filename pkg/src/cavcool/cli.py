"""Command-line entry point.

Exit codes: 0 success, 1 invalid input, 2 numerical failure, 3 validity
violation under ``--strict``.  All quantities are in units of the atomic
decay rate.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import sys
import warnings
from typing import Sequence

import numpy as np

from . import analytic, oracle, rateeq, scan
from .csvfmt import fmt
from .errors import NumericalError, ParameterError
from .params import LambDickeWarning, SystemParams, load_params, validate

log = logging.getLogger("cavcool")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_VALIDITY = 0, 1, 2, 3
# drives weaker than this never reach their stationary state in practice
NO_DRIVE_OMEGA = 1e-6

OVERRIDES = ("nu", "delta", "omega", "kappa", "gamma_atom", "eta", "g")


def _common(p: argparse.ArgumentParser):
    p.add_argument("--params", help="JSON file with nu, delta, omega, kappa, gamma_atom, eta, g")
    for name in OVERRIDES:
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=float, default=None)
    p.add_argument("--strict", action="store_true", help="exit 3 if eta*g is not small enough")
    p.add_argument("--out", help="write CSV here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cavcool", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    _common(sub.add_parser("resonances", help="cooling and heating detunings"))
    _common(sub.add_parser("validate", help="check eta*g against max(|delta|, kappa, nu)"))

    for name, text in (("mss", "stationary phonon number"), ("coolrate", "effective cooling rate")):
        p = sub.add_parser(name, help=text)
        _common(p)
        backend = p.add_mutually_exclusive_group()
        backend.add_argument("--eliminate", action="store_true", help="numerical elimination of the rate equations")
        backend.add_argument("--strong", action="store_true", help="strong-drive approximation")
        p.add_argument("--tfinal", type=float, help="also integrate the rate equations up to this time")
        p.add_argument("--dt", type=float)
        p.add_argument("--m0", type=float, default=0.0, help="initial phonon number for --tfinal")
        p.add_argument("--samples", type=int, default=200)

    p = sub.add_parser("sweep", help="single-axis parameter sweep")
    _common(p)
    p.add_argument("--axis", choices=scan.AXES, default="delta")
    p.add_argument("--grid", required=True, help="start:stop:step (inclusive)")
    p.add_argument("--law", choices=tuple(scan.LAWS), default="closed")
    p.add_argument("--track", choices=scan.TRACKS, help="lock delta to a cooling resonance")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-refine", action="store_true", help="skip minimum refinement")

    p = sub.add_parser("oracle", help="full master-equation simulation")
    _common(p)
    p.add_argument("--nb", type=int, default=6)
    p.add_argument("--nc", type=int, default=6)
    p.add_argument("--dt", type=float)
    p.add_argument("--tfinal", type=float, help="integrate up to this time and emit the trajectory")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--steady", action="store_true", help="compute the stationary state")
    p.add_argument("--coherences", action="store_true", help="add x_ijk columns to the trajectory")
    init = p.add_mutually_exclusive_group()
    init.add_argument("--phonon-fock", type=int, default=0)
    init.add_argument("--phonon-thermal", type=float)

    p = sub.add_parser("compare", help="cooling law at the three cooling resonances")
    _common(p)
    p.add_argument("--law", choices=tuple(scan.LAWS), default="closed")
    return parser


def _params(args) -> SystemParams:
    overrides = {k: getattr(args, k) for k in OVERRIDES}
    if args.params:
        return load_params(args.params, **overrides)
    return SystemParams(**{k: v for k, v in overrides.items() if v is not None})


def _run_header(args, params: SystemParams) -> list[str]:
    run = {k: v for k, v in vars(args).items() if k not in OVERRIDES and k not in ("params", "out")}
    return [f"params: {params.to_json()}", f"run: {json.dumps(run, sort_keys=True)}"]


def _emit(text: str, args):
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _law(args, params: SystemParams) -> analytic.CoolingLaw:
    if params.omega < NO_DRIVE_OMEGA:
        raise ParameterError(
            f"no drive: omega = {params.omega:g} gives no effective cooling "
            "(the cooling rate vanishes as omega -> 0 and the stationary state is never reached)"
        )
    if args.eliminate:
        return rateeq.eliminate(params)
    if args.strong:
        return analytic.strong_drive_cooling_law(params)
    return analytic.cooling_law_closed(params)


def _cmd_resonances(args, params):
    cat = analytic.resonance_catalogue(params.nu, params.omega)
    return "cooling {} {} {}\nheating {} {} {}\n".format(*(f"{v:g}" for v in cat.cooling + cat.heating))


def _cmd_validate(args, params):
    rep = validate(params)
    return f"ratio={fmt(rep.ratio)}\nok={str(rep.ok).lower()}\nthreshold={rep.threshold:g}\n"


def _law_lines(law: analytic.CoolingLaw, first: str) -> list[str]:
    fields = {"m_ss": law.m_ss, "gamma_c": law.gamma_c, "c": law.c_source}
    order = [first] + [k for k in fields if k != first]
    return [f"{k}={fmt(fields[k])}" for k in order] + [f"status={law.status}"]


def _cmd_law(args, params):
    law = _law(args, params)
    lines = _law_lines(law, "m_ss" if args.command == "mss" else "gamma_c")
    if args.tfinal is None:
        return "\n".join(lines) + "\n"
    system = rateeq.assemble(params)
    dt = args.dt if args.dt is not None else rateeq.max_step(params)
    y0 = np.zeros(rateeq.DIM)
    y0[0] = args.m0
    t, y = rateeq.integrate(system, y0, args.tfinal, dt, samples=args.samples)
    buf = io.StringIO()
    for line in _run_header(args, params) + lines:
        buf.write(f"# {line}\n")
    rateeq.write_trajectory_csv(t, y, buf)
    return buf.getvalue()


def _cmd_sweep(args, params):
    spec = scan.SweepSpec(args.axis, scan.parse_grid(args.grid), params, args.law, args.track)
    result = scan.sweep(spec, workers=args.workers, refine=not args.no_refine)
    buf = io.StringIO()
    result.write_csv(buf, comments=_run_header(args, params))
    return buf.getvalue()


def _cmd_compare(args, params):
    rows = scan.compare_resonances(params, law=args.law)
    best = scan.best_resonance(rows)
    buf = io.StringIO()
    for line in _run_header(args, params):
        buf.write(f"# {line}\n")
    buf.write("resonance,delta,m_ss,gamma_c,status,best\n")
    for r in rows:
        mark = "*" if best is not None and r.name == best.name else ""
        buf.write(f"{r.name},{fmt(r.delta)},{fmt(r.law.m_ss)},{fmt(r.law.gamma_c)},{r.law.status},{mark}\n")
    return buf.getvalue()


def _cmd_oracle(args, params):
    if args.tfinal is None and not args.steady:
        raise ParameterError("oracle needs --tfinal and/or --steady")
    model = oracle.build_model(params, oracle.FockConfig(args.nb, args.nc))
    buf = io.StringIO()
    for line in _run_header(args, params):
        buf.write(f"# {line}\n")
    if args.steady:
        ss = oracle.steady_state(model)
        if ss.degenerate:
            buf.write("# steady: degenerate (phonon number conserved, no unique stationary state)\n")
        else:
            rep = oracle.truncation_check(model, ss.rho)
            vals = {k: ss.expect(op) for k, op in model.observables.items()}
            buf.write(
                "# steady: " + ",".join(f"{k}={fmt(v)}" for k, v in vals.items())
                + f",top_phonon={fmt(rep.top_phonon)},top_cavity={fmt(rep.top_cavity)}"
                + f",truncation_ok={str(rep.ok).lower()}\n"
            )
            if not rep.ok:
                log.warning("truncation check failed: top Fock levels hold more than %g", rep.threshold)
    if args.tfinal is not None:
        rho0 = oracle.initial_state(model, args.phonon_fock, args.phonon_thermal)
        x_idx = [tuple(int(ch) for ch in n[1:]) for n in rateeq.STATE_NAMES[1:]] if args.coherences else None
        traj = oracle.evolve(model, rho0, args.tfinal, args.dt, samples=args.samples, x_indices=x_idx)
        traj.write_csv(buf)
    return buf.getvalue()


COMMANDS = {
    "resonances": _cmd_resonances,
    "validate": _cmd_validate,
    "mss": _cmd_law,
    "coolrate": _cmd_law,
    "sweep": _cmd_sweep,
    "oracle": _cmd_oracle,
    "compare": _cmd_compare,
}


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", LambDickeWarning)
            params = _params(args)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        if args.strict and not validate(params).ok:
            rep = validate(params)
            print(f"error: validity violated, eta*g / max(|delta|, kappa, nu) = {rep.ratio:.3g} "
                  f">= {rep.threshold:g}", file=sys.stderr)
            return EXIT_VALIDITY
        text = COMMANDS[args.command](args, params)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    _emit(text, args)
    return EXIT_OK


def main() -> None:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    sys.exit(run())
