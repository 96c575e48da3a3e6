"""Command-line sweeps that emit the data behind each figure as CSV or JSON.

Exit status: 0 on success, 2 for bad arguments (usage on stderr), 3 when a
quadrature fails to converge (the offending parameter point is named).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from functools import partial

import numpy as np

from . import __version__
from .attacks import (
    AttackKind,
    AttackModel,
    ber_intermediate,
    ber_simultaneous,
    eve_ber_intercept,
    intermediate_attack_signal,
    resend_probabilities,
    simultaneous_attack_signal,
    wrong_basis_monitor,
)
from .core_math import ConvergenceError
from .keygain import SearchGrid, key_gain, optimize
from .montecarlo import SimConfig, simulate, simulate_eve_bs
from .protocol import ProtocolParams, ber_no_eve, postselection_efficiency
from .states import (
    CoherentEnsemble,
    CoherentState,
    distribution_distance,
    ensemble_density,
    rho_correct,
    rho_wrong,
)

TOOL = "homodyne-qkd"
# flags whose values may legitimately start with '-'
_RANGE_FLAGS = ("--range", "--x-range")

UNITS = {
    "x": "quadrature (shot-noise variance 1/4)",
    "n": "mean photons per pulse",
    "x0": "quadrature threshold",
    "loss": "fraction 1-eta",
    "G": "secure bits per signal",
    "i_ab": "bits",
    "tau": "bits",
}


class PointFailure(Exception):
    def __init__(self, point: str, cause: str = ""):
        super().__init__(point, cause)
        self.point = point
        self.cause = cause


def parse_axis(text: str) -> list[float]:
    """``start:stop:step`` (stop inclusive), ``a,b,c`` or a single number."""
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3:
                raise ValueError
            start, stop, step = parts
            if not step > 0:
                raise argparse.ArgumentTypeError(f"step must be > 0 in {text!r}")
            if start > stop:
                raise argparse.ArgumentTypeError(f"start must not exceed stop in {text!r}")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            return [round(start + i * step, 12) for i in range(count)]
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse {text!r} as a number, list or start:stop:step")


def default_jobs() -> int:
    env = os.environ.get("HOMODYNE_QKD_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _dispatch(func, points, jobs):
    """Evaluate ``func`` on each point; output order always follows ``points``."""
    if jobs > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(points))) as pool:
            return list(pool.map(func, points))
    return [func(p) for p in points]


def _pointwise(func, fixed, labels, point):
    """Call ``func(*fixed, *point)``, tagging convergence failures with the point."""
    values = (*fixed, *point)
    try:
        return func(*values)
    except ConvergenceError as exc:
        label = ", ".join(f"{k}={v}" for k, v in zip(labels, values) if k)
        raise PointFailure(label, str(exc)) from None


# --- per-point workers (top level so they pickle) -------------------------

def _dist_density(basis, attack, n):
    if attack == "simultaneous":
        signal = simultaneous_attack_signal(n)
    elif attack == "intermediate":
        signal = intermediate_attack_signal(n)
    else:
        signal = None
    if basis == "correct":
        ens = signal.correct_basis if signal else rho_correct(n)
    elif basis == "wrong":
        ens = signal.wrong_basis if signal else rho_wrong(n)
    else:
        ens = signal.sent_alpha if signal else CoherentEnsemble(((1.0, CoherentState(math.sqrt(n))),))
        if basis == "minus-alpha":
            ens = CoherentEnsemble(tuple((w, CoherentState(s.amplitude, s.phase + math.pi))
                                         for w, s in ens.components))
    return ensemble_density(ens, 0.0)


def _ber_row(x0, n):
    sim = ber_simultaneous(x0, n)
    mid = ber_intermediate(x0, n)
    return [n, x0, postselection_efficiency(x0, n), ber_no_eve(x0, n), eve_ber_intercept(n),
            sim.bob_ber, sim.efficiency, mid.bob_ber, mid.efficiency]


def _attack_row(attack, x0, n):
    if attack == "simultaneous":
        t = resend_probabilities(n)
        signal = simultaneous_attack_signal(n)
        res = ber_simultaneous(x0, n)
        triple = [t.p_plus, t.p_perp, t.p_minus]
    else:
        signal = intermediate_attack_signal(n)
        res = ber_intermediate(x0, n)
        triple = [None, None, None]
    wrong = wrong_basis_monitor(ensemble_density(signal.wrong_basis, 0.0), n)
    correct = distribution_distance(ensemble_density(signal.correct_basis, 0.0),
                                    ensemble_density(rho_correct(n), 0.0))
    return [n, x0, *triple, eve_ber_intercept(n), res.bob_ber, res.efficiency, wrong, correct]


def _keygain_row(loss, n, x0):
    r = key_gain(ProtocolParams.from_loss(n, x0, loss))
    return [loss, n, x0, r.efficiency, r.i_ab, r.tau, r.gain]


def _optimize_row(grid, loss, n):
    o = optimize(loss, grid, n=n)
    return [loss, n, o.best_x0, o.best_n, o.best_G, o.secure]


# --- commands -------------------------------------------------------------

def cmd_dist(args):
    density = _dist_density(args.basis, args.attack, args.n)
    values = density(np.array(args.range))
    return ["x", "density"], [[x, float(d)] for x, d in zip(args.range, values)]


def cmd_ber_curve(args):
    columns = ["n", "x0", "P_no_eve", "q_no_eve", "q_eve", "q_eb_simultaneous",
               "P_simultaneous", "q_eb_intermediate", "P_intermediate"]
    points = [(n,) for n in args.n_range]
    func = partial(_pointwise, _ber_row, (args.x0,), ("x0", "n"))
    return columns, _dispatch(func, points, args.jobs)


def cmd_attack(args):
    columns = ["n", "x0", "p_plus", "p_perp", "p_minus", "eve_ber", "bob_ber", "efficiency",
               "wrong_basis_l1", "correct_basis_l1"]
    points = [(n,) for n in args.n_range]
    func = partial(_pointwise, _attack_row, (args.attack, args.x0), (None, "x0", "n"))
    return columns, _dispatch(func, points, args.jobs)


def cmd_keygain(args):
    columns = ["loss", "n", "x0", "P", "i_ab", "tau", "G"]
    points = [(loss, n, x0) for n in args.n for x0 in args.x0 for loss in args.loss_range]
    func = partial(_pointwise, _keygain_row, (), ("loss", "n", "x0"))
    return columns, _dispatch(func, points, args.jobs)


def cmd_optimize(args):
    columns = ["loss", "n_fixed", "best_x0", "best_n", "best_G", "secure"]
    grid = SearchGrid(args.x0_max, args.step, args.n_max, args.step, args.tol)
    ns = args.n if args.n is not None else [None]
    points = [(loss, n) for n in ns for loss in args.loss]
    func = partial(_pointwise, _optimize_row, (grid,), (None, "loss", "n"))
    return columns, _dispatch(func, points, args.jobs)


def cmd_montecarlo(args):
    columns = ["n", "x0", "loss", "attack", "pulses", "seed", "sifted", "conclusive", "errors",
               "empirical_P", "std_err_P", "empirical_q", "std_err_q",
               "analytic_P", "analytic_q", "eve_ber", "analytic_eve_ber"]
    if args.attack in ("simultaneous", "intermediate") and args.loss:
        raise argparse.ArgumentTypeError("intercept-resend attacks are modelled on a lossless channel")
    if args.attack == "beam-splitting":
        attack = AttackModel(AttackKind.BEAM_SPLITTING, args.loss)
    elif args.attack == "none":
        attack = None
    else:
        attack = AttackModel(AttackKind(args.attack))
    params = ProtocolParams.from_loss(args.n, args.x0, args.loss)
    config = SimConfig(args.pulses, params, attack, args.seed)
    res = simulate(config, jobs=args.jobs)

    n_bob = params.transmission * args.n
    eve_ber = res.eve_ber
    analytic_eve = None
    if args.attack == "simultaneous":
        a = ber_simultaneous(args.x0, args.n)
        analytic = (a.efficiency, a.bob_ber)
        analytic_eve = eve_ber_intercept(args.n)
    elif args.attack == "intermediate":
        a = ber_intermediate(args.x0, args.n)
        analytic = (a.efficiency, a.bob_ber)
        analytic_eve = eve_ber_intercept(args.n)
    else:
        analytic = (postselection_efficiency(args.x0, n_bob), ber_no_eve(args.x0, n_bob))
        if args.attack == "beam-splitting":
            eve_ber = simulate_eve_bs(config, args.loss)
            analytic_eve = ber_no_eve(0.0, args.loss * args.n)
    row = [args.n, args.x0, args.loss, args.attack, args.pulses, args.seed,
           res.sifted, res.conclusive, res.errors, res.empirical_P, res.std_err_P,
           res.empirical_q, res.std_err_q, analytic[0], analytic[1], eve_ber, analytic_eve]
    return columns, [row]


HANDLERS = {
    "dist": cmd_dist,
    "ber-curve": cmd_ber_curve,
    "attack": cmd_attack,
    "keygain": cmd_keygain,
    "optimize": cmd_optimize,
    "montecarlo": cmd_montecarlo,
}


# --- output ---------------------------------------------------------------

def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _json_value(v):
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def render(command, params, columns, rows, fmt) -> str:
    units = {c: UNITS[c] for c in columns if c in UNITS}
    if fmt == "json":
        doc = {
            "tool": TOOL,
            "version": __version__,
            "command": command,
            "params": params,
            "columns": columns,
            "units": units,
            "records": [{c: _json_value(v) for c, v in zip(columns, row)} for row in rows],
        }
        return json.dumps(doc, indent=2) + "\n"
    buf = io.StringIO()
    buf.write(f"# {TOOL} {__version__}\n")
    buf.write(f"# command: {command}\n")
    buf.write(f"# params: {json.dumps(params, sort_keys=True)}\n")
    buf.write("# units: " + "; ".join(f"{k}={v}" for k, v in units.items()) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


# --- argument parsing -----------------------------------------------------

def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _nonneg(text):
    v = float(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _loss(text):
    v = float(text)
    if not 0 <= v < 1:
        raise argparse.ArgumentTypeError("loss must lie in [0, 1)")
    return v


def _loss_axis(text):
    values = parse_axis(text)
    if any(not 0 <= v < 1 for v in values):
        raise argparse.ArgumentTypeError("loss values must lie in [0, 1)")
    return values


def _nonneg_axis(text):
    values = parse_axis(text)
    if any(v < 0 for v in values):
        raise argparse.ArgumentTypeError("values must be >= 0")
    return values


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("-o", "--output", default="-", help="output file (default: stdout)")
    common.add_argument("--jobs", type=_positive_int, default=None,
                        help="worker processes (default: $HOMODYNE_QKD_JOBS or CPU count)")

    p = argparse.ArgumentParser(prog=TOOL, description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("dist", parents=[common], help="quadrature distributions")
    s.add_argument("--n", type=_nonneg, required=True)
    s.add_argument("--basis", choices=("correct", "wrong", "alpha", "minus-alpha"), default="correct")
    s.add_argument("--attack", choices=("none", "simultaneous", "intermediate"), default="none")
    s.add_argument("--range", type=parse_axis, default=parse_axis("-3:3:0.01"),
                   help="x grid as start:stop:step")

    s = sub.add_parser("ber-curve", parents=[common], help="bit error rates vs n")
    s.add_argument("--x0", type=_nonneg, default=0.0)
    s.add_argument("--n-range", type=_nonneg_axis, default=parse_axis("0:3:0.01"))

    s = sub.add_parser("attack", parents=[common], help="intercept-resend attack statistics")
    s.add_argument("--attack", choices=("simultaneous", "intermediate"), required=True)
    s.add_argument("--x0", type=_nonneg, default=0.0)
    s.add_argument("--n-range", type=_nonneg_axis, default=parse_axis("0:3:0.1"))

    s = sub.add_parser("keygain", parents=[common], help="secure key gain vs loss")
    s.add_argument("--n", type=_nonneg_axis, default=[1.0])
    s.add_argument("--x0", type=_nonneg_axis, default=[0.0])
    s.add_argument("--loss-range", type=_loss_axis, default=parse_axis("0:0.99:0.01"))

    s = sub.add_parser("optimize", parents=[common], help="optimal threshold and intensity")
    s.add_argument("--loss", type=_loss_axis, required=True)
    s.add_argument("--n", type=_nonneg_axis, default=None,
                   help="fix the intensity and optimise the threshold only")
    s.add_argument("--x0-max", type=float, default=4.0)
    s.add_argument("--n-max", type=float, default=4.0)
    s.add_argument("--step", type=float, default=0.05, help="coarse grid step")
    s.add_argument("--tol", type=float, default=1e-6, help="refinement tolerance")

    s = sub.add_parser("montecarlo", parents=[common], help="pulse-level simulation")
    s.add_argument("--n", type=_nonneg, required=True)
    s.add_argument("--x0", type=_nonneg, default=0.0)
    s.add_argument("--loss", type=_loss, default=0.0)
    s.add_argument("--attack", choices=("none", "simultaneous", "intermediate", "beam-splitting"),
                   default="none")
    s.add_argument("--pulses", type=_positive_int, default=1_000_000)
    s.add_argument("--seed", type=int, default=0)
    return p


def _join_range_values(argv):
    out, i = [], 0
    while i < len(argv):
        if argv[i] in _RANGE_FLAGS and i + 1 < len(argv):
            out.append(f"{argv[i]}={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv=None) -> int:
    argv = _join_range_values(list(sys.argv[1:] if argv is None else argv))
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with status 2 on bad flags
    if args.jobs is None:
        args.jobs = default_jobs()
    params = {k: v for k, v in sorted(vars(args).items())
              if k not in ("command", "output", "format", "jobs")}
    try:
        columns, rows = HANDLERS[args.command](args)
    except argparse.ArgumentTypeError as exc:
        parser.error(str(exc))
    except ValueError as exc:
        parser.error(str(exc))
    except PointFailure as exc:
        print(f"{TOOL}: convergence failure at {exc.point}: {exc.cause}", file=sys.stderr)
        return 3
    except ConvergenceError as exc:
        print(f"{TOOL}: convergence failure: {exc}", file=sys.stderr)
        return 3

    text = render(args.command, params, columns, rows, args.format)
    if args.output == "-":
        sys.stdout.write(text)
    else:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
