"""Command line entry point: ``asep-cutoff <subcommand> [options]``.

Results go to ``--out`` (or ``$ASEP_CUTOFF_OUTDIR/<subcommand>.<fmt>``, or
stdout) together with a JSON manifest recording the version, git revision,
seed and every parameter.  ``--config file.json`` supplies defaults for any
flag.  Exit codes: 0 success, 1 invalid input, 2 failed identity check.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import subprocess
import sys
from pathlib import Path

import numpy as np

from . import __version__

OUTDIR_ENV = "ASEP_CUTOFF_OUTDIR"
EXIT_OK, EXIT_INVALID, EXIT_VERIFY = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _git_describe() -> str:
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"], capture_output=True, text=True,
                             cwd=Path(__file__).resolve().parent, timeout=5)
        return out.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


def _float_list(text):
    return [float(v) for v in str(text).replace(",", " ").split()]


def _grid(args):
    if getattr(args, "c", None):
        return _float_list(args.c)
    if args.c_min > args.c_max or args.c_step <= 0:
        raise ValueError("need c_min <= c_max and c_step > 0")
    n = int(math.floor((args.c_max - args.c_min) / args.c_step + 1e-9)) + 1
    return [round(args.c_min + i * args.c_step, 12) for i in range(n)]


def _rates(args):
    if args.Q is not None:
        if not 0 <= args.Q < 1:
            raise ValueError("Q must lie in [0, 1)")
        return 1.0 / (1.0 + args.Q), args.Q
    if not 0.5 < args.p <= 1:
        raise ValueError("p must lie in (1/2, 1]")
    return args.p, (1 - args.p) / args.p


def _common(sp, reps=1000):
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--reps", type=int, default=reps)
    sp.add_argument("--threads", type=int, default=1, help="worker cap; results do not depend on it")


def _rate_args(sp, p=0.9):
    sp.add_argument("--p", type=float, default=p)
    sp.add_argument("--Q", type=float, default=None, help="overrides --p with p = 1/(1+Q)")


def _grid_args(sp, lo=-4.0, hi=4.0, step=1.0):
    sp.add_argument("--c", type=str, default=None, help="explicit c values, comma separated")
    sp.add_argument("--c-min", type=float, default=lo)
    sp.add_argument("--c-max", type=float, default=hi)
    sp.add_argument("--c-step", type=float, default=step)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="asep-cutoff", description="ASEP mixing-time cutoff experiments")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", type=str, default=None, help="JSON file with flag defaults")
        sp.add_argument("--out", type=str, default=None)
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        return sp

    sp = add("hecke-verify", "exact Hecke-algebra distribution identity")
    for nm in ("S", "R", "M"):
        sp.add_argument(f"--{nm}", type=int, default=1)
    sp.add_argument("--t", type=float, default=1.0)
    _rate_args(sp, p=None)
    sp.add_argument("--x", type=float, default=None)
    sp.add_argument("--y", type=float, default=None)
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.set_defaults(format="json")

    sp = add("tw-table", "F_GUE table and predicted profile 1 - F_GUE(c f(alpha))")
    sp.add_argument("--alpha", type=float, default=0.5)
    _grid_args(sp)
    sp.add_argument("--step", dest="c_step", type=float)
    sp.add_argument("--m", type=int, default=60)

    sp = add("profile", "TV sandwich sweep: MC lower/upper bounds and prediction")
    sp.add_argument("--N", type=int, default=8)
    sp.add_argument("--k", type=int, default=None)
    _rate_args(sp)
    _grid_args(sp)
    sp.add_argument("--l", type=int, default=None)
    sp.add_argument("--exact", action="store_true")
    _common(sp)

    sp = add("mix-exact", "exact TV distance curve by uniformization")
    sp.add_argument("--N", type=int, default=8)
    sp.add_argument("--k", type=int, default=None)
    _rate_args(sp)
    _grid_args(sp)
    sp.add_argument("--times", type=str, default=None)
    sp.add_argument("--from", dest="start", choices=("xi0", "xi1", "worst"), default="xi0")

    sp = add("mix-mc", "Monte Carlo lower and upper bounds on the TV distance")
    sp.add_argument("--N", type=int, default=8)
    sp.add_argument("--k", type=int, default=None)
    _rate_args(sp)
    _grid_args(sp)
    sp.add_argument("--l", type=int, default=None)
    sp.add_argument("--lower-exp", type=float, default=0.25, help="l = ceil(N^exp) unless --l")
    _common(sp)

    sp = add("hitting", "hitting time of zeta1 from zeta0 and its overlap with B_N(c)")
    sp.add_argument("--N", type=int, default=64)
    sp.add_argument("--k", type=int, default=None)
    _rate_args(sp)
    sp.add_argument("--c", type=float, default=0.0)
    sp.add_argument("--delay-exp", type=float, default=0.2)
    sp.add_argument("--window-exp", type=float, default=0.1)
    _common(sp)

    sp = add("step-fluct", "step-initial-data fluctuation profile")
    sp.add_argument("--N", type=int, default=256)
    sp.add_argument("--k", type=int, default=None)
    _rate_args(sp)
    _grid_args(sp)
    sp.add_argument("--kappa", type=float, default=0.0)
    sp.add_argument("--c-prime", type=float, default=0.0)
    sp.add_argument("--kappa-prime", type=float, default=0.0)
    sp.add_argument("--c-dprime", type=float, default=0.0)
    _common(sp)

    sp = add("identity-mc", "Monte Carlo check of the auxiliary-process identity")
    sp.add_argument("--S", type=int, default=50)
    sp.add_argument("--R", type=int, default=20)
    sp.add_argument("--M", type=int, default=20)
    sp.add_argument("--t", type=float, default=10.0)
    _rate_args(sp, p=None)
    sp.add_argument("--x", type=float, default=-22)
    sp.add_argument("--y", type=float, default=22)
    sp.add_argument("--z-tol", type=float, default=3.0)
    _common(sp, reps=10_000)

    sp = add("event-b", "probability of the event B_N(c)")
    sp.add_argument("--N", type=int, default=256)
    sp.add_argument("--k", type=int, default=None)
    _rate_args(sp)
    _grid_args(sp)
    sp.add_argument("--window-exp", type=float, default=0.1)
    _common(sp)
    return ap


def _parse(argv):
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.command is None:
        raise UsageError(ap.format_usage().strip())
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValueError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ValueError("config file must hold a JSON object")
        sub = ap._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = set(cfg) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        sub.set_defaults(**cfg)
        args = ap.parse_args(argv)
    return args


def _k_default(args):
    if args.k is None:
        args.k = args.N // 2
    if not 1 <= args.k < args.N:
        raise ValueError("need 1 <= k < N")


def _cmd_hecke(args):
    from .hecke import corollary_event_check, distribution_identity_check

    if args.Q is None:
        raise ValueError("hecke-verify needs --Q")
    p = args.p if args.p is not None else 1.0 / (1.0 + args.Q)
    dev = distribution_identity_check(args.S, args.R, args.M, args.t, p, args.Q)
    rec = {"identity": "walk-mallows distribution identity", "S": args.S, "R": args.R, "M": args.M,
           "t": args.t, "p": p, "Q": args.Q, "deviation": dev, "tolerance": args.tol}
    if args.x is not None and args.y is not None:
        lhs, rhs = corollary_event_check(args.S, args.R, args.M, args.t, p, args.Q, args.x, args.y)
        rec.update({"x": args.x, "y": args.y, "event_lhs": lhs, "event_rhs": rhs})
        dev = max(dev, abs(lhs - rhs))
    rec["passed"] = bool(dev <= args.tol)
    return [rec], None, (EXIT_OK if rec["passed"] else EXIT_VERIFY)


def _cmd_tw(args):
    from .tracy_widom import QuadratureSpec, f_alpha, f_gue

    fa = f_alpha(args.alpha)
    quad = QuadratureSpec(m=args.m)
    rows = []
    for c in _grid(args):
        s = c * fa
        F = f_gue(s, quad)
        rows.append({"c": c, "s": s, "F_GUE": F, "predicted": 1.0 - F})
    return rows, ("c", "s", "F_GUE", "predicted"), EXIT_OK


def _cmd_profile(args):
    from .experiments import TV_CURVE_COLUMNS, profile_report

    _k_default(args)
    p, _ = _rates(args)
    rep = profile_report({"N": args.N, "k": args.k, "p": p, "c_grid": _grid(args), "reps": args.reps,
                          "seed": args.seed, "l": args.l, "exact": args.exact, "threads": args.threads})
    return rep["tv_curve"], TV_CURVE_COLUMNS, EXIT_OK


def _cmd_mix_exact(args):
    from .experiments import TV_CURVE_COLUMNS, exact_mixing_curve
    from .tracy_widom import g_time

    _k_default(args)
    p, _ = _rates(args)
    times = _float_list(args.times) if args.times else [g_time(args.N, args.k, c, p) for c in _grid(args)]
    if any(t < 0 for t in times):
        raise ValueError("times must be nonnegative")
    est = exact_mixing_curve(args.N, args.k, p, times, args.start)
    return [{"c": e.c, "t": e.t, "exact": e.exact} for e in est], TV_CURVE_COLUMNS, EXIT_OK


def _cmd_mix_mc(args):
    from .experiments import TV_CURVE_COLUMNS, tv_lower_bound_mc, tv_upper_bound_mc
    from .tracy_widom import f_alpha, f_gue

    _k_default(args)
    p, _ = _rates(args)
    grid = _grid(args)
    l = args.l if args.l is not None else math.ceil(args.N**args.lower_exp)
    up = tv_upper_bound_mc(args.N, args.k, p, grid, args.reps, args.seed, threads=args.threads)
    lo = tv_lower_bound_mc(args.N, args.k, p, grid, l, args.reps, args.seed + 1, threads=args.threads)
    fa = f_alpha(args.k / args.N)
    rows = [{"c": u.c, "t": u.t, "lower": w.lower, "lower_se": w.lower_se, "upper": u.upper,
             "upper_se": u.upper_se, "predicted": 1.0 - f_gue(u.c * fa)} for u, w in zip(up, lo)]
    return rows, TV_CURVE_COLUMNS, EXIT_OK


def _cmd_hitting(args):
    from .experiments import hitting_samples
    from .tracy_widom import g_time

    _k_default(args)
    p, _ = _rates(args)
    N, k = args.N, args.k
    t = g_time(N, k, args.c, p)
    delay = N**args.delay_exp
    H, obs = hitting_samples(N, k, p, args.reps, args.seed, t + delay, checkpoints=[t], threads=args.threads)
    L, R = obs[:, 0, 0], obs[:, 0, 1]
    B = (L > N - k - N**args.window_exp) & (R <= N - k + N**args.window_exp)
    late = H >= t + delay
    joint = float(np.mean(late & B))
    row = {"N": N, "k": k, "c": args.c, "t": t, "t_late": t + delay, "P_late": float(late.mean()),
           "P_B": float(B.mean()), "P_late_and_B": joint,
           "se": math.sqrt(joint * (1 - joint) / args.reps), "reps": args.reps}
    return [row], tuple(row), EXIT_OK


def _cmd_step(args):
    from .experiments import PROFILE_COLUMNS, step_fluct_mc

    _k_default(args)
    p, _ = _rates(args)
    pts = step_fluct_mc(args.N, args.k, p, _grid(args), args.kappa, args.c_prime, args.kappa_prime,
                        args.c_dprime, args.reps, args.seed, threads=args.threads)
    return [pt.row() for pt in pts], PROFILE_COLUMNS, EXIT_OK


def _cmd_identity(args):
    from .experiments import IDENTITY_COLUMNS, auxiliary_identity_mc

    if args.Q is None:
        raise ValueError("identity-mc needs --Q")
    p = args.p if args.p is not None else 1.0 / (1.0 + args.Q)
    est = auxiliary_identity_mc(args.S, args.R, args.M, args.t, p, args.Q, args.x, args.y, args.reps,
                                args.seed, threads=args.threads)
    code = EXIT_OK if est.z_score <= args.z_tol else EXIT_VERIFY
    return [est.row()], IDENTITY_COLUMNS, code


def _cmd_event_b(args):
    from .experiments import event_B_mc
    from .tracy_widom import f_alpha, f_gue

    _k_default(args)
    p, _ = _rates(args)
    grid = _grid(args)
    est, se = event_B_mc(args.N, args.k, p, grid, args.window_exp, args.reps, args.seed, threads=args.threads)
    fa = f_alpha(args.k / args.N)
    rows = [{"c": c, "estimate": float(e), "se": float(s), "predicted": f_gue(c * fa)}
            for c, e, s in zip(grid, est, se)]
    return rows, ("c", "estimate", "se", "predicted"), EXIT_OK


COMMANDS = {
    "hecke-verify": _cmd_hecke,
    "tw-table": _cmd_tw,
    "profile": _cmd_profile,
    "mix-exact": _cmd_mix_exact,
    "mix-mc": _cmd_mix_mc,
    "hitting": _cmd_hitting,
    "step-fluct": _cmd_step,
    "identity-mc": _cmd_identity,
    "event-b": _cmd_event_b,
}


def _validate(args):
    for name in ("reps", "threads"):
        v = getattr(args, name, None)
        if v is not None and v < 1:
            raise ValueError(f"--{name} must be >= 1")


def _render(rows, columns, fmt):
    from .experiments import write_csv

    if fmt == "json" or columns is None:
        return json.dumps(rows, indent=2, sort_keys=True, default=float) + "\n"
    return write_csv(rows, columns)


def run(argv=None) -> int:
    """Execute one subcommand; returns the process exit code."""
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        if not argv:
            raise UsageError(build_parser().format_usage().strip())
        args = _parse(argv)
        _validate(args)
        rows, columns, code = COMMANDS[args.command](args)
        text = _render(rows, columns, args.format)
        manifest = {
            "command": args.command,
            "version": __version__,
            "git": _git_describe(),
            "argv": argv,
            "params": {k: v for k, v in vars(args).items() if k not in ("out",)},
            "exit_code": code,
        }
        out = args.out
        if out is None and os.environ.get(OUTDIR_ENV):
            out = str(Path(os.environ[OUTDIR_ENV]) / f"{args.command}.{args.format}")
        if out is None:
            sys.stdout.write(text)
            sys.stderr.write(json.dumps(manifest, sort_keys=True) + "\n")
        else:
            path = Path(out)
            try:
                path.parent.mkdir(parents=True, exist_ok=True)
                path.write_text(text)
                Path(str(path) + ".manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
            except OSError as exc:
                raise ValueError(f"cannot write {out}: {exc}") from exc
        return code
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_INVALID
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INVALID


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
