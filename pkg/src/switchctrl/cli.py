"""Command-line front end.

    switchctrl certify --fixture exp-3-4 --gamma0 0 --output report.json

Exit codes: 0 success, 1 invalid input, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, NumericalError, SingularGramianError
from .fixtures import ALIASES, FIXTURES, fixture_document, show_fixture
from .invariance import invariance_report
from .metric import DEFAULT_STAGNATION, EpsilonSchedule, k0_estimate
from .model import parse_system
from .riccati import K0, PSD_ERROR_TOL, RiccatiParams, solve
from .simulate import (default_grid_steps, duality_check, gramian_control, mc_cost_dual,
                       pre_jump_drift, random_linear_policies, riccati_feedback_policy,
                       simulate_dual_paths, simulate_primal_paths, write_paths_csv)
from .simulate.backend import DEFAULT as DEFAULT_BACKEND

COMMANDS = ("validate", "invariance", "riccati", "metric", "simulate", "certify")
EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 1, 2
DUMP_PATHS_MAX = 20


class _Parser(argparse.ArgumentParser):
    # usage errors are invalid input (exit 1), keeping 2 for numerical failures
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="switchctrl",
                description="Controllability analysis of linear systems with Markov "
                            "switching and jumps.")
    p.add_argument("command", nargs="?", choices=COMMANDS)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--config", type=Path, help="system description (JSON)")
    src.add_argument("--fixture", help=f"built-in system: {', '.join(sorted(FIXTURES))}")
    p.add_argument("--show-fixture", metavar="NAME", help="print a fixture document and exit")
    p.add_argument("--gamma0", help="initial mode label")
    p.add_argument("--T", type=float, help="horizon")
    p.add_argument("--M", type=int, help="jump cap")
    p.add_argument("--lambda", dest="lam", type=float,
                   help="common jump rate for every mode")
    p.add_argument("--eps-schedule", default=None,
                   help="comma-separated decreasing ε values (default 1e-1,...,1e-6)")
    p.add_argument("--epsilon", type=float, default=1e-3,
                   help="ε for the riccati command and the feedback check (default 1e-3)")
    p.add_argument("--grid-steps", type=int, default=None,
                   help="time steps on [0, T] (default 2000 per unit time)")
    p.add_argument("--samples", type=int, default=1000, help="Monte-Carlo paths")
    p.add_argument("--seed", type=int, default=0, help="base seed")
    p.add_argument("--x0", help="primal initial state, comma-separated (default all ones)")
    p.add_argument("--y0", help="dual initial state, comma-separated (default e1)")
    p.add_argument("--level-M-mode", choices=("gramian", "zero"), default="gramian")
    p.add_argument("--delta-pd", type=float, default=None,
                   help="positive-definiteness threshold for the exact verdict")
    p.add_argument("--stagnation", type=float, default=DEFAULT_STAGNATION)
    p.add_argument("--output", type=Path, help="write the JSON report here (default stdout)")
    p.add_argument("--format", choices=("json",), default="json")
    p.add_argument("--dump-curves", type=Path, help="CSV of the Riccati family")
    p.add_argument("--dump-paths", type=Path, help="CSV of simulated dual paths")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def _load(args) -> tuple:
    if args.config is not None:
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise ConfigError("--config", f"cannot read {args.config}: {exc.strerror}")
        system, source = parse_system(text), {"config": str(args.config)}
    elif args.fixture is not None:
        try:
            doc = fixture_document(args.fixture)
        except KeyError as exc:
            raise ConfigError("--fixture", exc.args[0])
        system, source = parse_system(doc), {"fixture": ALIASES.get(args.fixture, args.fixture)}
    else:
        raise ConfigError("--config", "one of --config or --fixture is required")
    defaults = {"lambda": system.summary()["lambda"], "M": system.M, "T": system.T,
                "gamma0": system.gamma0}
    if args.gamma0 is not None and args.gamma0 not in system.modes:
        raise ConfigError("--gamma0", f"unknown mode {args.gamma0!r}")
    try:
        system = system.with_overrides(T=args.T, M=args.M, gamma0=args.gamma0, lam=args.lam)
    except ConfigError as exc:
        raise ConfigError(f"--{exc.path}", exc.message)
    return system, source, defaults


def _vector(text, N, name, default) -> np.ndarray:
    if text is None:
        return default
    try:
        v = np.array([float(x) for x in text.split(",")])
    except ValueError:
        raise ConfigError(name, f"expected {N} comma-separated numbers")
    if v.shape != (N,):
        raise ConfigError(name, f"expected {N} values, got {v.size}")
    return v


def _schedule(args) -> EpsilonSchedule:
    if args.eps_schedule is None:
        return EpsilonSchedule()
    try:
        return EpsilonSchedule.parse(args.eps_schedule)
    except ValueError as exc:
        raise ConfigError("--eps-schedule", str(exc))


def _check_args(args) -> None:
    if args.grid_steps is not None and args.grid_steps < 100:
        raise ConfigError("--grid-steps", "must be >= 100")
    if args.samples < 100:
        raise ConfigError("--samples", "must be >= 100")
    if not args.epsilon > 0:
        raise ConfigError("--epsilon", "must be positive")
    if args.seed < 0:
        raise ConfigError("--seed", "must be non-negative")


# ---------------------------------------------------------------- sections


def _riccati_section(system, args, L):
    params = RiccatiParams.control_cost(system, args.epsilon, grid_steps=L,
                                        level_M_mode=args.level_M_mode)
    sol = solve(system, params)
    k = K0(sol)
    if args.dump_curves is not None:
        with open(args.dump_curves, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "level", "mode", "i", "j", "K_ij"])
            for row in sol.to_rows():
                w.writerow([repr(row[0]), row[1], row[2], row[3], row[4], repr(row[5])])
    return sol, {
        "epsilon": args.epsilon, "grid_steps": L, "level_M_mode": args.level_M_mode,
        "K0": k.tolist(), "K0_eigenvalues": np.linalg.eigvalsh(k).tolist(),
        "psd_tolerance": PSD_ERROR_TOL,
    }


def _simulation_section(system, args, L, sol):
    N = system.N
    x0 = _vector(args.x0, N, "--x0", np.ones(N))
    y0 = _vector(args.y0, N, "--y0", np.eye(N)[0])
    out = {"samples": args.samples, "base_seed": args.seed, "grid_steps": L,
           "x0": x0.tolist(), "y0": y0.tolist()}

    primal, dual = random_linear_policies(system, np.random.default_rng(args.seed))
    est = duality_check(system, x0, y0, primal, dual, args.samples, args.seed, grid_steps=L)
    out["duality"] = {"policies": "random linear feedback (seeded by base_seed)",
                      "residual": est.mean, "std_error": est.std_error,
                      "within_3_std_errors": bool(abs(est.mean) <= 3 * est.std_error)}

    feedback = riccati_feedback_policy(sol)
    est = mc_cost_dual(system, y0, feedback, args.samples, args.seed + 1, grid_steps=L)
    bound = float(y0 @ K0(sol) @ y0)
    out["riccati_feedback"] = {"epsilon": args.epsilon, "cost": est.mean,
                               "std_error": est.std_error, "riccati_form": bound,
                               "upper_bound_holds": bool(est.mean <= bound + 3 * est.std_error),
                               "base_seed": args.seed + 1}

    try:
        gc = gramian_control(pre_jump_drift(system), system.B[system.gamma0_index],
                             system.T, x0)
    except SingularGramianError as exc:
        out["gramian"] = {"applicable": False, "reason": str(exc)}
    else:
        paths = simulate_primal_paths(system, x0, gc, args.samples, args.seed + 2,
                                      grid_steps=L)
        worst = max(float(np.linalg.norm(sp.terminal)) for sp in paths)
        no_jump = [float(np.linalg.norm(sp.terminal)) for sp in paths if sp.n_jumps == 0]
        out["gramian"] = {"applicable": True, "condition_number": gc.cond,
                          "gramian": gc.G.tolist(), "max_terminal_norm": worst,
                          "max_terminal_norm_without_jump": max(no_jump, default=None),
                          "base_seed": args.seed + 2}

    if args.dump_paths is not None:
        n = min(args.samples, DUMP_PATHS_MAX)
        with open(args.dump_paths, "w", newline="") as fh:
            write_paths_csv(simulate_dual_paths(system, y0, feedback, n, args.seed + 1,
                                                grid_steps=L), fh)
        out["dumped_paths"] = {"file": str(args.dump_paths), "policy": "riccati_feedback",
                               "count": n}
    return out


def run(argv=None) -> tuple:
    """Execute one invocation; returns ``(exit_code, report or None)``."""
    args = build_parser().parse_args(argv)
    if args.show_fixture is not None:
        try:
            print(show_fixture(args.show_fixture))
        except KeyError as exc:
            print(f"error: --show-fixture: {exc.args[0]}", file=sys.stderr)
            return EXIT_INPUT, None
        return EXIT_OK, None
    if args.command is None:
        print("error: a command is required", file=sys.stderr)
        return EXIT_INPUT, None

    timing = {}
    t_all = time.perf_counter()
    try:
        _check_args(args)
        system, source, defaults = _load(args)
        schedule = _schedule(args)
        L = args.grid_steps or default_grid_steps(system.T)
        report = {
            "tool": {"name": "switchctrl", "version": __version__,
                     "simulation_backend": DEFAULT_BACKEND},
            "command": args.command,
            "system": {"fingerprint": system.fingerprint(), "summary": system.summary(),
                       "source": source, "defaults": defaults},
            "thresholds": {"delta_pd": args.delta_pd, "stagnation": args.stagnation},
        }
        cmd = args.command
        if cmd in ("invariance", "certify"):
            t = time.perf_counter()
            report["invariance"] = invariance_report(system)
            timing["invariance"] = time.perf_counter() - t
        if cmd in ("metric", "certify"):
            t = time.perf_counter()
            diag = k0_estimate(system, schedule, grid_steps=L,
                               level_M_mode=args.level_M_mode, delta_pd=args.delta_pd,
                               stagnation=args.stagnation)
            report["metric"] = diag.as_dict()
            report["thresholds"] = diag.thresholds
            timing["metric"] = time.perf_counter() - t
        sol = None
        if cmd in ("riccati", "simulate", "certify"):
            t = time.perf_counter()
            sol, report["riccati"] = _riccati_section(system, args, L)
            timing["riccati"] = time.perf_counter() - t
        if cmd in ("simulate", "certify"):
            t = time.perf_counter()
            report["simulation"] = _simulation_section(system, args, L, sol)
            timing["simulation"] = time.perf_counter() - t
    except ConfigError as exc:
        print(f"error: {exc.path}: {exc.message}", file=sys.stderr)
        return EXIT_INPUT, None
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL, None
    timing["total"] = time.perf_counter() - t_all
    report["timing"] = timing
    text = json.dumps(_clean(report), indent=2, sort_keys=True) + "\n"
    if args.output is not None:
        args.output.write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK, report


def _clean(obj):
    """Make a report JSON-safe (numpy scalars, tuples, non-finite floats)."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else repr(v)
    return obj


def main(argv=None) -> None:
    code, _ = run(argv)
    sys.exit(code)


if __name__ == "__main__":
    main()
