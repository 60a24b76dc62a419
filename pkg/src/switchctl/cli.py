"""Command-line front end: ``switchctl <command> [options]``.

Exit codes: 0 success, 1 I/O or parse error, 2 a design hypothesis fails
(the error names it), 3 the solver or the simulation gave up.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import fixtures
from . import io as sio
from .design import certificate_from_blocks, design_switching, law_report, verify_certificate
from .equilibria import (check_interior_condition, check_zero_defective, compute_M,
                         detect_shared_subset, diagnose_no_global_exponential,
                         nullspace_decomposition, residual_terms, solve_equilibrium)
from .errors import HypothesisError, SimulationDiverged, SolverError, SwitchctlError
from .rate import check_rank, rate_curve, sampled_soundness
from .simulate import SimulationConfig, metrics, simulate_closed_loop
from .sysmodel import (DisturbanceProfile, MotorParams, SimplexVector, convex_combination,
                       validate_system)

EXIT_OK, EXIT_INPUT, EXIT_HYPOTHESIS, EXIT_SOLVER = 0, 1, 2, 3

# per-demo simulation defaults: step, horizon, reference schedule, disturbance
_DEMO_SIM = {
    "example1": dict(h=1e-4, T=12.0),
    "example2": dict(h=1e-4, T=5.0),
    "motor-position": dict(h=1e-4, T=4.0,
                           schedule=[(0.0, [np.pi]), (1.0, [2 * np.pi]), (2.0, [-np.pi]), (3.0, [0.0])]),
    "motor-velocity": dict(h=1e-4, T=3.0, disturbance="steps"),
}


class InputError(Exception):
    """Bad arguments or unreadable input; maps to exit code 1."""


def _vector(text):
    if text is None:
        return None
    try:
        return np.array([float(Fraction(p.strip())) for p in text.split(",") if p.strip()])
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"cannot parse vector {text!r}") from exc


def _r_grid(text):
    try:
        a, b, k = text.split(":")
        return np.linspace(float(a), float(b), int(k))
    except ValueError as exc:
        raise InputError(f"--r-grid expects start:stop:count, got {text!r}") from exc


def _schedule(text):
    """``"0:3.14;1:6.28"`` -> [(0.0, [3.14]), (1.0, [6.28])]; x_perp may be comma-separated."""
    if not text:
        return []
    out = []
    for item in text.split(";"):
        try:
            t, xp = item.split(":")
        except ValueError as exc:
            raise InputError(f"bad schedule entry {item!r}") from exc
        out.append((float(t), _vector(xp).tolist()))
    return out


def _motor_steps():
    J = MotorParams().J
    # torque steps of 1 mN·m on [1, 2) s, entering the velocity row
    return DisturbanceProfile([0.0, 0.0, -1.0 / J, 0.0], [1.0, 2.0], [0.0, 1e-3, 0.0])


class Job:
    """Resolved inputs shared by all commands."""

    def __init__(self, args):
        self.args = args
        self.fixture = None
        if getattr(args, "demo", None):
            try:
                self.fixture = fixtures.load(args.demo)
            except KeyError as exc:
                raise InputError(str(exc.args[0])) from exc
            self.system = self.fixture.system
        elif getattr(args, "system", None):
            try:
                self.system = sio.load_system(args.system)
            except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
                raise InputError(f"cannot read system {args.system}: {exc}") from exc
        else:
            raise InputError("give --system FILE or --demo NAME")

        lam_text = getattr(args, "lam", None)
        if lam_text:
            try:
                self.lam = SimplexVector.parse(lam_text)
            except (ValueError, ZeroDivisionError) as exc:
                raise InputError(f"bad --lambda: {exc}") from exc
        elif self.fixture is not None:
            self.lam = self.fixture.lam
        else:
            self.lam = None
        xp = _vector(getattr(args, "xe_perp", None))
        self.x_perp = xp if xp is not None else (self.fixture.x_perp if self.fixture else None)
        self.out = Path(args.out) if getattr(args, "out", None) else None

    def need_lambda(self):
        if self.lam is None:
            raise InputError("--lambda is required with --system")
        if len(self.lam) != self.system.N:
            raise InputError(f"--lambda has {len(self.lam)} weights, system has {self.system.N} modes")
        return self.lam

    def law(self, choice=None):
        """Designed law, or the published certificate of a demo when it verifies."""
        lam = self.need_lambda()
        a = self.args
        choice = choice or getattr(a, "certificate", "designed")
        fx = self.fixture
        if choice in ("published", "auto") and fx is not None and fx.P_bar is not None:
            law = certificate_from_blocks(self.system, lam, fx.P_bar, fx.P_perp, self.x_perp)
            if verify_certificate(law).passed or choice == "published":
                return law, "published"
        elif choice == "published":
            raise InputError("--certificate published needs a demo with published blocks")
        law = design_switching(self.system, lam, self.x_perp,
                               objective=getattr(a, "objective", "margin"),
                               margin=getattr(a, "margin", 1e-6),
                               floor=getattr(a, "floor", 1e-3),
                               nullspace_weight=self._weight())
        return law, "designed"

    def _weight(self):
        w = getattr(self.args, "nullspace_weight", None)
        if w is not None:
            return w
        return self.fixture.nullspace_weight if self.fixture is not None else 1.0

    def emit(self, name, obj):
        if self.out is not None:
            sio.write_json(self.out / name, obj)


def _summary(label, items):
    print(label)
    for k, v in items:
        print(f"  {k}: {v}")


def cmd_validate(job):
    rep = validate_system(job.system)
    job.emit("validation.json", {"valid": rep.valid, "issues": list(rep.issues),
                                 "n": job.system.n, "N": job.system.N})
    _summary("system", [("n", job.system.n), ("N", job.system.N), ("valid", rep.valid)]
             + [("issue", i) for i in rep.issues])
    return EXIT_OK if rep.valid else EXIT_INPUT


def cmd_equilibria(job):
    lam = job.need_lambda()
    A_lam, _ = convex_combination(job.system, lam)
    decomp = nullspace_decomposition(A_lam)
    defective = check_zero_defective(A_lam, decomp)
    eq = solve_equilibrium(job.system, lam, job.x_perp)
    ells = residual_terms(job.system, eq.x_e)
    M = compute_M(A_lam, decomp)
    subset = detect_shared_subset(job.system, decomp)
    interior = check_interior_condition(M, ells, subset or None)
    diag = diagnose_no_global_exponential(ells, decomp)
    report = {
        "lambda": lam.weights, "m": decomp.m, "p": decomp.p,
        "V_bar": decomp.V_bar, "V_perp": decomp.V_perp,
        "zero_defective": defective, "x_e": eq.x_e, "residual": eq.residual,
        "ells": ells, "M": M, "shared_subset": [i + 1 for i in subset],
        "interior": {"valid": interior.valid, "mu": interior.mu, "margin": interior.margin,
                     "rank_ML": interior.rank_ML, "reason": interior.reason},
        "no_global_exponential": {"triggered": diag.triggered, "ell_bar": diag.ell_bar},
    }
    job.emit("equilibria.json", report)
    _summary("equilibrium", [("x_e", np.array2string(eq.x_e, precision=6)),
                             ("nullspace dim", decomp.m), ("zero defective", defective),
                             ("interior condition", interior.valid)])
    return EXIT_OK


def cmd_design(job):
    law, source = job.law()
    rep = law_report(law)
    rep["source"] = source
    job.emit("certificate.json", rep)
    _summary(f"certificate ({source})",
             [("x_e", np.array2string(law.x_e, precision=6)),
              ("P eigenvalues", np.array2string(np.linalg.eigvalsh(law.certificate.P), precision=6)),
              ("verified", rep["verified"])])
    return EXIT_OK if rep["verified"] else EXIT_HYPOTHESIS


def _sim_config(job, law):
    a = job.args
    d = _DEMO_SIM.get(job.fixture.name, {}) if job.fixture else {}
    x0 = _vector(a.x0)
    if x0 is None:
        x0 = job.fixture.x0 if job.fixture is not None and job.fixture.x0 is not None else law.x_e
    if x0.shape != (job.system.n,):
        raise InputError(f"--x0 needs {job.system.n} entries")
    h = a.step if a.step is not None else d.get("h", 1e-3)
    T = a.horizon if a.horizon is not None else d.get("T", 10.0)
    if a.schedule:
        schedule = _schedule(a.schedule)
    else:
        # a shorter horizon just truncates the built-in schedule
        schedule = [ev for ev in d.get("schedule", []) if ev[0] <= T]
    if a.disturbance:
        try:
            dist = sio.load_disturbance(a.disturbance)
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            raise InputError(f"cannot read disturbance {a.disturbance}: {exc}") from exc
    else:
        dist = _motor_steps() if d.get("disturbance") == "steps" else None
    try:
        return SimulationConfig(h, T, x0, a.integrator, schedule, dist)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _simulate(job, law):
    config = _sim_config(job, law)
    traj = simulate_closed_loop(job.system, law, config)
    m = metrics(traj)
    if job.out is not None:
        sio.write_trajectory(job.out / "trajectory.csv", traj)
        sio.write_events(job.out / "events.jsonl", traj.events)
    summary = {"final_error": m.final_error, "settling_time": m.settling_time,
               "switch_count": m.switch_count, "max_v_jump": m.max_v_jump,
               "h": config.h, "T": config.T, "integrator": config.integrator}
    job.emit("simulation.json", summary)
    _summary("simulation", [(k, v) for k, v in summary.items()])
    return summary


def cmd_simulate(job):
    law, _ = job.law()
    _simulate(job, law)
    return EXIT_OK


def _seed():
    raw = os.environ.get("SWITCHCTL_SEED")
    try:
        return int(raw) if raw else 0
    except ValueError as exc:
        raise InputError(f"SWITCHCTL_SEED must be an integer, got {raw!r}") from exc


def _rate(job, law):
    a = job.args
    radii = _r_grid(a.r_grid) if a.r_grid else np.linspace(0.1, 2.5, 25)
    rng = np.random.default_rng(_seed()) if a.beta is None else None
    rank = check_rank(law)
    rows = rate_curve(law, radii, beta=a.beta)
    csv_rows = [(r, b, e, al) for _, r, b, e, al in rows]
    report = {"rank_ML": rank, "m": law.decomp.m, "beta_supplied": a.beta is not None,
              "curve": [dict(zip(("R", "r", "beta", "epsilon", "alpha"), row)) for row in rows]}
    if rng is not None:
        report["sampled_soundness"] = [sampled_soundness(law, r, b, rng=rng) for _, r, b, _, _ in rows]
    if job.out is not None:
        sio.write_rate_curve(job.out / "rate.csv", csv_rows)
    job.emit("rate.json", report)
    print("r,beta,epsilon,alpha")
    for row in csv_rows:
        print(",".join(f"{v:.6g}" for v in row))
    return report


def cmd_rate(job):
    law, _ = job.law()
    _rate(job, law)
    return EXIT_OK


def cmd_demo(job):
    law, source = job.law()
    rep = law_report(law)
    rep["source"] = source
    rep["demo"] = job.fixture.name
    job.emit("certificate.json", rep)
    _summary(f"{job.fixture.name}: certificate ({source})",
             [("x_e", np.array2string(law.x_e, precision=6)), ("verified", rep["verified"])])
    if job.args.simulate:
        _simulate(job, law)
    if job.args.rate:
        _rate(job, law)
    return EXIT_OK


def _common(p, system=True):
    if system:
        src = p.add_mutually_exclusive_group()
        src.add_argument("--system", help="JSON system file")
        src.add_argument("--demo", choices=fixtures.DEMOS, help="built-in system")
    p.add_argument("--lambda", dest="lam", help="simplex weights, e.g. 1/3,1/3,1/3")
    p.add_argument("--xe-perp", help="nullspace coordinates of the equilibrium")
    p.add_argument("--out", help="output directory")


def _design_opts(p, certificate="designed"):
    p.add_argument("--objective", choices=("margin", "min_condition"), default="margin")
    p.add_argument("--margin", type=float, default=1e-6, help="strictness margin for the LMIs")
    p.add_argument("--floor", type=float, default=1e-3, help="P floor for min_condition")
    p.add_argument("--nullspace-weight", type=float,
                   help="weight on the nullspace block (demo default or 1)")
    p.add_argument("--certificate", choices=("designed", "published", "auto"), default=certificate,
                   help="auto uses a demo's published blocks when they verify")


def _sim_opts(p):
    p.add_argument("--x0")
    p.add_argument("--step", type=float)
    p.add_argument("--horizon", type=float)
    p.add_argument("--integrator", choices=("rk4", "euler"), default="rk4")
    p.add_argument("--schedule", help="reference events t:x_perp;t:x_perp")
    p.add_argument("--disturbance", help="JSON disturbance profile")


def _rate_opts(p):
    p.add_argument("--r-grid", help="squared radii start:stop:count")
    p.add_argument("--beta", type=float, help="skip the SOS step and use this beta")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="switchctl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("validate", help="check a system file")
    _common(p)
    p = sub.add_parser("equilibria", help="nullspace, equilibrium and interior condition")
    _common(p)
    p = sub.add_parser("design", help="synthesize and verify a switching law")
    _common(p)
    _design_opts(p)
    p = sub.add_parser("simulate", help="closed-loop simulation to CSV")
    _common(p)
    _design_opts(p)
    _sim_opts(p)
    p = sub.add_parser("rate", help="local rate alpha over a grid of radii")
    _common(p)
    _design_opts(p)
    _rate_opts(p)
    p = sub.add_parser("demo", help="run a built-in fixture")
    p.add_argument("demo", choices=fixtures.DEMOS)
    _common(p, system=False)
    _design_opts(p, certificate="auto")
    _sim_opts(p)
    _rate_opts(p)
    p.add_argument("--simulate", action="store_true")
    p.add_argument("--rate", action="store_true")
    return parser


COMMANDS = {"validate": cmd_validate, "equilibria": cmd_equilibria, "design": cmd_design,
            "simulate": cmd_simulate, "rate": cmd_rate, "demo": cmd_demo}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        job = Job(args)
        return COMMANDS[args.command](job)
    except HypothesisError as exc:
        print(f"error: {exc.hypothesis}: {exc}", file=sys.stderr)
        _error_report(args, exc.hypothesis, exc)
        return EXIT_HYPOTHESIS
    except (SolverError, SimulationDiverged) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        _error_report(args, type(exc).__name__, exc)
        return EXIT_SOLVER
    except (InputError, OSError, ValueError, SwitchctlError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def _error_report(args, name, exc):
    if getattr(args, "out", None):
        try:
            sio.write_json(Path(args.out) / "error.json", {"error": name, "message": str(exc)})
        except OSError:
            pass


if __name__ == "__main__":
    sys.exit(main())
