"""Switched affine systems, simplex weights and the dc-motor plant.

A switched affine system is the family ``dx/dt = A_i x + b_i``, ``i = 0..N-1``.
Mode indices are zero-based throughout the Python API.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

SIMPLEX_TOL = 1e-9


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ValidationReport:
    valid: bool
    issues: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.valid


def _collect_issues(A, b) -> list[str]:
    issues = []
    if len(A) != len(b):
        issues.append(f"dimension mismatch: {len(A)} matrices but {len(b)} vectors")
    if len(A) < 2:
        issues.append(f"need at least 2 modes, got {len(A)}")
    n = None
    for i, Ai in enumerate(A):
        Ai = np.asarray(Ai, dtype=float)
        if Ai.ndim != 2 or Ai.shape[0] != Ai.shape[1]:
            issues.append(f"dimension mismatch: A[{i}] has shape {Ai.shape}, not square")
            continue
        if n is None:
            n = Ai.shape[0]
        elif Ai.shape[0] != n:
            issues.append(f"dimension mismatch: A[{i}] is {Ai.shape[0]}x{Ai.shape[0]}, expected {n}x{n}")
        if not np.all(np.isfinite(Ai)):
            issues.append(f"non-finite entry in A[{i}]")
    for i, bi in enumerate(b):
        bi = np.asarray(bi, dtype=float)
        if bi.ndim != 1 or (n is not None and bi.shape[0] != n):
            issues.append(f"dimension mismatch: b[{i}] has shape {bi.shape}, expected ({n},)")
            continue
        if not np.all(np.isfinite(bi)):
            issues.append(f"non-finite entry in b[{i}]")
    return issues


@dataclass(frozen=True)
class SwitchedAffineSystem:
    """N affine modes ``(A_i, b_i)`` sharing the state dimension n."""

    A: np.ndarray  # (N, n, n)
    b: np.ndarray  # (N, n)
    labels: tuple[str, ...] | None = None

    def __init__(self, A, b, labels: Sequence[str] | None = None):
        issues = _collect_issues(list(A), list(b))
        if labels is not None and len(labels) != len(A):
            issues.append(f"{len(labels)} labels for {len(A)} modes")
        if issues:
            raise ValueError("invalid switched affine system: " + "; ".join(issues))
        object.__setattr__(self, "A", _frozen(np.stack([np.asarray(a, float) for a in A])))
        object.__setattr__(self, "b", _frozen(np.stack([np.asarray(v, float) for v in b])))
        object.__setattr__(self, "labels", tuple(labels) if labels is not None else None)

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def N(self) -> int:
        return self.A.shape[0]

    def to_dict(self) -> dict:
        out = {"n": self.n, "N": self.N, "A": self.A.tolist(), "b": self.b.tolist()}
        if self.labels is not None:
            out["labels"] = list(self.labels)
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> "SwitchedAffineSystem":
        report = validate_system(data)
        if not report:
            raise ValueError("invalid switched affine system: " + "; ".join(report.issues))
        return cls(data["A"], data["b"], data.get("labels"))


def validate_system(system) -> ValidationReport:
    """Check a system, or its JSON-shaped dict, without raising.

    Reports dimension mismatches and non-finite entries.
    """
    if isinstance(system, SwitchedAffineSystem):
        A, b = list(system.A), list(system.b)
        declared = {}
    else:
        try:
            A, b = list(system["A"]), list(system["b"])
        except (KeyError, TypeError) as exc:
            return ValidationReport(False, (f"missing field: {exc}",))
        declared = {k: system[k] for k in ("n", "N") if k in system}
    try:
        issues = _collect_issues(A, b)
    except (TypeError, ValueError) as exc:
        return ValidationReport(False, (f"malformed entries: {exc}",))
    if "N" in declared and declared["N"] != len(A):
        issues.append(f"declared N={declared['N']} but {len(A)} matrices given")
    if "n" in declared and A:
        shape = np.shape(A[0])
        if shape and shape[0] != declared["n"]:
            issues.append(f"declared n={declared['n']} but A[0] has {shape[0]} rows")
    return ValidationReport(not issues, tuple(issues))


@dataclass(frozen=True)
class SimplexVector:
    """A point of the unit simplex.

    The weights are renormalized on construction so downstream algebra sees
    an exact simplex point; the raw sum is kept in ``raw_sum``.
    """

    weights: np.ndarray
    raw_sum: float = 1.0

    def __init__(self, weights, tol: float = SIMPLEX_TOL):
        w = np.array([float(Fraction(x)) if isinstance(x, str) else float(x) for x in weights])
        if w.ndim != 1 or w.size == 0:
            raise ValueError("simplex vector must be a non-empty 1-D array")
        if not np.all(np.isfinite(w)):
            raise ValueError("simplex vector has non-finite entries")
        if np.any(w < -tol):
            raise ValueError(f"negative simplex weight {w.min():g}")
        total = float(w.sum())
        if abs(total - 1.0) > tol:
            raise ValueError(f"simplex weights sum to {total!r}, not 1 (tol {tol:g})")
        w = np.clip(w, 0.0, None)
        object.__setattr__(self, "weights", _frozen(w / w.sum()))
        object.__setattr__(self, "raw_sum", total)

    def __len__(self) -> int:
        return self.weights.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.weights, dtype=dtype)

    @classmethod
    def parse(cls, text: str) -> "SimplexVector":
        """Parse comma-separated rationals such as ``"1/3,1/3,1/3"``.

        Parsing goes through :class:`fractions.Fraction` so the sum is exact
        before conversion to floats.
        """
        parts = [Fraction(p.strip()) for p in text.split(",") if p.strip()]
        total = sum(parts)
        if total > 0 and total != 1 and abs(total - 1) <= SIMPLEX_TOL:
            # exact renormalization before leaving rationals
            parts = [p / total for p in parts]
        return cls([float(p) for p in parts])

    @classmethod
    def vertex(cls, N: int, i: int) -> "SimplexVector":
        e = np.zeros(N)
        e[i] = 1.0
        return cls(e)

    @classmethod
    def uniform(cls, N: int) -> "SimplexVector":
        return cls(np.full(N, 1.0 / N))


def _weights(lam) -> np.ndarray:
    return lam.weights if isinstance(lam, SimplexVector) else np.asarray(lam, dtype=float)


def convex_combination(sys: SwitchedAffineSystem, lam) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(A_lam, b_lam) = (sum lam_i A_i, sum lam_i b_i)``."""
    w = _weights(lam)
    if w.shape != (sys.N,):
        raise ValueError(f"lambda has length {w.size}, system has {sys.N} modes")
    return np.tensordot(w, sys.A, axes=1), w @ sys.b


def augment_with_integrator(sys: SwitchedAffineSystem, C, y_ref) -> SwitchedAffineSystem:
    """Append integrator states ``z' = C x - y_ref`` to every mode.

    The new matrices are ``[[A_i, 0], [C, 0]]`` and the new affine terms
    ``[b_i, -y_ref]``. The original block is copied unchanged.
    """
    C = np.atleast_2d(np.asarray(C, dtype=float))
    y_ref = np.atleast_1d(np.asarray(y_ref, dtype=float))
    n = sys.n
    if C.shape[1] != n:
        raise ValueError(f"C has {C.shape[1]} columns, system has n={n}")
    mz = C.shape[0]
    if y_ref.shape != (mz,):
        raise ValueError(f"y_ref has shape {y_ref.shape}, expected ({mz},)")
    A_aug = np.zeros((sys.N, n + mz, n + mz))
    A_aug[:, :n, :n] = sys.A
    A_aug[:, n:, :n] = C
    b_aug = np.concatenate([sys.b, np.broadcast_to(-y_ref, (sys.N, mz))], axis=1)
    return SwitchedAffineSystem(A_aug, b_aug, sys.labels)


# --- dc motor driven by an h-bridge fed through a boost converter ----------

# Columns of the switch table: mode sigma = 1..8 maps to index 0..7.
MOTOR_U1 = (0, 1, 0, 1, 0, 1, 0, 1)
MOTOR_U2 = (0, 0, 1, 1, 0, 0, 1, 1)
MOTOR_U3 = (0, 0, 0, 0, 1, 1, 1, 1)


@dataclass(frozen=True)
class MotorParams:
    R_L: float = 0.5  # ohm
    L: float = 1e-3  # H
    C: float = 2e-3  # F
    K_e: float = 5e-3  # V s / rad
    R_m: float = 1.0  # ohm
    J: float = 1e-6  # kg m^2
    c: float = 1e-4  # viscous friction
    v_dc: float = 12.0  # V

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"motor parameter {name} must be positive, got {value!r}")


def motor_core(params: MotorParams) -> SwitchedAffineSystem:
    """Three-state electromechanical model, states ``(i_L, v_C, omega)``."""
    p = params
    A, b = [], []
    for u1, u2, u3 in zip(MOTOR_U1, MOTOR_U2, MOTOR_U3):
        pol = (2 * u2 - 1) * u3
        A.append([
            [-p.R_L / p.L, -u1 / p.L, 0.0],
            [u1 / p.C, -u3 / (p.R_m * p.C), pol * p.K_e / (p.R_m * p.C)],
            [0.0, pol * p.K_e / (p.J * p.R_m), -(p.K_e**2 + p.c * p.R_m) / (p.J * p.R_m)],
        ])
        b.append([p.v_dc / p.L, 0.0, 0.0])
    labels = [f"s{k + 1}" for k in range(8)]
    return SwitchedAffineSystem(A, b, labels)


def build_dc_motor(params: MotorParams | None = None, mode: str = "position",
                   omega_ref: float = 200.0) -> SwitchedAffineSystem:
    """Eight-mode motor plant with a fourth integrating state.

    ``mode="position"``: the fourth state is the shaft angle theta.
    ``mode="velocity"``: the fourth state is the integral of ``omega - omega_ref``.
    """
    params = params or MotorParams()
    core = motor_core(params)
    select_omega = [[0.0, 0.0, 1.0]]
    if mode == "position":
        return augment_with_integrator(core, select_omega, [0.0])
    if mode == "velocity":
        return augment_with_integrator(core, select_omega, [omega_ref])
    raise ValueError(f"unknown motor mode {mode!r}")


@dataclass(frozen=True)
class DisturbanceProfile:
    """Piecewise-constant amplitude ``d(t)`` injected along ``E``.

    ``values[k]`` holds on ``[breakpoints[k-1], breakpoints[k])``, with the
    first value before the first breakpoint and the last one afterwards.
    """

    E: np.ndarray
    breakpoints: np.ndarray
    values: np.ndarray

    def __init__(self, E, breakpoints, values):
        bp = np.asarray(breakpoints, dtype=float).ravel()
        vals = np.asarray(values, dtype=float).ravel()
        if np.any(np.diff(bp) <= 0):
            raise ValueError("disturbance breakpoints must be strictly increasing")
        if vals.size != bp.size + 1:
            raise ValueError(f"need {bp.size + 1} values for {bp.size} breakpoints, got {vals.size}")
        object.__setattr__(self, "E", _frozen(np.asarray(E, dtype=float).ravel()))
        object.__setattr__(self, "breakpoints", _frozen(bp))
        object.__setattr__(self, "values", _frozen(vals))

    def to_dict(self) -> dict:
        return {"E": self.E.tolist(), "breakpoints": self.breakpoints.tolist(),
                "values": self.values.tolist()}

    @classmethod
    def from_dict(cls, data: Mapping) -> "DisturbanceProfile":
        return cls(data["E"], data["breakpoints"], data["values"])


def evaluate_disturbance(d: DisturbanceProfile, t: float) -> float:
    """Right-continuous lookup of the amplitude at time t."""
    return float(d.values[np.searchsorted(d.breakpoints, t, side="right")])
