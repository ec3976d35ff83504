"""Problem files, solver dispatch, trace CSV files and empirical rate fits."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .core import NonFiniteError, SolverReport, TraceRecord, restricted_gap
from .halpern import halpern_cocoercive_solve, halpern_constrained_solve, simple_residual_variant
from .inexact import halpern_lipschitz_solve, restart_solve, scaled_resolvent_option
from .operators import Operator, affine_operator, quadratic_saddle, regularize, zero_operator
from .resolvent import eg_solve
from .sets import Ball, Box, FeasibleSet, Simplex, WholeSpace

ALGORITHMS = (
    "halpern-cocoercive",
    "halpern-constrained",
    "halpern-constrained-simple",
    "halpern-lipschitz",
    "halpern-lipschitz-scaled",
    "eg",
    "restart",
)
TRACE_HEADER = ["k", "residual", "lambda", "L_k", "potential", "f_evals"]


class ProblemError(ValueError):
    """Malformed or inconsistent problem description; the message names the field."""


@dataclass
class ProblemInstance:
    operator: Operator
    feasible_set: FeasibleSet
    u0: np.ndarray
    reference_solution: Optional[np.ndarray] = None
    name: str = ""

    def __post_init__(self):
        self.u0 = np.asarray(self.u0, dtype=np.float64)
        if self.u0.shape != (self.operator.dim,):
            raise ProblemError(f"u0: dimension {self.u0.shape[0]} does not match operator "
                               f"dimension {self.operator.dim}")
        if not self.feasible_set.contains(self.u0):
            raise ProblemError("u0: initial point is not in the feasible set")
        if self.reference_solution is not None:
            ref = np.asarray(self.reference_solution, dtype=np.float64)
            if ref.shape != self.u0.shape:
                raise ProblemError("reference_solution: wrong dimension")
            if not self.feasible_set.contains(ref):
                raise ProblemError("reference_solution: not in the feasible set")
            gap = restricted_gap(self.operator, self.feasible_set, ref)
            if gap > 1e-8:
                raise ProblemError(f"reference_solution: restricted gap {gap:.3e} exceeds 1e-8")
            self.reference_solution = ref


@dataclass
class RunConfig:
    algorithm: str
    eps: float
    l0: Optional[float] = None
    a0: Optional[float] = None
    eta: Optional[float] = None
    max_iters: Optional[int] = None
    trace_path: Optional[str] = None
    seed: int = 0
    keep_iterates: bool = False

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; choose from {', '.join(ALGORITHMS)}")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        for name in ("l0", "a0", "eta"):
            val = getattr(self, name)
            if val is not None and not val > 0:
                raise ValueError(f"{name} must be positive")
        if self.l0 is not None and not self.algorithm.startswith(("halpern-cocoercive",
                                                                   "halpern-constrained")):
            raise ValueError("l0 applies only to the cocoercive Halpern solvers")
        if self.a0 is not None and self.algorithm != "eg":
            raise ValueError("a0 applies only to eg")
        if self.eta is not None and self.algorithm != "halpern-lipschitz-scaled":
            raise ValueError("eta applies only to halpern-lipschitz-scaled")
        if self.algorithm == "halpern-lipschitz-scaled" and self.eta is None:
            raise ValueError("halpern-lipschitz-scaled requires eta")
        if self.max_iters is not None and self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")


# --------------------------------------------------------------------------
# problem files


def _require(obj, key, where):
    if not isinstance(obj, dict):
        raise ProblemError(f"{where}: expected an object")
    if key not in obj:
        raise ProblemError(f"{where}.{key}: missing")
    return obj[key]


def _matrix(value, where):
    try:
        arr = np.array(value, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ProblemError(f"{where}: not a numeric matrix ({exc})") from None
    if arr.ndim != 2:
        raise ProblemError(f"{where}: expected a 2-d array, got {arr.ndim}-d")
    if not np.all(np.isfinite(arr)):
        raise ProblemError(f"{where}: non-finite entries")
    return arr


def _vector(value, where, dim=None):
    try:
        arr = np.array(value, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ProblemError(f"{where}: not a numeric vector ({exc})") from None
    if arr.ndim == 0 and dim is not None:
        arr = np.full(dim, float(arr))
    if arr.ndim != 1:
        raise ProblemError(f"{where}: expected a 1-d array")
    if dim is not None and arr.size != dim:
        raise ProblemError(f"{where}: dimension {arr.size}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise ProblemError(f"{where}: non-finite entries")
    return arr


def build_operator(desc, where="operator") -> Operator:
    kind = _require(desc, "type", where)
    try:
        if kind == "affine":
            A = _matrix(_require(desc, "A", where), f"{where}.A")
            b = desc.get("b")
            b = None if b is None else _vector(b, f"{where}.b", A.shape[0])
            return affine_operator(A, b)
        if kind == "saddle-quadratic":
            opt = {}
            for key in ("Q", "B", "R"):
                if desc.get(key) is not None:
                    opt[key] = _matrix(desc[key], f"{where}.{key}")
            for key in ("bx", "by"):
                if desc.get(key) is not None:
                    opt[key] = _vector(desc[key], f"{where}.{key}")
            return quadratic_saddle(**opt, dim_x=desc.get("dim_x"), dim_y=desc.get("dim_y"))
        if kind == "regularized":
            base = build_operator(_require(desc, "base", where), f"{where}.base")
            mu = float(_require(desc, "mu", where))
            anchor = desc.get("anchor")
            anchor = np.zeros(base.dim) if anchor is None else _vector(anchor, f"{where}.anchor", base.dim)
            return regularize(base, mu, anchor)
        if kind == "zero":
            dim = int(_require(desc, "dim", where))
            if dim < 1:
                raise ProblemError(f"{where}.dim: must be >= 1")
            return zero_operator(dim)
    except ProblemError:
        raise
    except (ValueError, TypeError) as exc:
        raise ProblemError(f"{where}: {exc}") from None
    raise ProblemError(f"{where}.type: unknown operator type {kind!r}")


def build_set(desc, dim: int, where="set") -> FeasibleSet:
    kind = _require(desc, "type", where)
    try:
        if kind == "whole-space":
            return WholeSpace(dim)
        if kind == "box":
            lower = _vector(_require(desc, "lower", where), f"{where}.lower", dim)
            upper = _vector(_require(desc, "upper", where), f"{where}.upper", dim)
            return Box(lower, upper)
        if kind == "ball":
            center = desc.get("center")
            center = np.zeros(dim) if center is None else _vector(center, f"{where}.center", dim)
            return Ball(center, float(_require(desc, "radius", where)))
        if kind == "simplex":
            return Simplex(dim)
    except ProblemError:
        raise
    except (ValueError, TypeError) as exc:
        raise ProblemError(f"{where}: {exc}") from None
    raise ProblemError(f"{where}.type: unknown set type {kind!r}")


def problem_from_dict(data: dict, name: str = "") -> ProblemInstance:
    if not isinstance(data, dict):
        raise ProblemError("top level: expected an object")
    op = build_operator(_require(data, "operator", "problem"))
    S = build_set(_require(data, "set", "problem"), op.dim)
    u0 = _vector(_require(data, "u0", "problem"), "u0", op.dim)
    overrides = data.get("overrides") or {}
    if overrides:
        unknown = set(overrides) - {"L", "mu", "gamma"}
        if unknown:
            raise ProblemError(f"overrides: unknown keys {sorted(unknown)}")
        try:
            op = op.with_metadata(L=overrides.get("L"), mu=overrides.get("mu"),
                                  gamma=overrides.get("gamma"))
        except ValueError as exc:
            raise ProblemError(f"overrides: {exc}") from None
    ref = data.get("reference_solution")
    ref = None if ref is None else _vector(ref, "reference_solution", op.dim)
    return ProblemInstance(op, S, u0, ref, name)


def parse_problem(path) -> ProblemInstance:
    """Load a JSON problem file; raises :class:`ProblemError` naming the bad field."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ProblemError(f"{path}: invalid JSON ({exc})") from None
    return problem_from_dict(data, path.stem)


# --------------------------------------------------------------------------
# dispatch


def check_compatible(instance: ProblemInstance, config: RunConfig) -> None:
    """Raise ``ValueError`` if `config.algorithm` does not fit `instance`."""
    md = instance.operator.metadata
    alg = config.algorithm
    if alg.startswith(("halpern-cocoercive", "halpern-constrained")) and not md.cocoercivity_gamma:
        raise ValueError(f"{alg} needs a cocoercive operator, but the cocoercivity modulus "
                         "is unknown (set overrides.gamma if it is known)")
    if alg == "halpern-cocoercive" and not instance.feasible_set.is_whole_space:
        raise ValueError("halpern-cocoercive is unconstrained; use halpern-constrained")
    if alg == "eg" and not md.strong_mono_mu:
        raise ValueError("eg needs a strongly monotone operator with known mu > 0")


def run(instance: ProblemInstance, config: RunConfig) -> SolverReport:
    """Run the configured solver; deterministic in ``(instance, config)``."""
    check_compatible(instance, config)
    F, S, u0, alg = instance.operator, instance.feasible_set, instance.u0, config.algorithm
    kw = {"max_iters": config.max_iters, "keep_iterates": config.keep_iterates}
    L0 = 1.0 if config.l0 is None else config.l0
    if alg == "halpern-cocoercive":
        rep = halpern_cocoercive_solve(F, u0, config.eps, L0, **kw)
    elif alg == "halpern-constrained":
        rep = halpern_constrained_solve(F, S, u0, config.eps, L0, **kw)
    elif alg == "halpern-constrained-simple":
        rep = simple_residual_variant(F, S, u0, config.eps, L0, **kw)
    elif alg == "halpern-lipschitz":
        rep = halpern_lipschitz_solve(F, S, u0, config.eps, **kw)
    elif alg == "halpern-lipschitz-scaled":
        rep = scaled_resolvent_option(F, S, u0, config.eps, config.eta, **kw)
    elif alg == "eg":
        rep = eg_solve(F, S, F.metadata.strong_mono_mu, config.eps, u0, config.a0, **kw)
    else:
        rep = restart_solve(F, S, u0, config.eps, max_rounds=config.max_iters,
                            keep_iterates=config.keep_iterates)
    rep.info["seed"] = config.seed
    if config.trace_path:
        emit_trace(rep, config.trace_path)
    return rep


# --------------------------------------------------------------------------
# traces and rates


def _fmt(x) -> str:
    return "" if x is None else format(x, ".17g")


def emit_trace(report: SolverReport, path) -> None:
    """Write the trace as CSV with 17 significant digits; absent values are empty."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for r in report.trace:
            w.writerow([r.k, _fmt(r.residual), _fmt(r.lambda_k), _fmt(r.L_k),
                        _fmt(r.potential), r.f_evals_so_far])


def read_trace(path) -> list[TraceRecord]:
    def opt(s):
        return None if s == "" else float(s)

    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != TRACE_HEADER:
        raise ValueError(f"{path}: missing or wrong trace header")
    out = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(TRACE_HEADER):
            raise ValueError(f"{path}:{i}: expected {len(TRACE_HEADER)} fields")
        out.append(TraceRecord(int(row[0]), float(row[1]), opt(row[2]), float(row[3]),
                               opt(row[4]), int(row[5])))
    return out


def fit_rate(trace, burn_in: float = 0.2) -> tuple[float, float]:
    """Least-squares slope and r^2 of ``log(residual)`` against ``log(k)``.

    The first `burn_in` fraction of records is dropped; at least ten records
    with positive residual and ``k >= 1`` must remain.
    """
    if not 0 <= burn_in < 1:
        raise ValueError("burn_in must lie in [0, 1)")
    recs = [r for r in trace if r.k >= 1]
    recs = recs[int(math.floor(burn_in * len(recs))):]
    recs = [r for r in recs if r.residual > 0]
    if len(recs) < 10:
        raise ValueError(f"need at least 10 post-burn-in records, have {len(recs)}")
    x = np.log([r.k for r in recs])
    y = np.log([r.residual for r in recs])
    slope, intercept = np.polyfit(x, y, 1)
    ss_res = float(np.sum((y - (slope * x + intercept)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    if not math.isfinite(slope):
        raise NonFiniteError("rate fit produced a non-finite slope")
    return float(slope), r2
