"""Vector helpers, oracle bookkeeping, solver reports and gap certificates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, NamedTuple, Optional, Sequence

import numpy as np

#: Relative slack used when comparing against exact-arithmetic inequalities.
SLACK = 1e-12


class NonFiniteError(ArithmeticError):
    """Raised when an iterate or operator value stops being finite."""


def as_vector(x, name: str = "vector") -> np.ndarray:
    """Return `x` as a read-only 1-d float64 array with finite entries."""
    arr = np.array(x, dtype=np.float64, copy=True)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} has non-finite coordinates")
    arr.setflags(write=False)
    return arr


def inner(u, v) -> float:
    """Euclidean inner product; raises on dimension mismatch."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    return float(np.dot(u, v))


def norm(u) -> float:
    u = np.asarray(u, dtype=np.float64).ravel()
    return math.sqrt(float(np.dot(u, u)))


def slack(*magnitudes: float) -> float:
    """Absolute slack ``1e-12 * (1 + sum |m|)`` for rounding-tolerant comparisons."""
    return SLACK * (1.0 + sum(abs(m) for m in magnitudes))


@dataclass
class OracleCounter:
    """Counts operator evaluations and projections made during one solver run."""

    f_evals: int = 0
    projections: int = 0

    def evaluate(self, F, u) -> np.ndarray:
        self.f_evals += 1
        out = np.asarray(F(u), dtype=np.float64)
        if not np.isfinite(out).all():
            raise NonFiniteError("operator returned non-finite values")
        return out

    def project(self, feasible_set, u) -> np.ndarray:
        self.projections += 1
        return feasible_set.project(u)

    def snapshot(self) -> "OracleCounter":
        return OracleCounter(self.f_evals, self.projections)


@dataclass(frozen=True)
class TraceRecord:
    """One outer iteration of a solver.

    ``lambda_k`` and ``potential`` are ``None`` for solvers where they carry no
    meaning (extragradient, restart rounds).
    """

    k: int
    residual: float
    lambda_k: Optional[float]
    L_k: float
    potential: Optional[float]
    f_evals_so_far: int

    def __post_init__(self):
        if not self.residual >= 0:
            raise ValueError(f"negative residual {self.residual}")
        if self.lambda_k is not None and not 0 < self.lambda_k <= 0.5:
            raise ValueError(f"lambda_k={self.lambda_k} outside (0, 1/2]")
        if not self.L_k > 0:
            raise ValueError(f"L_k={self.L_k} must be positive")


@dataclass
class SolverReport:
    """Outcome of a solver run.

    ``residual`` is the quantity the solver certifies (``||F(u)||``,
    ``||G(u)||``, ``||P~(u)||`` or ``||u - ubar||``) and ``tolerance`` the
    threshold it was compared against. ``info`` holds solver-specific
    diagnostics (doubling counts, optional iterate histories, ...).
    """

    final_point: np.ndarray
    residual: float
    trace: list
    counters: OracleCounter
    converged: bool
    tolerance: float
    companion_point: Optional[np.ndarray] = None
    algorithm: str = ""
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.converged and self.residual > self.tolerance:
            raise ValueError(
                f"report marked converged with residual {self.residual} > {self.tolerance}"
            )

    @property
    def iterations(self) -> int:
        return self.trace[-1].k if self.trace else 0

    def summary(self) -> dict[str, Any]:
        out = {
            "algorithm": self.algorithm,
            "converged": self.converged,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "iterations": self.iterations,
            "f_evals": self.counters.f_evals,
            "projections": self.counters.projections,
            "final_point": [float(x) for x in self.final_point],
        }
        if self.companion_point is not None:
            out["companion_point"] = [float(x) for x in self.companion_point]
        return out


# --------------------------------------------------------------------------
# restricted gap


class GapEvaluationError(RuntimeError):
    pass


def restricted_gap(F, feasible_set, u, radius: float = 1.0, method: str = "path",
                   Fu=None, tol: float = 1e-9) -> float:
    """Maximum of ``<F(u), u - v>`` over ``v`` in the set intersected with ``Ball(u, radius)``.

    Parameters
    ----------
    F : callable
        Operator; ignored when `Fu` is supplied.
    feasible_set : FeasibleSet
    u : array_like
        Feasible point (checked with tolerance `tol`).
    radius : float
        Ball radius around `u`.
    method : {"path", "ascent"}
        ``"path"`` walks the projection path ``s -> proj(u - s F(u))`` and
        returns a rigorous upper bound that is tight up to bisection accuracy.
        ``"ascent"`` runs projected-gradient ascent over the intersection
        (Dykstra projections) and returns the attained value; it is slower and
        serves as an independent check.
    """
    u = np.asarray(u, dtype=np.float64)
    if radius <= 0:
        raise ValueError("radius must be positive")
    if not feasible_set.contains(u, tol):
        raise ValueError("restricted_gap requires a feasible point")
    g = np.asarray(F(u) if Fu is None else Fu, dtype=np.float64)
    gnorm = norm(g)
    if gnorm == 0.0:
        return 0.0
    if method == "path":
        return _gap_by_projection_path(g, gnorm, feasible_set, u, radius)
    if method == "ascent":
        return _gap_by_ascent(g, gnorm, feasible_set, u, radius)
    raise ValueError(f"unknown gap method {method!r}")


def _gap_by_projection_path(g, gnorm, feasible_set, u, radius):
    # v(s) = proj(u - s g) minimises <g, v> + |v - u|^2 / (2s) over the set, so for
    # any s and feasible v in the ball: <g, u - v> <= <g, u - v(s)> + (r^2 - d(s)^2)/(2s).
    if getattr(feasible_set, "is_whole_space", False):
        return radius * gnorm

    def point(s):
        v = feasible_set.project(u - s * g)
        return v, norm(v - u)

    def bound(s, v, d):
        return inner(g, u - v) + (radius ** 2 - d ** 2) / (2.0 * s)

    r2 = radius * radius
    lo = radius / gnorm
    v_lo, d_lo = point(lo)
    if d_lo >= radius:
        # the unconstrained step already reaches the sphere
        return bound(lo, v_lo, d_lo)
    hi = lo
    for _ in range(2000):
        hi = 2.0 * hi
        v_hi, d_hi = point(hi)
        if d_hi >= radius:
            break
        lo, v_lo, d_lo = hi, v_hi, d_hi
        val = inner(g, u - v_lo)
        if (r2 - d_lo ** 2) / (2.0 * lo) <= 1e-15 * (1.0 + abs(val)):
            return bound(lo, v_lo, d_lo)
    else:
        raise GapEvaluationError("projection path did not reach the ball boundary")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        v_mid, d_mid = point(mid)
        if d_mid <= radius:
            lo, v_lo, d_lo = mid, v_mid, d_mid
        else:
            hi = mid
    return bound(lo, v_lo, d_lo)


def _dykstra(feasible_set, center, radius, x, iters=500, tol=1e-14):
    # alternating projections with Dykstra corrections onto set ∩ Ball(center, radius)
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    y = x
    for _ in range(iters):
        z = feasible_set.project(y + p)
        p = y + p - z
        d = z + q - center
        dn = norm(d)
        y_new = center + d * (radius / dn) if dn > radius else z + q
        q = z + q - y_new
        # a stalled iterate is not enough; the two projections must also agree
        if norm(y_new - y) + norm(y_new - z) <= tol * (1.0 + norm(y)):
            return y_new
        y = y_new
    return y


def _gap_by_ascent(g, gnorm, feasible_set, u, radius, max_iter=1000, tol=1e-10):
    step = radius / gnorm
    v = u.copy()
    move = np.inf
    for _ in range(max_iter):
        v_new = _dykstra(feasible_set, u, radius, v - step * g)
        move = norm(v_new - v)
        if move <= tol:
            return inner(g, u - v_new)
        v = v_new
    raise GapEvaluationError(
        f"projected-gradient ascent did not settle within {max_iter} iterations "
        f"(last move {move:.3e})"
    )


# --------------------------------------------------------------------------
# step-size diagnostics


class StepConditions(NamedTuple):
    decreasing: bool
    partial_sum: float
    variation_sum: float


def check_halpern_step_conditions(lambdas: Sequence[float]) -> StepConditions:
    """Prefix diagnostics for the classical Halpern step-size conditions.

    Reports whether the prefix is strictly decreasing (a necessary sign of
    ``lambda_k -> 0``), the running sum of the steps and the running sum of
    ``|lambda_{k+1} - lambda_k|``.
    """
    lam = [float(x) for x in lambdas]
    for x in lam:
        if not 0.0 < x < 1.0 or not math.isfinite(x):
            raise ValueError(f"step {x} outside (0, 1)")
    diffs = [b - a for a, b in zip(lam, lam[1:])]
    decreasing = len(lam) > 1 and all(d < 0 for d in diffs)
    return StepConditions(decreasing, math.fsum(lam), math.fsum(abs(d) for d in diffs))
