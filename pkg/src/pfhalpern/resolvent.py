"""Resolvents, the displacement operator and an extragradient inner solver.

``J = (Id + F + dI_U)^{-1}`` is evaluated approximately by solving the
1-strongly monotone variational inequality for ``u -> F(u) + u - anchor``
with an extragradient method that backtracks on its step size instead of
requiring the Lipschitz constant. ``P = Id - J`` is the displacement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import OracleCounter, SolverReport, TraceRecord, as_vector, inner, norm, slack
from .operators import resolvent_target_operator


def eg_prox_step(F_at_ubar, ubar, u, a: float, m: float, feasible_set) -> np.ndarray:
    """Closed form of ``argmin_U a<F(ubar), v> + (a m/2)|v - ubar|^2 + |v - u|^2/2``."""
    if not a > 0 or not m > 0:
        raise ValueError("a and m must be positive")
    am = a * m
    v = (np.asarray(u) + am * np.asarray(ubar) - a * np.asarray(F_at_ubar)) / (1.0 + am)
    return feasible_set.project(v)


def _backtrack_needed(a, Fbar, Fu, ubar, u_next, u) -> bool:
    lhs = a * inner(Fbar - Fu, ubar - u_next)
    rhs = 0.25 * norm(u_next - ubar) ** 2 + 0.25 * norm(ubar - u) ** 2
    return lhs > rhs + slack(lhs, rhs)


def _shrink(a, r, dF_norm):
    return min(a / 2.0, r / dF_norm) if dF_norm > 0 else a / 2.0


def _eg_cap(F, mu, eps, Fu0_norm):
    L = F.metadata.lipschitz_L if hasattr(F, "metadata") else None
    if L is None:
        return 64 * (1 + 10 ** 6)
    R = Fu0_norm / mu
    arg = max(math.e, 20.0 * math.sqrt(2.0) * L * R / (mu * eps))
    return 64 * (1 + math.ceil(16.0 * L / mu * math.log(arg)))


def eg_solve(F, feasible_set, mu: float, eps: float, u0, a0: Optional[float] = None,
             counter: Optional[OracleCounter] = None, max_iters: Optional[int] = None,
             keep_iterates: bool = False) -> SolverReport:
    """Extragradient with backtracking for a `mu`-strongly monotone Lipschitz `F`.

    Parameters
    ----------
    F : Operator
        Strongly monotone with modulus `mu` (``<dF, du> >= mu |du|^2``) and
        Lipschitz with unknown constant.
    feasible_set : FeasibleSet
    mu : float
        Strong monotonicity modulus; must be positive.
    eps : float
        Target distance to the solution.
    u0 : array_like
        Feasible starting point.
    a0 : float, optional
        Initial step; defaults to ``1/mu`` and is capped there.
    counter : OracleCounter, optional
        Shared counter (used when nested in an outer method).

    Returns
    -------
    SolverReport
        ``final_point`` satisfies ``|u - u*| <= eps`` when converged. The
        residual is ``|ubar_k - u_k|`` compared against
        ``delta_k = a_k mu eps / (5 sqrt 2)``. Trace ``L_k`` holds ``1/a_k``.

    Notes
    -----
    Before stopping, the step is also checked against the local Lipschitz
    ratio ``|ubar - u| / |F(ubar) - F(u)|`` and shrunk if it exceeds it; the
    distance certificate relies on that inequality.
    """
    if not mu > 0:
        raise ValueError("mu must be positive")
    if not eps > 0:
        raise ValueError("eps must be positive")
    u = as_vector(u0, "u0")
    if not feasible_set.contains(u):
        raise ValueError("u0 is not in the feasible set")
    counter = OracleCounter() if counter is None else counter
    a = 1.0 / mu if a0 is None or a0 > 1.0 / mu else float(a0)
    if not a > 0:
        raise ValueError("a0 must be positive")
    sq = 5.0 * math.sqrt(2.0)

    Fu = counter.evaluate(F, u)
    ubar = counter.project(feasible_set, u - a * Fu)
    cap = _eg_cap(F, mu, eps, norm(Fu)) if max_iters is None else max_iters
    trace: list[TraceRecord] = []
    steps = [] if keep_iterates else None
    a_min, backtracks, k = a, 0, 0
    status = "converged"
    Fbar = None  # F at the current ubar, when known

    while True:
        r = norm(ubar - u)
        delta = a * mu * eps / sq
        if r <= delta:
            if r == 0.0:
                break
            if Fbar is None:
                Fbar = counter.evaluate(F, ubar)
            dF = norm(Fbar - Fu)
            if a * dF <= r * (1.0 + 1e-12):
                break
            a = _shrink(a, r, dF)
            a_min = min(a_min, a)
            ubar = counter.project(feasible_set, u - a * Fu)
            Fbar = None
            continue
        if k >= cap:
            status = "iteration cap"
            break
        if Fbar is None:
            Fbar = counter.evaluate(F, ubar)
        u_next = counter.project(feasible_set, (u + a * mu * ubar - a * Fbar) / (1.0 + a * mu))
        while _backtrack_needed(a, Fbar, Fu, ubar, u_next, u):
            backtracks += 1
            a = _shrink(a, norm(ubar - u), norm(Fbar - Fu))
            ubar = counter.project(feasible_set, u - a * Fu)
            Fbar = counter.evaluate(F, ubar)
            u_next = counter.project(feasible_set,
                                     (u + a * mu * ubar - a * Fbar) / (1.0 + a * mu))
        a_min = min(a_min, a)
        trace.append(TraceRecord(k, norm(ubar - u), None, 1.0 / a, None, counter.f_evals))
        if keep_iterates:
            steps.append((u, ubar, a, u_next))
        k += 1
        u = u_next
        Fu = counter.evaluate(F, u)
        ubar = counter.project(feasible_set, u - a * Fu)
        Fbar = None

    r = norm(ubar - u)
    delta = a * mu * eps / sq
    info = {"a_min": a_min, "a_final": a, "backtracks": backtracks, "status": status,
            "delta": delta}
    if keep_iterates:
        info["steps"] = steps
    converged = status == "converged"
    return SolverReport(final_point=u, companion_point=ubar, residual=r, trace=trace,
                        counters=counter, converged=converged and r <= delta,
                        tolerance=delta, algorithm="eg", info=info)


@dataclass(frozen=True)
class ResolventCertificate:
    """Approximate resolvent ``point`` with ``|point - J(anchor)| <= error_bound`` when converged."""

    point: np.ndarray
    error_bound: float
    queries_used: int
    converged: bool = True


def approx_resolvent(F, feasible_set, u_anchor, eps: float,
                     counter: Optional[OracleCounter] = None,
                     start=None) -> ResolventCertificate:
    """Certified approximation of ``J_{F + dI_U}(u_anchor)`` to accuracy `eps`.

    Runs :func:`eg_solve` with ``mu = 1`` on ``u -> F(u) + u - u_anchor``
    starting from the projection of `u_anchor` (or from `start`).
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    counter = OracleCounter() if counter is None else counter
    anchor = as_vector(u_anchor, "u_anchor")
    target = resolvent_target_operator(F, anchor)
    before = counter.f_evals
    u0 = counter.project(feasible_set, anchor if start is None else start)
    rep = eg_solve(target, feasible_set, 1.0, eps, u0, counter=counter)
    return ResolventCertificate(rep.final_point, float(eps), counter.f_evals - before,
                                rep.converged)


def displacement(F, feasible_set, u, eps: float, counter: Optional[OracleCounter] = None,
                 start=None):
    """Return ``(u - J~(u), certificate)``, an `eps`-accurate value of ``P(u)``."""
    cert = approx_resolvent(F, feasible_set, u, eps, counter, start)
    return np.asarray(u, dtype=np.float64) - cert.point, cert


def exact_resolvent_affine(A, b, u_anchor) -> np.ndarray:
    """Solve ``(I + A) v = u_anchor - b``: the resolvent of ``u -> Au + b`` on the whole space."""
    A = np.asarray(A, dtype=np.float64)
    n = A.shape[0]
    b = np.zeros(n) if b is None else np.asarray(b, dtype=np.float64)
    M = np.eye(n) + A
    if np.linalg.cond(M) > 1e12:
        raise ValueError("I + A is singular or ill-conditioned")
    return np.linalg.solve(M, np.asarray(u_anchor, dtype=np.float64) - b)


def exact_displacement_affine(A, b, u) -> np.ndarray:
    return np.asarray(u, dtype=np.float64) - exact_resolvent_affine(A, b, u)
