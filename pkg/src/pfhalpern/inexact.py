"""Halpern iteration on the displacement ``P = Id - J`` with inexact resolvents.

``P`` is 1/2-cocoercive for any monotone ``F``, so the anchored iteration
with ``lambda_k = 1/(k+1)`` applies to it directly. Each step needs one
approximate resolvent whose certified error shrinks like ``1/k^2``. Under
strong monotonicity, restarting the method with a target proportional to
the current residual gives linear convergence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import OracleCounter, SolverReport, TraceRecord, as_vector, norm
from .operators import scale
from .resolvent import approx_resolvent

P_LIPSCHITZ = 2.0  # P is 1/2-cocoercive


@dataclass(frozen=True)
class InexactnessBudget:
    """Resolvent accuracies ``eps_0 = eps/8`` and ``eps_k = eps/(8(k+1)(k+2))``."""

    eps_target: float

    def __post_init__(self):
        if not self.eps_target > 0:
            raise ValueError("eps_target must be positive")

    def __call__(self, k: int) -> float:
        if k < 0:
            raise ValueError("k must be nonnegative")
        if k == 0:
            return self.eps_target / 8.0
        return self.eps_target / (8.0 * (k + 1) * (k + 2))


def halpern_lipschitz_solve(F, feasible_set, u0, eps: float,
                            counter: Optional[OracleCounter] = None,
                            max_iters: Optional[int] = None,
                            keep_iterates: bool = False,
                            exit_threshold: Optional[float] = None) -> SolverReport:
    """Parameter-free Halpern iteration for a monotone Lipschitz operator.

    Parameters
    ----------
    F : Operator
        Monotone and Lipschitz with unknown constant.
    feasible_set : FeasibleSet
    u0 : array_like
        Feasible anchor.
    eps : float
        Target for the exact displacement ``|P(u_k)|``.
    counter : OracleCounter, optional
        Shared counter for nested use.
    max_iters : int, optional
        Outer-iteration cap, default ``10**6``.
    keep_iterates : bool
        Store ``u_k`` and ``ubar_k`` in ``info["iterates"]`` and
        ``info["companions"]``.
    exit_threshold : float, optional
        Override of the exit level ``3 eps / 4`` for ``|P~(u_k)|``.

    Returns
    -------
    SolverReport
        ``final_point`` is ``u_k`` and ``companion_point`` is
        ``ubar_k = J~(u_k)``. On convergence ``|P~(u_k)| <= 3 eps / 4`` and the
        certificate error is below ``eps / 8``, so ``|P(u_k)| <= eps``.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    u0 = as_vector(u0, "u0")
    if not feasible_set.contains(u0):
        raise ValueError("u0 is not in the feasible set")
    counter = OracleCounter() if counter is None else counter
    budget = InexactnessBudget(eps)
    threshold = 0.75 * eps if exit_threshold is None else exit_threshold
    cap = 10 ** 6 if max_iters is None else max_iters

    cert = approx_resolvent(F, feasible_set, u0, budget(0), counter)
    u, ubar = u0, cert.point
    res = norm(u - ubar)
    cert_errors = [budget(0)]
    trace: list[TraceRecord] = []
    iterates = [u0] if keep_iterates else None
    companions = [ubar] if keep_iterates else None
    k, status = 0, "converged"
    inner_ok = cert.converged

    while res > threshold:
        if not inner_ok:
            status = "inner solver did not converge"
            break
        if k >= cap:
            status = "iteration cap"
            break
        k += 1
        lam = 1.0 / (k + 1)
        u = lam * u0 + (1.0 - lam) * ubar
        # warm start at the previous resolvent point, which is close to J(u)
        cert = approx_resolvent(F, feasible_set, u, budget(k), counter, start=ubar)
        inner_ok = cert.converged
        ubar = cert.point
        res = norm(u - ubar)
        cert_errors.append(budget(k))
        trace.append(TraceRecord(k, res, lam, P_LIPSCHITZ, None, counter.f_evals))
        if keep_iterates:
            iterates.append(u)
            companions.append(ubar)

    converged = status == "converged" and inner_ok and res <= threshold
    if status == "converged" and not inner_ok:
        status = "inner solver did not converge"
    info = {"status": status, "cert_errors": cert_errors, "final_cert_error": cert_errors[-1]}
    if keep_iterates:
        info["iterates"] = iterates
        info["companions"] = companions
    return SolverReport(final_point=u, companion_point=ubar, residual=res, trace=trace,
                        counters=counter, converged=converged, tolerance=threshold,
                        algorithm="halpern-lipschitz", info=info)


def scaled_resolvent_option(F, feasible_set, u0, eps: float, eta: float,
                            max_iters: Optional[int] = None,
                            keep_iterates: bool = False) -> SolverReport:
    """Run :func:`halpern_lipschitz_solve` on ``F / eta``.

    Meant for ``eta`` of the order of the Lipschitz constant when that is far
    below 1. The exit level is ``3 eps / (4 eta)`` for the displacement of
    ``F / eta``.
    """
    if not eta > 0:
        raise ValueError("eta must be positive")
    G = F if eta == 1.0 else scale(F, 1.0 / eta)
    rep = halpern_lipschitz_solve(G, feasible_set, u0, eps / eta, max_iters=max_iters,
                                  keep_iterates=keep_iterates)
    rep.algorithm = "halpern-lipschitz-scaled"
    rep.info["eta"] = eta
    return rep


def restart_solve(F, feasible_set, u0, eps: float, max_rounds: Optional[int] = None,
                  keep_iterates: bool = False) -> SolverReport:
    """Restarted inexact Halpern iteration for strongly monotone Lipschitz operators.

    Round ``k`` runs :func:`halpern_lipschitz_solve` from ``u_{k-1}`` with
    target ``(7/16) |P~(u_{k-1})|``, so the displacement at least halves per
    round. The initial ``P~(u_0)`` is computed with error ``eps/8``. The loop
    stops as soon as ``|P~(u_k)|`` plus its certified error is at most `eps`,
    which certifies ``|P(u_k)| <= eps``.

    The trace holds one record per round (``k = 0`` for the initial
    evaluation) with the residual ``|P~(u_k)|``; ``info["cert_errors"]`` has
    the matching certificate errors.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    u = as_vector(u0, "u0")
    if not feasible_set.contains(u):
        raise ValueError("u0 is not in the feasible set")
    counter = OracleCounter()
    cap = 200 if max_rounds is None else max_rounds
    cert = approx_resolvent(F, feasible_set, u, eps / 8.0, counter)
    ubar, err = cert.point, eps / 8.0
    p = norm(u - ubar)
    trace = [TraceRecord(0, p, None, P_LIPSCHITZ, None, counter.f_evals)]
    cert_errors = [err]
    iterates = [u] if keep_iterates else None
    status = "converged" if cert.converged else "inner solver did not converge"
    k = 0
    while status == "converged" and p + err > eps:
        if k >= cap:
            status = "round cap"
            break
        k += 1
        rep = halpern_lipschitz_solve(F, feasible_set, u, 7.0 / 16.0 * p, counter=counter)
        if not rep.converged:
            status = "round did not converge: " + rep.info["status"]
            break
        u, ubar = rep.final_point, rep.companion_point
        p, err = rep.residual, rep.info["final_cert_error"]
        trace.append(TraceRecord(k, p, None, P_LIPSCHITZ, None, counter.f_evals))
        cert_errors.append(err)
        if keep_iterates:
            iterates.append(u)

    info = {"status": status, "rounds": k, "cert_errors": cert_errors,
            "eps_above_half": eps > 0.5}
    if keep_iterates:
        info["iterates"] = iterates
    tol = eps - err
    converged = status == "converged" and p <= tol
    return SolverReport(final_point=u, companion_point=ubar, residual=p, trace=trace,
                        counters=counter, converged=converged, tolerance=max(tol, 0.0),
                        algorithm="restart", info=info)
