"""Parameter-free Halpern iteration for cocoercive operators.

The unconstrained solver runs the anchored iteration

    u_k = lambda_k u_0 + (1 - lambda_k) (u_{k-1} - 2 F(u_{k-1}) / L_k)

and doubles the estimate ``L_k`` whenever the cocoercivity inequality between
consecutive iterates fails. The step ``lambda_k`` follows the adaptive
recurrence ``p = (L_{k-1}/L_k) lambda_{k-1}/(1 - lambda_{k-1})``,
``lambda_k = p/(1 + 2p)``, which reduces to ``1/(k+1)`` when ``L_k`` is constant.
The constrained solver applies the same scheme to the operator mapping.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

from .core import (OracleCounter, SolverReport, TraceRecord, as_vector, inner, norm,
                   slack)
from .sets import mapping_step

MAX_DOUBLINGS = 1100  # 2**1100 overflows float64: nothing cocoercive survives this


def potential_value(Fu, u, u0, lam: float, L: float) -> float:
    """``(1/L)|F(u)|^2 - lam/(1 - lam) <F(u), u0 - u>``."""
    if not lam < 1:
        raise ValueError("lambda must be < 1")
    Fu = np.asarray(Fu)
    return norm(Fu) ** 2 / L - lam / (1.0 - lam) * inner(Fu, np.asarray(u0) - np.asarray(u))


def potential_weights(lambdas: Sequence[float]) -> np.ndarray:
    """Weights ``A_1 = 1``, ``A_{k+1} = A_k lambda_k / ((1 - lambda_k) lambda_{k+1})``."""
    lam = np.asarray(lambdas, dtype=np.float64)
    A = np.ones(lam.size)
    for i in range(1, lam.size):
        A[i] = A[i - 1] * lam[i - 1] / ((1.0 - lam[i - 1]) * lam[i])
    return A


def lambda_update(lambda_prev: float, L_prev: float, L_curr: float) -> float:
    p = (L_prev / L_curr) * lambda_prev / (1.0 - lambda_prev)
    return p / (1.0 + 2.0 * p)


def cocoercivity_condition(F_u_k, F_u_prev, u_k, u_prev, L_k: float, scale: float = 1.0) -> bool:
    """True when ``<dF, du> >= |dF|^2 / (scale * L_k)`` up to rounding slack.

    This is the negation of the doubling guard; ``scale=2`` gives the guard
    used with the operator mapping.
    """
    dF = np.asarray(F_u_k) - np.asarray(F_u_prev)
    lhs = inner(dF, np.asarray(u_k) - np.asarray(u_prev))
    rhs = norm(dF) ** 2 / (scale * L_k)
    return lhs >= rhs - slack(lhs, rhs)


def _default_cap(F, Fu0_norm: float, eps: float, L0: float, factor: float) -> int:
    # needs L and a distance bound |u0 - u*| <= |F(u0)|/mu, so a known mu > 0
    L = F.metadata.lipschitz_L if hasattr(F, "metadata") else None
    mu = F.metadata.strong_mono_mu if hasattr(F, "metadata") else None
    if L is None or not mu:
        return 10 ** 7
    bound = max(factor * L, L0) * (Fu0_norm / mu) / eps + max(0.0, math.log2(max(factor * L / L0, 1.0)))
    return int(10 * math.ceil(bound)) + 10


def halpern_cocoercive_solve(F, u0, eps: float, L0: float = 1.0,
                             max_iters: Optional[int] = None,
                             keep_iterates: bool = False) -> SolverReport:
    """Parameter-free Halpern iteration for an unconstrained cocoercive operator.

    Parameters
    ----------
    F : Operator
        ``1/L``-cocoercive operator with unknown ``L``.
    u0 : array_like
        Anchor and starting point.
    eps : float
        Target for ``|F(u_k)|``.
    L0 : float
        Initial guess of ``L``.
    max_iters : int, optional
        Outer-iteration cap; by default ten times the predicted bound when
        the constants allow one, else ``10**7``.
    keep_iterates : bool
        Store the iterates in ``report.info["iterates"]``.

    Returns
    -------
    SolverReport
        ``final_point`` is the last iterate; the trace holds ``lambda_k``,
        ``L_k`` and the potential ``C_k`` of every outer iteration and
        ``info["doublings"]`` counts entries into the doubling loop.
    """
    if not eps > 0 or not L0 > 0:
        raise ValueError("eps and L0 must be positive")
    counter = OracleCounter()
    u0 = as_vector(u0, "u0")
    F_prev = counter.evaluate(F, u0)
    u_prev = u0
    res = norm(F_prev)
    cap = _default_cap(F, res, eps, L0, 2.0) if max_iters is None else max_iters
    trace: list[TraceRecord] = []
    iterates = [u0] if keep_iterates else None
    lam_prev, L_prev = 0.5, L0
    doublings, k, status = 0, 0, "converged"

    while res > eps:
        if k >= cap:
            status = "iteration cap"
            break
        k += 1
        L = L_prev
        lam = 0.5 if k == 1 else lambda_update(lam_prev, L_prev, L)
        u = lam * u0 + (1.0 - lam) * (u_prev - 2.0 * F_prev / L)
        Fu = counter.evaluate(F, u)
        while not cocoercivity_condition(Fu, F_prev, u, u_prev, L):
            if doublings >= MAX_DOUBLINGS:
                status = "doubling limit"
                break
            L *= 2.0
            doublings += 1
            # lambda_1 stays 1/2 so that u_1 = u_0 - F(u_0)/L_1
            lam = 0.5 if k == 1 else lambda_update(lam_prev, L_prev, L)
            u = lam * u0 + (1.0 - lam) * (u_prev - 2.0 * F_prev / L)
            Fu = counter.evaluate(F, u)
        if status != "converged":
            break
        res = norm(Fu)
        trace.append(TraceRecord(k, res, lam, L, potential_value(Fu, u, u0, lam, L),
                                 counter.f_evals))
        if keep_iterates:
            iterates.append(u)
        u_prev, F_prev, lam_prev, L_prev = u, Fu, lam, L

    info = {"doublings": doublings, "status": status}
    if keep_iterates:
        info["iterates"] = iterates
    return SolverReport(final_point=u_prev, residual=res, trace=trace, counters=counter,
                        converged=res <= eps, tolerance=eps,
                        algorithm="halpern-cocoercive", info=info)


def _local_lipschitz(F_a, F_b, a, b) -> float:
    den = norm(np.asarray(a) - np.asarray(b))
    if den == 0.0:
        return 0.0
    return norm(np.asarray(F_a) - np.asarray(F_b)) / den


def halpern_constrained_solve(F, feasible_set, u0, eps: float, L0: float = 1.0,
                              max_iters: Optional[int] = None,
                              keep_iterates: bool = False,
                              simple: bool = False) -> SolverReport:
    """Parameter-free Halpern iteration on the operator mapping ``G_{L_k}``.

    Every iterate stays feasible. On exit the companion point
    ``ubar_k = proj(u_k - F(u_k)/L_k)`` certifies a restricted gap of at
    most `eps`: the loop stops once ``|G(u_k)| <= eps / (1 + Lbar_k/L_k)``,
    where ``Lbar_k`` is the local Lipschitz estimate between ``u_k`` and
    ``ubar_k``. With ``simple=True`` the exit test is ``|G(u_k)| <= eps``
    and ``F(ubar_k)`` is never queried.

    The mapping at ``u_k`` is always evaluated with the same ``L_k`` that
    produced ``ubar_k`` and ``Lbar_k``; the enlarged ``max(L_k, Lbar_k)`` only
    takes effect from the next iteration.
    """
    if not eps > 0 or not L0 > 0:
        raise ValueError("eps and L0 must be positive")
    u0 = as_vector(u0, "u0")
    if not feasible_set.contains(u0):
        raise ValueError("u0 is not in the feasible set")
    counter = OracleCounter()
    F_prev = counter.evaluate(F, u0)
    eta = L0
    G_prev, ubar = mapping_step(feasible_set, eta, u0, F_prev, counter)
    Lbar = 0.0
    if not simple:
        Lbar = _local_lipschitz(counter.evaluate(F, ubar), F_prev, ubar, u0)
    res = norm(G_prev)
    threshold = eps if simple else eps / (1.0 + Lbar / eta)
    cap = _default_cap(F, norm(F_prev), eps, L0, 4.0) if max_iters is None else max_iters

    trace: list[TraceRecord] = []
    iterates = [u0] if keep_iterates else None
    companions = [ubar] if keep_iterates else None
    u_prev, ubar_prev, eta_prev = u0, ubar, eta
    lam_prev, L_prev = 0.5, eta  # L_0 is not raised to Lbar_0
    doublings, k, status = 0, 0, "converged"
    u = u0

    while res > threshold:
        if k >= cap:
            status = "iteration cap"
            break
        k += 1
        L = L_prev
        lam = 0.5 if k == 1 else lambda_update(lam_prev, L_prev, L)
        if L == eta_prev:
            base, Gp = ubar_prev, G_prev
        else:
            Gp, base = mapping_step(feasible_set, L, u_prev, F_prev, counter)
        u = lam * u0 + (1.0 - lam) * base
        Fu = counter.evaluate(F, u)
        G, ubar = mapping_step(feasible_set, L, u, Fu, counter)
        while not cocoercivity_condition(G, Gp, u, u_prev, L, scale=2.0):
            if doublings >= MAX_DOUBLINGS:
                status = "doubling limit"
                break
            L *= 2.0
            doublings += 1
            lam = 0.5 if k == 1 else lambda_update(lam_prev, L_prev, L)
            Gp, base = mapping_step(feasible_set, L, u_prev, F_prev, counter)
            u = lam * u0 + (1.0 - lam) * base
            Fu = counter.evaluate(F, u)
            G, ubar = mapping_step(feasible_set, L, u, Fu, counter)
        if status != "converged":
            break
        eta = L
        res = norm(G)
        if simple:
            threshold = eps
        else:
            Lbar = _local_lipschitz(counter.evaluate(F, ubar), Fu, ubar, u)
            threshold = eps / (1.0 + Lbar / eta)
        potential = norm(G) ** 2 / (2.0 * eta) - lam / (1.0 - lam) * inner(G, u0 - u)
        trace.append(TraceRecord(k, res, lam, eta, potential, counter.f_evals))
        if keep_iterates:
            iterates.append(u)
            companions.append(ubar)
        u_prev, F_prev, G_prev, ubar_prev, eta_prev = u, Fu, G, ubar, eta
        lam_prev, L_prev = lam, max(eta, Lbar)

    info = {"doublings": doublings, "status": status, "Lbar": Lbar, "eta": eta}
    if keep_iterates:
        info["iterates"] = iterates
        info["companions"] = companions
    name = "halpern-constrained-simple" if simple else "halpern-constrained"
    return SolverReport(final_point=u_prev, companion_point=ubar_prev, residual=res,
                        trace=trace, counters=counter, converged=res <= threshold,
                        tolerance=threshold, algorithm=name, info=info)


def simple_residual_variant(F, feasible_set, u0, eps: float, L0: float = 1.0,
                            max_iters: Optional[int] = None,
                            keep_iterates: bool = False) -> SolverReport:
    """Constrained solver that only drives ``|G_{L_k}(u_k)|`` below `eps`."""
    return halpern_constrained_solve(F, feasible_set, u0, eps, L0, max_iters,
                                     keep_iterates, simple=True)
