"""Acceptance battery: twelve numbered checks of the solvers' guarantees.

Each ``criterion_N`` returns a :class:`CriterionResult`; :func:`run_suite`
runs a selection of them. Tolerances are fixed here and never loosened at
call sites.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from . import instances as inst
from .core import TraceRecord, inner, norm, restricted_gap, slack
from .halpern import halpern_cocoercive_solve, halpern_constrained_solve, potential_weights
from .inexact import halpern_lipschitz_solve, restart_solve
from .harness import fit_rate
from .operators import (bilinear_saddle, identity_operator, quadratic_saddle,
                        regularize, resolvent_target_operator, saddle_operator, scale,
                        zero_operator)
from .resolvent import (approx_resolvent, eg_solve, exact_displacement_affine,
                        exact_resolvent_affine)
from .sets import Ball, Box, Simplex, WholeSpace, operator_mapping

N_INSTANCES = 20
N_PAIRS = 1000
BASE_SEED = 20240601


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str = ""
    data: dict = field(default_factory=dict, repr=False)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.number:2d}: {self.name} -- {self.detail}"


def _seeds(offset, n=N_INSTANCES):
    return [BASE_SEED + 1000 * offset + i for i in range(n)]


# --------------------------------------------------------------------------
# shared runs for criteria 1-4


@lru_cache(maxsize=None)
def _cocoercive_runs(eps=1e-4):
    runs = []
    for seed in _seeds(1):
        P = inst.cocoercive_affine(seed)
        rep = halpern_cocoercive_solve(P.operator, P.u0, eps, L0=1.0, keep_iterates=True)
        runs.append((seed, P, rep))
    return tuple(runs)


def criterion_1() -> CriterionResult:
    worst, n_checked = -math.inf, 0
    for seed, P, rep in _cocoercive_runs():
        R = norm(P.u0 - P.reference_solution)
        for rec, u in zip(rep.trace, rep.info["iterates"][1:]):
            Fu = P.operator(u)
            lam = rec.lambda_k
            bound = rec.L_k * lam / (1 - lam) * R + 1e-9 * (1 + R)
            worst = max(worst, norm(Fu) - bound)
            n_checked += 1
    ok = worst <= 0 and all(r.converged for _, _, r in _cocoercive_runs())
    return CriterionResult(1, "residual bound |F(u_k)| <= L_k lam_k/(1-lam_k) |u0-u*|", ok,
                           f"{n_checked} iterates, max(residual - bound) = {worst:.3e}")


def criterion_2() -> CriterionResult:
    worst_rel, worst_c1 = -math.inf, -math.inf
    for _, P, rep in _cocoercive_runs():
        AC = potential_weights([r.lambda_k for r in rep.trace]) * np.array(
            [r.potential for r in rep.trace])
        for a, b in zip(AC, AC[1:]):
            worst_rel = max(worst_rel, (b - a) - 1e-9 * (1 + abs(a)))
        worst_c1 = max(worst_c1, rep.trace[0].potential)
    ok = worst_rel <= 0 and worst_c1 <= 1e-12
    return CriterionResult(2, "potential A_k C_k nonincreasing, C_1 <= 0", ok,
                           f"max violation {worst_rel:.3e}, max C_1 = {worst_c1:.3e}")


def criterion_3() -> CriterionResult:
    bad = []
    eps = 1e-4
    for seed, P, rep in _cocoercive_runs(eps):
        L = P.operator.metadata.lipschitz_L
        R = norm(P.u0 - P.reference_solution)
        d_max = max(0, math.ceil(math.log2(2 * L)))
        q_max = max(2 * L, 1.0) * R / eps + max(0.0, math.log2(2 * L)) + 2
        if rep.info["doublings"] > d_max or rep.counters.f_evals > q_max:
            bad.append((seed, rep.info["doublings"], d_max, rep.counters.f_evals, q_max))
    worst = max((r.counters.f_evals / (max(2 * P.operator.metadata.lipschitz_L, 1.0)
                                       * norm(P.u0 - P.reference_solution) / eps)
                 for _, P, r in _cocoercive_runs(eps)))
    return CriterionResult(3, "doubling and query budgets", not bad,
                           f"{len(bad)} violations; max queries/bound ratio {worst:.3f}",
                           {"violations": bad})


def criterion_4() -> CriterionResult:
    worst_decay, worst_exact, n_const = -math.inf, 0.0, 0
    reports = [r for _, _, r in _cocoercive_runs()]
    for seed in _seeds(4, 6):
        P = inst.constrained_cocoercive(seed, "box" if seed % 2 else "ball")
        reports.append(halpern_constrained_solve(P.operator, P.feasible_set, P.u0, 1e-4))
    # a run with L below L0 never doubles, so L_k stays constant
    P = inst.cocoercive_affine(_seeds(4, 1)[0], L=0.8)
    reports.append(halpern_cocoercive_solve(P.operator, P.u0, 1e-4))
    for rep in reports:
        for r in rep.trace:
            # rounding slack per the package-wide 1e-12 (1 + magnitudes) convention
            worst_decay = max(worst_decay, r.lambda_k - 1.0 / (r.k + 1) - slack(r.lambda_k))
        Ls = {r.L_k for r in rep.trace}
        if len(Ls) == 1:
            n_const += 1
            for r in rep.trace:
                worst_exact = max(worst_exact, abs(r.lambda_k - 1.0 / (r.k + 1)))
    ok = worst_decay <= 0 and n_const > 0 and worst_exact <= 1e-14
    return CriterionResult(4, "lambda_k <= 1/(k+1); equality when L_k is constant", ok,
                           f"max(lam_k - 1/(k+1)) = {worst_decay:.3e}; {n_const} constant-L runs, "
                           f"max |lam_k - 1/(k+1)| = {worst_exact:.3e}")


def criterion_5() -> CriterionResult:
    worst, total = -math.inf, 0
    rng = np.random.default_rng(BASE_SEED + 5)
    for seed in _seeds(5, 10):
        P = inst.constrained_cocoercive(seed, "box" if seed % 2 else "ball")
        F, S = P.operator, P.feasible_set
        L = F.metadata.lipschitz_L
        for u, v in inst.random_pairs(rng, S, F.dim, N_PAIRS):
            eta = L * float(rng.uniform(1.0, 3.0))
            dG = operator_mapping(F, S, eta, u) - operator_mapping(F, S, eta, v)
            worst = max(worst, norm(dG) ** 2 / (2 * eta) - inner(dG, u - v))
            total += 1
    ok = worst <= 1e-10
    return CriterionResult(5, "G_eta is 1/(2 eta)-cocoercive for eta >= L", ok,
                           f"{total} pairs, max violation {worst:.3e}")


def criterion_6() -> CriterionResult:
    eps, worst_gap, infeasible, failed = 1e-5, -math.inf, 0, 0
    for seed in _seeds(6, 5):
        P = inst.box_identity(seed)
        rep = halpern_constrained_solve(P.operator, P.feasible_set, P.u0, eps,
                                        keep_iterates=True)
        if not rep.converged:
            failed += 1
            continue
        gap = restricted_gap(P.operator, P.feasible_set, rep.companion_point, 1.0)
        worst_gap = max(worst_gap, gap)
        infeasible += sum(not P.feasible_set.contains(u) for u in rep.info["iterates"])
    ok = failed == 0 and infeasible == 0 and worst_gap <= eps + 1e-9
    return CriterionResult(6, "constrained certificate: restricted gap at ubar <= eps", ok,
                           f"max gap {worst_gap:.3e} (eps {eps:g}); {infeasible} infeasible "
                           f"iterates; {failed} unconverged")


def _affine_resolvent_instances():
    out = [inst.rotation_instance(1), inst.rotation_instance(2)]
    out += [inst.monotone_affine(s) for s in _seeds(7, N_INSTANCES - 2)]
    return out


def criterion_7() -> CriterionResult:
    worst = 0.0
    rng = np.random.default_rng(BASE_SEED + 7)
    for P in _affine_resolvent_instances():
        F = P.operator
        anchor = rng.standard_normal(F.dim)
        cert = approx_resolvent(F, WholeSpace(F.dim), anchor, 1e-10)
        exact = exact_resolvent_affine(F.matrix, F.offset, anchor)
        worst = max(worst, norm(cert.point - exact))
    ok = worst <= 1e-9
    return CriterionResult(7, "approximate resolvent matches exact solve", ok,
                           f"{N_INSTANCES} instances, max error {worst:.3e}")


def criterion_8() -> CriterionResult:
    eps = 1e-6
    worst_a, worst_lyap, worst_dist, failed = math.inf, -math.inf, -math.inf, 0
    for seed in _seeds(8):
        P = inst.strongly_monotone_affine(seed)
        F = P.operator
        L, mu = F.metadata.lipschitz_L, F.metadata.strong_mono_mu
        us = P.reference_solution
        rep = eg_solve(F, P.feasible_set, mu, eps, P.u0, keep_iterates=True)
        failed += not rep.converged
        worst_a = min(worst_a, rep.info["a_min"] * 4 * L)
        for u, ub, a, un in rep.info["steps"]:
            lhs = (1 + a * mu) * norm(un - us) ** 2 + 0.25 * norm(ub - u) ** 2
            worst_lyap = max(worst_lyap, lhs - norm(u - us) ** 2 - 1e-9)
        worst_dist = max(worst_dist, norm(rep.final_point - us) - eps)
    ok = failed == 0 and worst_a > 1 and worst_lyap <= 0 and worst_dist <= 0
    return CriterionResult(8, "extragradient step floor, contraction and certificate", ok,
                           f"min a_k*4L = {worst_a:.3f}; max Lyapunov violation {worst_lyap:.3e}; "
                           f"max |u-u*| - eps = {worst_dist:.3e}; {failed} unconverged")


def criterion_9() -> CriterionResult:
    eps = 1e-3
    P = inst.rotation_instance(2)
    F = P.operator
    rep = halpern_lipschitz_solve(F, P.feasible_set, P.u0, eps, keep_iterates=True)
    bound = 8 * norm(P.u0 - P.reference_solution) / eps
    exact = [norm(exact_displacement_affine(F.matrix, F.offset, u))
             for u in rep.info["iterates"]]
    trace = [TraceRecord(k, r, None, 2.0, None, 0) for k, r in enumerate(exact)]
    slope, r2 = fit_rate(trace)
    ok = rep.converged and rep.iterations <= bound and -1.35 <= slope <= -0.75 and r2 >= 0.9
    return CriterionResult(9, "O(1/k) rate of the inexact Halpern iteration", ok,
                           f"{rep.iterations} iterations (bound {bound:.0f}); slope {slope:.3f}, "
                           f"r^2 {r2:.4f}", {"slope": slope, "r2": r2})


def _exact_displacements(F, us):
    U = np.array(us)
    J = np.linalg.solve(np.eye(F.dim) + F.matrix, (U - F.offset).T).T
    return list(U - J)


def criterion_10() -> CriterionResult:
    eps = 1e-3
    worst_exit, worst_pot, failed = -math.inf, -math.inf, 0
    for P in _affine_resolvent_instances():
        F = P.operator
        rep = halpern_lipschitz_solve(F, P.feasible_set, P.u0, eps, keep_iterates=True)
        failed += not rep.converged
        us, ubars = rep.info["iterates"], rep.info["companions"]
        Ps = _exact_displacements(F, us)
        worst_exit = max(worst_exit, norm(Ps[-1]) - eps)
        u0 = us[0]
        for k in range(1, len(us) - 1):
            lam_k, lam_n = 1.0 / (k + 1), 1.0 / (k + 2)
            A_k, A_n = k * (k + 1) / 2, (k + 1) * (k + 2) / 2
            C_k = 0.5 * norm(Ps[k]) ** 2 - lam_k / (1 - lam_k) * inner(Ps[k], u0 - us[k])
            C_n = 0.5 * norm(Ps[k + 1]) ** 2 - lam_n / (1 - lam_n) * inner(Ps[k + 1], u0 - us[k + 1])
            e_k = (us[k] - ubars[k]) - Ps[k]
            rhs = A_k * C_k + A_n * inner(e_k, (1 - lam_n) * Ps[k] - Ps[k + 1])
            worst_pot = max(worst_pot, A_n * C_n - rhs - 1e-8)
    ok = failed == 0 and worst_exit <= 0 and worst_pot <= 0
    return CriterionResult(10, "inexact potential inequality and exit soundness", ok,
                           f"max |P(u_K)| - eps = {worst_exit:.3e}; max potential violation "
                           f"{worst_pot:.3e}; {failed} unconverged")


def criterion_11() -> CriterionResult:
    problems, ok = [], True
    lines = []
    for mu in (0.1, 0.5, 1.0):
        P = inst.regularized_saddle(mu)
        R = norm(P.u0 - P.reference_solution)
        queries = []
        for eps in (1e-2, 1e-3, 1e-4):
            rep = restart_solve(P.operator, P.feasible_set, P.u0, eps)
            queries.append(rep.counters.f_evals)
            ok &= rep.converged
            res = [r.residual for r in rep.trace]
            errs = rep.info["cert_errors"]
            for k in range(1, len(res)):
                if res[k] > 0.5 * res[k - 1] + 2 * (errs[k] + errs[k - 1]):
                    ok = False
                    problems.append((mu, eps, "halving", k))
            if eps == 1e-4 and rep.info["rounds"] > 1 + math.log2(R / eps):
                ok = False
                problems.append((mu, eps, "rounds", rep.info["rounds"]))
        ratios = [b / a for a, b in zip(queries, queries[1:])]
        if max(ratios) > 1.8:
            ok = False
            problems.append((mu, "ratio", ratios))
        lines.append(f"mu={mu:g}: queries {queries}, ratios "
                     + ", ".join(f"{r:.2f}" for r in ratios))
    return CriterionResult(11, "restart halving, round count and log(1/eps) query growth", ok,
                           "; ".join(lines), {"problems": problems})


def _catalogue(rng):
    ops = [zero_operator(3), identity_operator(3), bilinear_saddle(2),
           quadratic_saddle(Q=inst.psd_matrix(rng, 2, 0, 1), R=inst.psd_matrix(rng, 2, 0, 1)),
           inst.monotone_affine(rng).operator, inst.strongly_monotone_affine(rng).operator,
           inst.cocoercive_affine(rng).operator,
           regularize(bilinear_saddle(1), 0.3, np.ones(2)),
           resolvent_target_operator(bilinear_saddle(1), np.array([1.0, -1.0])),
           scale(bilinear_saddle(1), 2.5)]
    # nonlinear convex-concave saddle: Phi = sum log cosh(x) + <x, y> - |y|^4 / 4
    ops.append(saddle_operator(lambda x, y: np.tanh(x) + y,
                               lambda x, y: x - y * np.dot(y, y), 2, 2))
    return ops


def criterion_12() -> CriterionResult:
    rng = np.random.default_rng(BASE_SEED + 12)
    worst = {"idempotence": 0.0, "firm": -math.inf, "P-cocoercive": -math.inf,
             "P-lipschitz": -math.inf, "monotone": -math.inf}
    sets = [WholeSpace(4), Box(-np.ones(4), np.array([1.0, 2.0, 0.5, 3.0])),
            Ball(np.array([1.0, 0.0, -1.0, 0.5]), 1.5), Simplex(4)]
    for S in sets:
        for u, v in inst.random_pairs(rng, WholeSpace(4), 4, N_PAIRS):
            pu, pv = S.project(u), S.project(v)
            worst["idempotence"] = max(worst["idempotence"], norm(S.project(pu) - pu))
            worst["firm"] = max(worst["firm"], norm(pu - pv) ** 2 - inner(pu - pv, u - v))
    for P in _affine_resolvent_instances()[:5]:
        F = P.operator
        for u, v in inst.random_pairs(rng, WholeSpace(F.dim), F.dim, N_PAIRS):
            dP = exact_displacement_affine(F.matrix, F.offset, u) \
                - exact_displacement_affine(F.matrix, F.offset, v)
            worst["P-cocoercive"] = max(worst["P-cocoercive"],
                                        0.5 * norm(dP) ** 2 - inner(dP, u - v))
            worst["P-lipschitz"] = max(worst["P-lipschitz"], norm(dP) - 2 * norm(u - v))
    for F in _catalogue(rng):
        for u, v in inst.random_pairs(rng, WholeSpace(F.dim), F.dim, N_PAIRS):
            worst["monotone"] = max(worst["monotone"], -inner(F(u) - F(v), u - v))
    ok = worst["idempotence"] <= 1e-12 and all(
        worst[k] <= 1e-10 for k in ("firm", "P-cocoercive", "P-lipschitz", "monotone"))
    return CriterionResult(12, "structural properties (projections, P, monotonicity)", ok,
                           ", ".join(f"{k} {v:.2e}" for k, v in worst.items()))


CRITERIA: dict[int, Callable[[], CriterionResult]] = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10,
    11: criterion_11, 12: criterion_12,
}

SUITES = {
    "all": tuple(CRITERIA),
    "cocoercive": (1, 2, 3, 4),
    "constrained": (5, 6),
    "resolvent": (7, 8),
    "lipschitz": (9, 10, 11),
    "structural": (12,),
}


def run_suite(name: str = "all", echo: Callable[[str], None] | None = None) -> list[CriterionResult]:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    out = []
    for n in SUITES[name]:
        res = CRITERIA[n]()
        if echo is not None:
            echo(res.line())
        out.append(res)
    return out
