"""Seeded random test problems with known solutions.

Every generator takes a ``numpy.random.Generator`` (or a seed) so failures
reproduce from the printed seed.
"""

from __future__ import annotations

import numpy as np

from .harness import ProblemInstance
from .operators import affine_operator, bilinear_saddle, identity_operator, regularize
from .sets import Ball, Box, WholeSpace


def _rng(rng):
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def _orthogonal(rng, dim):
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    return q * np.sign(np.diag(r))


def _unit(rng, dim):
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def psd_matrix(rng, dim, lo, hi):
    """Symmetric matrix with eigenvalues drawn uniformly from ``[lo, hi]`` (``hi`` attained)."""
    rng = _rng(rng)
    eig = rng.uniform(lo, hi, dim)
    eig[0] = hi
    Q = _orthogonal(rng, dim)
    A = (Q * eig) @ Q.T
    return 0.5 * (A + A.T)


def skew_matrix(rng, dim, scale=1.0):
    rng = _rng(rng)
    M = rng.standard_normal((dim, dim))
    S = M - M.T
    n = np.linalg.norm(S, 2)
    return S * (scale / n) if n > 0 else S


def cocoercive_affine(rng, dim=None, L=None, distance=1.0) -> ProblemInstance:
    """``F(u) = A(u - u*)`` with symmetric positive definite ``A``; ``|u0 - u*| = distance``."""
    rng = _rng(rng)
    dim = int(rng.integers(2, 9)) if dim is None else dim
    L = float(rng.uniform(0.5, 4.0)) if L is None else L
    A = psd_matrix(rng, dim, 0.05 * L, L)
    u_star = rng.standard_normal(dim)
    u0 = u_star + distance * _unit(rng, dim)
    F = affine_operator(A, -A @ u_star, description="cocoercive affine")
    return ProblemInstance(F, WholeSpace(dim), u0, u_star, "cocoercive-affine")


def monotone_affine(rng, dim=None, sym_weight=None) -> ProblemInstance:
    """``F(u) = A(u - u*)`` with ``A = S + K``, ``S`` PSD (possibly zero) and ``K`` skew."""
    rng = _rng(rng)
    dim = int(rng.integers(2, 7)) if dim is None else dim
    w = float(rng.uniform(0.0, 1.0)) if sym_weight is None else sym_weight
    A = w * psd_matrix(rng, dim, 0.0, 1.0) + skew_matrix(rng, dim, float(rng.uniform(0.5, 2.0)))
    u_star = rng.standard_normal(dim)
    u0 = u_star + _unit(rng, dim)
    F = affine_operator(A, -A @ u_star, description="monotone affine")
    return ProblemInstance(F, WholeSpace(dim), u0, u_star, "monotone-affine")


def strongly_monotone_affine(rng, dim=None, mu=None) -> ProblemInstance:
    """``F(u) = A(u - u*)`` with symmetric part at least ``mu I``."""
    rng = _rng(rng)
    dim = int(rng.integers(2, 7)) if dim is None else dim
    mu = float(rng.uniform(0.1, 1.0)) if mu is None else mu
    A = mu * np.eye(dim) + psd_matrix(rng, dim, 0.0, float(rng.uniform(0.0, 2.0))) \
        + skew_matrix(rng, dim, float(rng.uniform(0.0, 3.0)))
    u_star = rng.standard_normal(dim)
    u0 = u_star + _unit(rng, dim)
    F = affine_operator(A, -A @ u_star, description="strongly monotone affine")
    return ProblemInstance(F, WholeSpace(dim), u0, u_star, "strongly-monotone-affine")


def rotation_instance(dim=1) -> ProblemInstance:
    """Bilinear saddle ``<x, y>`` on ``R^{2 dim}`` from the all-ones point."""
    F = bilinear_saddle(dim)
    n = 2 * dim
    return ProblemInstance(F, WholeSpace(n), np.ones(n), np.zeros(n), "bilinear-saddle")


def box_identity(rng, dim=None, distance=0.05) -> ProblemInstance:
    """``F(u) = u`` on a box not containing 0, so ``u*`` is the projection of 0.

    The box is ``[c, c + w]`` with ``c > 0`` in at least one coordinate and
    ``u0`` lies within `distance` of ``u*``.
    """
    rng = _rng(rng)
    dim = int(rng.integers(2, 6)) if dim is None else dim
    lower = rng.uniform(-1.0, 1.0, dim)
    lower[0] = abs(lower[0]) + 0.5
    upper = lower + rng.uniform(0.5, 2.0, dim)
    S = Box(lower, upper)
    u_star = S.project(np.zeros(dim))
    u0 = S.project(u_star + distance * _unit(rng, dim))
    return ProblemInstance(identity_operator(dim), S, u0, u_star, "box-identity")


def constrained_cocoercive(rng, kind="box", dim=None) -> ProblemInstance:
    """Symmetric PSD affine operator restricted to a box or ball containing ``u0``."""
    rng = _rng(rng)
    dim = int(rng.integers(2, 7)) if dim is None else dim
    A = psd_matrix(rng, dim, 0.0, float(rng.uniform(0.5, 4.0)))
    F = affine_operator(A, rng.standard_normal(dim), description="cocoercive affine")
    c = rng.standard_normal(dim)
    if kind == "box":
        S = Box(c - rng.uniform(0.2, 1.5, dim), c + rng.uniform(0.2, 1.5, dim))
    elif kind == "ball":
        S = Ball(c, float(rng.uniform(0.5, 2.0)))
    else:
        raise ValueError(f"unknown set kind {kind!r}")
    return ProblemInstance(F, S, S.project(c + rng.standard_normal(dim)), None,
                           f"{kind}-cocoercive")


def regularized_saddle(mu: float, dim=1) -> ProblemInstance:
    """``(y, -x) + mu u`` on ``R^{2 dim}``; solution 0, start at all ones."""
    n = 2 * dim
    F = regularize(bilinear_saddle(dim), mu, np.zeros(n))
    return ProblemInstance(F, WholeSpace(n), np.ones(n), np.zeros(n), f"regularized-saddle-{mu:g}")


def random_pairs(rng, feasible_set, dim, n=1000, spread=3.0):
    """`n` pairs of points projected onto `feasible_set`."""
    rng = _rng(rng)
    out = []
    for _ in range(n):
        u = feasible_set.project(spread * rng.standard_normal(dim))
        v = feasible_set.project(spread * rng.standard_normal(dim))
        out.append((u, v))
    return out
