"""Closed convex feasible sets with exact Euclidean projections."""

from __future__ import annotations

import math

import numpy as np

from .core import OracleCounter, as_vector, norm


def project_box(lower, upper, u) -> np.ndarray:
    lower = np.asarray(lower, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    if np.any(lower > upper):
        raise ValueError("box has crossed bounds (lower > upper)")
    return np.clip(np.asarray(u, dtype=np.float64), lower, upper)


def project_ball(center, radius: float, u) -> np.ndarray:
    if not radius > 0:
        raise ValueError("radius must be positive")
    center = np.asarray(center, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    d = u - center
    dn = norm(d)
    if dn <= radius:
        return u.copy()
    return center + d * (radius / dn)


def project_simplex(u) -> np.ndarray:
    """Projection onto ``{v >= 0, sum(v) = 1}`` by sorting and thresholding."""
    u = np.asarray(u, dtype=np.float64)
    if u.ndim != 1 or u.size == 0:
        raise ValueError("project_simplex expects a non-empty vector")
    s = np.sort(u)[::-1]
    css = np.cumsum(s) - 1.0
    idx = np.arange(1, u.size + 1)
    rho = np.nonzero(s - css / idx > 0)[0][-1]
    tau = css[rho] / (rho + 1.0)
    return np.maximum(u - tau, 0.0)


class FeasibleSet:
    """Base class: subclasses implement :meth:`project`."""

    diameter: float = math.inf
    description: str = ""
    is_whole_space: bool = False

    def project(self, u) -> np.ndarray:
        raise NotImplementedError

    def contains(self, u, tol: float = 1e-9) -> bool:
        u = np.asarray(u, dtype=np.float64)
        return norm(u - self.project(u)) <= tol

    def __repr__(self):
        return f"<{type(self).__name__} {self.description}>"


class WholeSpace(FeasibleSet):
    is_whole_space = True

    def __init__(self, dim: int):
        self.dim = dim
        self.description = f"R^{dim}"

    def project(self, u):
        return np.array(u, dtype=np.float64)

    def contains(self, u, tol=1e-9):
        return True


class Box(FeasibleSet):
    def __init__(self, lower, upper):
        self.lower = as_vector(lower, "lower")
        self.upper = as_vector(upper, "upper") if np.ndim(upper) else np.full_like(self.lower, upper)
        if self.lower.shape != self.upper.shape:
            raise ValueError("box bounds have different dimensions")
        if np.any(self.lower > self.upper):
            raise ValueError("box has crossed bounds (lower > upper)")
        self.dim = self.lower.size
        self.diameter = norm(self.upper - self.lower)
        self.description = f"box in R^{self.dim}"

    def project(self, u):
        return np.clip(np.asarray(u, dtype=np.float64), self.lower, self.upper)


class Orthant(Box):
    """Shifted nonnegative orthant ``[lower, inf)^d``."""

    def __init__(self, lower):
        lower = as_vector(lower, "lower")
        self.lower = lower
        self.upper = np.full_like(lower, np.inf)
        self.dim = lower.size
        self.diameter = math.inf
        self.description = f"orthant in R^{self.dim}"


class Ball(FeasibleSet):
    def __init__(self, center, radius: float):
        if not radius > 0:
            raise ValueError("radius must be positive")
        self.center = as_vector(center, "center")
        self.radius = float(radius)
        self.dim = self.center.size
        self.diameter = 2.0 * self.radius
        self.description = f"ball of radius {self.radius:g} in R^{self.dim}"

    def project(self, u):
        return project_ball(self.center, self.radius, u)


class Simplex(FeasibleSet):
    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("simplex dimension must be >= 1")
        self.dim = dim
        self.diameter = math.sqrt(2.0) if dim > 1 else 0.0
        self.description = f"probability simplex in R^{dim}"

    def project(self, u):
        return project_simplex(u)


def mapping_step(feasible_set, eta: float, u, Fu, counter: OracleCounter):
    """Return ``(G_eta(u), proj(u - Fu/eta))`` given ``Fu = F(u)``; one projection is counted."""
    counter.projections += 1
    if feasible_set.is_whole_space:
        return np.array(Fu, dtype=np.float64), u - Fu / eta
    ubar = feasible_set.project(u - Fu / eta)
    return eta * (u - ubar), ubar


def operator_mapping(F, feasible_set, eta: float, u, counter: OracleCounter | None = None,
                     Fu=None) -> np.ndarray:
    """``G_eta(u) = eta (u - proj(u - F(u)/eta))``.

    Counts one operator evaluation (skipped when `Fu` is given) and one
    projection on `counter`. On the whole space this returns ``F(u)`` exactly.
    """
    if not eta > 0:
        raise ValueError("eta must be positive")
    counter = OracleCounter() if counter is None else counter
    u = np.asarray(u, dtype=np.float64)
    if Fu is None:
        Fu = counter.evaluate(F, u)
    return mapping_step(feasible_set, eta, u, Fu, counter)[0]
