"""Operator oracles and a small catalogue of monotone test operators.

Strong monotonicity is stored without the factor 1/2, i.e. ``mu`` satisfies
``<F(u) - F(v), u - v> >= mu * |u - v|^2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .core import as_vector, inner, norm, slack


@dataclass(frozen=True)
class OperatorMetadata:
    lipschitz_L: Optional[float] = None
    strong_mono_mu: Optional[float] = None
    cocoercivity_gamma: Optional[float] = None

    def __post_init__(self):
        L, mu, gamma = self.lipschitz_L, self.strong_mono_mu, self.cocoercivity_gamma
        if L is not None and L < 0:
            raise ValueError("Lipschitz constant must be nonnegative")
        if mu is not None and mu < 0:
            raise ValueError("strong monotonicity modulus must be nonnegative")
        if gamma is not None and gamma < 0:
            raise ValueError("cocoercivity modulus must be nonnegative")
        if gamma and L is not None and L * gamma > 1 + 1e-9:
            raise ValueError(f"L={L} exceeds 1/gamma={1 / gamma}")
        if mu is not None and L is not None and mu > L * (1 + 1e-9) + 1e-12:
            raise ValueError(f"mu={mu} exceeds L={L}")

    def merged(self, L=None, mu=None, gamma=None) -> "OperatorMetadata":
        """Return a copy with the given non-``None`` entries overridden."""
        return OperatorMetadata(
            self.lipschitz_L if L is None else float(L),
            self.strong_mono_mu if mu is None else float(mu),
            self.cocoercivity_gamma if gamma is None else float(gamma),
        )


@dataclass(frozen=True)
class Operator:
    """A single-valued operator ``u -> F(u)`` with optional constants.

    `matrix` and `offset` are kept for affine operators so exact resolvents
    can be formed in tests; they are ``None`` otherwise.
    """

    evaluate: Callable[[np.ndarray], np.ndarray]
    dim: int
    metadata: OperatorMetadata = field(default_factory=OperatorMetadata)
    description: str = ""
    matrix: Optional[np.ndarray] = field(default=None, repr=False, compare=False)
    offset: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __call__(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=np.float64)
        if u.shape != (self.dim,):
            raise ValueError(f"expected a vector of dimension {self.dim}, got {u.shape}")
        return self.evaluate(u)

    @property
    def is_affine(self) -> bool:
        return self.matrix is not None

    def with_metadata(self, **kwargs) -> "Operator":
        return replace(self, metadata=self.metadata.merged(**kwargs))


def _affine_constants(A: np.ndarray):
    L = float(np.linalg.norm(A, 2)) if A.size else 0.0
    sym = 0.5 * (A + A.T)
    mu = max(0.0, float(np.linalg.eigvalsh(sym).min())) if A.size else 0.0
    gamma = None
    if np.allclose(A, A.T, rtol=0, atol=1e-12 * (1 + np.abs(A).max(initial=0))):
        if float(np.linalg.eigvalsh(sym).min()) >= -1e-12 * (1 + L):
            # symmetric PSD: <Ax, x> >= |Ax|^2 / L
            gamma = np.inf if L == 0 else 1.0 / L
    return L, min(mu, L), gamma


def affine_operator(A, b=None, description: str = "affine") -> Operator:
    """``F(u) = A u + b`` with constants read off the spectrum of `A`.

    ``L`` is the largest singular value, ``mu`` the smallest eigenvalue of the
    symmetric part (clipped at 0), and ``gamma = 1/L`` when `A` is symmetric
    positive semidefinite.
    """
    A = np.array(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"A must be square, got shape {A.shape}")
    n = A.shape[0]
    b = np.zeros(n) if b is None else as_vector(b, "b")
    if b.shape != (n,):
        raise ValueError(f"b has dimension {b.shape[0]}, A has {n}")
    if not np.all(np.isfinite(A)):
        raise ValueError("A has non-finite entries")
    A.setflags(write=False)
    L, mu, gamma = _affine_constants(A)
    return Operator(
        evaluate=lambda u: A @ u + b,
        dim=n,
        metadata=OperatorMetadata(L, mu, gamma),
        description=description,
        matrix=A,
        offset=b,
    )


def zero_operator(dim: int) -> Operator:
    return affine_operator(np.zeros((dim, dim)), description="zero")


def identity_operator(dim: int) -> Operator:
    return affine_operator(np.eye(dim), description="identity")


def saddle_operator(grad_x, grad_y, dim_x: int, dim_y: int,
                    lipschitz_L: Optional[float] = None,
                    description: str = "saddle") -> Operator:
    """Monotone operator ``(x, y) -> (grad_x Phi, -grad_y Phi)`` of a convex-concave ``Phi``.

    `grad_x` and `grad_y` take ``(x, y)`` and return the partial gradients.
    """

    def evaluate(u):
        x, y = u[:dim_x], u[dim_x:]
        gx = np.asarray(grad_x(x, y), dtype=np.float64)
        gy = np.asarray(grad_y(x, y), dtype=np.float64)
        if gx.shape != (dim_x,) or gy.shape != (dim_y,):
            raise ValueError(
                f"gradient blocks have shapes {gx.shape}, {gy.shape}; "
                f"expected ({dim_x},), ({dim_y},)"
            )
        return np.concatenate([gx, -gy])

    return Operator(evaluate, dim_x + dim_y, OperatorMetadata(lipschitz_L), description)


def quadratic_saddle(Q=None, B=None, R=None, bx=None, by=None,
                     dim_x: Optional[int] = None, dim_y: Optional[int] = None) -> Operator:
    """Affine operator of ``Phi = x'Qx/2 + x'By - y'Ry/2 + bx'x - by'y``.

    The resulting matrix is ``[[Q, B], [-B', R]]`` and the offset ``(bx, by)``.
    Missing blocks default to zero; `B` defaults to the identity when the two
    dimensions agree.
    """
    if B is not None:
        B = np.atleast_2d(np.asarray(B, dtype=np.float64))
        dim_x, dim_y = B.shape
    if dim_x is None:
        dim_x = np.shape(Q)[0] if Q is not None else None
    if dim_y is None:
        dim_y = np.shape(R)[0] if R is not None else dim_x
    if dim_x is None:
        raise ValueError("cannot infer block dimensions")
    if B is None:
        if dim_x != dim_y:
            raise ValueError("B is required when the block dimensions differ")
        B = np.eye(dim_x)
    Q = np.zeros((dim_x, dim_x)) if Q is None else np.asarray(Q, dtype=np.float64)
    R = np.zeros((dim_y, dim_y)) if R is None else np.asarray(R, dtype=np.float64)
    if Q.shape != (dim_x, dim_x) or R.shape != (dim_y, dim_y):
        raise ValueError("block dimension mismatch between Q, B and R")
    bx = np.zeros(dim_x) if bx is None else np.asarray(bx, dtype=np.float64)
    by = np.zeros(dim_y) if by is None else np.asarray(by, dtype=np.float64)
    if bx.shape != (dim_x,) or by.shape != (dim_y,):
        raise ValueError("block dimension mismatch in linear terms")
    M = np.block([[Q, B], [-B.T, R]])
    return affine_operator(M, np.concatenate([bx, by]), description="saddle-quadratic")


def bilinear_saddle(dim: int) -> Operator:
    """Operator of ``Phi(x, y) = <x, y>``: ``F(x, y) = (y, -x)``."""
    return quadratic_saddle(B=np.eye(dim))


def regularize(F: Operator, mu: float, anchor) -> Operator:
    """``u -> F(u) + mu (u - anchor)``; adds `mu` to both ``L`` and the monotonicity modulus."""
    if not mu > 0:
        raise ValueError("mu must be positive")
    anchor = as_vector(anchor, "anchor")
    if anchor.shape != (F.dim,):
        raise ValueError(f"anchor has dimension {anchor.shape[0]}, operator has {F.dim}")
    md = F.metadata
    meta = OperatorMetadata(
        None if md.lipschitz_L is None else md.lipschitz_L + mu,
        None if md.strong_mono_mu is None else md.strong_mono_mu + mu,
        None,
    )
    matrix = offset = None
    if F.is_affine:
        matrix = F.matrix + mu * np.eye(F.dim)
        offset = F.offset - mu * anchor
    base = F.evaluate
    return Operator(
        evaluate=lambda u: base(u) + mu * (u - anchor),
        dim=F.dim,
        metadata=meta,
        description=f"{F.description} + {mu:g}(u - anchor)",
        matrix=matrix,
        offset=offset,
    )


def resolvent_target_operator(F: Operator, u_anchor) -> Operator:
    """``u -> F(u) + u - u_anchor``, whose variational-inequality solution is the resolvent at `u_anchor`."""
    G = regularize(F, 1.0, u_anchor)
    md = F.metadata
    # F monotone => F + Id is 1-strongly monotone even if mu was unknown
    mu = 1.0 + (md.strong_mono_mu or 0.0)
    return replace(G, metadata=replace(G.metadata, strong_mono_mu=mu),
                   description=f"resolvent target of {F.description}")


def scale(F: Operator, factor: float) -> Operator:
    """``u -> factor * F(u)`` for ``factor > 0``."""
    if not factor > 0:
        raise ValueError("factor must be positive")
    md = F.metadata
    meta = OperatorMetadata(
        None if md.lipschitz_L is None else factor * md.lipschitz_L,
        None if md.strong_mono_mu is None else factor * md.strong_mono_mu,
        None if md.cocoercivity_gamma is None else md.cocoercivity_gamma / factor,
    )
    base = F.evaluate
    return Operator(
        evaluate=lambda u: factor * base(u),
        dim=F.dim,
        metadata=meta,
        description=f"{factor:g} * {F.description}",
        matrix=None if F.matrix is None else factor * F.matrix,
        offset=None if F.offset is None else factor * F.offset,
    )


def verify_cocoercive(F, gamma: float, u, v) -> bool:
    """Check ``<F(u) - F(v), u - v> >= gamma |F(u) - F(v)|^2`` at one pair."""
    dF = np.asarray(F(u)) - np.asarray(F(v))
    lhs = inner(dF, np.asarray(u) - np.asarray(v))
    rhs = gamma * norm(dF) ** 2
    return lhs >= rhs - slack(lhs, rhs)
