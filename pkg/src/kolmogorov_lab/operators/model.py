"""Coefficient fields of nonautonomous Kolmogorov operators.

A field bundles the diffusion matrix ``Q(t, x)`` and drift ``F(t, x)`` of

    A(t) phi = sum_ij q_ij D_ij phi + F . grad phi

All callables are vectorized: ``x`` has shape ``(..., d)``, ``Q`` returns
``(..., d, d)``, ``F`` returns ``(..., d)`` and the optional spatial derivative
``dQ`` returns ``(..., d, d, d)`` with ``[..., i, j, k] = d q_ij / d x_k``.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from kolmogorov_lab.errors import CoefficientEvaluationError, ParameterDomainError

MatrixFn = Callable[[float, np.ndarray], np.ndarray]
VectorFn = Callable[[float, np.ndarray], np.ndarray]
ScalarFn = Callable[[float, np.ndarray], np.ndarray]

_SYMMETRY_TOL = 1e-12


def constant_b(value: float) -> ScalarFn:
    """Coercivity function ``b`` that does not depend on ``(t, x)``."""

    def b(t: float, x: np.ndarray) -> np.ndarray:
        return np.full(np.shape(x)[:-1], float(value))

    b.constant = float(value)  # type: ignore[attr-defined]
    return b


def constant_matrix(matrix: np.ndarray | float, d: int | None = None) -> MatrixFn:
    mat = np.atleast_2d(np.asarray(matrix, dtype=float))
    if d is not None and mat.shape == (1, 1) and d > 1:
        mat = mat[0, 0] * np.eye(d)

    def q(t: float, x: np.ndarray) -> np.ndarray:
        return np.broadcast_to(mat, np.shape(x)[:-1] + mat.shape).copy()

    return q


@dataclass(frozen=True, slots=True)
class GrowthParams:
    m: float
    p: float
    Lambda: float
    kappa: float
    K: float
    b: ScalarFn = field(default_factory=lambda: constant_b(1.0))

    def __post_init__(self) -> None:
        if self.m < 0:
            raise ParameterDomainError(f"m must be >= 0, got {self.m}")
        if not self.p > max(self.m - 1.0, 1.0):
            raise ParameterDomainError(
                f"p must exceed max(m-1, 1) = {max(self.m - 1.0, 1.0)}, got {self.p}"
            )
        if self.Lambda <= 0:
            raise ParameterDomainError(f"Lambda must be > 0, got {self.Lambda}")
        if self.kappa <= 0:
            raise ParameterDomainError(f"kappa must be > 0, got {self.kappa}")
        if self.K < 1:
            raise ParameterDomainError(f"K must be >= 1, got {self.K}")

    @property
    def beta(self) -> float:
        return self.p + 1.0 - self.m

    @property
    def alpha_threshold(self) -> float:
        return (self.p + 1.0 - self.m) / (self.p - 1.0)

    def describe(self) -> dict[str, Any]:
        return {
            "m": self.m,
            "p": self.p,
            "Lambda": self.Lambda,
            "kappa": self.kappa,
            "K": self.K,
            "beta": self.beta,
            "b_constant": getattr(self.b, "constant", None),
        }


@dataclass(frozen=True, slots=True)
class CoefficientField:
    d: int
    diffusion: MatrixFn
    drift: VectorFn
    eta: float
    diffusion_grad: Callable[[float, np.ndarray], np.ndarray] | None = None
    name: str = "custom"
    autonomous: bool = False
    params: GrowthParams | None = None

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ParameterDomainError(f"dimension must be positive, got {self.d}")
        if self.eta <= 0:
            raise ParameterDomainError(f"eta must be > 0, got {self.eta}")

    def q(self, t: float, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.diffusion(t, np.asarray(x, dtype=float)), dtype=float)

    def f(self, t: float, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.drift(t, np.asarray(x, dtype=float)), dtype=float)

    def describe(self) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "name": self.name,
            "d": self.d,
            "eta": self.eta,
            "autonomous": self.autonomous,
            "analytic_dq": self.diffusion_grad is not None,
        }
        if self.params is not None:
            payload["params"] = self.params.describe()
        return payload


def _radial_power(r: np.ndarray, power: float) -> np.ndarray:
    """``r**power`` with the value 0 wherever ``r == 0``."""
    out = np.zeros_like(r)
    np.power(r, power, out=out, where=r > 0)
    return out


def growth_factor(r: np.ndarray, m: float) -> np.ndarray:
    """``1 + |x|^m`` for m > 0; m = 0 is the bounded case ``Q = Q0``."""
    if m == 0:
        return np.ones_like(r)
    return 1.0 + r**m


def make_example54(
    d: int,
    params: GrowthParams,
    q0: np.ndarray | float | MatrixFn | None = None,
    *,
    q0_grad: Callable[[float, np.ndarray], np.ndarray] | None = None,
    eta: float | None = None,
) -> CoefficientField:
    """Build ``Q = (1+|x|^m) Q0`` and ``F = -b |x|^(p-1) x``.

    With m = 0 the diffusion is ``Q0`` itself, so Q0 = I and b = 1 give
    ``Delta - |x|^(p-1) x . grad``.

    ``q0`` may be a constant symmetric matrix (default identity) or a callable;
    for callables ``eta`` must be supplied. ``dQ`` is analytic whenever Q0 is
    constant or ``q0_grad`` is given.
    """
    m, p = params.m, params.p
    if q0 is None:
        q0 = np.eye(d)
    if callable(q0):
        q0_fn: MatrixFn = q0
        if eta is None:
            raise ParameterDomainError("eta must be declared for a non-constant Q0")
        q0_grad_fn = q0_grad
        constant_q0 = False
    else:
        mat = np.atleast_2d(np.asarray(q0, dtype=float))
        if mat.shape == (1, 1) and d > 1:
            mat = mat[0, 0] * np.eye(d)
        if mat.shape != (d, d):
            raise ParameterDomainError(f"Q0 must be {d}x{d}, got {mat.shape}")
        if not np.allclose(mat, mat.T, atol=_SYMMETRY_TOL):
            raise ParameterDomainError("Q0 must be symmetric")
        q0_fn = constant_matrix(mat)
        q0_grad_fn = None
        constant_q0 = True
        if eta is None:
            eta = float(np.linalg.eigvalsh(mat).min())
    if eta is None or eta <= 0:
        raise ParameterDomainError("Q0 must be positive definite")

    b = params.b

    def diffusion(t: float, x: np.ndarray) -> np.ndarray:
        r = np.linalg.norm(x, axis=-1)
        scale = growth_factor(r, m)
        return scale[..., None, None] * q0_fn(t, x)

    def drift(t: float, x: np.ndarray) -> np.ndarray:
        r = np.linalg.norm(x, axis=-1)
        return (-b(t, x) * r ** (p - 1.0))[..., None] * x

    def diffusion_grad(t: float, x: np.ndarray) -> np.ndarray:
        r = np.linalg.norm(x, axis=-1)
        # d(|x|^m)/dx_k = m |x|^(m-2) x_k, set to 0 at the origin
        radial = (m * _radial_power(r, m - 2.0))[..., None] * x
        base = q0_fn(t, x)
        out = base[..., :, :, None] * radial[..., None, None, :]
        if q0_grad_fn is not None:
            out = out + growth_factor(r, m)[..., None, None, None] * q0_grad_fn(t, x)
        return out

    analytic = constant_q0 or q0_grad_fn is not None
    return CoefficientField(
        d=d,
        diffusion=diffusion,
        drift=drift,
        eta=float(eta),
        diffusion_grad=diffusion_grad if analytic else None,
        name="example54",
        autonomous=constant_q0 and hasattr(b, "constant"),
        params=params,
    )


def brownian_field(d: int = 1, q: float = 0.5) -> CoefficientField:
    """Zero drift with ``Q = q I``; ``q = 1/2`` is standard Brownian motion."""

    def drift(t: float, x: np.ndarray) -> np.ndarray:
        return np.zeros_like(np.asarray(x, dtype=float))

    def diffusion_grad(t: float, x: np.ndarray) -> np.ndarray:
        return np.zeros(np.shape(x)[:-1] + (d, d, d))

    return CoefficientField(
        d=d,
        diffusion=constant_matrix(q * np.eye(d)),
        drift=drift,
        eta=float(q),
        diffusion_grad=diffusion_grad,
        name="brownian",
        autonomous=True,
    )


def ou_field(d: int = 1, theta: float = 1.0, q: float = 1.0) -> CoefficientField:
    """Ornstein-Uhlenbeck field ``F = -theta x``, ``Q = q I``."""

    def drift(t: float, x: np.ndarray) -> np.ndarray:
        return -theta * np.asarray(x, dtype=float)

    def diffusion_grad(t: float, x: np.ndarray) -> np.ndarray:
        return np.zeros(np.shape(x)[:-1] + (d, d, d))

    return CoefficientField(
        d=d,
        diffusion=constant_matrix(q * np.eye(d)),
        drift=drift,
        eta=float(q),
        diffusion_grad=diffusion_grad,
        name="ornstein_uhlenbeck",
        autonomous=True,
    )


def _ensure_finite(values: np.ndarray, what: str, t: float, x: np.ndarray) -> None:
    if np.all(np.isfinite(values)):
        return
    batch = x.shape[:-1]
    finite = np.isfinite(values.reshape(batch + (-1,))).all(axis=-1)
    where = np.argwhere(~finite)
    point = x[tuple(where[0])] if where.size else x
    raise CoefficientEvaluationError(f"non-finite {what}", t=t, x=np.asarray(point).tolist())


def eval_coefficients(field: CoefficientField, t: float, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(Q(t, x), F(t, x))`` checked for finiteness and symmetry."""
    pts = np.asarray(x, dtype=float)
    if pts.ndim == 0:
        pts = pts.reshape(1)
    q = field.q(t, pts)
    f = field.f(t, pts)
    _ensure_finite(q, "diffusion", t, pts)
    _ensure_finite(f, "drift", t, pts)
    asym = np.max(np.abs(q - np.swapaxes(q, -1, -2)), initial=0.0)
    scale = np.max(np.abs(q), initial=0.0)
    if asym > _SYMMETRY_TOL * max(scale, 1.0):
        raise CoefficientEvaluationError("diffusion matrix is not symmetric", t=t, x=pts.tolist())
    return q, f


def fd_step(x: np.ndarray) -> np.ndarray:
    """Central-difference step ``max(1e-5, 1e-5 |x|)`` per point."""
    return np.maximum(1e-5, 1e-5 * np.linalg.norm(x, axis=-1))


def diffusion_jacobian(field: CoefficientField, t: float, x: np.ndarray) -> np.ndarray:
    """``d q_ij / d x_k`` as ``(..., d, d, d)``; analytic when available."""
    pts = np.asarray(x, dtype=float)
    if field.diffusion_grad is not None:
        out = np.asarray(field.diffusion_grad(t, pts), dtype=float)
    else:
        h = fd_step(pts)
        parts = []
        for k in range(field.d):
            shift = np.zeros_like(pts)
            shift[..., k] = h
            diff = field.q(t, pts + shift) - field.q(t, pts - shift)
            parts.append(diff / (2.0 * h)[..., None, None])
        out = np.stack(parts, axis=-1)
    _ensure_finite(out, "diffusion derivative", t, pts)
    return out


def spatial_divergence(field: CoefficientField, t: float, x: np.ndarray, j: int) -> np.ndarray:
    """``sum_i d q_ij / d x_i`` (``j`` is 0-based)."""
    jac = diffusion_jacobian(field, t, x)
    return np.einsum("...ii->...", jac[..., :, j, :])


def divergence_vector(field: CoefficientField, t: float, x: np.ndarray) -> np.ndarray:
    """All components ``j`` of ``sum_i d q_ij / d x_i``, shape ``(..., d)``."""
    jac = diffusion_jacobian(field, t, x)
    return np.einsum("...iji->...j", jac)
