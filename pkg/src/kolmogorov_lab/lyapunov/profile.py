"""Radial profile |x|^beta with an even quartic core on the unit ball."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from kolmogorov_lab.errors import ParameterDomainError


@dataclass(frozen=True, slots=True)
class RadialProfile:
    beta: float
    a: float
    b_c: float
    c: float

    def value(self, x: np.ndarray) -> np.ndarray:
        r = np.linalg.norm(np.asarray(x, dtype=float), axis=-1)
        return self.value_r(r)

    def value_r(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        inner = self.a + self.b_c * r**2 + self.c * r**4
        outer = np.power(np.maximum(r, 1.0), self.beta)
        return np.where(r >= 1.0, outer, inner)

    def grad_coef(self, r: np.ndarray) -> np.ndarray:
        """``upsilon'(r) / r`` so that ``grad upsilon = grad_coef * x``."""
        r = np.asarray(r, dtype=float)
        inner = 2.0 * self.b_c + 4.0 * self.c * r**2
        outer = self.beta * np.power(np.maximum(r, 1.0), self.beta - 2.0)
        return np.where(r >= 1.0, outer, inner)

    def hess_coef(self, r: np.ndarray) -> np.ndarray:
        """``(upsilon'' - upsilon'/r) / r^2`` so that ``D^2 upsilon = grad_coef I + hess_coef x x^T``."""
        r = np.asarray(r, dtype=float)
        inner = np.full_like(r, 8.0 * self.c)
        outer = self.beta * (self.beta - 2.0) * np.power(np.maximum(r, 1.0), self.beta - 4.0)
        return np.where(r >= 1.0, outer, inner)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        return self.grad_coef(r)[..., None] * x

    def hessian(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        d = x.shape[-1]
        eye = np.eye(d)
        return (
            self.grad_coef(r)[..., None, None] * eye
            + self.hess_coef(r)[..., None, None] * x[..., :, None] * x[..., None, :]
        )

    def laplacian(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        return x.shape[-1] * self.grad_coef(r) + self.hess_coef(r) * r**2

    def core_minimum(self) -> float:
        candidates = [0.0, 1.0]
        if self.c != 0.0:
            r2 = -self.b_c / (2.0 * self.c)
            if 0.0 < r2 < 1.0:
                candidates.append(float(np.sqrt(r2)))
        return float(np.min(self.value_r(np.array(candidates))))


def smooth_radial_power(beta: float) -> RadialProfile:
    """Even quartic ``a + b_c r^2 + c r^4`` matched C^2 to ``r^beta`` at ``r = 1``."""
    if not beta > 0:
        raise ParameterDomainError(f"beta must be > 0, got {beta}")
    a = 1.0 - (6.0 * beta - beta**2) / 8.0
    b_c = beta * (4.0 - beta) / 4.0
    c = beta * (beta - 2.0) / 8.0
    profile = RadialProfile(beta=float(beta), a=a, b_c=b_c, c=c)
    if profile.core_minimum() < 0.0:
        raise ParameterDomainError(f"quartic core is negative for beta={beta}")
    return profile
