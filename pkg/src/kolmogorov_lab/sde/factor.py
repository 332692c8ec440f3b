"""Diffusion factors ``sigma`` with ``sigma sigma^T = 2 Q``."""

from __future__ import annotations

import numpy as np

from kolmogorov_lab.errors import FactorizationError


def _first_bad_minor(matrix: np.ndarray) -> int:
    for k in range(1, matrix.shape[-1] + 1):
        if np.linalg.det(matrix[:k, :k]) <= 0.0:
            return k
    return matrix.shape[-1]


def diffusion_factor(qmat: np.ndarray) -> np.ndarray:
    """Lower-triangular Cholesky factor of ``2 Q`` (batched over leading axes).

    The generator carries no 1/2 in front of ``sum q_ij D_ij``, hence the 2.
    """
    q = np.asarray(qmat, dtype=float)
    if q.shape[-1] == 1:
        if np.any(~(q > 0.0)):
            raise FactorizationError("diffusion matrix is not positive definite", leading_minor=1)
        return np.sqrt(2.0 * q)
    try:
        return np.linalg.cholesky(2.0 * q)
    except np.linalg.LinAlgError as exc:
        flat = q.reshape(-1, q.shape[-2], q.shape[-1])
        for item in flat:
            try:
                np.linalg.cholesky(item)
            except np.linalg.LinAlgError:
                minor = _first_bad_minor(item)
                raise FactorizationError(
                    f"diffusion matrix is not positive definite (leading minor {minor})",
                    leading_minor=minor,
                ) from exc
        raise FactorizationError("diffusion matrix is not positive definite") from exc
