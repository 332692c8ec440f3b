"""Explicit conservative finite differences for the forward (Fokker-Planck) equation

    d_tau rho = sum_ij D_ij (q_ij rho) - div(F rho)

on a box in d = 1 or 2. Drift fluxes are centred where the cell Peclet number
allows it and upwinded elsewhere, so the update matrix ``I + dt L`` has no
negative entries at admissible ``dt``.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy import sparse

from kolmogorov_lab.config.logging import get_logger
from kolmogorov_lab.density.field import DensityField, SpatialGrid
from kolmogorov_lab.errors import ConfigurationError, InputError, ParameterDomainError
from kolmogorov_lab.operators.model import CoefficientField

BOUNDARIES = ("absorbing", "reflecting")
MOLLIFIER_CELLS = 2.0
MARGIN_MOLLIFIERS = 6.0


@dataclass(frozen=True, slots=True)
class ForwardOperator:
    """``d rho / d tau = L rho`` on the flattened node vector."""

    matrix: sparse.csr_matrix
    active: np.ndarray
    upwind_faces: int
    total_faces: int

    @property
    def max_rate(self) -> float:
        diag = self.matrix.diagonal()[self.active]
        return float(max(0.0, np.max(-diag))) if diag.size else 0.0

    @property
    def admissible_dt(self) -> float:
        rate = self.max_rate
        return float("inf") if rate == 0.0 else 1.0 / rate


def _pinned_mask(grid: SpatialGrid, boundary: str) -> np.ndarray:
    pinned = np.zeros(grid.shape, dtype=bool)
    if boundary == "absorbing":
        for k in range(grid.dim):
            edge = [slice(None)] * grid.dim
            edge[k] = 0
            pinned[tuple(edge)] = True
            edge[k] = -1
            pinned[tuple(edge)] = True
    return pinned.reshape(-1)


def _axis_weights(grid: SpatialGrid, axis: int) -> np.ndarray:
    """Control-volume length along ``axis`` of every node (half cells at the ends)."""
    h = grid.spacing[axis]
    w = np.full(grid.shape[axis], h)
    w[0] *= 0.5
    w[-1] *= 0.5
    shape = [1] * grid.dim
    shape[axis] = w.size
    return np.broadcast_to(w.reshape(shape), grid.shape).reshape(-1)


def build_forward_operator(field: CoefficientField, grid: SpatialGrid, t: float, boundary: str) -> ForwardOperator:
    d = grid.dim
    n = int(np.prod(grid.shape))
    idx = np.arange(n).reshape(grid.shape)
    pts = grid.points()
    q = field.q(t, pts)
    pinned = _pinned_mask(grid, boundary)
    h = grid.spacing
    cross_flux = np.zeros(n) if d == 1 else np.abs(q[:, 0, 1])

    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    vals: list[np.ndarray] = []

    def add(r: np.ndarray, c: np.ndarray, v: np.ndarray) -> None:
        keep = ~pinned[r] & ~pinned[c]
        rows.append(r[keep])
        cols.append(c[keep])
        vals.append(v[keep])

    upwind = 0
    faces = 0
    for a in range(d):
        lo = [slice(None)] * d
        hi = [slice(None)] * d
        lo[a] = slice(None, -1)
        hi[a] = slice(1, None)
        left = idx[tuple(lo)].reshape(-1)
        right = idx[tuple(hi)].reshape(-1)
        f_face = field.f(t, 0.5 * (pts[left] + pts[right]))[:, a]
        q_l = q[left, a, a] / h[a]
        q_r = q[right, a, a] / h[a]
        pen = np.zeros_like(q_l)
        if d == 2:
            other = h[1 - a]
            pen = np.maximum(cross_flux[left], cross_flux[right]) / other
        centred = 0.5 * np.abs(f_face) <= np.minimum(q_l, q_r) - pen
        theta = np.where(centred, 0.5, np.where(f_face > 0, 1.0, 0.0))
        upwind += int(np.count_nonzero(~centred))
        faces += int(centred.size)
        w = _axis_weights(grid, a)
        w_l = w[left]
        w_r = w[right]
        add(left, right, (q_r - f_face * (1.0 - theta)) / w_l)
        add(left, left, (-q_l - f_face * theta) / w_l)
        add(right, left, (q_l + f_face * theta) / w_r)
        add(right, right, (-q_r + f_face * (1.0 - theta)) / w_r)

    if d == 2:
        h0, h1 = h
        inner = idx[1:-1, 1:-1].reshape(-1)
        q12 = q[:, 0, 1]
        sign = np.sign(q12[inner])
        nz = sign != 0
        centre = inner[nz]
        sg = sign[nz]
        cell = h0 * h1
        add(centre, centre, 2.0 * sg * q12[centre] / cell)
        stride = grid.shape[1]
        for di, dj, kind in ((1, 0, -1.0), (-1, 0, -1.0), (0, 1, -1.0), (0, -1, -1.0)):
            nb = centre + di * stride + dj
            add(centre, nb, kind * sg * q12[nb] / cell)
        for di, dj in ((1, 1), (-1, -1)):
            nb_pos = centre + di * stride + dj
            nb_neg = centre + di * stride - dj
            nb = np.where(sg > 0, nb_pos, nb_neg)
            add(centre, nb, sg * q12[nb] / cell)

    matrix = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    ).tocsr()
    matrix.sum_duplicates()
    return ForwardOperator(matrix=matrix, active=~pinned, upwind_faces=upwind, total_faces=faces)


def _check_positivity(op: ForwardOperator) -> None:
    off = op.matrix.tocoo()
    mask = off.row != off.col
    if not np.any(mask):
        return
    scale = max(op.max_rate, 1.0)
    worst = float(np.min(off.data[mask]))
    if worst < -1e-12 * scale:
        raise ConfigurationError(
            "cross diffusion breaks positivity of the scheme: need q_11 h_2 >= |q_12| h_1 and "
            "q_22 h_1 >= |q_12| h_2 on the grid"
        )


def _update_matrix(op: ForwardOperator, dt: float) -> sparse.csr_matrix:
    admissible = op.admissible_dt
    if dt > admissible * (1.0 + 1e-12):
        raise ConfigurationError(
            f"time step {dt:.6g} exceeds the admissible step {admissible:.6g} of the explicit scheme",
            admissible_dt=admissible,
        )
    n = op.matrix.shape[0]
    update = (sparse.identity(n, format="csr") + dt * op.matrix).tocsr()
    # pinned nodes stay at zero
    keep = sparse.diags(op.active.astype(float))
    return (keep @ update).tocsr()


def initial_density(grid: SpatialGrid, x0: np.ndarray, boundary: str) -> np.ndarray:
    """Gaussian of width ``MOLLIFIER_CELLS`` cells per axis standing in for the point mass."""
    mesh = grid.mesh()
    widths = MOLLIFIER_CELLS * np.asarray(grid.spacing)
    z = (mesh - x0) / widths
    rho = np.exp(-0.5 * np.sum(z * z, axis=-1)).reshape(-1)
    rho[_pinned_mask(grid, boundary)] = 0.0
    rho = rho.reshape(grid.shape)
    return rho / float(np.sum(grid.weights() * rho))


def solve_fokker_planck(
    field: CoefficientField,
    s_start: float,
    t_end: float,
    x0: np.ndarray,
    box: Sequence[Sequence[float]],
    nx: int | Sequence[int],
    dt: float,
    boundary: str = "absorbing",
    *,
    store_times: Sequence[float] | None = None,
) -> DensityField:
    """March the density of ``X_tau`` started at ``(s_start, x0)`` up to ``t_end``.

    Slices are stored at ``store_times`` (default: ten equally spaced times in
    ``(s_start, t_end]``); each stored time is hit exactly.
    """
    logger = get_logger(__name__)
    if field.d not in (1, 2):
        raise ParameterDomainError(f"finite differences support d = 1 or 2, got d = {field.d}")
    if boundary not in BOUNDARIES:
        raise ParameterDomainError(f"unknown boundary {boundary!r}; expected one of {BOUNDARIES}")
    if not 0.0 <= s_start < t_end <= 1.0:
        raise ParameterDomainError(f"need 0 <= s < t <= 1, got s={s_start}, t={t_end}")
    if not dt > 0:
        raise ParameterDomainError("time step must be > 0")
    if len(box) != field.d:
        raise InputError(f"box has {len(box)} sides for a {field.d}-dimensional field")
    grid = SpatialGrid.build(box, nx)
    start = np.asarray(x0, dtype=float).reshape(field.d)
    margin = MARGIN_MOLLIFIERS * MOLLIFIER_CELLS * max(grid.spacing)
    if not grid.contains(start, margin=margin):
        raise InputError(f"start point {start.tolist()} is not inside the box with margin {margin:g}")

    if store_times is None:
        targets = np.linspace(s_start, t_end, 11)[1:]
    else:
        targets = np.unique(np.asarray(store_times, dtype=float))
        if targets.size == 0 or targets[0] <= s_start or targets[-1] > t_end + 1e-12:
            raise InputError("store times must lie in (s, t]")

    rho = initial_density(grid, start, boundary).reshape(-1)
    weights = grid.weights().reshape(-1)
    mass = float(weights @ rho)
    leaked = 0.0
    slices = []
    leak_record = []
    steps = 0
    upwind = 0
    admissible = float("inf")
    cached: sparse.csr_matrix | None = None
    cached_step = -1.0
    tau = s_start
    for target in targets:
        length = float(target) - tau
        n_steps = max(1, int(np.ceil(length / dt - 1e-9)))
        step = length / n_steps
        for k in range(n_steps):
            if field.autonomous and cached is not None and cached_step == step:
                update = cached
            else:
                op = build_forward_operator(field, grid, tau + k * step, boundary)
                _check_positivity(op)
                admissible = min(admissible, op.admissible_dt)
                upwind = max(upwind, op.upwind_faces)
                update = _update_matrix(op, step)
                cached, cached_step = update, step
            rho = update @ rho
            new_mass = float(weights @ rho)
            leaked += mass - new_mass
            mass = new_mass
        steps += n_steps
        tau = float(target)
        slices.append(rho.reshape(grid.shape).copy())
        leak_record.append(max(leaked, 0.0))

    density = DensityField(
        times=targets,
        grid=grid,
        values=np.stack(slices, axis=0),
        provenance="fd",
        horizon=float(t_end),
        x0=start,
        field_name=field.name,
        time_role="forward",
        start=float(s_start),
        leakage=np.asarray(leak_record),
        meta={
            "boundary": boundary,
            "dt": dt,
            "admissible_dt": admissible,
            "steps": steps,
            "upwind_faces": upwind,
        },
    )
    logger.info(
        "fd_solve_complete",
        extra={
            "field": field.name,
            "s": s_start,
            "t": t_end,
            "grid": list(grid.shape),
            "steps": steps,
            "leakage": float(leak_record[-1]),
            "boundary": boundary,
        },
    )
    return density


def start_time_family(
    field: CoefficientField,
    starts: Sequence[float],
    t: float,
    x0: np.ndarray,
    box: Sequence[Sequence[float]],
    nx: int | Sequence[int],
    dt: float,
    boundary: str = "absorbing",
) -> DensityField:
    """Densities of ``X_t`` started at ``(s, x0)`` for every ``s`` in ``starts``.

    Autonomous fields need one forward solve over the gaps ``t - s``;
    otherwise each start gets its own solve.
    """
    s_arr = np.unique(np.asarray(starts, dtype=float))
    if s_arr.size == 0 or s_arr[-1] >= t or s_arr[0] < 0:
        raise ParameterDomainError("start times must lie in [0, t)")
    meta: dict[str, Any]
    if field.autonomous:
        gaps = t - s_arr[::-1]
        forward = solve_fokker_planck(field, 0.0, float(gaps[-1]), x0, box, nx, dt, boundary, store_times=gaps)
        values = forward.values[::-1]
        leakage = np.asarray(forward.leakage)[::-1]
        grid = forward.grid
        meta = {**forward.meta, "solves": 1}
    else:
        solves = [
            solve_fokker_planck(field, float(s), t, x0, box, nx, dt, boundary, store_times=[t]) for s in s_arr
        ]
        values = np.stack([sol.values[-1] for sol in solves], axis=0)
        leakage = np.asarray([float(np.asarray(sol.leakage)[-1]) for sol in solves])
        grid = solves[0].grid
        meta = {**solves[0].meta, "solves": len(solves)}
    return DensityField(
        times=s_arr,
        grid=grid,
        values=np.ascontiguousarray(values),
        provenance="fd",
        horizon=float(t),
        x0=np.asarray(x0, dtype=float).reshape(field.d),
        field_name=field.name,
        time_role="start",
        leakage=np.ascontiguousarray(leakage),
        meta=meta,
    )


def lyapunov_box_radius(delta0: float, alpha: float, beta: float, gap: float, level: float = 30.0) -> float:
    """Smallest ``R`` with ``delta0 gap^alpha R^beta >= level``."""
    if delta0 <= 0 or gap <= 0 or beta <= 0:
        raise ParameterDomainError("delta0, gap and beta must be > 0")
    return float((level / (delta0 * gap**alpha)) ** (1.0 / beta))
