"""Periodic structured grids carrying a Riemannian metric, and the discrete
differential operators the flow is built on.

Field layout
------------
* scalar field:    ``(*sizes,)``
* ambient field:   ``(*sizes, L)``
* per-direction:   ``(m, *sizes)`` or ``(m, *sizes, L)``; entry ``i`` holds the
  derivative along axis ``i``.

Two first-derivative operators are provided.  :func:`gradient` returns centred
differences located at the nodes.  :func:`face_gradient` returns forward
differences located on the faces ``n + e_i/2``; this is what
:func:`div_weighted` and :func:`grad_inner` consume.  The squared gradient at a
node averages the two adjacent face values along each axis, so that
``div_weighted(w, face_gradient(u))`` is exactly the (negative) variational
derivative of ``integrate(G(grad_norm_sq(u)))`` and summation by parts holds to
round-off.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DomainGrid",
    "build_flat_torus",
    "build_conformal_torus",
    "build_grid",
    "coordinates",
    "gradient",
    "face_gradient",
    "grad_inner",
    "grad_norm_sq",
    "div_weighted",
    "integrate",
    "periodic_distance",
]


@dataclass
class DomainGrid:
    """Periodic grid on ``prod_i [0, period_i)`` with a node-wise metric."""

    sizes: tuple[int, ...]
    periods: tuple[float, ...]
    metric: np.ndarray
    ricci_lower_bound: float = 0.0
    metric_inverse: np.ndarray = field(init=False, repr=False)
    vol_density: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.sizes = tuple(int(n) for n in self.sizes)
        self.periods = tuple(float(p) for p in self.periods)
        m = len(self.sizes)
        if m not in (1, 2, 3):
            raise ValueError(f"spatial dimension must be 1, 2 or 3, got {m}")
        if len(self.periods) != m:
            raise ValueError("periods and sizes must have the same length")
        if min(self.sizes) < 4:
            raise ValueError("at least 4 nodes per axis are required")
        if min(self.periods) <= 0:
            raise ValueError("periods must be positive")
        if self.ricci_lower_bound < 0:
            raise ValueError("ricci_lower_bound is K1 >= 0 (Ric >= -K1)")
        metric = np.asarray(self.metric, dtype=float)
        if metric.shape != (*self.sizes, m, m):
            raise ValueError(f"metric must have shape {(*self.sizes, m, m)}, got {metric.shape}")
        if not np.allclose(metric, np.swapaxes(metric, -1, -2), rtol=0, atol=1e-14):
            raise ValueError("metric must be symmetric")
        eig = np.linalg.eigvalsh(metric)
        if not np.all(eig > 0):
            raise ValueError("metric must be positive definite at every node")
        self.metric = metric
        self.metric_inverse = np.linalg.inv(metric)
        self.vol_density = np.sqrt(np.linalg.det(metric))
        off = self.metric_inverse.copy()
        idx = np.arange(m)
        off[..., idx, idx] = 0.0
        self._diagonal = not np.any(off)
        self._flat = bool(np.all(metric == np.eye(m)))

    @property
    def m(self) -> int:
        return len(self.sizes)

    @property
    def spacings(self) -> tuple[float, ...]:
        return tuple(p / n for p, n in zip(self.periods, self.sizes))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacings))

    @property
    def is_diagonal(self) -> bool:
        return self._diagonal

    @property
    def is_flat(self) -> bool:
        return self._flat

    def volume(self) -> float:
        return integrate(np.ones(self.sizes), self)


def build_grid(metric: np.ndarray, periods, ricci_lower_bound: float) -> DomainGrid:
    metric = np.asarray(metric, dtype=float)
    m = metric.shape[-1]
    return DomainGrid(metric.shape[:m], tuple(periods), metric, ricci_lower_bound)


def build_flat_torus(m: int, n: int, period: float = 2 * np.pi) -> DomainGrid:
    """Flat torus ``(R / period Z)^m`` sampled with ``n`` nodes per axis."""
    if m not in (1, 2, 3):
        raise ValueError(f"m must be 1, 2 or 3, got {m}")
    if n < 4:
        raise ValueError(f"n must be at least 4, got {n}")
    sizes = (n,) * m
    metric = np.broadcast_to(np.eye(m), (*sizes, m, m)).copy()
    return DomainGrid(sizes, (period,) * m, metric, 0.0)


def build_conformal_torus(
    m: int, n: int, period: float, amplitude: float, ricci_lower_bound: float
) -> DomainGrid:
    """Torus with metric ``exp(2 psi) delta``, ``psi = amplitude * sum_i cos(2 pi x_i / period)``.

    ``ricci_lower_bound`` is metadata supplied by the caller; it is not derived
    from the metric.
    """
    grid = build_flat_torus(m, n, period)
    xs = coordinates(grid)
    psi = amplitude * sum(np.cos(2 * np.pi * x / period) for x in xs)
    metric = np.exp(2 * psi)[..., None, None] * np.eye(m)
    return DomainGrid(grid.sizes, grid.periods, metric, ricci_lower_bound)


def coordinates(grid: DomainGrid) -> tuple[np.ndarray, ...]:
    axes = [np.arange(n) * h for n, h in zip(grid.sizes, grid.spacings)]
    return tuple(np.meshgrid(*axes, indexing="ij"))


def periodic_distance(grid: DomainGrid, x0) -> np.ndarray:
    """Flat-torus distance from every node to the point ``x0``."""
    sq = np.zeros(grid.sizes)
    for x, c, L in zip(coordinates(grid), x0, grid.periods):
        d = np.abs(x - c) % L
        sq += np.minimum(d, L - d) ** 2
    return np.sqrt(sq)


def _check_field(u: np.ndarray, grid: DomainGrid) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape[: grid.m] != grid.sizes:
        raise ValueError(f"field shape {u.shape} does not match grid {grid.sizes}")
    return u


def _expand(a: np.ndarray, ndim: int) -> np.ndarray:
    """Append trailing axes so a node array broadcasts against ``ndim`` dims."""
    return a.reshape(a.shape + (1,) * (ndim - a.ndim))


def gradient(u: np.ndarray, grid: DomainGrid) -> np.ndarray:
    """Centred second-order partials ``d_i u`` at the nodes."""
    u = _check_field(u, grid)
    return np.stack(
        [(np.roll(u, -1, axis=i) - np.roll(u, 1, axis=i)) / (2 * h) for i, h in enumerate(grid.spacings)]
    )


def face_gradient(u: np.ndarray, grid: DomainGrid) -> np.ndarray:
    """Forward differences; entry ``i`` at index ``n`` lives on face ``n + e_i/2``."""
    u = _check_field(u, grid)
    return np.stack([(np.roll(u, -1, axis=i) - u) / h for i, h in enumerate(grid.spacings)])


def grad_inner(
    v: np.ndarray, w: np.ndarray, grid: DomainGrid, mat: np.ndarray | None = None
) -> np.ndarray:
    """Node field ``g^{ij} <v_i, w_j>`` for face-located partials ``v, w``.

    Diagonal terms average the two faces adjacent to a node along axis ``i``;
    off-diagonal terms use face averages (centred partials).  ``mat`` is an
    optional node-wise ``(L, L)`` matrix inserted as ``<mat v_i, w_j>``.
    """
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    m = grid.m
    ambient = v.ndim == m + 2
    ginv = grid.metric_inverse

    def dot(a, b):
        if mat is not None:
            return np.einsum("...kl,...l,...k->...", mat, a, b)
        if ambient:
            return np.einsum("...l,...l->...", a, b)
        return a * b

    out = np.zeros(grid.sizes)
    if mat is None:
        for i in range(m):
            face = dot(v[i], w[i])
            out += ginv[..., i, i] * 0.5 * (face + np.roll(face, 1, axis=i))
    else:
        for i in range(m):
            back_v = np.roll(v[i], 1, axis=i)
            back_w = np.roll(w[i], 1, axis=i)
            out += ginv[..., i, i] * 0.5 * (dot(v[i], w[i]) + dot(back_v, back_w))
    if not grid.is_diagonal:
        cv = [0.5 * (v[i] + np.roll(v[i], 1, axis=i)) for i in range(m)]
        cw = [0.5 * (w[i] + np.roll(w[i], 1, axis=i)) for i in range(m)]
        for i in range(m):
            for j in range(m):
                if i != j:
                    out += ginv[..., i, j] * dot(cv[i], cw[j])
    return out


def grad_norm_sq(u: np.ndarray, grid: DomainGrid) -> np.ndarray:
    """``|grad u|^2 = g^{ij} <d_i u, d_j u>`` at the nodes (nonnegative)."""
    du = face_gradient(u, grid)
    return grad_inner(du, du, grid)


def div_weighted(w: np.ndarray, v: np.ndarray, grid: DomainGrid) -> np.ndarray:
    """``(1/sqrt|g|) d_i (w sqrt|g| g^{ij} v_j)`` for face-located ``v``.

    Satisfies, to round-off,
    ``integrate(<div_weighted(w, v), phi>) == -integrate(w * grad_inner(v, face_gradient(phi)))``.
    """
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    m = grid.m
    nd = v.ndim - 1
    sg = grid.vol_density
    ginv = grid.metric_inverse
    out = np.zeros(v.shape[1:])
    for i, h in enumerate(grid.spacings):
        a = w * sg * ginv[..., i, i]
        a_face = 0.5 * (a + np.roll(a, -1, axis=i))
        flux = _expand(a_face, nd) * v[i]
        out += (flux - np.roll(flux, 1, axis=i)) / h
    if not grid.is_diagonal:
        cv = [0.5 * (v[i] + np.roll(v[i], 1, axis=i)) for i in range(m)]
        for i in range(m):
            for j, h in enumerate(grid.spacings):
                if i == j:
                    continue
                x = _expand(w * sg * ginv[..., i, j], nd) * cv[i]
                out += (np.roll(x, -1, axis=j) - np.roll(x, 1, axis=j)) / (2 * h)
    return out / _expand(sg, nd)


def integrate(field: np.ndarray, grid: DomainGrid) -> float:
    """``sum field * sqrt|g| * prod h_i`` (periodic trapezoid rule)."""
    field = _check_field(field, grid)
    if field.shape != grid.sizes:
        raise ValueError("integrate expects a scalar field")
    return float(np.sum(field * grid.vol_density) * grid.cell_volume)
