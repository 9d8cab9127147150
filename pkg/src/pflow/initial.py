"""Seeded initial maps: band-limited fields pushed into spherical caps, angle
fields and localized bumps on the Clifford torus, and geodesic wraps.

Every generator is defined by continuum data (Fourier coefficients, closed
forms), so the same parameters sampled on a refined grid give the same map.
"""
from __future__ import annotations

import numpy as np

from . import geometry
from .geometry import DomainGrid
from .target import EmbeddedTarget, _cap_basis, sphere_exp

__all__ = [
    "bandlimited_field",
    "cap_map",
    "clifford_map",
    "angle_field",
    "bump",
    "geodesic_wrap",
    "constant_map",
    "make_initial",
]


def _modes(m: int, K: int) -> np.ndarray:
    ks = np.array(np.meshgrid(*[np.arange(-K, K + 1)] * m, indexing="ij")).reshape(m, -1).T
    return ks[np.any(ks != 0, axis=1)]


def _coeffs(m: int, dim: int, K: int, seed: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    ks = _modes(m, K)
    decay = 1.0 / (1.0 + np.sum(ks * ks, axis=1))
    a = rng.normal(size=(len(ks), dim)) * decay[:, None]
    b = rng.normal(size=(len(ks), dim)) * decay[:, None]
    return ks, a, b


def _evaluate(xs, periods, ks, a, b) -> np.ndarray:
    out = np.zeros(xs[0].shape + (a.shape[1],))
    for k, ak, bk in zip(ks, a, b):
        ph = sum(kk * 2 * np.pi * x / L for kk, x, L in zip(k, xs, periods))
        out += np.cos(ph)[..., None] * ak + np.sin(ph)[..., None] * bk
    return out


def bandlimited_field(grid: DomainGrid, dim: int, K: int, seed: int) -> np.ndarray:
    """Random trigonometric polynomial of degree ``K`` with ``dim`` components,
    coefficients decaying like ``1 / (1 + |k|^2)``."""
    ks, a, b = _coeffs(grid.m, dim, K, seed)
    return _evaluate(geometry.coordinates(grid), grid.periods, ks, a, b)


def cap_map(
    grid: DomainGrid,
    centre,
    radius: float,
    K: int = 3,
    seed: int = 0,
    margin: float = 1e-3,
    ref_n: int = 32,
) -> np.ndarray:
    """``exp_c(xi)`` for a band-limited tangent field ``xi`` at ``c``.

    ``xi`` is scaled so that ``max rho^2 = (1 - margin) radius^2`` over a
    reference lattice of ``ref_n`` nodes per axis, which is independent of
    the grid the map is sampled on.
    """
    c = np.asarray(centre, dtype=float)
    c = c / np.linalg.norm(c)
    n = c.size - 1
    ks, a, b = _coeffs(grid.m, n, K, seed)
    ref_axes = [np.arange(ref_n) * L / ref_n for L in grid.periods]
    ref = _evaluate(np.meshgrid(*ref_axes, indexing="ij"), grid.periods, ks, a, b)
    scale = radius * np.sqrt(1 - margin) / np.max(np.linalg.norm(ref, axis=-1))
    xi = _evaluate(geometry.coordinates(grid), grid.periods, ks, a, b) * scale
    return sphere_exp(c, xi @ _cap_basis(c).T)


def clifford_map(alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """``(cos a, sin a, cos b, sin b) / sqrt 2``."""
    return np.stack([np.cos(alpha), np.sin(alpha), np.cos(beta), np.sin(beta)], axis=-1) / np.sqrt(2)


def angle_field(grid: DomainGrid, terms=(), winding=None) -> np.ndarray:
    """``sum amp * sin(2 pi k.x / L + phase) + sum_i w_i 2 pi x_i / L_i``.

    ``terms`` holds ``(amp, k, phase)`` triples with integer wave vectors ``k``.
    """
    xs = geometry.coordinates(grid)
    out = np.zeros(grid.sizes)
    for amp, k, phase in terms:
        k = np.broadcast_to(np.asarray(k, dtype=float), (grid.m,))
        ph = sum(kk * 2 * np.pi * x / L for kk, x, L in zip(k, xs, grid.periods))
        out += amp * np.sin(ph + phase)
    if winding is not None:
        for w, x, L in zip(winding, xs, grid.periods):
            out += w * 2 * np.pi * x / L
    return out


def bump(grid: DomainGrid, centre, radius: float, amplitude: float) -> np.ndarray:
    """Smooth compactly supported bump ``amplitude * exp(1 - 1/(1 - (d/R)^2))``."""
    s = geometry.periodic_distance(grid, centre) / radius
    inside = s < 1
    out = np.zeros(grid.sizes)
    out[inside] = amplitude * np.exp(1 - 1 / (1 - s[inside] ** 2))
    return out


def geodesic_wrap(grid: DomainGrid, target: EmbeddedTarget, k: int = 1, axis: int = 0) -> np.ndarray:
    """Closed geodesic traversed ``k`` times along one grid axis."""
    x = geometry.coordinates(grid)[axis]
    theta = k * 2 * np.pi * x / grid.periods[axis]
    if target.name == "clifford":
        return clifford_map(theta, np.zeros_like(theta))
    if target.name.startswith("sphere"):
        u = np.zeros(grid.sizes + (target.ambient_dim,))
        u[..., 0] = np.cos(theta)
        u[..., 1] = np.sin(theta)
        return u
    raise ValueError(f"no geodesic wrap for target {target.name}")


def constant_map(grid: DomainGrid, point) -> np.ndarray:
    point = np.asarray(point, dtype=float)
    return np.broadcast_to(point, grid.sizes + point.shape).copy()


def make_initial(spec: dict, grid: DomainGrid, target: EmbeddedTarget, seed: int = 0, cap: dict | None = None) -> np.ndarray:
    """Build ``u0`` from a generator description ``{"generator": name, ...}``.

    ``cap`` supplies ``centre`` and ``r`` for the ``cap`` generator when they
    are not given explicitly.
    """
    spec = dict(spec)
    kind = spec.pop("generator", None)
    if kind == "cap":
        cap = cap or {}
        centre = spec.pop("centre", cap.get("centre", np.eye(target.ambient_dim)[-1]))
        radius = spec.pop("radius", cap.get("r"))
        if radius is None:
            raise ValueError("cap generator needs a radius")
        return cap_map(grid, centre, radius, seed=seed, **spec)
    if kind == "angles":
        if target.name != "clifford":
            raise ValueError("angle fields need the clifford target")
        alpha = angle_field(grid, spec.get("alpha", ()), spec.get("alpha_winding"))
        beta = angle_field(grid, spec.get("beta", ()), spec.get("beta_winding"))
        return clifford_map(alpha, beta)
    if kind == "bump":
        if target.name != "clifford":
            raise ValueError("bump maps need the clifford target")
        a = bump(grid, spec["centre"], spec["radius"], spec["amplitude"])
        return clifford_map(a, np.zeros_like(a))
    if kind == "wrap":
        return geodesic_wrap(grid, target, spec.get("k", 1), spec.get("axis", 0))
    if kind == "constant":
        return constant_map(grid, target.project(np.asarray(spec["point"], dtype=float)))
    raise ValueError(f"unknown initial-map generator {kind!r}")
