"""Embedded target manifolds and regular-ball certificates.

A target ``N`` is the common zero set of constraints ``Phi_k : R^L -> R`` whose
gradients are mutually orthogonal on ``N``.  The second fundamental form enters
the flow only through the contraction

    A(y)(grad u, grad u) = sum_k g^{ij} <Hess Phi_k(y) d_i u, d_j u> grad Phi_k(y) / |grad Phi_k(y)|^2,

whose sign makes constant-speed geodesic wraps stationary (on the unit sphere
it equals ``|grad u|^2 y``).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import geometry

Array = np.ndarray


class DriftError(ValueError):
    """A point is too far from the target for the constraint geometry to apply."""


@dataclass(frozen=True)
class Constraint:
    value: Callable[[Array], Array]  # (..., L) -> (...)
    grad: Callable[[Array], Array]  # (..., L) -> (..., L)
    hess: Callable[[Array], Array]  # (..., L) -> (..., L, L)
    constant_hessian: bool = False


@dataclass(frozen=True)
class EmbeddedTarget:
    name: str
    ambient_dim: int
    intrinsic_dim: int
    constraints: tuple[Constraint, ...]
    sect_upper_bound: float
    tube_radius: float = np.inf
    projector: Callable[[Array], Array] | None = field(default=None, repr=False)

    @property
    def codim(self) -> int:
        return len(self.constraints)

    def constraint_values(self, y: Array) -> Array:
        y = np.asarray(y, dtype=float)
        if not self.constraints:
            return np.zeros(y.shape[:-1] + (0,))
        return np.stack([c.value(y) for c in self.constraints], axis=-1)

    def violation(self, y: Array) -> float:
        vals = self.constraint_values(y)
        return float(np.max(np.abs(vals))) if vals.size else 0.0

    def project(self, y: Array) -> Array:
        """Nearest-point projection onto ``N`` (valid inside the tube)."""
        y = np.asarray(y, dtype=float)
        if self.projector is not None:
            return self.projector(y)
        return _newton_project(self, y)

    def normals(self, y: Array) -> Array:
        """Constraint gradients, shape ``(..., codim, L)``."""
        y = np.asarray(y, dtype=float)
        if not self.constraints:
            return np.zeros(y.shape[:-1] + (0, self.ambient_dim))
        return np.stack([c.grad(y) for c in self.constraints], axis=-2)

    def tangent_projection(self, y: Array, v: Array) -> Array:
        nrm = self.normals(y)
        out = np.array(v, dtype=float, copy=True)
        for k in range(self.codim):
            n = nrm[..., k, :]
            out -= (np.sum(out * n, axis=-1) / np.sum(n * n, axis=-1))[..., None] * n
        return out

    def tangent_frame(self, y: Array) -> Array:
        """Orthonormal tangent basis at each point, shape ``(..., L, n)``."""
        y = np.asarray(y, dtype=float)
        batch = y.shape[:-1]
        L = self.ambient_dim
        proj = np.broadcast_to(np.eye(L), batch + (L, L)).copy()
        nrm = self.normals(y)
        for k in range(self.codim):
            n = nrm[..., k, :]
            n = n / np.linalg.norm(n, axis=-1, keepdims=True)
            proj -= n[..., :, None] * n[..., None, :]
        w, vecs = np.linalg.eigh(proj)
        # eigenvalue 1 <-> tangent; eigh sorts ascending
        return vecs[..., :, L - self.intrinsic_dim :]

    def sff_field(self, u: Array, grid: geometry.DomainGrid, max_violation: float = 1e-6) -> Array:
        """Node-wise ``A(u)(grad u, grad u)`` built from face-located partials.

        Uses the same averaging as :func:`geometry.grad_norm_sq`, so on the unit
        sphere the result is exactly ``grad_norm_sq(u) * u``.
        """
        u = np.asarray(u, dtype=float)
        out = np.zeros_like(u)
        if not self.constraints:
            return out
        _check_drift(self, u, max_violation)
        du = geometry.face_gradient(u, grid)
        for c in self.constraints:
            n = c.grad(u)
            if c.constant_hessian:
                H = c.hess(u.reshape(-1, u.shape[-1])[0])
                q = geometry.grad_inner(du @ H.T, du, grid)
            else:
                q = geometry.grad_inner(du, du, grid, mat=c.hess(u))
            out += (q / np.sum(n * n, axis=-1))[..., None] * n
        return out


def _check_drift(target: EmbeddedTarget, y: Array, max_violation: float) -> None:
    v = target.violation(y)
    if not np.isfinite(v) or v > max_violation:
        raise DriftError(f"constraint violation {v:.3e} exceeds {max_violation:.1e} on {target.name}")


def _newton_project(target: EmbeddedTarget, y: Array, iters: int = 50) -> Array:
    # Gauss-Newton on Phi(y) = 0 with minimum-norm corrections
    y = np.array(y, dtype=float, copy=True)
    for _ in range(iters):
        phi = target.constraint_values(y)
        if np.max(np.abs(phi), initial=0.0) <= 1e-15:
            break
        J = target.normals(y)  # (..., k, L)
        JJt = J @ np.swapaxes(J, -1, -2)
        lam = np.linalg.solve(JJt, phi[..., None])[..., 0]
        y -= np.einsum("...k,...kl->...l", lam, J)
    return y


def sff_contract(
    target: EmbeddedTarget, y: Array, partials: Array, ginv: Array, max_violation: float = 1e-6
) -> Array:
    """``sum_k g^{ij} <Hess Phi_k(y) X_i, X_j> grad Phi_k(y) / |grad Phi_k(y)|^2``.

    ``partials`` has shape ``(..., K, L)`` (one ambient vector per index) and
    ``ginv`` shape ``(..., K, K)``.
    """
    y = np.asarray(y, dtype=float)
    X = np.asarray(partials, dtype=float)
    ginv = np.asarray(ginv, dtype=float)
    _check_drift(target, y, max_violation)
    out = np.zeros_like(y)
    for c in target.constraints:
        H = c.hess(y)
        HX = np.einsum("...kl,...il->...ik", H, X)
        q = np.einsum("...ij,...ik,...jk->...", ginv, HX, X)
        n = c.grad(y)
        out = out + (q / np.sum(n * n, axis=-1))[..., None] * n
    return out


# ---------------------------------------------------------------- targets


def make_sphere(n: int) -> EmbeddedTarget:
    """Unit sphere ``S^n`` in ``R^{n+1}``, ``Phi = (|y|^2 - 1)/2``."""
    if n < 1:
        raise ValueError("sphere dimension must be >= 1")
    L = n + 1
    eye = np.eye(L)
    phi = Constraint(
        value=lambda y: 0.5 * (np.sum(y * y, axis=-1) - 1.0),
        grad=lambda y: np.array(y, dtype=float),
        hess=lambda y: np.broadcast_to(eye, np.shape(y)[:-1] + (L, L)),
        constant_hessian=True,
    )

    def project(y):
        return y / np.linalg.norm(y, axis=-1, keepdims=True)

    return EmbeddedTarget(f"sphere{n}", L, n, (phi,), 1.0, tube_radius=1.0, projector=project)


def make_clifford_torus() -> EmbeddedTarget:
    """``{y in R^4 : y1^2 + y2^2 = y3^2 + y4^2 = 1/2}`` (flat)."""
    constraints = []
    for sl in (slice(0, 2), slice(2, 4)):
        mask = np.zeros(4)
        mask[sl] = 1.0
        H = np.diag(mask)
        constraints.append(
            Constraint(
                value=lambda y, sl=sl: 0.5 * (np.sum(y[..., sl] ** 2, axis=-1) - 0.5),
                grad=lambda y, mask=mask: np.asarray(y, dtype=float) * mask,
                hess=lambda y, H=H: np.broadcast_to(H, np.shape(y)[:-1] + (4, 4)),
                constant_hessian=True,
            )
        )

    def project(y):
        y = np.array(y, dtype=float, copy=True)
        for sl in (slice(0, 2), slice(2, 4)):
            y[..., sl] /= np.sqrt(2.0) * np.linalg.norm(y[..., sl], axis=-1, keepdims=True)
        return y

    return EmbeddedTarget(
        "clifford", 4, 2, tuple(constraints), 0.0, tube_radius=1 / np.sqrt(2), projector=project
    )


def make_euclidean(L: int) -> EmbeddedTarget:
    """``R^L`` itself: no constraints, ``A = 0``."""
    return EmbeddedTarget(f"euclidean{L}", L, L, (), 0.0, projector=lambda y: np.array(y, dtype=float))


def make_target(kind: str, **params) -> EmbeddedTarget:
    kind = kind.lower()
    if kind == "sphere":
        return make_sphere(int(params.get("n", 2)))
    if kind in ("clifford", "clifford_torus"):
        return make_clifford_torus()
    if kind == "euclidean":
        return make_euclidean(int(params.get("L", 1)))
    raise ValueError(f"unknown target type {kind!r}")


# ------------------------------------------------------------ thresholds


def delta_p(m: int, p: float) -> float:
    """Admissibility threshold ``3 (p-2)^2 (sqrt(m) + 2p + 6)^2 + 3``."""
    if p < 2:
        raise ValueError(f"p must be >= 2, got {p}")
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    return 3.0 * (p - 2) ** 2 * (np.sqrt(m) + 2 * p + 6) ** 2 + 3.0


def cap_delta(r: float, r1: float) -> float:
    """Regularity constant of the geodesic cap ``B(y, r)`` on a unit sphere
    certified by ``f = cos(rho) - cos(r1)``."""
    if not 0 < r < r1 < np.pi / 2:
        raise ValueError(f"need 0 < r < r1 < pi/2, got r={r}, r1={r1}")
    return (np.cos(r) - np.cos(r1)) * np.cos(r1) / np.sin(r) ** 2


def best_cap_delta(r: float) -> tuple[float, float]:
    """Maximise :func:`cap_delta` over ``r1``: ``cos(r1*) = cos(r)/2``, ``delta* = cot(r)^2/4``."""
    if not 0 < r < np.pi / 2:
        raise ValueError(f"need 0 < r < pi/2, got {r}")
    return 0.25 / np.tan(r) ** 2, float(np.arccos(0.5 * np.cos(r)))


def cap_delta_grid_search(r: float, points: int = 100_000) -> tuple[float, float]:
    """Brute-force maximum of :func:`cap_delta` over a uniform ``r1`` grid in ``(r, pi/2)``."""
    r1 = np.linspace(r, np.pi / 2, points + 2)[1:-1]
    vals = (np.cos(r) - np.cos(r1)) * np.cos(r1) / np.sin(r) ** 2
    k = int(np.argmax(vals))
    return float(vals[k]), float(r1[k])


def max_admissible_cap_radius(p: float, m: int) -> float:
    """Supremum of cap radii whose best certificate exceeds ``delta_p(m, p)``."""
    return float(np.arctan(0.5 / np.sqrt(delta_p(m, p))))


# ---------------------------------------------------------- certificates


@dataclass
class RegularBallCert:
    """Data ``(f, f*, a, C, delta)`` certifying a generalised regular ball.

    Hessian evaluators take ``(y, frame)`` with ``frame`` of shape
    ``(..., L, n)`` and return the intrinsic Hessian in that frame.
    """

    f: Callable[[Array], Array]
    grad_f: Callable[[Array], Array]
    hess_f: Callable[[Array, Array], Array]
    fstar: Callable[[Array], Array]
    hess_fstar: Callable[[Array, Array], Array]
    a: float
    C: float
    delta: float
    label: str = ""
    sampler: Callable[[int], Array] | None = field(default=None, repr=False)

    def contains(self, y: Array) -> Array:
        return self.fstar(y) < self.a

    def samples(self, points_per_dim: int = 64) -> Array:
        if self.sampler is None:
            raise ValueError("certificate has no default sampler; pass samples explicitly")
        return self.sampler(points_per_dim)


def intrinsic_hessian(target: EmbeddedTarget, y: Array, frame: Array, grad_ext: Array, hess_ext: Array) -> Array:
    """Intrinsic Hessian of ``F|_N`` from an ambient extension ``F``.

    ``Hess_N F(X, Y) = D^2 F(X, Y) - sum_k <DF, n_k>/|n_k|^2 Hess Phi_k(X, Y)``.
    """
    H = np.array(hess_ext, dtype=float, copy=True)
    for c in target.constraints:
        n = c.grad(y)
        lam = np.sum(grad_ext * n, axis=-1) / np.sum(n * n, axis=-1)
        H = H - lam[..., None, None] * c.hess(y)
    return np.einsum("...li,...lk,...kj->...ij", frame, H, frame)


def _cap_basis(centre: Array) -> Array:
    """Orthonormal basis of the tangent space of the sphere at ``centre``."""
    c = centre / np.linalg.norm(centre)
    L = c.size
    q, _ = np.linalg.qr(np.column_stack([c, np.eye(L)]))
    return q[:, 1:L]


def sphere_exp(centre: Array, xi: Array) -> Array:
    """Exponential map of the unit sphere at ``centre`` applied to tangent ``xi``."""
    c = np.asarray(centre, dtype=float)
    xi = np.asarray(xi, dtype=float)
    nrm = np.linalg.norm(xi, axis=-1, keepdims=True)
    safe = np.where(nrm > 0, nrm, 1.0)
    return np.cos(nrm) * c + np.sin(nrm) * xi / safe


def geodesic_radius(centre: Array, y: Array) -> Array:
    c = np.asarray(centre, dtype=float)
    y = np.asarray(y, dtype=float)
    cosr = np.sum(y * c, axis=-1) / np.linalg.norm(y, axis=-1)
    return np.arccos(np.clip(cosr, -1.0, 1.0))


def cap_samples(centre: Array, r: float, points_per_dim: int = 64) -> Array:
    """Tensor grid in geodesic polar coordinates on ``B(centre, r)``.

    Radii run from 0 up to ``r (1 - 1e-12)`` so that the boundary behaviour of
    the open cap is probed.
    """
    centre = np.asarray(centre, dtype=float)
    centre = centre / np.linalg.norm(centre)
    n = centre.size - 1
    basis = _cap_basis(centre)  # (L, n)
    rho = np.linspace(0.0, r, points_per_dim)
    rho[-1] = r * (1 - 1e-12)
    if n == 1:
        dirs = np.array([[1.0], [-1.0]])
    else:
        angles = [np.linspace(0, np.pi, points_per_dim) for _ in range(n - 2)]
        angles.append(np.linspace(0, 2 * np.pi, points_per_dim, endpoint=False))
        grids = np.meshgrid(*angles, indexing="ij")
        dirs = _hyperspherical(grids).reshape(-1, n)
    xi = rho[:, None, None] * dirs[None, :, :]  # (R, D, n)
    pts = sphere_exp(centre, xi @ basis.T)
    return pts.reshape(-1, centre.size)


def _hyperspherical(angles: list[Array]) -> Array:
    n = len(angles) + 1
    out = []
    sin_prod = np.ones_like(angles[0])
    for k in range(n - 1):
        out.append(sin_prod * np.cos(angles[k]))
        sin_prod = sin_prod * np.sin(angles[k])
    out.append(sin_prod)
    return np.stack(out, axis=-1)


def sphere_cap_cert(
    n: int,
    r: float,
    r1: float | None = None,
    delta: float | None = None,
    centre: Array | None = None,
    fstar_sign: float = 1.0,
) -> RegularBallCert:
    """Certificate for the cap ``B(centre, r)`` of ``S^n`` with
    ``f = cos(rho) - cos(r1)`` and ``f* = rho^2`` (``a = r^2``).

    ``r1`` defaults to the optimal ``arccos(cos(r)/2)`` and ``delta`` to
    ``cap_delta(r, r1)``.  ``fstar_sign=-1`` gives the (non-convex) ``-rho^2``.
    """
    if centre is None:
        centre = np.eye(n + 1)[-1]
    c = np.asarray(centre, dtype=float)
    c = c / np.linalg.norm(c)
    if r1 is None:
        r1 = best_cap_delta(r)[1]
    if delta is None:
        delta = cap_delta(r, r1)
    cos_r1 = np.cos(r1)

    def f(y):
        return np.sum(np.asarray(y) * c, axis=-1) - cos_r1

    def grad_f(y):
        y = np.asarray(y, dtype=float)
        return c - np.sum(y * c, axis=-1, keepdims=True) * y

    def hess_f(y, frame):
        cosr = np.sum(np.asarray(y) * c, axis=-1)
        k = frame.shape[-1]
        return -cosr[..., None, None] * np.eye(k)

    def fstar(y):
        return fstar_sign * geodesic_radius(c, y) ** 2

    def hess_fstar(y, frame):
        y = np.asarray(y, dtype=float)
        rho = geodesic_radius(c, y)
        k = frame.shape[-1]
        radial = -(c - np.cos(rho)[..., None] * y)
        sin = np.sin(rho)
        unit = np.where(sin[..., None] > 1e-14, radial / np.where(sin > 1e-14, sin, 1.0)[..., None], 0.0)
        e = np.einsum("...l,...lk->...k", unit, frame)
        with np.errstate(invalid="ignore", divide="ignore"):
            rcot = np.where(rho > 1e-8, rho / np.tan(np.where(rho > 1e-8, rho, 1.0)), 1.0)
        P = e[..., :, None] * e[..., None, :]
        H = 2 * P + 2 * rcot[..., None, None] * (np.eye(k) - P)
        return fstar_sign * H

    fmin = np.cos(r) - cos_r1
    fmax = 1.0 - cos_r1
    C = max(1.0 / fmin, fmax)
    return RegularBallCert(
        f=f,
        grad_f=grad_f,
        hess_f=hess_f,
        fstar=fstar,
        hess_fstar=hess_fstar,
        a=r**2,
        C=C,
        delta=float(delta),
        label=f"cap(r={r:g}, r1={r1:g})",
        sampler=lambda k: cap_samples(c, r, k),
    )


def trivial_cert(target: EmbeddedTarget, delta: float = 1e6, a: float = 2.0) -> RegularBallCert:
    """``f = f* = 1``, ``a > 1``: covers all of a nonpositively curved target."""

    def one(y):
        return np.ones(np.shape(y)[:-1])

    def zero_grad(y):
        return np.zeros(np.shape(y))

    def zero_hess(y, frame):
        k = frame.shape[-1]
        return np.zeros(np.shape(y)[:-1] + (k, k))

    return RegularBallCert(
        f=one,
        grad_f=zero_grad,
        hess_f=zero_hess,
        fstar=one,
        hess_fstar=zero_hess,
        a=a,
        C=1.0,
        delta=float(delta),
        label="trivial(f=f*=1)",
        sampler=lambda k: default_samples(target, k),
    )


def default_samples(target: EmbeddedTarget, points_per_dim: int = 64) -> Array:
    if target.name == "clifford":
        th = np.linspace(0, 2 * np.pi, points_per_dim, endpoint=False)
        a, b = np.meshgrid(th, th, indexing="ij")
        return np.stack([np.cos(a), np.sin(a), np.cos(b), np.sin(b)], axis=-1).reshape(-1, 4) / np.sqrt(2)
    if target.name.startswith("sphere"):
        c = np.eye(target.ambient_dim)[-1]
        return cap_samples(c, np.pi * (1 - 1e-9), points_per_dim)
    if target.name.startswith("euclidean"):
        axes = [np.linspace(-1, 1, points_per_dim)] * target.ambient_dim
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, target.ambient_dim)
    raise ValueError(f"no default sampler for target {target.name}")


@dataclass
class CertReport:
    condition: str
    passed: bool
    min_eigenvalue: float
    n_samples: int
    worst_sample: Array | None = None
    f_range: tuple[float, float] | None = None
    detail: str = ""

    def to_dict(self) -> dict:
        out = {
            "condition": self.condition,
            "passed": bool(self.passed),
            "min_eigenvalue": float(self.min_eigenvalue),
            "n_samples": int(self.n_samples),
            "detail": self.detail,
        }
        if self.f_range is not None:
            out["f_range"] = [float(v) for v in self.f_range]
        return out


def _check_samples(cert: RegularBallCert, samples: Array) -> Array:
    samples = np.asarray(samples, dtype=float)
    inside = cert.contains(samples)
    if not np.all(inside):
        raise ValueError(f"{int(np.sum(~inside))} samples lie outside the sublevel set f* < a")
    return samples


def verify_regular_set(
    cert: RegularBallCert, target: EmbeddedTarget, samples: Array | None = None, tol: float = 1e-10
) -> CertReport:
    """Check ``-Hess f - K2 f h >= delta |grad f|^2 / f h`` and ``1/C <= f <= C``."""
    if samples is None:
        samples = cert.samples()
    samples = _check_samples(cert, samples)
    frame = target.tangent_frame(samples)
    f = cert.f(samples)
    if np.any(f <= 0):
        raise ValueError("certificate function f must be positive on the samples")
    H = cert.hess_f(samples, frame)
    if not np.all(np.isfinite(H)):
        raise ValueError("non-finite Hessian of f")
    gf = cert.grad_f(samples)
    gsq = np.sum(gf * gf, axis=-1)
    k = frame.shape[-1]
    K2 = target.sect_upper_bound
    scal = K2 * f + cert.delta * gsq / f
    form = -H - scal[..., None, None] * np.eye(k)
    eig = np.linalg.eigvalsh(form)[..., 0]
    worst = int(np.argmin(eig))
    pinched = bool(np.all(f >= 1.0 / cert.C) and np.all(f <= cert.C))
    ok = bool(eig[worst] >= -tol) and pinched
    detail = "" if pinched else "pinching C^-1 <= f <= C violated"
    return CertReport("c1", ok, float(eig[worst]), len(samples), samples[worst], (float(f.min()), float(f.max())), detail)


def verify_sublevel(
    cert: RegularBallCert, target: EmbeddedTarget, samples: Array | None = None, tol: float = 1e-10
) -> CertReport:
    """Check convexity of ``f*`` on the samples and ``f* < a`` there."""
    if samples is None:
        samples = cert.samples()
    samples = _check_samples(cert, samples)
    frame = target.tangent_frame(samples)
    H = cert.hess_fstar(samples, frame)
    if not np.all(np.isfinite(H)):
        raise ValueError("non-finite Hessian of f*")
    eig = np.linalg.eigvalsh(H)[..., 0]
    worst = int(np.argmin(eig))
    return CertReport("c2", bool(eig[worst] >= -tol), float(eig[worst]), len(samples), samples[worst])
