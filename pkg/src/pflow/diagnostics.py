"""Monitors evaluated along a flow run, and post-hoc checks on run histories."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .flow import FlowTerms, MapState, stationarity_residual
from .geometry import DomainGrid
from .target import EmbeddedTarget, RegularBallCert

SERIES_COLUMNS = (
    "step",
    "t",
    "eps",
    "energy",
    "dissipation_residual",
    "max_fstar",
    "max_phi",
    "stationarity_residual",
    "drift",
)


def energy(state: MapState, grid: DomainGrid, F: np.ndarray | None = None) -> float:
    """``E_{p,eps}(u) = (1/p) int (|grad u|^2 + eps)^{p/2}``."""
    if F is None:
        F = geometry.grad_norm_sq(state.u, grid) + state.eps
    return geometry.integrate(F ** (state.p / 2), grid) / state.p


def p_energy(u: np.ndarray, grid: DomainGrid, p: float, eps: float = 0.0) -> float:
    return energy(MapState(np.asarray(u, dtype=float), 0.0, eps, p), grid)


def confinement_max(state: MapState, cert: RegularBallCert) -> float:
    return float(np.max(cert.fstar(state.u)))


def phi_field(state: MapState, cert: RegularBallCert, grid: DomainGrid, F: np.ndarray | None = None) -> np.ndarray:
    """``phi = (|grad u|^2 + eps) / f(u)^2``."""
    if not np.all(cert.contains(state.u)):
        raise ValueError("phi is only defined while u maps into the certified set")
    if F is None:
        F = geometry.grad_norm_sq(state.u, grid) + state.eps
    return F / cert.f(state.u) ** 2


def phi_max_monotone(series, rel_tol: float = 1e-6) -> bool:
    s = np.asarray(series, dtype=float)
    return bool(np.all(s[1:] <= s[:-1] * (1 + rel_tol)))


def manifold_drift(state: MapState, target: EmbeddedTarget) -> float:
    return target.violation(state.u)


@dataclass
class MonitorReport:
    """Per-observation series of a run plus derived PASS/FAIL flags."""

    step: list[int] = field(default_factory=list)
    t: list[float] = field(default_factory=list)
    eps: list[float] = field(default_factory=list)
    energy: list[float] = field(default_factory=list)
    dissipation_residual: list[float] = field(default_factory=list)
    max_fstar: list[float] = field(default_factory=list)
    max_phi: list[float] = field(default_factory=list)
    stationarity_residual: list[float] = field(default_factory=list)
    drift: list[float] = field(default_factory=list)
    # sum over steps of dt * int |du/dt|^2
    dissipated: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.t)

    def rows(self):
        for k in range(len(self)):
            yield tuple(getattr(self, c)[k] for c in SERIES_COLUMNS)

    def energy_monotone(self, rel_tol: float = 1e-12) -> tuple[bool, int]:
        e = np.asarray(self.energy)
        bad = np.sum(e[1:] > e[:-1] + rel_tol * abs(e[0]))
        return bool(bad == 0), int(bad)

    def confinement(self, tol: float = 1e-8) -> bool:
        f = np.asarray(self.max_fstar)
        if np.all(np.isnan(f)):
            return True
        return bool(np.all(f <= f[0] + tol))

    def phi_monotone(self, rel_tol: float = 1e-6) -> bool:
        s = np.asarray(self.max_phi)
        if np.all(np.isnan(s)):
            return True
        return phi_max_monotone(s, rel_tol)

    def flags(self) -> dict[str, bool]:
        return {
            "energy_monotone": self.energy_monotone()[0],
            "confinement": self.confinement(),
            "phi_monotone": self.phi_monotone(),
        }


class RunMonitor:
    """Collects a :class:`MonitorReport` from ``flow.run`` observations."""

    def __init__(self, grid: DomainGrid, target: EmbeddedTarget, cert: RegularBallCert | None = None):
        self.grid = grid
        self.target = target
        self.cert = cert
        self.report = MonitorReport()
        self._prev_u: np.ndarray | None = None
        self._prev_energy = 0.0
        self._energy_change = 0.0
        self._dissipated = 0.0
        self._count = 0

    def observe(self, state: MapState, terms: FlowTerms, residual: float, dt_taken: float | None) -> None:
        grid = self.grid
        e = energy(state, grid, terms.F)
        if dt_taken is not None and self._prev_u is not None:
            du = (state.u - self._prev_u) / dt_taken
            self._dissipated += dt_taken * geometry.integrate(np.sum(du * du, axis=-1), grid)
            self._energy_change += e - self._prev_energy
            self._count += 1
        r = self.report
        if r.t and state.t == r.t[-1]:
            # same time point re-observed at a new eps: keep one row per time
            for name in SERIES_COLUMNS + ("dissipated",):
                getattr(r, name).pop()
        e0 = r.energy[0] if r.energy else e
        r.step.append(self._count)
        r.t.append(state.t)
        r.eps.append(state.eps)
        r.energy.append(e)
        r.dissipation_residual.append(abs(self._energy_change + self._dissipated) / abs(e0) if e0 else 0.0)
        r.dissipated.append(self._dissipated)
        if self.cert is not None:
            r.max_fstar.append(confinement_max(state, self.cert))
            r.max_phi.append(float(np.max(terms.F / self.cert.f(state.u) ** 2)))
        else:
            r.max_fstar.append(np.nan)
            r.max_phi.append(np.nan)
        r.stationarity_residual.append(residual)
        r.drift.append(self.target.violation(state.u))
        self._prev_u = state.u.copy()
        self._prev_energy = e


def dissipation_residual(report: MonitorReport) -> float:
    """``|Delta E + sum dt int |du/dt|^2| / |E(0)|`` at the end of the record."""
    return float(report.dissipation_residual[-1]) if len(report) else 0.0


@dataclass
class LocalEstimateReport:
    x0: tuple[float, ...]
    R: float
    t0: float
    branch: str
    lhs: float
    rhs_core: float
    initial_term: float
    c_emp: float

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


def local_gradient_estimate(
    history: list[tuple[float, np.ndarray]],
    grid: DomainGrid,
    x0,
    R: float,
    t0: float,
    p: float,
) -> LocalEstimateReport:
    """Empirical constant of the local sup-gradient bound on parabolic cylinders.

    For ``t0 > R``: ``sup_{B(R/2) x [t0-R/2, t0]} |grad u|`` against
    ``int_{B(R) x [t0-R, t0]} |grad u|^p + 1``.  For ``t0 <= R`` both windows
    start at 0 and ``sup_{B(R)} |grad u_0|`` is added to the right side.
    """
    if not history:
        raise ValueError("empty history")
    times = np.array([t for t, _ in history])
    tol = 1e-9 * max(1.0, t0)
    if times[-1] < t0 - tol:
        raise ValueError(f"history ends at t={times[-1]:.4g} < t0={t0:.4g}")
    if t0 > R:
        branch, sup_start, int_start = "t0>R", t0 - R / 2, t0 - R
    else:
        branch, sup_start, int_start = "t0<=R", 0.0, 0.0
    if times[0] > int_start + tol:
        raise ValueError(f"history starts at t={times[0]:.4g} after the cylinder start {int_start:.4g}")
    dist = geometry.periodic_distance(grid, x0)
    inner = dist <= R / 2
    outer = dist <= R
    if not inner.any():
        raise ValueError("ball B(x0, R/2) contains no grid node")

    sel = (times >= int_start - tol) & (times <= t0 + tol)
    ts = times[sel]
    idx = np.flatnonzero(sel)
    lhs = 0.0
    integrand = []
    for k, t in zip(idx, ts):
        g = np.sqrt(geometry.grad_norm_sq(history[k][1], grid))
        if t >= sup_start - tol:
            lhs = max(lhs, float(g[inner].max()))
        integrand.append(geometry.integrate(np.where(outer, g**p, 0.0), grid))
    integral = float(np.trapezoid(integrand, ts)) if len(ts) > 1 else 0.0
    initial_term = 0.0
    if branch == "t0<=R":
        g0 = np.sqrt(geometry.grad_norm_sq(history[0][1], grid))
        initial_term = float(g0[outer].max())
    rhs_core = integral + initial_term + 1.0
    return LocalEstimateReport(tuple(float(c) for c in x0), R, t0, branch, lhs, rhs_core, initial_term, lhs / rhs_core)


@dataclass
class EllipticPhiReport:
    passed: bool
    max_grad_phi: float
    n_active: int
    tol: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def elliptic_phi_check(
    state: MapState,
    cert: RegularBallCert,
    grid: DomainGrid,
    target: EmbeddedTarget,
    tol: float | None = None,
    stat_tol: float = 1e-6,
) -> EllipticPhiReport:
    """Largest ``|grad phi|`` over ``{|grad u|^2 > 10 eps}`` at a stationary state."""
    res = stationarity_residual(state, grid, target)
    if res >= stat_tol:
        raise ValueError(f"state is not stationary (residual {res:.3e} >= {stat_tol:.1e})")
    if tol is None:
        tol = max(grid.spacings)
    F = geometry.grad_norm_sq(state.u, grid) + state.eps
    active = (F - state.eps) > 10 * state.eps
    if not active.any():
        return EllipticPhiReport(True, 0.0, 0, tol)
    phi = phi_field(state, cert, grid, F)
    dphi = geometry.gradient(phi, grid)
    gsq = np.einsum("i...,...ij,j...->...", dphi, grid.metric_inverse, dphi)
    mx = float(np.sqrt(np.max(gsq[active])))
    return EllipticPhiReport(mx <= tol, mx, int(active.sum()), tol)
