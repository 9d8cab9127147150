"""Explicit time integration of the regularised p-harmonic map heat flow

    du/dt = Delta_{p,eps} u + (|grad u|^2 + eps)^{(p-2)/2} A(u)(grad u, grad u),

with eps-continuation, stationarity residuals and the comparison utilities
used by the uniqueness checks.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Protocol, Sequence

import numpy as np

from . import geometry
from .geometry import DomainGrid
from .target import DriftError, EmbeddedTarget

log = logging.getLogger(__name__)

SCHEMES = ("explicit", "project")


class FlowAbort(RuntimeError):
    """Raised when a step produces non-finite values or leaves the tube around N."""

    def __init__(self, reason: str, message: str):
        super().__init__(message)
        self.reason = reason


@dataclass
class FlowConfig:
    p: float = 2.0
    eps_list: Sequence[float] = (1e-2,)
    dt_safety: float = 0.25
    scheme: str = "explicit"
    reproject_every: int = 1
    t_end: float = 10.0
    stat_tol: float = 1e-6
    dt: float | None = None
    drift_tol: float = 1e-6
    max_steps: int = 2_000_000
    history_every: int = 0

    def __post_init__(self) -> None:
        self.eps_list = tuple(float(e) for e in self.eps_list)
        self.validate()

    def validate(self) -> None:
        if self.p < 2:
            raise ValueError(f"p must be >= 2, got {self.p}")
        if not self.eps_list:
            raise ValueError("eps_list must not be empty")
        if any(e <= 0 for e in self.eps_list):
            raise ValueError("every eps used for stepping must be > 0")
        if any(b > a for a, b in zip(self.eps_list, self.eps_list[1:])):
            raise ValueError("eps_list must be non-increasing")
        if not 0 < self.dt_safety <= 1:
            raise ValueError(f"dt_safety must lie in (0, 1], got {self.dt_safety}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.reproject_every < 0:
            raise ValueError("reproject_every must be >= 0")
        if self.t_end <= 0:
            raise ValueError("t_end must be positive")
        if self.dt is not None and self.dt <= 0:
            raise ValueError("fixed dt must be positive")

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "eps_list": list(self.eps_list),
            "dt_safety": self.dt_safety,
            "scheme": self.scheme,
            "reproject_every": self.reproject_every,
            "t_end": self.t_end,
            "stat_tol": self.stat_tol,
            "dt": self.dt,
            "drift_tol": self.drift_tol,
        }


@dataclass
class MapState:
    u: np.ndarray
    t: float
    eps: float
    p: float

    def with_eps(self, eps: float) -> "MapState":
        return replace(self, eps=float(eps))


@dataclass
class FlowTerms:
    """Everything the right-hand side is made of, evaluated at one state."""

    F: np.ndarray
    weight: np.ndarray
    laplacian: np.ndarray
    sff: np.ndarray

    @property
    def rhs(self) -> np.ndarray:
        return self.laplacian + self.weight[..., None] * self.sff


def _weight(F: np.ndarray, p: float) -> np.ndarray:
    if p == 2:
        return np.ones_like(F)
    return F ** ((p - 2) / 2)


def flow_terms(state: MapState, grid: DomainGrid, target: EmbeddedTarget, max_violation: float = 1e-6) -> FlowTerms:
    du = geometry.face_gradient(state.u, grid)
    F = geometry.grad_inner(du, du, grid) + state.eps
    w = _weight(F, state.p)
    lap = geometry.div_weighted(w, du, grid)
    sff = target.sff_field(state.u, grid, max_violation=max_violation)
    return FlowTerms(F, w, lap, sff)


def p_laplacian_eps(state: MapState, grid: DomainGrid) -> np.ndarray:
    """``div((|grad u|^2 + eps)^{(p-2)/2} grad u)``."""
    du = geometry.face_gradient(state.u, grid)
    F = geometry.grad_inner(du, du, grid) + state.eps
    return geometry.div_weighted(_weight(F, state.p), du, grid)


def rhs(state: MapState, grid: DomainGrid, target: EmbeddedTarget, max_violation: float = 1e-6) -> np.ndarray:
    try:
        return flow_terms(state, grid, target, max_violation).rhs
    except DriftError as exc:
        raise FlowAbort("drift", str(exc)) from exc


def stationarity_residual(
    state: MapState, grid: DomainGrid, target: EmbeddedTarget, eps: float | None = None
) -> float:
    """L2 norm of the tension ``Delta_{p,eps} u + F^{(p-2)/2} A(u)(grad u, grad u)``.

    ``eps`` overrides the state's regularisation; ``eps=0`` evaluates the
    unregularised tension.
    """
    if eps is not None:
        state = replace(state, eps=float(eps))
    r = rhs(state, grid, target)
    return float(np.sqrt(geometry.integrate(np.sum(r * r, axis=-1), grid)))


def _residual_of(terms: FlowTerms, grid: DomainGrid) -> float:
    r = terms.rhs
    return float(np.sqrt(geometry.integrate(np.sum(r * r, axis=-1), grid)))


def cfl_dt(state: MapState, grid: DomainGrid, config: FlowConfig, F: np.ndarray | None = None) -> float:
    """``sigma * min h^2 / (2 m max(F)^{(p-2)/2} max g^{ii})``."""
    if not 0 < config.dt_safety <= 1:
        raise ValueError("dt_safety must lie in (0, 1]")
    if F is None:
        F = geometry.grad_norm_sq(state.u, grid) + state.eps
    wmax = float(np.max(_weight(F, state.p)))
    idx = np.arange(grid.m)
    gmax = float(np.max(grid.metric_inverse[..., idx, idx]))
    hmin = min(grid.spacings)
    return config.dt_safety * hmin**2 / (2 * grid.m * wmax * gmax)


def step(
    state: MapState,
    grid: DomainGrid,
    target: EmbeddedTarget,
    config: FlowConfig,
    dt: float | None = None,
    terms: FlowTerms | None = None,
    step_index: int = 1,
) -> MapState:
    """Advance one explicit Euler step.

    ``explicit``: ``u + dt * rhs``, reprojected every ``reproject_every`` steps.
    ``project``: ``Pi(u + dt * Delta_{p,eps} u)``.
    """
    if terms is None:
        try:
            terms = flow_terms(state, grid, target, config.drift_tol)
        except DriftError as exc:
            raise FlowAbort("drift", str(exc)) from exc
    if dt is None:
        dt = cfl_dt(state, grid, config, terms.F)
    if config.scheme == "explicit":
        u = state.u + dt * terms.rhs
        if config.reproject_every and step_index % config.reproject_every == 0:
            u = target.project(u)
    else:
        u = target.project(state.u + dt * terms.laplacian)
    if not np.all(np.isfinite(u)):
        raise FlowAbort("nan", f"non-finite values after step at t={state.t:.6g}")
    drift = target.violation(u)
    if drift > config.drift_tol:
        raise FlowAbort("drift", f"drift {drift:.3e} left the tubular neighbourhood at t={state.t:.6g}")
    return MapState(u, state.t + dt, state.eps, state.p)


class Monitor(Protocol):
    def observe(self, state: MapState, terms: FlowTerms, residual: float, dt_taken: float | None) -> None: ...


@dataclass
class StageSummary:
    eps: float
    steps: int
    t_start: float
    t_stop: float
    residual: float
    converged: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class RunResult:
    final_state: MapState
    steps: int
    stages: list[StageSummary]
    abort_reason: str | None = None
    abort_message: str = ""
    history: list[tuple[float, np.ndarray]] = field(default_factory=list, repr=False)

    @property
    def converged(self) -> bool:
        return self.abort_reason is None and bool(self.stages) and self.stages[-1].converged


def run(
    grid: DomainGrid,
    target: EmbeddedTarget,
    u0: np.ndarray,
    config: FlowConfig,
    monitor: Monitor | None = None,
    cert=None,
) -> RunResult:
    """Integrate each eps of the schedule in turn, warm-starting from the
    previous stage, until ``t_end`` (per stage) or the stationarity tolerance.

    Every observed state is passed to ``monitor.observe`` together with the
    step that produced it (``None`` for stage starts).
    """
    config.validate()
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != (*grid.sizes, target.ambient_dim):
        raise ValueError(f"u0 must have shape {(*grid.sizes, target.ambient_dim)}, got {u0.shape}")
    if target.violation(u0) > config.drift_tol:
        raise ValueError(f"u0 is not on {target.name} (violation {target.violation(u0):.2e})")
    if cert is not None and not np.all(cert.contains(u0)):
        raise ValueError("u0 does not map into the certified set {f* < a}")

    state = MapState(u0.copy(), 0.0, config.eps_list[0], config.p)
    stages: list[StageSummary] = []
    history: list[tuple[float, np.ndarray]] = []
    steps = 0
    for eps in config.eps_list:
        state = state.with_eps(eps)
        t_start = state.t
        stage_steps = 0
        dt_taken = None
        while True:
            try:
                terms = flow_terms(state, grid, target, config.drift_tol)
            except DriftError as exc:
                stages.append(StageSummary(eps, stage_steps, t_start, state.t, np.nan, False))
                return RunResult(state, steps, stages, "drift", str(exc), history)
            residual = _residual_of(terms, grid)
            if monitor is not None:
                monitor.observe(state, terms, residual, dt_taken)
            if config.history_every and steps % config.history_every == 0 and (not history or history[-1][0] < state.t):
                history.append((state.t, state.u.copy()))
            remaining = t_start + config.t_end - state.t
            if residual < config.stat_tol or remaining <= 1e-12 * max(1.0, config.t_end) or steps >= config.max_steps:
                stages.append(
                    StageSummary(eps, stage_steps, t_start, state.t, residual, residual < config.stat_tol)
                )
                break
            dt_max = cfl_dt(state, grid, config, terms.F)
            dt = dt_max if config.dt is None else config.dt
            if config.dt is not None and config.dt > dt_max * (1 + 1e-12):
                log.warning("fixed dt %.3e exceeds the CFL bound %.3e", config.dt, dt_max)
            dt = min(dt, remaining)
            try:
                state = step(state, grid, target, config, dt, terms, step_index=steps + 1)
            except FlowAbort as exc:
                stages.append(StageSummary(eps, stage_steps, t_start, state.t, residual, False))
                return RunResult(state, steps, stages, exc.reason, str(exc), history)
            dt_taken = dt
            steps += 1
            stage_steps += 1
        dt_taken = None
    if config.history_every and history[-1][0] < state.t:
        history.append((state.t, state.u.copy()))
    return RunResult(state, steps, stages, None, "", history)


def monotonicity_gap(a: np.ndarray, b: np.ndarray, p: float) -> np.ndarray:
    """``<|a|^{p-2} a - |b|^{p-2} b, a - b>`` over the trailing axis."""
    if p < 2:
        raise ValueError("p must be >= 2")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    na = np.linalg.norm(a, axis=-1, keepdims=True)
    nb = np.linalg.norm(b, axis=-1, keepdims=True)
    return np.sum((na ** (p - 2) * a - nb ** (p - 2) * b) * (a - b), axis=-1)


def monotonicity_lower_bound(a: np.ndarray, b: np.ndarray, p: float) -> np.ndarray:
    """``2^{2-p} |a - b|^p``, the sharp lower bound for :func:`monotonicity_gap`."""
    d = np.linalg.norm(np.asarray(a, dtype=float) - np.asarray(b, dtype=float), axis=-1)
    return 2.0 ** (2 - p) * d**p


def sup_distance(u1: np.ndarray, u2: np.ndarray) -> float:
    """Largest node-wise Euclidean distance between two ambient fields."""
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    if u1.shape != u2.shape:
        raise ValueError(f"shape mismatch: {u1.shape} vs {u2.shape}")
    return float(np.max(np.linalg.norm(u1 - u2, axis=-1)))
