"""Scenario catalogue, single-run execution with pre-flight certification, and
outcome evaluation.

A run is described by a :class:`~pflow.config.RunConfig`.  A scenario is a
base configuration plus named variants (overrides merged into the base) and
a scenario-level evaluator that compares the variants' records.
"""
from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__, diagnostics, flow, geometry, persist, target
from .config import (
    ConfigError,
    InfeasibleCertificate,
    RunConfig,
    build_cert,
    build_domain,
    build_flow,
    build_initial,
    build_target,
    deep_merge,
)
from .diagnostics import MonitorReport, RunMonitor
from .flow import FlowConfig, MapState, RunResult
from .geometry import DomainGrid
from .target import EmbeddedTarget, RegularBallCert

STATEMENTS = {
    "energy_monotone": "E_{p,eps} is nonincreasing along the flow",
    "confinement": "max f*(u) never exceeds its initial value (u stays in the regular set)",
    "phi_monotone": "max phi = F / f(u)^2 is nonincreasing (flat domain, delta > delta_p)",
    "stationarity": "the flow converges to a stationary p-harmonic map",
    "drift": "the map stays on the target manifold",
    "energy_decrease": "E_p(u_inf) <= E_p(u_0)",
    "null_constant": "null-homotopic maps into a nonpositively curved target flow to a constant",
    "null_energy": "the limit of a null-homotopic map has vanishing energy",
    "wrap_fixed": "a geodesic wrap is a fixed point of the flow",
    "constant_immediate": "a constant map is stationary from the start",
    "energy_vanishes": "finite-energy limits on expanding flat tori are constant (Liouville proxy)",
    "restriction_agreement": "restrictions to a fixed ball stabilise along the exhaustion",
    "restriction_decreasing": "restriction differences decrease with torus size",
    "dt_ratio": "solutions depend continuously on dt (first-order convergence)",
    "dt_order": "observed dt-order of convergence is at least one",
    "dt_pair_bound": "dt-refinement distances satisfy sup|u - v| <= C (dt + h^2)",
    "scheme_pair_bound": "the two schemes agree up to C (dt + h^2)",
    "determinism": "identical configurations reproduce bit-identical series",
    "state_agreement": "eps-continuation schedules converge to the same map",
    "energy_agreement": "eps-continuation schedules reach the same energy",
    "energy_inequality": "E_p(u(T)) + int int |du/dt|^2 <= E_p(u_0)",
    "energy_inequality_regularised": "E_{p,eps_K}(u(T)) + int int |du/dt|^2 <= E_{p,eps_1}(u_0)",
}


def version_tag() -> str:
    """Package version plus a short content hash of the package sources."""
    h = hashlib.sha1()
    for path in sorted(Path(__file__).parent.glob("*.py")):
        h.update(path.read_bytes())
    return f"{__version__}+g{h.hexdigest()[:7]}"


@dataclass
class PropertyCheck:
    name: str
    passed: bool
    value: float
    tol: float

    @property
    def statement(self) -> str:
        base = self.name.split(":")[0]
        return STATEMENTS.get(base, base)

    def to_dict(self) -> dict:
        return {
            "passed": bool(self.passed),
            "value": float(self.value),
            "tol": float(self.tol),
            "property": self.statement,
        }


def _check(name: str, value: float, tol: float, upper: bool = True) -> PropertyCheck:
    ok = value <= tol if upper else value >= tol
    return PropertyCheck(name, bool(ok and np.isfinite(value)), float(value), float(tol))


# ------------------------------------------------------------ single runs


@dataclass
class Prepared:
    grid: DomainGrid
    target: EmbeddedTarget
    cert: RegularBallCert | None
    flow: FlowConfig
    u0: np.ndarray
    cert_reports: dict = field(default_factory=dict)


def preflight(
    grid: DomainGrid, tgt: EmbeddedTarget, cert: RegularBallCert, u0: np.ndarray, p: float
) -> dict:
    """Certificate checks that must pass before any step is taken."""
    c1 = target.verify_regular_set(cert, tgt)
    c2 = target.verify_sublevel(cert, tgt)
    dp = target.delta_p(grid.m, p)
    reports = {"c1": c1.to_dict(), "c2": c2.to_dict(), "delta": cert.delta, "delta_p": dp}
    if not c1.passed:
        raise InfeasibleCertificate(f"condition c1 fails for {cert.label} (min eig {c1.min_eigenvalue:.3e})")
    if not c2.passed:
        raise InfeasibleCertificate(f"condition c2 fails for {cert.label} (min eig {c2.min_eigenvalue:.3e})")
    if not cert.delta > dp + 1e-9:
        raise InfeasibleCertificate(f"delta = {cert.delta:.6g} does not exceed delta_p = {dp:.6g}")
    if not np.all(cert.contains(u0)):
        raise InfeasibleCertificate("u0 does not map into {f* < a}")
    return reports


def prepare(cfg: RunConfig) -> Prepared:
    grid = build_domain(cfg.domain)
    tgt = build_target(cfg.target)
    fc = build_flow(cfg.flow)
    cert = build_cert(cfg.ball, tgt)
    u0 = build_initial(cfg, grid, tgt)
    if u0.shape != (*grid.sizes, tgt.ambient_dim):
        raise ConfigError(f"initial map has shape {u0.shape}")
    reports = preflight(grid, tgt, cert, u0, fc.p) if cert is not None else {}
    return Prepared(grid, tgt, cert, fc, u0, reports)


def phi_applicable(grid: DomainGrid, cert: RegularBallCert | None, p: float) -> bool:
    return (
        cert is not None
        and grid.is_flat
        and grid.ricci_lower_bound == 0
        and cert.delta > target.delta_p(grid.m, p)
    )


def series_flags(
    report: MonitorReport, stat_tol: float, drift_tol: float, with_cert: bool, with_phi: bool
) -> dict[str, PropertyCheck]:
    """Outcome flags recomputable from the recorded series alone."""
    e = np.asarray(report.energy)
    e_excess = np.max(np.diff(e)) / abs(e[0]) if len(e) > 1 and e[0] else 0.0
    checks = {"energy_monotone": _check("energy_monotone", max(e_excess, 0.0), 1e-12)}
    if with_cert:
        f = np.asarray(report.max_fstar)
        checks["confinement"] = _check("confinement", float(np.max(f) - f[0]), 1e-8)
    if with_phi:
        s = np.asarray(report.max_phi)
        inc = float(np.max(s[1:] / s[:-1] - 1)) if len(s) > 1 else 0.0
        checks["phi_monotone"] = _check("phi_monotone", max(inc, 0.0), 1e-6)
    checks["stationarity"] = _check("stationarity", report.stationarity_residual[-1], stat_tol)
    checks["drift"] = _check("drift", float(np.max(report.drift)), drift_tol)
    return checks


@dataclass
class RunRecord:
    name: str
    config: dict
    report: MonitorReport
    result: RunResult
    u0: np.ndarray
    grid: DomainGrid
    target: EmbeddedTarget
    cert: RegularBallCert | None
    properties: dict[str, PropertyCheck]
    scalars: dict[str, float]
    cert_reports: dict
    wall_time: float
    version: str

    @property
    def final_state(self) -> MapState:
        return self.result.final_state

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.properties.values())

    def flags(self) -> dict[str, bool]:
        return {k: c.passed for k, c in self.properties.items()}

    def series_csv(self) -> str:
        return persist.series_csv_text(self.report)

    def summary(self) -> dict:
        return {
            "name": self.name,
            "config": self.config,
            "version": self.version,
            "passed": self.passed,
            "properties": {k: c.to_dict() for k, c in self.properties.items()},
            "final": self.scalars,
            "stages": [s.to_dict() for s in self.result.stages],
            "abort_reason": self.result.abort_reason,
            "certificate": self.cert_reports,
            "wall_time": self.wall_time,
        }

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        persist.write_series_csv(self.report, out / "series.csv")
        persist.write_summary(self.summary(), out / "summary.json")
        persist.write_final_state(self.final_state.u, out / "final_state.npy")
        return out


def execute(cfg: RunConfig, name: str = "run", prepared: Prepared | None = None) -> RunRecord:
    """Pre-flight, run the flow with a monitor attached, and evaluate the
    per-run properties."""
    pre = prepared or prepare(cfg)
    grid, tgt, cert, fc = pre.grid, pre.target, pre.cert, pre.flow
    t0 = time.perf_counter()
    mon = RunMonitor(grid, tgt, cert)
    result = flow.run(grid, tgt, pre.u0, fc, mon, cert)
    wall = time.perf_counter() - t0
    rep = mon.report
    per_step = fc.scheme == "project" or fc.reproject_every == 1
    with_phi = phi_applicable(grid, cert, fc.p)
    props = series_flags(rep, fc.stat_tol, 1e-12 if per_step else fc.drift_tol, cert is not None, with_phi)
    u_final = result.final_state.u
    ep0 = diagnostics.p_energy(pre.u0, grid, fc.p)
    ep_final = diagnostics.p_energy(u_final, grid, fc.p)
    props["energy_decrease"] = _check("energy_decrease", ep_final - ep0, 0.0)
    if result.abort_reason is not None:
        props["completed"] = PropertyCheck("completed", False, np.nan, 0.0)
    scalars = {
        "steps": result.steps,
        "t_final": result.final_state.t,
        "eps_final": result.final_state.eps,
        "energy_initial": rep.energy[0],
        "energy_final": rep.energy[-1],
        "p_energy_initial": ep0,
        "p_energy_final": ep_final,
        "dissipated": rep.dissipated[-1],
        "dissipation_residual": rep.dissipation_residual[-1],
        "stationarity_residual": rep.stationarity_residual[-1],
        "max_drift": float(np.max(rep.drift)),
        "converged": result.converged,
    }
    return RunRecord(
        name, cfg.to_dict(), rep, result, pre.u0, grid, tgt, cert, props, scalars, pre.cert_reports, wall, version_tag()
    )


# ---------------------------------------------------------------- scenarios


@dataclass
class ScenarioSpec:
    """A desk-scale experiment: base run configuration, named variants and
    the expected properties with their tolerances."""

    identifier: str
    description: str
    domain: dict
    target: dict
    ball: dict | None
    init: dict
    flow: dict
    expected: dict[str, float]
    seed: int = 0
    variants: tuple[tuple[str, dict], ...] = ()

    def base_config(self) -> RunConfig:
        return RunConfig.from_dict(
            {
                "domain": self.domain,
                "target": self.target,
                "ball": self.ball,
                "flow": self.flow,
                "init": self.init,
                "seed": self.seed,
            }
        )

    def run_configs(self) -> list[tuple[str, RunConfig]]:
        base = self.base_config().to_dict()
        if not self.variants:
            return [("base", RunConfig.from_dict(base))]
        return [(name, RunConfig.from_dict(deep_merge(base, patch))) for name, patch in self.variants]


@dataclass
class ScenarioResult:
    spec: ScenarioSpec
    records: dict[str, RunRecord]
    properties: dict[str, PropertyCheck]
    wall_time: float

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.properties.values())

    def failures(self) -> list[str]:
        return [k for k, c in self.properties.items() if not c.passed]

    def summary(self) -> dict:
        return {
            "scenario": self.spec.identifier,
            "description": self.spec.description,
            "seed": self.spec.seed,
            "expected": self.spec.expected,
            "version": version_tag(),
            "passed": self.passed,
            "properties": {k: c.to_dict() for k, c in self.properties.items()},
            "runs": {k: {"passed": r.passed, "final": r.scalars} for k, r in self.records.items()},
            "wall_time": self.wall_time,
        }

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        if len(self.records) == 1:
            (rec,) = self.records.values()
            rec.write(out)
            summary = rec.summary()
            summary.update(self.summary())
            persist.write_summary(summary, out / "summary.json")
        else:
            for name, rec in self.records.items():
                rec.write(out / name)
            persist.write_summary(self.summary(), out / "summary.json")
        return out


def _run_props(records: dict[str, RunRecord], names=None) -> dict[str, PropertyCheck]:
    out = {}
    for name, rec in records.items():
        for key, chk in rec.properties.items():
            if names is None or key in names:
                out[f"{key}:{name}"] = chk
    return out


def _eval_s1(spec: ScenarioSpec, records: dict[str, RunRecord]) -> dict[str, PropertyCheck]:
    return _run_props(records)


def _eval_s2(spec: ScenarioSpec, records: dict[str, RunRecord]) -> dict[str, PropertyCheck]:
    ex = spec.expected
    props = _run_props(records, {"energy_monotone", "confinement", "phi_monotone", "stationarity", "drift"})
    if "null" in records:
        rec = records["null"]
        u = rec.final_state.u
        flat = u.reshape(-1, u.shape[-1])
        spread = float(np.max(np.linalg.norm(flat - flat.mean(axis=0), axis=-1)))
        props["null_constant"] = _check("null_constant", spread, ex["null_constant"])
        ratio = rec.scalars["p_energy_final"] / rec.scalars["p_energy_initial"]
        props["null_energy"] = _check("null_energy", ratio, ex["null_energy"])
    if "wrap" in records:
        rec = records["wrap"]
        exact = rec.u0
        props["wrap_fixed"] = _check("wrap_fixed", flow.sup_distance(rec.final_state.u, exact), ex["wrap_fixed"])
    if "constant" in records:
        rec = records["constant"]
        props["constant_immediate"] = _check("constant_immediate", rec.result.steps, 0)
    return props


def _eval_s3(spec: ScenarioSpec, records: dict[str, RunRecord]) -> dict[str, PropertyCheck]:
    ex = spec.expected
    props = _run_props(records, {"energy_monotone", "stationarity", "drift"})
    names = [n for n, _ in spec.variants]
    for name in names:
        rec = records[name]
        ratio = rec.scalars["p_energy_final"] / rec.scalars["p_energy_initial"]
        props[f"energy_vanishes:{name}"] = _check("energy_vanishes", ratio, ex["energy_vanishes"])
    first = records[names[0]]
    ball = dict(spec.init)
    mask = geometry.periodic_distance(first.grid, ball["centre"]) <= ball["radius"]
    window = tuple(slice(0, n) for n in first.grid.sizes)
    diffs = []
    for a, b in zip(names, names[1:]):
        ua = records[a].final_state.u[window][mask]
        ub = records[b].final_state.u[window][mask]
        diffs.append(flow.sup_distance(ua, ub))
    props["restriction_agreement"] = _check("restriction_agreement", max(diffs), ex["restriction_agreement"])
    growth = max(d1 - d0 for d0, d1 in zip(diffs, diffs[1:])) if len(diffs) > 1 else -1.0
    props["restriction_decreasing"] = _check("restriction_decreasing", growth, 0.0)
    return props


def _eval_s4(spec: ScenarioSpec, records: dict[str, RunRecord]) -> dict[str, PropertyCheck]:
    ex = spec.expected
    props = _run_props(records, {"energy_monotone", "drift"})
    C = ex["C"]
    levels = sorted({int(n.split("_")[1]) for n in records if n.startswith("explicit_") and n.split("_")[1].isdigit()})
    h2 = max(records[f"explicit_{levels[0]}"].grid.spacings) ** 2
    ratios, worst_pair, worst_scheme = [], 0.0, 0.0
    for scheme in ("explicit", "project"):
        d = []
        for k0, k1 in zip(levels, levels[1:]):
            r0, r1 = records[f"{scheme}_{k0}"], records[f"{scheme}_{k1}"]
            dist = flow.sup_distance(r0.final_state.u, r1.final_state.u)
            d.append(dist)
            worst_pair = max(worst_pair, dist / (r0.config["flow"]["dt"] + h2))
        ratios.extend(d0 / d1 for d0, d1 in zip(d, d[1:]))
    for k in levels:
        r0, r1 = records[f"explicit_{k}"], records[f"project_{k}"]
        dist = flow.sup_distance(r0.final_state.u, r1.final_state.u)
        worst_scheme = max(worst_scheme, dist / (r0.config["flow"]["dt"] + h2))
    props["dt_ratio"] = _check("dt_ratio", min(ratios), ex["dt_ratio"], upper=False)
    props["dt_order"] = _check("dt_order", float(np.log2(min(ratios))), ex["dt_order"], upper=False)
    props["dt_pair_bound"] = _check("dt_pair_bound", worst_pair, C)
    props["scheme_pair_bound"] = _check("scheme_pair_bound", worst_scheme, C)
    if "explicit_repeat" in records:
        a, b = records[f"explicit_{levels[0]}"], records["explicit_repeat"]
        same = a.series_csv() == b.series_csv() and np.array_equal(a.final_state.u, b.final_state.u)
        props["determinism"] = PropertyCheck("determinism", same, 0.0 if same else 1.0, 0.0)
    return props


def _eval_s5(spec: ScenarioSpec, records: dict[str, RunRecord]) -> dict[str, PropertyCheck]:
    ex = spec.expected
    props = _run_props(records, {"energy_monotone", "stationarity", "drift"})
    names = [n for n, _ in spec.variants]
    for name in names:
        rec = records[name]
        s = rec.scalars
        gap = s["p_energy_final"] + s["dissipated"] - s["p_energy_initial"]
        props[f"energy_inequality:{name}"] = _check("energy_inequality", gap, ex["energy_inequality"])
        reg = s["energy_final"] + s["dissipated"] - s["energy_initial"]
        props[f"energy_inequality_regularised:{name}"] = _check(
            "energy_inequality_regularised", reg, ex["energy_inequality"]
        )
    a, b = records[names[0]], records[names[1]]
    props["state_agreement"] = _check(
        "state_agreement", flow.sup_distance(a.final_state.u, b.final_state.u), ex["state_agreement"]
    )
    ea, eb = a.scalars["energy_final"], b.scalars["energy_final"]
    props["energy_agreement"] = _check("energy_agreement", abs(ea - eb) / abs(eb), ex["energy_agreement"])
    return props


EVALUATORS: dict[str, Callable[[ScenarioSpec, dict], dict]] = {
    "S1": _eval_s1,
    "S2": _eval_s2,
    "S3": _eval_s3,
    "S4": _eval_s4,
    "S5": _eval_s5,
}


def run_scenario(spec: ScenarioSpec, out_dir=None) -> ScenarioResult:
    t0 = time.perf_counter()
    records = {name: execute(cfg, name) for name, cfg in spec.run_configs()}
    props = EVALUATORS[spec.identifier](spec, records)
    result = ScenarioResult(spec, records, props, time.perf_counter() - t0)
    if out_dir is not None:
        result.write(out_dir)
    return result


# ------------------------------------------------------- scenario catalogue

_TWO_PI = 2 * np.pi
S1_EPS = {2: [1e-2, 1e-4], 3: [1e-1, 1e-2, 1e-3]}
S1_T_END = {2: 50.0, 3: 400.0}


def scenario_S1_compact_cap(p: float | None = None, seed: int = 1, r: float | None = None, m: int = 2, n: int = 32) -> ScenarioSpec:
    """Torus into a geodesic cap of S^2; ``p=None`` runs both p = 2 and p = 3."""
    ps = (2, 3) if p is None else (p,)
    variants = []
    for pp in ps:
        r_max = target.max_admissible_cap_radius(pp, m)
        rp = 0.9 * r_max if r is None else float(r)
        if not 0 < rp < r_max:
            raise InfeasibleCertificate(
                f"cap radius {rp:.6g} is not below the admissible radius {r_max:.7g} for p={pp}, m={m}"
            )
        eps = S1_EPS.get(pp, [1e-1, 1e-2, 1e-3])
        t_end = S1_T_END.get(pp, 400.0)
        variants.append((f"p{pp:g}", {"ball": {"r": rp}, "flow": {"p": pp, "eps_list": eps, "t_end": t_end}}))
    return ScenarioSpec(
        identifier="S1",
        description="flat torus into a regular geodesic cap of S^2: global existence and convergence",
        domain={"type": "flat_torus", "m": m, "n": n, "period": _TWO_PI},
        target={"type": "sphere", "params": {"n": 2}},
        ball={"type": "cap", "r": variants[0][1]["ball"]["r"]},
        init={"generator": "cap", "K": 3, "margin": 1e-3, "ref_n": 32},
        flow={"p": ps[0], "eps_list": [1e-2], "dt_safety": 0.25, "t_end": 50.0, "stat_tol": 1e-6},
        expected={"energy_monotone": 1e-12, "confinement": 1e-8, "phi_monotone": 1e-6, "stationarity": 1e-6},
        seed=seed,
        variants=tuple(variants),
    )


def scenario_S2_nonpositive_target(seed: int = 0, n: int = 32) -> ScenarioSpec:
    """Torus into the flat Clifford torus with the trivial certificate."""
    return ScenarioSpec(
        identifier="S2",
        description="maps into a nonpositively curved target: null-homotopic data flow to constants",
        domain={"type": "flat_torus", "m": 2, "n": n, "period": _TWO_PI},
        target={"type": "clifford"},
        ball={"type": "trivial", "a": 2.0},
        init={"generator": "angles"},
        flow={"p": 2, "eps_list": [1e-2], "dt_safety": 0.25, "t_end": 400.0, "stat_tol": 1e-8},
        expected={"null_constant": 1e-4, "null_energy": 1e-8, "wrap_fixed": 1e-3},
        seed=seed,
        variants=(
            ("null", {"init": {"alpha": [[0.5, [1, 0], 0.0]]}}),
            ("wrap", {"init": {"alpha_winding": [1, 0]}}),
            ("constant", {"init": {"generator": "constant", "point": [1, 0, 1, 0]}}),
        ),
    )


def scenario_S3_liouville_proxy(seed: int = 0, sizes=(1, 2, 4), n0: int = 16) -> ScenarioSpec:
    """Fixed compact bump on flat tori of periods 2 pi k at a common spacing."""
    variants = tuple(
        (f"L{k}", {"domain": {"n": n0 * k, "period": _TWO_PI * k}}) for k in sizes
    )
    return ScenarioSpec(
        identifier="S3",
        description="Liouville / exhaustion proxy on expanding flat tori",
        domain={"type": "flat_torus", "m": 2, "n": n0, "period": _TWO_PI},
        target={"type": "clifford"},
        ball={"type": "trivial", "a": 2.0},
        init={"generator": "bump", "centre": [np.pi, np.pi], "radius": 1.2, "amplitude": 0.0273},
        flow={"p": 2, "eps_list": [1e-2], "dt_safety": 0.9, "t_end": 5000.0, "stat_tol": 1e-7},
        expected={"energy_vanishes": 1e-8, "restriction_agreement": 1e-3},
        seed=seed,
        variants=variants,
    )


S4_ALPHA = [[0.4, [1, 1], 0.0], [0.4, [1, -1], 0.0]]
S4_BETA = [[0.5, [1, 1], np.pi / 2]]


def scenario_S4_uniqueness(seed: int = 0, n: int = 32, levels: int = 3, t_end: float = 0.5) -> ScenarioSpec:
    """Scheme and dt pairs from one initial map; dt is fixed per run."""
    p, eps = 3, 1e-2
    domain = {"type": "flat_torus", "m": 2, "n": n, "period": _TWO_PI}
    init = {"generator": "angles", "alpha": S4_ALPHA, "beta": S4_BETA}
    grid = build_domain(domain)
    tgt = target.make_clifford_torus()
    u0 = build_initial(RunConfig.from_dict({"domain": domain, "target": {"type": "clifford"}, "flow": {}, "init": init}), grid, tgt)
    dt0 = flow.cfl_dt(MapState(u0, 0.0, eps, p), grid, FlowConfig(p=p, eps_list=[eps], dt_safety=0.25))
    variants = []
    for scheme in ("explicit", "project"):
        for k in range(levels):
            variants.append((f"{scheme}_{k}", {"flow": {"scheme": scheme, "dt": dt0 / 2**k}}))
    variants.append(("explicit_repeat", {"flow": {"scheme": "explicit", "dt": dt0}}))
    return ScenarioSpec(
        identifier="S4",
        description="uniqueness and stability: scheme and dt refinement pairs",
        domain=domain,
        target={"type": "clifford"},
        ball=None,
        init=init,
        flow={"p": p, "eps_list": [eps], "t_end": t_end, "stat_tol": 0.0},
        expected={"dt_ratio": 1.7, "dt_order": 1.0, "C": 1.0},
        seed=seed,
        variants=tuple(variants),
    )


S5_ALPHA = [[0.5, [1, 0], 0.0], [0.075, [1, 1], 0.0], [0.075, [1, -1], 0.0]]
S5_BETA = [[0.3, [0, 1], 0.0]]
S5_SCHEDULES = {"A": [1e-1, 1e-2, 1e-3, 1e-4], "B": [1e-2, 1e-3, 1e-4]}


def scenario_S5_epsilon_limit(seed: int = 0, n: int = 16, p: float = 3) -> ScenarioSpec:
    """Two eps-continuation schedules from one symmetric initial map."""
    return ScenarioSpec(
        identifier="S5",
        description="eps -> 0 continuation: schedule independence and the energy inequality",
        domain={"type": "flat_torus", "m": 2, "n": n, "period": _TWO_PI},
        target={"type": "clifford"},
        ball=None,
        init={"generator": "angles", "alpha": S5_ALPHA, "beta": S5_BETA},
        flow={"p": p, "eps_list": [1e-2], "dt_safety": 0.25, "t_end": 3000.0, "stat_tol": 1e-9},
        expected={"state_agreement": 1e-4, "energy_agreement": 1e-6, "energy_inequality": 1e-8},
        seed=seed,
        variants=tuple((k, {"flow": {"eps_list": v}}) for k, v in S5_SCHEDULES.items()),
    )


SCENARIOS: dict[str, Callable[..., ScenarioSpec]] = {
    "S1": scenario_S1_compact_cap,
    "S2": scenario_S2_nonpositive_target,
    "S3": scenario_S3_liouville_proxy,
    "S4": scenario_S4_uniqueness,
    "S5": scenario_S5_epsilon_limit,
}


def get_scenario(identifier: str, **kwargs) -> ScenarioSpec:
    key = identifier.upper()
    if key not in SCENARIOS:
        raise ConfigError(f"unknown scenario {identifier!r}; choose from {sorted(SCENARIOS)}")
    return SCENARIOS[key](**kwargs)
