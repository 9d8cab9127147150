"""JSON run configuration and the builders that turn it into grids, targets,
certificates, flow settings and initial maps."""
from __future__ import annotations

import copy
import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import geometry, initial, target
from .flow import FlowConfig
from .geometry import DomainGrid
from .target import EmbeddedTarget, RegularBallCert

TOP_LEVEL_KEYS = ("domain", "target", "ball", "flow", "init", "output", "seed")
_FLOW_KEYS = {f.name for f in dataclasses.fields(FlowConfig)}


class ConfigError(ValueError):
    """Invalid or unreadable configuration (CLI exit code 2)."""


class InfeasibleCertificate(ConfigError):
    """The requested certificate does not validate or is not admissible."""


@dataclass
class RunConfig:
    domain: dict
    target: dict
    flow: dict
    init: dict = field(default_factory=dict)
    ball: dict | None = None
    output: dict = field(default_factory=dict)
    seed: int = 0

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        unknown = set(data) - set(TOP_LEVEL_KEYS)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        for key in ("domain", "target", "flow"):
            if not isinstance(data.get(key), dict):
                raise ConfigError(f"missing or invalid '{key}' section")
        ball = data.get("ball")
        if ball is not None and not isinstance(ball, dict):
            raise ConfigError("'ball' must be an object or null")
        seed = data.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise ConfigError("'seed' must be an integer")
        cfg = cls(
            domain=copy.deepcopy(data["domain"]),
            target=copy.deepcopy(data["target"]),
            flow=copy.deepcopy(data["flow"]),
            init=copy.deepcopy(data.get("init") or {}),
            ball=copy.deepcopy(ball),
            output=copy.deepcopy(data.get("output") or {}),
            seed=seed,
        )
        unknown_flow = set(cfg.flow) - _FLOW_KEYS
        if unknown_flow:
            raise ConfigError(f"unknown flow keys: {sorted(unknown_flow)}")
        return cfg

    def to_dict(self) -> dict:
        return {
            "domain": copy.deepcopy(self.domain),
            "target": copy.deepcopy(self.target),
            "ball": copy.deepcopy(self.ball),
            "flow": copy.deepcopy(self.flow),
            "init": copy.deepcopy(self.init),
            "output": copy.deepcopy(self.output),
            "seed": self.seed,
        }


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"configuration {path} is not valid JSON: {exc}") from exc
    return RunConfig.from_dict(data)


def deep_merge(base: dict, patch: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in patch.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def build_domain(spec: dict) -> DomainGrid:
    kind = spec.get("type", "flat_torus")
    try:
        m = int(spec.get("m", 2))
        n = int(spec["n"])
        period = float(spec.get("period", 2 * np.pi))
        if kind == "flat_torus":
            return geometry.build_flat_torus(m, n, period)
        if kind == "conformal_torus":
            return geometry.build_conformal_torus(
                m, n, period, float(spec.get("amplitude", 0.1)), float(spec.get("ricci_lower_bound", 0.0))
            )
    except KeyError as exc:
        raise ConfigError(f"domain is missing {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"invalid domain: {exc}") from exc
    raise ConfigError(f"unknown domain type {kind!r}")


def build_target(spec: dict) -> EmbeddedTarget:
    try:
        return target.make_target(spec["type"], **(spec.get("params") or {}))
    except KeyError as exc:
        raise ConfigError(f"target is missing {exc}") from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def build_flow(spec: dict) -> FlowConfig:
    try:
        return FlowConfig(**spec)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid flow settings: {exc}") from exc


def build_cert(ball: dict | None, tgt: EmbeddedTarget) -> RegularBallCert | None:
    """``None`` -> no certificate; ``{"type": "trivial"}`` -> ``f = f* = 1``;
    otherwise a geodesic cap ``{r, r1?, a?, centre?}`` of a sphere target."""
    if ball is None:
        return None
    kind = ball.get("type", "cap")
    try:
        if kind == "trivial":
            return target.trivial_cert(tgt, a=float(ball.get("a", 2.0)))
        if kind != "cap":
            raise ConfigError(f"unknown ball type {kind!r}")
        if not tgt.name.startswith("sphere"):
            raise ConfigError("cap certificates need a sphere target")
        r = float(ball["r"])
        r1 = ball.get("r1")
        centre = ball.get("centre")
        cert = target.sphere_cap_cert(
            tgt.intrinsic_dim,
            r,
            r1=None if r1 is None else float(r1),
            centre=None if centre is None else np.asarray(centre, dtype=float),
        )
    except KeyError as exc:
        raise ConfigError(f"ball is missing {exc}") from exc
    except ValueError as exc:
        raise InfeasibleCertificate(str(exc)) from exc
    if "a" in ball:
        a = float(ball["a"])
        if not 0 < a <= cert.a:
            raise InfeasibleCertificate(f"ball a={a} must lie in (0, r^2 = {cert.a}]")
        cert = dataclasses.replace(cert, a=a)
    return cert


def build_initial(cfg: RunConfig, grid: DomainGrid, tgt: EmbeddedTarget) -> np.ndarray:
    spec = cfg.init
    if not spec:
        if cfg.ball is not None and cfg.ball.get("type", "cap") == "cap":
            spec = {"generator": "cap"}
        else:
            raise ConfigError("'init' is required unless a cap ball is given")
    try:
        return initial.make_initial(spec, grid, tgt, seed=cfg.seed, cap=cfg.ball)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid initial map: {exc}") from exc
