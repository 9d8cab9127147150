"""Command line interface: ``pflow cert|run|scenario|sweep``.

Exit codes: 0 when every evaluated property passes, 1 on a property failure,
2 on a configuration error (unknown flags, unreadable config, infeasible
certificate).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import harness, target
from .config import ConfigError, load_config

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

log = logging.getLogger("pflow")


def _print_props(props: dict) -> None:
    width = max((len(k) for k in props), default=0)
    for name, chk in props.items():
        status = "PASS" if chk.passed else "FAIL"
        print(f"  {name:<{width}}  {status}  value={chk.value:.6g}  tol={chk.tol:.3g}")


def cmd_cert(args) -> int:
    tgt = target.make_target(args.target, **({"n": 2} if args.target == "sphere" else {}))
    p, m = args.p, args.m
    dp = target.delta_p(m, p)
    rows: list[tuple[str, str]] = [("target", tgt.name), ("m", str(m)), ("p", f"{p:g}"), ("delta_p", f"{dp:.6f}")]
    if tgt.name.startswith("sphere"):
        if args.r is None:
            raise ConfigError("--r is required for sphere caps")
        r = args.r
        if not 0 < r < np.pi / 2:
            raise ConfigError(f"cap radius must lie in (0, pi/2), got {r}")
        dstar, r1 = target.best_cap_delta(r)
        dgrid, r1grid = target.cap_delta_grid_search(r)
        cert = target.sphere_cap_cert(tgt.intrinsic_dim, r, r1=r1, delta=dstar)
        r_max = target.max_admissible_cap_radius(p, m)
        rows += [
            ("r", f"{r:g}"),
            ("r1*", f"{r1:.6f}"),
            ("delta* (closed form)", f"{dstar:.6f}"),
            ("delta* (grid search)", f"{dgrid:.6f}"),
            ("r_max(p, m)", f"{r_max:.7f}"),
        ]
    else:
        cert = target.trivial_cert(tgt)
    c1 = target.verify_regular_set(cert, tgt)
    c2 = target.verify_sublevel(cert, tgt)
    admissible = c1.passed and c2.passed and cert.delta > dp + 1e-9
    rows += [
        ("c1 (regular set)", f"{'PASS' if c1.passed else 'FAIL'}  min eig {c1.min_eigenvalue:.3e}"),
        ("c2 (sublevel convexity)", f"{'PASS' if c2.passed else 'FAIL'}  min eig {c2.min_eigenvalue:.3e}"),
        ("verdict", "ADMISSIBLE" if admissible else "NOT ADMISSIBLE"),
    ]
    if args.json:
        payload = {
            "target": tgt.name,
            "m": m,
            "p": p,
            "delta": cert.delta,
            "delta_p": dp,
            "c1": c1.to_dict(),
            "c2": c2.to_dict(),
            "admissible": bool(admissible),
        }
        if tgt.name.startswith("sphere"):
            payload.update(r=r, r1=r1, delta_grid=dgrid, r_max=r_max)
        print(json.dumps(payload, indent=2))
    else:
        width = max(len(k) for k, _ in rows)
        for k, v in rows:
            print(f"{k:<{width}}  {v}")
    return EXIT_OK if admissible else EXIT_FAIL


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.p is not None:
        cfg.flow["p"] = args.p
    out = args.out or cfg.output.get("dir")
    rec = harness.execute(cfg, name=Path(args.config).stem)
    if out:
        rec.write(out)
    print(f"run {rec.name}: steps={rec.result.steps} t={rec.final_state.t:.6g} wall={rec.wall_time:.2f}s")
    _print_props(rec.properties)
    return EXIT_OK if rec.passed else EXIT_FAIL


def _scenario_kwargs(identifier: str, args) -> dict:
    kw = {}
    if args.seed is not None:
        kw["seed"] = args.seed
    s1_only = {"p": args.p, "r": args.r, "m": args.m}
    given = {k: v for k, v in s1_only.items() if v is not None}
    if given and identifier.upper() != "S1":
        raise ConfigError(f"flags {sorted('--' + k for k in given)} apply to scenario S1 only")
    kw.update(given)
    return kw


def _run_one(identifier: str, kwargs: dict, out) -> tuple[str, bool, list[str], float]:
    spec = harness.get_scenario(identifier, **kwargs)
    res = harness.run_scenario(spec, out)
    return spec.identifier, res.passed, res.failures(), res.wall_time


def cmd_scenario(args) -> int:
    spec = harness.get_scenario(args.id, **_scenario_kwargs(args.id, args))
    res = harness.run_scenario(spec, args.out)
    print(f"scenario {spec.identifier}: {spec.description} (wall {res.wall_time:.1f}s)")
    _print_props(res.properties)
    return EXIT_OK if res.passed else EXIT_FAIL


def cmd_sweep(args) -> int:
    ids = [i.upper() for i in (args.ids or sorted(harness.SCENARIOS))]
    for i in ids:
        if i not in harness.SCENARIOS:
            raise ConfigError(f"unknown scenario {i!r}")
    kwargs = {i: ({"seed": args.seed} if args.seed is not None else {}) for i in ids}
    outs = {i: (Path(args.out) / i if args.out else None) for i in ids}
    ok = True
    with ProcessPoolExecutor(max_workers=args.jobs) as pool:
        futures = [pool.submit(_run_one, i, kwargs[i], outs[i]) for i in ids]
        for fut in futures:
            ident, passed, failures, wall = fut.result()
            ok &= passed
            detail = "" if passed else "  failed: " + ", ".join(failures)
            print(f"{ident}  {'PASS' if passed else 'FAIL'}  wall {wall:.1f}s{detail}")
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pflow", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("cert", help="certify a geodesic cap (or the trivial ball) and compare with delta_p")
    c.add_argument("--target", choices=["sphere", "clifford"], default="sphere")
    c.add_argument("--p", type=float, default=2.0)
    c.add_argument("--m", type=int, default=2)
    c.add_argument("--r", type=float)
    c.add_argument("--json", action="store_true", help="print the table as JSON")
    c.set_defaults(func=cmd_cert)

    r = sub.add_parser("run", help="run one flow from a JSON configuration")
    r.add_argument("--config", required=True)
    r.add_argument("--out")
    r.add_argument("--seed", type=int)
    r.add_argument("--p", type=float)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("scenario", help="run one catalogue scenario (S1-S5)")
    s.add_argument("id")
    s.add_argument("--out")
    s.add_argument("--seed", type=int)
    s.add_argument("--p", type=float)
    s.add_argument("--m", type=int)
    s.add_argument("--r", type=float)
    s.set_defaults(func=cmd_scenario)

    w = sub.add_parser("sweep", help="run several scenarios concurrently")
    w.add_argument("ids", nargs="*")
    w.add_argument("--out")
    w.add_argument("--seed", type=int)
    w.add_argument("--jobs", type=int, default=None)
    w.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
