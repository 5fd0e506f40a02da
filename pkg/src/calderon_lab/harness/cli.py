"""Command-line entry point.

Verbs:
    eigs         first eigenvalues of the effective potential of a config
    deform       deformed potentials for every (k, t) in a config
    dn           per-harmonic DN block table
    gauge-solve  conformal factor for the configured boundary data
    scenario     run one named scenario end to end, emit a report
    selftest     quick closed-form sanity checks

All verbs accept --config PATH (JSON); scenario falls back to the stock
configuration of the requested name when no config is given.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

import numpy as np

from ..dnmap import dn_block_batch
from ..geometry import effective_potential, transverse_spectrum
from ..sturm import characteristic, dirichlet_spectrum, weyl_functions
from ..grid import GridFunction
from ..yamabe import solve_gauge_factor
from .cache import SpectralCache
from .config import SCENARIOS, ScenarioConfig, default_config
from .report import emit_report, fmt
from .scenarios import run_scenario, _deformed_family


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--grid", type=int, help="override grid size")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--cache", help="cache directory (or CALDERON_CACHE)")
    p.add_argument("--modes", type=int, help="override synthesis modes per axis")
    p.add_argument("--jobs", type=int, default=1, help="worker threads")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="calderon-lab",
        description="DN maps, isospectral deformations and conformal gauges "
        "on warped cylinders",
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in ("eigs", "deform", "dn", "gauge-solve", "selftest"):
        _add_common(sub.add_parser(verb))
    ps = sub.add_parser("scenario")
    ps.add_argument("name", choices=SCENARIOS)
    _add_common(ps)
    ps.add_argument("--count", type=int, help="override spectrum count")
    sub.choices["eigs"].add_argument("--count", type=int, default=10)
    return parser


def _load_config(args, fallback_scenario: str = "q3") -> ScenarioConfig:
    if args.config:
        config = ScenarioConfig.load(args.config)
    else:
        config = default_config(getattr(args, "name", None) or fallback_scenario)
    if args.grid:
        config.grid_size = args.grid
    if args.modes:
        config.n_modes = args.modes
    return config


def _write_csv(path: str, header, rows) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")
    print(path)


def cmd_eigs(args) -> int:
    config = _load_config(args)
    Q = effective_potential(config.profile(), config.potential(), config.lam)
    cache = SpectralCache(args.cache)
    spectrum = cache.dirichlet_spectrum(Q, args.count)
    _write_csv(
        os.path.join(args.out, "eigenvalues.csv"),
        ["k", "alpha", "eigenvalue"],
        [[k + 1, a, -a] for k, a in enumerate(spectrum.alphas)],
    )
    return 0


def cmd_deform(args) -> int:
    config = _load_config(args)
    if not config.deformations:
        print("config has no deformations", file=sys.stderr)
        return 2
    f, V = config.profile(), config.potential()
    family = _deformed_family(config, f, V, SpectralCache(args.cache))
    x = V.x
    header = ["x", "V"] + [f"V_k{k}_t{t:+g}" for k, t, _ in family]
    rows = [
        [x[i], V.values[i]] + [vd.values[i] for _, _, vd in family]
        for i in range(x.size)
    ]
    _write_csv(os.path.join(args.out, "deformed_potentials.csv"), header, rows)
    return 0


def cmd_dn(args) -> int:
    config = _load_config(args)
    f, V = config.profile(), config.potential()
    tsp = transverse_spectrum(config.spectrum_label, config.spectrum_count)
    blocks = dn_block_batch(f, V, config.lam, tsp.mus)
    _write_csv(
        os.path.join(args.out, "dn_blocks.csv"),
        ["mu", "a00", "a01", "a10", "a11"],
        [[b.mu, b.a00, b.a01, b.a10, b.a11] for b in blocks],
    )
    return 0


def cmd_gauge_solve(args) -> int:
    config = _load_config(args, fallback_scenario="gauge")
    f = config.profile()
    c = solve_gauge_factor(f, config.n_dim, config.lam, config.eta0, config.eta1)
    _write_csv(
        os.path.join(args.out, "gauge_factor.csv"),
        ["x", "c", "dc", "d2c"],
        [[x, cv, dv, d2v] for x, cv, dv, d2v in zip(
            c.c.x, c.c.values, c.dc.values, c.d2c.values)],
    )
    return 0


def cmd_scenario(args) -> int:
    config = _load_config(args)
    if config.scenario != args.name:
        print(
            f"config is for scenario {config.scenario!r}, not {args.name!r}",
            file=sys.stderr,
        )
        return 2
    if getattr(args, "count", None):
        config.spectrum_count = args.count
    started = time.time()
    report = run_scenario(config, jobs=args.jobs, cache=SpectralCache(args.cache))
    paths = emit_report(report, args.out)
    print(f"runtime: {time.time() - started:.1f}s", file=sys.stderr)
    for p in paths:
        print(p)
    for a in report.assertions:
        status = "PASS" if a.passed else "FAIL"
        print(f"{status} {a.name}")
    return 0 if report.passed else 1


def cmd_selftest(args) -> int:
    n = args.grid or 2049
    Q = GridFunction.constant(0.0, n)
    failures = 0

    def check(label, got, want, tol):
        nonlocal failures
        err = abs(got - want) / max(1.0, abs(want))
        ok = err <= tol
        failures += 0 if ok else 1
        print(f"{'PASS' if ok else 'FAIL'} {label}: error {err:.3e}")

    delta = characteristic(Q, 4.0)
    check("characteristic at mu=4", delta.value, math.sinh(2.0) / 2.0, 1e-10)
    m, nf = weyl_functions(Q, 4.0)
    check("Weyl function at mu=4", m, -2.0 / math.tanh(2.0), 1e-10)
    check("Weyl symmetry", nf, m, 1e-10)
    spectrum = dirichlet_spectrum(Q, 3)
    for k in (1, 2, 3):
        check(
            f"eigenvalue {k}",
            float(spectrum.alphas[k - 1]),
            -(k * math.pi) ** 2,
            1e-9,
        )
    print("selftest:", "PASS" if failures == 0 else f"FAIL ({failures})")
    return 0 if failures == 0 else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.cache:
        os.environ.setdefault("CALDERON_CACHE", args.cache)
    handlers = {
        "eigs": cmd_eigs,
        "deform": cmd_deform,
        "dn": cmd_dn,
        "gauge-solve": cmd_gauge_solve,
        "scenario": cmd_scenario,
        "selftest": cmd_selftest,
    }
    return handlers[args.verb](args)


if __name__ == "__main__":
    sys.exit(main())
