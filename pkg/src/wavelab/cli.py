"""Command-line entry point.

Exit codes: 0 ok, 2 config error, 3 breaking detected, 4 numerical failure,
5 verification failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load, with_overrides
from .ics import Gaussian, RandomSobolev, Sech2, Sine
from .kato import (SampleSpec, a2_operator_ratio, accretivity_pairs, b_bound_ratio,
                   b_difference_ratio, commutator_estimate_ratio, continuous_dependence,
                   f_lipschitz_ratio, product_estimate_ratio)
from .model import FluxVariant, equivalence_residual
from .spectral import Field, Grid, multiplier_inequality_check, resolution_fraction, sobolev_norm
from .timestep import Method, Termination, integrate, observed_order

log = logging.getLogger("wavelab")

EXIT_OK, EXIT_CONFIG, EXIT_BREAKING, EXIT_NUMERICAL, EXIT_VERIFY = 0, 2, 3, 4, 5
RESOLUTION_WARN = 1e-8
MONITOR_COLUMNS = ("t", "dt", "mass", "l2", "hs", "min_ux", "max_abs_u")
INEQUALITY_GRID = [(mu, beta) for mu in (0.01, 0.05, 0.1) for beta in (-0.5, -1.0, -2.0)]
SPATIAL_TOL = 1e-8
ORDER_WINDOW = (3.8, 4.2)


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    atomic_write(path, buf.getvalue())


def _json_safe(obj):
    if isinstance(obj, float) and not np.isfinite(obj):
        return None if np.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.generic):
        return _json_safe(obj.item())
    return obj


def write_run_record(out: Path, cfg: RunConfig, started: float, termination: str,
                     breaking_time=None, final_norms=None, warnings=(), **extra) -> None:
    rec = {
        "version": __version__,
        "config_digest": cfg.digest(),
        "start_time": started,
        "end_time": time.time(),
        "termination": termination,
        "breaking_time": breaking_time,
        "final_norms": final_norms or {},
        "warnings": list(warnings),
    }
    rec.update(extra)
    atomic_write(out / "run.json", json.dumps(_json_safe(rec), indent=2) + "\n")


def _resolution_warnings(u0: Field) -> list[str]:
    frac = resolution_fraction(u0)
    if frac > RESOLUTION_WARN:
        return [f"initial condition under-resolved: {frac:.3e} of spectral energy "
                f"above the 2/3 cutoff at n={u0.grid.n}"]
    return []


def _final_norms(u: Field, s: float) -> dict:
    return {"mass": u.integral(), "l2": sobolev_norm(u, 0), "hs": sobolev_norm(u, s)}


# -- commands ------------------------------------------------------------------

def cmd_solve(cfg: RunConfig, out: Path) -> int:
    started = time.time()
    grid = cfg.grid.build()
    u0 = _build_ic(cfg.ic, grid)
    warnings = _resolution_warnings(u0)
    traj = integrate(u0, cfg.params, cfg.stepper, cfg.rhs, monitor_s=cfg.outputs.monitor_s)

    write_csv(out / "monitors.csv", MONITOR_COLUMNS,
              ([getattr(m, c) for c in MONITOR_COLUMNS] for m in traj.monitors))
    if cfg.outputs.write_snapshots:
        snapdir = out / "snapshots"
        index = []
        for i, (t, u) in enumerate(zip(traj.times, traj.snapshots)):
            name = f"snap_{i:05d}.csv"
            write_csv(snapdir / name, ("x", "u"), zip(grid.x, u.values))
            index.append((i, t, name))
        write_csv(snapdir / "index.csv", ("index", "t", "file"), index)

    write_run_record(out, cfg, started, traj.termination.value, traj.breaking_time,
                     _final_norms(traj.final, cfg.outputs.monitor_s), warnings,
                     t_final=traj.t_final, n_steps=len(traj.monitors) - 1)
    log.info("solve: %s at t=%g", traj.termination.value, traj.t_final)
    if traj.termination is Termination.REACHED_T_END:
        return EXIT_OK
    if traj.termination is Termination.BREAKING_DETECTED:
        return EXIT_BREAKING
    return EXIT_NUMERICAL


def _sample_spec(cfg: RunConfig, s: float, radius: float | None = None) -> SampleSpec:
    h = cfg.harness
    return SampleSpec(s=s, radius=h.radius if radius is None else radius,
                      n_samples=h.n_samples, seed=h.seed, spectral_decay_margin=h.margin)


def cmd_verify_lemmas(cfg: RunConfig, out: Path) -> int:
    started = time.time()
    grid = cfg.grid.build()
    p = cfg.params
    h = cfg.harness
    records: list[dict] = []
    failures: list[str] = []

    def check(rec: dict, ok: bool):
        rec["passed"] = bool(ok)
        records.append(rec)
        if not ok:
            where = [f"{k}={rec[k]:g}" for k in ("s", "radius") if k in rec]
            failures.append(rec["label"] + (f"[{','.join(where)}]" if where else ""))
        log.info("%-40s %s", rec["label"], "ok" if ok else "FAIL")

    pairs = sorted(set(INEQUALITY_GRID) | {(p.mu, p.beta)})
    for mu, beta in pairs:
        r = multiplier_inequality_check(mu, beta, h.xi_max, h.inequality_samples)
        check({"label": f"multiplier_inequality_mu={mu:g}_beta={beta:g}", "mu": mu,
               "beta": beta, "max_ratio": r.max_ratio, "n_samples": r.n_samples,
               "violations": r.n_violations}, r.passed)

    acc = accretivity_pairs(grid, _sample_spec(cfg, max(h.s_values)), h.accretivity_pairs)
    check(acc.to_record(), acc.identity_holds and acc.bound_holds)

    for s in h.s_values:
        spec = _sample_spec(cfg, s)
        reports = [a2_operator_ratio(spec, grid), b_bound_ratio(spec, grid),
                   b_difference_ratio(spec, grid)]
        reports += [product_estimate_ratio(spec, grid, t)
                    for t in (-1.0, 0.0, 1.0, 2.0) if -s < t <= s]
        b = s - 1.0
        for st, tt in ((0.0, b), (b, -b), (-b, b), (0.0, 0.0)):
            reports.append(commutator_estimate_ratio(spec, grid, st, tt))
        for rep in reports:
            check(rep.to_record(), rep.stable)
        for v in FluxVariant:
            for norm in (0.0, "s"):
                sweep = [f_lipschitz_ratio(_sample_spec(cfg, s, rad), grid, p, v, norm)
                         for rad in h.radii]
                for rep in sweep:
                    check(rep.to_record(), rep.stable)
                medians = [rep.median_ratio for rep in sweep]
                monotone = all(a <= b_ for a, b_ in zip(medians, medians[1:]))
                rec = {"label": f"{sweep[0].label}_radius_sweep", "s": s,
                       "radii": list(h.radii), "medians": medians, "monotone": monotone}
                # recorded as data; the exit code covers stability only
                rec["passed"] = monotone
                records.append(rec)

    u0 = Gaussian(amp=0.1).build(grid)
    stepper = replace(cfg.stepper, method=Method.RK4_FIXED)
    cd = continuous_dependence(u0, h.continuity_deltas, p, stepper, h.continuity_T,
                               s=max(h.s_values), seed=h.seed)
    rec = cd.to_record()
    rec["passed"] = cd.bounded and cd.converging
    records.append(rec)

    atomic_write(out / "lemmas.jsonl",
                 "".join(json.dumps(_json_safe(r)) + "\n" for r in records))
    write_run_record(out, cfg, started, "failed" if failures else "passed",
                     failures=failures)
    if failures:
        print("verification failed: " + ", ".join(failures), file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def _build_ic(ic, grid: Grid) -> Field:
    try:
        return ic.build(grid)
    except (ValueError, OSError) as err:
        raise ConfigError(f"cannot build initial condition: {err}", "ic")


def spatial_error(cfg: RunConfig) -> float:
    """Relative L2 gap between the n_coarse solution and the n_fine reference."""
    c = cfg.convergence
    stepper = replace(cfg.stepper, method=Method.RK4_FIXED, dt=c.dt_space, t_end=c.t_end,
                      dt_min=min(cfg.stepper.dt_min, c.dt_space / 10),
                      snapshot_stride=10**9, slope_threshold=np.inf)
    finals = []
    for n in (c.n_coarse, c.n_fine):
        grid = Grid(cfg.grid.length, n)
        finals.append(integrate(_build_ic(cfg.ic, grid), cfg.params, stepper, cfg.rhs).final)
    coarse, fine = finals
    fc = np.fft.fft(fine.values) / fine.grid.n
    keep = np.zeros(coarse.grid.n, dtype=complex)
    idx = coarse.grid.index
    keep[:] = fc[idx % fine.grid.n]
    keep[coarse.grid.nyquist] = 0.0
    projected = Field(coarse.grid, np.fft.ifft(keep * coarse.grid.n).real)
    return sobolev_norm(coarse - projected, 0) / sobolev_norm(fine, 0)


def cmd_convergence(cfg: RunConfig, out: Path) -> int:
    started = time.time()
    if cfg.stepper.method is not Method.RK4_FIXED:
        print("convergence: stepper.method must be 'rk4' (fixed step)", file=sys.stderr)
        return EXIT_CONFIG
    c = cfg.convergence
    grid = cfg.grid.build()
    u0 = _build_ic(cfg.ic, grid)
    warnings = _resolution_warnings(u0)
    stepper = replace(cfg.stepper, t_end=c.t_end, dt=min(cfg.stepper.dt, c.t_end))
    order = observed_order(u0, cfg.params, stepper, c.dts, cfg.rhs)
    serr = spatial_error(cfg)
    rows = [("time", dt, err, order.slope) for dt, err in zip(order.dts, order.errors)]
    rows.append(("space", c.n_coarse, serr, ""))
    write_csv(out / "convergence.csv", ("kind", "resolution", "error", "slope"), rows)
    ok_time = ORDER_WINDOW[0] <= order.slope <= ORDER_WINDOW[1]
    ok_space = serr <= SPATIAL_TOL
    write_run_record(out, cfg, started, "passed" if ok_time and ok_space else "failed",
                     warnings=warnings, temporal_slope=order.slope, spatial_error=serr)
    log.info("convergence: slope=%.4f spatial=%.3e", order.slope, serr)
    if not ok_time:
        print(f"convergence failed: temporal slope {order.slope:.4f} outside {ORDER_WINDOW}",
              file=sys.stderr)
    if not ok_space:
        print(f"convergence failed: spatial error {serr:.3e} > {SPATIAL_TOL}", file=sys.stderr)
    return EXIT_OK if ok_time and ok_space else EXIT_VERIFY


def equivalence_battery(grid: Grid, seed: int = 0) -> list[tuple[str, Field]]:
    """Twenty resolved fields: structured profiles plus band-limited random ones."""
    L = grid.length
    k1 = 2 * np.pi / L
    fields = [
        ("zero", Field(grid, np.zeros(grid.n))),
        ("constant", Field(grid, np.full(grid.n, 0.3))),
        ("sine", Sine(0.2, k1).build(grid)),
        ("two_mode", grid.sample(lambda x: 0.2 * np.sin(k1 * x) + 0.05 * np.cos(2 * k1 * x))),
        ("gaussian", Gaussian(0.5, L / 2, L / 12).build(grid)),
        ("sech2", Sech2(0.5, L / 3, L / 10).build(grid)),
    ]
    rng = np.random.default_rng(seed)
    kmax = max(2, grid.n // 16)
    j = np.arange(1, kmax + 1)
    while len(fields) < 20:
        i = len(fields)
        amp = (rng.standard_normal(kmax) + 1j * rng.standard_normal(kmax)) / j**2
        c = np.zeros(grid.n, dtype=complex)
        c[1:kmax + 1] = amp
        c[-kmax:] = np.conj(amp[::-1])
        c[0] = rng.standard_normal() * 0.1
        u = np.fft.ifft(c * grid.n).real
        u *= (0.05 + 0.45 * rng.random()) / np.max(np.abs(u))
        fields.append((f"random_{i:02d}", Field(grid, u)))
    return fields


def cmd_equivalence(cfg: RunConfig, out: Path) -> int:
    started = time.time()
    grid = cfg.grid.build()
    rows, worst = [], 0.0
    for label, u in equivalence_battery(grid, cfg.harness.seed):
        for v in FluxVariant:
            res = equivalence_residual(u, cfg.params, v)
            rows.append((label, v.value, res))
            if v is FluxVariant.REDERIVED:
                worst = max(worst, res)
    write_csv(out / "equivalence.csv", ("field", "variant", "residual"), rows)
    ok = worst <= 1e-8
    write_run_record(out, cfg, started, "passed" if ok else "failed",
                     max_rederived_residual=worst)
    if not ok:
        print(f"equivalence failed: rederived residual {worst:.3e} > 1e-8", file=sys.stderr)
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_breaking_search(cfg: RunConfig, out: Path) -> int:
    started = time.time()
    if not hasattr(cfg.ic, "amp"):
        print(f"breaking-search: ic.kind {cfg.ic.kind!r} has no amplitude to sweep",
              file=sys.stderr)
        return EXIT_CONFIG
    grid = cfg.grid.build()
    rows, last_time = [], None
    for amp in sorted(cfg.breaking.amps):
        u0 = _build_ic(replace(cfg.ic, amp=amp), grid)
        traj = integrate(u0, cfg.params, cfg.stepper, cfg.rhs,
                         monitor_s=cfg.outputs.monitor_s)
        bt = traj.breaking_time
        flag = ""
        if bt is not None:
            if last_time is not None and bt > last_time:
                flag = "nonmonotone"
            last_time = bt
        rows.append((amp, "none" if bt is None else bt, traj.monitors[-1].min_ux,
                     traj.termination.value, flag))
        log.info("breaking-search: amp=%g -> %s", amp, traj.termination.value)
    write_csv(out / "breaking.csv",
              ("amp", "breaking_time", "min_ux", "termination", "flag"), rows)
    write_run_record(out, cfg, started, "completed", n_runs=len(rows))
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "verify-lemmas": cmd_verify_lemmas,
    "convergence": cmd_convergence,
    "equivalence": cmd_equivalence,
    "breaking-search": cmd_breaking_search,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wavelab", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("config", help="path to a key = value config file")
    ap.add_argument("--out", help="output directory (overrides WAVELAB_OUT and outputs.out_dir)")
    ap.add_argument("--seed", type=int, help="override harness and random-IC seeds")
    ap.add_argument("--quiet", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(name)s: %(message)s")
    try:
        cfg = load(args.config)
    except ConfigError as err:
        print(f"config error: {err.diagnostic()}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None:
        cfg = with_overrides(cfg, harness={"seed": args.seed})
        if isinstance(cfg.ic, RandomSobolev):
            cfg = replace(cfg, ic=replace(cfg.ic, seed=args.seed))
    out = Path(args.out or os.environ.get("WAVELAB_OUT") or cfg.outputs.out_dir)
    try:
        return COMMANDS[args.command](cfg, out)
    except ConfigError as err:
        err.path = err.path or args.config
        print(f"config error: {err.diagnostic()}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
