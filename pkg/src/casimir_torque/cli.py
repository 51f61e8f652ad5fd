"""Command-line front end.

    casimir-torque energy-scan   --config configs/reference.toml
    casimir-torque torque-scan   --config ... --theta-deg 10 12.5 15
    casimir-torque flat-oracle   --config ...
    casimir-torque convergence   --config ...
    casimir-torque balance-report --config ... [--scan out/torque_scan.tsv]

Exit status: 0 success, 1 invalid configuration, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .balance import (
    band_average,
    derived_mechanics,
    min_detectable_torque,
    noise_spectrum,
    psd_estimate,
    simulate_langevin,
    static_deflection,
    thermal_variance,
)
from .config import ConfigError, RunConfig, default_config_path, load, resolve
from .energy import (
    IntegrandError,
    QuadratureSpec,
    casimir_perfect,
    energy_per_area,
    lifshitz_flat,
    torque_per_area,
    torque_scan,
)
from .grating import GratingGeometry, ModalError
from .materials import PerfectConductor

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2
NUMERIC_ERRORS = (IntegrandError, ModalError, np.linalg.LinAlgError, FloatingPointError)


def header(cfg: RunConfig, command: str) -> list[str]:
    return [
        f"# casimir-torque {__version__} {command}",
        f"# config_sha256 = {cfg.digest}",
        f"# config = {json.dumps(cfg.resolved, sort_keys=True)}",
    ]


def write_table(path: Path, head: list[str], columns: list[str], rows: list[list]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for line in head:
            fh.write(line + "\n")
        fh.write("\t".join(columns) + "\n")
        for row in rows:
            fh.write("\t".join(v if isinstance(v, str) else f"{v:.10g}" for v in row) + "\n")


def _out(cfg: RunConfig, name: str) -> Path:
    return Path(cfg.output_dir) / name


def cmd_energy_scan(cfg: RunConfig) -> int:
    rows, status = [], EXIT_OK
    for th in cfg.thetas:
        try:
            r = energy_per_area(th, cfg.geometry, cfg.separation, cfg.quadrature, cfg.workers)
        except NUMERIC_ERRORS as exc:
            print(f"theta = {math.degrees(th):g} deg failed: {exc}", file=sys.stderr)
            rows.append([math.degrees(th), "nan", "nan", "nan"])
            status = EXIT_NUMERIC
            continue
        rows.append([math.degrees(th), r.energy, r.max_spectral_radius, r.wall_time])
        print(f"{math.degrees(th):8.3f} deg  E = {r.energy:.8e} J/m^2", flush=True)
    path = _out(cfg, "energy_scan.tsv")
    write_table(path, header(cfg, "energy-scan"),
                ["theta_deg", "energy_J_m2", "max_spectral_radius", "wall_time_s"], rows)
    print(f"wrote {path}")
    return status


def cmd_torque_scan(cfg: RunConfig) -> int:
    rows, status, cache = [], EXIT_OK, {}
    for th in cfg.thetas:
        t0 = time.perf_counter()
        try:
            res, _ = torque_scan([th], cfg.geometry, cfg.separation, cfg.quadrature, cfg.d_theta, cfg.workers,
                                 cache=cache)
        except (*NUMERIC_ERRORS, ValueError) as exc:
            print(f"theta = {math.degrees(th):g} deg failed: {exc}", file=sys.stderr)
            rows.append([math.degrees(th)] + ["nan"] * 6)
            status = EXIT_NUMERIC
            continue
        r = res[0]
        rows.append([math.degrees(th), r.energies[0], r.torque, r.error, r.torque * cfg.plate_area,
                     r.max_spectral_radius, time.perf_counter() - t0])
        print(f"{math.degrees(th):8.3f} deg  tau = {r.torque:.6e} N/m  (+- {r.error:.1e})", flush=True)
    path = _out(cfg, "torque_scan.tsv")
    write_table(path, header(cfg, "torque-scan"),
                ["theta_deg", "energy_J_m2", "torque_N_m_per_m2", "stencil_error", "torque_N_m",
                 "max_spectral_radius", "wall_time_s"], rows)
    print(f"wrote {path}")
    return status


def flat_checks(cfg: RunConfig, theta: float | None = None) -> list[tuple[str, float, float, float]]:
    """(name, value, reference, tolerance) for the flat-plate oracles."""
    th = cfg.thetas[0] if theta is None else theta
    L = cfg.separation
    g = cfg.geometry
    out = []
    pc = GratingGeometry(g.period, 0.0, g.width, PerfectConductor())
    e = energy_per_area(th, pc, L, cfg.quadrature, cfg.workers).energy
    out.append(("perfect mirrors vs closed form", e, casimir_perfect(L), 1e-4))
    if not isinstance(g.substrate, PerfectConductor):
        flat = replace(g, depth=0.0)
        e = energy_per_area(th, flat, L, cfg.quadrature, cfg.workers).energy
        out.append(("substrate flat plates vs Lifshitz", e, lifshitz_flat(g.substrate, g.substrate, L), 1e-6))
    return out


def cmd_flat_oracle(cfg: RunConfig) -> int:
    status = EXIT_OK
    lines = header(cfg, "flat-oracle")
    for name, val, ref, tol in flat_checks(cfg):
        rel = abs(val / ref - 1)
        ok = rel < tol
        status = status if ok else EXIT_NUMERIC
        lines.append(f"{'PASS' if ok else 'FAIL'}  {name}: {val:.10e} vs {ref:.10e}  rel {rel:.2e} (tol {tol:.0e})")
    print("\n".join(lines))
    path = _out(cfg, "flat_oracle.txt")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")
    return status


def cmd_convergence(cfg: RunConfig) -> int:
    cv = cfg.convergence
    base = cfg.quadrature
    variants = [("orders", n, replace(base, orders=n)) for n in cv.orders]
    variants += [("n_xi", n, replace(base, n_xi=n)) for n in cv.n_xi]
    variants += [("n_k", n, replace(base, n_k=n)) for n in cv.n_k]
    rows, prev = [], {}
    for name, val, quad in variants:
        t0 = time.perf_counter()
        r = torque_per_area(cv.theta, cfg.geometry, cfg.separation, quad, cfg.d_theta, cfg.workers)
        e = energy_per_area(cv.theta, cfg.geometry, cfg.separation, quad, cfg.workers).energy
        rel = abs(e - prev[name]) / abs(e) if name in prev else float("nan")
        prev[name] = e
        rows.append([name, val, e, rel, r.torque, r.error, time.perf_counter() - t0])
        print(f"{name} = {val}: E = {e:.8e}  rel change {rel:.2e}  tau = {r.torque:.6e}", flush=True)
    path = _out(cfg, "convergence.tsv")
    write_table(path, header(cfg, "convergence") + [f"# theta_deg = {math.degrees(cv.theta):g}"],
                ["parameter", "value", "energy_J_m2", "rel_change", "torque_N_m_per_m2", "stencil_error", "wall_time_s"],
                rows)
    print(f"wrote {path}")
    return EXIT_OK


def read_table(path) -> dict[str, np.ndarray]:
    """Columns of a table written by ``write_table``, as float arrays."""
    lines = [line for line in Path(path).read_text().splitlines() if line and not line.startswith("#")]
    cols = lines[0].split("\t")
    data = np.array([[float(v) for v in line.split("\t")] for line in lines[1:]]).reshape(-1, len(cols))
    return {c: data[:, i] for i, c in enumerate(cols)}


def _peak_from_table(path) -> tuple[float, float]:
    data = read_table(path)
    i = int(np.nanargmax(np.abs(data["torque_N_m_per_m2"])))
    return float(data["theta_deg"][i]), float(data["torque_N_m_per_m2"][i])


def cmd_balance_report(cfg: RunConfig, scan: str | None = None, simulate: bool = False) -> int:
    p = cfg.balance
    m = derived_mechanics(p)
    if scan:
        th_deg, tau = _peak_from_table(scan)
    else:
        th_deg = math.degrees(cfg.peak_theta)
        tau = torque_per_area(cfg.peak_theta, cfg.geometry, cfg.separation, cfg.quadrature, cfg.d_theta,
                              cfg.workers).torque
    tau_abs = abs(tau) * cfg.plate_area
    defl = static_deflection(p, tau_abs)
    report = [
        ("inertia_kg_m2", m.inertia),
        ("omega_t_rad_s", m.omega_t),
        ("omega_r_rad_s", m.omega_r),
        ("f_r_Hz", m.omega_r / (2 * math.pi)),
        ("omega_t_over_omega_r", m.ratio),
        ("kappa_N_m_per_rad", m.kappa),
        ("stiffness_N_per_m", m.stiffness),
        ("S_theta_0_rad2_s", noise_spectrum(p, 0.0)),
        ("delta_tau_min_N_m_per_rtHz", min_detectable_torque(p)),
        ("delta_tau_min_critical_N_m_per_rtHz", min_detectable_torque(p, critical=True)),
        ("thermal_rms_rad", math.sqrt(thermal_variance(p))),
        ("peak_theta_deg", th_deg),
        ("peak_torque_N_m_per_m2", tau),
        ("plate_area_m2", cfg.plate_area),
        ("peak_torque_N_m", tau_abs),
        ("static_deflection_rad", defl),
    ]
    lines = header(cfg, "balance-report") + [f"{k}\t{v:.6e}" for k, v in report]
    if simulate:
        run = simulate_langevin(p, 0.0, 2e3 / m.omega_r, 0.02 / m.omega_r, seed=cfg.seed, n_paths=64, theta0=None)
        om, S = psd_estimate(run.theta, run.dt, nperseg=2**13)
        edges = m.omega_r * np.logspace(-1, 1, 11)
        est, _ = band_average(om, S, edges)
        ref, _ = band_average(om, noise_spectrum(p, om), edges)
        lines.append(f"langevin_variance_ratio\t{run.theta.var() / thermal_variance(p):.6f}")
        lines.append(f"langevin_psd_max_band_error\t{np.nanmax(np.abs(est / ref - 1)):.6f}")
        psd_rows = [[f / (2 * math.pi), s, noise_spectrum(p, f)] for f, s in zip(om, S)]
        write_table(_out(cfg, "balance_psd.tsv"), header(cfg, "balance-report"),
                    ["frequency_Hz", "S_theta_sim_rad2_s", "S_theta_model_rad2_s"], psd_rows)
    print("\n".join(lines))
    path = _out(cfg, "balance_report.tsv")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="casimir-torque", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("energy-scan", "torque-scan", "flat-oracle", "convergence", "balance-report"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=str(default_config_path()))
        sp.add_argument("--output-dir")
        sp.add_argument("--workers", type=int)
        sp.add_argument("--theta-deg", type=float, nargs="+")
        sp.add_argument("--orders", type=int)
        sp.add_argument("--n-xi", type=int)
        sp.add_argument("--n-k", type=int)
        sp.add_argument("--method", choices=("cell", "centered"))
        if name == "balance-report":
            sp.add_argument("--scan", help="torque-scan table to take the peak torque from")
            sp.add_argument("--simulate", action="store_true", help="also run the Langevin check")
    return ap


def apply_overrides(cfg: RunConfig, args) -> RunConfig:
    quad = cfg.quadrature
    q_over = {k: v for k, v in (("orders", args.orders), ("n_xi", args.n_xi), ("n_k", args.n_k),
                                ("method", args.method)) if v is not None}
    if q_over:
        quad = QuadratureSpec(**{**quad.__dict__, **q_over})
    changes = {"quadrature": quad}
    if args.output_dir:
        changes["output_dir"] = args.output_dir
    if args.workers:
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        changes["workers"] = args.workers
    if args.theta_deg:
        thetas = tuple(math.radians(t) for t in args.theta_deg)
        for t in thetas:
            if not cfg.theta_min - 1e-12 <= t <= math.pi - cfg.theta_min + 1e-12:
                raise ConfigError(f"theta {math.degrees(t)} deg outside the allowed range")
        changes["thetas"] = thetas
    new = replace(cfg, **changes)
    object.__setattr__(new, "resolved", resolve(new))
    return new


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = apply_overrides(load(args.config), args)
    except (ConfigError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "energy-scan":
            return cmd_energy_scan(cfg)
        if args.command == "torque-scan":
            return cmd_torque_scan(cfg)
        if args.command == "flat-oracle":
            return cmd_flat_oracle(cfg)
        if args.command == "convergence":
            return cmd_convergence(cfg)
        return cmd_balance_report(cfg, args.scan, args.simulate)
    except NUMERIC_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
