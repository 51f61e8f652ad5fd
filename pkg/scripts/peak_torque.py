"""Peak torque of the reference configuration at the largest converged order.

1. E(12.5 deg) for N = 1 .. n_max; N* is the largest N whose relative change
   from N-1 is below 1e-2.
2. Torque scan at N* with d_theta = 0.5 deg.

Writes results/peak_torque.json, which tests/test_acceptance.py reads.

    python scripts/peak_torque.py [--n-max 6] [--workers 4]
"""

import argparse
import json
import math
import time
from dataclasses import asdict, replace
from pathlib import Path

from casimir_torque import __version__
from casimir_torque.config import default_config_path, load
from casimir_torque.energy import QuadratureSpec, energy_per_area, torque_scan
from casimir_torque.grating import GratingGeometry
from casimir_torque.materials import gold_drude

ROOT = Path(__file__).resolve().parents[1]
OUT = ROOT / "results" / "peak_torque.json"
SCAN_DEG = (7.5, 10.0, 12.5, 15.0, 20.0, 30.0, 40.0, 50.0, 65.0, 80.0)
CONVERGENCE_TOL = 1e-2
# cheaper than the default rule; moves the torque by ~0.3 % at N = 2
SCAN_QUAD = dict(n_xi=24, n_k=8, n_angle=8)


def reference(cfg) -> dict:
    """The parts of the config that determine the result."""
    r = cfg.resolved
    return {"geometry": r["geometry"], "materials": r["materials"], "d_theta_deg": r["scan"]["d_theta_deg"]}


def fingerprint() -> float:
    """Small fixed energy; changes whenever the numerics change."""
    g = GratingGeometry(400e-9, 120e-9, 160e-9, gold_drude())
    return energy_per_area(0.6, g, 100e-9, QuadratureSpec(orders=1, n_xi=6, n_k=4, n_angle=4)).energy


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-max", type=int, default=6)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--output", type=Path, default=OUT)
    args = ap.parse_args()

    cfg = load(default_config_path())
    g, L = cfg.geometry, cfg.separation
    quad = replace(cfg.quadrature, **SCAN_QUAD)
    th0 = math.radians(12.5)

    conv, prev, n_star = [], None, None
    for n in range(1, args.n_max + 1):
        t0 = time.perf_counter()
        e = energy_per_area(th0, g, L, replace(quad, orders=n), args.workers).energy
        rel = abs(e - prev) / abs(e) if prev is not None else None
        if rel is not None and rel < CONVERGENCE_TOL:
            n_star = n
        conv.append({"orders": n, "energy": e, "rel_change": rel, "wall_time": time.perf_counter() - t0})
        print(f"N = {n}: E = {e:.8e}  rel change {rel}", flush=True)
        prev = e

    scan = []
    if n_star is not None:
        t0 = time.perf_counter()
        res, _ = torque_scan([math.radians(t) for t in SCAN_DEG], g, L, replace(quad, orders=n_star),
                             cfg.d_theta, args.workers,
                             on_energy=lambda r: print(f"  E({math.degrees(r.theta):.1f}) = {r.energy:.8e}", flush=True))
        for r in res:
            scan.append({"theta_deg": math.degrees(r.theta), "torque": r.torque, "error": r.error,
                         "torque_4pt": r.torque_4pt, "energy": r.energies[0],
                         "max_spectral_radius": r.max_spectral_radius})
            print(f"{math.degrees(r.theta):6.1f} deg  tau = {r.torque:.6e}", flush=True)
        print(f"scan took {time.perf_counter() - t0:.0f} s")

    out = {
        "version": __version__,
        "config_sha256": cfg.digest,
        "reference": reference(cfg),
        "quadrature": asdict(replace(quad, orders=n_star if n_star is not None else quad.orders)),
        "d_theta_deg": math.degrees(cfg.d_theta),
        "convergence_theta_deg": 12.5,
        "convergence_tol": CONVERGENCE_TOL,
        "convergence": conv,
        "orders": n_star,
        "scan": scan,
        "fingerprint": fingerprint(),
    }
    args.output.parent.mkdir(parents=True, exist_ok=True)
    args.output.write_text(json.dumps(out, indent=2) + "\n")
    print(f"wrote {args.output}")


if __name__ == "__main__":
    main()
