"""Torque at the reference angle as a function of groove depth.

    python scripts/depth_scan.py [--orders 2] [--depths-nm 200 500 1000 2000]
"""

import argparse
import json
import math
from dataclasses import replace
from pathlib import Path

from casimir_torque.config import default_config_path, load
from casimir_torque.energy import QuadratureSpec, torque_per_area

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--orders", type=int, default=2)
    ap.add_argument("--theta-deg", type=float, default=12.5)
    ap.add_argument("--depths-nm", type=float, nargs="+", default=[100.0, 200.0, 500.0, 1000.0, 2000.0])
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--output", type=Path, default=ROOT / "results" / "depth_scan.json")
    args = ap.parse_args()

    cfg = load(default_config_path())
    quad = QuadratureSpec(orders=args.orders, n_xi=24, n_k=8, n_angle=8)
    rows = []
    for a in args.depths_nm:
        g = replace(cfg.geometry, depth=a * 1e-9)
        r = torque_per_area(math.radians(args.theta_deg), g, cfg.separation, quad, cfg.d_theta, args.workers)
        rows.append({"depth_nm": a, "torque": r.torque, "error": r.error})
        print(f"a = {a:7.1f} nm  tau = {r.torque:+.4e} N/m", flush=True)
    args.output.parent.mkdir(parents=True, exist_ok=True)
    args.output.write_text(json.dumps({"orders": args.orders, "theta_deg": args.theta_deg, "rows": rows}, indent=2) + "\n")
    print(f"wrote {args.output}")


if __name__ == "__main__":
    main()
