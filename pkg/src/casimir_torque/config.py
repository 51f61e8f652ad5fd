"""Run configuration: a TOML file whose keys carry their units.

Every length, angle and frequency key names its unit (``period_nm``,
``theta_deg``, ...). Unknown keys are rejected so that a misspelt unit
cannot be silently ignored.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .balance import BalanceParams
from .energy import THETA_MIN, QuadratureSpec
from .grating import GratingGeometry
from .materials import VACUUM, model_from_dict, model_to_dict


class ConfigError(ValueError):
    pass


_SECTIONS = {
    "geometry": {"period_nm", "depth_nm", "width_nm", "fill", "separation_nm"},
    "materials": {"substrate", "ridge", "groove"},
    "scan": {"theta_deg", "theta_start_deg", "theta_stop_deg", "theta_step_deg", "d_theta_deg", "theta_min_deg"},
    "quadrature": {"method", "orders", "n_xi", "n_k", "n_angle", "small_theta_deg"},
    "convergence": {"theta_deg", "orders", "n_xi", "n_k"},
    "plate": {"area_mm2"},
    "balance": {
        "mass_g", "radius_mm", "thread_length_cm", "offset_a_mm", "offset_b_um",
        "temperature_k", "damping_n_m_s", "gravity_m_s2", "peak_theta_deg",
    },
    "run": {"output_dir", "workers", "seed"},
}


@dataclass(frozen=True)
class ConvergenceSpec:
    theta: float = math.radians(12.5)
    orders: tuple[int, ...] = (1, 2, 3, 4)
    n_xi: tuple[int, ...] = ()
    n_k: tuple[int, ...] = ()


@dataclass(frozen=True)
class RunConfig:
    geometry: GratingGeometry
    separation: float
    thetas: tuple[float, ...]
    d_theta: float
    theta_min: float
    quadrature: QuadratureSpec
    plate_area: float
    balance: BalanceParams
    peak_theta: float
    convergence: ConvergenceSpec = field(default_factory=ConvergenceSpec)
    output_dir: str = "out"
    workers: int = 1
    seed: int = 0
    resolved: dict = field(default_factory=dict, compare=False)

    @property
    def digest(self) -> str:
        blob = json.dumps(self.resolved, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _positive(name, v):
    if not (isinstance(v, (int, float)) and v > 0):
        raise ConfigError(f"{name} must be a positive number, got {v!r}")
    return float(v)


def _int_at_least(name, v, lo):
    if not isinstance(v, int) or isinstance(v, bool) or v < lo:
        raise ConfigError(f"{name} must be an integer >= {lo}, got {v!r}")
    return v


def _theta_grid(scan) -> list[float]:
    if "theta_deg" in scan:
        if any(k in scan for k in ("theta_start_deg", "theta_stop_deg", "theta_step_deg")):
            raise ConfigError("give either scan.theta_deg or a start/stop/step range, not both")
        vals = scan["theta_deg"]
        return [float(v) for v in (vals if isinstance(vals, list) else [vals])]
    start = scan.get("theta_start_deg", 5.0)
    stop = scan.get("theta_stop_deg", 90.0)
    step = _positive("scan.theta_step_deg", scan.get("theta_step_deg", 5.0))
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    if n < 1:
        raise ConfigError("empty theta range")
    return [round(start + i * step, 10) for i in range(n)]


def from_dict(raw: dict) -> RunConfig:
    for sec, body in raw.items():
        if sec not in _SECTIONS:
            raise ConfigError(f"unknown section [{sec}]")
        if not isinstance(body, dict):
            raise ConfigError(f"[{sec}] must be a table")
        extra = set(body) - _SECTIONS[sec]
        if extra:
            raise ConfigError(f"unknown keys in [{sec}]: {sorted(extra)}")

    geo = raw.get("geometry", {})
    mats = raw.get("materials", {})
    if "substrate" not in mats:
        raise ConfigError("[materials] needs a substrate table")
    try:
        substrate = model_from_dict(mats["substrate"])
        ridge = model_from_dict(mats["ridge"]) if "ridge" in mats else None
        groove = model_from_dict(mats["groove"]) if "groove" in mats else VACUUM
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad material: {exc}") from exc

    period = _positive("geometry.period_nm", geo.get("period_nm")) * 1e-9
    depth = float(geo.get("depth_nm", 0.0)) * 1e-9
    if ("fill" in geo) == ("width_nm" in geo):
        raise ConfigError("give exactly one of geometry.fill and geometry.width_nm")
    width = period * float(geo["fill"]) if "fill" in geo else float(geo["width_nm"]) * 1e-9
    separation = _positive("geometry.separation_nm", geo.get("separation_nm")) * 1e-9
    try:
        geometry = GratingGeometry(period, depth, width, substrate, ridge, groove)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    scan = raw.get("scan", {})
    theta_min = math.radians(float(scan.get("theta_min_deg", math.degrees(THETA_MIN))))
    if theta_min < THETA_MIN - 1e-12:
        raise ConfigError("scan.theta_min_deg below the supported 5 deg")
    d_theta = math.radians(_positive("scan.d_theta_deg", scan.get("d_theta_deg", 0.5)))
    thetas = [math.radians(t) for t in _theta_grid(scan)]
    for t in thetas:
        if not theta_min - 1e-12 <= t <= math.pi - theta_min + 1e-12:
            raise ConfigError(f"theta {math.degrees(t)} deg outside [{math.degrees(theta_min)}, {180 - math.degrees(theta_min)}]")

    q = raw.get("quadrature", {})
    try:
        quad = QuadratureSpec(
            orders=_int_at_least("quadrature.orders", q.get("orders", 4), 0),
            n_xi=_int_at_least("quadrature.n_xi", q.get("n_xi", 40), 1),
            n_k=_int_at_least("quadrature.n_k", q.get("n_k", 12), 1),
            method=q.get("method", "centered"),
            n_angle=_int_at_least("quadrature.n_angle", q.get("n_angle", 12), 1),
            small_theta=math.radians(float(q.get("small_theta_deg", 15.0))),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    conv = raw.get("convergence", {})
    convergence = ConvergenceSpec(
        theta=math.radians(float(conv.get("theta_deg", 12.5))),
        orders=tuple(_int_at_least("convergence.orders", v, 0) for v in conv.get("orders", [1, 2, 3, 4])),
        n_xi=tuple(_int_at_least("convergence.n_xi", v, 1) for v in conv.get("n_xi", [])),
        n_k=tuple(_int_at_least("convergence.n_k", v, 1) for v in conv.get("n_k", [])),
    )

    plate_area = _positive("plate.area_mm2", raw.get("plate", {}).get("area_mm2", 1.0)) * 1e-6

    b = raw.get("balance", {})
    damp = b.get("damping_n_m_s", "critical")
    if damp != "critical" and not isinstance(damp, (int, float)):
        raise ConfigError("balance.damping_n_m_s must be a number or \"critical\"")
    try:
        balance = BalanceParams(
            mass=_positive("balance.mass_g", b.get("mass_g", 0.5)) * 1e-3,
            radius=_positive("balance.radius_mm", b.get("radius_mm", 5.0)) * 1e-3,
            thread_length=_positive("balance.thread_length_cm", b.get("thread_length_cm", 20.0)) * 1e-2,
            offset_a=_positive("balance.offset_a_mm", b.get("offset_a_mm", 1.0)) * 1e-3,
            offset_b=_positive("balance.offset_b_um", b.get("offset_b_um", 60.0)) * 1e-6,
            temperature=_positive("balance.temperature_k", b.get("temperature_k", 300.0)),
            damping=None if damp == "critical" else float(damp),
            gravity=_positive("balance.gravity_m_s2", b.get("gravity_m_s2", 9.81)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    peak_theta = math.radians(float(b.get("peak_theta_deg", 12.5)))

    run = raw.get("run", {})
    cfg = RunConfig(
        geometry=geometry,
        separation=separation,
        thetas=tuple(thetas),
        d_theta=d_theta,
        theta_min=theta_min,
        quadrature=quad,
        plate_area=plate_area,
        balance=balance,
        peak_theta=peak_theta,
        convergence=convergence,
        output_dir=str(run.get("output_dir", "out")),
        workers=_int_at_least("run.workers", run.get("workers", 1), 1),
        seed=_int_at_least("run.seed", run.get("seed", 0), 0),
    )
    object.__setattr__(cfg, "resolved", resolve(cfg))
    return cfg


def resolve(cfg: RunConfig) -> dict:
    """Fully explicit form of a config, SI values in unit-named keys.

    Converted values are rounded to 12 significant digits so that resolving
    a resolved config is idempotent.
    """
    def u(v, scale=1.0):
        return float(f"{v * scale:.12g}")

    def deg(v):
        return u(math.degrees(v))

    g = cfg.geometry
    q = cfg.quadrature
    b = cfg.balance
    mats = {"substrate": model_to_dict(g.substrate), "groove": model_to_dict(g.groove)}
    if g.ridge is not None:
        mats["ridge"] = model_to_dict(g.ridge)
    return {
        "geometry": {"period_nm": u(g.period, 1e9), "depth_nm": u(g.depth, 1e9), "width_nm": u(g.width, 1e9),
                     "separation_nm": u(cfg.separation, 1e9)},
        "materials": mats,
        "scan": {"theta_deg": [deg(t) for t in cfg.thetas], "d_theta_deg": deg(cfg.d_theta),
                 "theta_min_deg": deg(cfg.theta_min)},
        "quadrature": {"method": q.method, "orders": q.orders, "n_xi": q.n_xi, "n_k": q.n_k,
                       "n_angle": q.n_angle, "small_theta_deg": deg(q.small_theta)},
        "convergence": {"theta_deg": deg(cfg.convergence.theta), "orders": list(cfg.convergence.orders),
                        "n_xi": list(cfg.convergence.n_xi), "n_k": list(cfg.convergence.n_k)},
        "plate": {"area_mm2": u(cfg.plate_area, 1e6)},
        "balance": {"mass_g": u(b.mass, 1e3), "radius_mm": u(b.radius, 1e3), "thread_length_cm": u(b.thread_length, 1e2),
                    "offset_a_mm": u(b.offset_a, 1e3), "offset_b_um": u(b.offset_b, 1e6), "temperature_k": b.temperature,
                    "damping_n_m_s": "critical" if b.damping is None else b.damping, "gravity_m_s2": b.gravity,
                    "peak_theta_deg": deg(cfg.peak_theta)},
        # output_dir and workers do not affect results and stay out of the digest
        "run": {"seed": cfg.seed},
    }


def load(path) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return from_dict(raw)


def default_config_path() -> Path:
    return Path(__file__).resolve().parents[2] / "configs" / "reference.toml"
