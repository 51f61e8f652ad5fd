"""Dielectric response on the imaginary frequency axis.

All frequencies are spatial frequencies (angular frequency divided by c),
in rad/m.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.constants import c, e, hbar

# 1 eV expressed as a spatial frequency in rad/m.
EV_TO_RAD_PER_M = e / (hbar * c)


@dataclass(frozen=True)
class PerfectConductor:
    pass


@dataclass(frozen=True)
class Constant:
    eps: float

    def __post_init__(self):
        if not self.eps >= 1.0:
            raise ValueError(f"constant permittivity must be >= 1, got {self.eps}")


@dataclass(frozen=True)
class Drude:
    """Drude metal, eps(i xi) = 1 + wp^2 / (xi (xi + gamma))."""

    wp: float
    gamma: float = 0.0

    def __post_init__(self):
        if not self.wp > 0.0:
            raise ValueError(f"plasma frequency must be > 0, got {self.wp}")
        if not self.gamma >= 0.0:
            raise ValueError(f"damping must be >= 0, got {self.gamma}")

    @classmethod
    def from_ev(cls, wp_ev: float, gamma_ev: float) -> "Drude":
        return cls(wp_ev * EV_TO_RAD_PER_M, gamma_ev * EV_TO_RAD_PER_M)


DielectricModel = PerfectConductor | Constant | Drude

VACUUM = Constant(1.0)


def gold_drude() -> Drude:
    """Casimir-literature gold: wp = 9.0 eV, gamma = 35 meV."""
    return Drude.from_ev(9.0, 0.035)


def is_vacuum(model: DielectricModel) -> bool:
    return isinstance(model, Constant) and model.eps == 1.0


def epsilon_imag(model: DielectricModel, xi):
    """Permittivity at imaginary spatial frequency ``xi`` (scalar or array)."""
    if isinstance(model, PerfectConductor):
        raise TypeError("a perfect conductor has no finite permittivity")
    xi = np.asarray(xi, dtype=float)
    if np.any(xi <= 0.0):
        raise ValueError("imaginary frequency must be strictly positive")
    if isinstance(model, Constant):
        out = np.full_like(xi, model.eps)
    elif isinstance(model, Drude):
        out = 1.0 + model.wp**2 / (xi * (xi + model.gamma))
    else:
        raise TypeError(f"unknown dielectric model {model!r}")
    return out if out.ndim else float(out)


def model_from_dict(spec: dict) -> DielectricModel:
    """Build a model from a config table.

    Recognised forms::

        {kind = "perfect_conductor"}
        {kind = "constant", eps = 4.0}
        {kind = "drude", plasma_ev = 9.0, damping_ev = 0.035}
        {kind = "drude", plasma_rad_per_m = 4.56e7, damping_rad_per_m = 1.77e5}
    """
    kind = spec.get("kind", "").lower()
    if kind in ("perfect_conductor", "pec"):
        return PerfectConductor()
    if kind == "vacuum":
        return VACUUM
    if kind == "constant":
        return Constant(float(spec["eps"]))
    if kind == "drude":
        if "plasma_ev" in spec:
            return Drude.from_ev(float(spec["plasma_ev"]), float(spec.get("damping_ev", 0.0)))
        return Drude(float(spec["plasma_rad_per_m"]), float(spec.get("damping_rad_per_m", 0.0)))
    raise ValueError(f"unknown material kind {kind!r}")


def model_to_dict(model: DielectricModel) -> dict:
    if isinstance(model, PerfectConductor):
        return {"kind": "perfect_conductor"}
    if isinstance(model, Constant):
        return {"kind": "constant", "eps": model.eps}
    return {"kind": "drude", "plasma_rad_per_m": model.wp, "damping_rad_per_m": model.gamma}
