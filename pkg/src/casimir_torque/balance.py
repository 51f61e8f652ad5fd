"""Tripod torsion balance: mechanics, thermal noise and a Langevin simulator.

The rotation angle obeys I th'' + gamma th' + kappa th = tau_th + tau_applied,
with white thermal torque <tau_th(t) tau_th(t')> = 2 kB T gamma delta(t - t').
Spectral densities are two-sided in angular frequency, normalised so that
int S(w) dw / 2pi is the variance.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.constants import g as STANDARD_GRAVITY
from scipy.constants import k as K_B
from scipy.linalg import expm
from scipy.signal import welch

DECOUPLING_RATIO = 0.25


@dataclass(frozen=True)
class BalanceParams:
    """Marionette suspended by three threads.

    ``offset_a`` and ``offset_b`` are the thread offsets in the two
    suspension planes. ``damping`` is in N m s; None means critical damping.
    """

    mass: float
    radius: float
    thread_length: float
    offset_a: float
    offset_b: float
    temperature: float = 300.0
    damping: float | None = None
    gravity: float = STANDARD_GRAVITY

    def __post_init__(self):
        for name in ("mass", "radius", "thread_length", "offset_a", "offset_b", "temperature", "gravity"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.damping is not None and self.damping < 0:
            raise ValueError("damping must be non-negative")
        if max(self.offset_a, self.offset_b) > DECOUPLING_RATIO * self.radius:
            warnings.warn("suspension offsets are not small compared to the radius; modes may couple", stacklevel=3)

    @classmethod
    def reference(cls, temperature: float = 300.0) -> "BalanceParams":
        return cls(mass=0.5e-3, radius=5e-3, thread_length=0.20, offset_a=1e-3, offset_b=60e-6, temperature=temperature)


@dataclass(frozen=True)
class Mechanics:
    inertia: float
    omega_t: float
    omega_r: float
    kappa: float
    stiffness: float

    @property
    def ratio(self) -> float:
        return self.omega_t / self.omega_r


def derived_mechanics(p: BalanceParams) -> Mechanics:
    inertia = p.mass * p.radius**2 / 2
    omega_t = math.sqrt(p.gravity / p.thread_length)
    omega_r = omega_t * math.sqrt(2 * p.offset_a * p.offset_b) / p.radius
    return Mechanics(inertia, omega_t, omega_r, inertia * omega_r**2, p.mass * omega_t**2)


def damping(p: BalanceParams) -> float:
    """Effective damping, 2 I omega_r when unset (critical)."""
    if p.damping is not None:
        return p.damping
    m = derived_mechanics(p)
    return 2 * m.inertia * m.omega_r


def critically_damped(p: BalanceParams) -> BalanceParams:
    return replace(p, damping=None)


def noise_spectrum(p: BalanceParams, omega):
    """Thermal angle noise S_theta(omega) in rad^2 s."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0):
        raise ValueError("omega must be non-negative")
    m = derived_mechanics(p)
    gam = damping(p)
    out = 2 * K_B * p.temperature * gam / ((m.kappa - m.inertia * omega**2) ** 2 + (gam * omega) ** 2)
    return out if out.ndim else float(out)


def min_detectable_torque(p: BalanceParams, critical: bool = False) -> float:
    """sqrt(2 kB T gamma) in N m / sqrt(Hz); ``critical`` forces gamma = 2 I omega_r."""
    gam = damping(critically_damped(p)) if critical else damping(p)
    return math.sqrt(2 * K_B * p.temperature * gam)


def static_deflection(p: BalanceParams, torque: float) -> float:
    return torque / derived_mechanics(p).kappa


def thermal_variance(p: BalanceParams) -> float:
    return K_B * p.temperature / derived_mechanics(p).kappa


@dataclass
class LangevinRun:
    time: np.ndarray
    theta: np.ndarray  # (n_paths, n_steps + 1)
    dt: float


def _propagators(p: BalanceParams, dt: float):
    """Exact one-step map for (theta, theta'): x' = F x + u tau + noise(Q)."""
    m = derived_mechanics(p)
    gam = damping(p)
    A = np.array([[0.0, 1.0], [-m.kappa / m.inertia, -gam / m.inertia]])
    b = np.array([0.0, 1.0 / m.inertia])
    aug = np.zeros((3, 3))
    aug[:2, :2] = A
    aug[:2, 2] = b
    E = expm(aug * dt)
    F, u = E[:2, :2], E[:2, 2]
    # Van Loan: covariance of the integrated white torque
    G = np.outer(b, b) * 2 * K_B * p.temperature * gam
    vl = np.zeros((4, 4))
    vl[:2, :2] = -A
    vl[:2, 2:] = G
    vl[2:, 2:] = A.T
    V = expm(vl * dt)
    Q = V[2:, 2:].T @ V[:2, 2:]
    return F, u, 0.5 * (Q + Q.T)


def simulate_langevin(p: BalanceParams, torque, duration: float, dt: float, seed: int = 0,
                      n_paths: int = 1, noise: bool = True, theta0: float = 0.0) -> LangevinRun:
    """Integrate the balance equation with the exact linear-Gaussian update.

    ``torque`` is a constant (N m) or a callable of time, held constant over
    each step. Paths start at rest at ``theta0`` unless ``theta0`` is None,
    in which case they start from the stationary thermal distribution.
    """
    m = derived_mechanics(p)
    fastest = max(m.omega_r, damping(p) / m.inertia)
    if not 0 < dt < 0.05 / fastest:
        raise ValueError(f"dt must be below 0.05 / {fastest:.4g} s^-1")
    n = int(round(duration / dt))
    t = np.arange(n + 1) * dt
    tau = np.broadcast_to(np.asarray(torque(t) if callable(torque) else torque, float), t.shape)
    F, u, Q = _propagators(p, dt)
    rng = np.random.default_rng(seed)
    x = np.zeros((n_paths, 2))
    if theta0 is None:
        var = thermal_variance(p)
        x[:, 0] = rng.normal(0, math.sqrt(var), n_paths)
        x[:, 1] = rng.normal(0, math.sqrt(var * m.kappa / m.inertia), n_paths)
    else:
        x[:, 0] = theta0
    chol = np.linalg.cholesky(Q + 1e-300 * np.eye(2)) if noise else None
    out = np.empty((n_paths, n + 1))
    out[:, 0] = x[:, 0]
    for i in range(n):
        x = x @ F.T + u * tau[i]
        if noise:
            x += rng.standard_normal((n_paths, 2)) @ chol.T
        out[:, i + 1] = x[:, 0]
    return LangevinRun(t, out, dt)


def psd_estimate(theta, dt: float, nperseg: int):
    """Welch estimate averaged over paths: (omega, S) with S two-sided in omega."""
    f, P = welch(np.atleast_2d(theta), fs=1 / dt, nperseg=nperseg, axis=-1)
    return 2 * np.pi * f, P.mean(axis=0) / 2


def band_average(omega, values, edges):
    """Mean of ``values`` over bins with edges[i] <= omega < edges[i+1]."""
    idx = np.digitize(omega, edges) - 1
    keep = (idx >= 0) & (idx < len(edges) - 1)
    sums = np.bincount(idx[keep], weights=values[keep], minlength=len(edges) - 1)
    counts = np.bincount(idx[keep], minlength=len(edges) - 1)
    return np.divide(sums, counts, out=np.full(len(edges) - 1, np.nan), where=counts > 0), counts
