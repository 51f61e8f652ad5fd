"""Casimir energy and torque per unit area between two rotated gratings.

E = hbar c / (8 pi^3) * int dxi int d^2k ln det(1 - R1 T R2 T)

Two ways of covering the k-plane are offered:

``cell``
    Gauss-Legendre on the primitive reciprocal cell, with the (2N+1)^2
    channel replicas filling the rest of the plane. Cheap, but the covered
    region is a parallelogram whose shape depends on theta, and at modest N
    the missing corners produce a spurious theta dependence.

``centered``
    The trace of ln(1 - M) over all channels of all cell points is the
    integral over the whole plane of the diagonal element at a single
    channel. Here every quadrature point q gets its own basis centered on q
    and contributes the (e, h) diagonal block of ln(1 - M). Truncation is
    then symmetric about each sample and theta-independent in shape.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.constants import c, hbar

from .crossed import BrillouinCell, round_trip_batch
from .grating import GratingGeometry
from .materials import DielectricModel, PerfectConductor, epsilon_imag

PREFACTOR = hbar * c / (8 * np.pi**3)
THETA_MIN = math.radians(5.0)
CHUNK = 32


class IntegrandError(ArithmeticError):
    """ln det(1 - M) cannot be evaluated at a node (spectral radius >= 1 or bad sign)."""

    def __init__(self, msg, xi=None, k=None):
        super().__init__(msg)
        self.xi = xi
        self.k = k


@dataclass(frozen=True)
class QuadratureSpec:
    """Discretisation of the (xi, k) integral.

    For the cell method ``n_xi`` and ``n_k`` are the xi order and the per-axis
    order on the cell. For the centered method they are the radial (kappa)
    and polar orders of a spherical rule, with ``n_angle`` equispaced
    azimuths over half a turn. ``xi_scale`` defaults to 1/(2L).
    """

    orders: int = 4
    n_xi: int = 40
    n_k: int = 12
    method: str = "centered"
    n_angle: int = 12
    xi_scale: float | None = None
    small_theta: float = math.radians(15.0)

    def __post_init__(self):
        if self.orders < 0 or self.n_xi < 1 or self.n_k < 1 or self.n_angle < 1:
            raise ValueError("need orders >= 0 and n_xi, n_k, n_angle >= 1")
        if self.method not in ("cell", "centered"):
            raise ValueError(f"unknown method {self.method!r}")


@dataclass
class EnergyResult:
    theta: float
    energy: float
    integrand_min: float
    integrand_max: float
    max_spectral_radius: float
    n_nodes: int
    wall_time: float = 0.0


@dataclass
class TorqueResult:
    theta: float
    torque: float
    error: float
    torque_4pt: float
    energies: dict = field(default_factory=dict)
    max_spectral_radius: float = 0.0


def xi_nodes(n: int, scale: float) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre under xi = s (1+t)/(1-t); nodes never touch 0."""
    t, w = np.polynomial.legendre.leggauss(n)
    return scale * (1 + t) / (1 - t), w * 2 * scale / (1 - t) ** 2


def graded_xi_nodes(n: int, scale: float) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre under xi = s y^3 / (1 - y), y in (0, 1).

    Crowds nodes towards xi = 0, where a damped metal changes over xi ~ gamma
    and the k-integrand sharpens; the tail is still rational.
    """
    t, w = np.polynomial.legendre.leggauss(n)
    y, wy = (t + 1) / 2, w / 2
    return scale * y**3 / (1 - y), wy * scale * (3 * y**2 - 2 * y**3) / (1 - y) ** 2


def spherical_nodes(n_kappa: int, n_polar: int, n_phi: int, scale: float):
    """Rule over xi > 0 and the whole k-plane in spherical coordinates.

    kappa = sqrt(xi^2 + k^2) is the radial variable, u = xi / kappa the polar
    one. The kappa^2 Jacobian removes the logarithmic singularity of the
    integrand at the origin. Polar nodes follow u = s^3 so that they crowd
    towards xi << kappa, where a damped Drude metal changes over xi ~ gamma.
    Azimuths cover half a turn: with ridges centered on the cell origin the
    integrand is even in k.
    """
    kap, wk = xi_nodes(n_kappa, scale)
    t, wt = np.polynomial.legendre.leggauss(n_polar)
    s = (t + 1) / 2
    u, wu = s**3, 1.5 * s**2 * wt
    phi = np.pi * np.arange(n_phi) / n_phi
    K, U, P = np.meshgrid(kap, u, phi, indexing="ij")
    r = K * np.sqrt(1 - U**2)
    k = np.stack([(r * np.cos(P)).ravel(), (r * np.sin(P)).ravel()], axis=-1)
    w = np.outer(wk * kap**2, wu)[:, :, None] * (2 * np.pi / n_phi)
    return (K * U).ravel(), k, np.broadcast_to(w, K.shape).ravel()


def _check_theta(theta):
    if not THETA_MIN - 1e-12 <= theta <= np.pi - THETA_MIN + 1e-12:
        raise ValueError(f"theta = {math.degrees(theta):.3f} deg outside [5, 175] deg")


def nodes(theta: float, geom: GratingGeometry, L: float, quad: QuadratureSpec):
    """Flattened (xi, k, weight) for one energy evaluation."""
    scale = quad.xi_scale or 1 / (2 * L)
    if quad.method == "centered":
        return spherical_nodes(quad.n_xi, quad.n_k, quad.n_angle, scale)
    xs, xw = graded_xi_nodes(quad.n_xi, scale)
    n_k = quad.n_k * (2 if theta < quad.small_theta or theta > np.pi - quad.small_theta else 1)
    ks, kw = BrillouinCell(geom.period, theta).nodes(n_k)
    xi = np.repeat(xs, len(ks))
    k = np.tile(ks, (len(xs), 1))
    w = np.outer(xw, kw).ravel()
    return xi, k, w


def _power_radius(M, steps=30):
    x = np.ones(M.shape[:2])
    x /= np.linalg.norm(x, axis=-1, keepdims=True)
    est = np.zeros(len(M))
    for _ in range(steps):
        y = np.einsum("bij,bj->bi", M, x)
        y2 = np.einsum("bij,bj->bi", M, y)
        n1 = np.linalg.norm(y, axis=-1)
        n2 = np.linalg.norm(y2, axis=-1)
        # two steps at once so that +-lambda pairs do not oscillate
        est = np.sqrt(np.divide(n2, np.linalg.norm(x, axis=-1), out=np.zeros_like(n2), where=n1 > 0))
        x = np.divide(y2, n2[:, None], out=np.zeros_like(y2), where=n2[:, None] > 0)
    return est


def _logdet_batch(M):
    sign, logabs = np.linalg.slogdet(np.eye(M.shape[-1]) - M)
    return sign, logabs


def _central_log_batch(M, orders):
    """Trace of the central (e, h) block of ln(1 - M), and max |eigenvalue|."""
    lam, V = np.linalg.eig(M)
    W = np.linalg.inv(V)
    c0 = 2 * (orders * (2 * orders + 1) + orders)
    ln = np.log(1 - lam)
    g = np.einsum("bcj,bj,bjc->b", V[:, c0 : c0 + 2, :], ln, W[:, :, c0 : c0 + 2])
    return g.real, np.abs(lam).max(axis=-1), (1 - lam.real).min(axis=-1)


def _evaluate_chunk(args):
    geom, xi, k, orders, theta, L, method, diagnostics = args
    M = round_trip_batch(geom, xi, k, orders, theta, L)
    if method == "cell":
        sign, val = _logdet_batch(M)
        rho = _power_radius(M) if diagnostics else np.zeros(len(xi))
        bad = sign <= 0
    else:
        val, rho, gap = _central_log_batch(M, orders)
        bad = gap <= 0
    bad |= rho >= 1.0
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise IntegrandError(
            f"round-trip operator not contractive at xi={xi[i]:.6g}, k=({k[i, 0]:.6g}, {k[i, 1]:.6g}), "
            f"spectral radius {rho[i]:.6g}",
            xi=float(xi[i]),
            k=tuple(k[i]),
        )
    return val, rho


def evaluate_nodes(geom, xi, k, orders, theta, L, method="cell", diagnostics=True, workers=1):
    """Integrand values at every node, in node order, plus spectral radii."""
    chunks = [
        (geom, xi[i : i + CHUNK], k[i : i + CHUNK], orders, theta, L, method, diagnostics)
        for i in range(0, len(xi), CHUNK)
    ]
    if workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(_evaluate_chunk, chunks))
    else:
        out = [_evaluate_chunk(ch) for ch in chunks]
    return np.concatenate([o[0] for o in out]), np.concatenate([o[1] for o in out])


def energy_integrand(xi: float, k, theta: float, geom: GratingGeometry, L: float, orders: int) -> float:
    """ln det(1 - R1 T R2 T) at one (xi, k) node."""
    if not xi > 0:
        raise ValueError("xi must be positive")
    _check_theta(theta)
    val, _ = evaluate_nodes(geom, np.array([xi]), np.atleast_2d(np.asarray(k, float)), orders, theta, L)
    return float(val[0])


def energy_per_area(theta: float, geom: GratingGeometry, L: float, quad: QuadratureSpec = QuadratureSpec(),
                    workers: int = 1, diagnostics: bool = True) -> EnergyResult:
    import time

    _check_theta(theta)
    if not L > 0:
        raise ValueError("separation must be positive")
    t0 = time.perf_counter()
    xi, k, w = nodes(theta, geom, L, quad)
    val, rho = evaluate_nodes(geom, xi, k, quad.orders, theta, L, quad.method, diagnostics, workers)
    return EnergyResult(
        theta=theta,
        energy=PREFACTOR * float(np.dot(w, val)),
        integrand_min=float(val.min()),
        integrand_max=float(val.max()),
        max_spectral_radius=float(rho.max()),
        n_nodes=len(xi),
        wall_time=time.perf_counter() - t0,
    )


def _stencil(E, theta, h):
    t2 = -(E[1] - E[-1]) / (2 * h)
    t4 = -(-E[2] + 8 * E[1] - 8 * E[-1] + E[-2]) / (12 * h)
    return t2, t4


def torque_per_area(theta: float, geom: GratingGeometry, L: float, quad: QuadratureSpec = QuadratureSpec(),
                    d_theta: float = math.radians(0.5), workers: int = 1) -> TorqueResult:
    """-dE/dtheta by central difference; the 4-point stencil supplies the error estimate."""
    for j in (-2, 2):
        _check_theta(theta + j * d_theta)
    res = {j: energy_per_area(theta + j * d_theta, geom, L, quad, workers) for j in (-2, -1, 1, 2)}
    E = {j: r.energy for j, r in res.items()}
    t2, t4 = _stencil(E, theta, d_theta)
    return TorqueResult(theta, t2, abs(t2 - t4), t4, E, max(r.max_spectral_radius for r in res.values()))


def torque_scan(thetas, geom, L, quad=QuadratureSpec(), d_theta=math.radians(0.5), workers=1, on_energy=None,
                cache=None):
    """Torques at several angles, sharing energy evaluations on the stencil grid.

    Each result's ``energies`` also holds E(theta) itself under key 0.
    ``cache`` maps j to the EnergyResult at j * d_theta and may be shared
    between calls.
    """
    cache = {} if cache is None else cache

    def energy(j):
        if j not in cache:
            cache[j] = energy_per_area(j * d_theta, geom, L, quad, workers)
            if on_energy is not None:
                on_energy(cache[j])
        return cache[j]

    out = []
    for th in thetas:
        j0 = round(th / d_theta)
        if not math.isclose(j0 * d_theta, th, rel_tol=0, abs_tol=1e-12):
            raise ValueError("scan angles must be multiples of d_theta")
        for j in (-2, 2):
            _check_theta(th + j * d_theta)
        E = {j: energy(j0 + j).energy for j in (-2, -1, 0, 1, 2)}
        t2, t4 = _stencil(E, th, d_theta)
        rho = max(energy(j0 + j).max_spectral_radius for j in (-2, -1, 1, 2))
        out.append(TorqueResult(th, t2, abs(t2 - t4), t4, E, rho))
    return out, cache


# Independent flat-plate oracle -------------------------------------------


def _flat_r(model: DielectricModel, xi, kap):
    if isinstance(model, PerfectConductor):
        one = np.ones_like(kap)
        return -one, one
    eps = epsilon_imag(model, xi)
    kt = np.sqrt(kap**2 + (eps - 1) * xi**2)
    return (kap - kt) / (kap + kt), (eps * kap - kt) / (eps * kap + kt)


@dataclass(frozen=True)
class LifshitzQuadrature:
    n_k: int = 64
    n_panel: int = 16
    decades: tuple[float, float] = (-4.0, 3.0)


def lifshitz_flat(mat1: DielectricModel, mat2: DielectricModel, L: float, quad: LifshitzQuadrature = LifshitzQuadrature()) -> float:
    """Energy per area of two flat half-spaces.

    xi: a linear Gauss panel on [0, x0] followed by one Gauss panel per
    decade in ln xi, in units of 1/L. k: rational Gauss-Legendre on [0, inf).
    """
    if not L > 0:
        raise ValueError("separation must be positive")
    t, w = np.polynomial.legendre.leggauss(quad.n_panel)
    lo, hi = quad.decades
    x0 = 10.0**lo / L
    xs = [x0 * (t + 1) / 2]
    ws = [x0 * w / 2]
    for a in np.arange(lo, hi):
        u = np.log(10) * (a + (t + 1) / 2)
        xs.append(np.exp(u) / L)
        ws.append(np.exp(u) / L * np.log(10) * w / 2)
    xi, wxi = np.concatenate(xs), np.concatenate(ws)
    s, ws_ = np.polynomial.legendre.leggauss(quad.n_k)
    s0 = 1 / (2 * L)
    k = s0 * (1 + s) / (1 - s)
    wk = ws_ * 2 * s0 / (1 - s) ** 2
    X, K = np.meshgrid(xi, k, indexing="ij")
    kap = np.sqrt(X**2 + K**2)
    e2 = np.exp(-2 * kap * L)
    r1e, r1h = _flat_r(mat1, X, kap)
    r2e, r2h = _flat_r(mat2, X, kap)
    f = np.log1p(-r1e * r2e * e2) + np.log1p(-r1h * r2h * e2)
    inner = (f * K) @ wk
    return hbar * c / (4 * np.pi**2) * float(inner @ wxi)


def casimir_perfect(L: float) -> float:
    return -np.pi**2 * hbar * c / (720 * L**3)


def default_workers() -> int:
    return max(1, (os.cpu_count() or 1))


def with_orders(quad: QuadratureSpec, orders: int) -> QuadratureSpec:
    return replace(quad, orders=orders)
