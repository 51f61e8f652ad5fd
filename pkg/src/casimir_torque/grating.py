"""Reflection matrix of a lamellar grating at imaginary frequency.

Fourier modal method in conical mount. The lamellar layer is expanded in
2N+1 Fourier orders; the x-normal field uses the inverse-rule (Li)
factorization. At imaginary frequency every field quantity is a real,
non-oscillating exponential, so the whole calculation stays in real
arithmetic.

Coordinates: grating lines along y, period d along x, ridges from z=0 to
z=a on top of a substrate half-space z<0, vacuum above z=a. The reflection
matrix is referenced to the plane z=a.

Channel basis of the returned matrix: (n, sigma) with sigma innermost,
n in [-N, N], sigma in (e, h). For a plane wave with in-plane wavevector q:

* e amplitude = E_t . (z x q_hat)
* h amplitude = +E_t . q_hat for a wave travelling towards the plate and
  -E_t . q_hat for a wave travelling away from it.

With this choice a flat interface gives the usual Fresnel coefficients
r_e = (k - k_t)/(k + k_t), r_h = (eps k - k_t)/(eps k + k_t).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .materials import VACUUM, DielectricModel, PerfectConductor, epsilon_imag

TOL_PASSIVITY = 1e-8
TOL_MODAL = 1e-8


class ModalError(ArithmeticError):
    """The layer eigenproblem broke down numerically."""


@dataclass(frozen=True)
class GratingGeometry:
    period: float
    depth: float
    width: float
    substrate: DielectricModel
    ridge: DielectricModel | None = None
    groove: DielectricModel = field(default=VACUUM)

    def __post_init__(self):
        if not self.period > 0:
            raise ValueError("period must be positive")
        if not 0.0 <= self.width <= self.period:
            raise ValueError("ridge width must lie in [0, period]")
        if not self.depth >= 0:
            raise ValueError("depth must be non-negative")

    @classmethod
    def from_fill(cls, period, depth, fill, substrate, **kw) -> "GratingGeometry":
        if not 0.0 <= fill <= 1.0:
            raise ValueError("fill factor must lie in [0, 1]")
        return cls(period, depth, fill * period, substrate, **kw)

    @property
    def fill(self) -> float:
        return self.width / self.period

    @property
    def ridge_material(self) -> DielectricModel:
        return self.substrate if self.ridge is None else self.ridge

    @property
    def is_flat(self) -> bool:
        return self.depth == 0.0

    def is_vacuum(self) -> bool:
        mats = [self.substrate]
        if not self.is_flat:
            if self.fill > 0:
                mats.append(self.ridge_material)
            if self.fill < 1:
                mats.append(self.groove)
        return all(not isinstance(m, PerfectConductor) and m == VACUUM for m in mats)


@dataclass(frozen=True)
class ConicalIncidence:
    xi: float
    kx0: float
    ky: float
    orders: int

    def __post_init__(self):
        if not self.xi > 0:
            raise ValueError("imaginary frequency must be positive")
        if self.orders < 0:
            raise ValueError("number of orders must be >= 0")


def _step_coefficients(fill: float, j):
    # Fourier coefficients of the indicator of a centered ridge of width fill*d.
    return fill * np.sinc(np.asarray(j, dtype=float) * fill)


def profile_fourier_coefficients(geom: GratingGeometry, xi: float, j: int, reciprocal: bool = False) -> float:
    """j-th Fourier coefficient of eps(x, i xi) (or of 1/eps with ``reciprocal``)."""
    er = epsilon_imag(geom.ridge_material, xi)
    eg = epsilon_imag(geom.groove, xi)
    if reciprocal:
        er, eg = 1.0 / er, 1.0 / eg
    return float((er - eg) * _step_coefficients(geom.fill, j) + (eg if j == 0 else 0.0))


def _step_toeplitz(fill: float, orders: int) -> np.ndarray:
    n = np.arange(-orders, orders + 1)
    return _step_coefficients(fill, n[:, None] - n[None, :])


def _interleave(qrows, erows):
    # rows ordered as (order, component) with component (q_hat, e_hat) innermost
    out = np.empty(qrows.shape[:-2] + (2 * qrows.shape[-2], qrows.shape[-1]))
    out[..., 0::2, :] = qrows
    out[..., 1::2, :] = erows
    return out


def _pair_block(yqe, yeq):
    """Per-order [[0, yqe], [yeq, 0]] in the interleaved layout."""
    B, M = yqe.shape
    out = np.zeros((B, 2 * M, 2 * M))
    i = np.arange(M)
    out[:, 2 * i, 2 * i + 1] = yqe
    out[:, 2 * i + 1, 2 * i] = yeq
    return out


# Field conventions below. Per Fourier order the tangential fields are split
# along q_hat and e_hat = z x q_hat, and the q_hat components of E and H are
# multiplied by s = xi / kappa_0 (kappa_0 the vacuum decay constant of that
# order). In these variables the vacuum admittance is [[0, 1], [-1, 0]] and
# no entry scales like kappa/xi, which keeps small-xi nodes well conditioned.


def _layer_modes(eps_r, eps_g, fill, xi, kx, ky, q_hat, kap0, orders):
    """Eigenmodes of the lamellar layer in the scaled (q_hat, e_hat) frame.

    Returns (W, V, lam): tangential E and H of the modes growing as
    exp(+lam z), columns = modes, and their decay constants lam > 0.
    """
    B, M = kx.shape
    ux, uy = q_hat
    tf = _step_toeplitz(fill, orders)
    eye = np.eye(M)
    E = eps_g[:, None, None] * eye + (eps_r - eps_g)[:, None, None] * tf
    A = eye / eps_g[:, None, None] + (1.0 / eps_r - 1.0 / eps_g)[:, None, None] * tf
    xi2 = (xi**2)[:, None, None]
    Kx = kx[:, :, None]

    # Modes with Ex = 0: eigenproblem of xi^2 E + Kx^2 + ky^2 (symmetric).
    te = xi2 * E
    te[:, np.arange(M), np.arange(M)] += kx**2 + ky[:, None] ** 2
    lam2_b, Wb = np.linalg.eigh(te)

    # Modes with Hx = 0: A^-1 (xi^2 + Kx E^-1 Kx) + ky^2, solved as the
    # symmetric-definite pencil (xi^2 + Kx E^-1 Kx, A).
    EiKx = np.linalg.solve(E, _diag(kx))
    S = xi2 * eye + Kx * EiKx
    S = 0.5 * (S + np.swapaxes(S, -1, -2))
    L = np.linalg.cholesky(A)
    Linv = np.linalg.inv(L)
    C = Linv @ S @ np.swapaxes(Linv, -1, -2)
    mu, U = np.linalg.eigh(0.5 * (C + np.swapaxes(C, -1, -2)))
    Wt = np.swapaxes(Linv, -1, -2) @ U
    lam2_t = mu + ky[:, None] ** 2

    # Both problems are symmetric definite, so eigenvalues are real and
    # positive in exact arithmetic; only a negative value beyond roundoff of
    # the matrix norm signals a breakdown. Roundoff-sized ones are clamped.
    nb = np.abs(lam2_b).max(axis=-1, keepdims=True)
    nt = np.abs(mu).max(axis=-1, keepdims=True)
    if np.any(lam2_b < -TOL_MODAL * nb) or np.any(mu < -TOL_MODAL * nt):
        raise ModalError("negative modal eigenvalue in grating layer")
    floor = (TOL_MODAL * xi[:, None]) ** 2
    lam_b = np.sqrt(np.maximum(lam2_b, floor))
    lam_t = np.sqrt(np.maximum(np.maximum(mu, 0.0) + ky[:, None] ** 2, floor))
    mu = np.maximum(mu, 0.0)

    s = (xi[:, None] / kap0)[:, :, None]
    ux_, uy_ = ux[:, :, None], uy[:, :, None]
    xi_ = xi[:, None, None]
    lb = lam_b[:, None, :]
    lt = lam_t[:, None, :]
    k0 = kap0[:, :, None]

    e_q_b = s * uy_ * Wb
    e_e_b = ux_ * Wb
    h_q_b = ux_ * Wb * lb / k0
    h_e_b = -uy_ * xi_ * (E @ Wb) / lb

    e_q_t = -(ux_ * (A @ Wt) * mu[:, None, :] + uy_ * ky[:, None, None] * (EiKx @ Wt)) / (k0 * lt)
    e_e_t = uy_ * xi_ * Wt / lt
    h_q_t = s * uy_ * Wt
    h_e_t = ux_ * Wt

    W = np.concatenate([_interleave(e_q_b, e_e_b), _interleave(e_q_t, e_e_t)], axis=-1)
    V = np.concatenate([_interleave(h_q_b, h_e_b), _interleave(h_q_t, h_e_t)], axis=-1)
    return W, V, np.concatenate([lam_b, lam_t], axis=-1)


def _diag(v):
    out = np.zeros(v.shape + v.shape[-1:])
    idx = np.arange(v.shape[-1])
    out[..., idx, idx] = v
    return out


def _homogeneous_admittance(eps, kap0, kap):
    return _pair_block(kap / kap0, -eps[:, None] * kap0 / kap)


def _transpose_solve(a, b):
    """b @ inv(a)."""
    return np.swapaxes(np.linalg.solve(np.swapaxes(a, -1, -2), np.swapaxes(b, -1, -2)), -1, -2)


def reflection_1d_batch(geom: GratingGeometry, xi, kx0, ky, orders: int, zero_dir=0.0) -> np.ndarray:
    """Reflection matrices for a batch of incidences.

    ``xi``, ``kx0``, ``ky`` are broadcast to a common 1-D shape (B,).
    ``zero_dir`` is the in-plane angle (in the grating frame) used as q_hat
    for a channel with exactly zero in-plane wavevector.

    Returns an array (B, 2M, 2M) with M = 2*orders+1.
    """
    xi, kx0, ky, zero_dir = (np.atleast_1d(np.asarray(v, dtype=float)) for v in (xi, kx0, ky, zero_dir))
    xi, kx0, ky, zero_dir = (np.array(v) for v in np.broadcast_arrays(xi, kx0, ky, zero_dir))
    if np.any(xi <= 0):
        raise ValueError("imaginary frequency must be positive")
    B = xi.shape[0]
    M = 2 * orders + 1
    n = np.arange(-orders, orders + 1)
    kx = kx0[:, None] + n[None, :] * (2 * np.pi / geom.period)
    qy = np.broadcast_to(ky[:, None], kx.shape)
    q = np.hypot(kx, qy)
    small = q <= 1e-13 * xi[:, None]
    ux = np.where(small, np.cos(zero_dir)[:, None], kx / np.where(small, 1.0, q))
    uy = np.where(small, np.sin(zero_dir)[:, None], qy / np.where(small, 1.0, q))
    kap0 = np.sqrt(xi[:, None] ** 2 + q**2)
    eye2 = np.broadcast_to(np.eye(2 * M), (B, 2 * M, 2 * M))

    sub = geom.substrate
    ridge = geom.ridge_material
    patterned = geom.depth > 0 and 0.0 < geom.fill < 1.0
    if patterned and (isinstance(ridge, PerfectConductor) or isinstance(geom.groove, PerfectConductor)):
        raise NotImplementedError("perfectly conducting ridges inside a patterned layer are not supported")
    if geom.depth > 0 and geom.fill == 1.0:
        top = ridge
    elif geom.depth > 0 and geom.fill == 0.0:
        top = geom.groove
    else:
        top = sub

    if isinstance(top, PerfectConductor):
        Rs = -eye2
    else:
        def admittance(mat):
            eps = np.atleast_1d(epsilon_imag(mat, xi))
            kap = np.sqrt(xi[:, None] ** 2 * eps[:, None] + q**2)
            return _homogeneous_admittance(eps, kap0, kap)

        if geom.depth > 0:
            eps_r = np.atleast_1d(epsilon_imag(ridge if geom.fill > 0 else geom.groove, xi))
            eps_g = np.atleast_1d(epsilon_imag(geom.groove if geom.fill < 1 else ridge, xi))
            W, V, lam = _layer_modes(eps_r, eps_g, geom.fill, xi, kx, ky, (ux, uy), kap0, orders)
            if isinstance(sub, PerfectConductor):
                rho = -eye2
            else:
                Ysub = admittance(sub)
                rho = np.linalg.solve(V + Ysub @ W, V - Ysub @ W)
            X = np.exp(-lam * geom.depth)
            XrX = X[:, :, None] * rho * X[:, None, :]
            Ytop = _transpose_solve(W @ (eye2 + XrX), V @ (eye2 - XrX))
        else:
            Ytop = admittance(top)
        # vacuum: inverse admittance [[0, -1], [1, 0]] per order
        Z = _pair_block(-np.ones_like(kap0), np.ones_like(kap0)) @ Ytop
        Rs = _transpose_solve(eye2 + Z, eye2 - Z)

    # undo the s scaling of the q_hat rows, then reorder (q_hat, e_hat) -> (e, h)
    sc = np.ones((B, 2 * M))
    sc[:, 0::2] = xi[:, None] / kap0
    R = Rs * sc[:, None, :] / sc[:, :, None]
    perm = np.arange(2 * M).reshape(M, 2)[:, ::-1].ravel()
    R = R[:, perm][:, :, perm]
    R[:, 1::2, :] *= -1.0
    if not np.all(np.isfinite(R)):
        raise ModalError("non-finite reflection matrix")
    return R


def reflection_1d(geom: GratingGeometry, inc: ConicalIncidence, zero_dir: float = 0.0) -> np.ndarray:
    """Reflection matrix (2(2N+1) x 2(2N+1)) for a single incidence."""
    return reflection_1d_batch(geom, inc.xi, inc.kx0, inc.ky, inc.orders, zero_dir)[0]


def fresnel(eps: float, xi: float, q: float) -> tuple[float, float]:
    """Flat-interface (r_e, r_h) at imaginary frequency."""
    kap = np.sqrt(xi**2 + q**2)
    kap_t = np.sqrt(eps * xi**2 + q**2)
    return (kap - kap_t) / (kap + kap_t), (eps * kap - kap_t) / (eps * kap + kap_t)


def spectral_radius(mat: np.ndarray) -> np.ndarray:
    return np.abs(np.linalg.eigvals(mat)).max(axis=-1)


def channel_labels(orders: int) -> list[str]:
    return [f"n={n}:{s}" for n in range(-orders, orders + 1) for s in "eh"]


def dump_matrix(path, mat: np.ndarray, labels: list[str], delimiter: str = "\t") -> None:
    """Write a matrix as a delimited text table with a channel header row."""
    with open(path, "w") as fh:
        fh.write(delimiter.join(["channel", *labels]) + "\n")
        for lab, row in zip(labels, mat):
            fh.write(delimiter.join([lab, *(f"{v:.17g}" for v in row)]) + "\n")
