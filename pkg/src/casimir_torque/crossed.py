"""Mixed diffraction basis |n, m, sigma> for two rotated gratings.

Grating 1 diffracts along u1 (lines perpendicular to u1), grating 2 along
u2, with u2 at angle theta from u1. Channel (n, m) carries the in-plane
wavevector k + (2 pi / d)(n u1 + m u2). Channels are ordered
lexicographically in (n, m, sigma) with sigma innermost, sigma in (e, h).

By default u1 = e_x; ``frame`` rotates both gratings together, which leaves
every physical result unchanged but changes where quadrature nodes fall.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grating import GratingGeometry, reflection_1d_batch


@dataclass(frozen=True)
class ChannelBasis:
    orders: int
    period: float
    theta: float
    k: tuple[float, float] = (0.0, 0.0)
    frame: float = 0.0

    def __post_init__(self):
        if self.orders < 0:
            raise ValueError("orders must be >= 0")

    @property
    def size(self) -> int:
        return 2 * (2 * self.orders + 1) ** 2

    @property
    def u1(self) -> np.ndarray:
        return np.array([np.cos(self.frame), np.sin(self.frame)])

    @property
    def u2(self) -> np.ndarray:
        return np.array([np.cos(self.frame + self.theta), np.sin(self.frame + self.theta)])

    def channels(self) -> list[tuple[int, int, str]]:
        r = range(-self.orders, self.orders + 1)
        return [(n, m, s) for n in r for m in r for s in "eh"]

    def index(self, n: int, m: int, sigma: str) -> int:
        N = self.orders
        return ((n + N) * (2 * N + 1) + (m + N)) * 2 + "eh".index(sigma)

    def wavevectors(self) -> np.ndarray:
        """(2N+1, 2N+1, 2) array of k_nm, indexed [n+N, m+N]."""
        return _wavevectors(np.asarray(self.k, dtype=float)[None], self.orders, self.period, self.theta, self.frame)[0]


@dataclass(frozen=True)
class ScatterMatrix:
    matrix: np.ndarray
    tag: str
    basis: ChannelBasis


def _wavevectors(k, orders, period, theta, frame=0.0):
    n = np.arange(-orders, orders + 1)
    b = 2 * np.pi / period
    u1 = np.array([np.cos(frame), np.sin(frame)])
    u2 = np.array([np.cos(frame + theta), np.sin(frame + theta)])
    return (k[:, None, None, :] + b * n[None, :, None, None] * u1 + b * n[None, None, :, None] * u2)


def channel_wavevector(basis: ChannelBasis, n: int, m: int) -> tuple[float, float]:
    N = basis.orders
    if abs(n) > N or abs(m) > N:
        raise IndexError(f"orders ({n}, {m}) outside [-{N}, {N}]")
    kv = basis.wavevectors()[n + N, m + N]
    return float(kv[0]), float(kv[1])


def translation_batch(xi, k, orders, period, theta, L, frame=0.0):
    """Diagonal of the translation operator, shape (B, D)."""
    kv = _wavevectors(k, orders, period, theta, frame)
    kap = np.sqrt(xi[:, None, None] ** 2 + (kv**2).sum(-1))
    t = np.exp(-kap * L)
    return np.repeat(t.reshape(len(xi), -1), 2, axis=-1)


def translation_diagonal(basis: ChannelBasis, xi: float, L: float) -> ScatterMatrix:
    if not xi > 0 or L < 0:
        raise ValueError("need xi > 0 and L >= 0")
    t = translation_batch(np.array([xi]), np.asarray(basis.k, float)[None], basis.orders, basis.period, basis.theta, L, basis.frame)
    return ScatterMatrix(np.diag(t[0]), "Translation", basis)


def _flip_h(r):
    # S r S with S = diag(+1 on e, -1 on h)
    out = r.copy()
    out[..., 1::2, 0::2] *= -1
    out[..., 0::2, 1::2] *= -1
    return out


def reflection_blocks(geom: GratingGeometry, xi, k, orders, theta, frame=0.0):
    """Nonzero blocks of R1 and R2.

    Returns (r1, r2), each of shape (B, 2N+1, 2(2N+1), 2(2N+1)):
    r1[:, m] acts on (n, sigma) at fixed m; r2[:, n] acts on (m, sigma) at
    fixed n.
    """
    B = len(xi)
    Mo = 2 * orders + 1
    b = 2 * np.pi / geom.period
    o = np.arange(-orders, orders + 1)
    phi1, phi2 = frame, frame + theta
    u1 = np.array([np.cos(phi1), np.sin(phi1)])
    v1 = np.array([-np.sin(phi1), np.cos(phi1)])
    u2 = np.array([np.cos(phi2), np.sin(phi2)])
    v2 = np.array([-np.sin(phi2), np.cos(phi2)])

    # grating 1, block m: incidence k + m b u2 in grating-1 axes
    p1 = k[:, None, :] + b * o[None, :, None] * u2
    xi_rep = np.repeat(xi, Mo)
    r1 = reflection_1d_batch(geom, xi_rep, (p1 @ u1).ravel(), (p1 @ v1).ravel(), orders, -phi1)
    # grating 2 faces down: same Cartesian reflection, h sign flips on both sides
    p2 = k[:, None, :] + b * o[None, :, None] * u1
    r2 = reflection_1d_batch(geom, xi_rep, (p2 @ u2).ravel(), (p2 @ v2).ravel(), orders, -phi2)
    r2 = _flip_h(r2)
    shape = (B, Mo, 2 * Mo, 2 * Mo)
    return r1.reshape(shape), r2.reshape(shape)


def _dense_from_blocks(blocks, diag_in):
    """Embed per-index blocks into the (n, m, sigma) layout.

    diag_in = "m": blocks[b, m] acts on (n, s) with m fixed (R1).
    diag_in = "n": blocks[b, n] acts on (m, s) with n fixed (R2).
    """
    B, Mo = blocks.shape[:2]
    blk = blocks.reshape(B, Mo, Mo, 2, Mo, 2)
    out = np.zeros((B, Mo, Mo, 2, Mo, Mo, 2))
    for j in range(Mo):
        if diag_in == "m":
            out[:, :, j, :, :, j, :] = blk[:, j]
        else:
            out[:, j, :, :, j, :, :] = blk[:, j]
    D = 2 * Mo * Mo
    return out.reshape(B, D, D)


def assemble_reflection_1(basis: ChannelBasis, geom: GratingGeometry, xi: float) -> ScatterMatrix:
    r1, _ = reflection_blocks(geom, np.array([xi]), np.asarray(basis.k, float)[None], basis.orders, basis.theta, basis.frame)
    return ScatterMatrix(_dense_from_blocks(r1, "m")[0], "R1", basis)


def assemble_reflection_2(basis: ChannelBasis, geom: GratingGeometry, xi: float) -> ScatterMatrix:
    _, r2 = reflection_blocks(geom, np.array([xi]), np.asarray(basis.k, float)[None], basis.orders, basis.theta, basis.frame)
    return ScatterMatrix(_dense_from_blocks(r2, "n")[0], "R2", basis)


def round_trip_batch(geom: GratingGeometry, xi, k, orders, theta, L, frame=0.0):
    """Dense round-trip operators R1 T R2 T, shape (B, D, D).

    Uses the block sparsity of R1 (diagonal in m) and R2 (diagonal in n):
    M[n m s, n' m' s'] = sum_t r1[m](n s, n' t) T(n' m t) r2[n'](m t, m' s') T(n' m' s').
    """
    B = len(xi)
    Mo = 2 * orders + 1
    r1, r2 = reflection_blocks(geom, xi, k, orders, theta, frame)
    t = translation_batch(xi, k, orders, period=geom.period, theta=theta, L=L, frame=frame).reshape(B, Mo, Mo, 2)
    a = r1.reshape(B, Mo, Mo, 2, Mo, 2) * np.transpose(t, (0, 2, 1, 3))[:, :, None, None, :, :]
    c = r2.reshape(B, Mo, Mo, 2, Mo, 2) * t[:, :, None, None, :, :]
    # a[b, m, n, s, n', t], c[b, n', m, t, m', s']
    M = np.einsum("bmnsNt,bNmtMu->bnmsNMu", a, c, optimize=True)
    D = 2 * Mo * Mo
    return M.reshape(B, D, D)


@dataclass(frozen=True)
class BrillouinCell:
    period: float
    theta: float
    frame: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.theta < np.pi:
            raise ValueError("theta must lie strictly between 0 and pi")

    @property
    def b1(self) -> np.ndarray:
        return 2 * np.pi / self.period * np.array([np.cos(self.frame), np.sin(self.frame)])

    @property
    def b2(self) -> np.ndarray:
        a = self.frame + self.theta
        return 2 * np.pi / self.period * np.array([np.cos(a), np.sin(a)])

    def nodes(self, n_k: int) -> tuple[np.ndarray, np.ndarray]:
        """Nodes (P, 2) and weights (P,) on the primitive parallelogram centered on k = 0.

        The cell is cut into four quadrants meeting at the origin, each split
        into two triangles with a Duffy map (alpha, beta) = (u, u v) and a
        cubic grading u = s^3, so nodes crowd towards k = 0 where the
        integrand has a logarithmic peak of width ~xi. P = 8 n_k^2.
        """
        x, w = np.polynomial.legendre.leggauss(n_k)
        s, ws = (x + 1) / 2, w / 2
        u, wu = s**3, 3 * s**2 * ws
        U, V = np.meshgrid(u, s, indexing="ij")
        W = np.outer(wu * u, ws)
        a = np.concatenate([U.ravel(), (U * V).ravel()])
        b = np.concatenate([(U * V).ravel(), U.ravel()])
        wt = np.concatenate([W.ravel(), W.ravel()])
        ks, ws_all = [], []
        for s1 in (1, -1):
            for s2 in (1, -1):
                ks.append(0.5 * (s1 * a[:, None] * self.b1 + s2 * b[:, None] * self.b2))
                ws_all.append(wt)
        return np.concatenate(ks), np.concatenate(ws_all) * cell_area(self) / 4

    def in_wigner_seitz(self, k) -> np.ndarray:
        """True where k is at least as close to the origin as to any other lattice point."""
        k = np.atleast_2d(k)
        r = range(-3, 4)
        G = np.array([i * self.b1 + j * self.b2 for i in r for j in r if (i, j) != (0, 0)])
        kk = (k**2).sum(-1)
        dist = ((k[:, None, :] - G[None]) ** 2).sum(-1)
        return np.all(kk[:, None] <= dist * (1 + 1e-12), axis=-1)


def cell_area(cell: BrillouinCell) -> float:
    return 4 * np.pi**2 / cell.period**2 * np.sin(cell.theta)


def dump_operator(path, op: ScatterMatrix, delimiter: str = "\t") -> None:
    labels = [f"{n},{m},{s}" for n, m, s in op.basis.channels()]
    with open(path, "w") as fh:
        fh.write(f"# tag={op.tag} N={op.basis.orders} theta={op.basis.theta!r} k={op.basis.k!r}\n")
        fh.write(delimiter.join(["channel", *labels]) + "\n")
        for lab, row in zip(labels, op.matrix):
            fh.write(delimiter.join([lab, *(f"{v:.17g}" for v in row)]) + "\n")
