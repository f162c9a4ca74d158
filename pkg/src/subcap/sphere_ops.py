"""Multipole discretization of layer potentials on collections of spheres.

Basis and conventions
---------------------
Surface densities and surface values on each sphere are expanded in complex
orthonormal spherical harmonics Y_n^m (scipy convention, Condon-Shortley
phase), ordered (n, m) with n = 0..L, m = -n..n; (L+1)^2 entries per sphere.

Operator matrices act on *density coefficients* and return *value
coefficients*: column (j, n, m) holds the expansion on every sphere of the
operator applied to the density Y_n^m on sphere j.  Analytic self-spectra:

    S^0  [Y_nm] = -rho/(2n+1) Y_nm                    (surface values)
    S^k  [Y_nm] = -i k rho^2 j_n(k rho) h_n(k rho) Y_nm
    K^0* [Y_nm] = 1/(2(2n+1)) Y_nm
    K^k* [Y_nm] = (-i k^2 rho^2 j_n(k rho) h_n'(k rho) - 1/2) Y_nm

Inter-sphere coupling uses exterior-field evaluation on a product quadrature
grid and exact re-projection (a T-matrix style assembly); axial geometries
additionally get closed power-law translation tables so that 1D lattice sums
reduce to Lerch series.
"""

from __future__ import annotations

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import sph_harm_y

from .errors import AssemblyError, DomainError
from .special import (
    lerch_sum,
    spherical_hn_c,
    spherical_hn_c_d,
    spherical_jn_c,
    spherical_jn_c_d,
)


def nm_list(L):
    return [(n, m) for n in range(L + 1) for m in range(-n, n + 1)]


def basis_size(L):
    return (L + 1) ** 2


def degrees(L):
    """Array of n per basis slot."""
    return np.array([n for n, _ in nm_list(L)])


def orders(L):
    return np.array([m for _, m in nm_list(L)])


def eval_ynm(L, dirs):
    """Y_n^m at unit vectors dirs (N, 3) -> ((L+1)^2, N)."""
    dirs = np.asarray(dirs, dtype=float)
    theta = np.arccos(np.clip(dirs[:, 2], -1.0, 1.0))
    phi = np.arctan2(dirs[:, 1], dirs[:, 0])
    out = np.empty((basis_size(L), dirs.shape[0]), dtype=complex)
    for i, (n, m) in enumerate(nm_list(L)):
        out[i] = sph_harm_y(n, m, theta, phi)
    return out


class SphereGrid:
    """Product Gauss-Legendre x uniform-phi quadrature on the unit sphere.

    Exact for spherical polynomials up to degree ~2 n_theta - 1; used both to
    project smooth fields onto Y_n^m and as a dense quadrature oracle.
    """

    def __init__(self, L, n_theta=None):
        if n_theta is None:
            n_theta = 2 * L + 10
        n_phi = 2 * n_theta
        xs, ws = leggauss(n_theta)
        theta = np.arccos(xs)
        phi = 2 * np.pi * np.arange(n_phi) / n_phi
        tt, pp = np.meshgrid(theta, phi, indexing="ij")
        self.points = np.column_stack(
            [
                (np.sin(tt) * np.cos(pp)).ravel(),
                (np.sin(tt) * np.sin(pp)).ravel(),
                np.cos(tt).ravel(),
            ]
        )
        self.weights = np.repeat(ws, n_phi) * (2 * np.pi / n_phi)
        self.L = L
        self._ynm = eval_ynm(L, self.points)
        # projection matrix: coeffs = P @ values  (integral against conj(Y))
        self.proj = np.conj(self._ynm) * self.weights

    @property
    def ynm(self):
        return self._ynm


_GRID_CACHE: dict[tuple[int, int], SphereGrid] = {}


def unit_grid(L, n_theta=None):
    key = (L, n_theta or -1)
    if key not in _GRID_CACHE:
        _GRID_CACHE[key] = SphereGrid(L, n_theta)
    return _GRID_CACHE[key]


# ---------------------------------------------------------------------------
# self-spectra
# ---------------------------------------------------------------------------

def self_single_layer(L, rho, k):
    n = degrees(L)
    if k == 0:
        return np.diag((-rho / (2 * n + 1)).astype(complex))
    kr = complex(k) * rho
    vals = np.array([-1j * k * rho**2 * spherical_jn_c(nn, kr) * spherical_hn_c(nn, kr) for nn in range(L + 1)])
    return np.diag(vals[n])


def self_neumann_poincare(L, rho, k):
    n = degrees(L)
    if k == 0:
        return np.diag((1.0 / (2 * (2 * n + 1))).astype(complex))
    kr = complex(k) * rho
    vals = np.array([-1j * k**2 * rho**2 * spherical_jn_c(nn, kr) * spherical_hn_c_d(nn, kr) - 0.5 for nn in range(L + 1)])
    return np.diag(vals[n])


# ---------------------------------------------------------------------------
# pair coupling by field evaluation + projection
# ---------------------------------------------------------------------------

class PairCache:
    """Geometry factors for the coupling (source sphere j) -> (receiver sphere i)."""

    def __init__(self, c_src, rho_src, c_rcv, rho_rcv, L, n_theta=None):
        grid = unit_grid(L, n_theta)
        pts = np.asarray(c_rcv, dtype=float) + rho_rcv * grid.points
        rel = pts - np.asarray(c_src, dtype=float)
        self.r = np.linalg.norm(rel, axis=1)
        if np.any(self.r <= rho_src):
            raise AssemblyError("receiver grid penetrates source sphere")
        self.ynm_dir = eval_ynm(L, rel / self.r[:, None])
        self.proj = grid.proj
        self.L = L
        self.rho_src = rho_src
        self.rho_rcv = rho_rcv

    def single_layer_block(self, k):
        """Value coefficients on the receiver of S[Y_nm density on source]."""
        L = self.L
        n = degrees(L)
        if k == 0:
            radial = self.rho_src ** (n[:, None] + 2) / (2 * n[:, None] + 1) * self.r[None, :] ** -(n[:, None] + 1)
            field = -radial * self.ynm_dir
        else:
            kr = complex(k) * self.r
            hn = np.array([spherical_hn_c(nn, kr) for nn in range(L + 1)])
            jn_rho = np.array([spherical_jn_c(nn, complex(k) * self.rho_src) for nn in range(L + 1)])
            field = (-1j * k * self.rho_src**2) * jn_rho[n, None] * hn[n] * self.ynm_dir
        return self.proj @ field.T

    def np_block(self, k, s_block=None):
        """Value coefficients of the normal derivative on the receiver (K^{k,*} pair part).

        The incident field is regular about the receiver center; from its value
        coefficients b_{n'm'} = a_{n'm'} R_{n'}(k rho), the derivative
        coefficients are b * R_{n'}'(k rho)/R_{n'}(k rho) (R = j_n, or powers at k=0).
        """
        if s_block is None:
            s_block = self.single_layer_block(k)
        L, rho = self.L, self.rho_rcv
        n = degrees(L)
        if k == 0:
            ratio = n / rho
        else:
            krho = complex(k) * rho
            jn = np.array([spherical_jn_c(nn, krho) for nn in range(L + 1)])
            jnd = np.array([spherical_jn_c_d(nn, krho) for nn in range(L + 1)])
            if np.any(np.abs(jn) < 1e-300):
                raise AssemblyError("j_n(k rho) vanishes; outside the subwavelength regime")
            ratio = complex(k) * jnd[n] / jn[n]
        return ratio[:, None] * s_block


# ---------------------------------------------------------------------------
# axial translations (chains): closed power law from numerically extracted tables
# ---------------------------------------------------------------------------

_AXIAL_CACHE: dict[int, np.ndarray] = {}


def axial_table(L):
    """A[(n',m'),(n,m)] with  I_nm(x) = sum_n' A/t^{n+n'+1} r^{n'} Y_n'm (about t z-hat).

    Extracted once by projecting Y_nm(x)/|x|^{n+1} on a test sphere around
    t = 1 (diagonal in m; validated by power-law/parity unit tests).
    """
    if L in _AXIAL_CACHE:
        return _AXIAL_CACHE[L]
    grid = unit_grid(L, n_theta=2 * L + 16)
    rho_t = 0.25
    pts = np.array([0.0, 0.0, 1.0]) + rho_t * grid.points
    r = np.linalg.norm(pts, axis=1)
    ynm_dir = eval_ynm(L, pts / r[:, None])
    n = degrees(L)
    fields = r ** -(n[:, None] + 1) * ynm_dir          # I_nm at grid
    coeff = grid.proj @ fields.T                        # b_{n'm'} = a r_t^{n'}
    A = coeff / rho_t ** n[:, None]
    A[np.abs(A) < 1e-10] = 0.0
    _AXIAL_CACHE[L] = A
    return A


def axial_pair_block(L, t, rho_src, rho_rcv):
    """S^0 coupling block for source/receiver separated by t along +z (t != 0)."""
    A = axial_table(L)
    n = degrees(L)
    ns, nr = n[None, :], n[:, None]
    at = abs(t)
    mat = A * at ** -(ns + nr + 1)
    if t < 0:
        mat = mat * (-1.0) ** (ns + nr)
    pref = -(rho_src ** (ns + 2)) / (2 * ns + 1) * rho_rcv**nr
    return pref * mat


def chain_lattice_block(L, dz, period, alpha, rho_src, rho_rcv):
    """Sum over images m != 0 of the axial S^0 coupling with Bloch phases.

    block = sum_{m>=1} [ e^{+i a L m} T(dz - mL) + e^{-i a L m} T(dz + mL) ],
    each side a Lerch series sum_m z^m/(m+a0)^s with s = n + n' + 1.
    """
    A = axial_table(L)
    n = degrees(L)
    ns, nr = n[None, :], n[:, None]
    s_mat = ns + nr + 1
    theta = alpha * period
    u = dz / period
    if not -1.0 < u < 1.0:
        raise DomainError("in-cell offset must satisfy |dz| < period")
    out = np.zeros_like(A, dtype=complex)
    smax = int(s_mat.max())
    lp = {}
    lm = {}
    for s in range(1, smax + 1):
        lp[s] = lerch_sum(np.exp(1j * theta), s, -u)   # images at dz - mL (t < 0 side)
        lm[s] = lerch_sum(np.exp(-1j * theta), s, +u)  # images at dz + mL
    for s in range(1, smax + 1):
        mask = s_mat == s
        parity = (-1.0) ** (ns + nr)
        out += np.where(mask, A * (parity * lp[s] + lm[s]) / period**s, 0.0)
    pref = -(rho_src ** (ns + 2)) / (2 * ns + 1) * rho_rcv**nr
    return pref * out


# ---------------------------------------------------------------------------
# full-geometry operators
# ---------------------------------------------------------------------------

class SphereSystem:
    """Cached pair geometry for a finite collection of spheres.

    Pair couplings are deduplicated by relative displacement and radii, so
    regular arrays (chains, lattices of identical spheres) assemble in
    O(#distinct separations) block builds.
    """

    def __init__(self, geometry, L):
        if geometry.dimension != 3:
            raise DomainError("SphereSystem requires a 3D geometry")
        self.geometry = geometry
        self.L = L
        self.nb = basis_size(L)
        self.n = geometry.n
        self.centers = geometry.centers
        self.radii = geometry.radii
        self._pairs: dict[tuple, PairCache] = {}
        self._blocks: dict[tuple, np.ndarray] = {}

    def _pair_key(self, i, j):
        d = self.centers[i] - self.centers[j]
        return (round(d[0], 12), round(d[1], 12), round(d[2], 12), self.radii[j], self.radii[i])

    def pair(self, i, j):
        """Coupling cache for source j -> receiver i (i != j)."""
        key = self._pair_key(i, j)
        if key not in self._pairs:
            self._pairs[key] = PairCache(self.centers[j], self.radii[j], self.centers[i], self.radii[i], self.L)
        return self._pairs[key]

    def _pair_block(self, i, j, k, kind):
        key = (self._pair_key(i, j), complex(k), kind)
        if key not in self._blocks:
            if len(self._blocks) > 20000:
                self._blocks.clear()
            pc = self.pair(i, j)
            if kind == "S":
                self._blocks[key] = pc.single_layer_block(k)
            else:
                skey = (self._pair_key(i, j), complex(k), "S")
                if skey not in self._blocks:
                    self._blocks[skey] = pc.single_layer_block(k)
                self._blocks[key] = pc.np_block(k, self._blocks[skey])
        return self._blocks[key]

    def single_layer(self, k, wavenumbers=None):
        """Full matrix of S^k (or row-block wavenumbers k_i if given, for S-tilde)."""
        nb, N = self.nb, self.n
        M = np.zeros((N * nb, N * nb), dtype=complex)
        for i in range(N):
            ki = k if wavenumbers is None else wavenumbers[i]
            for j in range(N):
                blk = self_single_layer(self.L, self.radii[i], ki) if i == j else self._pair_block(i, j, ki, "S")
                M[i * nb : (i + 1) * nb, j * nb : (j + 1) * nb] = blk
        return M

    def neumann_poincare(self, k, wavenumbers=None):
        nb, N = self.nb, self.n
        M = np.zeros((N * nb, N * nb), dtype=complex)
        for i in range(N):
            ki = k if wavenumbers is None else wavenumbers[i]
            for j in range(N):
                if i == j:
                    blk = self_neumann_poincare(self.L, self.radii[i], ki)
                else:
                    blk = self._pair_block(i, j, ki, "K")
                M[i * nb : (i + 1) * nb, j * nb : (j + 1) * nb] = blk
        return M

    def chi_coeffs(self):
        """Value coefficients of the indicator functions chi_{dD_j} (columns)."""
        X = np.zeros((self.n * self.nb, self.n), dtype=complex)
        for j in range(self.n):
            X[j * self.nb, j] = np.sqrt(4 * np.pi)
        return X

    def integrate_density(self, coeffs):
        """integral over each dD_i of a density given by coefficient vector(s)."""
        coeffs = np.asarray(coeffs)
        vals = coeffs[np.arange(self.n) * self.nb]
        scale = np.sqrt(4 * np.pi) * self.radii**2
        return scale * vals if vals.ndim == 1 else scale[:, None] * vals


def quasi_single_layer_chain(system, alpha, period):
    """S^{alpha,0} for a chain (d=3, d_l=1) with all centers on the lattice axis.

    The geometry must be rotated so the chain runs along z (see
    capacitance.capmat_quasi, which handles the axis permutation).
    """
    z = system.centers[:, 2]
    if np.any(np.abs(system.centers[:, :2]) > 1e-12):
        raise DomainError("chain assembly requires centers on the lattice axis")
    nb, N = system.nb, system.n
    M = np.zeros((N * nb, N * nb), dtype=complex)
    for i in range(N):
        for j in range(N):
            blk = np.zeros((nb, nb), dtype=complex)
            if i == j:
                blk += self_single_layer(system.L, system.radii[i], 0)
            else:
                blk += axial_pair_block(system.L, z[i] - z[j], system.radii[j], system.radii[i])
            blk += chain_lattice_block(system.L, z[i] - z[j], period, alpha, system.radii[j], system.radii[i])
            M[i * nb : (i + 1) * nb, j * nb : (j + 1) * nb] = blk
    return M


def chain_alpha0_finite_part(system, period):
    """The alpha -> 0 finite-part assembly (s = 1 Lerch sums replaced by
    digamma finite parts; the dropped divergent constant is rank-one and is
    removed by the projected inverse)."""
    from scipy.special import digamma, zeta

    A = axial_table(system.L)
    n = degrees(system.L)
    ns, nr = n[None, :], n[:, None]
    s_mat = ns + nr + 1
    z = system.centers[:, 2]
    nb, N = system.nb, system.n
    M = np.zeros((N * nb, N * nb), dtype=complex)
    for i in range(N):
        for j in range(N):
            blk = np.zeros((nb, nb), dtype=complex)
            if i == j:
                blk += self_single_layer(system.L, system.radii[i], 0)
            else:
                blk += axial_pair_block(system.L, z[i] - z[j], system.radii[j], system.radii[i])
            u = (z[i] - z[j]) / period
            lat = np.zeros_like(A, dtype=complex)
            parity = (-1.0) ** (ns + nr)
            for s in range(1, int(s_mat.max()) + 1):
                if s == 1:
                    # finite part of sum 1/(m-u) + 1/(m+u)
                    val_p = -digamma(1.0 - u) - np.euler_gamma
                    val_m = -digamma(1.0 + u) - np.euler_gamma
                else:
                    val_p = zeta(s, 1.0 - u)
                    val_m = zeta(s, 1.0 + u)
                lat += np.where(s_mat == s, A * (parity * val_p + val_m) / period**s, 0.0)
            pref = -(system.radii[j] ** (ns + 2)) / (2 * ns + 1) * system.radii[i] ** nr
            blk += pref * lat
            M[i * nb : (i + 1) * nb, j * nb : (j + 1) * nb] = blk
    return M
