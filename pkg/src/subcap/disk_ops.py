"""Fourier-basis discretization of layer potentials on collections of disks.

Surface quantities on each disk are expanded in Fourier modes e^{i k theta},
k = -L..L.  Operator matrices map density coefficients to value coefficients
(same convention as sphere_ops).  Laplace self-spectra on a disk of radius
rho:

    S^0 [e^{ik theta}] = -rho/(2|k|) e^{ik theta}   (k != 0)
    S^0 [1]            =  rho ln rho
    K^0*[e^{ik theta}] =  (1/2) delta_{k0} e^{ik theta}

Inter-disk coupling of the free Laplace kernel is closed form (binomial
series of 1/(w+tau)^kappa and ln|w+tau| in the complex variable w = x - c).
Quasiperiodic operators add a smooth remainder kernel R = G^{a,k} - G^0,
assembled by Nystrom-Galerkin trapezoid quadrature (spectrally accurate on
circles) with the exact on-diagonal limit R(0).
"""

from __future__ import annotations

import numpy as np
from scipy.special import binom

from .errors import AssemblyError, DomainError
from .special import (
    crystal_2d_regularized,
    screen_quasi_remainder,
)

EULER_GAMMA = np.euler_gamma


def fourier_orders(L):
    return np.arange(-L, L + 1)


def disk_basis_size(L):
    return 2 * L + 1


def self_single_layer_disk(L, rho):
    k = fourier_orders(L)
    d = np.where(k == 0, rho * np.log(rho), -rho / (2.0 * np.maximum(np.abs(k), 1)))
    return np.diag(d.astype(complex))


def self_neumann_poincare_disk(L, rho):
    k = fourier_orders(L)
    return np.diag(np.where(k == 0, 0.5, 0.0).astype(complex))


def pair_single_layer_disk(L, tau, rho_src, rho_rcv):
    """Value coefficients on the receiver disk of S^0[e^{ik theta} on source].

    tau: complex receiver-center minus source-center; requires |tau| > rho_src + rho_rcv.
    Exterior fields: k>0: -(rho^{k+1}/2k) conj(w)^{-k};  k<0: mirror;  k=0: rho ln|w|,
    expanded about the receiver center with w = tau + u, |u| = rho_rcv < |tau|.
    """
    nb = disk_basis_size(L)
    out = np.zeros((nb, nb), dtype=complex)
    ks = fourier_orders(L)
    p = np.arange(1, L + 1)
    for col, k in enumerate(ks):
        if k == 0:
            # rho ln|tau + u| = rho[ln|tau| + 1/2 sum_p (-1)^{p+1}((u/tau)^p + cc)/p]
            out[L, col] = rho_src * np.log(abs(tau))
            coef = rho_src * 0.5 * (-1.0) ** (p + 1) / p
            out[L + p, col] = coef * (rho_rcv / tau) ** p
            out[L - p, col] = coef * np.conj((rho_rcv / tau) ** p)
        else:
            kap = abs(k)
            pref = -(rho_src ** (kap + 1)) / (2.0 * kap)
            q = np.arange(0, L + 1)
            series = (-1.0) ** q * binom(kap + q - 1, q) * rho_rcv**q / tau ** (kap + q)
            if k < 0:
                # field = pref * w^{-kap}: u^q has Fourier index +q
                out[L + q, col] = pref * series
            else:
                # field = pref * conj(w^{-kap}): index -q
                out[L - q, col] = pref * np.conj(series)
    return out


def pair_np_disk(L, tau, rho_src, rho_rcv, s_block=None):
    """K^{0,*} pair block: normal derivative of the smooth incident field.

    Regular value coefficients b_k scale as rho^{|k|}; derivative coefficients
    are b_k |k| / rho (and 0 for k = 0).
    """
    if s_block is None:
        s_block = pair_single_layer_disk(L, tau, rho_src, rho_rcv)
    k = fourier_orders(L)
    return (np.abs(k) / rho_rcv)[:, None] * s_block


class DiskSystem:
    """Finite collection of disks with Fourier-mode layer operators."""

    def __init__(self, geometry, L, n_quad=None):
        if geometry.dimension != 2:
            raise DomainError("DiskSystem requires a 2D geometry")
        self.geometry = geometry
        self.L = L
        self.nb = disk_basis_size(L)
        self.n = geometry.n
        self.centers = geometry.centers
        self.radii = geometry.radii
        self.P = n_quad or max(48, 4 * L + 8)
        th = 2 * np.pi * np.arange(self.P) / self.P
        self._nodes_cos, self._nodes_sin = np.cos(th), np.sin(th)
        ks = fourier_orders(L)
        self._emat = np.exp(1j * np.outer(ks, th))          # (nb, P): e^{ik theta_p}
        self._pmat = np.conj(self._emat) / self.P           # projection: coeffs = pmat @ values

    def _tau(self, i, j):
        d = self.centers[i] - self.centers[j]
        return complex(d[0], d[1])

    def single_layer(self):
        """Free Laplace single layer S^0 over the whole collection."""
        nb, N = self.nb, self.n
        M = np.zeros((N * nb, N * nb), dtype=complex)
        for i in range(N):
            for j in range(N):
                if i == j:
                    blk = self_single_layer_disk(self.L, self.radii[i])
                else:
                    blk = pair_single_layer_disk(self.L, self._tau(i, j), self.radii[j], self.radii[i])
                M[i * nb : (i + 1) * nb, j * nb : (j + 1) * nb] = blk
        return M

    def neumann_poincare(self):
        nb, N = self.nb, self.n
        M = np.zeros((N * nb, N * nb), dtype=complex)
        for i in range(N):
            for j in range(N):
                if i == j:
                    blk = self_neumann_poincare_disk(self.L, self.radii[i])
                else:
                    blk = pair_np_disk(self.L, self._tau(i, j), self.radii[j], self.radii[i])
                M[i * nb : (i + 1) * nb, j * nb : (j + 1) * nb] = blk
        return M

    def chi_coeffs(self):
        X = np.zeros((self.n * self.nb, self.n), dtype=complex)
        for j in range(self.n):
            X[j * self.nb + self.L, j] = 1.0
        return X

    def integrate_density(self, coeffs):
        """integral over each dD_i of densities given by coefficient columns."""
        coeffs = np.asarray(coeffs)
        vals = coeffs[np.arange(self.n) * self.nb + self.L]
        scale = 2 * np.pi * self.radii
        return scale * vals if vals.ndim == 1 else scale[:, None] * vals

    def moment(self, coeffs, axis):
        """integral over dD of coordinate-axis moment of the density: int y_axis psi dsigma."""
        coeffs = np.asarray(coeffs)
        cols = coeffs.reshape(self.n, self.nb, -1)
        a0 = cols[:, self.L, :]
        am = cols[:, self.L - 1, :]
        ap = cols[:, self.L + 1, :]
        rho = self.radii[:, None]
        cc = self.centers[:, axis][:, None]
        if axis == 0:
            mom = rho * (2 * np.pi * cc * a0 + rho * np.pi * (ap + am))
        else:
            mom = rho * (2 * np.pi * cc * a0 + rho * (np.pi / 1j) * (am - ap))
        out = mom.sum(axis=0)
        return out[0] if coeffs.ndim == 1 else out

    def ihat_rank_one(self):
        """Rank-one operator phi -> (int phi dsigma) * 1 in coefficient form."""
        u = np.zeros(self.n * self.nb, dtype=complex)
        w = np.zeros(self.n * self.nb, dtype=complex)
        for i in range(self.n):
            u[i * self.nb + self.L] = 1.0
            w[i * self.nb + self.L] = 2 * np.pi * self.radii[i]
        return np.outer(u, w)

    def s_hat(self, k, v_out=1.0):
        """Invertible 2D operator S^0 + (1/2 pi) log(k e^{gamma - i pi/2}/2) I_{dD}."""
        kk = complex(k) / v_out
        logterm = np.log(0.5 * kk) + EULER_GAMMA - 0.5j * np.pi
        return self.single_layer() + (logterm / (2 * np.pi)) * self.ihat_rank_one()

    # -- quasiperiodic assemblies --------------------------------------------

    def _remainder_operator(self, r_func):
        """Nystrom-Galerkin matrix of a smooth difference kernel r_func(vx, vy)."""
        nb, N, P = self.nb, self.n, self.P
        M = np.zeros((N * nb, N * nb), dtype=complex)
        xs = self.centers[:, 0][:, None] + self.radii[:, None] * self._nodes_cos
        ys = self.centers[:, 1][:, None] + self.radii[:, None] * self._nodes_sin
        for i in range(N):
            for j in range(N):
                vx = xs[i][:, None] - xs[j][None, :]
                vy = ys[i][:, None] - ys[j][None, :]
                Rk = r_func(vx.ravel(), vy.ravel()).reshape(P, P)
                blk = (2 * np.pi * self.radii[j] / P) * (self._pmat @ Rk @ self._emat.T)
                M[i * nb : (i + 1) * nb, j * nb : (j + 1) * nb] = blk
        return M

    def quasi_screen(self, alpha, k, period):
        """S^{alpha,k} for the d=2, d_l=1 screen: free part + smooth remainder."""
        from .special import screen_remainder_r0

        r0 = screen_remainder_r0(alpha, k, period)
        rem = self._remainder_operator(lambda vx, vy: screen_quasi_remainder(vx, vy, alpha, k, period, r0=r0))
        return self.single_layer() + rem

    def quasi_crystal(self, alpha, lattice):
        """S^{alpha,0} for the d = d_l = 2 crystal (Ewald remainder)."""
        def rf(vx, vy):
            pts = np.column_stack([vx, vy])
            return crystal_2d_regularized(pts, alpha, lattice)
        return self.single_layer() + self._remainder_operator(rf)

    def periodic_screen_finite_part(self, period):
        """The alpha=0, k=0 finite-part assembly (specrep_0 kernel); its
        projected inverse yields the periodic capacitance matrix."""
        from .special import screen_periodic_regularized

        return self.single_layer() + self._remainder_operator(lambda vx, vy: screen_periodic_regularized(vx, vy, period))
