"""Finite-system subwavelength resonances, damping, scattering and 2D modes.

Leading order, the resonances are omega_n = sqrt(lambda_n) + O(delta) with
lambda_n the eigenvalues of the generalized capacitance matrix.  The
next-order damping correction for identical materials is

    omega_n = sqrt(lambda_n) - i tau_n,
    tau_n = delta_1 v_1^2/(8 pi v) (v_n^T C J C v_n) / ||v_n||_D^2.

The oracle solves the full boundary-integral characteristic-value problem

    A(omega, delta) = [[ S~^omega,            -S^k                ],
                       [ -1/2 I + K~^{omega,*}, -delta~(1/2 I + K^{k,*}) ]]

discretized in the multipole basis, locating roots of the smallest singular
value with Muller's method in the complex plane.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import sphere_ops, disk_ops
from .capacitance import CapacitanceMatrix, capmat, gcm
from .errors import ConvergenceError, DomainError, UnsupportedError
from .geometry import Geometry, Materials
from .special import csqrt

EULER_GAMMA = np.euler_gamma


@dataclass
class SpectrumEntry:
    omega: complex
    eigvec: np.ndarray
    residual: float
    method: str


@dataclass
class Spectrum:
    entries: list[SpectrumEntry] = field(default_factory=list)
    defective: bool = False

    def __post_init__(self):
        self.sort()

    def sort(self):
        self.entries.sort(key=lambda e: (round(e.omega.real, 14), e.omega.imag))

    @property
    def omegas(self):
        return np.array([e.omega for e in self.entries])

    @property
    def eigvecs(self):
        return np.column_stack([e.eigvec for e in self.entries])

    def __len__(self):
        return len(self.entries)


def subwavelength_modes(gcm_matrix, method="capacitance"):
    """Spectrum from the generalized capacitance matrix: omega_n = sqrt(lambda_n)."""
    M = np.asarray(gcm_matrix, dtype=complex)
    lam, V = np.linalg.eig(M)
    w_all = csqrt(lam)
    order = np.lexsort((w_all.imag, np.round(w_all.real, 14)))
    defective = np.linalg.cond(V) > 1e12
    entries = []
    for idx in order:
        w = complex(csqrt(lam[idx]))
        v = V[:, idx] / np.linalg.norm(V[:, idx])
        res = float(np.linalg.norm(M @ v - lam[idx] * v))
        entries.append(SpectrumEntry(w, v, res, method))
    return Spectrum(entries, defective=defective)


def modes_with_damping(C: CapacitanceMatrix, materials: Materials):
    """sqrt(lambda_n) - i tau_n spectrum; requires identical real materials."""
    dv = materials.delta_v2
    if np.ptp(np.abs(dv)) > 1e-12 * np.max(np.abs(dv)) or np.any(np.abs(dv.imag) > 0):
        raise UnsupportedError("damping correction requires identical real materials")
    if C.geometry is None:
        raise DomainError("needs a geometry-backed capacitance matrix")
    Cm = np.asarray(C.entries, dtype=float)
    vol = C.geometry.volumes
    G = np.real(gcm(C, materials))
    lam, V = np.linalg.eigh(0.5 * (G + G.T))
    N = Cm.shape[0]
    J = np.ones((N, N))
    d1 = float(materials.delta[0].real)
    v1 = float(materials.v[0].real)
    entries = []
    for n in range(N):
        v = V[:, n]
        tau = d1 * v1**2 / (8 * np.pi * materials.v_out) * float(v @ Cm @ J @ Cm @ v) / float(np.sum(vol * v**2))
        w = complex(csqrt(lam[n])) - 1j * tau
        entries.append(SpectrumEntry(w, v, 0.0, "capacitance+damping"))
    return Spectrum(entries)


# ---------------------------------------------------------------------------
# Muller's method
# ---------------------------------------------------------------------------

def muller(f, x0, x1, x2, tol=1e-12, maxiter=100, ftol=None):
    """Muller's three-point method for a complex root of f."""
    p = [complex(x0), complex(x1), complex(x2)]
    fp = [complex(f(x)) for x in p]
    for _ in range(maxiter):
        q = (p[2] - p[1]) / (p[1] - p[0])
        a = q * fp[2] - q * (1 + q) * fp[1] + q**2 * fp[0]
        b = (2 * q + 1) * fp[2] - (1 + q) ** 2 * fp[1] + q**2 * fp[0]
        c = (1 + q) * fp[2]
        disc = np.sqrt(b**2 - 4 * a * c + 0j)
        den = b + disc if abs(b + disc) > abs(b - disc) else b - disc
        if den == 0:
            raise ConvergenceError("Muller breakdown")
        x_new = p[2] - (p[2] - p[1]) * 2 * c / den
        f_new = complex(f(x_new))
        p = [p[1], p[2], x_new]
        fp = [fp[1], fp[2], f_new]
        if abs(p[2] - p[1]) < tol * max(1.0, abs(p[2])) or (ftol is not None and abs(f_new) < ftol):
            return x_new, abs(f_new)
    raise ConvergenceError(f"Muller did not converge in {maxiter} iterations (last |f| = {abs(fp[2]):.2e})")


# ---------------------------------------------------------------------------
# boundary-integral oracle
# ---------------------------------------------------------------------------

class BoundaryOracle:
    """Discretized A(omega, delta) for a 3D sphere scene, and its sigma_min."""

    def __init__(self, geometry: Geometry, materials: Materials, L=4):
        if geometry.dimension != 3:
            raise DomainError("the oracle requires a 3D sphere scene")
        self.system = sphere_ops.SphereSystem(geometry, L)
        self.materials = materials
        self.L = L

    def matrix(self, omega):
        sys_ = self.system
        m = self.materials
        k = omega / m.v_out
        ks_in = [omega / m.v[i] for i in range(m.n)]
        S_in = sys_.single_layer(None, wavenumbers=ks_in)
        S_out = sys_.single_layer(k)
        K_in = sys_.neumann_poincare(None, wavenumbers=ks_in)
        K_out = sys_.neumann_poincare(k)
        nb = sys_.nb
        I = np.eye(sys_.n * nb)
        dl = np.repeat([m.delta[i] for i in range(m.n)], nb)
        top = np.hstack([S_in, -S_out])
        bot = np.hstack([-0.5 * I + K_in, -dl[:, None] * (0.5 * I + K_out)])
        return np.vstack([top, bot])

    def sigma_min(self, omega):
        return np.linalg.svd(self.matrix(omega), compute_uv=False)[-1]


def oracle_characteristic_values(geometry, materials, omega_init, L=4, tol=1e-10, maxiter=100):
    """Roots of the discretized boundary-integral operator near the given seeds.

    Muller's method on the smallest singular value (determinants of large
    discretized operators under/overflow).  Returns a Spectrum with one entry
    per seed; failed seeds get residual = inf and method 'oracle-failed'.
    """
    oracle = BoundaryOracle(geometry, materials, L)
    entries = []
    for w0 in np.atleast_1d(omega_init):
        w0 = complex(w0)
        root = None
        for spread in (1e-3, 1e-2):
            h = spread * max(abs(w0), 1e-3)
            try:
                cand, fval = muller(oracle.sigma_min, w0 - h, w0 + h, w0 - 1j * h,
                                    tol=1e-13, maxiter=maxiter, ftol=tol)
            except ConvergenceError:
                continue
            if abs(cand - w0) < 0.25 * max(abs(w0), 1e-6):
                root = cand
                break
        if root is None:
            entries.append(SpectrumEntry(w0, np.zeros(1), float("inf"), "oracle-failed"))
            continue
        M = oracle.matrix(root)
        _, sv, Vh = np.linalg.svd(M)
        vec = Vh[-1].conj()
        entries.append(SpectrumEntry(complex(root), vec, float(sv[-1]), "oracle"))
    return Spectrum(entries)


# ---------------------------------------------------------------------------
# modal scattering (finite systems)
# ---------------------------------------------------------------------------

class NearResonanceWarning(UserWarning):
    def __init__(self, index, gap, bound):
        self.index = index
        super().__init__(f"omega within the resonance exclusion zone of mode {index} (gap {gap:.3e} < {bound:.3e})")


def plane_wave_trace(system, kvec, shift=0.0):
    """Value coefficients of e^{i k.x} restricted to each sphere boundary."""
    grid = sphere_ops.unit_grid(system.L)
    out = np.zeros(system.n * system.nb, dtype=complex)
    kvec = np.asarray(kvec, dtype=complex)
    for i in range(system.n):
        pts = system.centers[i] + system.radii[i] * grid.points
        vals = np.exp(1j * (pts @ kvec) + 1j * shift)
        out[i * system.nb : (i + 1) * system.nb] = grid.proj @ vals
    return out


def eval_single_layer_field(system, coeffs, k, points):
    """S^k[density](x) at exterior points, density given by coefficient vector."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.zeros(pts.shape[0], dtype=complex)
    n_of = sphere_ops.degrees(system.L)
    from .special import spherical_hn_c, spherical_jn_c

    for j in range(system.n):
        rel = pts - system.centers[j]
        r = np.linalg.norm(rel, axis=1)
        ynm = sphere_ops.eval_ynm(system.L, rel / r[:, None])
        cj = coeffs[j * system.nb : (j + 1) * system.nb]
        rho = system.radii[j]
        if k == 0:
            rad = rho ** (n_of[:, None] + 2) / (2 * n_of[:, None] + 1) * r[None, :] ** -(n_of[:, None] + 1)
            out += -np.sum(cj[:, None] * rad * ynm, axis=0)
        else:
            hn = np.array([spherical_hn_c(nn, complex(k) * r) for nn in range(system.L + 1)])
            jn_rho = np.array([spherical_jn_c(nn, complex(k) * rho) for nn in range(system.L + 1)])
            pref = -1j * k * rho**2 * jn_rho[n_of]
            out += np.sum(cj[:, None] * pref[:, None] * hn[n_of] * ynm, axis=0)
    return out


@dataclass
class ScatterFinite:
    coefficients: np.ndarray
    omegas: np.ndarray
    warning: NearResonanceWarning | None
    _system: object
    _materials: Materials
    _modal_densities: np.ndarray   # psi_i columns
    _eigvecs: np.ndarray
    _uin_density: np.ndarray
    _omega: float

    def field(self, points):
        """Total field u(x) = sum a_n u_n(x) - S^k[(S^k)^{-1} u_in](x) + u_in(x)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        k = self._omega / self._materials.v_out
        mode_dens = self._modal_densities @ self._eigvecs @ self.coefficients
        u = eval_single_layer_field(self._system, mode_dens, k, pts)
        u -= eval_single_layer_field(self._system, self._uin_density, k, pts)
        kvec = self._kvec
        u += np.exp(1j * (pts @ kvec))
        return u


def scatter_finite(geometry, materials, direction, omega, C: CapacitanceMatrix | None = None, K_margin=1.0):
    """Modal solution of the scattering problem for an incident plane wave.

    Solves V diag(omega^2 - omega_n^2) a = rhs with
    rhs_i = (delta_i v_i^2/|D_i|) int_{dD_i} (S^0)^{-1}[u_in] dsigma.
    """
    import warnings

    if C is None:
        C = capmat(geometry)
    system = C.system
    G = gcm(C, materials)
    spec = subwavelength_modes(G)
    omegas = spec.omegas
    delta_scale = float(np.max(np.abs(materials.delta)))
    bound = K_margin * np.sqrt(delta_scale)
    gaps = np.abs(omega - omegas)
    warn = None
    if np.any(gaps < bound):
        idx = int(np.argmin(gaps))
        warn = NearResonanceWarning(idx, float(gaps[idx]), bound)
        warnings.warn(warn)
    k = omega / materials.v_out
    kvec = np.asarray(direction, dtype=float)
    kvec = k * kvec / np.linalg.norm(kvec)
    trace0 = plane_wave_trace(system, kvec)
    S0 = system.single_layer(0)
    dens0 = np.linalg.solve(S0, trace0)
    integrals = system.integrate_density(dens0)
    w = materials.delta_v2 / geometry.volumes
    rhs = w * integrals
    V = spec.eigvecs
    a = np.linalg.solve(V @ np.diag(omega**2 - omegas**2), rhs)
    Sk = system.single_layer(k)
    tracek = plane_wave_trace(system, kvec)
    uin_dens = np.linalg.solve(Sk, tracek)
    out = ScatterFinite(a, omegas, warn, system, materials, C.densities, V, uin_dens, omega)
    out._kvec = kvec
    return out


# ---------------------------------------------------------------------------
# two-dimensional finite systems
# ---------------------------------------------------------------------------

B1_2D = -1.0 / (8 * np.pi)
C1_2D = B1_2D * (EULER_GAMMA - np.log(2) - 1 - 0.5j * np.pi)


def _kernel_densities_2d(system):
    """Basis psi_j of ker(-1/2 I + K^{0,*}) normalized by int_{dD_i} psi_j = delta_ij."""
    M = -0.5 * np.eye(system.n * system.nb) + system.neumann_poincare()
    _, sv, Vh = np.linalg.svd(M)
    null = Vh[-system.n :].conj().T
    B = system.integrate_density(null)
    return null @ np.linalg.inv(B)


def a2_matrix(geometry, materials: Materials, omega, system=None, psi=None):
    """The N x N matrix whose vanishing determinant locates 2D resonances."""
    if system is None:
        system = disk_ops.DiskSystem(geometry, 8)
    if psi is None:
        psi = _kernel_densities_2d(system)
    N = geometry.n
    S0 = system.single_layer()
    Spsi = S0 @ psi
    int_psi = system.integrate_density(psi)          # (N pieces, N columns)
    total_psi = int_psi.sum(axis=0)
    # S_D[psi_j] is constant on each dD_i: its k=0 value coefficient per disk
    svals = np.zeros((N, N), dtype=complex)
    for i in range(N):
        svals[i] = Spsi[i * system.nb + system.L]
    k = omega / materials.v_out
    sh = system.s_hat(omega, materials.v_out)
    chi_all = np.zeros(system.n * system.nb, dtype=complex)
    for i in range(N):
        chi_all[i * system.nb + system.L] = 1.0
    shinv_chi = np.linalg.solve(sh, chi_all)
    int_shinv = system.integrate_density(shinv_chi)
    A = np.zeros((N, N), dtype=complex)
    vol = geometry.volumes
    logw = np.log(omega)
    for i in range(N):
        vi = materials.v[i]
        for j in range(N):
            A[i, j] = (
                omega**2 * logw
                + ((1 + C1_2D / B1_2D - np.log(vi)) - svals[i, j] / (4 * B1_2D * total_psi[j])) * omega**2
                - (vi**2 / (4 * B1_2D * vol[i]))
                * (int_psi[i, j] / total_psi[j] + np.log(materials.v_out / vi) / (2 * np.pi) * int_shinv[i])
                * materials.delta[i]
            )
    return A


def modes_2d(geometry, materials: Materials, n_roots=None, L=8):
    """Subwavelength resonances of a 2D disk scene: roots of det A^(2)(omega, delta)."""
    if geometry.dimension != 2:
        raise DomainError("modes_2d requires disks")
    system = disk_ops.DiskSystem(geometry, L)
    psi = _kernel_densities_2d(system)
    n_roots = n_roots or geometry.n

    def f(w):
        return np.linalg.det(a2_matrix(geometry, materials, w, system, psi))

    delta_scale = float(np.max(np.abs(materials.delta)))
    entries = []
    # seed scale: omega^2 |log omega| ~ delta v^2 2 pi/|D| gives the Minnaert-type scale
    w_scale = np.sqrt(delta_scale)
    seeds = w_scale * (0.5 + 1.2 * np.arange(n_roots))
    found = []
    for s in seeds:
        try:
            root, fval = muller(f, s, s * 1.05, s * (1 + 0.05j), tol=1e-13, ftol=None, maxiter=200)
        except ConvergenceError:
            continue
        if root.real < 0:
            root = -root.conjugate()
        if any(abs(root - r) < 1e-8 * max(1, abs(root)) for r in found):
            continue
        found.append(root)
        entries.append(SpectrumEntry(complex(root), np.zeros(geometry.n), abs(f(root)), "2d-determinant"))
    return Spectrum(entries)


# ---------------------------------------------------------------------------
# effective medium constants (dimer)
# ---------------------------------------------------------------------------

def effective_medium_dimer(C, lam1, lam2, P, mu, eta1, a, volume, v1, Lam, B, V, k):
    """Double-negative effective constants of a dilute dimer suspension.

    g0 = 2(C11 + C12)/(1 - lam1/lam2),  g1 = mu^2 v1^2 P^2 / (2 |D| lam2 (mu^3 eta1 - a)).
    Reports whether the chosen density Lam makes 1 - Lam g1 B and k^2 - Lam g0 V negative.
    """
    C = np.asarray(C, dtype=float)
    if not (lam2 > lam1 > 0):
        raise DomainError("need lam2 > lam1 > 0 (degenerate dimer)")
    if not (a < mu**3 * eta1):
        raise DomainError("frequency offset must satisfy a < mu^3 eta1")
    g0 = 2 * (C[0, 0] + C[0, 1]) / (1 - lam1 / lam2)
    g1 = mu**2 * v1**2 * P**2 / (2 * volume * lam2 * (mu**3 * eta1 - a))
    m1_neg = 1 - Lam * g1 * B < 0
    m2_neg = k**2 - Lam * g0 * V < 0
    lam_threshold = max(1.0 / (g1 * B), k**2 / (g0 * V))
    return {
        "g0": g0,
        "g1": g1,
        "M1_negative": bool(m1_neg),
        "M2_negative": bool(m2_neg),
        "Lam_threshold": lam_threshold,
    }
