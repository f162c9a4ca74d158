"""Capacitance matrices: static, quasiperiodic, periodic, dilute, higher-order.

The static matrix of a 3D sphere collection is

    C_ij = -int_{dD_i} (S^0)^{-1}[chi_{dD_j}] dsigma,

symmetric positive definite.  The generalized matrix weights rows by
delta_i v_i^2 / |D_i|; its eigenvalues lambda_n give the subwavelength
resonances omega_n = sqrt(lambda_n) at leading order.

Quasiperiodic variants replace S^0 by S^{alpha,0} (chains of spheres via
axial Lerch lattice sums; screens and 2D crystals of disks via spectral /
Ewald remainders).  The periodic (alpha -> 0) matrix C^0 is obtained from a
Sherman-Morrison projected inverse: the divergent part of S^{alpha,0} is the
rank-one constant-kernel term, and

    lim (S)^{-1}-capacitance = -X^T [A^{-1} - A^{-1} 1 chi^T A^{-1} / (chi^T A^{-1} 1)] X

applied to any finite-part assembly A (invariant under A -> A + c 1 chi^T).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import disk_ops, sphere_ops
from .errors import AssemblyError, DomainError
from .geometry import Geometry, Lattice, Materials

DEFAULT_L = 4
MAX_L = 16
ADAPT_RTOL = 1e-8


@dataclass
class CapacitanceMatrix:
    """Capacitance matrix with provenance and cached densities for mode reconstruction."""

    entries: np.ndarray
    kind: str
    geometry: Geometry | None = None
    densities: np.ndarray | None = None   # density coefficient columns psi_j
    system: object | None = None          # SphereSystem / DiskSystem used
    meta: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


def _symmetrize_checked(M, tol=1e-6):
    asym = np.max(np.abs(M - M.T))
    scale = max(np.max(np.abs(M)), 1e-300)
    if asym > tol * scale:
        raise AssemblyError(f"capacitance asymmetry {asym:.3e} exceeds tolerance")
    return 0.5 * (M + M.T), asym


def _solve_capacitance(system, S):
    """Solve S psi = chi and integrate: C_ij = -int_{dD_i} psi_j."""
    chi = system.chi_coeffs()
    psi = np.linalg.solve(S, chi)
    C = -system.integrate_density(psi)
    return C, psi


def capmat(geometry, L=None, adaptive=True):
    """Static capacitance matrix of a 3D sphere collection.

    Multipole truncation starts at L=4 and is raised until entries change by
    < 1e-8 relative (capped at L=12) unless an explicit L is given.
    """
    if geometry.dimension != 3:
        raise DomainError("capmat requires 3D spheres; use the 2D operations in modes for disks")
    Ls = [L] if L is not None else list(range(DEFAULT_L, MAX_L + 1, 2))
    prev = None
    for Lt in Ls:
        system = sphere_ops.SphereSystem(geometry, Lt)
        S = system.single_layer(0)
        C, psi = _solve_capacitance(system, S)
        C = np.real_if_close(C, tol=1e6).real.astype(float)
        if prev is not None and np.max(np.abs(C - prev)) <= ADAPT_RTOL * np.max(np.abs(C)):
            break
        prev = C
        if not adaptive and L is not None:
            break
    Csym, asym = _symmetrize_checked(C)
    return CapacitanceMatrix(Csym, "static", geometry, psi, system, {"L": system.L, "asymmetry": asym})


def capmat_bispherical(r1, r2, d, tol=1e-14, max_terms=200_000):
    """Two-sphere capacitance from the bispherical series (radii r1, r2, gap d)."""
    if min(r1, r2, d) <= 0:
        raise DomainError("r1, r2, d must be positive")
    a = np.sqrt(d * (2 * r1 + d) * (2 * r2 + d) * (2 * r1 + 2 * r2 + d)) / (2 * (r1 + r2 + d))
    x1 = np.arcsinh(a / r1)
    x2 = np.arcsinh(a / r2)
    C = np.zeros((2, 2))
    n = 0
    while n < max_terms:
        w = 2 * n + 1
        den = np.expm1(w * (x1 + x2))
        t11 = np.exp(w * x2) / den
        t22 = np.exp(w * x1) / den
        t12 = -1.0 / den
        C += 8 * np.pi * a * np.array([[t11, t12], [t12, t22]])
        if 8 * np.pi * a * max(t11, t22) < tol:
            break
        n += 1
    return C


def capmat_dilute(capacities, positions, eps):
    """Dilute capacitance: diagonal Cap_{B_i}, off-diagonal -eps Cap_i Cap_j / (4 pi |z_i - z_j|)."""
    caps = np.asarray(capacities, dtype=float)
    z = np.atleast_2d(np.asarray(positions, dtype=float))
    if eps <= 0:
        raise DomainError("eps must be positive")
    n = caps.size
    C = np.diag(caps.astype(float))
    for i in range(n):
        for j in range(i + 1, n):
            r = np.linalg.norm(z[i] - z[j])
            if r == 0:
                raise DomainError("coincident positions in dilute capacitance")
            C[i, j] = C[j, i] = -eps * caps[i] * caps[j] / (4 * np.pi * r)
    return CapacitanceMatrix(C, f"dilute(eps={eps})")


def gcm(C, materials: Materials):
    """Generalized capacitance matrix: rows scaled by delta_i v_i^2 / |D_i|."""
    entries = np.asarray(C.entries if isinstance(C, CapacitanceMatrix) else C, dtype=complex)
    if materials.n != entries.shape[0]:
        raise DomainError("materials/capacitance size mismatch")
    geom = C.geometry if isinstance(C, CapacitanceMatrix) else None
    if geom is not None:
        vol = geom.volumes
    elif "volumes" in getattr(C, "meta", {}):
        vol = np.asarray(C.meta["volumes"], dtype=float)
    else:
        raise DomainError("volumes unavailable; pass a CapacitanceMatrix with geometry")
    if np.any(vol <= 0):
        raise DomainError("zero volume")
    w = materials.delta_v2 / vol
    return w[:, None] * entries


def gcm_from_volumes(C, materials: Materials, volumes):
    entries = np.asarray(C, dtype=complex)
    w = materials.delta_v2 / np.asarray(volumes, dtype=float)
    return w[:, None] * entries


# ---------------------------------------------------------------------------
# quasiperiodic
# ---------------------------------------------------------------------------

def _chain_rotate(geometry):
    """Map a chain along x to a chain along z (cyclic axis permutation)."""
    c = geometry.centers[:, [1, 2, 0]]
    from .geometry import spheres

    return spheres(c, geometry.radii)


def _hermitize_checked(M, tol=1e-8):
    dev = np.max(np.abs(M - M.conj().T))
    scale = max(np.max(np.abs(M)), 1e-300)
    if dev > tol * scale:
        raise AssemblyError(f"quasiperiodic capacitance non-Hermitian by {dev:.3e}")
    return 0.5 * (M + M.conj().T), dev


def capmat_quasi(geometry, lattice: Lattice, alpha, L=None):
    """Quasiperiodic capacitance matrix C^alpha.

    Chains (d=3, d_l=1): exact axial multipole lattice sums.
    Screens (d=2, d_l=1) and 2D crystals (d=d_l=2): disk Fourier assembly.
    alpha: scalar (chains/screens) or 2-vector (crystals); must avoid dual
    lattice points.
    """
    d, dl = lattice.dim, lattice.lattice_dim
    if d == 3 and dl == 1:
        a1 = float(np.atleast_1d(alpha)[0])
        period = lattice.periods[0]
        if abs(np.exp(1j * a1 * period) - 1.0) < 1e-9:
            raise DomainError("alpha at a dual lattice point")
        Lt = L or DEFAULT_L
        rot = _chain_rotate(geometry)
        system = sphere_ops.SphereSystem(rot, Lt)
        S = sphere_ops.quasi_single_layer_chain(system, a1, period)
        C, psi = _solve_capacitance(system, S)
        Ch, dev = _hermitize_checked(C)
        return CapacitanceMatrix(Ch, f"quasi(alpha={a1})", geometry, psi, system, {"L": Lt, "herm_dev": dev})
    if d == 2 and dl == 1:
        a1 = float(np.atleast_1d(alpha)[0])
        period = lattice.periods[0]
        Lt = L or 6
        system = disk_ops.DiskSystem(geometry, Lt)
        S = system.quasi_screen(a1, 0.0, period)
        C, psi = _solve_capacitance(system, S)
        Ch, dev = _hermitize_checked(C)
        return CapacitanceMatrix(Ch, f"quasi(alpha={a1})", geometry, psi, system, {"L": Lt, "herm_dev": dev})
    if d == 2 and dl == 2:
        a = np.asarray(alpha, dtype=float)[:2]
        Lt = L or 6
        system = disk_ops.DiskSystem(geometry, Lt)
        S = system.quasi_crystal(a, lattice)
        C, psi = _solve_capacitance(system, S)
        Ch, dev = _hermitize_checked(C)
        return CapacitanceMatrix(Ch, f"quasi(alpha={tuple(a)})", geometry, psi, system, {"L": Lt, "herm_dev": dev})
    raise DomainError(f"unsupported lattice (d={d}, d_l={dl})")


def capmat_quasi_chain_sweep(geometry, lattice, alphas, L=None):
    """C^alpha over an alpha grid for a chain, with batched Lerch sums."""
    d, dl = lattice.dim, lattice.lattice_dim
    if not (d == 3 and dl == 1):
        raise DomainError("sweep fast path is for chains")
    period = lattice.periods[0]
    alphas = np.asarray(alphas, dtype=float)
    Lt = L or DEFAULT_L
    rot = _chain_rotate(geometry)
    system = sphere_ops.SphereSystem(rot, Lt)
    from .special import lerch_sum

    A = sphere_ops.axial_table(Lt)
    n = sphere_ops.degrees(Lt)
    ns, nr = n[None, :], n[:, None]
    s_mat = ns + nr + 1
    smax = int(s_mat.max())
    z = system.centers[:, 2]
    nb, N = system.nb, system.n
    theta = alphas * period
    zp = np.exp(1j * theta)
    zm = np.exp(-1j * theta)
    offsets = sorted({round((z[i] - z[j]) / period, 12) for i in range(N) for j in range(N)})
    lp = {(s, u): lerch_sum(zp, s, -u) for u in offsets for s in range(1, smax + 1)}
    lm = {(s, u): lerch_sum(zm, s, +u) for u in offsets for s in range(1, smax + 1)}
    parity = (-1.0) ** (ns + nr)
    out = []
    base = np.zeros((N * nb, N * nb), dtype=complex)
    for i in range(N):
        for j in range(N):
            if i == j:
                blk = sphere_ops.self_single_layer(Lt, system.radii[i], 0)
            else:
                blk = sphere_ops.axial_pair_block(Lt, z[i] - z[j], system.radii[j], system.radii[i])
            base[i * nb : (i + 1) * nb, j * nb : (j + 1) * nb] = blk
    pref = {}
    for i in range(N):
        for j in range(N):
            pref[(i, j)] = -(system.radii[j] ** (ns + 2)) / (2 * ns + 1) * system.radii[i] ** nr
    for ia in range(alphas.size):
        S = base.copy()
        for i in range(N):
            for j in range(N):
                u = round((z[i] - z[j]) / period, 12)
                lat = np.zeros_like(A, dtype=complex)
                for s in range(1, smax + 1):
                    lat += np.where(s_mat == s, A * (parity * lp[(s, u)][ia] + lm[(s, u)][ia]) / period**s, 0.0)
                S[i * nb : (i + 1) * nb, j * nb : (j + 1) * nb] += pref[(i, j)] * lat
        C, psi = _solve_capacitance(system, S)
        Ch, dev = _hermitize_checked(C)
        out.append(CapacitanceMatrix(Ch, f"quasi(alpha={alphas[ia]})", geometry, psi, system, {"L": Lt}))
    return out


# ---------------------------------------------------------------------------
# periodic (alpha -> 0) limits
# ---------------------------------------------------------------------------

def projected_inverse_apply(A, ones_vec, chi_func, rhs):
    """[A^{-1} - A^{-1} u w^T A^{-1} / (w^T A^{-1} u)] rhs, u = ones, w = chi functional."""
    sol = np.linalg.solve(A, np.column_stack([rhs, ones_vec]))
    s_rhs, s_u = sol[:, :-1], sol[:, -1]
    w_s_rhs = chi_func @ s_rhs
    w_s_u = chi_func @ s_u
    return s_rhs - np.outer(s_u, w_s_rhs) / w_s_u


def capmat_periodic(geometry, lattice: Lattice, alpha0=0.0, L=None, v_out=1.0, fd_omegas=(1e-3, 5e-4)):
    """Periodic screen capacitance C^0, higher-order C^{1,alpha0}, and moment vectors c_n.

    Metascreen case d - d_l = 1 (here d=2, d_l=1).  C^0 comes from the
    projected inverse of the regularized alpha -> 0 operator (independent of
    alpha0); C^{1,alpha0} is the omega-linear coefficient of the capacitance
    built from the true (S^{omega alpha0, omega})^{-1}, extracted by two-point
    finite differencing with Richardson extrapolation.
    """
    d, dl = lattice.dim, lattice.lattice_dim
    if d - dl != 1 or d != 2:
        raise DomainError("capmat_periodic implemented for the d=2, d_l=1 metascreen")
    if abs(alpha0) * v_out >= 1.0:
        raise DomainError("|alpha0| must be < 1/v")
    period = lattice.periods[0]
    Lt = L or 6
    system = disk_ops.DiskSystem(geometry, Lt)
    A = system.periodic_screen_finite_part(period)
    if alpha0 != 0.0:
        c = np.sqrt(1.0 / v_out**2 - alpha0**2)
        # omega-independent alpha0 terms of the regularized operator:
        #   + (alpha0 x /(2 c |Y|)) <chi, .>  -  (1/(2 c |Y|)) 1 <alpha0 y-moment, .>
        xfun = _linear_value_coeffs(system, axis=0)
        u1 = np.zeros(system.n * system.nb, dtype=complex)
        for i in range(system.n):
            u1[i * system.nb + system.L] = 1.0
        w_int = _integral_functional(system)
        w_mom = _moment_functional(system, axis=0)
        A = A + np.outer(alpha0 * xfun / (2 * c * period), w_int) - np.outer(u1, alpha0 * w_mom / (2 * c * period))
    ones_vec = np.zeros(system.n * system.nb, dtype=complex)
    for i in range(system.n):
        ones_vec[i * system.nb + system.L] = 1.0
    chi_func = _integral_functional(system)
    psi0 = projected_inverse_apply(A, ones_vec, chi_func, system.chi_coeffs())
    C0 = -np.real(system.integrate_density(psi0))
    C0, _ = _symmetrize_checked(C0, tol=1e-5)
    cvecs = np.column_stack([system.moment(psi0, axis=0), system.moment(psi0, axis=1)])
    # higher-order matrix by finite differences of the full quasiperiodic solve
    Ms = []
    for om in fd_omegas:
        Sq = system.quasi_screen(om * alpha0, om / v_out, period)
        M, _ = _solve_capacitance(system, Sq)
        Ms.append(M)
    C1_coarse = (Ms[0] - C0) / fd_omegas[0]
    C1_fine = (Ms[1] - C0) / fd_omegas[1]
    r = fd_omegas[0] / fd_omegas[1]
    C1 = (r * C1_fine - C1_coarse) / (r - 1.0)
    c0 = CapacitanceMatrix(C0, "periodic", geometry, psi0, system, {"L": Lt, "alpha0": alpha0})
    c1 = CapacitanceMatrix(C1, f"first-order(alpha0={alpha0})", geometry, None, system, {"L": Lt})
    return c0, c1, cvecs


def chain_periodic_limit(geometry, lattice, L=None):
    """alpha -> 0 limit matrix C^0 for a 3D chain (projected inverse of the
    digamma finite-part assembly)."""
    period = lattice.periods[0]
    Lt = L or DEFAULT_L
    rot = _chain_rotate(geometry)
    system = sphere_ops.SphereSystem(rot, Lt)
    A = sphere_ops.chain_alpha0_finite_part(system, period)
    ones_vec = np.zeros(system.n * system.nb, dtype=complex)
    for i in range(system.n):
        ones_vec[i * system.nb] = np.sqrt(4 * np.pi)
    chi_func = np.zeros(system.n * system.nb, dtype=complex)
    for j in range(system.n):
        chi_func[j * system.nb] = np.sqrt(4 * np.pi) * system.radii[j] ** 2
    psi0 = projected_inverse_apply(A, ones_vec, chi_func, system.chi_coeffs())
    C0 = -np.real(system.integrate_density(psi0))
    C0, _ = _symmetrize_checked(C0, tol=1e-5)
    return CapacitanceMatrix(C0, "periodic", geometry, psi0, system, {"L": Lt})


def _integral_functional(system):
    """Row functional w with w @ coeffs = int_{dD} density dsigma."""
    w = np.zeros(system.n * system.nb, dtype=complex)
    for j in range(system.n):
        w[j * system.nb + system.L] = 2 * np.pi * system.radii[j]
    return w


def _moment_functional(system, axis):
    """Row functional for int_{dD} y_axis density dsigma (disk systems)."""
    w = np.zeros(system.n * system.nb, dtype=complex)
    for j in range(system.n):
        rho = system.radii[j]
        cc = system.centers[j, axis]
        w[j * system.nb + system.L] = 2 * np.pi * rho * cc
        if axis == 0:
            w[j * system.nb + system.L + 1] += np.pi * rho**2
            w[j * system.nb + system.L - 1] += np.pi * rho**2
        else:
            w[j * system.nb + system.L - 1] += np.pi * rho**2 / 1j
            w[j * system.nb + system.L + 1] -= np.pi * rho**2 / 1j
    return w


def _linear_value_coeffs(system, axis):
    """Value coefficients of the linear function x_axis restricted to each disk."""
    u = np.zeros(system.n * system.nb, dtype=complex)
    for i in range(system.n):
        rho = system.radii[i]
        cc = system.centers[i, axis]
        u[i * system.nb + system.L] = cc
        if axis == 0:
            u[i * system.nb + system.L + 1] += rho / 2.0
            u[i * system.nb + system.L - 1] += rho / 2.0
        else:
            u[i * system.nb + system.L + 1] += rho / (2j)
            u[i * system.nb + system.L - 1] -= rho / (2j)
    return u
