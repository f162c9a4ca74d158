"""Special functions and Green's functions (free-space, quasiperiodic, periodic).

Conventions
-----------
Free-space Helmholtz kernel (note the leading minus signs):

    G^k(x) = -e^{ik|x|}/(4 pi |x|)        d = 3,
    G^k(x) = -(i/4) H_0^(1)(k|x|)         d = 2,

with the Laplace limits -1/(4 pi |x|) and (1/(2 pi)) ln|x|.

Quasiperiodic kernels are Floquet sums G^{a,k}(x) = sum_m G^k(x-m) e^{i a.m}
over a lattice of dimension d_l <= d.  For a "screen" (d - d_l = 1) the
spectral form

    G^{a,k}(x) = -sum_{q in L*} e^{i(a+q).x_l} e^{-g_q |x_0|} / (2 |Y_l| g_q),
    g_q = sqrt(|a+q|^2 - k^2)   (Re >= 0; propagating branch -i sqrt(k^2-|a+q|^2))

converges exponentially off the lattice plane; on-plane evaluation uses
Kummer-accelerated tails (1D dual lattice, summed in closed form as Lerch
series) or Ewald summation (2D dual lattice).  Fully periodic 2D crystals
(d = d_l = 2) use classical Ewald splitting of the Laplace lattice sum.

All complex square roots use the branch with Re >= 0, ties broken toward
Im >= 0 (resonances live in the closed lower half-plane).
"""

from __future__ import annotations

import numpy as np
from scipy.special import exp1, erfc, gamma, hankel1, roots_genlaguerre

from .errors import AnomalyError, DomainError, SingularityError

__all__ = [
    "csqrt",
    "gamma_q",
    "greens",
    "greens_quasi",
    "greens_periodic_screen",
    "lerch_sum",
    "spherical_jn_c",
    "spherical_hn_c",
]

RW_TOL = 1e-6  # Rayleigh-Wood exclusion tube radius


def csqrt(z):
    """Square root on the branch with Re >= 0, ties broken toward Im >= 0."""
    z = np.asarray(z, dtype=complex)
    r = np.sqrt(z)
    flip = (r.real < 0) | ((r.real == 0) & (r.imag < 0))
    return np.where(flip, -r, r)


def gamma_q(beta_sq, k):
    """Transverse rate sqrt(beta^2 - k^2) with the outgoing branch.

    Real positive for evanescent orders; -i sqrt(k^2 - beta^2) for orders
    propagating at real k (so e^{-g |x0|} radiates outward).
    """
    k = complex(k)
    val = csqrt(np.asarray(beta_sq, dtype=complex) - k * k)
    if k.imag == 0:
        prop = np.asarray(beta_sq, dtype=float) < k.real**2
        val = np.where(prop, -val, val)
    return val


# ---------------------------------------------------------------------------
# free space
# ---------------------------------------------------------------------------

def greens(x, k, dimension):
    """Free-space Green's function G^k(x); k = 0 dispatches to the Laplace kernel."""
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    if np.any(r == 0):
        raise SingularityError("G^k evaluated at x = 0")
    k = complex(k)
    if k.real < 0:
        raise DomainError("Re(k) must be >= 0")
    if dimension == 3:
        if k == 0:
            return -1.0 / (4 * np.pi * r)
        return -np.exp(1j * k * r) / (4 * np.pi * r)
    if dimension == 2:
        if k == 0:
            return np.log(r) / (2 * np.pi)
        if k.real == 0 and k.imag > 0:
            raise DomainError("2D kernel undefined for k on the positive imaginary axis")
        return -0.25j * hankel1(0, k * r)
    raise DomainError(f"dimension must be 2 or 3, got {dimension}")


# ---------------------------------------------------------------------------
# oscillatory lattice tails:  sum_{n>=1} z^n / (n+a)^s
# ---------------------------------------------------------------------------

_LAGUERRE_CACHE: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}


def _laguerre(nodes, s):
    key = (nodes, s)
    if key not in _LAGUERRE_CACHE:
        _LAGUERRE_CACHE[key] = roots_genlaguerre(nodes, s - 1)
    return _LAGUERRE_CACHE[key]


def lerch_sum(z, s, a, head=2048, nodes=48):
    """sum_{n>=1} z^n / (n+a)^s  for |z| <= 1, z != 1, integer s >= 1, a > -1.

    Direct head of N terms plus the exact integral tail

        sum_{n>=N} z^n/(n+a)^s = z^N (N+a)^{-s} / Gamma(s)
                                 * int_0^inf u^{s-1} e^{-u} f(u) du,
        f(u) = e^{-u a/(N+a)} ... collapsed to 1/(1 - z e^{-u/(N+a)}),

    evaluated with generalized Gauss-Laguerre nodes.  N adapts to the
    distance of z from 1 so the quadrature integrand stays slowly varying;
    accuracy ~1e-14 down to |arg z| ~ 1e-5.  z may be an array.
    """
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(1.0 - z) < 1e-9):
        raise DomainError("lerch_sum diverges at z = 1")
    sep = np.maximum(np.abs(np.angle(z)), 1.0 - np.abs(z))
    N = int(max(head, np.ceil(64.0 / max(float(np.min(sep)), 1e-7))))
    N = min(N, 8_000_000)
    out = np.zeros(z.shape, dtype=complex)
    for i0 in range(0, N - 1, 500_000):
        nn = np.arange(i0 + 1, min(i0 + 500_001, N), dtype=float)
        out = out + (z[..., None] ** nn @ (1.0 / (nn + a) ** s) if z.ndim else np.sum(z**nn / (nn + a) ** s))
    u, w = _laguerre(nodes, s)
    b = N + a
    denom = 1.0 - z[..., None] * np.exp(-u / b) if z.ndim else 1.0 - z * np.exp(-u / b)
    tail = (z**N) * b ** (-float(s)) / gamma(s) * np.sum(w / denom, axis=-1)
    return out + tail


def lerch_partial(z, s, a, upto):
    """sum_{n=1..upto} z^n/(n+a)^s (helper for splitting heads off lerch_sum)."""
    n = np.arange(1, upto + 1, dtype=float)
    z = np.asarray(z, dtype=complex)
    if z.ndim:
        return z[..., None] ** n @ (1.0 / (n + a) ** s)
    return np.sum(z**n / (n + a) ** s)


def lerch_sum_multi(z, s_values, a, skip=0, head=256, nodes=48):
    """sum_{n > skip} z^n/(n+a)^s for several s at once, sharing the power matrix.

    Equivalent to [lerch_sum(z, s, a) - lerch_partial(z, s, a, skip) for s in
    s_values] but builds z^n only once; z is an array.
    """
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(1.0 - z) < 1e-9):
        raise DomainError("lerch diverges at z = 1")
    sep = np.maximum(np.abs(np.angle(z)), 1.0 - np.abs(z))
    N = int(max(head + skip, np.ceil(64.0 / max(float(np.min(sep)), 1e-7))))
    n = np.arange(skip + 1, N, dtype=float)
    logz = np.log(z)
    out = {}
    chunk = max(1, int(4_000_000 // max(z.size, 1)))
    heads = {s: np.zeros(z.shape, dtype=complex) for s in s_values}
    for i0 in range(0, n.size, chunk):
        nn = n[i0 : i0 + chunk]
        Z = np.exp(np.multiply.outer(logz, nn))
        for s in s_values:
            heads[s] += Z @ (1.0 / (nn + a) ** s)
    for s in s_values:
        u, w = _laguerre(nodes, s)
        b = N + a
        denom = 1.0 - z[..., None] * np.exp(-u / b)
        tail = (z**N) * b ** (-float(s)) / gamma(s) * np.sum(w / denom, axis=-1)
        out[s] = heads[s] + tail
    return out


# ---------------------------------------------------------------------------
# quasiperiodic Green's functions
# ---------------------------------------------------------------------------

def rayleigh_wood_distance(lattice, alpha, k):
    """min over dual points q of | |alpha+q| - |k| | (anomaly proximity)."""
    alpha = np.asarray(alpha, dtype=float)
    qs = lattice.dual_points(radius=abs(k) + np.linalg.norm(alpha) + 6.0 * np.pi / min(lattice.periods))
    return float(np.min(np.abs(np.linalg.norm(alpha + qs, axis=1) - abs(k))))


def check_rayleigh_wood(lattice, alpha, k, tol=RW_TOL):
    alpha = np.asarray(alpha, dtype=float)
    qs = lattice.dual_points(radius=abs(k) + np.linalg.norm(alpha) + 6.0 * np.pi / min(lattice.periods))
    dist = np.abs(np.linalg.norm(alpha + qs, axis=1) - abs(k))
    i = int(np.argmin(dist))
    if dist[i] < tol:
        raise AnomalyError(qs[i], float(dist[i]))


def _screen_1d_sum(x, y, alpha, k, L, n_direct=64):
    """Spectral sum for d=2, d_l=1 screens, valid on-plane (y = 0 included).

    Orders |n| <= n_direct are summed exactly.  Each tail side is Kummer
    expanded about its k = 0 form, 1/g_n ~ 1/|b_n| (1 + k^2/2 b_n^2 + ...),
    e^{-g_n y} ~ e^{-|b_n| y}(1 + k^2 y/2|b_n|), and the resulting geometric
    Lerch series (s = 1, 2, 3) are summed in closed form; the neglected
    remainder is O(k^4 / n_direct^4) relative.
    """
    y = abs(float(y))
    k = complex(k)
    n = np.arange(-n_direct, n_direct + 1)
    beta = alpha + 2 * np.pi * n / L
    g = gamma_q(beta**2, k)
    total = -np.sum(np.exp(1j * beta * x - g * y) / g) / (2 * L)
    c = 2 * np.pi / L
    for sgn in (+1, -1):
        a = sgn * alpha / c  # |beta_n| = c (n + a) on this side, a in (-1/2, 1/2]
        zeta = c * (1j * sgn * x - y)
        z = np.exp(zeta)
        pref = np.exp(zeta * a)
        s1 = lerch_sum(z, 1, a) - lerch_partial(z, 1, a, n_direct)
        s2 = lerch_sum(z, 2, a) - lerch_partial(z, 2, a, n_direct)
        s3 = lerch_sum(z, 3, a) - lerch_partial(z, 3, a, n_direct)
        side = pref * (s1 / c + (k * k) * (y * s2 / c**2 + s3 / c**3) / 2.0)
        total -= side / (2 * L)
    return total


def _crystal_2d_ewald(x, alpha, lattice, eta=None, nq=6, nm=6):
    """Ewald evaluation of the d = d_l = 2 quasiperiodic Laplace Green's function.

    G^{a,0}(x) = -(1/|Y|) sum_q e^{i(a+q).x} e^{-|a+q|^2/4 eta^2}/|a+q|^2
                 -(1/4 pi) sum_m e^{i a.m} E_1(eta^2 |x-m|^2).

    Result is independent of the splitting parameter eta (unit-tested).
    """
    area = lattice.cell_measure
    if eta is None:
        eta = np.sqrt(np.pi) / np.sqrt(area)
    x = np.asarray(x, dtype=float)[:2]
    a2 = np.asarray(alpha, dtype=float)[:2]
    qs = lattice.dual_points(shells=nq)[:, :2]
    beta = a2 + qs
    b2 = np.einsum("ij,ij->i", beta, beta)
    if np.any(b2 < 1e-18):
        raise AnomalyError(qs[np.argmin(b2)], 0.0)
    rec = -np.sum(np.exp(1j * beta @ x) * np.exp(-b2 / (4 * eta**2)) / b2) / area
    ms = lattice.points(shells=nm)[:, :2]
    d = x - ms
    r2 = np.einsum("ij,ij->i", d, d)
    if np.any(r2 < 1e-24):
        raise SingularityError("x on the source lattice")
    real = -np.sum(np.exp(1j * ms @ a2) * exp1(eta**2 * r2)) / (4 * np.pi)
    return rec + real


def crystal_2d_regularized(x, alpha, lattice, eta=None, nq=6, nm=6):
    """G^{alpha,0}(x) - (1/2 pi) ln|x| for d = d_l = 2, stable near x -> 0.

    The m = 0 Ewald term minus the log singularity is the entire function
    -(1/4 pi)[E_1(u) + ln u - 2 ln eta], u = eta^2 |x|^2.  Vectorized over a
    trailing array of evaluation points x (..., 2).
    """
    area = lattice.cell_measure
    if eta is None:
        eta = np.sqrt(np.pi) / np.sqrt(area)
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)[..., :2]
    a2 = np.asarray(alpha, dtype=float)[:2]
    qs = lattice.dual_points(shells=nq)[:, :2]
    beta = a2 + qs
    b2 = np.einsum("ij,ij->i", beta, beta)
    if np.any(b2 < 1e-18):
        raise AnomalyError(qs[np.argmin(b2)], 0.0)
    rec = -np.exp(1j * x @ beta.T) @ (np.exp(-b2 / (4 * eta**2)) / b2) / area
    ms = lattice.points(shells=nm)[:, :2]
    nonzero = np.linalg.norm(ms, axis=1) > 1e-12
    mnz = ms[nonzero]
    d = x[:, None, :] - mnz[None, :, :]
    r2 = np.einsum("pmi,pmi->pm", d, d)
    real = -exp1(eta**2 * r2) @ np.exp(1j * mnz @ a2) / (4 * np.pi)
    u = eta**2 * np.einsum("pi,pi->p", x, x)
    ent = np.where(u < 1e-8, -np.euler_gamma + u - u * u / 4.0, exp1(np.maximum(u, 1e-8)) + np.log(np.maximum(u, 1e-300)))
    center = -(ent - 2.0 * np.log(eta)) / (4 * np.pi)
    out = rec + real + center
    return out[0] if single else out


def _screen_3d2_laplace_ewald(x, alpha, lattice, eta=None, nq=6, nm=6):
    """Ewald form of the d=3, d_l=2 quasiperiodic Laplace Green's function.

    Valid on-plane (x_0 = 0): the Kummer-style accelerated fallback for
    small |x_0| where the spectral representation converges poorly.
    """
    area = lattice.cell_measure
    if eta is None:
        eta = np.sqrt(np.pi) / np.sqrt(area)
    x = np.asarray(x, dtype=float)
    xl, x0 = x[:2], x[2]
    a2 = np.asarray(alpha, dtype=float)[:2]
    qs = lattice.dual_points(shells=nq)[:, :2]
    beta = a2 + qs
    b = np.sqrt(np.einsum("ij,ij->i", beta, beta))
    if np.any(b < 1e-12):
        raise AnomalyError(qs[np.argmin(b)], float(b.min()))
    ep = np.exp(b * x0) * erfc(b / (2 * eta) + eta * x0)
    em = np.exp(-b * x0) * erfc(b / (2 * eta) - eta * x0)
    rec = -np.sum(np.exp(1j * beta @ xl) * (ep + em) / b) / (4 * area)
    ms = lattice.points(shells=nm)
    d = x - ms
    r = np.linalg.norm(d, axis=1)
    if np.any(r < 1e-12):
        raise SingularityError("x on the source lattice")
    real = -np.sum(np.exp(1j * ms[:, :2] @ a2) * erfc(eta * r) / r) / (4 * np.pi)
    return rec + real


def _chain_31_laplace(x, alpha, L, n_direct=48, n_rem=4096):
    """sum_m e^{i alpha m L} G^0(x - m L e1) for a 1D chain in 3D, k = 0.

    1/sqrt((x1 - mL)^2 + rho^2) = (1/L)[1/(m-u) - p/2 (m-u)^{-3} + O(m^-5)],
    u = sgn x1/L, p = rho^2/L^2: the algebraic parts are Lerch series, the
    O(m^-5) remainder is summed directly over n_rem terms.
    """
    x = np.asarray(x, dtype=float)
    x1, rho2 = x[0], x[1] ** 2 + x[2] ** 2
    th = alpha * L
    if abs(np.exp(1j * th) - 1.0) < 1e-9:
        raise DomainError("chain sum diverges at alpha = 0 (mod 2 pi / L)")
    if abs(x1) >= L:
        raise DomainError("reduce x1 into the fundamental cell (|x1| < L)")
    m = np.arange(-n_direct, n_direct + 1)
    r = np.sqrt((x1 - m * L) ** 2 + rho2)
    if np.any(r < 1e-12):
        raise SingularityError("x on the source lattice")
    total = np.sum(np.exp(1j * th * m) * (-1.0 / (4 * np.pi * r)))
    p = rho2 / L**2
    for sgn in (+1, -1):
        z = np.exp(1j * sgn * th)
        a = -sgn * x1 / L  # m - u = m + a
        s1 = lerch_sum(z, 1, a) - lerch_partial(z, 1, a, n_direct)
        s3 = lerch_sum(z, 3, a) - lerch_partial(z, 3, a, n_direct)
        total -= (s1 - 0.5 * p * s3) / (4 * np.pi * L)
        mm = np.arange(n_direct + 1, n_direct + 1 + n_rem, dtype=float)
        exact = 1.0 / np.sqrt((mm + a) ** 2 + p)
        approx = 1.0 / (mm + a) - 0.5 * p / (mm + a) ** 3
        total -= np.sum(z**mm * (exact - approx)) / (4 * np.pi * L)
    return total


def greens_quasi(x, alpha, k, lattice, on_plane_tol=None):
    """Quasiperiodic Green's function G^{alpha,k}(x) for the supported lattices.

    Supported: screens (d - d_l = 1; spectral representation, on-plane capable
    for d=2 always and for d=3 at k=0 via Ewald), 2D crystals (d = d_l = 2,
    k = 0, Ewald) and 3D chains (d=3, d_l=1, k=0).
    """
    x = np.asarray(x, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    d, dl = lattice.dim, lattice.lattice_dim
    k = complex(k)
    check_rayleigh_wood(lattice, alpha, k)
    if d - dl == 1:
        if d == 2:
            return _screen_1d_sum(float(x[0]), float(x[1]), float(alpha[0]), k, lattice.periods[0])
        if on_plane_tol is None:
            on_plane_tol = 0.05 * np.sqrt(lattice.cell_measure)
        if abs(x[2]) < on_plane_tol:
            if k != 0:
                raise DomainError("on-plane 3D screen evaluation implemented for k = 0 only")
            return _screen_3d2_laplace_ewald(x, alpha, lattice)
        return _screen_spectral_3d(x, alpha, k, lattice)
    if d == dl == 2:
        if k != 0:
            raise DomainError("2D crystal Green's function implemented for k = 0 only")
        return _crystal_2d_ewald(x, alpha, lattice)
    if d == 3 and dl == 1:
        if k != 0:
            raise DomainError("3D chain Green's function implemented for k = 0 only")
        return _chain_31_laplace(x, float(alpha[0]), lattice.periods[0])
    raise DomainError(f"unsupported (d, d_l) = ({d}, {dl})")


def _screen_spectral_3d(x, alpha, k, lattice):
    """Spectral representation for d=3, d_l=2 screens, |x_0| > 0."""
    x = np.asarray(x, dtype=float)
    xl, x0 = x[:2], abs(x[2])
    area = lattice.cell_measure
    qmax = max(30.0 / max(x0, 1e-3), 4.0 * np.linalg.norm(alpha[:2]) + 4.0 * abs(k) + 10.0)
    qs = lattice.dual_points(radius=qmax)[:, :2]
    beta = alpha[:2] + qs
    g = gamma_q(np.einsum("ij,ij->i", beta, beta), k)
    return -np.sum(np.exp(1j * beta @ xl) * np.exp(-g * x0) / g) / (2 * area)


def greens_periodic_screen(x, y, L):
    """Closed form of the periodic (alpha = 0, k = 0) screen kernel, d=2, d_l=1:

    G^{0,0} = |y|/(2L) + (1/4 pi) ln(1 - 2 e^{-2 pi |y|/L} cos(2 pi x/L) + e^{-4 pi |y|/L}).
    """
    ay = np.abs(y)
    e = np.exp(-2 * np.pi * ay / L)
    arg = 1.0 - 2.0 * e * np.cos(2 * np.pi * np.asarray(x, dtype=float) / L) + e * e
    if np.any(arg <= 0):
        raise SingularityError("x on the source lattice")
    return ay / (2 * L) + np.log(arg) / (4 * np.pi)


def screen_periodic_regularized(x, y, L):
    """G^{0,0}(x,y) - (1/2 pi) ln r for the d=2, d_l=1 screen, stable as r -> 0.

    With zeta = 2 pi (|y| - i x)/L the log terms combine to
    (1/2 pi) ln |(1 - e^{-zeta})/zeta| + (1/2 pi) ln(2 pi / L), removable at 0.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    zeta = 2 * np.pi * (np.abs(y) - 1j * x) / L
    zsafe = np.where(np.abs(zeta) < 1e-8, 1.0, zeta)
    ratio = np.where(np.abs(zeta) < 1e-8, 1.0 - zeta / 2.0 + zeta**2 / 6.0, -np.expm1(-zsafe) / zsafe)
    return np.abs(y) / (2 * L) + (np.log(np.abs(ratio)) + np.log(2 * np.pi / L)) / (2 * np.pi)


def screen_remainder_r0(alpha, k, L, n_corr=100_000):
    """R(0) = lim_{v->0} [G^{alpha,k}(v) - (1/2 pi) ln|v|] for the d=2, d_l=1 screen.

    Combining the two s=1 spectral tails with the log singularity gives

        R(0) = -(1/2L)[ 1/g_0 + sum_{n>=1}(D_n + D_{-n})
                        - (psi(1+a) + psi(1-a) + 2 gamma)/c ] + (1/2 pi) ln(2 pi/L),

    with c = 2 pi/L, a = alpha/c, g_n = gamma_q(beta_n^2, k) and
    D_n = 1/g_n - 1/(c(n + sgn a)) the absolutely summable k-corrections.
    """
    from scipy.special import digamma

    c = 2 * np.pi / L
    a = alpha / c
    g0 = gamma_q(np.array(alpha**2), k)
    n = np.arange(1, n_corr, dtype=float)
    dsum = 0.0
    for sgn in (+1.0, -1.0):
        beta = c * (n + sgn * a)
        g = gamma_q(beta**2, k)
        dsum = dsum + np.sum(1.0 / g - 1.0 / beta)
    w = -(digamma(1.0 + a) + digamma(1.0 - a) + 2 * np.euler_gamma) / c
    return -(1.0 / g0 + dsum + w) / (2 * L) + np.log(c) / (2 * np.pi)


def screen_quasi_remainder(vx, vy, alpha, k, L, n_direct=64, r0=None):
    """R(v) = G^{alpha,k}(v) - (1/2 pi) ln|v| for the d=2, d_l=1 screen.

    Vectorized over point-difference arrays (vx, vy); entries with |v| = 0
    get the exact limit from screen_remainder_r0.  Smooth inside the cell,
    used for Nystrom-Galerkin assembly of quasiperiodic layer operators.
    """
    vx = np.asarray(vx, dtype=float)
    vy = np.asarray(vy, dtype=float)
    r = np.hypot(vx, vy)
    zero = r < 1e-13
    x = np.where(zero, 0.1, vx)
    y = np.abs(np.where(zero, 0.1, vy))
    k = complex(k)
    n = np.arange(-n_direct, n_direct + 1)
    beta = alpha + 2 * np.pi * n / L
    g = gamma_q(beta**2, k)
    total = -(np.exp(1j * np.multiply.outer(x, beta) - np.multiply.outer(y, g)) @ (1.0 / g)) / (2 * L)
    c = 2 * np.pi / L
    for sgn in (+1, -1):
        a = sgn * alpha / c
        zeta = c * (1j * sgn * x - y)
        z = np.exp(zeta)
        pref = np.exp(zeta * a)
        ss = lerch_sum_multi(z, (1, 2, 3), a, skip=n_direct)
        total -= pref * (ss[1] / c + (k * k) * (y * ss[2] / c**2 + ss[3] / c**3) / 2.0) / (2 * L)
    total -= np.log(np.where(zero, 1.0, r)) / (2 * np.pi)
    if np.any(zero):
        if r0 is None:
            r0 = screen_remainder_r0(alpha, k, L)
        total = np.where(zero, r0, total)
    return total


# ---------------------------------------------------------------------------
# spherical Bessel functions for complex argument (small |z| regime)
# ---------------------------------------------------------------------------

def _dfact(n):
    """(2n+1)!!"""
    return float(np.prod(np.arange(2 * n + 1, 0, -2), dtype=float)) if n >= 0 else 1.0


def spherical_jn_c(n, z, terms=34):
    """j_n(z) for complex z via the ascending series (subwavelength |z| regime)."""
    z = np.asarray(z, dtype=complex)
    zz = -0.5 * z * z
    term = z**n / _dfact(n)
    out = term.copy()
    for kk in range(1, terms):
        term = term * zz / (kk * (2 * n + 2 * kk + 1))
        out = out + term
    return out


def spherical_yn_c(n, z):
    """y_n(z) for complex z by (stable) upward recurrence."""
    z = np.asarray(z, dtype=complex)
    y0 = -np.cos(z) / z
    if n == 0:
        return y0
    y1 = -np.cos(z) / z**2 - np.sin(z) / z
    for kk in range(1, n):
        y0, y1 = y1, (2 * kk + 1) / z * y1 - y0
    return y1


def spherical_hn_c(n, z):
    """Spherical Hankel function of the first kind, complex argument."""
    return spherical_jn_c(n, z) + 1j * spherical_yn_c(n, z)


def spherical_jn_c_d(n, z):
    """d/dz j_n(z) via j_n' = j_{n-1} - (n+1)/z j_n."""
    if n == 0:
        return -spherical_jn_c(1, z)
    return spherical_jn_c(n - 1, z) - (n + 1) / np.asarray(z, dtype=complex) * spherical_jn_c(n, z)


def spherical_hn_c_d(n, z):
    if n == 0:
        return -spherical_hn_c(1, z)
    return spherical_hn_c(n - 1, z) - (n + 1) / np.asarray(z, dtype=complex) * spherical_hn_c(n, z)
