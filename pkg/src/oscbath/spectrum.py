"""Normal modes of the particle + N-oscillator cavity system."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import zeta

from .errors import BracketError, DomainError, PoleError, StabilityError
from .model import CavityConfig, PhysParams

__all__ = [
    "SpectrumMethod",
    "NormalModeBasis",
    "secular_residual_finite",
    "secular_slope_finite",
    "cotangent_residual",
    "solve_spectrum",
    "orthonormality_defect",
    "cotangent_sum_identity",
    "cotangent_sum_closed",
    "potential_matrix",
    "eq17_t0",
]

ORACLE_CAP = 512
_EPS = np.finfo(float).eps
_CHUNK = 256


class SpectrumMethod(enum.Enum):
    FINITE_SECULAR = "finite"
    CAVITY_COTANGENT = "cotangent"
    DENSE_EIGEN_ORACLE = "dense"


@dataclass(frozen=True, eq=False)
class NormalModeBasis:
    """Eigenfrequencies ``Omegas[r]`` and the orthogonal matrix ``t[mu, r]``.

    Row 0 is the particle, rows 1..N the bath oscillators; columns are normal
    modes in increasing frequency.
    """

    Omegas: np.ndarray
    t: np.ndarray
    config: CavityConfig
    params: PhysParams
    method: SpectrumMethod
    raw_defect: float = 0.0
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.Omegas.setflags(write=False)
        self.t.setflags(write=False)

    @property
    def N(self) -> int:
        return self.config.N

    @property
    def t0(self) -> np.ndarray:
        return self.t[0]

    @property
    def tk(self) -> np.ndarray:
        return self.t[1:]

    @property
    def bare_frequencies(self) -> np.ndarray:
        """(omega_bar, omega_1, ..., omega_N): the frequencies defining a_mu."""
        return np.concatenate([[self.params.omega_bar], self.config.omegas])


def potential_matrix(config: CavityConfig, params: PhysParams) -> np.ndarray:
    """Symmetric (N+1)x(N+1) matrix of the quadratic potential, bare counterterm included."""
    wk = config.omegas
    eta = config.eta(params)
    V = np.diag(np.concatenate([[params.omega_bar**2 + config.N * eta**2], wk * wk]))
    V[0, 1:] = -eta * wk
    V[1:, 0] = -eta * wk
    return V


def _near_bath_pole(Omega: float, config: CavityConfig, tol: float = 1e-14) -> bool:
    m = Omega / config.delta_omega
    k = round(m)
    return 1 <= k <= config.N and abs(m - k) <= tol * max(1.0, m)


def secular_residual_finite(Omega: float, config: CavityConfig, params: PhysParams) -> float:
    """omega_bar^2 - Omega^2 - eta^2 Omega^2 sum_k 1/(omega_k^2 - Omega^2)."""
    if _near_bath_pole(Omega, config):
        raise PoleError(f"Omega={Omega} coincides with a bath frequency")
    wk = config.omegas
    eta2 = config.eta(params) ** 2
    s = Omega * Omega
    return float(params.omega_bar**2 - s - eta2 * s * math.fsum(1.0 / (wk * wk - s)))


def secular_slope_finite(Omega: float, config: CavityConfig, params: PhysParams) -> float:
    """d(residual)/dOmega, used to judge how small a residual can be at a float root."""
    wk = config.omegas
    eta2 = config.eta(params) ** 2
    s = Omega * Omega
    ds = -1.0 - eta2 * float(np.sum(wk * wk / (wk * wk - s) ** 2))
    return 2.0 * Omega * ds


def cotangent_residual(Omega: float, config: CavityConfig, params: PhysParams) -> float:
    """cot(R Omega/c) - Omega/(pi g) - (c/(R Omega)) (1 - R omega_bar^2/(pi g c))."""
    if not Omega > 0:
        raise DomainError("Omega must be positive")
    m = Omega / config.delta_omega
    if abs(m - round(m)) <= 1e-14 * max(1.0, m):
        raise PoleError(f"sin(R Omega / c) = 0 at Omega={Omega}")
    g = params.g
    R, c = config.R, config.c
    return _cot_resid(math.pi * (m - math.floor(m)), Omega, R, c, g, params.omega_bar)


def _cot_resid(y, Omega, R, c, g, wb):
    return (np.cos(y) / np.sin(y) - Omega / (math.pi * g)
            - (c / (R * Omega)) * (1.0 - R * wb * wb / (math.pi * g * c)))


def cotangent_sum_identity(u: float, terms: int) -> float:
    """Partial sum sum_{k=1}^{terms} 1/(k^2 - u^2)."""
    if terms < 1:
        raise DomainError("terms must be >= 1")
    if float(u).is_integer() and u != 0:
        raise PoleError(f"u={u} is an integer")
    k = np.arange(terms, 0, -1, dtype=float)  # small terms first
    return float(np.sum(1.0 / (k * k - u * u)))


def cotangent_sum_closed(u: float) -> float:
    """(1/2)[1/u^2 - (pi/u) cot(pi u)], the infinite-sum limit (pi^2/6 at u=0)."""
    if float(u).is_integer() and u != 0:
        raise PoleError(f"u={u} is an integer")
    if abs(u) < 0.1:
        # sum_n zeta(2n+2) u^(2n) avoids the 1/u^2 cancellation
        n = np.arange(12)
        return float(np.sum(zeta(2 * n + 2) * (u * u) ** n))
    return 0.5 * (1.0 / (u * u) - (math.pi / u) / math.tan(math.pi * u))


def eq17_t0(Omega, config: CavityConfig, params: PhysParams):
    """Closed-form particle row t_0^r of the cavity basis (before renormalization)."""
    Om = np.asarray(Omega, dtype=float)
    eta = config.eta(params)
    wb2 = params.omega_bar**2
    den = (Om**2 - wb2) ** 2 + 0.5 * eta**2 * (3 * Om**2 - wb2) + (math.pi * params.g * Om) ** 2
    return eta * Om / np.sqrt(den)


def orthonormality_defect(basis: NormalModeBasis) -> float:
    """max |sum_r t_mu^r t_nu^r - delta_{mu nu}|."""
    T = basis.t
    G = T @ T.T
    G[np.diag_indices_from(G)] -= 1.0
    return float(np.max(np.abs(G)))


def _identity_basis(config, params, method):
    freqs = np.concatenate([[params.omega_bar], config.omegas])
    order = np.argsort(freqs, kind="stable")
    T = np.eye(config.N + 1)[:, order]
    return NormalModeBasis(freqs[order].copy(), np.ascontiguousarray(T), config, params, method)


class _Secular:
    """Anchored secular function: root r lives at s = (k dw)^2 + x."""

    def __init__(self, config: CavityConfig, params: PhysParams):
        self.N = config.N
        self.dw2 = config.delta_omega**2
        self.j = np.arange(1, self.N + 1, dtype=float)
        self.eta2 = config.eta(params) ** 2
        self.wb2 = params.omega_bar**2

    def gaps(self, k):
        # (j^2 - k^2) dw^2, exact in the integer factor
        return (self.j[None, :] ** 2 - k[:, None] ** 2) * self.dw2

    def eval(self, k, x):
        """Residual and its x-derivative for anchors ``k`` and offsets ``x``."""
        res = np.empty_like(x)
        der = np.empty_like(x)
        for lo in range(0, x.size, _CHUNK):
            sl = slice(lo, lo + _CHUNK)
            d = self.gaps(k[sl]) - x[sl, None]
            inv = 1.0 / d
            s = k[sl] ** 2 * self.dw2 + x[sl]
            S1 = inv.sum(axis=1)
            S2 = (inv * inv).sum(axis=1)
            res[sl] = self.wb2 - s - self.eta2 * s * S1
            der[sl] = -1.0 - self.eta2 * (S1 + s * S2)
        return res, der

    def vectors(self, k, x):
        """Normalized eigenvector columns (t_0 > 0)."""
        eta = math.sqrt(self.eta2)
        wj = self.j * math.sqrt(self.dw2)
        T = np.empty((self.N + 1, x.size))
        for lo in range(0, x.size, _CHUNK):
            sl = slice(lo, lo + _CHUNK)
            d = self.gaps(k[sl]) - x[sl, None]
            tk = eta * wj[None, :] / d
            t0 = 1.0 / np.sqrt(1.0 + (tk * tk).sum(axis=1))
            T[0, sl] = t0
            T[1:, sl] = (tk * t0[:, None]).T
        return T


def _solve_bracketed(fn, k, lo, hi, *, bisections=60, newton_iters=100, x0=None):
    """Decreasing functions with fn(lo) > 0 > fn(hi): bisection, then safeguarded Newton."""
    k = k.astype(float)
    lo = lo.astype(float).copy()
    hi = hi.astype(float).copy()
    x = 0.5 * (lo + hi) if x0 is None else np.clip(x0, lo, hi)
    for _ in range(bisections):
        mid = 0.5 * (lo + hi)
        r, _ = fn(k, mid)
        pos = r > 0
        lo = np.where(pos, mid, lo)
        hi = np.where(pos, hi, mid)
        x = 0.5 * (lo + hi)
        if np.all(hi - lo <= 1e-6 * np.maximum(np.abs(lo), np.abs(hi))):
            break
    done = np.zeros(x.size, dtype=bool)
    for _ in range(newton_iters):
        r, dr = fn(k, x)
        pos = r > 0
        lo = np.where(pos & ~done, x, lo)
        hi = np.where(~pos & ~done, x, hi)
        step = np.where(dr != 0, r / dr, 0.0)
        xn = x - step
        bad = ~((xn >= lo) & (xn <= hi))
        xn = np.where(r == 0, x, np.where(bad, 0.5 * (lo + hi), xn))
        small = (np.abs(xn - x) <= 4 * _EPS * np.abs(x)) | (r == 0)
        x = np.where(done, x, xn)
        done |= small
        if done.all():
            break
    return x


def _solve_finite(config: CavityConfig, params: PhysParams) -> NormalModeBasis:
    N = config.N
    sec = _Secular(config, params)
    dw2 = sec.dw2
    kk = np.arange(1, N + 1, dtype=float)
    # root 0 in (0, w1^2): anchor 1, x in (-dw2, 0); roots r=1..N-1 in (w_r^2, w_{r+1}^2);
    # root N above w_N^2
    anchors = np.concatenate([[1.0], kk])
    lo = np.concatenate([[-dw2], np.zeros(N)])
    hi = np.concatenate([[0.0], (2 * kk[:-1] + 1) * dw2, [0.0]])
    wN = N * math.sqrt(dw2)
    top = (wN + N * sec.eta2 / wN + params.omega_bar) ** 2 - wN * wN
    for _ in range(200):
        r, _ = sec.eval(np.array([float(N)]), np.array([top]))
        if r[0] < 0:
            break
        top *= 2.0
    else:
        raise BracketError("no sign change above the highest bath frequency")
    hi[-1] = top

    # brackets are open at the poles; probe just inside
    r_lo, _ = sec.eval(anchors, lo + (hi - lo) * 1e-12)
    r_hi, _ = sec.eval(anchors, hi - (hi - lo) * 1e-12)
    if np.any(r_lo <= 0) or np.any(r_hi >= 0):
        bad = np.flatnonzero((r_lo <= 0) | (r_hi >= 0))
        raise BracketError(f"missing sign change in interval(s) {bad[:5].tolist()}")

    x = _solve_bracketed(lambda k, x: sec.eval(k, x), anchors, lo, hi, bisections=40,
                         newton_iters=0)
    # re-anchor to the nearer pole, then polish
    gap = (2 * anchors + 1) * dw2
    move = (np.arange(N + 1) >= 1) & (np.arange(N + 1) < N) & (x > 0.5 * gap)
    anchors = np.where(move, anchors + 1, anchors)
    x = np.where(move, x - gap, x)
    lo = np.where(move, -gap, np.where(np.arange(N + 1) == 0, -dw2, 0.0))
    hi = np.where(move, 0.0, np.where(np.arange(N + 1) == 0, 0.0,
                                      np.where(np.arange(N + 1) == N, top, gap)))
    # tighten brackets around the bisection estimate before Newton
    width = 1e-6 * np.maximum(np.abs(x), np.abs(hi - lo) * 1e-3)
    for sgn in (-1, 1):
        probe = np.clip(x + sgn * width, lo, hi)
        r, _ = sec.eval(anchors, probe)
        if sgn < 0:
            lo = np.where((r > 0) & (probe > lo), probe, lo)
        else:
            hi = np.where((r < 0) & (probe < hi), probe, hi)
    x = _solve_bracketed(lambda k, x: sec.eval(k, x), anchors, lo, hi, bisections=0,
                         newton_iters=100, x0=x)
    s = anchors**2 * dw2 + x
    if np.any(s <= 0):
        raise StabilityError("normal mode with Omega^2 <= 0 (runaway mode)")
    T = sec.vectors(anchors, x)
    info = {"anchors": anchors.astype(int), "offsets": x}
    return NormalModeBasis(np.sqrt(s), T, config, params, SpectrumMethod.FINITE_SECULAR, info=info)


def _solve_dense(config: CavityConfig, params: PhysParams, cap: int) -> NormalModeBasis:
    if config.N > cap:
        raise DomainError(f"dense oracle limited to N <= {cap}")
    lam, T = np.linalg.eigh(potential_matrix(config, params))
    if np.any(lam <= 0):
        raise StabilityError("normal mode with Omega^2 <= 0 (runaway mode)")
    T = T * np.where(T[0] < 0, -1.0, 1.0)[None, :]
    return NormalModeBasis(np.sqrt(lam), np.ascontiguousarray(T), config, params,
                           SpectrumMethod.DENSE_EIGEN_ORACLE)


def _solve_cotangent(config: CavityConfig, params: PhysParams) -> NormalModeBasis:
    N = config.N
    dw = config.delta_omega
    g, wb = params.g, params.omega_bar
    R, c = config.R, config.c
    m = np.arange(N + 1, dtype=float)

    def fn(mm, y):
        Om = (mm + y / math.pi) * dw
        r = _cot_resid(y, Om, R, c, g, wb)
        dOm = dw / math.pi
        A = 1.0 - R * wb * wb / (math.pi * g * c)
        dr = -1.0 / np.sin(y) ** 2 - dOm / (math.pi * g) + (c / R) * A * dOm / Om**2
        return r, dr

    eps = 1e-9
    r_lo, _ = fn(m, np.full(N + 1, eps))
    r_hi, _ = fn(m, np.full(N + 1, math.pi - eps))
    if np.any(r_lo <= 0) or np.any(r_hi >= 0):
        bad = np.flatnonzero((r_lo <= 0) | (r_hi >= 0))
        raise BracketError(f"missing cotangent sign change in interval(s) {bad[:5].tolist()}")
    y = _solve_bracketed(fn, m, np.zeros(N + 1), np.full(N + 1, math.pi))
    Om = (m + y / math.pi) * dw
    if np.any(Om <= 0):
        raise StabilityError("normal mode with Omega^2 <= 0 (runaway mode)")
    t0 = eq17_t0(Om, config, params)
    wk = config.omegas
    eta = config.eta(params)
    T = np.empty((N + 1, N + 1))
    T[0] = t0
    T[1:] = eta * wk[:, None] * t0[None, :] / (wk[:, None] ** 2 - Om[None, :] ** 2)
    raw = NormalModeBasis(Om, T.copy(), config, params, SpectrumMethod.CAVITY_COTANGENT)
    raw_defect = orthonormality_defect(raw)
    norms = np.sqrt(np.sum(T * T, axis=0))
    T = T / norms[None, :]
    info = {"column_norms": norms, "eq17_t0": t0}
    return NormalModeBasis(Om, T, config, params, SpectrumMethod.CAVITY_COTANGENT,
                           raw_defect=raw_defect, info=info)


def solve_spectrum(config: CavityConfig, params: PhysParams,
                   method: SpectrumMethod = SpectrumMethod.FINITE_SECULAR, *,
                   oracle_cap: int = ORACLE_CAP) -> NormalModeBasis:
    """Normal-mode frequencies and transformation matrix.

    FINITE_SECULAR solves the N-mode secular equation (one root per
    interlacing interval) and builds columns from the eigenvector formula with
    explicit normalization. CAVITY_COTANGENT takes the lowest N+1 roots of the
    N -> infinity cotangent equation, uses the closed-form t_0^r, and
    renormalizes columns; ``raw_defect`` keeps the defect before that step.
    DENSE_EIGEN_ORACLE diagonalizes the potential matrix directly.
    """
    method = SpectrumMethod(method)
    if params.g == 0.0:
        return _identity_basis(config, params, method)
    if method is SpectrumMethod.FINITE_SECULAR:
        return _solve_finite(config, params)
    if method is SpectrumMethod.DENSE_EIGEN_ORACLE:
        return _solve_dense(config, params, oracle_cap)
    return _solve_cotangent(config, params)
