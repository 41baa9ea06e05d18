"""Evolution in dressed coordinates: probability amplitudes and occupation."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Literal

import numpy as np
from scipy.special import exp1

from .errors import DomainError
from .model import PhysParams, bose_occupation, kappa, lorentzian_weight
from .quadrature import (QuadratureResult, QuadratureSpec, integrate, integrate_oscillatory,
                         integrate_principal_value, integrate_semi_infinite)
from .series import OccupationPoint
from .spectrum import NormalModeBasis

__all__ = [
    "AmplitudeMatrixPoint",
    "ContinuumAmplitudes",
    "DressingMatrix",
    "PolePrescription",
    "f_matrix_finite",
    "amplitude_row",
    "occupation_dressed_finite",
    "C1_closed",
    "C1_quadrature",
    "S1_quadrature",
    "S1_contour",
    "S1_asymptotic",
    "f00_continuum",
    "f00_abs2_longtime",
    "C2_closed",
    "C2_quadrature",
    "S2_quadrature",
    "S2_contour",
    "S2_asymptotic",
    "f0w_continuum",
    "occupation_dressed_continuum",
    "occupation_dressed_longtime",
    "completeness_sum",
    "dressing_matrix",
    "A00_integral",
    "A00_integral_tail_series",
]

PolePrescription = Literal["cavity", "principal"]


# ---------------------------------------------------------------- finite cavity

@dataclass(frozen=True, eq=False)
class AmplitudeMatrixPoint:
    """Row ``f[nu] = f_{mu nu}(t)`` of the single-excitation amplitudes."""

    t: float
    mu: int
    f: np.ndarray

    def norm_defect(self) -> float:
        """|sum_nu |f_{mu nu}|^2 - 1|."""
        return abs(math.fsum(np.abs(self.f) ** 2) - 1.0)


def amplitude_row(basis: NormalModeBasis, mu: int, t: float) -> AmplitudeMatrixPoint:
    """f_{mu nu}(t) = sum_r t_mu^r t_nu^r exp(-i Omega_r t) for all nu."""
    if not 0 <= mu <= basis.N:
        raise IndexError(f"mode index {mu} out of range 0..{basis.N}")
    ph = np.exp(-1j * basis.Omegas * t)
    return AmplitudeMatrixPoint(float(t), mu, basis.t @ (basis.t[mu] * ph))


def f_matrix_finite(basis: NormalModeBasis, mu: int, nu: int, t: float) -> complex:
    if not 0 <= nu <= basis.N:
        raise IndexError(f"mode index {nu} out of range 0..{basis.N}")
    if not 0 <= mu <= basis.N:
        raise IndexError(f"mode index {mu} out of range 0..{basis.N}")
    ph = np.exp(-1j * basis.Omegas * t)
    return complex(np.sum(basis.t[mu] * basis.t[nu] * ph))


def occupation_dressed_finite(basis: NormalModeBasis, params: PhysParams, t: float, *,
                              n0_dressed: float | None = None) -> OccupationPoint:
    """|f_00|^2 n0' + sum_k |f_0k|^2 n(omega_k); no vacuum contribution."""
    if params != basis.params:
        raise DomainError("basis was built with different parameters")
    n0p = params.n0_init if n0_dressed is None else float(n0_dressed)
    if t == 0.0:
        return OccupationPoint.from_terms(t, n0p, 0.0, 0.0)
    p = np.abs(amplitude_row(basis, 0, t).f) ** 2
    thermal = math.fsum(p[1:] * bose_occupation(basis.config.omegas, params.beta))
    return OccupationPoint.from_terms(t, p[0] * n0p, thermal, 0.0)


# ------------------------------------------------------------- continuum: helpers

def _D(w, params):
    return (w * w - params.omega_bar**2) ** 2 + (math.pi * params.g * w) ** 2


def _z0(params: PhysParams) -> complex:
    """Pole of the continued propagator in the lower half plane, kappa - i pi g / 2."""
    return complex(kappa(params), -0.5 * math.pi * params.g)


def _q_roots(params: PhysParams) -> np.ndarray:
    """Roots of Q(y) = (y^2 + wb^2)^2 - pi^2 g^2 y^2 (all complex in the weak regime)."""
    k = kappa(params)
    h = 0.5 * math.pi * params.g
    return np.array([h + 1j * k, h - 1j * k, -h + 1j * k, -h - 1j * k])


def _exp_e1(z):
    """exp(z) E1(z), with an asymptotic series once exp(z) would overflow."""
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    big = np.abs(z.real) > 600.0
    if np.any(~big):
        zs = z[~big]
        out[~big] = np.exp(zs) * exp1(zs)
    if np.any(big):
        zb = z[big]
        term = 1.0 / zb
        acc = term.copy()
        for n in range(1, 30):
            term = term * (-n / zb)
            acc = acc + term
        out[big] = acc
    return out


def _laplace_rational(roots: np.ndarray, coeffs: np.ndarray, t: float) -> np.ndarray:
    """int_0^inf e^{-y t} sum_j c_j / (y - a_j) dy for roots off the positive axis.

    ``roots``/``coeffs`` have shape (..., m); the coefficients must sum to zero
    along the last axis so the t = 0 value is finite.
    """
    if t == 0.0:
        return -np.sum(coeffs * np.log(-roots), axis=-1)
    return np.sum(coeffs * _exp_e1(-roots * t), axis=-1)


def _partial_fractions(roots: np.ndarray, numer) -> np.ndarray:
    """Coefficients c_j = numer(a_j) / prod_{i != j} (a_j - a_i) along the last axis."""
    m = roots.shape[-1]
    diff = roots[..., :, None] - roots[..., None, :]
    diff = diff + np.eye(m)
    return numer(roots) / np.prod(diff, axis=-1)


def _check_t(t: float) -> None:
    if not t >= 0 or not math.isfinite(t):
        raise DomainError("t must be finite and >= 0")


# ------------------------------------------------------------- C1 / S1 / f00

def C1_closed(params: PhysParams, t: float) -> float:
    _check_t(t)
    k = kappa(params)
    pg = math.pi * params.g
    return math.exp(-pg * t / 2) * (math.cos(k * t) - pg / (2 * k) * math.sin(k * t))


def _s1_envelope(params):
    g = params.g
    return lambda a: 2 * g * a * a / _D(a, params)


def C1_quadrature(params: PhysParams, t: float, quad: QuadratureSpec = QuadratureSpec()) -> float:
    """2g int_0^inf a^2 cos(a t) / D(a) da."""
    _check_t(t)
    if params.g == 0.0:
        return math.cos(params.omega_bar * t)
    env = _s1_envelope(params)
    if t == 0.0:
        return integrate_semi_infinite(env, quad, points=[params.omega_bar],
                                       scale=params.omega_bar).value
    return _oscillatory_with_peak(env, t, quad, "cos", params).value


def S1_quadrature(params: PhysParams, t: float, quad: QuadratureSpec = QuadratureSpec()) -> float:
    """-2g int_0^inf a^2 sin(a t) / D(a) da."""
    _check_t(t)
    if params.g == 0.0:
        return -math.sin(params.omega_bar * t)
    if t == 0.0:
        return 0.0
    env = _s1_envelope(params)
    return -_oscillatory_with_peak(env, t, quad, "sin", params).value


def _oscillatory_with_peak(env, t, quad, weight, params, *, split=None) -> QuadratureResult:
    """Finite part over [0, split] resolving the Lorentzian peak, then a zero-partitioned tail."""
    wb = params.omega_bar
    if split is None:
        split = 4.0 * wb + 20.0 * math.pi * params.g
    trig = np.cos if weight == "cos" else np.sin
    spec = quad.with_(oscillation_period_hint=2 * math.pi / t, truncation=None,
                      abs_tol=quad.abs_tol / 2)
    head = integrate(lambda a: env(a) * trig(a * t), 0.0, split, spec, points=[wb])
    tail = integrate_oscillatory(env, t, spec, weight=weight, lower=split, scale=wb)
    return head + tail


def S1_contour(params: PhysParams, t: float) -> float:
    """S1 from the pole at kappa - i pi g/2 plus the exponentially damped cut integral.

    S1 = Im(z0 e^{-i z0 t}) / kappa + 2g int_0^inf y^2 e^{-y t} / Q(y) dy.
    """
    _check_t(t)
    if params.g == 0.0:
        return -math.sin(params.omega_bar * t)
    z0 = _z0(params)
    pole = (z0 * np.exp(-1j * z0 * t)).imag / kappa(params)
    r = _q_roots(params)
    c = _partial_fractions(r, lambda y: y * y)
    cut = 2 * params.g * float(np.real(_laplace_rational(r, c, t)))
    return float(pole + cut)


def S1_asymptotic(params: PhysParams, t: float) -> float:
    """Large-t form 4g / (wb^4 t^3); requires t >= 10 / wb."""
    if t < 10.0 / params.omega_bar:
        raise DomainError("asymptotic form needs t >= 10 / omega_bar")
    return 4.0 * params.g / (params.omega_bar**4 * t**3)


def f00_continuum(params: PhysParams, t: float, quad: QuadratureSpec = QuadratureSpec(), *,
                  method: Literal["contour", "quadrature"] = "contour") -> complex:
    """f_00(t) = C1 + i S1 in the continuum."""
    _check_t(t)
    if method == "contour":
        return complex(C1_closed(params, t), S1_contour(params, t))
    if method == "quadrature":
        return complex(C1_quadrature(params, t, quad), S1_quadrature(params, t, quad))
    raise DomainError(f"unknown method {method!r}")


def f00_abs2_longtime(params: PhysParams, t: float) -> float:
    """e^{-pi g t}[cos kt - (pi g/2k) sin kt]^2 + 16 g^2 / (wb^8 t^6)."""
    if not t > 0:
        raise DomainError("t must be > 0")
    return C1_closed(params, t) ** 2 + 16 * params.g**2 / (params.omega_bar**8 * t**6)


# ------------------------------------------------------------- C2 / S2 / f0w

def C2_closed(omega, params: PhysParams, t: float):
    """Residue evaluation of the cosine amplitude; finite at omega = omega_bar since D > 0."""
    _check_t(t)
    w = np.asarray(omega, dtype=float)
    k = kappa(params)
    wb2 = params.omega_bar**2
    pg = math.pi * params.g
    D = _D(w, params)
    e = math.exp(-pg * t / 2)
    val = math.sqrt(2 * params.g) * (
        e * ((w * w - wb2) / D * math.cos(k * t) - pg / (2 * k) * (w * w + wb2) / D * math.sin(k * t))
        + pg * w / D * np.sin(w * t))
    return float(val) if val.ndim == 0 else val


def _c2s2_quadrature(omega: float, params: PhysParams, t: float, quad: QuadratureSpec,
                     weight: str) -> float:
    if not omega > 0:
        raise DomainError("omega must be > 0")
    _check_t(t)
    kappa(params)
    g = params.g
    if g == 0.0:
        return 0.0
    wb = params.omega_bar
    amp = (2 * g) ** 1.5
    trig = np.cos if weight == "cos" else np.sin
    # integrand a^2 trig(a t) / ((w^2 - a^2) D(a)) = numer(a) / (a - w)
    numer = lambda a: -a * a * trig(a * t) / ((a + omega) * _D(a, params))
    L0 = 2.0 * max(omega, wb) + 5.0 * wb
    spec = quad.with_(abs_tol=quad.abs_tol / (2 * amp))
    if t > 0:
        spec = spec.with_(oscillation_period_hint=2 * math.pi / t)
    pts = [wb] if abs(wb - omega) > 1e-12 * wb else []
    head = integrate_principal_value(numer, omega, spec.with_(truncation=None), lower=0.0,
                                     upper=L0, points=pts)
    env = lambda a: a * a / ((omega * omega - a * a) * _D(a, params))
    if t > 0:
        tail = integrate_oscillatory(env, t, spec, weight=weight, lower=L0, scale=wb)
    elif weight == "cos":
        tail = integrate_semi_infinite(env, spec.with_(truncation=None), lower=L0, scale=wb)
    else:
        tail = QuadratureResult(0.0, 0.0, 0, 0.0, 0.0)
    return amp * (head.value + tail.value)


def C2_quadrature(omega: float, params: PhysParams, t: float,
                  quad: QuadratureSpec = QuadratureSpec()) -> float:
    """(2g)^{3/2} PV int_0^inf a^2 cos(a t) / ((w^2 - a^2) D(a)) da."""
    return _c2s2_quadrature(omega, params, t, quad, "cos")


def S2_quadrature(omega: float, params: PhysParams, t: float,
                  quad: QuadratureSpec = QuadratureSpec()) -> float:
    """-(2g)^{3/2} PV int_0^inf a^2 sin(a t) / ((w^2 - a^2) D(a)) da."""
    return -_c2s2_quadrature(omega, params, t, quad, "sin")


def _amplitude_principal(w: np.ndarray, params: PhysParams, t: float) -> np.ndarray:
    """C2 + i S2 (principal-value prescription) from the pole expansion.

    sqrt(2g)[z0 e^{-i z0 t} / (k (w^2 - z0^2)) + i pi g w e^{-i w t} / D(w)]
      + i (2g)^{3/2} int_0^inf y^2 e^{-y t} / ((w^2 + y^2) Q(y)) dy
    """
    g = params.g
    k = kappa(params)
    z0 = _z0(params)
    D = _D(w, params)
    pole = (z0 * np.exp(-1j * z0 * t) / (k * (w * w - z0 * z0))
            + 1j * math.pi * g * w * np.exp(-1j * w * t) / D)
    qr = _q_roots(params)
    roots = np.empty(w.shape + (6,), dtype=complex)
    roots[..., :4] = qr
    roots[..., 4] = 1j * w
    roots[..., 5] = -1j * w
    c = _partial_fractions(roots, lambda y: y * y)
    cut = np.real(_laplace_rational(roots, c, t))
    return math.sqrt(2 * g) * pole + 1j * (2 * g) ** 1.5 * cut


def _amplitude(w, params: PhysParams, t: float, pole: PolePrescription) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    amp = _amplitude_principal(w, params, t)
    if pole == "cavity":
        amp = amp - math.sqrt(2 * params.g) * (w * w - params.omega_bar**2) \
            * np.exp(-1j * w * t) / _D(w, params)
    elif pole != "principal":
        raise DomainError(f"unknown pole prescription {pole!r}")
    return amp


def S2_contour(omega, params: PhysParams, t: float, *, pole: PolePrescription = "principal"):
    """S2 without oscillatory quadrature (exact up to rounding)."""
    _check_t(t)
    v = np.imag(_amplitude(omega, params, t, pole))
    return float(v) if np.ndim(v) == 0 else v


def S2_asymptotic(omega: float, params: PhysParams, t: float) -> float:
    """Large-t form 4 sqrt(2) g^{3/2} / (w^2 wb^4 t^3); requires t >= 10 / wb."""
    if t < 10.0 / params.omega_bar:
        raise DomainError("asymptotic form needs t >= 10 / omega_bar")
    if not omega > 0:
        raise DomainError("omega must be > 0")
    return 4 * math.sqrt(2) * params.g**1.5 / (omega**2 * params.omega_bar**4 * t**3)


def f0w_continuum(omega, params: PhysParams, t: float, *, pole: PolePrescription = "cavity",
                  delta_omega: float = 1.0):
    """f_{0 omega}(t) = omega sqrt(delta_omega) (C2 + i S2).

    ``pole="principal"`` uses the principal-value amplitudes as written.
    ``pole="cavity"`` keeps the delta-function terms that the finite cavity
    produces as its mode spacing shrinks; the amplitude then reduces to
    -sqrt(2g) e^{-i w t} / (w^2 - wb^2 + i pi g w) plus damped terms and
    vanishes at t = 0, matching f_{0k}(0) = 0.
    """
    _check_t(t)
    w = np.asarray(omega, dtype=float)
    if np.any(~(w > 0)):
        raise DomainError("omega must be > 0")
    if params.g == 0.0:
        v = np.zeros(w.shape, dtype=complex)
    else:
        v = w * math.sqrt(delta_omega) * _amplitude(w, params, t, pole)
    return complex(v) if v.ndim == 0 else v


@dataclass(frozen=True)
class ContinuumAmplitudes:
    """Bundle of the continuum functions at fixed parameters and pole prescription."""

    params: PhysParams
    pole: PolePrescription = "cavity"

    def C1(self, t: float) -> float:
        return C1_closed(self.params, t)

    def S1(self, t: float) -> float:
        return S1_contour(self.params, t)

    def C2(self, omega, t: float):
        v = np.real(_amplitude(omega, self.params, t, self.pole))
        return float(v) if np.ndim(v) == 0 else v

    def S2(self, omega, t: float):
        return S2_contour(omega, self.params, t, pole=self.pole)

    def f00(self, t: float) -> complex:
        return complex(self.C1(t), self.S1(t))


# ------------------------------------------------------------- occupation

def _thermal_upper(params: PhysParams) -> float:
    return max(50.0 * params.omega_bar, 40.0 / params.beta)


def _dressed_tail_bound(params: PhysParams, wmax: float, t: float) -> float:
    # |amp| <= sqrt(2g) [e^{-pi g t/2} |z0| / (k |w^2 - z0^2|) + 2 / sqrt(D)] + cut term
    g, wb = params.g, params.omega_bar
    amp2 = 2 * g * (4.0 / (wmax**2 - wb * wb) ** 2 * (1 + 2 * wb / kappa(params)) ** 2)
    x = params.beta * wmax
    return wmax**2 * amp2 * math.exp(-x) / (params.beta * -math.expm1(-x)) * 4.0


def occupation_dressed_continuum(params: PhysParams, t: float,
                                 quad: QuadratureSpec = QuadratureSpec(), *,
                                 n0_dressed: float | None = None,
                                 pole: PolePrescription = "cavity") -> OccupationPoint:
    """[C1^2 + S1^2] n0' + int_0^inf w^2 [C2^2 + S2^2] n(w) dw, vacuum term zero."""
    if not t > 0:
        raise DomainError("t must be > 0")
    n0p = params.n0_init if n0_dressed is None else float(n0_dressed)
    if params.g == 0.0:
        return OccupationPoint.from_terms(t, n0p, 0.0, 0.0)
    memory = (C1_closed(params, t) ** 2 + S1_contour(params, t) ** 2) * n0p
    wmax = _thermal_upper(params) if quad.truncation is None else quad.truncation
    spec = quad if quad.oscillation_period_hint is not None else \
        quad.with_(oscillation_period_hint=2 * math.pi / t)

    def f(w):
        return w * w * np.abs(_amplitude(w, params, t, pole)) ** 2 * bose_occupation(w, params.beta)

    res = integrate(f, 0.0, wmax, spec, points=[params.omega_bar])
    tail = _dressed_tail_bound(params, wmax, t)
    return OccupationPoint.from_terms(t, memory, res.value, 0.0, res.error_estimate + tail)


def occupation_dressed_longtime(params: PhysParams, quad: QuadratureSpec = QuadratureSpec(), *,
                                pole: PolePrescription = "cavity") -> float:
    """t -> infinity plateau of the continuum dressed occupation.

    cavity: int 2g w^2 / D(w) n(w) dw; principal: int 2g w^2 (pi g w)^2 / D^2 n(w) dw.
    """
    kappa(params)
    wmax = _thermal_upper(params)
    pg = math.pi * params.g
    if pole == "cavity":
        f = lambda w: lorentzian_weight(w, params) * bose_occupation(w, params.beta)
    elif pole == "principal":
        f = lambda w: (lorentzian_weight(w, params) * (pg * w) ** 2 / _D(w, params)
                       * bose_occupation(w, params.beta))
    else:
        raise DomainError(f"unknown pole prescription {pole!r}")
    return integrate(f, 0.0, wmax, quad, points=[params.omega_bar]).value


def completeness_sum(params: PhysParams, t: float,
                     quad: QuadratureSpec = QuadratureSpec(abs_tol=1e-7, rel_tol=1e-6), *,
                     pole: PolePrescription = "cavity") -> float:
    """|f00|^2 + int_0^inf w^2 [C2^2 + S2^2] dw (unity when probability is conserved)."""
    _check_t(t)
    kappa(params)
    if params.g == 0.0:
        return 1.0
    wb = params.omega_bar
    f00 = C1_closed(params, t) ** 2 + S1_contour(params, t) ** 2
    f = lambda w: w * w * np.abs(_amplitude(w, params, t, pole)) ** 2
    spec = quad.with_(truncation=None, max_subdivisions=max(quad.max_subdivisions, 50_000))
    if t > 0:
        spec = spec.with_(oscillation_period_hint=2 * math.pi / t)
    return f00 + integrate_semi_infinite(f, spec, points=[wb], scale=wb).value


# ------------------------------------------------------------- dressing matrix

@dataclass(frozen=True, eq=False)
class DressingMatrix:
    alpha: np.ndarray

    def __post_init__(self):
        self.alpha.setflags(write=False)

    def orthogonality_defect(self) -> float:
        """max |alpha alpha^T - 1|; zero only in the decoupled case."""
        G = self.alpha @ self.alpha.T
        return float(np.max(np.abs(G - np.eye(G.shape[0]))))

    def symmetry_defect(self) -> float:
        return float(np.max(np.abs(self.alpha - self.alpha.T)))


def dressing_matrix(basis: NormalModeBasis) -> DressingMatrix:
    """alpha_{mu nu} = (1/sqrt(w_mu)) sum_r t_mu^r t_nu^r sqrt(Omega_r)."""
    T = basis.t
    M = (T * np.sqrt(basis.Omegas)[None, :]) @ T.T
    M = M / np.sqrt(basis.bare_frequencies)[:, None]
    return DressingMatrix(np.ascontiguousarray(M))


def A00_integral(params: PhysParams, quad: QuadratureSpec = QuadratureSpec()) -> float:
    """(1/sqrt(wb)) int_0^inf 2g W^2 sqrt(W) / D(W) dW by mapped adaptive quadrature."""
    kappa(params)
    if params.g == 0.0:
        return 1.0
    wb = params.omega_bar
    f = lambda W: lorentzian_weight(W, params) * np.sqrt(W)
    res = integrate_semi_infinite(f, quad.with_(truncation=None), points=[wb], scale=wb)
    return res.value / math.sqrt(wb)


def A00_integral_tail_series(params: PhysParams, quad: QuadratureSpec = QuadratureSpec(), *,
                             cutoff: float | None = None) -> float:
    """Same integral: finite range up to ``cutoff`` plus the large-W expansion of the tail.

    For W > cutoff, 2g W^{5/2} / D = 2g W^{-3/2} sum_n c_n W^{-2n} with c_n from
    1/D = W^{-4} / (1 - b/W^2 + wb^4/W^4), b = 2 wb^2 - pi^2 g^2.
    """
    kappa(params)
    if params.g == 0.0:
        return 1.0
    wb = params.omega_bar
    L = 1e3 * wb if cutoff is None else float(cutoff)
    f = lambda W: lorentzian_weight(W, params) * np.sqrt(W)
    head = integrate(f, 0.0, L, quad, points=[wb]).value
    b = 2 * wb * wb - (math.pi * params.g) ** 2
    # c_n satisfy c_n = b c_{n-1} - wb^4 c_{n-2}
    c = [1.0, b]
    for _ in range(8):
        c.append(b * c[-1] - wb**4 * c[-2])
    tail = sum(cn * L ** (-(2 * n + 0.5)) / (2 * n + 0.5) for n, cn in enumerate(c))
    return (head + 2 * params.g * tail) / math.sqrt(wb)
