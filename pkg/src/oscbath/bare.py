"""Evolution of the bare particle coordinate: Bogoliubov coefficients and occupation."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import DomainError
from .model import PhysParams, bose_occupation, kappa
from .quadrature import QuadratureResult, QuadratureSpec, integrate
from .series import OccupationPoint
from .spectrum import NormalModeBasis

__all__ = [
    "BogoliubovPair",
    "bogoliubov_finite",
    "bogoliubov_row",
    "bogoliubov_unitarity_defect",
    "alpha00_continuum",
    "beta00_continuum",
    "alpha0k_continuum",
    "beta0k_continuum",
    "kernel_F",
    "kernel_G",
    "vacuum_density",
    "memory_coefficient_K",
    "thermal_upper_limit",
    "occupation_bare_finite",
    "occupation_bare_renormalized",
    "occupation_bare_longtime",
    "vacuum_divergence_probe",
]


@dataclass(frozen=True)
class BogoliubovPair:
    alpha: complex
    beta: complex


def bogoliubov_row(basis: NormalModeBasis, mu: int, t: float) -> tuple[np.ndarray, np.ndarray]:
    """alpha_{mu nu}(t) and beta_{mu nu}(t) for all nu = 0..N."""
    if not 0 <= mu <= basis.N:
        raise IndexError(f"mode index {mu} out of range 0..{basis.N}")
    Om = basis.Omegas
    w = basis.bare_frequencies
    wm = w[mu]
    tm = basis.t[mu]
    ph = Om * t
    C = tm * (1j * np.cos(ph) / math.sqrt(2 * wm) + math.sqrt(wm / 2) * np.sin(ph) / Om)
    Cd = tm * (-1j * Om * np.sin(ph) / math.sqrt(2 * wm) + math.sqrt(wm / 2) * np.cos(ph))
    B = basis.t @ C
    Bd = basis.t @ Cd
    alpha = Bd / np.sqrt(2 * w) - 1j * np.sqrt(w / 2) * B
    beta = Bd / np.sqrt(2 * w) + 1j * np.sqrt(w / 2) * B
    return alpha, beta


def bogoliubov_finite(basis: NormalModeBasis, mu: int, nu: int, t: float) -> BogoliubovPair:
    """Bogoliubov pair (alpha_{mu nu}, beta_{mu nu}) at time t from the finite mode sums."""
    if not 0 <= nu <= basis.N:
        raise IndexError(f"mode index {nu} out of range 0..{basis.N}")
    a, b = bogoliubov_row(basis, mu, t)
    return BogoliubovPair(complex(a[nu]), complex(b[nu]))


def bogoliubov_unitarity_defect(basis: NormalModeBasis, mu: int, t: float) -> float:
    """|sum_nu (|alpha_{mu nu}|^2 - |beta_{mu nu}|^2) - 1|."""
    a, b = bogoliubov_row(basis, mu, t)
    return abs(math.fsum(np.abs(a) ** 2 - np.abs(b) ** 2) - 1.0)


def _check_t(t: float) -> None:
    if not t > 0:
        raise DomainError("continuum closed forms need t > 0")


def alpha00_continuum(params: PhysParams, t: float) -> complex:
    _check_t(t)
    k = kappa(params)
    wb, pg = params.omega_bar, math.pi * params.g
    e = math.exp(-pg * t / 2) / (16 * wb * k)
    ph = complex(math.cos(k * t), -math.sin(k * t))
    return e * ((2 * wb + 2 * k - 1j * pg) ** 2 * ph - (2 * wb - 2 * k - 1j * pg) ** 2 / ph)


def beta00_continuum(params: PhysParams, t: float) -> complex:
    _check_t(t)
    k = kappa(params)
    wb, pg = params.omega_bar, math.pi * params.g
    e = pg * math.exp(-pg * t / 2) / (8 * wb * k)
    ph = complex(math.cos(k * t), -math.sin(k * t))
    return e * ((pg + 2j * k) * ph - (pg - 2j * k) / ph)


def alpha0k_continuum(omega, params: PhysParams, t: float, delta_omega: float):
    """Large-cavity form of alpha_{0k}(t) for a bath mode of frequency ``omega``.

    Carries the sqrt(delta_omega) mode normalization. Agrees with the finite
    sums up to an overall sign.
    """
    w = np.asarray(omega, dtype=float)
    k = kappa(params)
    wb, g = params.omega_bar, params.g
    pg = math.pi * g
    first = (np.sqrt(w / (2 * wb)) * (wb + w) * math.sqrt(g * delta_omega) * np.exp(-1j * w * t)
             / (w * w - wb * wb + 1j * pg * w))
    pref = np.sqrt(w / wb) * math.sqrt(2 * g * delta_omega) / (4 * k) * math.exp(-pg * t / 2)
    second = pref * ((2 * k + 2 * wb - 1j * pg) / (2 * k - 2 * w - 1j * pg) * np.exp(-1j * k * t)
                     + (2 * wb - 2 * k - 1j * pg) / (2 * k + 2 * w + 1j * pg) * np.exp(1j * k * t))
    return first + second


def beta0k_continuum(omega, params: PhysParams, t: float, delta_omega: float):
    """Large-cavity form of beta_{0k}(t); carries the sqrt(delta_omega) normalization."""
    w = np.asarray(omega, dtype=float)
    k = kappa(params)
    wb, g = params.omega_bar, params.g
    pg = math.pi * g
    first = (np.sqrt(w / (2 * wb)) * (w - wb) * math.sqrt(g * delta_omega) * np.exp(1j * w * t)
             / (w * w - wb * wb - 1j * pg * w))
    pref = np.sqrt(w / wb) * math.sqrt(2 * g * delta_omega) / (4 * k) * math.exp(-pg * t / 2)
    second = pref * ((2 * wb + 2 * k - 1j * pg) / (2 * k + 2 * w - 1j * pg) * np.exp(-1j * k * t)
                     + (2 * wb - 2 * k - 1j * pg) / (2 * k - 2 * w + 1j * pg) * np.exp(1j * k * t))
    return first - second


def _D(w, params):
    return (w * w - params.omega_bar**2) ** 2 + (math.pi * params.g * w) ** 2


def kernel_F(omega, params: PhysParams, t: float):
    """Thermal kernel: the Bose-weighted density of |alpha_{0k}|^2 + |beta_{0k}|^2."""
    w = np.asarray(omega, dtype=float)
    k = kappa(params)
    wb2 = params.omega_bar**2
    pg = math.pi * params.g
    s = w * w + wb2
    r = (w * w - wb2) / s
    e1 = math.exp(-pg * t)
    e2 = math.exp(-pg * t / 2)
    br = (1.0
          + e1 / (4 * k * k) * (4 * wb2 - pg**2 * math.cos(2 * k * t)
                                - 2 * pg * k * r * math.sin(2 * k * t))
          - e2 / k * (2 * k * np.cos(w * t) * math.cos(k * t)
                      + 4 * w * wb2 / s * np.sin(w * t) * math.sin(k * t)
                      - pg * r * np.cos(w * t) * math.sin(k * t)))
    return w * s / _D(w, params) * br


def kernel_G(omega, params: PhysParams, t: float):
    """Vacuum kernel G; (g/wb) G / 2 is the density of sum_k |beta_{0k}|^2.

    The (omega - omega_bar)^-2 factors inside the braces are multiplied out
    against the prefactor, so no cancellation occurs at omega = omega_bar.
    Its 1/omega tail makes the integral grow by (g/wb) ln 2 per octave.
    """
    w = np.asarray(omega, dtype=float)
    k = kappa(params)
    wb = params.omega_bar
    pg = math.pi * params.g
    e1 = math.exp(-pg * t)
    e2 = math.exp(-pg * t / 2)
    dm = (w - wb) ** 2
    a = dm * (1.0 + e1 * wb * wb / (k * k)
              - e2 * (2 * np.cos(w * t) * math.cos(k * t)
                      - (2 * wb / k) * np.sin(w * t) * math.sin(k * t)))
    b = e1 / (4 * k * k) * (2 * pg**2 * wb * w - pg**2 * (w * w + wb * wb) * math.cos(2 * k * t)
                            - 2 * pg * k * (w * w - wb * wb) * math.sin(2 * k * t))
    c = e2 * (pg / k) * (w * w - wb * wb) * np.cos(w * t) * math.sin(k * t)
    return w / _D(w, params) * (a + b + c)


def vacuum_density(omega, params: PhysParams, t: float):
    """Density of sum_k |beta_{0k}(t)|^2 per unit bath frequency: (g/wb) G / 2."""
    return 0.5 * params.g / params.omega_bar * kernel_G(omega, params, t)


def _K_parts(params: PhysParams, t: float) -> tuple[float, float]:
    """(coefficient of n0, n0-independent part) of the memory function."""
    k = kappa(params)
    wb2 = params.omega_bar**2
    pg = math.pi * params.g
    e = math.exp(-pg * t)
    c2, s2 = math.cos(2 * k * t), math.sin(2 * k * t)
    coef = e / (wb2 * k * k) * (wb2 * wb2 + pg**2 / 8 * (2 * wb2 - pg**2) * c2
                                - pg**3 * k / 4 * s2)
    vac = pg**2 * e / (16 * wb2 * k * k) * (2 * wb2 + (2 * wb2 - pg**2) * c2 - 2 * pg * k * s2)
    return coef, vac


def memory_coefficient_K(params: PhysParams, t: float) -> float:
    """K(t): the initial-state part of the renormalized occupation (n0 for t < 0)."""
    if t < 0:
        return params.n0_init
    if params.g == 0.0:
        return params.n0_init
    coef, vac = _K_parts(params, t)
    return coef * params.n0_init + vac


def thermal_upper_limit(params: PhysParams) -> float:
    """Upper frequency for Bose-weighted integrals: max(50 omega_bar, 40 / beta)."""
    return max(50.0 * params.omega_bar, 40.0 / params.beta)


def _thermal_tail_bound(params: PhysParams, wmax: float) -> float:
    # |F| <= C w (w^2 + wb^2)/D with C from the bounded bracket; D >= (w^2 - wb^2)^2
    k = kappa(params)
    wb2 = params.omega_bar**2
    pg = math.pi * params.g
    C = 1 + (4 * wb2 + pg**2 + 2 * pg * k) / (4 * k * k) + (2 * k + 2 * math.sqrt(wb2) + pg) / k
    M = wmax * (wmax**2 + wb2) / (wmax**2 - wb2) ** 2
    x = params.beta * wmax
    return params.g / math.sqrt(wb2) * C * M * math.exp(-x) / (params.beta * -math.expm1(-x))


def occupation_bare_finite(basis: NormalModeBasis, params: PhysParams, t: float) -> OccupationPoint:
    """Particle occupation from the finite-cavity Bogoliubov sums."""
    if params != basis.params:
        raise DomainError("basis was built with different parameters")
    if t == 0.0:
        return OccupationPoint.from_terms(t, params.n0_init, 0.0, 0.0)
    a, b = bogoliubov_row(basis, 0, t)
    pa, pb = np.abs(a) ** 2, np.abs(b) ** 2
    memory = (pa[0] + pb[0]) * params.n0_init
    thermal = math.fsum((pa[1:] + pb[1:]) * bose_occupation(basis.config.omegas, params.beta))
    vacuum = math.fsum(pb)
    return OccupationPoint.from_terms(t, memory, thermal, vacuum)


def _thermal_integral(params: PhysParams, t: float, quad: QuadratureSpec) -> QuadratureResult:
    wmax = thermal_upper_limit(params)
    if quad.truncation is not None:
        wmax = quad.truncation
    spec = quad
    if spec.oscillation_period_hint is None and t > 0:
        spec = spec.with_(oscillation_period_hint=2 * math.pi / t)

    def f(w):
        return kernel_F(w, params, t) * bose_occupation(w, params.beta)

    res = integrate(f, 0.0, wmax, spec, points=[params.omega_bar]).scaled(params.g / params.omega_bar)
    tail = _thermal_tail_bound(params, wmax)
    return replace(res, error_estimate=res.error_estimate + tail, truncation_tail_bound=tail)


def occupation_bare_renormalized(params: PhysParams, t: float,
                                 quad: QuadratureSpec = QuadratureSpec()) -> OccupationPoint:
    """Continuum occupation with the vacuum term subtracted.

    memory = K(t) (the whole initial-state function, which also carries the
    n0-independent |beta_00|^2 piece), thermal = (g/wb) int F n(w) dw,
    vacuum = 0. For t < 0 the pre-interaction value n0 is returned.
    """
    if t < 0 or params.g == 0.0:
        return OccupationPoint.from_terms(t, params.n0_init, 0.0, 0.0)
    if t == 0:
        raise DomainError("the renormalized occupation is discontinuous at t = 0; use t > 0")
    K = memory_coefficient_K(params, t)
    th = _thermal_integral(params, t, quad)
    return OccupationPoint.from_terms(t, K, th.value, 0.0, th.error_estimate)


def occupation_bare_longtime(params: PhysParams, quad: QuadratureSpec = QuadratureSpec()) -> float:
    """t -> infinity plateau (g/wb) int w (w^2 + wb^2)/D(w) n(w) dw."""
    kappa(params)
    wmax = thermal_upper_limit(params)

    def f(w):
        return w * (w * w + params.omega_bar**2) / _D(w, params) * bose_occupation(w, params.beta)

    res = integrate(f, 0.0, wmax, quad, points=[params.omega_bar])
    return params.g / params.omega_bar * res.value


def vacuum_divergence_probe(params: PhysParams, t: float, cutoffs: Sequence[float],
                            quad: QuadratureSpec = QuadratureSpec()) -> list[float]:
    """(g/wb) int_0^Lambda G dw for each cutoff Lambda (log-divergent as Lambda grows)."""
    cuts = [float(c) for c in cutoffs]
    if not cuts:
        return []
    if any(b <= a for a, b in zip(cuts, cuts[1:])):
        raise DomainError("cutoffs must be strictly increasing")
    if cuts[0] < 10 * params.omega_bar:
        raise DomainError("cutoffs must be >= 10 omega_bar")
    if params.g == 0.0:
        return [0.0] * len(cuts)
    spec = quad
    if spec.oscillation_period_hint is None and t > 0:
        spec = spec.with_(oscillation_period_hint=2 * math.pi / t,
                          max_subdivisions=max(spec.max_subdivisions, 200_000))
    f = lambda w: kernel_G(w, params, t)
    out, acc, lo = [], 0.0, 0.0
    for c in cuts:
        pts = [params.omega_bar] if lo < params.omega_bar < c else []
        acc += integrate(f, lo, c, spec, points=pts).value
        out.append(params.g / params.omega_bar * acc)
        lo = c
    return out
