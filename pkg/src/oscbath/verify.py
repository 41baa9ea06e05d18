"""Acceptance checks shared by the ``verify`` subcommand and the test suite."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import bare, dressed
from .model import CavityConfig, PhysParams, bose_occupation
from .spectrum import SpectrumMethod, orthonormality_defect, solve_spectrum

__all__ = ["CriterionResult", "Criterion", "CRITERIA", "run_criteria", "format_result"]

REFERENCE = PhysParams(omega_bar=1.0, g=0.1, beta=2.0, n0_init=1.0)
BOSE_AT_WBAR = 0.156518


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    lines: list[str] = field(default_factory=list)

    def check(self, ok: bool, text: str) -> None:
        self.lines.append(f"[{'ok' if ok else 'FAIL'}] {text}")
        self.passed = self.passed and bool(ok)


@dataclass(frozen=True)
class Criterion:
    number: int
    title: str
    fast: bool
    run: Callable[[float], CriterionResult]


def _new(number: int, title: str) -> CriterionResult:
    return CriterionResult(number, title, True)


def plateau(scale: float = 1.0) -> CriterionResult:
    r = _new(1, "thermal plateau at t = 40, 50, 60")
    bose = float(bose_occupation(1.0, 2.0))
    r.check(abs(bose - BOSE_AT_WBAR) < 1e-6, f"Bose value at omega_bar: {bose:.6f}")
    ts = (40.0, 50.0, 60.0)
    series = {
        "bare": [bare.occupation_bare_renormalized(REFERENCE, t).total for t in ts],
        "dressed": [dressed.occupation_dressed_continuum(REFERENCE, t).total for t in ts],
    }
    for name, vals in series.items():
        lo, hi = 0.150, 0.170
        inside = all(lo <= v <= hi for v in vals)
        spread = max(vals) - min(vals)
        margins = [v - BOSE_AT_WBAR for v in vals]
        r.check(inside, f"{name}: values {', '.join(f'{v:.6f}' for v in vals)} in [0.150, 0.170]")
        r.check(spread < 0.01 * scale, f"{name}: spread {spread:.2e} < {0.01 * scale:.2e}")
        r.check(all(0 < m < 0.015 * scale for m in margins),
                f"{name}: margin over Bose {min(margins):+.5f}..{max(margins):+.5f} in (0, {0.015 * scale:.3g})")
    pv = dressed.occupation_dressed_continuum(REFERENCE, 50.0, pole="principal").total
    r.lines.append(f"[info] dressed, principal-value amplitudes: n(50) = {pv:.6f}")
    return r


def memory_loss(scale: float = 1.0) -> CriterionResult:
    r = _new(2, "independence of the initial occupation at t = 50")
    for name, fn in (("bare", bare.occupation_bare_renormalized),
                     ("dressed", dressed.occupation_dressed_continuum)):
        vals = []
        for n0 in (0.0, 1.0, 5.0):
            p = PhysParams(REFERENCE.omega_bar, REFERENCE.g, REFERENCE.beta, n0)
            vals.append(fn(p, 50.0).total)
        change = max(vals) - min(vals)
        r.check(change < 1e-3 * scale, f"{name}: max change over n0 in {{0, 1, 5}} = {change:.2e}")
    return r


def finite_exactness(scale: float = 1.0) -> CriterionResult:
    r = _new(3, "finite-cavity exactness")
    cases = [(2, math.pi), (16, 4 * math.pi), (64, 40 * math.pi), (128, 40 * math.pi),
             (512, 40 * math.pi)]
    worst = dict(ortho=0.0, eig=0.0, unit=0.0, prob=0.0)
    for N, R in cases:
        cfg = CavityConfig(R=R, N=N)
        b = solve_spectrum(cfg, REFERENCE)
        d = solve_spectrum(cfg, REFERENCE, SpectrumMethod.DENSE_EIGEN_ORACLE)
        worst["ortho"] = max(worst["ortho"], orthonormality_defect(b))
        worst["eig"] = max(worst["eig"], float(np.max(np.abs(b.Omegas / d.Omegas - 1))))
        for mu in sorted({0, 1, N // 2}):
            for t in (0.0, 1.0, 10.0):
                worst["unit"] = max(worst["unit"], bare.bogoliubov_unitarity_defect(b, mu, t))
            for t in (0.0, 1.0, 5.0, 10.0, 20.0):
                worst["prob"] = max(worst["prob"], dressed.amplitude_row(b, mu, t).norm_defect())
    r.check(worst["ortho"] < 1e-10 * scale, f"orthonormality defect {worst['ortho']:.2e} < 1e-10")
    r.check(worst["eig"] < 1e-9 * scale, f"secular vs dense eigenfrequency rel. diff {worst['eig']:.2e} < 1e-9")
    r.check(worst["unit"] < 1e-8 * scale, f"Bogoliubov unitarity defect {worst['unit']:.2e} < 1e-8")
    r.check(worst["prob"] < 1e-8 * scale, f"amplitude norm defect {worst['prob']:.2e} < 1e-8")
    return r


def closed_vs_quadrature(scale: float = 1.0) -> CriterionResult:
    r = _new(4, "closed forms vs quadrature")
    ts = np.linspace(0.0, 20.0, 41)
    d1 = max(abs(dressed.C1_closed(REFERENCE, t) - dressed.C1_quadrature(REFERENCE, t)) for t in ts)
    r.check(d1 < 1e-6 * scale, f"C1: max |closed - quadrature| on [0, 20] = {d1:.2e} < 1e-6")
    d2 = 0.0
    for w in (0.5, 1.0, 1.5):
        for t in (1.0, 5.0, 20.0):
            diff = abs(dressed.C2_closed(w, REFERENCE, t) - dressed.C2_quadrature(w, REFERENCE, t))
            d2 = max(d2, diff)
    r.check(d2 < 1e-5 * scale, f"C2: max |closed - PV quadrature| on grid (incl. omega = omega_bar) = {d2:.2e} < 1e-5")
    return r


def asymptotic_tails(scale: float = 1.0) -> CriterionResult:
    r = _new(5, "long-time tails at t = 40")
    t = 40.0
    s1 = dressed.S1_quadrature(REFERENCE, t)
    s1a = dressed.S1_asymptotic(REFERENCE, t)
    ratio1 = s1 / s1a
    r.check(abs(ratio1 - 1) <= 0.15 * scale, f"S1: quadrature {s1:.4e} vs asymptotic {s1a:.4e} (ratio {ratio1:.4g})")
    s2 = dressed.S2_quadrature(1.5, REFERENCE, t)
    s2a = dressed.S2_asymptotic(1.5, REFERENCE, t)
    ratio2 = s2 / s2a
    r.check(abs(ratio2 - 1) <= 0.20 * scale, f"S2(1.5): quadrature {s2:.4e} vs asymptotic {s2a:.4e} (ratio {ratio2:.4g})")
    c1 = dressed.C1_quadrature(REFERENCE, t)
    term1_q, term1_a = c1 * c1, dressed.C1_closed(REFERENCE, t) ** 2
    term2_q = s1 * s1
    term2_a = dressed.f00_abs2_longtime(REFERENCE, t) - term1_a
    rel1 = abs(term1_q / term1_a - 1)
    rel2 = abs(term2_q / term2_a - 1)
    r.check(rel1 <= 0.20 * scale, f"|f00|^2 damped term: {term1_q:.4e} vs {term1_a:.4e} (rel {rel1:.2e})")
    r.check(rel2 <= 0.20 * scale, f"|f00|^2 algebraic term: {term2_q:.4e} vs {term2_a:.4e} (rel {rel2:.3g})")
    return r


def cavity_consistency(scale: float = 1.0) -> CriterionResult:
    r = _new(6, "cavity vs continuum dressed occupation (N=128, R=40 pi)")
    b = solve_spectrum(CavityConfig(R=40 * math.pi, N=128), REFERENCE)
    worst, at = 0.0, None
    for t in np.linspace(1.0, 10.0, 19):
        d = abs(dressed.occupation_dressed_finite(b, REFERENCE, t).total
                - dressed.occupation_dressed_continuum(REFERENCE, t).total)
        if d >= worst:
            worst, at = d, t
    r.check(worst < 2e-3 * scale, f"max |finite - continuum| on t in [1, 10] = {worst:.3e} (at t = {at:g}) < 2e-3")
    return r


def log_divergence(scale: float = 1.0) -> CriterionResult:
    r = _new(7, "logarithmic growth of the vacuum integral at t = 20")
    cuts = [100.0, 200.0, 400.0, 800.0]
    vals = bare.vacuum_divergence_probe(REFERENCE, 20.0, cuts)
    target = REFERENCE.g / REFERENCE.omega_bar * math.log(2)
    for lam, a, b in zip(cuts, vals, vals[1:]):
        rel = abs((b - a) / target - 1)
        r.check(rel < 0.05 * scale, f"increment {lam:g} -> {2 * lam:g}: {b - a:.6f} vs {target:.6f} (rel {rel:.2e})")
    return r


def discontinuity(scale: float = 1.0) -> CriterionResult:
    r = _new(8, "memory function jump at t = 0")
    k0 = bare.memory_coefficient_K(REFERENCE, 0.0)
    kp = bare.memory_coefficient_K(REFERENCE, 1e-12)
    km = bare.memory_coefficient_K(REFERENCE, -1.0)
    r.check(abs(k0 - 1.074023) <= 1e-5 * scale and abs(kp - 1.074023) <= 1e-5 * scale,
            f"K(0+) = {kp:.7f} vs 1.074023")
    r.check(km == REFERENCE.n0_init, f"K(t<0) = {km} equals n0 = {REFERENCE.n0_init}")
    return r


CRITERIA: tuple[Criterion, ...] = (
    Criterion(1, "thermal plateau", False, plateau),
    Criterion(2, "memory loss", False, memory_loss),
    Criterion(3, "finite-cavity exactness", True, finite_exactness),
    Criterion(4, "closed forms vs quadrature", True, closed_vs_quadrature),
    Criterion(5, "asymptotic tails", False, asymptotic_tails),
    Criterion(6, "cavity-continuum consistency", False, cavity_consistency),
    Criterion(7, "log divergence", True, log_divergence),
    Criterion(8, "discontinuity at t = 0", True, discontinuity),
)


def run_criteria(level: str = "full", *, fault: bool = False) -> list[CriterionResult]:
    """Run the fast subset or all criteria. ``fault`` shrinks every tolerance to zero."""
    if level not in ("fast", "full"):
        raise ValueError("level must be 'fast' or 'full'")
    scale = 0.0 if fault else 1.0
    out = []
    for c in CRITERIA:
        if level == "fast" and not c.fast:
            continue
        out.append(c.run(scale))
    return out


def format_result(res: CriterionResult) -> str:
    head = f"criterion {res.number} ({res.title}): {'PASS' if res.passed else 'FAIL'}"
    return "\n".join([head] + ["    " + ln for ln in res.lines])
