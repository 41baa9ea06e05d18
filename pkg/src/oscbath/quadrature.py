"""Adaptive quadrature for the continuum integrals.

Every panel is integrated with the embedded Gauss(7)-Kronrod(15) pair. The
Kronrod sum is the panel value and ``|K15 - G7|`` is the panel error. This is
the unscaled QUADPACK difference, which overestimates the K15 error on
smooth panels. Refinement bisects every panel whose error exceeds its equal
share ``tol / n_panels``, so a run is a fixed sequence of array operations and
repeated calls give bit-identical results. Totals are accumulated with
``math.fsum`` in panel order.

Semi-infinite ranges are mapped onto (0, 1) with ``x = lower + s u / (1 - u)``
unless the QuadratureSpec sets a fixed truncation. Principal values use symmetric
subtraction around the pole. Oscillatory tails are split at the zeros of the
trigonometric weight and the alternating partial sums are accelerated with
Wynn's epsilon algorithm.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, PoleOrderError, QuadratureError

__all__ = [
    "QuadratureSpec",
    "QuadratureResult",
    "integrate",
    "integrate_semi_infinite",
    "integrate_principal_value",
    "integrate_oscillatory",
    "wynn_epsilon",
]

# Kronrod abscissae (positive half, descending) and weights; Gauss-7 weights
# sit on every other Kronrod node.
_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.0, 0.129484966168869693270611432679082,
    0.0, 0.279705391489276667901467771423780,
    0.0, 0.381830050505118944950369775488975,
    0.0, 0.417959183673469387755102040816327,
])
NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WK[:-1], _WK[::-1]])
GAUSS_WEIGHTS = np.concatenate([_WG[:-1], _WG[::-1]])

Func = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and truncation policy.

    ``truncation`` is a fixed upper limit for semi-infinite integrals; ``None``
    maps the whole half line onto (0, 1). ``oscillation_period_hint`` is the
    period (in units of the integration variable) of any oscillation in the
    integrand; initial panels are made no wider than half of it.
    """

    abs_tol: float = 1e-9
    rel_tol: float = 1e-7
    max_subdivisions: int = 10_000
    truncation: float | None = None
    oscillation_period_hint: float | None = None

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError("tolerances must be positive")
        if self.max_subdivisions < 16:
            raise DomainError("max_subdivisions must be >= 16")
        if self.truncation is not None and not self.truncation > 0:
            raise DomainError("truncation must be positive")
        if self.oscillation_period_hint is not None and not self.oscillation_period_hint > 0:
            raise DomainError("oscillation_period_hint must be positive")

    def with_(self, **changes) -> "QuadratureSpec":
        return replace(self, **changes)

    def tolerance(self, value: float) -> float:
        return max(self.abs_tol, self.rel_tol * abs(value))


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    subdivisions_used: int
    truncation_tail_bound: float = 0.0
    tolerance: float = math.inf

    @property
    def converged(self) -> bool:
        return self.error_estimate <= self.tolerance

    def __add__(self, other: "QuadratureResult") -> "QuadratureResult":
        return QuadratureResult(
            value=self.value + other.value,
            error_estimate=self.error_estimate + other.error_estimate,
            subdivisions_used=self.subdivisions_used + other.subdivisions_used,
            truncation_tail_bound=self.truncation_tail_bound + other.truncation_tail_bound,
            tolerance=self.tolerance + other.tolerance,
        )

    def scaled(self, factor: float) -> "QuadratureResult":
        return QuadratureResult(
            value=factor * self.value,
            error_estimate=abs(factor) * self.error_estimate,
            subdivisions_used=self.subdivisions_used,
            truncation_tail_bound=abs(factor) * self.truncation_tail_bound,
            tolerance=abs(factor) * self.tolerance,
        )


def _panel_rule(f: Func, a: np.ndarray, b: np.ndarray):
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    x = c[:, None] + h[:, None] * NODES[None, :]
    y = np.asarray(f(x.ravel()), dtype=float).reshape(x.shape)
    if not np.all(np.isfinite(y)):
        bad = x[~np.isfinite(y)][0]
        raise DomainError(f"non-finite integrand sample at x={bad!r}")
    k = h * (y @ KRONROD_WEIGHTS)
    g = h * (y @ GAUSS_WEIGHTS)
    return k, np.abs(k - g)


def _adaptive(f: Func, edges: np.ndarray, abs_tol: float, rel_tol: float, max_sub: int):
    """Globally adaptive GK15 on the segments between ``edges``.

    Returns per-segment values and errors, the final panel count and a
    converged flag. Never raises on non-convergence.
    """
    edges = np.asarray(edges, dtype=float)
    a = edges[:-1].copy()
    b = edges[1:].copy()
    owner = np.arange(a.size)
    val, err = _panel_rule(f, a, b)
    converged = False
    while True:
        total = math.fsum(val)
        tol = max(abs_tol, rel_tol * abs(total))
        if math.fsum(err) <= tol:
            converged = True
            break
        n = a.size
        width = b - a
        splittable = width > 1e-13 * np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))
        cand = (err > tol / n) & splittable
        if not cand.any():
            masked = np.where(splittable, err, -1.0)
            if masked.max() <= 0.0:
                break
            cand = masked == masked.max()
        nsplit = int(cand.sum())
        if n + nsplit > max_sub:
            break
        m = 0.5 * (a[cand] + b[cand])
        na = np.concatenate([a[~cand], a[cand], m])
        nb = np.concatenate([b[~cand], m, b[cand]])
        no = np.concatenate([owner[~cand], owner[cand], owner[cand]])
        nv_new, ne_new = _panel_rule(f, np.concatenate([a[cand], m]), np.concatenate([m, b[cand]]))
        nv = np.concatenate([val[~cand], nv_new])
        ne = np.concatenate([err[~cand], ne_new])
        order = np.argsort(na, kind="stable")
        a, b, owner, val, err = na[order], nb[order], no[order], nv[order], ne[order]
    nseg = edges.size - 1
    seg_val = np.array([math.fsum(val[owner == i]) for i in range(nseg)]) if nseg > 1 else np.array([math.fsum(val)])
    seg_err = np.bincount(owner, weights=err, minlength=nseg)
    return seg_val, seg_err, a.size, converged


def _initial_edges(a: float, b: float, points: Sequence[float], period: float | None,
                   max_panels: int) -> np.ndarray:
    pts = [a, b] + [p for p in points if a < p < b]
    if period is not None and b > a:
        n = int(math.ceil((b - a) / (0.5 * period)))
        n = min(n, max(1, max_panels // 2))
        pts.extend(np.linspace(a, b, n + 1)[1:-1].tolist())
    return np.unique(np.asarray(pts, dtype=float))


def _finish(vals, errs, npan, tol, tail=0.0, what="integral") -> QuadratureResult:
    value = math.fsum(vals)
    error = float(np.sum(errs)) + tail
    res = QuadratureResult(value, error, int(npan), tail, tol)
    if not error <= tol:
        raise QuadratureError(
            f"{what} did not converge: value={value:.12g}, error estimate={error:.3g}, "
            f"tolerance={tol:.3g}, panels={npan}",
            value=value, error_estimate=error,
        )
    return res


def integrate(f: Func, a: float, b: float, spec: QuadratureSpec = QuadratureSpec(),
              points: Sequence[float] = ()) -> QuadratureResult:
    """Integrate a vectorized real function over the finite interval [a, b]."""
    if b == a:
        return QuadratureResult(0.0, 0.0, 0, 0.0, spec.abs_tol)
    if b < a:
        return integrate(f, b, a, spec, points).scaled(-1.0)
    edges = _initial_edges(a, b, points, spec.oscillation_period_hint, spec.max_subdivisions)
    vals, errs, npan, _ = _adaptive(f, edges, spec.abs_tol, spec.rel_tol, spec.max_subdivisions)
    return _finish(vals, errs, npan, spec.tolerance(math.fsum(vals)))


def integrate_semi_infinite(f: Func, spec: QuadratureSpec = QuadratureSpec(), *,
                            lower: float = 0.0, points: Sequence[float] = (),
                            scale: float = 1.0,
                            tail: Callable[[float], float] | None = None) -> QuadratureResult:
    """Integrate ``f`` over (lower, inf).

    With ``spec.truncation`` set, integrates up to that bound and adds
    ``tail(upper)`` (a caller-supplied bound on the discarded tail) to the
    error estimate. Otherwise the half line is mapped onto (0, 1) with
    ``x = lower + scale * u / (1 - u)``.
    """
    if spec.truncation is not None:
        upper = spec.truncation
        if upper <= lower:
            raise DomainError("truncation must exceed the lower limit")
        edges = _initial_edges(lower, upper, points, spec.oscillation_period_hint,
                               spec.max_subdivisions)
        vals, errs, npan, _ = _adaptive(f, edges, spec.abs_tol, spec.rel_tol,
                                        spec.max_subdivisions)
        tb = float(tail(upper)) if tail is not None else 0.0
        return _finish(vals, errs, npan, spec.tolerance(math.fsum(vals)), tb,
                       "truncated semi-infinite integral")

    def mapped(u):
        one_minus = 1.0 - u
        x = lower + scale * u / one_minus
        return f(x) * (scale / (one_minus * one_minus))

    upts = [(p - lower) / (p - lower + scale) for p in points if p > lower]
    if spec.oscillation_period_hint is not None:
        half = 0.5 * spec.oscillation_period_hint
        xs = lower + half * np.arange(1, 257)
        upts.extend(((xs - lower) / (xs - lower + scale)).tolist())
    edges = np.unique(np.asarray([0.0, 1.0] + upts, dtype=float))
    vals, errs, npan, _ = _adaptive(mapped, edges, spec.abs_tol, spec.rel_tol,
                                    spec.max_subdivisions)
    return _finish(vals, errs, npan, spec.tolerance(math.fsum(vals)), 0.0,
                   "semi-infinite integral")


def _check_simple_pole(f: Func, pole: float, delta: float) -> None:
    probe = np.array([pole, pole + 1e-3 * delta, pole - 1e-3 * delta,
                      pole + 1e-7 * delta, pole - 1e-7 * delta])
    with np.errstate(all="ignore"):
        v = np.abs(np.asarray(f(probe), dtype=float))
    if not np.all(np.isfinite(v)):
        raise PoleOrderError(f"residue function is singular at the pole x={pole}")
    far = max(v[1], v[2])
    near = max(v[3], v[4])
    if near > 1e3 * (far + 1e-300) and near > 1e-12:
        raise PoleOrderError(f"pole at x={pole} is not simple")


def integrate_principal_value(f: Func, pole: float, spec: QuadratureSpec = QuadratureSpec(), *,
                              lower: float = 0.0, upper: float | None = None,
                              points: Sequence[float] = (), scale: float = 1.0,
                              tail: Callable[[float], float] | None = None) -> QuadratureResult:
    """Cauchy principal value of the integral of ``f(x) / (x - pole)``.

    ``f`` is the (smooth) residue function, not the full integrand. The
    window ``|x - pole| < delta`` is folded into the regular integral of
    ``(f(pole + s) - f(pole - s)) / s`` over (0, delta); the rest is ordinary.
    ``upper=None`` means ``spec.truncation``, or infinity.
    """
    if upper is None:
        upper = spec.truncation
    if not lower < pole:
        raise DomainError("pole must lie above the lower limit")
    if upper is not None and not pole < upper:
        raise DomainError("pole must lie below the upper limit")
    delta = pole - lower
    if upper is not None:
        delta = min(delta, upper - pole)
    _check_simple_pole(f, pole, delta)

    def full(x):
        return f(x) / (x - pole)

    def folded(s):
        return (f(pole + s) - f(pole - s)) / s

    right = pole + delta
    rpts = [p for p in points if p > right]
    lpts = [p for p in points if p < pole - delta]

    def attempt(sub: QuadratureSpec) -> QuadratureResult:
        res = integrate(folded, 0.0, delta, sub)
        if pole - delta > lower:
            res = res + integrate(full, lower, pole - delta, sub, lpts)
        if upper is None:
            res = res + integrate_semi_infinite(full, sub, lower=right, points=rpts, scale=scale)
        elif upper > right:
            res = res + integrate(full, right, upper, sub, rpts)
        return res

    tb = float(tail(upper)) if (tail is not None and upper is not None) else 0.0
    res = attempt(spec.with_(abs_tol=spec.abs_tol / 3, truncation=None))
    if res.error_estimate + tb > spec.tolerance(res.value):
        # Parts cancel: redo them against an absolute budget.
        budget = max(spec.tolerance(res.value) - tb, 1e-300) / 3
        res = attempt(spec.with_(abs_tol=budget, rel_tol=1e-15, truncation=None))
    total = QuadratureResult(res.value, res.error_estimate + tb, res.subdivisions_used, tb,
                             spec.tolerance(res.value))
    if not total.converged:
        raise QuadratureError(
            f"principal value did not converge: error {total.error_estimate:.3g} "
            f"> tolerance {total.tolerance:.3g}", value=total.value,
            error_estimate=total.error_estimate)
    return total


def wynn_epsilon(partial_sums: Sequence[float]) -> tuple[float, float]:
    """Extrapolate a sequence of partial sums; return (limit, error estimate)."""
    s = [float(x) for x in partial_sums]
    n = len(s)
    if n < 3:
        return s[-1], abs(s[-1] - s[-2]) if n == 2 else math.inf
    prev = [0.0] * (n + 1)
    cur = s[:]
    estimates = [s[-1]]
    k = 0
    while len(cur) > 1:
        nxt = []
        for j in range(len(cur) - 1):
            d = cur[j + 1] - cur[j]
            if d == 0.0 or not math.isfinite(d):
                nxt.append(math.inf)
            else:
                nxt.append(prev[j + 1] + 1.0 / d)
        prev, cur = cur, nxt
        k += 1
        if k % 2 == 0 and cur and math.isfinite(cur[-1]):
            estimates.append(cur[-1])
    if len(estimates) < 2:
        return estimates[-1], abs(s[-1] - s[-2])
    return estimates[-1], abs(estimates[-1] - estimates[-2])


def integrate_oscillatory(envelope: Func, frequency: float,
                          spec: QuadratureSpec = QuadratureSpec(), *,
                          weight: str = "sin", lower: float = 0.0,
                          scale: float = 1.0, batch: int = 16,
                          max_cycles: int = 4096) -> QuadratureResult:
    """Integrate ``envelope(x) * trig(frequency * x)`` over (lower, inf).

    ``trig`` is sin or cos according to ``weight``. The range is cut at the
    zeros of the weight; the per-cycle integrals are summed with Wynn
    epsilon acceleration. Frequencies below ``1e-8 / scale`` fall back to a
    plain semi-infinite integral.
    """
    if weight not in ("sin", "cos"):
        raise DomainError("weight must be 'sin' or 'cos'")
    if frequency < 0:
        raise DomainError("frequency must be >= 0")
    trig = np.sin if weight == "sin" else np.cos
    if frequency * scale < 1e-8:
        return integrate_semi_infinite(lambda x: envelope(x) * trig(frequency * x),
                                       spec.with_(truncation=None), lower=lower, scale=scale)

    half = math.pi / frequency
    phase = 0.0 if weight == "sin" else 0.5
    k0 = math.floor(lower / half - phase) + 1
    first_zero = (k0 + phase) * half

    def integrand(x):
        return envelope(x) * trig(frequency * x)

    piece_spec = spec.with_(abs_tol=spec.abs_tol / 4, truncation=None,
                            oscillation_period_hint=None)
    head = integrate(integrand, lower, first_zero, piece_spec) if first_zero > lower else \
        QuadratureResult(0.0, 0.0, 0, 0.0, 0.0)
    partial = []
    running = 0.0
    err_total = head.error_estimate
    panels = head.subdivisions_used
    start = first_zero
    best, best_err = None, math.inf
    cycle = 0
    while cycle < max_cycles:
        edges = start + half * np.arange(batch + 1)
        vals, errs, npan, _ = _adaptive(integrand, edges, piece_spec.abs_tol / batch,
                                        piece_spec.rel_tol, piece_spec.max_subdivisions)
        panels += npan
        err_total += float(np.sum(errs))
        for v in vals:
            running += v
            partial.append(running)
        start = edges[-1]
        cycle += batch
        window = partial[-min(len(partial), 40):]
        est, est_err = wynn_epsilon(window)
        if abs(vals[-1]) < 0.1 * spec.abs_tol and abs(vals[-2]) < 0.1 * spec.abs_tol:
            est, est_err = running, abs(vals[-1])
        if est_err < best_err:
            best, best_err = est, est_err
        tol = spec.tolerance(head.value + best)
        if best_err + err_total <= tol:
            break
    value = head.value + best
    error = best_err + err_total
    tol = spec.tolerance(value)
    if not error <= tol:
        raise QuadratureError(
            f"oscillatory integral did not converge: value={value:.12g}, "
            f"error={error:.3g}, tolerance={tol:.3g}", value=value, error_estimate=error)
    return QuadratureResult(value, error, panels, 0.0, tol)
