"""Command-line driver: ``simulate``, ``spectrum``, ``verify`` and ``compare``."""
from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import bare, dressed
from .config import ConfigError, RunConfig, load_config
from .errors import DomainError, OscBathError, QuadratureError, StabilityError
from .series import OccupationPoint, OccupationSeries
from .spectrum import SpectrumMethod, solve_spectrum
from .verify import format_result, run_criteria

log = logging.getLogger("oscbath")

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_QUADRATURE, EXIT_STABILITY = 0, 1, 2, 3, 4

_FLAG_KEYS = ("approach", "mode", "omega_bar", "g", "beta", "n0", "R", "c", "N", "t_start",
              "t_end", "steps", "output", "abs_tol", "rel_tol", "log_grid", "pole")


class _Failure(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value file; flags override its entries")
    p.add_argument("--approach", choices=("bare", "dressed"))
    p.add_argument("--mode", choices=("cavity", "continuum"))
    p.add_argument("--omega-bar", dest="omega_bar", type=float)
    p.add_argument("--g", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--n0", type=float, help="initial particle occupation")
    p.add_argument("--R", type=float, help="cavity radius")
    p.add_argument("--c", type=float, help="wave speed")
    p.add_argument("--N", type=int, help="number of bath modes")
    p.add_argument("--t-start", dest="t_start", type=float)
    p.add_argument("--t-end", dest="t_end", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--log-grid", dest="log_grid", action="store_const", const=True)
    p.add_argument("--pole", choices=("cavity", "principal"),
                   help="continuum dressed amplitudes: cavity limit (default) or principal value")
    p.add_argument("--abs-tol", dest="abs_tol", type=float)
    p.add_argument("--rel-tol", dest="rel_tol", type=float)
    p.add_argument("--output", help="output CSV path")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="oscbath",
                                 description="Occupation dynamics of an oscillator in an ohmic bath.")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="occupation number on a time grid, written as CSV")
    _add_run_flags(sim)

    spec = sub.add_parser("spectrum", help="normal-mode frequencies and particle weights")
    _add_run_flags(spec)
    spec.add_argument("--method", choices=[m.value for m in SpectrumMethod], default="finite")

    ver = sub.add_parser("verify", help="run the acceptance checks")
    ver.add_argument("--level", choices=("fast", "full"), default="fast")
    ver.add_argument("--inject-fault", action="store_true",
                     help="shrink all tolerances to zero (harness self-test)")

    cmp_ = sub.add_parser("compare", help="difference of two runs on a common grid")
    cmp_.add_argument("a", help="config file or CSV from 'simulate'")
    cmp_.add_argument("b", help="config file or CSV from 'simulate'")
    cmp_.add_argument("--output", help="CSV of per-time differences (default: stdout)")
    cmp_.add_argument("--max-diff", type=float,
                      help="exit 1 when the largest absolute difference exceeds this")
    return ap


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values = load_config(args.config) if getattr(args, "config", None) else {}
    for key in _FLAG_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    return RunConfig.from_mapping(values)


def _point(cfg: RunConfig, t: float, basis) -> OccupationPoint:
    p = cfg.params
    if cfg.mode == "cavity":
        if cfg.approach == "bare":
            return bare.occupation_bare_finite(basis, p, t)
        return dressed.occupation_dressed_finite(basis, p, t)
    if cfg.approach == "bare":
        return bare.occupation_bare_renormalized(p, t, cfg.quad)
    return dressed.occupation_dressed_continuum(p, t, cfg.quad, pole=cfg.pole)


def run_series(cfg: RunConfig) -> OccupationSeries:
    """Evaluate the configured occupation on the configured grid."""
    basis = solve_spectrum(cfg.cavity, cfg.params) if cfg.mode == "cavity" else None
    pts = []
    for t in cfg.times():
        try:
            pts.append(_point(cfg, float(t), basis))
        except QuadratureError as exc:
            raise QuadratureError(f"at t = {float(t)!r}: {exc}", value=exc.value,
                                  error_estimate=exc.error_estimate) from exc
    return OccupationSeries.from_points(pts)


def plot_script(csv_name: str, cfg: RunConfig) -> str:
    title = (f"{cfg.approach} / {cfg.mode}: omega_bar={cfg.params.omega_bar:g}, "
             f"g={cfg.params.g:g}, beta={cfg.params.beta:g}, n0={cfg.params.n0_init:g}")
    return f'''"""Plot the occupation curve stored in {csv_name}."""
import csv
import sys
from pathlib import Path

import matplotlib.pyplot as plt

path = Path(__file__).with_name({csv_name!r})
with open(path, newline="") as fh:
    rows = list(csv.DictReader(fh))
t = [float(r["t"]) for r in rows]
fig, ax = plt.subplots(figsize=(6, 4))
ax.plot(t, [float(r["n0"]) for r in rows], "k-", label="total")
for key, style in (("term_memory", "b--"), ("term_thermal", "r:"), ("term_vacuum", "g-.")):
    ax.plot(t, [float(r[key]) for r in rows], style, label=key[5:])
ax.set_xlabel("t")
ax.set_ylabel("occupation")
ax.set_title({title!r})
ax.legend()
fig.tight_layout()
fig.savefig(sys.argv[1] if len(sys.argv) > 1 else path.with_suffix(".png"))
'''


def cmd_simulate(cfg: RunConfig) -> int:
    series = run_series(cfg)
    out = Path(cfg.output_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        series.to_csv(fh)
    stem = out.with_suffix("")
    Path(f"{stem}.plot.py").write_text(plot_script(out.name, cfg))
    Path(f"{stem}.config").write_text(cfg.to_text())
    log.info("wrote %s (%d rows)", out, len(series))
    return EXIT_OK


def spectrum_csv(basis) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("r", "Omega_r", "t0_r"))
    for r, (om, t0) in enumerate(zip(basis.Omegas, basis.t0)):
        w.writerow((r, f"{om:.17g}", f"{t0:.17g}"))
    return buf.getvalue()


def cmd_spectrum(cfg: RunConfig, method: str, output: str | None) -> int:
    if cfg.mode != "cavity":
        raise _Failure(EXIT_CONFIG, "spectrum needs --mode cavity with --R and --N")
    basis = solve_spectrum(cfg.cavity, cfg.params, SpectrumMethod(method))
    text = spectrum_csv(basis)
    if output and output != "-":
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_verify(level: str, fault: bool) -> int:
    results = run_criteria(level, fault=fault)
    for r in results:
        print(format_result(r))
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} criteria passed")
    return EXIT_OK if passed == len(results) else EXIT_VERIFY


def _load_side(path: str) -> OccupationSeries:
    if path.endswith(".csv"):
        try:
            return OccupationSeries.from_csv(Path(path).read_text())
        except (OSError, ValueError) as exc:
            raise _Failure(EXIT_CONFIG, f"cannot read {path}: {exc}") from None
    return run_series(RunConfig.from_mapping(load_config(path)))


def compare_series(a: OccupationSeries, b: OccupationSeries) -> tuple[str, float, float]:
    if len(a) != len(b) or not np.array_equal(a.times, b.times):
        raise _Failure(EXIT_CONFIG, "time grids differ")
    diff = np.abs(a.total - b.total)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("t", "n0_a", "n0_b", "abs_diff"))
    for row in zip(a.times, a.total, b.total, diff):
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue(), float(diff.max()), float(diff.mean())


def cmd_compare(path_a: str, path_b: str, output: str | None, max_diff: float | None) -> int:
    text, mx, mean = compare_series(_load_side(path_a), _load_side(path_b))
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)
    print(f"max |diff| = {mx!r}, mean |diff| = {mean!r}", file=sys.stderr)
    if max_diff is not None and mx > max_diff:
        return EXIT_VERIFY
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "verify":
            return cmd_verify(args.level, args.inject_fault)
        if args.command == "compare":
            return cmd_compare(args.a, args.b, args.output, args.max_diff)
        cfg = config_from_args(args)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        return cmd_spectrum(cfg, args.method, args.output)
    except _Failure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ConfigError, DomainError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except QuadratureError as exc:
        print(f"quadrature failure: {exc}", file=sys.stderr)
        return EXIT_QUADRATURE
    except StabilityError as exc:
        print(f"unstable spectrum: {exc}", file=sys.stderr)
        return EXIT_STABILITY
    except OscBathError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
