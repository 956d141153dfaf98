"""Command-line front end.

Every subcommand prints one JSON object (``"schema": 1``) on stdout and may
write plot data as two-column CSV with ``--out``.  Exit codes: 0 success,
1 inconclusive, 2 usage, 3 invalid input.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dirac, fractalspec, measures, metric, oporacle, seqcore, traces, zeta
from .fractalspec import FractalSpec, GapSequence, SpecValidationError

SCHEMA = 1
EXIT_OK, EXIT_INCONCLUSIVE, EXIT_USAGE, EXIT_INVALID = 0, 1, 2, 3
COMMANDS = (
    "validate", "spectrum", "dim", "indices", "zeta", "trace",
    "measure", "distance", "minkowski", "check", "report",
)
KINDS = ("lacunary", "filled", "full")

log = logging.getLogger("fractaltrace")


class UsageError(Exception):
    pass


class Inconclusive(Exception):
    pass


# ---------------------------------------------------------------------------
# config


@dataclass
class RunConfig:
    command: str
    spec_path: str | None = None
    gaps_path: str | None = None
    kind: str = "full"
    level: int = 20
    exponents: list[float] = field(default_factory=list)
    procedures: list[str] = field(default_factory=lambda: [p.kind for p in traces.DEFAULT_PROCEDURES])
    tolerance: float = 1e-3
    head_discard: float = 0.5
    function: str | None = None
    points: list[tuple[float, float]] = field(default_factory=list)
    gauge: float | None = None
    seed: int = 0
    out: str | None = None
    cache: str | None = None
    budget: int = fractalspec.DEFAULT_BUDGET

    @property
    def policy(self) -> seqcore.WindowPolicy:
        return dataclasses.replace(
            seqcore.DEFAULT_POLICY, tolerance=self.tolerance, head_discard_fraction=self.head_discard
        )


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _positive_int(s: str) -> int:
    v = int(s)
    if v <= 0:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {s}")
    return v


def _positive_float(s: str) -> float:
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {s}")
    return v


def _pair(s: str) -> tuple[float, float]:
    try:
        x, y = (float(t) for t in s.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'x,y', got {s!r}") from None
    return x, y


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fractaltrace", description="Spectral triples, traces and dimensions of limit fractals.")
    p.add_argument("command", choices=COMMANDS)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--spec", dest="spec_path", help="fractal spec (JSON)")
    src.add_argument("--gaps", dest="gaps_path", help="gap lengths (CSV, one per line, non-increasing)")
    p.add_argument("--kind", choices=KINDS, default="full")
    p.add_argument("--level", type=_positive_int, default=20)
    p.add_argument("--exponent", "--alpha", dest="exponents", type=_positive_float, action="append", default=[])
    p.add_argument("--procedure", dest="procedures", action="append", choices=traces.PROCEDURE_KINDS[:3])
    p.add_argument("--tolerance", type=_positive_float, default=1e-3)
    p.add_argument("--head-discard", type=float, default=0.5)
    p.add_argument("--function", help="const[:c], linear[:m,c], indicator:a,b or a CSV of x,y samples")
    p.add_argument("--points", type=_pair, action="append", default=[])
    p.add_argument("--gauge", type=float, help="exponent d of the gauge t^d (default: box dimension)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write plot/table CSV here")
    p.add_argument("--cache", help="directory for spectrum cache files")
    p.add_argument("--budget", type=_positive_int, default=fractalspec.DEFAULT_BUDGET)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def parse_config(argv) -> RunConfig:
    ns = build_parser().parse_args(argv)
    if ns.verbose:
        logging.basicConfig(level=logging.INFO, stream=sys.stderr, format="%(message)s")
    if not 0 <= ns.head_discard < 1:
        raise UsageError("--head-discard must lie in [0, 1)")
    if ns.command != "check" and not (ns.spec_path or ns.gaps_path):
        raise UsageError(f"{ns.command} needs --spec or --gaps")
    if ns.gaps_path and ns.command in ("measure", "distance"):
        raise UsageError(f"{ns.command} needs --spec")
    kw = {k: v for k, v in vars(ns).items() if k != "verbose" and v is not None}
    if not kw.get("procedures"):
        kw.pop("procedures", None)
    return RunConfig(**kw)


# ---------------------------------------------------------------------------
# output helpers


def _clean(x):
    """Round floats to 12 significant digits; non-finite values become strings."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_clean(v) for v in x.tolist()]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(f"{x:.12g}")
    return x


def dumps(obj: dict) -> str:
    return json.dumps(_clean({"schema": SCHEMA, **obj}), sort_keys=True, indent=2)


def write_columns(path: str | Path, header: tuple[str, ...], *cols) -> None:
    with Path(path).open("w") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*cols):
            fh.write(",".join(v if isinstance(v, str) else f"{float(v):.15g}" for v in row) + "\n")


# ---------------------------------------------------------------------------
# inputs


def read_gaps(path: str | Path) -> GapSequence:
    """Leading gaps of an infinite string; the unlisted tail is extrapolated.

    With ``l_n ~ c n^{-1/d}`` the tail beyond ``N`` sums to about
    ``N l_N d / (1 - d)``, ``d`` being the box dimension of the listed gaps.
    """
    vals = []
    for i, line in enumerate(Path(path).read_text().splitlines(), 1):
        t = line.split(",")[0].strip()
        if not t or t.startswith("#"):
            continue
        try:
            vals.append(float(t))
        except ValueError:
            if not vals and i == 1:
                continue  # header
            raise SpecValidationError([f"line {i}: not a number: {t!r}"]) from None
    try:
        g = fractalspec.gaps_from_lengths(vals)
    except ValueError as exc:
        raise SpecValidationError([str(exc)]) from None
    try:
        d = fractalspec.box_dim_from_gaps(g)
    except ValueError:
        return g
    rem = g.total * float(g.lengths[-1]) * d / (1 - d) if 0 < d < 1 else 0.0
    return GapSequence(g.lengths, g.counts, rem, 0.0)


def parse_function(text: str) -> measures.TestFunction:
    name, _, args = text.partition(":")
    nums = [float(t) for t in args.split(",")] if args else []
    if name == "const":
        return measures.const(*nums[:1])
    if name == "linear":
        return measures.linear(*nums[:2])
    if name == "indicator":
        if len(nums) != 2:
            raise UsageError("indicator needs two endpoints: indicator:a,b")
        return measures.indicator(*nums)
    path = Path(text)
    if path.exists():
        xs, ys = np.loadtxt(path, delimiter=",", ndmin=2, comments="#", skiprows=_header_rows(path)).T
        return measures.sampled(xs, ys)
    raise UsageError(f"unknown function {text!r}")


def _header_rows(path: Path) -> int:
    first = path.read_text().splitlines()[0]
    try:
        [float(t) for t in first.split(",")]
        return 0
    except ValueError:
        return 1


class Context:
    """Lazily computed inputs shared by the subcommands of one run."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self._spec = None
        self._spectra: dict = {}

    @property
    def spec(self) -> FractalSpec | None:
        if self._spec is None and self.cfg.spec_path:
            p = Path(self.cfg.spec_path)
            if not p.exists():
                raise UsageError(f"no such file: {p}")
            self._spec = fractalspec.load_spec(p)
        return self._spec

    @property
    def gaps(self) -> GapSequence:
        if self.cfg.gaps_path:
            p = Path(self.cfg.gaps_path)
            if not p.exists():
                raise UsageError(f"no such file: {p}")
            return read_gaps(p)
        return fractalspec.gaps_of_spec(self.spec, self.cfg.level, self.cfg.budget)

    def spectrum(self, kind: str | None = None) -> dirac.Spectrum:
        kind = kind or self.cfg.kind
        if self.cfg.gaps_path:
            return dirac.spectrum_from_gaps(self.gaps, provenance=Path(self.cfg.gaps_path).name)
        if kind in self._spectra:
            return self._spectra[kind]
        spec, level = self.spec, self.cfg.level
        path = None
        if self.cfg.cache:
            d = Path(self.cfg.cache)
            d.mkdir(parents=True, exist_ok=True)
            path = d / f"{spec.digest()[:16]}-{kind}-{level}.csv"
            if path.exists():
                log.info("cache hit %s", path)
                s = dirac.read_spectrum(path)
                self._spectra[kind] = s
                return s
            log.info("cache miss %s", path)
        s = dirac.spectrum(spec, kind, level, self.cfg.budget)
        if path is not None:
            dirac.write_spectrum(s, path)
            s = dirac.read_spectrum(path)  # identical values on warm and cold runs
        self._spectra[kind] = s
        return s

    def step(self, kind: str | None = None) -> seqcore.StepFunction:
        return dirac.to_step_function(self.spectrum(kind))

    def exact_dimension(self) -> float | None:
        spec = self.spec
        if spec is None:
            return None
        if spec.is_self_similar:
            return zeta.selfsimilar_report(spec).d
        if spec.symmetric is not None and spec.period:
            p, lam = spec.symmetric
            return zeta.symmetric_dimension_and_delta(p, lam, self.cfg.policy, spec.period).d
        return None

    def dimension(self) -> float:
        d = self.exact_dimension()
        if d is not None:
            return d
        try:
            return zeta.abscissa(self.step(), tolerance=self.cfg.tolerance, policy=self.cfg.policy).estimate
        except ValueError as exc:
            raise Inconclusive(str(exc)) from None


# ---------------------------------------------------------------------------
# subcommands


def cmd_validate(ctx: Context) -> tuple[dict, int]:
    spec = ctx.spec
    if spec is None:
        g = ctx.gaps
        return {"valid": True, "gaps": g.total, "distinct": int(g.lengths.size)}, EXIT_OK
    leb = fractalspec.lebesgue_zero(spec, policy=ctx.cfg.policy)
    return {
        "valid": True,
        "digest": spec.digest(),
        "kind": spec.kind,
        "interval": list(spec.interval),
        "listed_levels": len(spec.levels),
        "period": spec.period,
        "depth": spec.depth,
        "lebesgue": {"verdict": leb.verdict, "product": leb.product, "exact": leb.exact},
    }, EXIT_OK


def cmd_spectrum(ctx: Context) -> tuple[dict, int]:
    s = ctx.spectrum()
    if ctx.cfg.out:
        dirac.write_spectrum(s, ctx.cfg.out)
    head = list(s.entries())[:10]
    return {
        "kind": s.kind,
        "level": s.level_cutoff,
        "distinct": int(s.values.size),
        "total_multiplicity": s.total_multiplicity,
        "complete_above": s.complete_above,
        "head": [{"value": v, "multiplicity": m} for v, m in head],
    }, EXIT_OK


def cmd_dim(ctx: Context) -> tuple[dict, int]:
    out: dict = {"kind": ctx.cfg.kind if ctx.spec is not None else "external"}
    code = EXIT_OK
    try:
        ab = zeta.abscissa(ctx.step(), tolerance=ctx.cfg.tolerance, policy=ctx.cfg.policy)
        out["d_abscissa"] = ab.estimate
        out["bracket"] = list(ab.bracket)
        out["inconclusive_steps"] = ab.inconclusive_steps
    except ValueError as exc:
        out["d_abscissa"] = None
        out["error"] = str(exc)
        code = EXIT_INCONCLUSIVE
    exact = ctx.exact_dimension()
    if exact is not None:
        out["d_exact"] = exact
    spec = ctx.spec
    if spec is None or fractalspec.lebesgue_zero(spec).verdict == "zero":
        out["d_box"] = fractalspec.box_dim_from_gaps(ctx.gaps, ctx.cfg.policy)
    return out, code


def cmd_indices(ctx: Context) -> tuple[dict, int]:
    mu = ctx.step()
    rep = seqcore.indices(mu, ctx.cfg.policy)
    # singular traceability concerns mu^s at the dimension (or a given exponent)
    s = ctx.cfg.exponents[0] if ctx.cfg.exponents else ctx.dimension()
    ecc = seqcore.eccentricity(seqcore.power(mu, s), policy=ctx.cfg.policy)
    out = {
        "d_lower": rep.d_lower,
        "d_upper": rep.d_upper,
        "delta_lower": rep.delta_lower,
        "delta_upper": rep.delta_upper,
        "traceability_interval": list(rep.traceability_interval),
        "ordered": rep.ordered(),
        "eccentricity": {"exponent": s, "verdict": ecc.verdict, "ratio_inf": ecc.ratio_inf, "witness_count": len(ecc.witness)},
    }
    spec = ctx.spec
    if spec is not None and spec.symmetric is not None:
        p, lam = spec.symmetric
        sym = zeta.symmetric_dimension_and_delta(p, lam, ctx.cfg.policy, spec.period)
        out["closed_form"] = {
            "d": sym.d, "delta_lower": sym.delta_lower, "delta_upper": sym.delta_upper, "note": sym.note,
        }
    return out, EXIT_INCONCLUSIVE if ecc.verdict == "inconclusive" else EXIT_OK


def cmd_zeta(ctx: Context) -> tuple[dict, int]:
    s = ctx.spectrum()
    alphas = ctx.cfg.exponents or [1.0]
    rows = []
    for a in alphas:
        r = zeta.zeta_partial(s, a, spec=ctx.spec)
        rows.append({"alpha": a, "partial": r.partial_sum, "tail_bound": r.tail_bound, "converged": r.converged})
    out: dict = {"kind": s.kind, "values": rows}
    code = EXIT_OK
    try:
        out["d_estimate"] = ctx.dimension()
    except Inconclusive as exc:
        out["d_estimate"] = None
        out["error"] = str(exc)
        code = EXIT_INCONCLUSIVE
    if ctx.cfg.out:
        d = out["d_estimate"] or 0.0
        grid = np.linspace(d + 0.02, d + 2.0, 100)
        vals = []
        for a in grid:
            r = zeta.zeta_partial(s, float(a), spec=ctx.spec)
            vals.append(r.partial_sum + (r.tail_bound or 0.0))
        write_columns(ctx.cfg.out, ("s", "zeta"), grid, vals)
    return out, code


def _procedures(cfg: RunConfig):
    return [traces.procedure(k) for k in cfg.procedures]


def cmd_trace(ctx: Context) -> tuple[dict, int]:
    cfg = ctx.cfg
    s = cfg.exponents[0] if cfg.exponents else ctx.dimension()
    reps = []
    if cfg.function:
        if ctx.spec is None:
            raise UsageError("--function needs --spec")
        f = parse_function(cfg.function)
        procs = _procedures(cfg)
        if len(procs) >= 2:
            _, reps = traces.measurability_spread(ctx.spec, cfg.kind, s, f, procs, cfg.level, cfg.policy, cfg.budget)
        else:
            reps = [traces.hb_functional(ctx.spec, cfg.kind, s, f, procs[0], cfg.level, cfg.policy, cfg.budget)]
    else:
        mu = ctx.step()
        reps = [traces.dixmier(mu, s, p, cfg.policy) for p in _procedures(cfg)]
    out = {
        "kind": ctx.spectrum().kind,
        "exponent": s,
        "function": cfg.function,
        "reports": [
            {
                "procedure": r.procedure, "value": r.value, "spread": r.spread,
                "scale_range": list(r.scale_range), "samples": r.samples, "warnings": list(r.warnings),
            }
            for r in reps
        ],
        "spread_across_procedures": traces.spread_of(reps),
    }
    if cfg.out:
        r = reps[0]
        write_columns(cfg.out, ("log_x", "ratio"), np.log(r.scales), r.ratios)
    return out, EXIT_OK


def cmd_measure(ctx: Context) -> tuple[dict, int]:
    cfg = ctx.cfg
    spec = ctx.spec
    alpha = cfg.exponents[0] if cfg.exponents else ctx.dimension()
    m = measures.homogeneous_measure(spec, alpha, cfg.level, cfg.budget)
    out: dict = {"alpha": alpha, "level": cfg.level, "cells": len(m), "max_diameter": m.max_diameter}
    if cfg.function:
        val, bound = measures.integrate(m, parse_function(cfg.function))
        out["integral"] = {"function": cfg.function, "value": val, "bound": bound}
    if cfg.out:
        sig = ["".join(map(str, m.sigma(i))) if m.level <= 40 else str(i) for i in range(len(m))]
        write_columns(cfg.out, ("sigma", "left", "right", "weight"), sig, m.left, m.right, m.weights)
    return out, EXIT_OK


def cmd_distance(ctx: Context) -> tuple[dict, int]:
    cfg = ctx.cfg
    g = metric.build_graph(ctx.spec, cfg.kind, cfg.level, cfg.budget)
    rows = [(x, y, metric.connes_distance(g, x, y)) for x, y in cfg.points]
    out: dict = {
        "kind": cfg.kind, "level": cfg.level, "vertices": int(g.vertices.size), "edges": int(g.weights.size),
        "distances": [{"x": x, "y": y, "distance": d} for x, y, d in rows],
    }
    if cfg.kind == "lacunary":
        a, b = ctx.spec.interval
        rep = metric.lacunary_gap_sum_bound(ctx.spec, a, b, cfg.level, cfg.budget)
        out["gap_sum"] = {"bound": rep.bound, "deficit": rep.deficit, "measure_estimate": rep.measure_estimate}
    if cfg.out:
        write_columns(cfg.out, ("x", "y", "distance"), *(zip(*rows) if rows else ((), (), ())))
    return out, EXIT_OK


def cmd_minkowski(ctx: Context) -> tuple[dict, int]:
    cfg = ctx.cfg
    gaps = ctx.gaps
    d = cfg.gauge if cfg.gauge is not None else fractalspec.box_dim_from_gaps(gaps, cfg.policy)
    gauge = fractalspec.GaugeFunction.power(d)
    rep = fractalspec.minkowski_content(gaps, gauge)
    out = {
        "gauge_exponent": d, "estimate": rep.estimate, "band": list(rep.band),
        "band_ratio": rep.band_ratio, "drift": rep.drift, "verdict": rep.verdict,
    }
    if 0 < d < 1 and rep.verdict == "measurable":
        out["dixmier_prediction"] = 2**d * (1 - d) * rep.estimate
    if cfg.out:
        write_columns(cfg.out, ("log_inv_eps", "content"), np.log(1 / rep.eps), rep.values)
    return out, EXIT_OK


def cmd_check(ctx: Context) -> tuple[dict, int]:
    res = oporacle.appendix_suite(ctx.cfg.seed)
    return res, EXIT_OK if res["all_pass"] else EXIT_INCONCLUSIVE


def cmd_report(ctx: Context) -> tuple[dict, int]:
    out: dict = {}
    code = EXIT_OK
    parts = [("validate", cmd_validate), ("dim", cmd_dim), ("indices", cmd_indices), ("zeta", cmd_zeta),
             ("trace", cmd_trace), ("minkowski", cmd_minkowski)]
    saved = ctx.cfg.out
    ctx.cfg.out = None
    try:
        for name, fn in parts:
            try:
                res, c = fn(ctx)
            except (Inconclusive, ValueError) as exc:
                if isinstance(exc, SpecValidationError):
                    raise
                res, c = {"error": str(exc)}, EXIT_INCONCLUSIVE
            out[name] = res
            code = max(code, c)
    finally:
        ctx.cfg.out = saved
    if saved:
        Path(saved).write_text(dumps(out) + "\n")
    return out, code


HANDLERS = {name: globals()[f"cmd_{name}"] for name in COMMANDS}


def run(cfg: RunConfig) -> tuple[dict, int]:
    ctx = Context(cfg)
    res, code = HANDLERS[cfg.command](ctx)
    return {"command": cfg.command, **res}, code


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
        res, code = run(cfg)
    except (UsageError, KeyError) as exc:
        print(dumps({"error": {"type": "usage", "message": str(exc).strip("'")}}))
        return EXIT_USAGE
    except SpecValidationError as exc:
        print(dumps({"error": {"type": "validation", "messages": list(exc.errors)}}))
        return EXIT_INVALID
    except Inconclusive as exc:
        print(dumps({"error": {"type": "inconclusive", "message": str(exc)}}))
        return EXIT_INCONCLUSIVE
    except (fractalspec.BudgetExceededError, fractalspec.DepthError, seqcore.InsufficientDataError,
            seqcore.TailUnknownError, ValueError) as exc:
        print(dumps({"error": {"type": type(exc).__name__, "message": str(exc)}}))
        return EXIT_INCONCLUSIVE
    print(dumps(res))
    return code


if __name__ == "__main__":
    sys.exit(main())
