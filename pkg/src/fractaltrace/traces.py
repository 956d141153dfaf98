"""Singular traces evaluated through concrete limit procedures.

A generalised limit cannot be built, so each trace value is read off a
ratio sequence ``R(x) = (S_b(x) - S_b(x0)) / (S_a(x) - S_a(x0))`` along a
chosen scale sequence.  Subtracting the value at the anchor ``x0`` removes
the bounded offsets that otherwise decay only like ``1/log x``; on
measurable inputs every procedure converges to the same number.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import seqcore
from .dirac import Spectrum, spectrum, to_step_function, triple_intervals
from .fractalspec import DEFAULT_BUDGET, FractalSpec, GapSequence, GaugeFunction, merge_multisets
from .seqcore import DEFAULT_POLICY, StepFunction, WindowPolicy

PROCEDURE_KINDS = ("cesaro_log", "geometric_subsequence", "level_sequence", "witness_sequence")


@dataclass(frozen=True)
class LimitProcedure:
    """Emulation of a generalised limit by a scale sequence and a reading rule.

    * ``cesaro_log``: mean of ``R`` over the upper half of the grid ``x0 * base^k``
    * ``geometric_subsequence``: ``R`` at the last point ``x0 * base^k`` in range
    * ``level_sequence``: ``R`` at the last block boundary of the reference
    * ``witness_sequence``: ``R`` at the last supplied scale in range
    """

    kind: str
    base: float = 2.0
    witness: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in PROCEDURE_KINDS:
            raise ValueError(f"unknown procedure {self.kind!r}; choose from {PROCEDURE_KINDS}")
        if not self.base > 1:
            raise ValueError("procedure base must exceed 1")
        if self.kind == "witness_sequence" and len(self.witness) < 2:
            raise ValueError("witness_sequence needs at least two scales")

    @property
    def name(self) -> str:
        return self.kind


DEFAULT_PROCEDURES = (
    LimitProcedure("cesaro_log"),
    LimitProcedure("geometric_subsequence"),
    LimitProcedure("level_sequence"),
)


def procedure(name: str, **kw) -> LimitProcedure:
    return LimitProcedure(name, **kw)


@dataclass(frozen=True)
class TraceReport:
    value: float
    procedure: str
    scale_range: tuple[float, float]
    spread: float  # max - min of R over the last decade of scales
    samples: int
    warnings: tuple[str, ...] = ()
    ratios: np.ndarray = field(default=None, repr=False, compare=False)
    scales: np.ndarray = field(default=None, repr=False, compare=False)


def _scales(
    proc: LimitProcedure, x0: float, X: float, boundaries: np.ndarray | None
) -> np.ndarray:
    if proc.kind in ("cesaro_log", "geometric_subsequence"):
        k = int(math.floor(math.log(X / x0) / math.log(proc.base) + 1e-12))
        xs = x0 * proc.base ** np.arange(1, k + 1)
    elif proc.kind == "level_sequence":
        b = np.asarray(boundaries if boundaries is not None else [], dtype=float)
        xs = b[(b > x0) & (b <= X)]
    else:
        w = np.asarray(proc.witness, dtype=float)
        xs = w[(w > x0) & (w <= X)]
    if xs.size < 2:
        raise ValueError(
            f"procedure {proc.kind} has fewer than 2 scales in ({x0:.4g}, {X:.4g}]; "
            "increase the level or lower head_discard_fraction"
        )
    return xs


def ratio_limit(
    S_target: Callable[[np.ndarray], np.ndarray],
    S_reference: Callable[[np.ndarray], np.ndarray],
    X: float,
    proc: LimitProcedure,
    policy: WindowPolicy = DEFAULT_POLICY,
    boundaries: np.ndarray | None = None,
    x0: float | None = None,
) -> TraceReport:
    """Read the anchored ratio ``R`` along ``proc`` on scales up to ``X``."""
    if X <= 1:
        raise ValueError("known range too short")
    if x0 is None:
        x0 = X**policy.head_discard_fraction
        if boundaries is not None and proc.kind != "witness_sequence":
            # anchor on a block boundary so period-aligned grids stay aligned
            b = np.asarray(boundaries, dtype=float)
            b = b[b >= x0]
            if b.size:
                x0 = float(b[0])
    if proc.kind == "witness_sequence":
        w = np.asarray(proc.witness, dtype=float)
        w = w[w <= X]
        if w.size >= 3:
            x0 = float(w[len(w) // 2 - 1]) if w[len(w) // 2 - 1] < X else x0
    xs = _scales(proc, x0, X, boundaries)
    a0 = float(S_reference(np.array([x0]))[0])
    b0 = float(S_target(np.array([x0]))[0])
    den = np.asarray(S_reference(xs)) - a0
    num = np.asarray(S_target(xs)) - b0
    R = num / den
    if proc.kind == "cesaro_log":
        value = float(np.mean(R[R.size // 2 :]))
    else:
        value = float(R[-1])
    last = xs >= xs[-1] / 10
    tail = R[last] if last.sum() >= 2 else R[-2:]
    return TraceReport(value, proc.kind, (float(x0), float(xs[-1])), float(tail.max() - tail.min()), int(xs.size), (), R, xs)


def _complete(mu: StepFunction) -> float:
    return mu.known_width


def dixmier(
    s: Spectrum | StepFunction,
    exponent: float,
    proc: LimitProcedure = DEFAULT_PROCEDURES[0],
    policy: WindowPolicy = DEFAULT_POLICY,
) -> TraceReport:
    """Dixmier trace of ``|D|^{-exponent}``: ``lim S(x)/log x`` read along ``proc``."""
    if not exponent > 0:
        raise ValueError("exponent must be positive")
    mu = s if isinstance(s, StepFunction) else to_step_function(s)
    mu = seqcore.power(mu, exponent)
    X = _complete(mu)
    return ratio_limit(
        lambda x: seqcore.integral_up(mu, x), np.log, X, proc, policy, boundaries=mu.block_ends
    )


def singular_trace_ratio(
    reference: StepFunction,
    target: StepFunction,
    proc: LimitProcedure = DEFAULT_PROCEDURES[0],
    policy: WindowPolicy = DEFAULT_POLICY,
    check_eccentric: bool = True,
) -> TraceReport:
    """Singular trace of ``target`` normalised by ``reference``: ``lim S_b/S_a``."""
    notes = []
    if check_eccentric:
        ecc = seqcore.eccentricity(reference, policy=policy)
        if ecc.verdict != "eccentric":
            msg = f"reference eccentricity verdict is {ecc.verdict}; the ratio may not define a trace"
            warnings.warn(msg, stacklevel=2)
            notes.append(msg)
    X = min(_complete(reference), _complete(target))
    rep = ratio_limit(
        lambda x: seqcore.integral_up(target, x),
        lambda x: seqcore.integral_up(reference, x),
        X, proc, policy, boundaries=reference.block_ends,
    )
    if notes:
        rep = TraceReport(
            rep.value, rep.procedure, rep.scale_range, rep.spread, rep.samples, tuple(notes), rep.ratios, rep.scales
        )
    return rep


# ---------------------------------------------------------------------------
# Hausdorff-Besicovitch functionals


def _stream(values: np.ndarray) -> StepFunction:
    # lengths from geometry differ in the last bits; merge them so that
    # blocks follow the construction levels
    v, c = merge_multisets([values], [np.ones(values.size, np.int64)])
    return StepFunction(v, c.astype(float), truncated=True)


@dataclass(frozen=True)
class _HBData:
    ref: StepFunction
    plus: StepFunction | None
    minus: StepFunction | None
    X: float


def _hb_data(spec, kind, s, f, level, budget) -> _HBData:
    u, v, length = triple_intervals(spec, kind, level, budget)
    w = length**s
    fu = np.asarray(f(u), dtype=float)
    fv = np.asarray(f(v), dtype=float)
    if fu.shape != u.shape or fv.shape != v.shape:
        raise ValueError("f must map an array of points to an array of the same shape")
    if not (np.all(np.isfinite(fu)) and np.all(np.isfinite(fv))):
        raise ValueError("f is undefined at some interval endpoint")
    # the largest |I|^s not enumerated bounds every missing entry
    theta = spectrum(spec, kind, level, budget).complete_above ** s
    ref_vals = np.concatenate((w, w))
    fvals = np.concatenate((w * fu, w * fv))
    ref = _stream(ref_vals[ref_vals > theta])
    X = ref.known_width
    parts = []
    for sign in (1.0, -1.0):
        g = sign * fvals
        top = float(max(g.max(), 0.0))
        keep = g > theta * top
        if top <= 0 or not keep.any():
            parts.append(None)
            continue
        st = _stream(g[keep])
        X = min(X, st.known_width)
        parts.append(st)
    return _HBData(ref, parts[0], parts[1], X)


def hb_functional(
    spec: FractalSpec,
    kind: str,
    s: float,
    f: Callable[[np.ndarray], np.ndarray],
    proc: LimitProcedure = DEFAULT_PROCEDURES[0],
    level: int = 16,
    policy: WindowPolicy = DEFAULT_POLICY,
    budget: int = DEFAULT_BUDGET,
    _data: _HBData | None = None,
) -> TraceReport:
    """Normalised trace ``tau(f |D|^{-s}) / tau(|D|^{-s})``.

    Each interval ``I = [u, v]`` contributes the pair ``|I|^s f(u)``,
    ``|I|^s f(v)``; the positive and negative parts of ``f`` are sorted
    separately and their ratios to the reference stream subtracted.
    """
    data = _data or _hb_data(spec, kind, s, f, level, budget)
    ref = data.ref

    def S_ref(x):
        return seqcore.integral_up(ref, x)

    value = 0.0
    spread = 0.0
    rng = (math.nan, math.nan)
    samples = 0
    ratios = xs = None
    for sign, part in ((1.0, data.plus), (-1.0, data.minus)):
        if part is None:
            continue
        rep = ratio_limit(
            lambda x, p=part: seqcore.integral_up(p, np.minimum(x, p.known_width)),
            S_ref, data.X, proc, policy, boundaries=ref.block_ends,
        )
        value += sign * rep.value
        spread += rep.spread
        rng, samples, xs = rep.scale_range, rep.samples, rep.scales
        ratios = sign * rep.ratios if ratios is None else ratios + sign * rep.ratios
    return TraceReport(value, proc.kind, rng, spread, samples, (), ratios, xs)


def measurability_spread(
    spec: FractalSpec,
    kind: str,
    s: float,
    f: Callable[[np.ndarray], np.ndarray],
    procedures: Sequence[LimitProcedure] = DEFAULT_PROCEDURES,
    level: int = 16,
    policy: WindowPolicy = DEFAULT_POLICY,
    budget: int = DEFAULT_BUDGET,
) -> tuple[float, list[TraceReport]]:
    """Largest pairwise difference of ``hb_functional`` across procedures."""
    if len(procedures) < 2:
        raise ValueError("need at least two procedures")
    data = _hb_data(spec, kind, s, f, level, budget)
    reps = [hb_functional(spec, kind, s, f, p, level, policy, budget, _data=data) for p in procedures]
    vals = [r.value for r in reps]
    return max(vals) - min(vals), reps


def spread_of(reports: Sequence[TraceReport]) -> float:
    vals = [r.value for r in reports]
    return max(vals) - min(vals)


# ---------------------------------------------------------------------------
# gauge traces


def gauge_trace(
    gaps: GapSequence,
    gauge: GaugeFunction,
    proc: LimitProcedure = DEFAULT_PROCEDURES[0],
    policy: WindowPolicy = DEFAULT_POLICY,
) -> TraceReport:
    """Trace of ``|D_l|^{-d}`` normalised by ``g(n)^d``, ``g(x) = h^{-1}(1/x)``."""
    d = gauge.d
    if not 0 < d < 1:
        raise ValueError(f"gauge exponent must lie in (0, 1), got {d}")
    vals = gaps.lengths**d
    cnt = 2.0 * gaps.counts
    target = seqcore.StepFunction(vals, cnt, truncated=gaps.remainder > 0)
    n = np.arange(1, int(target.known_width) + 1, dtype=float)
    gd = np.asarray(gauge.g(n), dtype=float) ** d
    if not np.all(np.isfinite(gd)) or np.any(np.diff(gd) >= 0):
        raise ValueError("gauge inversion did not produce a decreasing sequence")
    ref = seqcore.StepFunction(gd, np.ones_like(gd), truncated=True)
    X = min(target.known_width, ref.known_width)
    return ratio_limit(
        lambda x: seqcore.integral_up(target, x),
        lambda x: seqcore.integral_up(ref, x),
        X, proc, policy, boundaries=target.block_ends,
    )


# ---------------------------------------------------------------------------
# halving ratio


@dataclass(frozen=True)
class HalvingReport:
    ratio: float
    band: tuple[float, float]
    stable: bool
    implied_d: float | None


def halving_ratio(
    s: Spectrum | StepFunction, policy: WindowPolicy = DEFAULT_POLICY, tolerance: float = 0.05
) -> HalvingReport:
    """Estimate ``lim mu_n / mu_{2n}`` on the tail of the log-profile.

    Stable when the relative spread of the ratio over the tail is below
    ``tolerance``; the implied dimension is then ``log 2 / log(ratio)``.
    """
    mu = s if isinstance(s, StepFunction) else to_step_function(s)
    tk, fk = seqcore.profile_knots(mu)
    t_last = float(tk[-1]) - math.log(2.0)
    t0 = float(tk[0]) + policy.head_discard_fraction * (float(tk[-1]) - float(tk[0]))
    if t_last <= t0:
        raise ValueError("spectrum too short: need data past twice the head cut")
    ts = np.linspace(t0, t_last, 512)
    r = np.exp(np.interp(ts + math.log(2.0), tk, fk) - np.interp(ts, tk, fk))
    med = float(np.median(r))
    lo, hi = float(r.min()), float(r.max())
    stable = (hi - lo) / med < tolerance
    implied = math.log(2.0) / math.log(med) if stable and med > 1 else None
    return HalvingReport(med, (lo, hi), stable, implied)
