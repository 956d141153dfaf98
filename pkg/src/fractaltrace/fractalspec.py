"""Limit fractals in the line: specification, validation and geometry.

A fractal is given by an interval ``[a, b]`` and, for every level ``n >= 1``,
a family of contracting similarities of ``[a, b]``.  Level ``n`` cells are
``w_sigma([a, b])`` with ``w_sigma = w_{1,s1} o ... o w_{n,sn}``.  Infinite
level sequences are described by a periodic tail: the last ``period`` levels
of the list repeat forever.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .seqcore import DEFAULT_POLICY, WindowPolicy

DEFAULT_BUDGET = 1 << 22
_REL_TOL = 1e-12


class SpecValidationError(ValueError):
    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class BudgetExceededError(RuntimeError):
    def __init__(self, required: int, budget: int):
        self.required = required
        self.budget = budget
        super().__init__(f"enumeration needs {required} items, budget is {budget}")


class DepthError(ValueError):
    pass


@dataclass(frozen=True)
class Similarity:
    """``x -> offset + lam (x - a)`` (orientation ``+``) or ``offset + lam (b - x)``."""

    lam: float
    offset: float
    orientation: str = "+"

    def __post_init__(self):
        if self.orientation not in ("+", "-"):
            raise ValueError(f"orientation must be '+' or '-', got {self.orientation!r}")

    def affine(self, a: float, b: float) -> tuple[float, float]:
        """Coefficients ``(c, s)`` with ``w(x) = c + s x``."""
        if self.orientation == "+":
            return self.offset - self.lam * a, self.lam
        return self.offset + self.lam * b, -self.lam

    def image(self, a: float, b: float) -> tuple[float, float]:
        return self.offset, self.offset + self.lam * (b - a)


@dataclass(frozen=True)
class FractalSpec:
    interval: tuple[float, float]
    levels: tuple[tuple[Similarity, ...], ...]
    period: int | None = None
    kind: str = "explicit_levels"
    symmetric: tuple[tuple[int, ...], tuple[float, ...]] | None = field(default=None, compare=False)

    @property
    def a(self) -> float:
        return self.interval[0]

    @property
    def b(self) -> float:
        return self.interval[1]

    @property
    def length(self) -> float:
        return self.interval[1] - self.interval[0]

    @property
    def depth(self) -> float:
        """Number of levels available (``inf`` with a periodic tail)."""
        return math.inf if self.period else len(self.levels)

    @property
    def is_self_similar(self) -> bool:
        return self.period == 1 and len(self.levels) == 1

    def level_index(self, n: int) -> int:
        if n < 1:
            raise ValueError("levels start at 1")
        L = len(self.levels)
        if n <= L:
            return n - 1
        if not self.period:
            raise DepthError(f"level {n} requested but the spec defines only {L} levels")
        head = L - self.period
        return head + (n - 1 - head) % self.period

    def maps(self, n: int) -> tuple[Similarity, ...]:
        return self.levels[self.level_index(n)]

    def ratios(self, n: int) -> np.ndarray:
        return np.array([w.lam for w in self.maps(n)])

    def count(self, n: int) -> int:
        return len(self.maps(n))

    def generator_gaps(self, n: int) -> np.ndarray:
        """Lengths of the gaps between consecutive level-``n`` images of ``[a, b]``."""
        imgs = sorted(w.image(self.a, self.b) for w in self.maps(n))
        return np.array([imgs[i + 1][0] - imgs[i][1] for i in range(len(imgs) - 1)])

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(spec_to_dict(self), sort_keys=True).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class Cell:
    sigma: tuple[int, ...]
    interval: tuple[float, float]
    lambda_sigma: float


@dataclass(frozen=True)
class Lacuna:
    interval: tuple[float, float]
    birth_level: int

    @property
    def length(self) -> float:
        return self.interval[1] - self.interval[0]


# ---------------------------------------------------------------------------
# construction helpers


def self_similar(maps: Sequence[Similarity], interval=(0.0, 1.0)) -> FractalSpec:
    return FractalSpec(tuple(map(float, interval)), (tuple(maps),), period=1, kind="self_similar")


def cantor(interval=(0.0, 1.0)) -> FractalSpec:
    a, b = map(float, interval)
    L = b - a
    return self_similar([Similarity(1 / 3, a), Similarity(1 / 3, a + 2 * L / 3)], (a, b))


def symmetric_maps(p: int, lam: float, a: float, b: float) -> tuple[Similarity, ...]:
    """``p`` equally spaced copies of ``[a, b]`` scaled by ``lam``, touching both ends."""
    L = b - a
    gap = L * (1.0 - p * lam) / (p - 1)
    step = lam * L + gap
    return tuple(Similarity(lam, a + i * step) for i in range(p - 1)) + (
        Similarity(lam, b - lam * L),
    )


def symmetric(
    p: Sequence[int] | int,
    lam: Sequence[float] | float,
    interval=(0.0, 1.0),
    period: int | None = -1,
) -> FractalSpec:
    """Symmetric fractal from the sequences ``p_n`` and ``lambda_n``.

    ``period=-1`` repeats the whole list; ``None`` makes the spec finite.
    """
    ps = (p,) if np.isscalar(p) else tuple(p)
    ls = (lam,) if np.isscalar(lam) else tuple(lam)
    if len(ps) == 1 and len(ls) > 1:
        ps = ps * len(ls)
    if len(ls) == 1 and len(ps) > 1:
        ls = ls * len(ps)
    errors = _check_symmetric(ps, ls)
    if errors:
        raise SpecValidationError(errors)
    ps = tuple(int(x) for x in ps)
    ls = tuple(float(x) for x in ls)
    a, b = map(float, interval)
    levels = tuple(symmetric_maps(pk, lk, a, b) for pk, lk in zip(ps, ls))
    if period == -1:
        period = len(levels)
    kind = "self_similar" if period == 1 and len(levels) == 1 else "symmetric"
    return FractalSpec((a, b), levels, period=period, kind=kind, symmetric=(ps, ls))


def _check_symmetric(ps, ls) -> list[str]:
    errors = []
    if len(ps) != len(ls):
        errors.append(f"symmetric: p has {len(ps)} entries but lambda has {len(ls)}")
        return errors
    if not ps:
        errors.append("symmetric: empty sequences")
    for n, (pk, lk) in enumerate(zip(ps, ls), start=1):
        if int(pk) != pk or pk < 2:
            errors.append(f"level {n}: p must be an integer >= 2, got {pk}")
        elif not 0 < lk < 1:
            errors.append(f"level {n}: lambda must lie in (0, 1), got {lk}")
        elif not pk * lk < 1:
            errors.append(f"level {n}: p*lambda = {pk * lk:g} must be < 1")
    return errors


# ---------------------------------------------------------------------------
# validation


def validate(spec: FractalSpec) -> FractalSpec:
    """Check containment, disjointness and endpoint coverage at every level.

    With a periodic tail the listed levels already contain one full period,
    so checking the list covers the infinite sequence.  Raises
    :class:`SpecValidationError` carrying all violations.
    """
    errors = []
    a, b = spec.interval
    if not (math.isfinite(a) and math.isfinite(b) and a < b):
        raise SpecValidationError([f"interval must satisfy a < b, got [{a}, {b}]"])
    if not spec.levels:
        errors.append("no levels given")
    if spec.period is not None and not 1 <= spec.period <= len(spec.levels):
        errors.append(f"tail period {spec.period} outside 1..{len(spec.levels)}")
    tol = _REL_TOL * (b - a)
    for n, maps in enumerate(spec.levels, start=1):
        if not maps:
            errors.append(f"level {n}: no maps")
            continue
        if len(maps) < 2:
            errors.append(f"level {n}: at least two maps are needed to leave a gap")
        imgs = []
        for i, w in enumerate(maps, start=1):
            if not 0 < w.lam < 1:
                errors.append(f"level {n} map {i}: ratio {w.lam} not in (0, 1)")
                continue
            lo, hi = w.image(a, b)
            if lo < a - tol or hi > b + tol:
                errors.append(f"level {n} map {i}: image [{lo:.15g}, {hi:.15g}] leaves [a, b]")
            imgs.append((lo, hi, i))
        imgs.sort()
        for (lo1, hi1, i), (lo2, hi2, j) in zip(imgs, imgs[1:]):
            if lo2 <= hi1 + tol:
                errors.append(f"level {n}: images of maps {i} and {j} intersect (condition ii)")
        if imgs:
            ends = set()
            for w in maps:
                c, s = w.affine(a, b)
                ends.update((c + s * a, c + s * b))
            if not any(abs(e - a) <= tol for e in ends):
                errors.append(f"level {n}: left endpoint a is not an image of an endpoint (condition iii)")
            if not any(abs(e - b) <= tol for e in ends):
                errors.append(f"level {n}: right endpoint b is not an image of an endpoint (condition iii)")
    if spec.symmetric is not None:
        errors.extend(_check_symmetric(*spec.symmetric))
    if errors:
        raise SpecValidationError(errors)
    return spec


# ---------------------------------------------------------------------------
# JSON I/O


def _maps_from_json(items) -> tuple[Similarity, ...]:
    out = []
    for m in items:
        if isinstance(m, dict):
            out.append(Similarity(float(m["lambda"]), float(m["offset"]), m.get("orientation", "+")))
        else:
            out.append(Similarity(float(m[0]), float(m[1]), m[2] if len(m) > 2 else "+"))
    return tuple(out)


def spec_from_dict(d: dict) -> FractalSpec:
    """Build a spec from its JSON form; raises SpecValidationError on bad input."""
    try:
        a, b = (float(x) for x in d.get("interval", (0.0, 1.0)))
        gen = d["generator"]
        kind = gen["kind"]
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecValidationError([f"malformed spec: {exc!r}"]) from None
    tail = d.get("tail", {})
    period = -1 if tail == {} else (None if tail is None else tail.get("period"))
    try:
        if kind == "symmetric":
            spec = symmetric(gen["p"], gen["lambda"], (a, b), period=period)
        elif kind == "self_similar":
            spec = self_similar(_maps_from_json(gen["maps"]), (a, b))
        elif kind == "explicit_levels":
            levels = tuple(_maps_from_json(lv) for lv in gen["levels"])
            if period == -1:
                period = len(levels)
            spec = FractalSpec((a, b), levels, period=period, kind="explicit_levels")
        else:
            raise SpecValidationError([f"unknown generator kind {kind!r}"])
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SpecValidationError):
            raise
        raise SpecValidationError([f"malformed generator: {exc!r}"]) from None
    return validate(spec)


def load_spec(path: str | Path) -> FractalSpec:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SpecValidationError([f"invalid JSON: {exc}"]) from None
    return spec_from_dict(data)


def spec_to_dict(spec: FractalSpec) -> dict:
    out: dict = {"interval": list(spec.interval)}
    if spec.symmetric is not None:
        p, lam = spec.symmetric
        out["generator"] = {"kind": "symmetric", "p": list(p), "lambda": list(lam)}
    else:
        def mj(w):
            return {"lambda": w.lam, "offset": w.offset, "orientation": w.orientation}

        if spec.is_self_similar:
            out["generator"] = {"kind": "self_similar", "maps": [mj(w) for w in spec.levels[0]]}
        else:
            out["generator"] = {
                "kind": "explicit_levels",
                "levels": [[mj(w) for w in lv] for lv in spec.levels],
            }
    out["tail"] = None if spec.period is None else {"period": spec.period}
    return out


# ---------------------------------------------------------------------------
# cells and lacunae


def cell_count(spec: FractalSpec, n: int) -> int:
    return math.prod(spec.count(k) for k in range(1, n + 1))


def cell_arrays(spec: FractalSpec, n: int, budget: int = DEFAULT_BUDGET):
    """Affine coefficients ``(c, s)`` of all ``w_sigma`` with ``|sigma| = n``.

    Rows are in lexicographic ``sigma`` order (last level varies fastest).
    """
    need = cell_count(spec, n)
    if need > budget:
        raise BudgetExceededError(need, budget)
    a, b = spec.interval
    c = np.zeros(1)
    s = np.ones(1)
    for k in range(1, n + 1):
        coef = np.array([w.affine(a, b) for w in spec.maps(k)])
        c = (c[:, None] + s[:, None] * coef[None, :, 0]).ravel()
        s = (s[:, None] * coef[None, :, 1]).ravel()
    return c, s


def cell_bounds(spec: FractalSpec, n: int, budget: int = DEFAULT_BUDGET):
    """Endpoints and lengths of the level-``n`` cells, sorted by left endpoint.

    Lengths are ``(b - a) lambda_sigma`` computed as products, not as
    differences of nearby endpoints.
    """
    a, b = spec.interval
    c, s = cell_arrays(spec, n, budget)
    u, v = c + s * a, c + s * b
    lo, hi = np.minimum(u, v), np.maximum(u, v)
    order = np.argsort(lo, kind="stable")
    return lo[order], hi[order], (np.abs(s) * (b - a))[order]


def cells_at_level(spec: FractalSpec, n: int, budget: int = DEFAULT_BUDGET) -> list[Cell]:
    if n < 0:
        raise ValueError("level must be nonnegative")
    a, b = spec.interval
    if n == 0:
        return [Cell((), (a, b), 1.0)]
    c, s = cell_arrays(spec, n, budget)
    radices = [spec.count(k) for k in range(1, n + 1)]
    lo_all = np.minimum(c + s * a, c + s * b)
    hi_all = np.maximum(c + s * a, c + s * b)
    order = np.argsort(lo_all, kind="stable")
    sig = np.array(np.unravel_index(order, radices)).T if n else np.zeros((len(order), 0), int)
    lam = np.abs(s)
    return [
        Cell(tuple(int(x) + 1 for x in sig[r]), (float(lo_all[i]), float(hi_all[i])), float(lam[i]))
        for r, i in enumerate(order)
    ]


def lacuna_arrays(spec: FractalSpec, n: int, budget: int = DEFAULT_BUDGET):
    """Endpoints, birth levels and lengths of all lacunae born at levels ``1..n``."""
    total = sum(cell_count(spec, k - 1) * (spec.count(k) - 1) for k in range(1, n + 1))
    if total > budget:
        raise BudgetExceededError(total, budget)
    a, b = spec.interval
    los, his, births, lens = [], [], [], []
    for k in range(1, n + 1):
        imgs = sorted(w.image(a, b) for w in spec.maps(k))
        g_lo = np.array([imgs[i][1] for i in range(len(imgs) - 1)])
        g_hi = np.array([imgs[i + 1][0] for i in range(len(imgs) - 1)])
        c, s = cell_arrays(spec, k - 1, budget)
        u = (c[:, None] + s[:, None] * g_lo[None, :]).ravel()
        v = (c[:, None] + s[:, None] * g_hi[None, :]).ravel()
        los.append(np.minimum(u, v))
        his.append(np.maximum(u, v))
        births.append(np.full(u.size, k))
        lens.append((np.abs(s)[:, None] * (g_hi - g_lo)[None, :]).ravel())
    if not los:
        return np.empty(0), np.empty(0), np.empty(0, int), np.empty(0)
    return tuple(np.concatenate(x) for x in (los, his, births, lens))


def lacunae_up_to_level(spec: FractalSpec, n: int, budget: int = DEFAULT_BUDGET) -> list[Lacuna]:
    lo, hi, birth, length = lacuna_arrays(spec, n, budget)
    order = np.lexsort((lo, -length))
    return [Lacuna((float(lo[i]), float(hi[i])), int(birth[i])) for i in order]


# ---------------------------------------------------------------------------
# Lebesgue measure


@dataclass(frozen=True)
class LebesgueReport:
    verdict: str  # "zero" | "positive" | "inconclusive"
    product: float  # estimate of prod_n sum_i lambda_{n,i}
    levels_used: int
    exact: bool

    @property
    def measure_fraction(self) -> float:
        return self.product


def _short_tail_verdict(u: np.ndarray, prod: float, N: int, policy: WindowPolicy) -> LebesgueReport:
    # too few dyadic blocks: fit u_n ~ n^{-beta} on the tail instead.
    # beta <= 1 diverges; beta well above 1 converges; in between is undecided
    n0 = int(math.ceil(policy.head_discard_fraction * N))
    n = np.arange(n0 + 1, N + 1, dtype=float)
    tail = u[n0:]
    if n.size < 4 or np.any(tail <= 0):
        return LebesgueReport("inconclusive", prod, N, False)
    beta = -float(np.polyfit(np.log(n), np.log(tail), 1)[0])
    if beta <= 1.0:
        return LebesgueReport("zero", prod, N, False)
    if beta < 2.0:
        return LebesgueReport("inconclusive", prod, N, False)
    rest = float(tail[-1]) * N / (beta - 1.0)
    return LebesgueReport("positive", prod * math.exp(-rest), N, False)


def lebesgue_zero(
    spec: FractalSpec,
    max_level: int = 64,
    policy: WindowPolicy = DEFAULT_POLICY,
) -> LebesgueReport:
    """Decide whether ``F`` is Lebesgue-null via ``prod_n sum_i lambda_{n,i}``.

    Periodic tails are decided exactly from the product over one period.
    Otherwise the per-level defects ``-log sum_i lambda_{n,i}`` are summed in
    dyadic blocks of levels; geometric decay of the block sums means a
    convergent product (positive measure), no decay means a null set.
    """
    sums = np.array([spec.ratios(k).sum() for k in range(1, len(spec.levels) + 1)])
    with np.errstate(divide="ignore"):
        logs = np.log(sums)
    if spec.period:
        head = len(spec.levels) - spec.period
        head_log = float(logs[:head].sum())
        per = float(logs[head:].sum())
        if per < -1e-15:
            return LebesgueReport("zero", 0.0, len(spec.levels), True)
        return LebesgueReport("positive", math.exp(head_log), len(spec.levels), True)
    N = min(len(logs), max_level)
    u = -logs[:N]
    prod = math.exp(-float(u.sum()))
    if prod == 0.0:
        return LebesgueReport("zero", 0.0, N, False)
    j_hi = int(math.floor(math.log2(N + 1))) - 1
    j_lo = int(math.ceil(policy.head_discard_fraction * j_hi))
    if j_hi - j_lo + 1 < 3:
        return _short_tail_verdict(u, prod, N, policy)
    js = np.arange(j_lo, j_hi + 1)
    # levels n in [2^j, 2^{j+1}) are entries n-1 of u
    blocks = np.array([u[2**j - 1 : 2 ** (j + 1) - 1].sum() for j in js])
    if np.any(blocks <= 0):
        return LebesgueReport("positive", prod, N, False)
    y = np.log(blocks)
    slope = float(np.polyfit(js.astype(float), y, 1)[0])
    # defects ~ n^{-beta} give block sums ~ 2^{-j (beta - 1)}; harmonic defects
    # leave a finite-size drift of a few percent per block, so demand more
    if -0.1 <= slope < -0.05:
        return LebesgueReport("inconclusive", prod, N, False)
    if slope < -0.1 and y[-1] < y[0]:
        rho = math.exp(max(slope, -700.0))
        tail = float(blocks[-1]) * rho / (1 - rho) if rho < 1 else math.inf
        return LebesgueReport("positive", prod * math.exp(-tail), N, False)
    return LebesgueReport("zero", prod, N, False)


def fractal_measure(spec: FractalSpec, **kw) -> float:
    """Lebesgue measure ``|F|`` estimate (exact for periodic tails)."""
    rep = lebesgue_zero(spec, **kw)
    return 0.0 if rep.verdict == "zero" else spec.length * rep.product


# ---------------------------------------------------------------------------
# gap sequences, box dimension, tube volume


@dataclass(frozen=True)
class GapSequence:
    """Non-increasing gap lengths grouped as distinct ``lengths`` with ``counts``.

    ``remainder`` is the total length of gaps not enumerated (all shorter than
    the last listed one); ``measure`` is the Lebesgue measure of the set.
    """

    lengths: np.ndarray
    counts: np.ndarray
    remainder: float = 0.0
    measure: float = 0.0

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def gaps_from_lengths(lengths, remainder: float = 0.0, measure: float = 0.0) -> GapSequence:
    arr = np.asarray(lengths, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("need a nonempty list of gap lengths")
    if not np.all(np.isfinite(arr) & (arr > 0)):
        raise ValueError("gap lengths must be positive and finite")
    if np.any(np.diff(arr) > 0):
        raise ValueError("gap lengths must be non-increasing")
    starts = np.concatenate(([True], arr[1:] != arr[:-1]))
    idx = np.flatnonzero(starts)
    counts = np.diff(np.append(idx, arr.size))
    return GapSequence(arr[idx], counts.astype(np.int64), remainder, measure)


def max_ratio_product(spec: FractalSpec, n: int) -> float:
    return math.prod(float(spec.ratios(k).max()) for k in range(1, n + 1))


def max_gap_after(spec: FractalSpec, level: int) -> float:
    """Largest lacuna born after ``level`` (0 if the spec ends there).

    One period past ``level`` suffices: later lacunae are scaled copies.
    """
    if spec.depth <= level:
        return 0.0
    last = level + (spec.period if spec.period else int(spec.depth) - level)
    best = 0.0
    for k in range(level + 1, last + 1):
        best = max(best, max_ratio_product(spec, k - 1) * float(spec.generator_gaps(k).max()))
    return best


def gaps_of_spec(spec: FractalSpec, level: int, budget: int = DEFAULT_BUDGET) -> GapSequence:
    """Lacuna lengths through ``level`` with the exact unlisted remainder.

    Lengths come from the ratio multisets, so no geometry is enumerated and
    deep levels stay cheap when few distinct ratios occur.  With unequal
    ratios a deeper lacuna can outlast a listed one; lengths not above the
    largest unborn lacuna are therefore moved into the remainder, so that the
    listed part is the true head of the gap sequence.
    """
    vals, cnts = [], []
    for k in range(1, level + 1):
        v, c = gap_multiset(spec, k, budget)
        vals.append(v)
        cnts.append(c)
    v, c = merge_multisets(vals, cnts)
    keep = v > max_gap_after(spec, level) * (1 + 1e-12)
    v, c = v[keep], c[keep]
    if v.size == 0:
        raise ValueError(f"no lacuna is complete at level {level}; raise the level")
    meas = fractal_measure(spec)
    rem = max(spec.length - meas - float((v * c).sum()), 0.0)
    return GapSequence(v, c, rem, meas)


def merge_multisets(values: Sequence[np.ndarray], counts: Sequence[np.ndarray]):
    """Union of ``(value, count)`` multisets, sorted decreasingly.

    Values within ``1e-12`` relative of each other are treated as equal; the
    products behind them are the same numbers rounded in different orders.
    """
    if not values:
        return np.empty(0), np.empty(0, np.int64)
    v = np.concatenate(values)
    c = np.concatenate(counts).astype(np.int64)
    order = np.argsort(-v, kind="stable")
    v, c = v[order], c[order]
    if v.size == 0:
        return v, c
    new = np.concatenate(([True], np.abs(np.diff(v)) > _REL_TOL * np.abs(v[1:])))
    idx = np.flatnonzero(new)
    return v[idx], np.add.reduceat(c, idx)


def _product(v1, c1, v2, c2, budget: int):
    if v1.size * v2.size > budget:
        raise BudgetExceededError(v1.size * v2.size, budget)
    if float(c1.sum()) * float(c2.sum()) > 2.0**62:
        raise BudgetExceededError(int(float(c1.sum()) * float(c2.sum())), 2**62)
    return merge_multisets([np.outer(v1, v2).ravel()], [np.outer(c1, c2).ravel()])


def ratio_multiset(spec: FractalSpec, n: int, budget: int = DEFAULT_BUDGET):
    """Distinct values of ``lambda_sigma`` over ``|sigma| = n`` with counts."""
    v = np.ones(1)
    c = np.ones(1, np.int64)
    for k in range(1, n + 1):
        rv, rc = merge_multisets([spec.ratios(k)], [np.ones(spec.count(k), np.int64)])
        v, c = _product(v, c, rv, rc, budget)
    return v, c


def gap_multiset(spec: FractalSpec, k: int, budget: int = DEFAULT_BUDGET):
    """Lengths of the lacunae born at level ``k``, with counts."""
    v, c = ratio_multiset(spec, k - 1, budget)
    gv, gc = merge_multisets([spec.generator_gaps(k)], [np.ones(spec.count(k) - 1, np.int64)])
    return _product(v, c, gv, gc, budget)


def box_dim_from_gaps(gaps, policy: WindowPolicy = DEFAULT_POLICY) -> float:
    """Upper box dimension from the gap lengths, ``limsup log n / |log l_n|``.

    With ``x = |log l|`` and ``y = log n`` read at the end of each group of
    equal lengths, the slope of ``y`` against ``x`` is fitted by least squares
    on windows that start at an anchor past the head discard and reach at
    least halfway to the last gap; the estimate is the largest such slope.
    Anchoring removes the additive offsets that make the raw ratio converge
    only logarithmically, and the fit averages out log-periodic ripples in
    the counts that a two-point ratio would pick up.
    """
    g = gaps if isinstance(gaps, GapSequence) else gaps_from_lengths(gaps)
    if g.lengths.size < 4:
        raise ValueError(
            f"need at least 4 distinct gap lengths decreasing to 0, got {g.lengths.size}"
        )
    y_all = np.log(np.cumsum(g.counts).astype(float))
    x_all = -np.log(g.lengths)
    span = x_all[-1] - x_all[0]
    i0 = int(math.floor(policy.head_discard_fraction * (len(x_all) - 1)))
    x = x_all[i0:] - x_all[i0]
    y = y_all[i0:] - y_all[i0]
    ok = (x >= policy.min_h_fraction * span) & (x >= 0.5 * x[-1])
    if ok.sum() < 2:
        raise ValueError("too few gap groups beyond the anchor; supply more gaps")
    n = np.arange(1, x.size + 1, dtype=float)
    sx, sy = np.cumsum(x), np.cumsum(y)
    sxx, sxy = np.cumsum(x * x), np.cumsum(x * y)
    den = n * sxx - sx * sx
    with np.errstate(divide="ignore", invalid="ignore"):
        slope = (n * sxy - sx * sy) / den
    return float(slope[ok & (den > 0)].max())


def box_dim_raw(gaps) -> float:
    """Plain ``max log n / |log l_n|`` over the tail half, for comparison."""
    g = gaps if isinstance(gaps, GapSequence) else gaps_from_lengths(gaps)
    N = np.cumsum(g.counts).astype(float)
    r = np.log(N) / np.abs(np.log(g.lengths))
    return float(r[len(r) // 2 :].max())


def tube_volume(gaps: GapSequence, eps) -> np.ndarray | float:
    """``vol S_eps(F) = 2 eps + |F| + sum_n min(l_n, 2 eps)``.

    Unlisted gaps are counted through ``gaps.remainder``, exact as long as
    ``2 eps`` exceeds every unlisted gap.
    """
    e = np.asarray(eps, dtype=float)
    if np.any(e <= 0):
        raise ValueError("eps must be positive")
    L = g_len = gaps.lengths
    w = gaps.counts.astype(float)
    # lengths are decreasing: gaps longer than 2 eps contribute 2 eps each
    k = np.searchsorted(-L, -2 * e, side="left")  # number of gaps with l > 2 eps
    cw = np.concatenate(([0.0], np.cumsum(w)))
    cl = np.concatenate(([0.0], np.cumsum(w * g_len)))
    short = cl[-1] - cl[k]
    out = 2 * e + gaps.measure + 2 * e * cw[k] + short + gaps.remainder
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# gauges and Minkowski content


@dataclass(frozen=True)
class GaugeFunction:
    """Gauge ``h`` on ``(0, 1)``: ``t^d``, ``t^d log(1/t)^gamma`` or tabulated."""

    family: str
    d: float = 0.0
    gamma: float = 0.0
    table_t: tuple[float, ...] = ()
    table_h: tuple[float, ...] = ()

    def __post_init__(self):
        if self.family not in ("power", "power_log", "tabulated"):
            raise ValueError(f"unknown gauge family {self.family!r}")
        if self.family == "tabulated":
            t = np.asarray(self.table_t)
            h = np.asarray(self.table_h)
            if t.size < 2 or t.shape != h.shape or np.any(np.diff(t) <= 0) or np.any(np.diff(h) <= 0):
                raise ValueError("tabulated gauge must be strictly increasing in t and h")
            if np.any(t <= 0) or np.any(h <= 0):
                raise ValueError("tabulated gauge needs positive samples")

    @classmethod
    def power(cls, d: float) -> "GaugeFunction":
        if not 0 <= d <= 1:
            raise ValueError("power gauge exponent must lie in [0, 1]")
        return cls("power", d)

    @classmethod
    def power_log(cls, d: float, gamma: float) -> "GaugeFunction":
        return cls("power_log", d, gamma)

    def h(self, t):
        t = np.asarray(t, dtype=float)
        if self.family == "power":
            return t**self.d
        if self.family == "power_log":
            return t**self.d * np.log(1.0 / t) ** self.gamma
        return np.exp(np.interp(np.log(t), np.log(self.table_t), np.log(self.table_h)))

    def g(self, x):
        """``h^{-1}(1/x)``."""
        x = np.asarray(x, dtype=float)
        if self.family == "power":
            if self.d == 0:
                raise ValueError("power gauge with d = 0 has no inverse")
            return x ** (-1.0 / self.d)
        if self.family == "tabulated":
            return np.exp(np.interp(-np.log(x), np.log(self.table_h), np.log(self.table_t)))
        # solve d*log t + gamma*log(log 1/t) = -log x by Newton in u = -log t
        target = np.log(x)
        u = target / self.d
        for _ in range(60):
            F = self.d * u - self.gamma * np.log(u) - target
            u = u - F / (self.d - self.gamma / u)
        return np.exp(-u)


@dataclass(frozen=True)
class MinkowskiReport:
    estimate: float
    band: tuple[float, float]
    verdict: str  # measurable | not_measurable | divergent | vanishing
    drift: float
    previous_band: tuple[float, float] | None = None
    eps: np.ndarray = field(default=None, repr=False)
    values: np.ndarray = field(default=None, repr=False)

    @property
    def band_ratio(self) -> float:
        return (self.band[1] - self.band[0]) / self.estimate


def default_eps_grid(gaps: GapSequence, points_per_decade: int = 200) -> np.ndarray:
    lo = float(gaps.lengths[-1])
    hi = float(gaps.lengths[0]) / 2
    if hi <= lo * 10:
        raise ValueError("gap range spans less than a decade; cannot estimate content")
    n = int(points_per_decade * math.log10(hi / lo)) + 1
    return np.geomspace(lo, hi, n)


def minkowski_content(
    gaps: GapSequence,
    gauge: GaugeFunction,
    eps_grid=None,
    tolerance: float = 0.01,
) -> MinkowskiReport:
    """Tube-volume content ``vol S_eps(F) h(eps)/eps`` on an ``eps`` grid.

    The estimate is the geometric mean over the smallest decade of the grid
    and the band is its min/max there.  ``drift`` is the log-ratio of that
    mean to the mean over the decade above it.  A band narrower than
    ``tolerance`` relative to the estimate means measurable; otherwise a
    drift beyond ``tolerance`` is reported as divergent or vanishing, and a
    band that neither narrows nor drifts as an oscillation (not measurable).
    """
    eps = default_eps_grid(gaps) if eps_grid is None else np.sort(np.asarray(eps_grid, float))
    if eps.size < 2:
        raise ValueError("eps grid needs at least two points")
    h = gauge.h(eps)
    if np.any(np.diff(h) < 0):
        raise ValueError("gauge must be non-decreasing on the eps grid")
    # |F| is left out: the content measures the boundary layer only
    vol = tube_volume(GapSequence(gaps.lengths, gaps.counts, gaps.remainder, 0.0), eps)
    vals = vol * h / eps
    last = eps <= eps[0] * 10
    if last.sum() < 2:
        last = np.arange(eps.size) < max(2, eps.size // 4)
    prev = (eps > eps[0] * 10) & (eps <= eps[0] * 100)
    tail = vals[last]
    est = float(np.exp(np.mean(np.log(tail))))
    band = (float(tail.min()), float(tail.max()))
    prev_band = None
    drift = 0.0
    if prev.sum() >= 2:
        pv = vals[prev]
        prev_band = (float(pv.min()), float(pv.max()))
        drift = math.log(est) - float(np.mean(np.log(pv)))
    if (band[1] - band[0]) / est < tolerance:
        verdict = "measurable"
    elif drift > tolerance:
        verdict = "divergent"
    elif drift < -tolerance:
        verdict = "vanishing"
    else:
        verdict = "not_measurable"
    return MinkowskiReport(est, band, verdict, drift, prev_band, eps, vals)
