"""Eigenvalue streams of the lacunary, filled, full and tensor Dirac operators.

Spectra hold the eigenvalues of ``|D|^{-1}``: every interval ``I`` of the
triple contributes ``|I|`` with multiplicity two.  Values are computed from
ratio multisets, so only distinct lengths are stored and deep levels of
self-similar fractals stay cheap.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import seqcore
from .fractalspec import (
    DEFAULT_BUDGET,
    BudgetExceededError,
    DepthError,
    FractalSpec,
    GapSequence,
    cell_bounds,
    gap_multiset,
    lacuna_arrays,
    merge_multisets,
    max_gap_after,
    max_ratio_product,
    ratio_multiset,
    symmetric as symmetric_spec,
)

KINDS = ("lacunary", "filled", "full")
_INT_LIMIT = 2**62


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Distinct eigenvalues of ``|D|^{-1}`` (decreasing) with multiplicities.

    Every eigenvalue strictly above ``complete_above`` is present with its
    full multiplicity; below it the list is a truncation.
    """

    kind: str
    values: np.ndarray
    multiplicities: np.ndarray
    level_cutoff: int | None = None
    provenance: str = ""
    complete_above: float = 0.0
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        m = np.asarray(self.multiplicities, dtype=np.int64)
        if v.shape != m.shape:
            raise ValueError("values and multiplicities differ in length")
        if v.size and (np.any(np.diff(v) >= 0) or v[-1] <= 0 or np.any(m <= 0)):
            raise ValueError("spectrum values must be positive, strictly decreasing, multiplicities positive")
        v.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "multiplicities", m)

    def entries(self):
        return zip(self.values.tolist(), self.multiplicities.tolist())

    @property
    def total_multiplicity(self) -> int:
        return int(sum(int(x) for x in self.multiplicities))

    def complete_part(self) -> "Spectrum":
        keep = self.values > self.complete_above
        return Spectrum(
            self.kind, self.values[keep], self.multiplicities[keep],
            self.level_cutoff, self.provenance, self.complete_above, dict(self.notes),
        )


def _make(kind, vals, cnts, level, spec, complete_above, notes=None) -> Spectrum:
    v, c = merge_multisets(vals, cnts)
    return Spectrum(kind, v, c, level, spec.digest() if spec is not None else "", complete_above, notes or {})


def _lacunary_parts(spec, level, budget):
    vals, cnts = [], []
    for k in range(1, level + 1):
        v, c = gap_multiset(spec, k, budget)
        vals.append(v)
        cnts.append(2 * c)
    return vals, cnts, max_gap_after(spec, level)


def _filled_parts(spec, level, budget):
    vals, cnts = [], []
    for k in range(0, level + 1):
        v, c = ratio_multiset(spec, k, budget)
        vals.append(spec.length * v)
        cnts.append(2 * c)
    nxt = 0.0 if spec.depth <= level else spec.length * max_ratio_product(spec, level + 1)
    return vals, cnts, nxt


def spectrum(spec: FractalSpec, kind: str, level: int, budget: int = DEFAULT_BUDGET) -> Spectrum:
    """Spectrum of ``|D|^{-1}`` for the lacunary, filled or full triple.

    The lacunary part lists the lacunae born at levels ``1..level``; the
    filled part lists the cells of levels ``0..level`` (``[a, b]`` included).
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    if level < 0:
        raise ValueError("level must be nonnegative")
    if level > spec.depth:
        raise DepthError(f"level {level} exceeds the spec depth {spec.depth}")
    if kind == "lacunary" and level == 0:
        raise ValueError("the lacunary spectrum needs level >= 1")
    vals, cnts, cut = [], [], 0.0
    if kind in ("lacunary", "full") and level >= 1:
        v, c, x = _lacunary_parts(spec, level, budget)
        vals += v
        cnts += c
        cut = max(cut, x)
    if kind in ("filled", "full"):
        v, c, x = _filled_parts(spec, level, budget)
        vals += v
        cnts += c
        cut = max(cut, x)
    return _make(kind, vals, cnts, level, spec, cut)


@dataclass(frozen=True)
class SymmetricClosedForm:
    lacunary_values: np.ndarray  # Lambda~_k, k = 0..K-1
    lacunary_counts: tuple[int, ...]  # P~_k
    filled_values: np.ndarray  # Lambda_k, k = 0..K
    filled_counts: tuple[int, ...]  # P_k


def _extend(seq: Sequence, n: int, period: int | None) -> list:
    seq = list(seq)
    if len(seq) >= n:
        return seq[:n]
    if not period:
        raise DepthError(f"{n} levels needed but only {len(seq)} given")
    head = len(seq) - period
    return [seq[head + (i - head) % period] if i >= len(seq) else seq[i] for i in range(n)]


def symmetric_closed_form(
    p: Sequence[int], lam: Sequence[float], K: int, period: int | None = -1
) -> SymmetricClosedForm:
    """Per-level eigenvalues and counts of a symmetric fractal on ``[0, 1]``.

    ``Lambda_k = prod_{j<=k} lambda_j`` occurs ``P_k = prod_{j<=k} p_j``
    times; lacunae born at level ``k+1`` have length
    ``Lambda_k (1 - p_{k+1} lambda_{k+1}) / (p_{k+1} - 1)`` and occur
    ``(p_{k+1} - 1) P_k`` times.
    """
    if period == -1:
        period = len(p)
    ps = [int(x) for x in _extend(p, K + 1, period)]
    ls = [float(x) for x in _extend(lam, K + 1, period)]
    for n, (pk, lk) in enumerate(zip(ps, ls), start=1):
        if pk < 2 or not 0 < lk < 1 or not pk * lk < 1:
            raise ValueError(f"level {n}: need p >= 2 and 0 < p*lambda < 1 (p={pk}, lambda={lk})")
    Lam = [1.0]
    P = [1]
    for k in range(K):
        Lam.append(Lam[-1] * ls[k])
        P.append(P[-1] * ps[k])
    if P[-1] * max(ps) > _INT_LIMIT:
        raise BudgetExceededError(P[-1] * max(ps), _INT_LIMIT)
    lac_v = [Lam[k] * (1 - ps[k] * ls[k]) / (ps[k] - 1) for k in range(K)]
    lac_c = [(ps[k] - 1) * P[k] for k in range(K)]
    return SymmetricClosedForm(np.array(lac_v), tuple(lac_c), np.array(Lam), tuple(P))


def symmetric_spectrum(
    p: Sequence[int],
    lam: Sequence[float],
    kind: str,
    K: int,
    interval=(0.0, 1.0),
    period: int | None = -1,
) -> Spectrum:
    """Closed-form spectrum of a symmetric fractal (no cell enumeration)."""
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    spec = symmetric_spec(p, lam, interval, period=period)
    L = spec.length
    cf = symmetric_closed_form(p, lam, K + 1, period=period)
    vals, cnts, cut = [], [], 0.0
    if kind in ("lacunary", "full"):
        vals.append(L * cf.lacunary_values[:K])
        cnts.append(2 * np.array(cf.lacunary_counts[:K], dtype=np.int64))
        if spec.depth > K:
            cut = max(cut, max_gap_after(spec, K))
    if kind in ("filled", "full"):
        vals.append(L * cf.filled_values[: K + 1])
        cnts.append(2 * np.array(cf.filled_counts[: K + 1], dtype=np.int64))
        if spec.depth > K:
            cut = max(cut, L * cf.filled_values[K + 1])
    return _make(kind, vals, cnts, K, spec, cut, {"closed_form": True})


def spectrum_from_gaps(gaps: GapSequence, provenance: str = "gaps") -> Spectrum:
    """Lacunary spectrum of a fractal string: each gap length twice."""
    v = gaps.lengths
    c = 2 * gaps.counts.astype(np.int64)
    cut = float(v[-1]) if gaps.remainder > 0 else 0.0
    return Spectrum("external", v, c, None, provenance, cut)


def tensor_spectrum(s1: Spectrum, s2: Spectrum, cutoff: float, budget: int = DEFAULT_BUDGET) -> Spectrum:
    """Eigenvalues ``(mu_i^-2 + mu_j^-2)^{-1/2}`` of ``|D_1 x 1 + 1 x D_2|^{-1}``.

    Only pairs with value ``>= cutoff`` are kept; multiplicities multiply
    (finite-multiplicity constant taken as 1).
    """
    if not cutoff > 0:
        raise ValueError("cutoff must be positive")
    a = s1.values[s1.values >= cutoff]
    b = s2.values[s2.values >= cutoff]
    ma = s1.multiplicities[: a.size]
    mb = s2.multiplicities[: b.size]
    ia2 = a**-2.0
    ib2 = b**-2.0  # increasing
    room = cutoff**-2.0 - ia2
    nj = np.searchsorted(ib2, room * (1 + 1e-15), side="right")
    total = int(nj.sum())
    if total > budget:
        raise BudgetExceededError(total, budget)
    ii = np.repeat(np.arange(a.size), nj)
    starts = np.cumsum(nj) - nj
    jj = np.arange(total) - np.repeat(starts, nj)
    vals = (ia2[ii] + ib2[jj]) ** -0.5
    cnt = ma[ii].astype(np.int64) * mb[jj].astype(np.int64)
    keep = vals >= cutoff
    cut = max(cutoff, s1.complete_above, s2.complete_above)
    v, c = merge_multisets([vals[keep]], [cnt[keep]])
    return Spectrum("tensor", v, c, None, f"{s1.provenance}x{s2.provenance}", cut, {"multiplicity_constant": 1})


def to_step_function(s: Spectrum) -> seqcore.StepFunction:
    """Eigenvalue function with width = multiplicity, cut at the completeness bound."""
    keep = s.values > s.complete_above
    if not keep.any():
        raise ValueError("spectrum has no complete entries")
    return seqcore.StepFunction(
        s.values[keep], s.multiplicities[keep].astype(float), truncated=s.complete_above > 0
    )


# ---------------------------------------------------------------------------
# geometry of the triple


def triple_intervals(spec: FractalSpec, kind: str, level: int, budget: int = DEFAULT_BUDGET):
    """Endpoints ``(u, v)`` and lengths of the intervals carrying the Dirac blocks."""
    us, vs, ls = [], [], []
    if kind in ("lacunary", "full"):
        lo, hi, _, ln = lacuna_arrays(spec, level, budget)
        us.append(lo)
        vs.append(hi)
        ls.append(ln)
    if kind in ("filled", "full"):
        for k in range(0, level + 1):
            lo, hi, ln = cell_bounds(spec, k, budget)
            us.append(lo)
            vs.append(hi)
            ls.append(ln)
    if not us:
        raise ValueError(f"unknown kind {kind!r}")
    return np.concatenate(us), np.concatenate(vs), np.concatenate(ls)


def commutator_norm(
    spec: FractalSpec, kind: str, level: int, f: Callable[[np.ndarray], np.ndarray],
    budget: int = DEFAULT_BUDGET,
) -> float:
    """``sup |f(v) - f(u)| / |I|`` over the triple's intervals ``I = [u, v]``."""
    u, v, length = triple_intervals(spec, kind, level, budget)
    fu = np.asarray(f(u), dtype=float)
    fv = np.asarray(f(v), dtype=float)
    if fu.shape != u.shape or fv.shape != v.shape:
        raise ValueError("f must map an array of points to an array of the same shape")
    if not (np.all(np.isfinite(fu)) and np.all(np.isfinite(fv))):
        raise ValueError("f is undefined at some interval endpoint")
    return float(np.max(np.abs(fv - fu) / length))


# ---------------------------------------------------------------------------
# cache files


def write_spectrum(s: Spectrum, path: str | Path) -> Path:
    path = Path(path)
    with path.open("w") as fh:
        fh.write("value,multiplicity\n")
        for v, m in s.entries():
            fh.write(f"{v:.17g},{m}\n")
    meta = {
        "kind": s.kind,
        "level_cutoff": s.level_cutoff,
        "spec_hash": s.provenance,
        "complete_above": s.complete_above,
    }
    side = path.with_name(path.name + ".meta.json")
    side.write_text(json.dumps(meta, sort_keys=True) + "\n")
    return side


def read_spectrum(path: str | Path) -> Spectrum:
    path = Path(path)
    rows = path.read_text().strip().splitlines()
    if not rows or rows[0].strip() != "value,multiplicity":
        raise ValueError("expected header 'value,multiplicity'")
    vals, cnts = [], []
    for r in rows[1:]:
        v, m = r.split(",")
        vals.append(float(v))
        cnts.append(int(m))
    side = path.with_name(path.name + ".meta.json")
    meta = json.loads(side.read_text()) if side.exists() else {}
    v, c = merge_multisets([np.array(vals)], [np.array(cnts, dtype=np.int64)])
    return Spectrum(
        meta.get("kind", "external"), v, c, meta.get("level_cutoff"),
        meta.get("spec_hash", ""), float(meta.get("complete_above", 0.0)),
    )
