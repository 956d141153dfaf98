"""Zeta functions of spectra, convergence abscissae and closed forms.

``zeta(s) = sum_n mu_n^s`` over the eigenvalues of ``|D|^{-1}``.  Its
abscissa of convergence is the spectral dimension; numerically it is found
by bisection on the summability verdict of ``mu^s``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from . import seqcore
from .dirac import Spectrum, to_step_function
from .fractalspec import FractalSpec
from .seqcore import DEFAULT_POLICY, WindowPolicy


@dataclass(frozen=True)
class ZetaReport:
    s: float
    partial_sum: float
    N_used: int
    tail_bound: float | None
    converged: bool | None  # None when undecided


def _level_terms(spec: FractalSpec, kind: str, s: float, levels: range) -> np.ndarray:
    """Contribution of each level in ``levels`` to ``zeta(s)`` (closed form)."""
    L = spec.length
    out = []
    for k in levels:
        # sum over |sigma| = k of lambda_sigma^s factorises level by level
        prod = math.prod(float((spec.ratios(j) ** s).sum()) for j in range(1, k + 1))
        term = 0.0
        if kind in ("filled", "full"):
            term += 2 * L**s * prod
        if kind in ("lacunary", "full") and k >= 1:
            prev = prod / float((spec.ratios(k) ** s).sum())
            term += 2 * prev * float((spec.generator_gaps(k) ** s).sum())
        out.append(term)
    return np.array(out)


def level_tail(spec: FractalSpec, kind: str, s: float, level: int) -> float:
    """Exact ``sum`` of the level contributions beyond ``level`` (periodic tails).

    Returns ``inf`` when the per-period factor is ``>= 1`` and ``None`` for
    specs without a periodic tail.
    """
    if not spec.period:
        return 0.0 if level >= spec.depth else None
    P = spec.period
    start = max(level, len(spec.levels) - P)  # first level whose successors repeat
    R = math.prod(float((spec.ratios(j) ** s).sum()) for j in range(start + 1, start + P + 1))
    if R >= 1.0:
        return math.inf
    # levels in (level, start] are listed explicitly, then periods repeat
    head = _level_terms(spec, kind, s, range(level + 1, start + 1)).sum()
    block = _level_terms(spec, kind, s, range(start + 1, start + P + 1)).sum()
    return float(head + block / (1.0 - R))


def zeta_partial(
    spectrum: Spectrum, alpha: float, N: int | None = None, spec: FractalSpec | None = None
) -> ZetaReport:
    """Sum of ``value^alpha`` over the first ``N`` eigenvalues (with multiplicity).

    When ``spec`` is given and the whole spectrum up to its level is summed,
    the remaining levels are added up in closed form as ``tail_bound``.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    v = spectrum.values
    m = spectrum.multiplicities.astype(float)
    if N is None:
        used = int(spectrum.total_multiplicity)
        total = float(np.sum(m * v**alpha))
    else:
        cm = np.cumsum(m)
        k = int(np.searchsorted(cm, N, side="left"))
        full = min(k, v.size)
        total = float(np.sum(m[:full] * v[:full] ** alpha))
        used = int(cm[full - 1]) if full else 0
        if k < v.size and N > used:
            total += (N - used) * float(v[k]) ** alpha
            used = N
    tail = None
    conv = None
    if spec is not None and N is None and spectrum.level_cutoff is not None and spectrum.kind in (
        "lacunary", "filled", "full",
    ):
        tail = level_tail(spec, spectrum.kind, alpha, spectrum.level_cutoff)
        if tail is not None:
            conv = math.isfinite(tail)
    return ZetaReport(float(alpha), total, used, tail, conv)


@dataclass(frozen=True)
class AbscissaReport:
    estimate: float
    bracket: tuple[float, float]
    inconclusive_steps: int
    steps: int


def _verdict(mu: seqcore.StepFunction, alpha: float, policy: WindowPolicy) -> tuple[bool, bool]:
    """``(summable, decided)`` for ``mu^alpha``."""
    if alpha <= 0:
        # a Dirac spectrum has infinitely many eigenvalues; a list is a prefix
        return (False, True)
    rep = seqcore.summability(seqcore.power(mu, alpha), policy, margin=0.0)
    if rep.verdict == "inconclusive":
        return (bool(rep.rate < 0) if math.isfinite(rep.rate) else False, False)
    return rep.verdict == "summable", True


def abscissa(
    spectrum: Spectrum | seqcore.StepFunction,
    bracket: tuple[float, float] = (0.0, 4.0),
    tolerance: float = 1e-3,
    policy: WindowPolicy = DEFAULT_POLICY,
) -> AbscissaReport:
    """Convergence abscissa by bisection on the summability of ``mu^alpha``."""
    mu = spectrum if isinstance(spectrum, seqcore.StepFunction) else to_step_function(spectrum)
    lo, hi = map(float, bracket)
    if not 0 <= lo < hi:
        raise ValueError("bracket must satisfy 0 <= lo < hi")
    s_lo, _ = _verdict(mu, lo, policy)
    s_hi, _ = _verdict(mu, hi, policy)
    if s_lo or not s_hi:
        raise ValueError(
            f"bracket [{lo}, {hi}] does not straddle the abscissa "
            f"(summable at lo: {s_lo}, at hi: {s_hi})"
        )
    bad = 0
    steps = 0
    while hi - lo > 2 * tolerance:
        mid = 0.5 * (lo + hi)
        summable, decided = _verdict(mu, mid, policy)
        bad += not decided
        steps += 1
        if summable:
            hi = mid
        else:
            lo = mid
    return AbscissaReport(0.5 * (lo + hi), (lo, hi), bad, steps)


# ---------------------------------------------------------------------------
# self-similar closed forms


@dataclass(frozen=True)
class SelfSimilarReport:
    d: float
    ratios: tuple[float, ...]
    gaps: tuple[float, ...]
    length: float
    residue_filled: float
    residue_lacunary: float

    def zeta_filled(self, s: float) -> float:
        den = 1.0 - sum(r**s for r in self.ratios)
        return 2 * self.length**s / den if den > 0 else math.inf

    def zeta_lacunary(self, s: float) -> float:
        den = 1.0 - sum(r**s for r in self.ratios)
        return 2 * sum(c**s for c in self.gaps) / den if den > 0 else math.inf

    def zeta_full(self, s: float) -> float:
        return self.zeta_filled(s) + self.zeta_lacunary(s)

    @property
    def residue_full(self) -> float:
        return self.residue_filled + self.residue_lacunary


def similarity_dimension(ratios: Sequence[float]) -> float:
    """Root ``d`` of ``sum_j r_j^d = 1``."""
    r = np.asarray(ratios, dtype=float)
    if r.size < 2 or np.any((r <= 0) | (r >= 1)):
        raise ValueError("need at least two ratios in (0, 1)")
    f = lambda s: float(np.sum(r**s)) - 1.0  # noqa: E731
    if f(1.0) >= 0:
        raise ValueError("ratios sum to at least 1; the images would overlap")
    return brentq(f, 0.0, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def selfsimilar_report(spec: FractalSpec) -> SelfSimilarReport:
    """Dimension, closed-form zeta functions and their residues at ``d``."""
    if not spec.is_self_similar:
        raise ValueError("spec is not self-similar (one level repeated)")
    r = spec.ratios(1)
    c = spec.generator_gaps(1)
    d = similarity_dimension(r)
    den = float(np.sum(r**d * np.log(1.0 / r)))
    L = spec.length
    return SelfSimilarReport(
        d,
        tuple(r.tolist()),
        tuple(c.tolist()),
        L,
        2 * L**d / den,
        2 * float(np.sum(c**d)) / den,
    )


# ---------------------------------------------------------------------------
# symmetric fractals


@dataclass(frozen=True)
class SymmetricIndices:
    d: float
    delta_lower: float | None
    delta_upper: float | None
    delta_lower_long: float | None
    delta_upper_long: float | None
    exact: bool
    note: str = ""
    ratios: tuple[float, ...] = field(default=(), repr=False)


def symmetric_dimension_and_delta(
    p: Sequence[int],
    lam: Sequence[float],
    policy: WindowPolicy = DEFAULT_POLICY,
    period: int | None = -1,
) -> SymmetricIndices:
    """Dimension and window indices of a symmetric fractal.

    ``d`` is the limsup of ``sum log p_k / sum log(1/lambda_k)`` over
    prefixes.  ``delta_lower``/``delta_upper`` are the inf/sup of the same
    ratio over all windows ``[n, n+k]``; a window ratio is a mediant of its
    single-level ratios, so the extremes sit on single levels.  The ``_long``
    variants restrict to windows whose length tends to infinity; for periodic
    data they equal the per-period ratio.

    The window indices need ``sup p_n < inf`` and ``sup p_n lambda_n < 1``;
    when ``1 - p_n lambda_n`` visibly decays to 0 they are withheld.
    """
    ps = np.asarray(p, dtype=float)
    ls = np.asarray(lam, dtype=float)
    if ps.shape != ls.shape or ps.size == 0:
        raise ValueError("p and lambda must be nonempty and of equal length")
    if np.any(ps < 2) or np.any((ls <= 0) | (ls >= 1)):
        raise ValueError("need p_n >= 2 and 0 < lambda_n < 1")
    if period == -1:
        period = ps.size
    num = np.log(ps)
    den = -np.log(ls)
    single = num / den
    if period:
        tail = slice(ps.size - period, ps.size)
        d = float(num[tail].sum() / den[tail].sum())
        lo, hi = float(single[tail].min()), float(single[tail].max())
        defect = 1 - ps * ls
        if np.any(defect <= 0):
            return SymmetricIndices(d, None, None, None, None, True, "p*lambda >= 1 at some level")
        return SymmetricIndices(d, lo, hi, d, d, True, "", tuple(single.tolist()))
    n = ps.size
    n0 = int(policy.head_discard_fraction * n)
    cn = np.cumsum(num)
    cd = np.cumsum(den)
    d = float((cn[n0:] / cd[n0:]).max())
    defect = 1 - ps * ls
    half = max(1, n // 2)
    decaying = defect[half:].min() < 0.5 * defect[:half].min() and defect[-1] < defect[0]
    if decaying or defect.min() < policy.tolerance:
        return SymmetricIndices(
            d, None, None, None, None, False,
            "1 - p_n*lambda_n decays towards 0: not uniformly generated, window indices withheld",
        )
    tl = single[n0:]
    h = max(1, int(math.ceil(policy.min_h_fraction * (n - n0))))
    cnum = np.concatenate(([0.0], np.cumsum(num[n0:])))
    cden = np.concatenate(([0.0], np.cumsum(den[n0:])))
    i, j = np.triu_indices(cnum.size, k=h)
    w = (cnum[j] - cnum[i]) / (cden[j] - cden[i])
    return SymmetricIndices(
        d, float(tl.min()), float(tl.max()), float(w.min()), float(w.max()), False, "",
        tuple(single.tolist()),
    )
