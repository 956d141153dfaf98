"""Homogeneous measures on limit fractals and integration against them."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .fractalspec import DEFAULT_BUDGET, FractalSpec, cell_arrays, cell_count


@dataclass(frozen=True)
class CellMeasure:
    """Masses ``mu_alpha(w_sigma(F))`` of the level-``n`` cells.

    Arrays are in lexicographic ``sigma`` order; ``sigma`` entries are
    1-based branch indices.
    """

    level: int
    alpha: float
    weights: np.ndarray
    left: np.ndarray
    right: np.ndarray
    radices: tuple[int, ...] = field(repr=False)

    def __len__(self) -> int:
        return int(self.weights.size)

    def index(self, sigma) -> int:
        if len(sigma) != self.level:
            raise ValueError(f"multi-index of length {self.level} expected")
        if self.level == 0:
            return 0
        return int(np.ravel_multi_index(tuple(s - 1 for s in sigma), self.radices))

    def weight(self, sigma) -> float:
        return float(self.weights[self.index(sigma)])

    def sigma(self, i: int) -> tuple[int, ...]:
        if self.level == 0:
            return ()
        return tuple(int(x) + 1 for x in np.unravel_index(i, self.radices))

    @property
    def max_diameter(self) -> float:
        return float((self.right - self.left).max())


def level_probabilities(spec: FractalSpec, k: int, alpha: float) -> np.ndarray:
    r = spec.ratios(k) ** alpha
    return r / r.sum()


def homogeneous_measure(
    spec: FractalSpec, alpha: float, n: int, budget: int = DEFAULT_BUDGET
) -> CellMeasure:
    """Cell masses ``lambda_sigma^alpha / sum_{|sigma'| = n} lambda_sigma'^alpha``.

    The normaliser factorises over levels, so each mass is a product of
    per-level probabilities; parents are exactly the sums of their children
    up to rounding.
    """
    if not 0 < alpha < 1:
        warnings.warn(f"alpha = {alpha} lies outside (0, 1); the masses are still well defined", stacklevel=2)
    if n < 0:
        raise ValueError("level must be nonnegative")
    need = cell_count(spec, n)
    if need > budget:
        from .fractalspec import BudgetExceededError

        raise BudgetExceededError(need, budget)
    w = np.ones(1)
    for k in range(1, n + 1):
        w = np.outer(w, level_probabilities(spec, k, alpha)).ravel()
    a, b = spec.interval
    c, s = cell_arrays(spec, n, budget)
    u, v = c + s * a, c + s * b
    radices = tuple(spec.count(k) for k in range(1, n + 1))
    return CellMeasure(n, float(alpha), w, np.minimum(u, v), np.maximum(u, v), radices)


@dataclass(frozen=True)
class TestFunction:
    """A function on the line with what is needed to bound Riemann sums.

    ``modulus(delta)`` bounds ``|f(x) - f(y)|`` for ``|x - y| <= delta``;
    indicators of closed intervals carry ``interval`` instead.
    """

    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    modulus: Callable[[float], float] | None = None
    interval: tuple[float, float] | None = None

    __test__ = False  # not a pytest class

    def __call__(self, x):
        return self.fn(np.asarray(x, dtype=float))


def const(c: float = 1.0) -> TestFunction:
    return TestFunction(f"const:{c:g}", lambda x: np.full(np.shape(x), float(c)), lambda d: 0.0)


def linear(slope: float = 1.0, intercept: float = 0.0) -> TestFunction:
    return TestFunction(
        f"linear:{slope:g},{intercept:g}", lambda x: slope * x + intercept, lambda d: abs(slope) * d
    )


def indicator(lo: float, hi: float) -> TestFunction:
    if not lo <= hi:
        raise ValueError("indicator needs lo <= hi")
    # closed interval with a relative guard against endpoint round-off
    eps = 1e-12 * max(1.0, abs(lo), abs(hi))
    return TestFunction(
        f"indicator:{lo:g},{hi:g}",
        lambda x: ((x >= lo - eps) & (x <= hi + eps)).astype(float),
        None,
        (lo, hi),
    )


def sampled(xs, ys) -> TestFunction:
    """Piecewise-linear interpolation of samples (e.g. read from CSV)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    order = np.argsort(xs)
    xs, ys = xs[order], ys[order]
    if xs.size < 2:
        raise ValueError("need at least two samples")
    slopes = np.abs(np.diff(ys) / np.diff(xs))
    lip = float(slopes.max())

    def fn(x):
        if np.any((x < xs[0] - 1e-12) | (x > xs[-1] + 1e-12)):
            return np.full(np.shape(x), np.nan)
        return np.interp(x, xs, ys)

    return TestFunction("samples", fn, lambda d: lip * d)


def integrate(measure: CellMeasure, f: TestFunction | Callable) -> tuple[float, float]:
    """``sum_sigma f(left endpoint) weight(sigma)`` and an error bound.

    The bound is ``modulus(max cell diameter)``; for indicators it is the
    mass of the cells that straddle an end of the interval.
    """
    tf = f if isinstance(f, TestFunction) else TestFunction("f", f)
    vals = np.asarray(tf(measure.left), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ValueError("f is undefined at a cell representative")
    value = float(np.dot(vals, measure.weights))
    if tf.interval is not None:
        lo, hi = tf.interval
        eps = 1e-12 * max(1.0, abs(lo), abs(hi))
        inside = (measure.left >= lo - eps) & (measure.right <= hi + eps)
        outside = (measure.right < lo - eps) | (measure.left > hi + eps)
        bound = float(measure.weights[~inside & ~outside].sum())
    elif tf.modulus is not None:
        bound = float(tf.modulus(measure.max_diameter))
    else:
        bound = math.nan
    return value, bound


@dataclass(frozen=True)
class HBComparison:
    hb: float
    integral: float
    difference: float
    integration_bound: float
    tolerance: float
    passed: bool


def hb_vs_measure(
    spec: FractalSpec,
    kind: str,
    s: float,
    f: TestFunction,
    proc=None,
    level: int = 16,
    tolerance: float = 1e-3,
    policy=None,
    budget: int = DEFAULT_BUDGET,
) -> HBComparison:
    """Compare the trace-state value of ``f`` with ``int f d mu_s``."""
    from . import traces
    from .seqcore import DEFAULT_POLICY

    proc = proc or traces.DEFAULT_PROCEDURES[0]
    hb = traces.hb_functional(spec, kind, s, f, proc, level, policy or DEFAULT_POLICY, budget).value
    meas = homogeneous_measure(spec, s, level, budget) if 0 < s < 1 else _quiet_measure(spec, s, level, budget)
    val, bound = integrate(meas, f)
    bound = 0.0 if math.isnan(bound) else bound
    diff = abs(hb - val)
    return HBComparison(hb, val, diff, bound, tolerance, diff < tolerance + bound)


def _quiet_measure(spec, s, level, budget):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return homogeneous_measure(spec, s, level, budget)
