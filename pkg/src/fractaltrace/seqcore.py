"""Non-increasing infinitesimal step functions and their asymptotic indices.

A :class:`StepFunction` stores an eigenvalue function ``mu`` as blocks of
constant value; block ``k`` covers ``[W_{k-1}, W_k)`` where ``W`` is the
cumulative width.  Everything that talks about limits at infinity works on
finite truncations, so each estimator takes a :class:`WindowPolicy` and
reports verdicts with an explicit ``inconclusive`` escape.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

INF = math.inf

# Base of the x-blocks used by the summability classifier.
BLOCK_BASE = 2.0


class TailUnknownError(ValueError):
    """Raised when a truncated function is queried past its known data."""


class InsufficientDataError(ValueError):
    pass


@dataclass(frozen=True)
class GeometricGrid:
    base: float
    count: int

    def __post_init__(self):
        if not self.base > 1.0:
            raise ValueError(f"grid base must be > 1, got {self.base}")
        if self.count < 1:
            raise ValueError("grid count must be positive")


@dataclass(frozen=True)
class WindowPolicy:
    """Finite-truncation surrogate for the limits ``t, h -> infinity``.

    ``t_grid.base`` is the ratio between consecutive sample points ``x = e^t``
    (``count`` caps the number of samples); ``h_grid`` is geometric in ``h``
    starting at ``min_h_fraction`` of the available ``t`` span.
    """

    t_grid: GeometricGrid = GeometricGrid(1.02, 4096)
    h_grid: GeometricGrid = GeometricGrid(1.2, 48)
    head_discard_fraction: float = 0.5
    tolerance: float = 1e-3
    min_h_fraction: float = 0.05
    eccentric_slope: float = 0.05

    def __post_init__(self):
        if not 0.0 <= self.head_discard_fraction < 1.0:
            raise ValueError("head_discard_fraction must lie in [0, 1)")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if not 0.0 < self.min_h_fraction < 1.0:
            raise ValueError("min_h_fraction must lie in (0, 1)")


DEFAULT_POLICY = WindowPolicy()


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Right-continuous step function ``mu`` with strictly decreasing values.

    ``truncated`` marks that the function continues (unknown) past the last
    block; otherwise ``mu`` vanishes beyond the known width.
    """

    values: np.ndarray
    widths: np.ndarray
    truncated: bool = False
    _cum_width: np.ndarray = field(init=False, repr=False)
    _cum_mass: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).copy()
        widths = np.asarray(self.widths, dtype=float).copy()
        if values.ndim != 1 or values.shape != widths.shape:
            raise ValueError("values and widths must be 1-d arrays of equal length")
        if values.size == 0:
            raise ValueError("step function needs at least one entry")
        if not (np.all(np.isfinite(values)) and np.all(values > 0)):
            raise ValueError("values must be finite and positive")
        if not (np.all(np.isfinite(widths)) and np.all(widths > 0)):
            raise ValueError("widths must be finite and positive")
        if np.any(np.diff(values) >= 0):
            raise ValueError("values must be strictly decreasing; use build_step_function")
        object.__setattr__(self, "values", _readonly(values))
        object.__setattr__(self, "widths", _readonly(widths))
        cw = np.concatenate(([0.0], np.cumsum(widths)))
        cm = np.concatenate(([0.0], np.cumsum(values * widths)))
        object.__setattr__(self, "_cum_width", _readonly(cw))
        object.__setattr__(self, "_cum_mass", _readonly(cm))

    @property
    def known_width(self) -> float:
        return float(self._cum_width[-1])

    @property
    def total_width(self) -> float:
        return INF if self.truncated else self.known_width

    @property
    def block_starts(self) -> np.ndarray:
        return self._cum_width[:-1]

    @property
    def block_ends(self) -> np.ndarray:
        return self._cum_width[1:]

    def __len__(self) -> int:
        return int(self.values.size)

    def entries(self) -> Iterator[tuple[float, float]]:
        """Restartable iteration over ``(value, width)`` pairs."""
        return zip(self.values.tolist(), self.widths.tolist())

    def __eq__(self, other):
        if not isinstance(other, StepFunction):
            return NotImplemented
        return (
            self.truncated == other.truncated
            and np.array_equal(self.values, other.values)
            and np.array_equal(self.widths, other.widths)
        )

    def __hash__(self):
        return hash((self.values.tobytes(), self.widths.tobytes(), self.truncated))


def build_step_function(
    pairs: Iterable[tuple[float, float]], truncated: bool = False
) -> StepFunction:
    """Sort ``(value, width)`` pairs decreasingly and coalesce equal values."""
    arr = np.asarray(list(pairs), dtype=float)
    if arr.size == 0:
        raise ValueError("no entries")
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("expected (value, width) pairs")
    return from_arrays(arr[:, 0], arr[:, 1], truncated=truncated)


def from_arrays(values, widths, truncated: bool = False) -> StepFunction:
    values = np.asarray(values, dtype=float)
    widths = np.asarray(widths, dtype=float)
    if values.shape != widths.shape:
        raise ValueError("values and widths differ in length")
    if values.size == 0:
        raise ValueError("no entries")
    bad_v = ~(np.isfinite(values) & (values > 0))
    if bad_v.any():
        raise ValueError(f"nonpositive value at position {int(np.argmax(bad_v))}")
    bad_w = ~(np.isfinite(widths) & (widths > 0))
    if bad_w.any():
        raise ValueError(f"nonpositive width at position {int(np.argmax(bad_w))}")
    order = np.argsort(-values, kind="stable")
    v = values[order]
    w = widths[order]
    starts = np.concatenate(([True], v[1:] != v[:-1]))
    idx = np.flatnonzero(starts)
    return StepFunction(v[idx], np.add.reduceat(w, idx), truncated=truncated)


def mu_at(mu: StepFunction, x):
    """Evaluate ``mu`` at ``x`` (scalar or array)."""
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise ValueError("mu is defined on [0, inf)")
    W = mu.known_width
    beyond = xa >= W
    if mu.truncated and np.any(beyond):
        raise TailUnknownError(f"tail unknown beyond x={W:g}")
    k = np.searchsorted(mu.block_ends, xa, side="right")
    k = np.minimum(k, len(mu) - 1)
    out = np.where(beyond, 0.0, mu.values[k])
    return float(out) if out.ndim == 0 else out


def log_profile(mu: StepFunction, t):
    """``f(t) = -log mu(e^t)``; ``+inf`` where ``mu`` vanishes."""
    m = np.asarray(mu_at(mu, np.exp(np.asarray(t, dtype=float))))
    with np.errstate(divide="ignore"):
        out = np.where(m > 0, -np.log(np.where(m > 0, m, 1.0)), INF)
    return float(out) if out.ndim == 0 else out


def integral_up(mu: StepFunction, x):
    """``S_up(x) = int_0^x mu``; exact on the step representation."""
    xa = np.asarray(x, dtype=float)
    W = mu.known_width
    if mu.truncated and np.any(xa > W * (1 + 1e-15)):
        raise TailUnknownError(f"tail unknown beyond x={W:g}")
    xc = np.clip(xa, 0.0, W)
    k = np.searchsorted(mu.block_ends, xc, side="right")
    k = np.minimum(k, len(mu) - 1)
    out = mu._cum_mass[k] + mu.values[k] * (xc - mu._cum_width[k])
    out = np.where(xc >= W, mu._cum_mass[-1], out)
    return float(out) if out.ndim == 0 else out


def interval_masses(mu: StepFunction, edges: np.ndarray) -> np.ndarray:
    """Integrals of ``mu`` over ``[edges[i], edges[i+1]]`` within the known range.

    Summed piece by piece, so tiny masses far out are not lost to
    cancellation against the bulk.
    """
    edges = np.clip(np.asarray(edges, dtype=float), 0.0, mu.known_width)
    inner = mu._cum_width[(mu._cum_width > edges[0]) & (mu._cum_width < edges[-1])]
    pts = np.union1d(edges, inner)
    k = np.minimum(np.searchsorted(mu.block_ends, pts[:-1], side="right"), len(mu) - 1)
    pieces = mu.values[k] * np.diff(pts)
    start = np.searchsorted(pts, edges[:-1])
    out = np.add.reduceat(np.append(pieces, 0.0), start)
    # reduceat returns the element itself for empty ranges
    out[np.diff(edges) <= 0] = 0.0
    return out


@dataclass(frozen=True)
class SummabilityReport:
    verdict: str  # "summable" | "divergent" | "inconclusive"
    rate: float  # block sums behave like BLOCK_BASE ** (rate * j)
    rate_stderr: float
    known_mass: float
    tail_bound: float
    blocks_used: int


def summability(
    mu: StepFunction, policy: WindowPolicy = DEFAULT_POLICY, margin: float | None = None
) -> SummabilityReport:
    """Classify ``mu`` as integrable or not from its truncation.

    Integrals over dyadic blocks ``[2^j, 2^(j+1))`` are fitted by a geometric
    law over the tail blocks.  A decay rate below ``-margin`` is summable, any
    other well-fitted rate is divergent; too few blocks or a noisy fit is
    inconclusive.
    """
    if margin is None:
        margin = policy.tolerance
    mass = float(mu._cum_mass[-1])
    if not mu.truncated:
        return SummabilityReport("summable", -INF, 0.0, mass, 0.0, 0)
    W = mu.known_width
    if W <= 2.0:
        return SummabilityReport("inconclusive", math.nan, math.nan, mass, INF, 0)
    j_hi = int(math.floor(math.log(W, BLOCK_BASE) - 1e-12)) - 1
    j_lo = 0
    if j_hi < j_lo:
        return SummabilityReport("inconclusive", math.nan, math.nan, mass, INF, 0)
    j_start = j_lo + int(math.ceil(policy.head_discard_fraction * (j_hi - j_lo)))
    js = np.arange(j_start, j_hi + 1)
    if js.size < 3:
        return SummabilityReport("inconclusive", math.nan, math.nan, mass, INF, int(js.size))
    edges = BLOCK_BASE ** np.arange(j_start, j_hi + 2, dtype=float)
    B = interval_masses(mu, edges)
    with np.errstate(divide="ignore"):
        y = np.log(B)
    if not np.all(np.isfinite(y)):
        return SummabilityReport("inconclusive", math.nan, math.nan, mass, INF, int(js.size))
    slope, se = _slope_with_stderr(js.astype(float), y)
    rate = slope / math.log(BLOCK_BASE)
    rate_se = se / math.log(BLOCK_BASE)
    last = float(interval_masses(mu, np.array([W / BLOCK_BASE, W]))[0])
    if rate < -margin and (rate_se <= max(abs(rate), margin)):
        rho = BLOCK_BASE**rate
        tail = last * rho / (1.0 - rho)
        return SummabilityReport("summable", rate, rate_se, mass, tail, int(js.size))
    if rate >= -margin and rate_se <= max(abs(rate), 4 * margin, 0.05):
        return SummabilityReport("divergent", rate, rate_se, mass, INF, int(js.size))
    return SummabilityReport("inconclusive", rate, rate_se, mass, INF, int(js.size))


def _slope_with_stderr(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    xm = x - x.mean()
    sxx = float(xm @ xm)
    slope = float(xm @ (y - y.mean())) / sxx
    if x.size <= 2:
        return slope, 0.0
    resid = y - y.mean() - slope * xm
    se = math.sqrt(float(resid @ resid) / (x.size - 2) / sxx)
    return slope, se


def integral_S(
    mu: StepFunction, x: float, policy: WindowPolicy = DEFAULT_POLICY
) -> tuple[float | None, str]:
    """Integral function: ``S_up`` for non-summable ``mu``, ``S_down`` otherwise.

    Returns ``(value, branch)`` with branch ``"up"``, ``"down"`` or
    ``"inconclusive"`` (value ``None``).
    """
    if x < 0:
        raise ValueError("x must be nonnegative")
    if mu.truncated and x > mu.known_width:
        raise TailUnknownError(f"tail unknown beyond x={mu.known_width:g}")
    rep = summability(mu, policy)
    if rep.verdict == "divergent":
        return float(integral_up(mu, x)), "up"
    if rep.verdict == "summable":
        return rep.known_mass - float(integral_up(mu, x)) + rep.tail_bound, "down"
    return None, "inconclusive"


def direct_sum(alpha: StepFunction, beta: StepFunction) -> StepFunction:
    """Non-increasing rearrangement of the disjoint union of ``alpha`` and ``beta``."""
    return from_arrays(
        np.concatenate((alpha.values, beta.values)),
        np.concatenate((alpha.widths, beta.widths)),
        truncated=alpha.truncated or beta.truncated,
    )


def power(mu: StepFunction, gamma: float) -> StepFunction:
    if not gamma > 0:
        raise ValueError("exponent must be positive")
    if gamma == 1:
        return mu
    v = mu.values**gamma
    if np.any(v <= 0) or np.any(np.diff(v) >= 0):
        # underflow collapsed distinct values
        return from_arrays(np.maximum(v, np.finfo(float).tiny), mu.widths, mu.truncated)
    return StepFunction(v, mu.widths, mu.truncated)


def scale_argument(mu: StepFunction, lam: float) -> StepFunction:
    """``x -> mu(lam * x)``."""
    if not lam > 0:
        raise ValueError("dilation must be positive")
    return StepFunction(mu.values, mu.widths / lam, mu.truncated)


def scale_values(mu: StepFunction, c: float) -> StepFunction:
    if not c > 0:
        raise ValueError("scale must be positive")
    return StepFunction(mu.values * c, mu.widths, mu.truncated)


def pointwise_max(alpha: StepFunction, beta: StepFunction, x) -> np.ndarray:
    return np.maximum(mu_at(alpha, x), mu_at(beta, x))


# ---------------------------------------------------------------------------
# asymptotic indices


@dataclass(frozen=True)
class IndexReport:
    d_lower: float
    d_upper: float
    delta_lower: float
    delta_upper: float
    traceability_interval: tuple[float, float]
    tolerance: float
    diagnostics: dict = field(default_factory=dict, compare=False, repr=False)

    def ordered(self) -> bool:
        tol = self.tolerance
        a, b, c, d = self.delta_lower, self.d_lower, self.d_upper, self.delta_upper
        return a <= b + tol and b <= c + tol and c <= d + tol


def profile_knots(mu: StepFunction) -> tuple[np.ndarray, np.ndarray]:
    """Knots of the continuous log-profile used by the index estimators.

    The profile runs through the points ``(log N(v), -log v)`` where
    ``N(v) = #{mu >= v}`` is the cumulative width at the end of the block of
    value ``v``: the log-log graph of the counting function.  Linear
    interpolation between them removes the staircase quantisation that makes
    short windows meaningless.
    """
    return np.log(mu.block_ends), -np.log(mu.values)


def _weight_grid(t_lo: float, t_hi: float, grid: GeometricGrid) -> np.ndarray:
    step = math.log(grid.base)
    n = int(math.floor((t_hi - t_lo) / step)) + 1
    n = max(2, min(n, grid.count))
    return np.linspace(t_lo, t_hi, n)


def _invert(phi: float, tol: float) -> float:
    if phi <= tol:
        return INF
    if phi >= 1.0 / tol:
        return 0.0
    return 1.0 / phi


def indices(mu: StepFunction, policy: WindowPolicy = DEFAULT_POLICY) -> IndexReport:
    """Estimate the four asymptotic indices of ``mu``.

    With ``f`` the interpolated log-profile and ``phi(t, h) = (f(t+h)-f(t))/h``:

    * ``delta_lower = 1/sup phi`` and ``delta_upper = 1/inf phi`` over the
      windows ``t >= t0``, ``h >= h_min`` of the tail;
    * ``d_lower``/``d_upper`` use only windows anchored at the head cut
      ``t0`` and reaching at least halfway through the tail, the offset-free
      form of ``limsup/liminf f(t)/t``.

    Anchored windows are a subset of all windows, so the ordering
    ``delta_lower <= d_lower <= d_upper <= delta_upper`` holds by
    construction.  A ``phi`` at or below ``tolerance`` maps to ``+inf`` and
    one above ``1/tolerance`` maps to ``0``.
    """
    tk, fk = profile_knots(mu)
    if tk.size < 4:
        raise InsufficientDataError(
            "indices need at least 5 blocks and 3 window sizes after the head discard"
        )
    t_first, t_last = float(tk[0]), float(tk[-1])
    span = t_last - t_first
    t0 = t_first + policy.head_discard_fraction * span
    tail = t_last - t0
    h_min = policy.min_h_fraction * span
    hs = []
    h = h_min
    while h <= tail * (1 + 1e-12) and len(hs) < policy.h_grid.count:
        hs.append(h)
        h *= policy.h_grid.base
    if len(hs) < 3:
        raise InsufficientDataError(
            f"need >= 3 window sizes in the tail (span {tail:.3g}, h_min {h_min:.3g});"
            " supply deeper data or lower min_h_fraction"
        )
    ts = _weight_grid(t0, t_last, policy.t_grid)
    fts = np.interp(ts, tk, fk)
    phi_max, phi_min = -INF, INF
    per_h = []
    for h in hs:
        ok = ts + h <= t_last + 1e-12
        if not ok.any():
            continue
        t = ts[ok]
        phi = (np.interp(t + h, tk, fk) - fts[ok]) / h
        per_h.append((h, float(phi.min()), float(phi.max())))
        phi_max = max(phi_max, float(phi.max()))
        phi_min = min(phi_min, float(phi.min()))
    f0 = float(np.interp(t0, tk, fk))
    # d_lower/d_upper concern t -> infinity: only anchored windows reaching
    # at least halfway through the tail, short ones just measure local slopes
    anchored = ts[ts - t0 >= max(h_min, 0.5 * tail)]
    phi_a = (np.interp(anchored, tk, fk) - f0) / (anchored - t0)
    phi_max = max(phi_max, float(phi_a.max()))
    phi_min = min(phi_min, float(phi_a.min()))
    tol = policy.tolerance
    dl = _invert(float(phi_a.max()), tol)
    du = _invert(float(phi_a.min()), tol)
    Dl = _invert(phi_max, tol)
    Du = _invert(phi_min, tol)
    interval = (Dl, Du)
    diag = {
        "t0": t0,
        "t_last": t_last,
        "h_values": [p[0] for p in per_h],
        "phi_min_per_h": [p[1] for p in per_h],
        "phi_max_per_h": [p[2] for p in per_h],
        "anchored_phi_min": float(phi_a.min()),
        "anchored_phi_max": float(phi_a.max()),
    }
    return IndexReport(dl, du, Dl, Du, interval, tol, diag)


@dataclass(frozen=True)
class TraceabilityInterval:
    lower: float
    upper: float
    lower_open: bool
    contains_d_upper: bool
    report: IndexReport = field(repr=False, compare=False)


def traceability_interval(
    mu: StepFunction, policy: WindowPolicy = DEFAULT_POLICY
) -> TraceabilityInterval:
    """``[delta_lower, delta_upper]`` intersected with ``(0, inf)``.

    No claim is made about whether the endpoints are attained.
    """
    rep = indices(mu, policy)
    lo, hi = rep.delta_lower, rep.delta_upper
    inside = lo - rep.tolerance <= rep.d_upper <= hi + rep.tolerance
    return TraceabilityInterval(lo, hi, lo <= 0.0, inside, rep)


# ---------------------------------------------------------------------------
# eccentricity


@dataclass(frozen=True)
class EccentricityReport:
    verdict: str  # "eccentric" | "not_eccentric" | "inconclusive"
    witness: tuple[float, ...]
    ratio_inf: float
    inverse_ratio_slope: float
    branch: str


def eccentricity(
    mu: StepFunction, lam: float = 2.0, policy: WindowPolicy = DEFAULT_POLICY
) -> EccentricityReport:
    """Decide whether ``1`` is a limit point of ``S(lam x)/S(x)``.

    Uses the equivalent criterion ``liminf x mu(x)/S(x) = 0``.  On the tail
    the ratio is sampled at block starts (where ``x mu(x)`` is smallest); the
    verdict is eccentric if its running infimum drops below ``tolerance`` or
    if ``S/(x mu)`` keeps growing at least ``policy.eccentric_slope`` per unit
    of ``log x``.  The record-low positions form the witness sequence.
    """
    if not lam > 1:
        raise ValueError("lambda must exceed 1")
    rep = summability(mu, policy)
    if rep.verdict == "inconclusive":
        return EccentricityReport("inconclusive", (), math.nan, math.nan, "inconclusive")
    W = mu.known_width
    starts = mu.block_starts[1:]
    x_lo = W ** policy.head_discard_fraction if W > 1 else 0.0
    xs = starts[(starts >= max(x_lo, 1.0)) & (starts < W)]
    if xs.size > policy.t_grid.count:
        # thin to about one block start per grid step; x mu is smallest there
        grid = np.exp(_weight_grid(math.log(xs[0]), math.log(xs[-1]), policy.t_grid))
        xs = np.unique(xs[np.searchsorted(xs, grid, side="right") - 1])
    if xs.size < 3:
        return EccentricityReport("inconclusive", (), math.nan, math.nan, "inconclusive")
    mus = np.asarray(mu_at(mu, xs))
    if rep.verdict == "divergent":
        S = np.asarray(integral_up(mu, xs))
        branch = "up"
    else:
        S = rep.known_mass - np.asarray(integral_up(mu, xs)) + rep.tail_bound
        branch = "down"
    q = xs * mus / S
    running = np.minimum.accumulate(q)
    record = np.concatenate(([True], running[1:] < running[:-1]))
    wx = xs[record]
    # keep records at least one grid step apart
    keep = np.concatenate(([True], np.diff(np.log(wx)) >= math.log(policy.t_grid.base)))
    if wx.size > 1 and not keep[-1]:
        keep[-1] = True
    witness = tuple(float(v) for v in wx[keep])
    tlog = np.log(xs)
    inv_slope = float(np.polyfit(tlog, 1.0 / q, 1)[0]) if xs.size >= 3 else math.nan
    qinf = float(running[-1])
    if qinf < policy.tolerance or inv_slope > policy.eccentric_slope:
        verdict = "eccentric"
    elif inv_slope < policy.eccentric_slope / 2 and qinf > 10 * policy.tolerance:
        verdict = "not_eccentric"
    else:
        verdict = "inconclusive"
    return EccentricityReport(verdict, witness, qinf, inv_slope, branch)


# ---------------------------------------------------------------------------
# serialization


def write_csv(mu: StepFunction, path: str | Path) -> Path:
    """Write ``value,width`` rows plus a ``.meta.json`` sidecar."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["value", "width"])
        for v, wd in mu.entries():
            w.writerow([f"{v:.17g}", f"{wd:.17g}"])
    meta = {
        "truncated": mu.truncated,
        "total_width": "inf" if math.isinf(mu.total_width) else mu.total_width,
    }
    sidecar = path.with_name(path.name + ".meta.json")
    sidecar.write_text(json.dumps(meta, sort_keys=True) + "\n")
    return sidecar


def read_csv(path: str | Path) -> StepFunction:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    sidecar = path.with_name(path.name + ".meta.json")
    truncated = False
    if sidecar.exists():
        truncated = bool(json.loads(sidecar.read_text()).get("truncated", False))
    pairs: Sequence[tuple[float, float]] = [(float(r["value"]), float(r["width"])) for r in rows]
    return build_step_function(pairs, truncated=truncated)
