"""Finite-matrix checks of singular-value inequalities and Hölder bounds.

The eigensolver is a self-contained cyclic Jacobi iteration so that the
checks do not share code with the library routines they are compared to.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import seqcore, traces
from .seqcore import DEFAULT_POLICY, StepFunction, WindowPolicy

MAX_DIM = 64
OFF_TOL = 1e-12
MAX_SWEEPS = 100
SLACK = 1e-10


class JacobiError(RuntimeError):
    pass


def _as_matrix(m) -> np.ndarray:
    a = np.array(m, dtype=float, copy=True)
    if a.ndim != 2:
        raise ValueError("expected a 2-d matrix")
    if max(a.shape) > MAX_DIM:
        raise ValueError(f"dimension {max(a.shape)} exceeds {MAX_DIM}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def jacobi_eigenvalues(sym) -> np.ndarray:
    """Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations."""
    A = _as_matrix(sym)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("matrix must be square")
    A = 0.5 * (A + A.T)
    scale = max(1.0, float(np.abs(A).max()))
    mask = ~np.eye(n, dtype=bool)
    for _ in range(MAX_SWEEPS):
        # summed directly: ||A||^2 - ||diag||^2 cancels far above the tolerance
        off = math.sqrt(float(np.sum(A[mask] ** 2)))
        if off < OFF_TOL * scale:
            return np.diag(A).copy()
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # A <- J^T A J with J the (p, q) rotation
                rp, rq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * rp - s * rq
                A[q, :] = s * rp + c * rq
                cp, cq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * cp - s * cq
                A[:, q] = s * cp + c * cq
    raise JacobiError(f"no convergence after {MAX_SWEEPS} sweeps")


def singular_values(m) -> np.ndarray:
    """Singular values, non-increasing: square roots of the eigenvalues of ``m^T m``."""
    a = _as_matrix(m)
    ev = jacobi_eigenvalues(a.T @ a)
    return np.sort(np.sqrt(np.clip(ev, 0.0, None)))[::-1]


@dataclass(frozen=True)
class InequalityCheck:
    lhs: float
    rhs: float
    passed: bool

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    def __iter__(self):
        return iter((self.lhs, self.rhs, self.passed))


def _pair(a, b):
    a, b = _as_matrix(a), _as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"shapes {a.shape} and {b.shape} cannot be multiplied")
    sa, sb, sab = singular_values(a), singular_values(b), singular_values(a @ b)
    k = max(sa.size, sb.size, sab.size)
    pad = lambda x: np.concatenate((x, np.zeros(k - x.size)))  # noqa: E731
    return pad(sa), pad(sb), pad(sab)


def coweyl_check(a, b, n: int, _sv=None) -> InequalityCheck:
    """``sum_{i >= 2n} mu_i(ab) <= sum_{i >= n} mu_i(a) mu_i(b)`` (0-based)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    sa, sb, sab = _sv or _pair(a, b)
    lhs = float(sab[2 * n:].sum())
    rhs = float((sa[n:] * sb[n:]).sum())
    return InequalityCheck(lhs, rhs, lhs <= rhs + SLACK)


def weyl_check(a, b, N: int, _sv=None) -> InequalityCheck:
    """``sum_{i < N} mu_i(ab) <= sum_{i < N} mu_i(a) mu_i(b)``."""
    if N < 0:
        raise ValueError("N must be nonnegative")
    sa, sb, sab = _sv or _pair(a, b)
    lhs = float(sab[:N].sum())
    rhs = float((sa[:N] * sb[:N]).sum())
    return InequalityCheck(lhs, rhs, lhs <= rhs + SLACK)


def holder_constant(p: float) -> float:
    """``C_p = 1 + 2 sqrt(p - 1) / p``; equals 1 at ``p = 1`` and ``p = inf``."""
    if math.isinf(p) and p > 0:
        return 1.0
    if not p >= 1:
        raise ValueError("p must be at least 1")
    return 1.0 + 2.0 * math.sqrt(p - 1.0) / p


def conjugate_exponent(p: float) -> float:
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


# ---------------------------------------------------------------------------
# Hölder inequality for commuting diagonal operators


def diagonal(exponent: float, N: int) -> StepFunction:
    """Diagonal operator with entries ``n^{-exponent}``, ``n = 1..N`` (truncated)."""
    n = np.arange(1, N + 1, dtype=float)
    return seqcore.from_arrays(n**-exponent, np.ones(N), truncated=True)


def diagonal_product(a: StepFunction, b: StepFunction) -> StepFunction:
    """Pointwise product of two diagonals listed in the same (decreasing) order."""
    W = min(a.known_width, b.known_width)
    ends = np.union1d(a.block_ends, b.block_ends)
    ends = ends[ends <= W]
    starts = np.concatenate(([0.0], ends[:-1]))
    mid = 0.5 * (starts + ends)
    vals = np.asarray(seqcore.mu_at(a, mid)) * np.asarray(seqcore.mu_at(b, mid))
    return seqcore.from_arrays(vals, ends - starts, truncated=a.truncated or b.truncated)


@dataclass(frozen=True)
class HolderReport:
    trace_ab: float
    trace_a_p: float
    trace_b_q: float
    constant: float
    bound: float
    passed: bool
    heuristic: bool
    procedure: str

    @property
    def lhs(self) -> float:
        return self.trace_ab

    @property
    def rhs(self) -> float:
        return self.bound

    def __iter__(self):
        return iter((self.lhs, self.rhs, self.passed))


def holder_check(
    a: StepFunction,
    b: StepFunction,
    p: float,
    proc: traces.LimitProcedure = traces.DEFAULT_PROCEDURES[0],
    policy: WindowPolicy = DEFAULT_POLICY,
    monotone: bool = False,
    slack: float = 0.05,
) -> HolderReport:
    """``tau(|ab|) <= C_p tau(|a|^p)^{1/p} tau(|b|^q)^{1/q}`` with Dixmier traces.

    ``monotone=True`` uses the constant 1 of the monotone case; whether the
    emulated procedure is monotone in that sense is not established, so the
    result is flagged heuristic.
    """
    q = conjugate_exponent(p)
    if math.isinf(p) or math.isinf(q):
        raise ValueError("finite exponents are required for Dixmier emulation")
    ab = diagonal_product(a, b)
    t_ab = traces.dixmier(ab, 1.0, proc, policy).value
    t_a = traces.dixmier(a, p, proc, policy).value
    t_b = traces.dixmier(b, q, proc, policy).value
    C = 1.0 if monotone else holder_constant(p)
    bound = C * max(t_a, 0.0) ** (1 / p) * max(t_b, 0.0) ** (1 / q)
    return HolderReport(t_ab, t_a, t_b, C, bound, abs(t_ab) <= bound * (1 + slack), monotone, proc.kind)


# ---------------------------------------------------------------------------
# seeded sweep


def appendix_suite(seed: int = 0, pairs: int = 200, dim: int = 8, N: int = 1 << 18) -> dict:
    """Run the randomized co-Weyl/Weyl sweep and the Hölder cases; JSON-ready."""
    rng = np.random.default_rng(seed)
    worst_coweyl = math.inf
    worst_weyl = math.inf
    fails = []
    for k in range(pairs):
        a = rng.standard_normal((dim, dim))
        b = rng.standard_normal((dim, dim))
        sv = _pair(a, b)
        for n in range(4):
            r = coweyl_check(a, b, n, sv)
            worst_coweyl = min(worst_coweyl, r.slack)
            if not r.passed:
                fails.append({"pair": k, "check": "coweyl", "n": n})
        for M in range(1, dim + 1):
            r = weyl_check(a, b, M, sv)
            worst_weyl = min(worst_weyl, r.slack)
            if not r.passed:
                fails.append({"pair": k, "check": "weyl", "N": M})
    grid = [1.0, 1.25, 1.5, 2.0, 3.0, 4.0, 8.0, 100.0, math.inf]
    consts = {str(p): holder_constant(p) for p in grid}
    cases = []
    half = diagonal(0.5, N)
    for label, a, b, p, mono in (
        ("a=b=n^-1/2, p=2", half, half, 2.0, False),
        ("n^-2/3 * n^-1/3, p=3/2", diagonal(2 / 3, N), diagonal(1 / 3, N), 1.5, False),
        ("n^-2/3 * n^-1/3, p=3/2, C=1 (heuristic)", diagonal(2 / 3, N), diagonal(1 / 3, N), 1.5, True),
    ):
        r = holder_check(a, b, p, traces.DEFAULT_PROCEDURES[0], monotone=mono)
        cases.append({"case": label, "lhs": r.lhs, "rhs": r.rhs, "pass": r.passed, "heuristic": r.heuristic})
    const_ok = holder_constant(2) == 2.0 and all(1.0 <= c <= 2.0 for c in consts.values())
    return {
        "seed": seed,
        "pairs": pairs,
        "dim": dim,
        "coweyl_min_slack": worst_coweyl,
        "weyl_min_slack": worst_weyl,
        "failures": fails,
        "holder_constants": consts,
        "holder_constants_ok": const_ok,
        "holder_cases": cases,
        "all_pass": not fails and const_ok and all(c["pass"] for c in cases),
    }
