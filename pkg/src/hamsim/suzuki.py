"""Higher-order split-operator plans with rigorous step counts and bounds.

A plan is the flattened exponential sequence of the order-2k recursive
integrator for a sum of m terms: the order-2 base is the symmetric sweep
e^{H_1 l/2} ... e^{H_m l/2} e^{H_m l/2} ... e^{H_1 l/2}, and each order
step composes five scaled copies of the previous one with coefficients
p_k, p_k, 1-4p_k, p_k, p_k where p_k = (4 - 4^(1/(2k-1)))^(-1).  Adjacent
exponentials of the same term are always merged, which pins the plan
length at exactly 2(m-1)5^(k-1) + 1.

The bound side gives: a closed-form error bound for the r-fold slicing,
its validity restrictions, the slice count r needed for a target error,
and exponential-count bounds with their validity windows.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import mpmath
import numpy as np

from .config import TOL, PlanError, ValidityWindowWarning
from .numerics import hermitian_expm, require_hermitian, require_state

TermEvolver = Callable[[float, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class PlanStep:
    term: int        # 1-based summand index
    fraction: float  # of the slice time


@dataclass(frozen=True)
class ProductFormulaPlan:
    k: int
    m: int
    steps: tuple[PlanStep, ...]

    def __post_init__(self) -> None:
        expected = exponential_count(self.k, self.m)
        if len(self.steps) != expected:
            raise PlanError(
                f"plan has {len(self.steps)} steps, expected {expected}")
        sums = [0.0] * (self.m + 1)
        prev = 0
        for st in self.steps:
            if not 1 <= st.term <= self.m:
                raise PlanError(f"step term {st.term} out of range 1..{self.m}")
            if st.term == prev:
                raise PlanError(f"unmerged adjacent steps for term {st.term}")
            if not (math.isfinite(st.fraction) and st.fraction != 0.0):
                raise PlanError(f"bad step fraction {st.fraction}")
            if abs(st.fraction) > 1.0 + 1e-12:
                raise PlanError(f"step fraction {st.fraction} out of range")
            sums[st.term] += st.fraction
            prev = st.term
        for j in range(1, self.m + 1):
            if abs(sums[j] - 1.0) > TOL.plan_fraction_sum:
                raise PlanError(
                    f"term {j} fractions sum to {sums[j]!r}, expected 1")


def exponential_count(k: int, m: int) -> int:
    """Exact merged plan length, 2(m-1)5^(k-1) + 1."""
    _check_km(k, m)
    return 2 * (m - 1) * 5 ** (k - 1) + 1


def p_coefficient(k: int) -> float:
    """Recursion coefficient p_k for the order step 2k-2 -> 2k, k >= 2."""
    if not (isinstance(k, int) and k >= 2):
        raise PlanError(f"p_coefficient needs integer k >= 2, got {k}")
    return float(1.0 / (4.0 - 4.0 ** (1.0 / (2 * k - 1))))


def _check_km(k: int, m: int) -> None:
    if not (isinstance(k, int) and k >= 1):
        raise PlanError(f"order parameter k must be a positive integer, got {k}")
    if not (isinstance(m, int) and m >= 1):
        raise PlanError(f"term count m must be a positive integer, got {m}")


def _append_merged(out: list[list], term: int, frac) -> None:
    if out and out[-1][0] == term:
        out[-1][1] += frac
    else:
        out.append([term, frac])


def _emit(k: int, m: int, scale, out: list[list]) -> None:
    if k == 1:
        half = scale / 2
        for j in range(1, m + 1):
            _append_merged(out, j, half)
        for j in range(m, 0, -1):
            _append_merged(out, j, half)
        return
    p = 1 / (4 - mpmath.power(4, mpmath.mpf(1) / (2 * k - 1)))
    for c in (p, p, 1 - 4 * p, p, p):
        _emit(k - 1, m, c * scale, out)


@lru_cache(maxsize=None)
def build_plan(k: int, m: int) -> ProductFormulaPlan:
    """Merged exponential sequence of the order-2k integrator for m terms.

    Fractions are accumulated in extended precision and rounded once, so
    per-term sums hit 1 to full double accuracy at any supported order.
    """
    _check_km(k, m)
    out: list[list] = []
    with mpmath.workdps(60):
        _emit(k, m, mpmath.mpf(1), out)
        steps = tuple(PlanStep(t, float(f)) for t, f in out)
    return ProductFormulaPlan(k, m, steps)


def _check_tau_eps(tau: float, eps: float) -> None:
    if not (math.isfinite(tau) and tau >= 0):
        raise PlanError(f"tau must be a finite nonnegative number, got {tau}")
    if not (math.isfinite(eps) and eps > 0):
        raise PlanError(f"eps must be a finite positive number, got {eps}")


def choose_k(m: int, tau: float, eps: float) -> int:
    """Near-optimal integrator order: round(sqrt(log5(m tau/eps) + 1)/2).

    Clamped to at least 1; ties round up.
    """
    _check_km(1, m)
    _check_tau_eps(tau, eps)
    if tau == 0:
        return 1
    v = math.log(m * tau / eps, 5) + 1.0
    if v <= 0:
        return 1
    return max(1, int(math.floor(0.5 * math.sqrt(v) + 0.5)))


def choose_r(k: int, m: int, tau: float, eps: float) -> int:
    """Slice count ceil(4 * 5^(k-1/2) (m tau)^(1+1/2k) / eps^(1/2k)).

    Guarantees the closed-form error bound is at most eps inside the window
    eps <= 1 <= 2 m 5^(k-1) tau; outside the window a warning is issued and
    the formula value is still returned.
    """
    _check_km(k, m)
    _check_tau_eps(tau, eps)
    if tau == 0:
        return 1
    if not eps <= 1.0 <= 2.0 * m * 5 ** (k - 1) * tau:
        warnings.warn(
            f"slice-count formula used outside its window "
            f"(eps={eps}, 2m5^(k-1)tau={2.0 * m * 5 ** (k - 1) * tau})",
            ValidityWindowWarning, stacklevel=2)
    val = 4.0 * 5.0 ** (k - 0.5) * (m * tau) ** (1.0 + 0.5 / k) / eps ** (0.5 / k)
    return max(1, int(math.ceil(val)))


def restriction_values(k: int, m: int, tau: float, r: int) -> tuple[float, float]:
    """The two validity ratios of the closed-form bound; both must be <= 1."""
    _check_km(k, m)
    _check_tau_eps(tau, 1.0)
    if not (isinstance(r, int) and r >= 1):
        raise PlanError(f"slice count r must be a positive integer, got {r}")
    x = 2.0 * 5.0 ** (k - 1) * m * tau
    return 2.0 * x / r, (16.0 / 3.0) * x ** (2 * k + 1) / float(r) ** (2 * k)


def restriction_check(k: int, m: int, tau: float, r: int) -> bool:
    a, b = restriction_values(k, m, tau, r)
    return a <= 1.0 and b <= 1.0


def integrator_error_bound(k: int, m: int, tau: float, r: int) -> float:
    """Closed-form bound 5 (2 * 5^(k-1) m tau)^(2k+1) / r^(2k).

    Raises PlanError naming the violated condition when the restrictions
    do not hold.
    """
    a, b = restriction_values(k, m, tau, r)
    if a > 1.0:
        raise PlanError(f"linear restriction violated: 4 m 5^(k-1) tau / r = {a}")
    if b > 1.0:
        raise PlanError(
            f"power restriction violated: (16/3)(2  5^(k-1) m tau)^(2k+1)/r^(2k) = {b}")
    if tau == 0:
        return 0.0
    x = 2.0 * 5.0 ** (k - 1) * m * tau
    return 5.0 * x ** (2 * k + 1) / float(r) ** (2 * k)


def integrator_error_bound_sharp(k: int, m: int, tau: float, r: int) -> float:
    """Sharper pre-form (1 + (8/3)(2 m 5^(k-1) tau / r)^(2k+1))^r - 1.

    Valid whenever the linear restriction alone holds.  Evaluated through
    expm1/log1p so tiny per-slice terms survive the r-fold compounding.
    """
    a, _ = restriction_values(k, m, tau, r)
    if a > 1.0:
        raise PlanError(f"linear restriction violated: 4 m 5^(k-1) tau / r = {a}")
    if tau == 0:
        return 0.0
    u = (8.0 / 3.0) * (2.0 * m * 5.0 ** (k - 1) * tau / r) ** (2 * k + 1)
    return math.expm1(r * math.log1p(u))


@dataclass(frozen=True)
class BoundResult:
    value: float
    within_window: bool


def nexp_bound(k: int, m: int, tau: float, eps: float) -> BoundResult:
    """Exponential-count bound 2 m 5^(2k) (m tau)^(1+1/2k) / eps^(1/2k).

    The window flag records eps <= 1 <= 2 m 5^(k-1) tau; outside it the
    value is still the formula's, flagged rather than raised.
    """
    _check_km(k, m)
    _check_tau_eps(tau, eps)
    window = eps <= 1.0 <= 2.0 * m * 5 ** (k - 1) * tau
    if tau == 0:
        return BoundResult(0.0, window)
    value = 2.0 * m * 5.0 ** (2 * k) * (m * tau) ** (1.0 + 0.5 / k) / eps ** (0.5 / k)
    return BoundResult(value, window)


def nexp_bound_optimal(m: int, tau: float, eps: float) -> tuple[int, BoundResult]:
    """Order choice and the order-free bound 4 m^2 tau e^(2 sqrt(ln5 ln(m tau/eps))).

    Returns (k, result) with the window flag recording eps <= 1 <= m tau / 25.
    """
    _check_km(1, m)
    _check_tau_eps(tau, eps)
    k = choose_k(m, tau, eps)
    window = eps <= 1.0 <= m * tau / 25.0
    if tau == 0:
        return k, BoundResult(0.0, window)
    ln_ratio = max(math.log(m * tau / eps), 0.0)
    value = 4.0 * m * m * tau * math.exp(2.0 * math.sqrt(math.log(5.0) * ln_ratio))
    return k, BoundResult(value, window)


def hermitian_evolver(H: np.ndarray) -> TermEvolver:
    """Exact evolver psi -> e^{-iHs} psi via a one-time eigendecomposition."""
    H = require_hermitian(H, name="term")
    w, V = np.linalg.eigh(H)
    Vh = V.conj().T

    def evolve(s: float, psi: np.ndarray) -> np.ndarray:
        return V @ (np.exp(-1j * w * s) * (Vh @ psi))

    return evolve


def simulate(terms: Sequence[TermEvolver], t: float, k: int, r: int,
             psi: np.ndarray) -> np.ndarray:
    """Apply the r-fold order-2k plan for the given term evolvers to psi.

    Each evolver maps (s, psi) to e^{-i H_j s} psi.  Exactly
    r * (2(m-1)5^(k-1)+1) evolver calls are made; the output norm is
    validated, not silently renormalized.
    """
    m = len(terms)
    _check_km(k, m)
    if not (isinstance(r, int) and r >= 1):
        raise PlanError(f"slice count r must be a positive integer, got {r}")
    psi = require_state(psi)
    if t == 0:
        return psi.copy()
    plan = build_plan(k, m)
    slice_t = t / r
    for _ in range(r):
        for st in plan.steps:
            psi = terms[st.term - 1](st.fraction * slice_t, psi)
    return require_state(psi)


def plan_unitary(hams: Sequence[np.ndarray], t: float, k: int, r: int) -> np.ndarray:
    """Dense unitary of the full r-fold plan, one slice raised to the r-th power.

    Equivalent to simulate() with exact term evolvers, up to floating-point
    reassociation; used for fast error sweeps.
    """
    m = len(hams)
    _check_km(k, m)
    if not (isinstance(r, int) and r >= 1):
        raise PlanError(f"slice count r must be a positive integer, got {r}")
    dim = np.asarray(hams[0]).shape[0]
    if t == 0:
        return np.eye(dim, dtype=complex)
    plan = build_plan(k, m)
    slice_t = t / r
    cache: dict[tuple[int, float], np.ndarray] = {}
    U = np.eye(dim, dtype=complex)
    for st in plan.steps:
        key = (st.term, st.fraction)
        if key not in cache:
            cache[key] = hermitian_expm(hams[st.term - 1], st.fraction * slice_t)
        U = cache[key] @ U
    return np.linalg.matrix_power(U, r)
