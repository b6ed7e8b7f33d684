"""Product-formula plans, step-count/error bounds, and simulation."""

import math

import numpy as np
import pytest

from hamsim import numerics, suzuki
from hamsim.config import PlanError, ValidityWindowWarning
from hamsim.suzuki import BoundResult, PlanStep

# Frozen reference constants, computed independently with mpmath at 40
# digits from the defining formulas.
P2 = 0.4144907717943757371423541
P3 = 0.373065827733272824775863
P4 = 0.3595846493499922526124173
LEMMA_1_2_1_253 = 320.0 / 64009.0            # 0.0049992969738630505
SHARP_1_2_1_253 = 0.0026698353493890298113
NEXP_1_2_1_001 = 2828.4271247461900976       # = 2000 sqrt(2)
NEXP_FREE_2_100_1E3 = 11322201.138201960873


def test_p_coefficient_frozen_values():
    assert suzuki.p_coefficient(2) == pytest.approx(P2, rel=1e-15)
    assert suzuki.p_coefficient(3) == pytest.approx(P3, rel=1e-15)
    assert suzuki.p_coefficient(4) == pytest.approx(P4, rel=1e-15)
    with pytest.raises(PlanError):
        suzuki.p_coefficient(1)


def test_plan_base_cases():
    plan = suzuki.build_plan(1, 2)
    assert plan.steps == (PlanStep(1, 0.5), PlanStep(2, 1.0), PlanStep(1, 0.5))
    assert suzuki.build_plan(1, 1).steps == (PlanStep(1, 1.0),)
    plan3 = suzuki.build_plan(1, 3)
    assert plan3.steps == (PlanStep(1, 0.5), PlanStep(2, 0.5), PlanStep(3, 1.0),
                           PlanStep(2, 0.5), PlanStep(1, 0.5))


def test_plan_second_order_two_terms():
    # Hand-expanded merge of the five scaled copies of the order-2 base.
    p = suzuki.p_coefficient(2)
    q = 1.0 - 4.0 * p
    expected = [(1, p / 2), (2, p), (1, p), (2, p), (1, (p + q) / 2),
                (2, q), (1, (p + q) / 2), (2, p), (1, p), (2, p), (1, p / 2)]
    plan = suzuki.build_plan(2, 2)
    assert len(plan.steps) == 11
    for st, (term, frac) in zip(plan.steps, expected):
        assert st.term == term
        assert st.fraction == pytest.approx(frac, rel=1e-14)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
@pytest.mark.parametrize("m", [1, 2, 3, 5, 8])
def test_plan_invariants(k, m):
    plan = suzuki.build_plan(k, m)
    assert len(plan.steps) == suzuki.exponential_count(k, m)
    assert len(plan.steps) == 2 * (m - 1) * 5 ** (k - 1) + 1
    sums = {}
    prev = None
    for st in plan.steps:
        assert 1 <= st.term <= m
        assert st.term != prev
        assert st.fraction != 0.0
        sums[st.term] = sums.get(st.term, 0.0) + st.fraction
        prev = st.term
    for j in range(1, m + 1):
        assert sums[j] == pytest.approx(1.0, abs=1e-13)


def test_plan_is_palindromic():
    plan = suzuki.build_plan(3, 4)
    rev = plan.steps[::-1]
    for a, b in zip(plan.steps, rev):
        assert a.term == b.term
        assert a.fraction == pytest.approx(b.fraction, rel=1e-13)


def test_plan_validation_rejects_garbage():
    with pytest.raises(PlanError):
        suzuki.ProductFormulaPlan(1, 2, (PlanStep(1, 0.5), PlanStep(2, 1.0)))
    with pytest.raises(PlanError):
        suzuki.ProductFormulaPlan(
            1, 2, (PlanStep(1, 0.5), PlanStep(1, 1.0), PlanStep(2, 0.5)))
    with pytest.raises(PlanError):
        suzuki.build_plan(0, 2)
    with pytest.raises(PlanError):
        suzuki.build_plan(1, 0)


def test_choose_k_values():
    assert suzuki.choose_k(2, 100.0, 1e-3) == 1
    assert suzuki.choose_k(1, 5.0 ** 35, 1.0) == 3
    assert suzuki.choose_k(1, 1.0, 1.0) == 1
    # argument below 1 clamps to the minimum order
    assert suzuki.choose_k(1, 1e-6, 1.0) == 1
    with pytest.raises(PlanError):
        suzuki.choose_k(1, 1.0, 0.0)


def test_choose_k_grows_slowly():
    prev = 1
    for expo in range(0, 60, 5):
        k = suzuki.choose_k(1, 10.0 ** expo, 1.0)
        assert k >= prev
        prev = k
    assert prev >= 3


def test_choose_r_frozen_values():
    assert suzuki.choose_r(1, 2, 1.0, 0.01) == 253
    assert suzuki.choose_r(2, 2, 5.0, 0.01) == 2515
    assert suzuki.choose_r(1, 1, 1.0, 1.0) == 9


def test_choose_r_scaling_in_tau():
    # doubling tau should multiply r by about 2^(1+1/2k)
    r1 = suzuki.choose_r(1, 2, 8.0, 0.01)
    r2 = suzuki.choose_r(1, 2, 16.0, 0.01)
    assert r2 / r1 == pytest.approx(2.0 ** 1.5, rel=2e-3)


def test_choose_r_window_warning():
    with pytest.warns(ValidityWindowWarning):
        suzuki.choose_r(1, 1, 1.0, 2.0)       # eps > 1
    with pytest.warns(ValidityWindowWarning):
        suzuki.choose_r(1, 1, 0.1, 0.5)       # 2 m 5^(k-1) tau < 1
    import warnings as _w
    with _w.catch_warnings():
        _w.simplefilter("error")
        suzuki.choose_r(1, 2, 1.0, 0.01)      # inside the window: silent


def test_integrator_error_bound_frozen_value():
    val = suzuki.integrator_error_bound(1, 2, 1.0, 253)
    assert val == pytest.approx(LEMMA_1_2_1_253, rel=1e-12)
    assert val == pytest.approx(0.0049993, rel=1e-4)


def test_integrator_error_bound_r_scaling():
    # quadrupling r divides the k=2 bound by 4^4
    b1 = suzuki.integrator_error_bound(2, 2, 1.0, 400)
    b2 = suzuki.integrator_error_bound(2, 2, 1.0, 1600)
    assert b1 / b2 == pytest.approx(4.0 ** 4, rel=1e-12)


def test_integrator_error_bound_zero_time():
    assert suzuki.integrator_error_bound(1, 2, 0.0, 10) == 0.0


def test_integrator_error_bound_restriction_errors():
    # r=4: the linear condition 4*2*1/4 = 2 > 1 fails
    with pytest.raises(PlanError, match="linear"):
        suzuki.integrator_error_bound(1, 2, 1.0, 4)
    # r=10: linear is 0.8 but the power condition is 16/3*64/100 = 3.41
    with pytest.raises(PlanError, match="power"):
        suzuki.integrator_error_bound(1, 2, 1.0, 10)
    assert not suzuki.restriction_check(1, 2, 1.0, 10)
    a, b = suzuki.restriction_values(1, 2, 1.0, 10)
    assert a == pytest.approx(0.8)
    assert b == pytest.approx(1024.0 / 300.0)


def test_sharp_bound_frozen_value_and_dominance():
    sharp = suzuki.integrator_error_bound_sharp(1, 2, 1.0, 253)
    assert sharp == pytest.approx(SHARP_1_2_1_253, rel=1e-12)
    # the pre-form only needs the linear restriction
    suzuki.integrator_error_bound_sharp(1, 2, 1.0, 10)
    with pytest.raises(PlanError):
        suzuki.integrator_error_bound_sharp(1, 2, 1.0, 4)
    # and never exceeds the simplified closed form where both apply
    for k in (1, 2, 3):
        for m in (1, 2, 4):
            for tau in (0.5, 1.0, 10.0):
                r = suzuki.choose_r(k, m, tau, 0.01)
                lemma = suzuki.integrator_error_bound(k, m, tau, r)
                assert suzuki.integrator_error_bound_sharp(k, m, tau, r) <= lemma


def test_nexp_bound_frozen_value():
    res = suzuki.nexp_bound(1, 2, 1.0, 0.01)
    assert isinstance(res, BoundResult)
    assert res.value == pytest.approx(NEXP_1_2_1_001, rel=1e-12)
    assert res.within_window
    assert not suzuki.nexp_bound(1, 2, 1.0, 2.0).within_window
    assert not suzuki.nexp_bound(1, 1, 0.01, 0.5).within_window


def test_nexp_bound_dominates_actual_plan_cost():
    # Inside the window the bound covers the exact merged count times the
    # chosen slice number.
    for k in (1, 2, 3):
        for m in (1, 2, 4):
            for tau in (1.0, 10.0, 100.0):
                for eps in (1e-4, 0.01, 1.0):
                    res = suzuki.nexp_bound(k, m, tau, eps)
                    if not res.within_window:
                        continue
                    r = suzuki.choose_r(k, m, tau, eps)
                    actual = r * suzuki.exponential_count(k, m)
                    assert actual <= res.value


def test_nexp_bound_optimal_frozen_value():
    k, res = suzuki.nexp_bound_optimal(2, 100.0, 1e-3)
    assert k == 1
    assert res.value == pytest.approx(NEXP_FREE_2_100_1E3, rel=1e-12)
    assert res.within_window
    assert not suzuki.nexp_bound_optimal(1, 10.0, 0.5)[1].within_window


def test_nexp_bound_optimal_dominates_specific():
    for m in (1, 2, 4):
        for tau in (30.0, 100.0, 1000.0):
            for eps in (1e-6, 1e-3, 1.0):
                k, free = suzuki.nexp_bound_optimal(m, tau, eps)
                if not free.within_window:
                    continue
                specific = suzuki.nexp_bound(k, m, tau, eps)
                assert free.value >= specific.value * (1.0 - 1e-12)


def _random_terms(dim, m, seed, total_norm=1.0):
    rng = np.random.default_rng(seed)
    hams = [numerics.random_hermitian(dim, rng) for _ in range(m)]
    scale = total_norm / numerics.spectral_norm(sum(hams))
    return [H * scale for H in hams]


def test_simulate_zero_time_is_identity():
    rng = np.random.default_rng(0)
    psi = numerics.random_state(4, rng)
    terms = [suzuki.hermitian_evolver(H) for H in _random_terms(4, 2, 1)]
    out = suzuki.simulate(terms, 0.0, 1, 5, psi)
    assert np.array_equal(out, psi)


def test_simulate_single_term_is_exact():
    rng = np.random.default_rng(2)
    dim = 8
    H = numerics.random_hermitian(dim, rng, norm=1.0)
    psi = numerics.random_state(dim, rng)
    out = suzuki.simulate([suzuki.hermitian_evolver(H)], 1.2, 2, 3, psi)
    expected = numerics.hermitian_expm(H, 1.2) @ psi
    assert np.linalg.norm(out - expected) < 1e-11


def test_simulate_meets_worked_error_bound():
    hams = _random_terms(8, 2, seed=7, total_norm=1.0)  # tau = 1 at t = 1
    rng = np.random.default_rng(8)
    psi = numerics.random_state(8, rng)
    out = suzuki.simulate([suzuki.hermitian_evolver(H) for H in hams],
                          1.0, 1, 253, psi)
    exact = numerics.hermitian_expm(sum(hams), 1.0) @ psi
    dist = numerics.trace_distance(numerics.pure_density(out),
                                   numerics.pure_density(exact))
    assert dist <= LEMMA_1_2_1_253


def test_simulate_calls_each_evolver_per_plan():
    calls = []
    dim = 4
    hams = _random_terms(dim, 3, seed=3)
    evs = []
    for j, H in enumerate(hams):
        base = suzuki.hermitian_evolver(H)
        evs.append(lambda s, psi, j=j, base=base: (calls.append(j), base(s, psi))[1])
    rng = np.random.default_rng(4)
    psi = numerics.random_state(dim, rng)
    suzuki.simulate(evs, 0.5, 2, 4, psi)
    assert len(calls) == 4 * suzuki.exponential_count(2, 3)


def test_plan_unitary_matches_sequential_simulation():
    hams = _random_terms(4, 3, seed=5)
    rng = np.random.default_rng(6)
    psi = numerics.random_state(4, rng)
    U = suzuki.plan_unitary(hams, 0.9, 2, 7)
    via_states = suzuki.simulate([suzuki.hermitian_evolver(H) for H in hams],
                                 0.9, 2, 7, psi)
    assert np.linalg.norm(U @ psi - via_states) < 1e-12


@pytest.mark.parametrize("k,expected_slope", [(1, -2.0), (2, -4.0)])
def test_error_scaling_order(k, expected_slope):
    hams = _random_terms(8, 2, seed=11, total_norm=1.0)
    total = sum(hams)
    exact = numerics.hermitian_expm(total, 1.0)
    rs = [4, 8, 16, 32, 64, 128, 256]
    errs = [numerics.unitary_diff_norm(suzuki.plan_unitary(hams, 1.0, k, r), exact)
            for r in rs]
    pts = [(math.log(r), math.log(e)) for r, e in zip(rs, errs) if e > 1e-11]
    assert len(pts) >= 3
    slope = np.polyfit([p[0] for p in pts], [p[1] for p in pts], 1)[0]
    assert abs(slope - expected_slope) < 0.3
