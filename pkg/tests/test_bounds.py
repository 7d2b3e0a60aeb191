import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from empbern.bounds import (
    bound_cov_bernstein,
    bound_cov_ps,
    bound_iid_biased,
    bound_iid_unbiased,
    bound_thm1,
    bound_thm2,
    bound_thm3,
    risk_bound_ivanov,
    risk_bound_tikhonov,
)
from empbern.exceptions import DomainError, UndefinedStatisticError
from empbern.mixing import MixingModel

NONE = MixingModel.none()
E = math.e


def test_thm1_hand_example():
    r = bound_thm1(1.0, 2, 1, 1.0, 2 / E, NONE)
    assert r.value == pytest.approx(math.sqrt(3) + 4 / 3, rel=1e-14)
    assert r.feasible


def test_thm1_zero_variance():
    r = bound_thm1(0.0, 100, 2, 1.0, 0.1, NONE)
    assert r.slow_term == 0.0
    assert r.value == pytest.approx(8 * 2 / 300 * math.log(20))


def test_thm2_oracle():
    n, tau, c, v, d = 2048, 8, 1.0, 0.1, 0.05
    oracle = math.sqrt(2 * tau * v / n * (1 + 2 * math.log(4 / d))) + 32 * tau * c / (3 * n) * math.log(4 / d)
    assert bound_thm2(v, n, tau, c, d, NONE).value == pytest.approx(oracle, rel=1e-14)


def test_thm2_identity_gram_slow_term_free_of_tau():
    n, d = 4096, 0.05
    slows = [bound_thm2(1.0 / tau, n, tau, 1.0, d, NONE).slow_term for tau in (1, 2, 4, 8)]
    np.testing.assert_allclose(slows, math.sqrt(2 * (1 + 2 * math.log(4 / d)) / n), rtol=1e-14)


def test_infeasible_sentinel():
    model = MixingModel.exponential(0.01)
    for r in (
        bound_thm1(0.5, 1000, 2, 1.0, 0.05, model),
        bound_thm2(0.5, 1000, 2, 1.0, 0.05, model),
        bound_thm3(0.5, 1000, 2, 1.0, 0.05, model),
        bound_cov_ps(1000, 2, 1.0, 0.05, model),
        bound_cov_bernstein(1000, 2, 1.0, 0.05, model),
    ):
        assert not r.feasible and r.value == math.inf
        assert r.delta_effective["delta_tau"] <= 0


def test_thm3_oracle_and_flooring():
    n, tau, c, v, d = 1000, 14, 1.0, 0.2, 0.1
    model = MixingModel.exponential(0.6)
    dt = d - 2 * (n // (2 * tau) - 1) * math.exp(-0.6 * tau)
    oracle = math.sqrt(2 * tau * v / n * (1 + 2 * math.log(4 / dt))) + 22 * tau * c / n * math.log(4 / dt)
    assert bound_thm3(v, n, tau, c, d, model).value == pytest.approx(oracle, rel=1e-13)
    zero = bound_thm3(0.0, n, tau, c, d, model)
    neg = bound_thm3(-0.3, n, tau, c, d, model)
    assert zero.slow_term == 0.0 and neg.value == zero.value
    assert "floored" in " ".join(neg.flags)
    with pytest.raises(DomainError):
        bound_thm3(v, n, tau, c, 0.8, model)


def test_iid_examples():
    d = 2 / E
    r = bound_iid_biased(1.0, 1, 1.0, d)
    assert r.value == pytest.approx(1 + math.sqrt(2) + 16 / 3, rel=1e-14)
    assert bound_iid_biased(0.0, 5, 1.0, 0.1).slow_term == 0.0
    # two antipodal unit vectors: sum over i != j of |x_i - x_j|^2 = 8
    L = math.log(20)
    r = bound_iid_unbiased(8.0, 2, 1.0, 0.1)
    assert r.value == pytest.approx(2 * (1 + math.sqrt(2 * L)) + 11 * L, rel=1e-14)
    assert bound_iid_unbiased(0.0, 3, 1.0, 0.1).slow_term == 0.0
    with pytest.raises(DomainError):
        bound_iid_unbiased(8.0, 2, 1.0, 0.75)


def test_thm_vs_iid_constants():
    # thm2/thm3 at delta use ln(4/delta); the iid forms at delta/2 use the same argument
    n, d = 500, 0.05
    t2 = bound_thm2(0.3, n, 1, 1.0, d, NONE)
    p4 = bound_iid_biased(0.3 * n, n, 1.0, d / 2)
    assert t2.fast_term / (p4.fast_term / n) == pytest.approx(2.0, rel=1e-14)
    t3 = bound_thm3(0.3, n, 1, 1.0, d, NONE)
    p5 = bound_iid_unbiased(0.3 * n, n, 1.0, d / 2)
    assert t3.fast_term / (p5.fast_term / n) == pytest.approx(2.0, rel=1e-14)


def test_cov_ps_example():
    r = bound_cov_ps(200, 1, 1.0, 0.04, NONE)
    assert r.value == pytest.approx(0.24 * math.log(100), rel=1e-14)
    assert r.value == pytest.approx(1.10524, abs=1e-5)
    a = bound_cov_ps(200, 1, 1.0, 0.04, NONE)
    b = bound_cov_ps(800, 1, 1.0, 0.04, NONE)
    assert b.slow_term == pytest.approx(a.slow_term / 2)


def test_cov_bernstein_example():
    m, d = 100, 0.04
    L = math.log(2 / d)
    oracle = 4 / (3 * m) * L + math.sqrt(2 / m * (1 + 2 * L))
    assert bound_cov_bernstein(200, 1, 1.0, d, NONE).value == pytest.approx(oracle, rel=1e-14)
    a = bound_cov_bernstein(200, 1, 1.0, d, NONE)
    b = bound_cov_bernstein(800, 1, 1.0, d, NONE)
    assert b.slow_term == pytest.approx(a.slow_term / 2)
    # no mixing: the block length only enters through m
    assert bound_cov_bernstein(800, 4, 1.0, d, NONE).value == a.value


def _ivanov_oracle(g, r, c, n, tau, d, dl, y, z, w):
    L, Ll = math.log(12 / d), math.log(12 / dl)
    return (
        32 * g**2 * c * tau / (3 * n) * L
        + 64 * math.sqrt(r) * g * c * tau / (3 * n) * Ll
        + 7 * c * tau / (3 * (n / (2 * tau) - 1)) * L
        + math.sqrt(2 * g**4 * y * tau / n * (1 + 2 * L))
        + math.sqrt(2 * r * g**2 * z * tau / n * (1 + 2 * Ll))
        + math.sqrt(2 * w * tau / n * L)
    )


def test_ivanov():
    model = MixingModel.exponential(0.63)
    n, tau, d = 4096, 16, 0.05
    m = n // (2 * tau)
    dt = d - 2 * (m - 1) * math.exp(-0.63 * tau)
    dl = d - 2 * (m - 1) * math.exp(-0.63 * (tau - 1))
    r = risk_bound_ivanov(2.0, 3, 1.0, n, tau, d, model, 0.4, 0.3, 0.2)
    assert r.value == pytest.approx(_ivanov_oracle(2.0, 3, 1.0, n, tau, dt, dl, 0.4, 0.3, 0.2), rel=1e-13)
    assert len(r.terms) == 6
    only = risk_bound_ivanov(0.0, 1, 1.0, n, tau, d, NONE, 0.4, 0.3, 0.0)
    assert [k for k, v in only.terms.items() if v != 0] == ["trace_fast"]
    zero = risk_bound_ivanov(1.0, 1, 1.0, n, tau, d, NONE, 0.0, 0.0, 0.0)
    assert sorted(k for k, v in zero.terms.items() if v != 0) == ["cov_fast", "crosscov_fast", "trace_fast"]
    with pytest.raises(UndefinedStatisticError):
        risk_bound_ivanov(1.0, 1, 1.0, 10, 5, d, NONE, 0, 0, 0)
    bad = risk_bound_ivanov(1.0, 1, 1.0, n, 2, d, model, 0, 0, 0)
    assert not bad.feasible


def _tik_oracle(g, r, c, n, tau, dh, y, z, w):
    L = math.log(12 / dh)
    return (
        128 * c * tau * g * (math.sqrt(r) + g) / (3 * n) * L
        + 14 * c * tau**2 / (3 * n - 2 * tau) * L
        + math.sqrt(32 * g**4 * y * tau / n * (1 + 2 * L))
        + math.sqrt(2 * w * tau / n * L)
        + math.sqrt(8 * r * g**2 * z * tau / n * (1 + 2 * L))
    )


def test_tikhonov():
    model = MixingModel.exponential(0.63)
    n, tau, d, g = 4096, 17, 0.05, 1.7
    m = n // (2 * tau)
    dh = 0.5 * d / g - 2 * (m - 1) * math.exp(-0.63 * tau)
    r = risk_bound_tikhonov(g, 3, 1.0, n, tau, d, model, 0.4, 0.3, 0.2)
    assert r.delta_effective["delta_hat"] == pytest.approx(dh, rel=1e-14)
    assert r.value == pytest.approx(_tik_oracle(g, 3, 1.0, n, tau, dh, 0.4, 0.3, 0.2), rel=1e-13)
    z = risk_bound_tikhonov(1.0, 4, 1.0, n, tau, d, NONE, 0, 0, 0)
    assert sorted(k for k, v in z.terms.items() if v != 0) == ["operator_fast", "trace_fast"]
    with pytest.raises(DomainError):
        risk_bound_tikhonov(0.5, 1, 1.0, n, tau, d, NONE, 0, 0, 0)


def test_tikhonov_doubling_g():
    n, tau, d, r = 4096, 4, 0.05, 4
    a = risk_bound_tikhonov(1.0, r, 1.0, n, tau, d, NONE, 0, 0, 0)
    b = risk_bound_tikhonov(2.0, r, 1.0, n, tau, d, NONE, 0, 0, 0)
    ratio_at_fixed_log = 2 * (math.sqrt(r) + 2) / (math.sqrt(r) + 1)
    log_ratio = math.log(12 / (0.25 * d)) / math.log(12 / (0.5 * d))
    assert b.terms["operator_fast"] / a.terms["operator_fast"] == pytest.approx(ratio_at_fixed_log * log_ratio, rel=1e-13)


def test_report_json_fields():
    r = bound_thm2(0.1, 1000, 2, 1.0, 0.05, NONE)
    d = json.loads(json.dumps(r.to_dict()))
    for key in ("value", "terms", "delta_effective", "feasible"):
        assert key in d


_BOUNDS = [
    lambda d: bound_thm1(0.3, 3000, 16, 1.0, d, MixingModel.exponential(0.63)),
    lambda d: bound_thm2(0.3, 3000, 16, 1.0, d, MixingModel.exponential(0.63)),
    lambda d: bound_thm3(0.3, 3000, 16, 1.0, d, MixingModel.exponential(0.63)),
    lambda d: bound_iid_biased(2.0, 10, 1.0, d),
    lambda d: bound_iid_unbiased(2.0, 10, 1.0, d),
    lambda d: bound_cov_ps(3000, 16, 1.0, d, MixingModel.exponential(0.63)),
    lambda d: bound_cov_bernstein(3000, 16, 1.0, d, MixingModel.exponential(0.63)),
    lambda d: risk_bound_ivanov(1.5, 2, 1.0, 3000, 16, d, MixingModel.exponential(0.63), 0.3, 0.2, 0.1),
    lambda d: risk_bound_tikhonov(1.5, 2, 1.0, 3000, 17, d, MixingModel.exponential(0.63), 0.3, 0.2, 0.1),
]


@given(st.sampled_from(range(len(_BOUNDS))), st.floats(0.001, 0.7), st.floats(0.001, 0.7))
@settings(max_examples=150, deadline=None)
def test_bound_properties(i, d1, d2):
    lo, hi = sorted((d1, d2))
    a, b = _BOUNDS[i](lo), _BOUNDS[i](hi)
    for r in (a, b):
        assert r.feasible == math.isfinite(r.value)
        if r.feasible:
            assert r.value >= 0
            assert r.value == pytest.approx(math.fsum(r.terms.values()), rel=1e-12)
    if a.feasible and b.feasible and hi - lo > 1e-9:
        assert b.value < a.value
