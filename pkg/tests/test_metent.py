import math

import numpy as np
import pytest

from nsft import (
    FiniteShiftError,
    HorizonError,
    bundled_spec,
    check_maximizer_mass,
    check_maximizer_positivity,
    check_primitivity_growth,
    check_uniform_primitivity,
    lambda_lower_bound_trace,
    metent_grid,
    metent_trace,
    parry_frames,
    partition_entropy_closed,
    partition_entropy_direct,
    topent_trace,
)
from nsft.metent import primitivity_indices
from nsft.word_counts import block_product
from nsft.word_counts import n_tilde, n_tilde_profile

from conftest import LOG_PHI


@pytest.fixture(scope="module")
def chain_of():
    cache = {}

    def get(spec, horizon):
        key = id(spec)
        if key not in cache or cache[key].horizon < horizon:
            cache[key] = parry_frames(spec, horizon)
        return cache[key]

    return get


def test_full3_closed_form(full3, chain_of):
    chain = chain_of(full3, 50)
    for k in (0, 1, 7, 50):
        assert partition_entropy_closed(full3, chain, k) == pytest.approx((k + 1) * math.log(3), rel=1e-13)
    assert partition_entropy_direct(chain, 0) == pytest.approx(math.log(3), rel=1e-14)


def test_closed_equals_direct(any_spec, chain_of):
    chain = chain_of(any_spec, 40)
    for k in range(9):
        assert partition_entropy_closed(any_spec, chain, k) == pytest.approx(partition_entropy_direct(chain, k), abs=1e-9)


def test_direct_is_monotone(any_spec, chain_of):
    chain = chain_of(any_spec, 40)
    vals = [partition_entropy_direct(chain, k) for k in range(9)]
    assert all(a <= b + 1e-12 for a, b in zip(vals, vals[1:]))


def test_permutation_entropy_stays_flat(permutation, chain_of):
    chain = chain_of(permutation, 20)
    for k in range(10):
        assert partition_entropy_direct(chain, k) == pytest.approx(math.log(2), abs=1e-12)


def test_golden_rate(golden, chain_of):
    chain = chain_of(golden, 500)
    assert abs(partition_entropy_closed(golden, chain, 500) / 500 - LOG_PHI) < 1e-2


def test_closed_form_needs_unit_seed(golden):
    chain = parry_frames(golden, 10, v0=[2.0, 1.0])
    with pytest.raises(ValueError, match="direct"):
        partition_entropy_closed(golden, chain, 3)
    assert partition_entropy_direct(chain, 3) > 0


def test_metent_trace_full3(full3, chain_of):
    eps = 0.05
    chain = chain_of(full3, 200)
    tr = metent_trace(full3, chain, eps, 100)
    depths = n_tilde_profile(full3, 100, eps)
    for k, v in tr.points:
        assert v == pytest.approx((depths[k] + 1) / k * math.log(3), rel=1e-12)


def test_metent_trace_golden(golden, chain_of):
    chain = chain_of(golden, n_tilde(golden, 500, 0.1))
    tr = metent_trace(golden, chain, 0.1, 500)
    assert abs(tr.tail_estimate - LOG_PHI) < 2e-2


def test_metent_trace_ab_linear(ab_linear):
    eps = 0.05
    chain = parry_frames(ab_linear, n_tilde(ab_linear, 2000, eps))
    tr = metent_trace(ab_linear, chain, eps, 2000)
    assert abs(tr.tail_estimate - math.log(2)) < 0.05


def test_metent_trace_needs_long_chain(golden):
    chain = parry_frames(golden, 20)
    with pytest.raises(HorizonError):
        metent_trace(golden, chain, 0.1, 20)


def test_lambda_bound_traces(full3, golden, ab_linear, chain_of):
    assert np.allclose(lambda_lower_bound_trace(chain_of(full3, 100), 100).values, math.log(3), rtol=1e-13)
    assert abs(lambda_lower_bound_trace(chain_of(golden, 500), 500).tail_estimate - LOG_PHI) < 1e-6
    tr = lambda_lower_bound_trace(chain_of(ab_linear, 2000), 2000)
    assert abs(tr.tail_estimate - math.log(2)) < 0.05


def test_lambda_sandwich(any_spec, chain_of):
    # every cylinder of depth k has measure w_k[x_k] / lambda^(0,k) <= 1 / lambda^(0,k)
    chain = chain_of(any_spec, 200)
    lam = lambda_lower_bound_trace(chain, 200)
    for k, v in lam.points[::13]:
        assert v <= partition_entropy_closed(any_spec, chain, k) / k + 1e-12
    assert lam.tail_estimate <= topent_trace(any_spec, 200).tail_estimate + 1e-9


def test_variational_inequality_coarse_scale(any_spec):
    res = metent_grid(any_spec, 500, eps_grid=[0.125])
    assert res.value <= topent_trace(any_spec, 500).tail_estimate + 0.02


@pytest.mark.parametrize("name", ["golden-mean", "full3"])
def test_stationary_ground_truth(name):
    spec = bundled_spec(name)
    rho = math.log(max(abs(np.linalg.eigvals(spec.matrix_at(0)))))
    res = metent_grid(spec, 500, eps_grid=[0.5])
    assert abs(res.value - rho) < 1e-2
    assert abs(topent_trace(spec, 500).tail_estimate - rho) < 1e-2


def test_metent_grid_finite_shift(permutation):
    res = metent_grid(permutation, 50, eps_grid=[0.5, 0.1])
    assert res.finite_shift and res.value == 0.0
    assert [v for _, v in res.rows] == [None, None]


def test_metent_grid_rows(golden):
    res = metent_grid(golden, 100, eps_grid=[0.25, 0.0625])
    assert [e for e, _ in res.rows] == [0.25, 0.0625]
    assert res.value == max(v for _, v in res.rows)
    assert res.chain_horizon >= n_tilde(golden, 100, 0.0625)


def test_positivity_examples(full3, golden, permutation):
    assert check_maximizer_positivity(full3, 0.1, (0, 30)).verdict == "pass"
    assert check_maximizer_positivity(golden, 0.2, (5, 50)).verdict == "pass"
    rep = check_maximizer_positivity(permutation, 0.1, (0, 10))
    assert rep.verdict == "fail"
    k, gamma, beta = rep.witnesses[0]
    assert permutation.matrix_at(k)[gamma, beta] == 0


def test_positivity_checks_every_tie():
    # columns of A tie, and B keeps row 3 away from symbols 1 and 2
    spec = bundled_spec("b-heavy")
    rep = check_maximizer_positivity(spec, 0.2, (1, 10))
    assert rep.verdict == "fail"
    k, gamma, beta = rep.witnesses[0]
    m = rep.details["m"]
    assert block_product(spec, k, k + m).entries[gamma, beta] == 0


def test_mass_examples(full3, golden, chain_of):
    assert check_maximizer_mass(full3, chain_of(full3, 60), 1e-6, 0.1, (0, 40)).verdict == "pass"
    assert check_maximizer_mass(golden, chain_of(golden, 60), 0.1, 0.2, (0, 40)).verdict == "pass"


def test_mass_fails_on_b_heavy():
    spec = bundled_spec("b-heavy")
    chain = parry_frames(spec, 60)
    rep = check_maximizer_mass(spec, chain, 0.01, 0.2, (0, 40))
    assert rep.verdict == "fail"
    assert rep.witnesses[0][2] < 0.99


def test_mass_propagates_finite_shift(permutation):
    chain = parry_frames(permutation, 20)
    with pytest.raises(FiniteShiftError):
        check_maximizer_mass(permutation, chain, 0.1, 0.2, (0, 5))


def test_primitivity_growth_stationary(golden, full3, chain_of):
    rep = check_primitivity_growth(golden, chain_of(golden, 305), 300)
    assert rep.verdict == "pass" and set(rep.details["N"]) == {2}
    rep = check_primitivity_growth(full3, chain_of(full3, 305), 300)
    assert rep.verdict == "pass" and set(rep.details["N"]) == {1}


def test_primitivity_growth_pow2():
    spec = bundled_spec("ab-pow2")
    ns = primitivity_indices(spec, 300)
    chain = parry_frames(spec, max(k + n for k, n in enumerate(ns)))
    rep = check_primitivity_growth(spec, chain, 300)
    assert rep.verdict == "fail"
    assert rep.trace.tail_estimate >= math.log(2) - 0.1
    # right after an A the primitivity index is the next block length plus one
    pat = spec.pattern
    assert rep.details["N"][pat.a_position(7) + 1] == 2**8 + 1


def test_primitivity_growth_needs_chain(golden):
    with pytest.raises(HorizonError):
        check_primitivity_growth(golden, parry_frames(golden, 10), 50)


def test_uniform_primitivity(golden):
    assert check_uniform_primitivity(golden, 100).verdict == "pass"
    rep = check_uniform_primitivity(bundled_spec("ab-linear"), 100)
    assert rep.verdict == "fail" and rep.details["max_N"] > 10
