"""Tests for the formal power series layer.

Single-species series coincide with exponential generating functions, so a
small independent EGF calculator (binomial convolutions and the standard
triangular recursions) serves as the oracle for products, exp, log,
composition, and differentiation.
"""

import itertools
import math
import random
from fractions import Fraction
from math import comb

import pytest
from hypothesis import given, settings
from hypothesis import strategies as hyp

from virialkit import errors, fps
from virialkit.errors import CapabilityError, DomainError
from virialkit.fps import (
    FormalSeries,
    RootedSeriesFamily,
    canonical_indices,
    compose_measure,
    compose_templates,
    compose_univariate,
    exp_series,
    log_series,
    mul,
    mul_dense,
    multi_product,
    set_partitions,
    subset_splits,
    sym_factor,
    var_derivative,
)
from virialkit.species import MeasureVec, SpeciesSpace

BELL = [1, 1, 2, 5, 15, 52]

S1 = SpeciesSpace.uniform(1)
S2 = SpeciesSpace.uniform(2)


def rand_series(seed, space, N, unit_constant=False):
    r = random.Random(seed)

    def fn(n, ms):
        if n == 0:
            return Fraction(1) if unit_constant else Fraction(r.randint(-4, 4), 8)
        return Fraction(r.randint(-12, 12), 8)

    return FormalSeries.from_function(space, N, fn)


# ---------------------------------------------------------------------------
# independent EGF oracle (single species)


def egf_of(K):
    return [K.value(n, (0,) * n) for n in range(K.trunc + 1)]


def from_egf(a):
    return FormalSeries.from_function(S1, len(a) - 1, lambda n, ms: a[n])


def egf_mul(a, b):
    N = len(a) - 1
    return [sum(comb(n, k) * a[k] * b[n - k] for k in range(n + 1)) for n in range(N + 1)]


def egf_exp(a):
    assert a[0] == 0
    E = [Fraction(1)]
    for n in range(1, len(a)):
        E.append(sum(comb(n - 1, k) * a[k + 1] * E[n - 1 - k] for k in range(n)))
    return E


def egf_log(A):
    assert A[0] == 1
    L = [Fraction(0)] * len(A)
    for n in range(1, len(A)):
        L[n] = A[n] - sum(comb(n - 1, k) * L[k + 1] * A[n - 1 - k] for k in range(n - 1))
    return L


def egf_pow(a, m):
    out = [Fraction(1)] + [Fraction(0)] * (len(a) - 1)
    for _ in range(m):
        out = egf_mul(out, a)
    return out


def egf_compose(fc, a):
    assert a[0] == 0
    N = len(a) - 1
    out = [Fraction(0)] * (N + 1)
    for m in range(min(len(fc), N + 1)):
        pw = egf_pow(a, m)
        fac = Fraction(fc[m], math.factorial(m))
        for n in range(N + 1):
            out[n] += fac * pw[n]
    return out


# ---------------------------------------------------------------------------
# combinatorial groundwork


def test_sym_factor():
    assert sym_factor(()) == 1
    assert sym_factor((0, 1, 2)) == 1
    assert sym_factor((0, 0, 1)) == 2
    assert sym_factor((0, 0, 1, 1)) == 4
    assert sym_factor((0,) * 4) == 24


def test_set_partitions_bell_counts():
    for n in range(6):
        assert len(list(set_partitions(n))) == BELL[n]


def test_set_partitions_are_partitions():
    for part in set_partitions(4):
        flat = sorted(i for blk in part for i in blk)
        assert flat == [0, 1, 2, 3]
        assert all(len(blk) > 0 for blk in part)


def test_subset_splits_counts_and_complements():
    for n in range(5):
        splits = list(subset_splits(n))
        assert len(splits) == 2**n
        for J, rest in splits:
            assert sorted(J + rest) == list(range(n))


def brute_idempotent_count(n):
    cnt = 0
    for g in itertools.product(range(n), repeat=n):
        if all(g[g[i]] == g[i] for i in range(n)):
            cnt += 1
    return cnt


def test_compose_templates_counts():
    # templates are in bijection with idempotent maps [n] -> [n]
    for n in range(1, 6):
        assert len(compose_templates(n)) == brute_idempotent_count(n)
    assert [brute_idempotent_count(n) for n in range(1, 6)] == [1, 3, 10, 41, 196]


def test_canonical_indices():
    idx = list(canonical_indices(3, 2))
    assert len(idx) == comb(3 + 2 - 1, 2)
    assert all(tuple(sorted(ms)) == ms for ms in idx)
    assert len(set(idx)) == len(idx)
    assert list(canonical_indices(5, 0)) == [()]


# ---------------------------------------------------------------------------
# ring operations


def test_unit_is_multiplicative_identity():
    K = rand_series(7, S2, 3)
    one = FormalSeries.unit(S2, 3)
    assert mul(K, one) == K
    assert mul(one, K) == K


def test_mul_all_ones_gives_powers_of_two():
    K = FormalSeries.from_function(S1, 5, lambda n, ms: Fraction(1))
    P = mul(K, K)
    assert egf_of(P) == [2**n for n in range(6)]


def test_mul_commutative_and_associative():
    K = rand_series(1, S2, 3)
    G = rand_series(2, S2, 3)
    H = rand_series(3, S2, 3)
    assert mul(K, G) == mul(G, K)
    assert mul(mul(K, G), H) == mul(K, mul(G, H))


def test_add_sub_scale():
    K = rand_series(4, S2, 3)
    G = rand_series(5, S2, 3)
    assert (K + G) - G == K
    assert K.scale(Fraction(2)) == K + K
    assert (K + (-K)).max_abs_diff(FormalSeries.zero(S2, 3)) == 0


def test_multi_product_matches_folded_mul():
    K = rand_series(10, S2, 3)
    G = rand_series(11, S2, 3)
    H = rand_series(12, S2, 3)
    assert multi_product([K, G, H]) == mul(mul(K, G), H)
    assert multi_product([K, G]) == mul(K, G)
    assert multi_product([K]) == K
    one = FormalSeries.unit(S2, 3)
    assert multi_product([one, one, one]) == one
    with pytest.raises(DomainError):
        multi_product([])


def test_value_is_symmetric_in_positions():
    K = rand_series(13, S2, 3)
    assert K.value(2, (1, 0)) == K.value(2, (0, 1))
    assert K.value(3, (1, 0, 1)) == K.value(3, (1, 1, 0))


def test_max_abs_diff():
    K = rand_series(14, S2, 2)
    bump = FormalSeries.from_function(
        S2, 2, lambda n, ms: Fraction(1, 64) if n == 2 and ms == (0, 1) else Fraction(0)
    )
    assert K.max_abs_diff(K + bump) == Fraction(1, 64)


# ---------------------------------------------------------------------------
# composition, exp, log, differentiation


def test_compose_univariate_identity():
    K = rand_series(20, S2, 3)
    K0 = K - FormalSeries.from_function(S2, 3, lambda n, ms: K.constant() if n == 0 else 0)
    fc = [Fraction(0), Fraction(1), Fraction(0), Fraction(0)]
    assert compose_univariate(fc, K0) == K0


def test_compose_univariate_exp_route():
    K = rand_series(21, S2, 3, unit_constant=True)
    K0 = K - FormalSeries.unit(S2, 3)
    fc = [Fraction(1)] * 4
    assert compose_univariate(fc, K0) == exp_series(K0)


def test_compose_univariate_square():
    # F(t) = t^2 has EGF coefficients [0, 0, 2]
    K = rand_series(22, S2, 3, unit_constant=True)
    K0 = K - FormalSeries.unit(S2, 3)
    assert compose_univariate([Fraction(0), Fraction(0), Fraction(2)], K0) == mul(K0, K0)


def test_compose_univariate_needs_zero_constant():
    K = FormalSeries.unit(S2, 2)
    with pytest.raises(DomainError):
        compose_univariate([Fraction(0), Fraction(1)], K)


def test_exp_of_ones_gives_bell_numbers():
    K = FormalSeries.from_function(S1, 5, lambda n, ms: Fraction(0) if n == 0 else Fraction(1))
    assert egf_of(exp_series(K)) == BELL


def test_exp_of_linear_term():
    K = FormalSeries.from_function(S1, 5, lambda n, ms: Fraction(1) if n == 1 else Fraction(0))
    assert egf_of(exp_series(K)) == [1] * 6


def test_exp_is_additive():
    K = rand_series(23, S2, 3)
    G = rand_series(24, S2, 3)
    zero_const = lambda X: X - FormalSeries.from_function(
        S2, 3, lambda n, ms: X.constant() if n == 0 else 0
    )
    K0, G0 = zero_const(K), zero_const(G)
    assert exp_series(K0 + G0) == mul(exp_series(K0), exp_series(G0))


def test_log_inverts_exp():
    K = rand_series(25, S2, 3)
    K0 = K - FormalSeries.from_function(S2, 3, lambda n, ms: K.constant() if n == 0 else 0)
    assert log_series(exp_series(K0)) == K0
    a = [Fraction(0)] + [Fraction(i + 1, 3) for i in range(5)]
    assert egf_of(log_series(exp_series(from_egf(a)))) == a


def test_log_requires_unit_constant():
    K = FormalSeries.from_function(S2, 2, lambda n, ms: Fraction(2) if n == 0 else Fraction(1))
    with pytest.raises(DomainError):
        log_series(K)


def test_var_derivative_is_index_shift():
    a = [Fraction(n * n + 1, 3) for n in range(5)]
    d = var_derivative(from_egf(a), 0)
    assert egf_of(d) == a[1:]
    assert d.trunc == 3


def test_var_derivative_of_unit_is_zero():
    d = var_derivative(FormalSeries.unit(S2, 3), 0)
    assert d.max_abs_diff(FormalSeries.zero(S2, 2)) == 0


def test_var_derivative_leibniz():
    K = rand_series(26, S2, 3)
    G = rand_series(27, S2, 3)
    for q in range(2):
        lhs = var_derivative(mul(K, G), q)
        Km = FormalSeries.from_function(S2, 2, lambda n, ms: K.value(n, ms))
        Gm = FormalSeries.from_function(S2, 2, lambda n, ms: G.value(n, ms))
        rhs = mul(var_derivative(K, q), Gm) + mul(Km, var_derivative(G, q))
        assert lhs == rhs


def test_var_derivative_needs_positive_trunc():
    with pytest.raises(DomainError):
        var_derivative(FormalSeries.unit(S2, 0), 0)


def test_compose_measure_identity_and_zero():
    K = rand_series(28, S2, 3)
    ident = RootedSeriesFamily.from_function(
        S2, 3, lambda n, q, ms: Fraction(1) if n == 0 else Fraction(0)
    )
    assert compose_measure(K, ident).max_abs_diff(K) == 0
    zero_fam = RootedSeriesFamily.from_function(S2, 3, lambda n, q, ms: Fraction(0))
    collapsed = compose_measure(K, zero_fam)
    assert collapsed.constant() == K.constant()
    for n in range(1, 4):
        assert all(v == 0 for v in collapsed.coeffs[n].values())


def test_compose_measure_constant_scaling():
    # G(x; nu) = c multiplies the order-n coefficient by c^n
    K = rand_series(29, S2, 3)
    c = Fraction(3, 2)
    fam = RootedSeriesFamily.from_function(
        S2, 3, lambda n, q, ms: c if n == 0 else Fraction(0)
    )
    out = compose_measure(K, fam)
    for n in range(4):
        for ms, v in K.coeffs[n].items():
            assert out.coeffs[n][ms] == v * c**n


# ---------------------------------------------------------------------------
# evaluation


def test_evaluate_truncated_exponential():
    K = FormalSeries.from_function(S1, 4, lambda n, ms: Fraction(1))
    nu = MeasureVec.constant(S1, Fraction(1))
    assert K.evaluate(nu) == Fraction(65, 24)  # 1 + 1 + 1/2 + 1/6 + 1/24


def test_evaluate_uses_weights():
    space = SpeciesSpace.from_weights([2, 1])
    K = FormalSeries.from_function(space, 1, lambda n, ms: Fraction(1))
    nu = MeasureVec.constant(space, Fraction(1, 2))
    assert K.evaluate(nu) == 1 + Fraction(1, 2) * 2 + Fraction(1, 2) * 1


def test_evaluate_matches_dense_sum():
    K = rand_series(30, S2, 3)
    vals = (Fraction(1, 3), Fraction(-1, 5))
    nu = MeasureVec(S2, vals)
    total = Fraction(0)
    for n in range(4):
        for xs in itertools.product(range(2), repeat=n):
            prod = Fraction(1)
            for x in xs:
                prod *= vals[x]
            total += Fraction(K.value(n, xs), math.factorial(n)) * prod
    assert K.evaluate(nu) == total


# ---------------------------------------------------------------------------
# dense cross-check backend


def test_mul_dense_matches_canonical():
    K = rand_series(31, S2, 3)
    G = rand_series(32, S2, 3)
    ref = mul(K, G)
    dense = mul_dense(K, G)
    for n in range(4):
        for xs, v in dense[n].items():
            assert v == ref.value(n, xs)


def test_dense_backend_order_ceiling():
    K = rand_series(33, S2, 4)
    with pytest.raises(CapabilityError):
        mul_dense(K, K)
    with pytest.raises(CapabilityError):
        fps.dense_component(K, 4)


# ---------------------------------------------------------------------------
# serialization and scale guards


def test_json_roundtrip_exact():
    K = rand_series(34, S2, 3)
    back = FormalSeries.from_json(K.to_json())
    assert back == K
    assert back.coeffs == K.coeffs  # Fractions, not floats
    assert back.space.weights == K.space.weights


def test_json_roundtrip_complex():
    K = FormalSeries.from_function(S2, 1, lambda n, ms: 0.5 + 0.25j if n else 1.0)
    back = FormalSeries.from_json(K.to_json())
    assert back.coeffs[1][(0,)] == 0.5 + 0.25j


def test_desk_scale_guards():
    with pytest.raises(CapabilityError):
        FormalSeries.zero(S2, errors.DESK_MAX_ORDER + 1)
    with pytest.raises(CapabilityError):
        FormalSeries.zero(SpeciesSpace.uniform(errors.DESK_MAX_SPECIES + 1), 2)
    big = FormalSeries.zero(SpeciesSpace.uniform(13), 2, allow_large=True)
    assert big.space.size == 13


def test_max_order_env_override(monkeypatch):
    monkeypatch.setenv("VIRIALKIT_MAX_ORDER", "8")
    assert errors.max_order() == 8
    K = FormalSeries.zero(S1, 7)
    assert K.trunc == 7
    monkeypatch.setenv("VIRIALKIT_MAX_ORDER", "abc")
    with pytest.raises(DomainError):
        errors.max_order()
    monkeypatch.setenv("VIRIALKIT_MAX_ORDER", "0")
    with pytest.raises(DomainError):
        errors.max_order()


# ---------------------------------------------------------------------------
# rooted families


def test_rooted_family_basics():
    fam = RootedSeriesFamily.from_function(
        S2, 2, lambda n, q, ms: Fraction(q + len(ms) + sum(ms), 2)
    )
    assert fam.value(2, 0, (1, 0)) == fam.value(2, 0, (0, 1))
    root = fam.root_series(1)
    assert root.value(1, (0,)) == fam.value(1, 1, (0,))
    assert fam.max_abs_diff(fam) == 0


# ---------------------------------------------------------------------------
# randomized EGF oracle sweep


def test_egf_oracle_sweep():
    for seed in range(100):
        r = random.Random(seed)
        a = [Fraction(0)] + [Fraction(r.randint(-9, 9), 6) for _ in range(4)]
        b = [Fraction(r.randint(-9, 9), 6) for _ in range(5)]
        Ka, Kb = from_egf(a), from_egf(b)
        assert egf_of(mul(Ka, Kb)) == egf_mul(a, b)
        assert egf_of(exp_series(Ka)) == egf_exp(a)
        assert egf_of(log_series(exp_series(Ka))) == a
        assert egf_log(egf_exp(a)) == a
        fc = [Fraction(r.randint(-6, 6), 4) for _ in range(5)]
        assert egf_of(compose_univariate(fc, Ka)) == egf_compose(fc, a)
        assert egf_of(var_derivative(Kb, 0)) == b[1:]


# ---------------------------------------------------------------------------
# property-based checks

frac9 = hyp.builds(Fraction, hyp.integers(-9, 9), hyp.integers(1, 9))


@settings(max_examples=25, deadline=None)
@given(hyp.lists(frac9, min_size=4, max_size=4), hyp.lists(frac9, min_size=4, max_size=4))
def test_mul_commutes_property(xs, ys):
    K = from_egf([Fraction(1)] + xs)
    G = from_egf([Fraction(1)] + ys)
    assert mul(K, G) == mul(G, K)


@settings(max_examples=25, deadline=None)
@given(hyp.lists(frac9, min_size=4, max_size=4))
def test_exp_log_roundtrip_property(xs):
    a = [Fraction(0)] + xs
    K = from_egf(a)
    assert log_series(exp_series(K)) == K
