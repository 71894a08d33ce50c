from __future__ import annotations

import math

import numpy as np
import pytest

from ergokit.cocycle import (LocalRule, _log_norms, as_sl2, avalanche_defect, cocycle_product, lyapunov_estimate,
                             product_of, sample_bases, schrodinger_rule, sl2_inverse, sl2_norm,
                             uniformity_gap, word_sup_F)
from ergokit.subshifts import NAMED_RULES, PeriodicGen, SubstitutionGen

from oracles import direct_product, schrodinger_matrix

FIB = SubstitutionGen(NAMED_RULES["fibonacci"])
FREE = PeriodicGen("a")
SHEAR = [[1.0, 1.0], [0.0, 1.0]]


def rot(t):
    return np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])


def random_sl2(rng, scale=1.0):
    a = rng.normal(size=(2, 2)) * scale
    d = np.linalg.det(a)
    if d < 0:
        a[:, 0] *= -1
        d = -d
    return a / math.sqrt(d)


def radius_one_rule(rng):
    table = {(a, b, c): random_sl2(rng) for a in (0, 1) for b in (0, 1) for c in (0, 1)}
    return LocalRule(1, table, label="random")


def test_sl2_norm_examples():
    assert sl2_norm(np.eye(2)) == 1.0
    assert sl2_norm(np.diag([2.0, 0.5])) == 2.0
    assert sl2_norm(SHEAR) == pytest.approx((1 + math.sqrt(5)) / 2, rel=1e-15)
    with pytest.raises(ValueError):
        sl2_norm([[0.5, 0.0], [0.0, 0.5]])


def test_sl2_norm_matches_svd_and_inverse():
    rng = np.random.default_rng(0)
    for _ in range(200):
        m = random_sl2(rng, scale=rng.uniform(0.1, 10))
        assert sl2_norm(m) == pytest.approx(np.linalg.svd(m, compute_uv=False)[0], rel=1e-9)
        assert sl2_norm(m) == sl2_norm(sl2_inverse(m))


def test_as_sl2_rejects_bad_determinant():
    with pytest.raises(ValueError):
        as_sl2([[1.0, 0.0], [0.0, 2.0]])
    with pytest.raises(ValueError):
        as_sl2([[1.0, 0.0, 0.0]])


def test_constant_shear_power():
    p = cocycle_product(LocalRule.constant(SHEAR), FREE, 0, 3)
    assert np.allclose(p.matrix(), [[1, 3], [0, 1]], atol=1e-12)
    assert p.log_norm == pytest.approx(math.log(sl2_norm([[1, 3], [0, 1]])), abs=1e-14)


def test_zero_steps_is_identity():
    p = cocycle_product(schrodinger_rule(0.7, [0, 1]), FIB, 5, 0)
    assert p.log_norm == 0.0
    assert np.array_equal(p.matrix(), np.eye(2))


def test_negative_steps_invert_forward_product():
    rule = schrodinger_rule(0.4, [0, 2])
    for base, k in [(0, 7), (33, 40), (-20, 15)]:
        back = cocycle_product(rule, FIB, base, -k).matrix()
        fwd = cocycle_product(rule, FIB, base - k, k).matrix()
        assert np.allclose(back @ fwd, np.eye(2), atol=1e-9)


def test_product_matches_direct_multiplication():
    rng = np.random.default_rng(1)
    rule = radius_one_rule(rng)
    x = FIB.window(-5, 120)
    for base in (0, 10, 40):
        for n in (1, 5, 20, 50):
            # step j reads the radius-1 window centred at base + j + 1; x starts at position -5
            mats = [rule.matrix_for(x[base + j + 5: base + j + 8]) for j in range(n)]
            ref = direct_product(mats)
            got = cocycle_product(rule, FIB, base, n)
            assert math.exp(got.log_norm) == pytest.approx(np.linalg.norm(ref, 2), rel=1e-9)
            assert np.allclose(got.matrix(), ref, rtol=1e-9, atol=1e-9 * np.abs(ref).max())


def test_schrodinger_examples():
    r = schrodinger_rule(0.0, [0.0])
    m = r.matrix_for((0,))
    assert np.array_equal(m, [[0, -1], [1, 0]])
    assert np.allclose(np.linalg.matrix_power(m, 4), np.eye(2))
    ev = sorted(np.linalg.eigvals(schrodinger_rule(3.0, [0.0]).matrix_for((0,))).real)
    assert ev == [pytest.approx((3 - math.sqrt(5)) / 2), pytest.approx((3 + math.sqrt(5)) / 2)]


def test_transfer_matrices_propagate_solutions():
    E, embed = 0.37, [0.0, 1.5]
    x = FIB.window(0, 60)
    v = [embed[c] for c in x]
    u = [0.3, -1.1]  # u(0), u(1)
    for k in range(1, 52):
        u.append((E - v[k]) * u[k] - u[k - 1])
    rule = schrodinger_rule(E, embed)
    for n in range(1, 51):
        got = cocycle_product(rule, FIB, 0, n).matrix() @ np.array([u[1], u[0]])
        assert np.allclose(got, [u[n + 1], u[n]], rtol=1e-9, atol=1e-9)
        ref = direct_product([schrodinger_matrix(E, v[j]) for j in range(1, n + 1)])
        assert np.allclose(cocycle_product(rule, FIB, 0, n).matrix(), ref, rtol=1e-9, atol=1e-9)


def test_cocycle_identity_and_subadditivity():
    rng = np.random.default_rng(2)
    rule = radius_one_rule(rng)
    for _ in range(30):
        n, m = int(rng.integers(1, 1000)), int(rng.integers(1, 1000))
        b = int(rng.integers(-500, 500))
        first = cocycle_product(rule, FIB, b, m)
        second = cocycle_product(rule, FIB, b + m, n)
        whole = cocycle_product(rule, FIB, b, n + m)
        assert whole.log_norm <= first.log_norm + second.log_norm + 1e-9
        if whole.log_norm < 300:
            lhs = whole.matrix()
            rhs = second.matrix() @ first.matrix()
            assert np.allclose(lhs, rhs, rtol=1e-9, atol=1e-9 * np.abs(lhs).max())


def test_product_of_lists_in_application_order():
    a, b = np.array(SHEAR), rot(0.3)
    assert np.allclose(product_of([a, b]).matrix(), b @ a, atol=1e-14)


def test_determinant_stays_one_over_long_products():
    p = cocycle_product(schrodinger_rule(0.3, [0, 1]), FIB, 0, 10 ** 6)
    assert abs(p.det() - 1) <= 1e-9


def test_agreeing_windows_give_close_log_norms():
    rng = np.random.default_rng(3)
    rule = radius_one_rule(rng)
    worst = max(math.log(sl2_norm(m)) for m in rule.table.values())
    x = FIB.window(0, 20000)
    n = 200
    w = x[1: n + 1]
    from ergokit.words import occurrence_positions
    starts = occurrence_positions(w, x[: 19000])
    assert len(starts) > 5
    logs = [cocycle_product(rule, FIB, int(p) - 1, n).log_norm for p in starts[:20]]
    assert max(logs) - min(logs) <= 4 * rule.radius * worst + 1e-9


def test_lyapunov_examples():
    free3 = lyapunov_estimate(schrodinger_rule(3.0, [0.0]), FREE, 1000, 4)
    assert free3.mean == pytest.approx(math.log((3 + math.sqrt(5)) / 2), abs=1e-3)
    assert lyapunov_estimate(schrodinger_rule(1.0, [0.0]), FREE, 1000, 4).mean <= 1e-2
    fib = lyapunov_estimate(schrodinger_rule(0.0, [0, 4]), FIB, 10 ** 4, 8)
    assert fib.min >= 0


def test_lyapunov_constant_rule_spectral_radius():
    rng = np.random.default_rng(4)
    for _ in range(5):
        m = random_sl2(rng, 2.0)
        rad = max(abs(np.linalg.eigvals(m)))
        if rad < 1.5:
            continue
        est = lyapunov_estimate(LocalRule.constant(m), FREE, 1000, 2)
        assert est.mean == pytest.approx(math.log(rad), abs=1e-3)


def test_uniformity_gap_examples():
    rows = uniformity_gap(LocalRule.constant(SHEAR), FIB, [10, 100, 1000], 16)
    assert all(r.gap == 0 for r in rows)
    rows = uniformity_gap(schrodinger_rule(10.0, [0, 1]), FIB, [100, 1000, 10 ** 4], 64)
    gaps = [r.gap for r in rows]
    assert all(g >= 0 for g in gaps)
    # (1/n) log-norms differ by (letter-count difference) * log(10/9) / n up to O(1/n^2) terms
    assert gaps[0] > gaps[1] and gaps[0] > gaps[2]
    for r in rows:
        assert r.n * r.gap <= 1.05 * math.log(10 / 9)


def test_sampling_is_deterministic_and_thread_independent():
    assert np.array_equal(sample_bases(5, 10), sample_bases(5, 10))
    assert np.array_equal(sample_bases(5, 20)[:10], sample_bases(5, 10))
    rules = [schrodinger_rule(e, [0, 2]) for e in np.linspace(-3, 3, 7)]
    a = _log_norms(rules, FIB, [50, 300], 300, seed=1, threads=1)
    b = _log_norms(rules, FIB, [50, 300], 300, seed=1, threads=4)
    assert np.array_equal(a, b)
    b0 = sample_bases(1, 300)[0]
    assert a[2, 0, 1] == pytest.approx(cocycle_product(rules[2], FIB, int(b0), 300).log_norm, rel=1e-12)


def test_word_sup_F():
    x = FIB.word(3, 30)
    r0 = schrodinger_rule(0.5, [0, 3])
    ref = direct_product([r0.matrix_for((c,)) for c in x])
    assert word_sup_F(r0, x, FIB, 10 ** 4) == pytest.approx(math.log(np.linalg.norm(ref, 2)), rel=1e-12)
    diag = LocalRule.constant(np.diag([2.0, 0.5]))
    assert word_sup_F(diag, x, FIB, 10 ** 4) == pytest.approx(len(x) * math.log(2), rel=1e-14)
    with pytest.raises(ValueError):
        word_sup_F(r0, "bb", FIB, 1000)


def test_word_sup_F_subadditive():
    rng = np.random.default_rng(5)
    rule = radius_one_rule(rng)
    scan = FIB.window(0, 10 ** 4 - 1)
    for _ in range(1000):
        p = int(rng.integers(10, 9000))
        k = int(rng.integers(2, 40))
        cut = int(rng.integers(1, k))
        w = scan[p: p + k]
        f = word_sup_F(rule, w, FIB, 10 ** 4)
        assert f <= word_sup_F(rule, w[:cut], FIB, 10 ** 4) + word_sup_F(rule, w[cut:], FIB, 10 ** 4) + 1e-9


def test_avalanche_commuting_diagonals_exact():
    d = np.diag([math.exp(5.0), math.exp(-5.0)])
    for N in (3, 9, 27):
        rep = avalanche_defect([d] * N, 5.0)
        assert rep.defect == 0.0
        assert rep.hypotheses_ok


def test_avalanche_alternating_rotated():
    d = np.diag([math.exp(5.0), math.exp(-5.0)])
    c = rot(0.1) @ d @ rot(-0.1)
    rep = avalanche_defect([d, c] * 4 + [d], 5.0)
    assert rep.hypotheses_ok
    assert rep.kappa_hat < 10
    assert rep.defect <= 9 * math.exp(-5.0) * rep.kappa_hat + 1e-15


def test_avalanche_hypothesis_failure_and_input_checks():
    d = np.diag([math.exp(2.0), math.exp(-2.0)])
    assert not avalanche_defect([np.eye(2)] + [d] * 8, 1.0).hypotheses_ok
    with pytest.raises(ValueError):
        avalanche_defect([d] * 4, 1.0)
    with pytest.raises(ValueError):
        avalanche_defect([d] * 3, 0.0)
