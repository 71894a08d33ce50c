from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest

from ergokit.diophantine import (HypothesisError, alpha_expansion, brute_M, brute_h, brute_h_profile, cf_expand,
                                 circle_h, distances, hartman_h, multi_h, negative_cf, pinner_for)
from ergokit.reals import ONE, RationalInputError, Real, orbit_fixed, fixed_norm, parse_real

from oracles import (brute_h_mp, circle_h_scan, golden_mp, negative_digits, regular_digits,
                     tail_inhomogeneous_min, to_fraction)

GOLDEN = Real.golden()
SILVER = Real.silver()


def random_reals(count: int, seed: int = 1):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        prefix = [int(v) for v in rng.integers(1, 12, size=30)]
        period = [int(v) for v in rng.integers(1, 6, size=int(rng.integers(1, 4)))]
        out.append(Real.from_cf(prefix, period))
    return out


def test_cf_expand_golden():
    cf = cf_expand(GOLDEN, 8)
    assert cf.a == (1,) * 8
    assert cf.q == (1, 1, 2, 3, 5, 8, 13, 21, 34)
    assert not cf.rational


def test_cf_expand_sqrt2_minus_one():
    x = Real.from_mpmath(lambda: mpmath.sqrt(2) - 1, "sqrt2-1")
    assert cf_expand(x, 5).a == (2, 2, 2, 2, 2)
    assert cf_expand(x, 40).a == tuple(regular_digits(to_fraction(lambda: mpmath.sqrt(2) - 1, 200), 40))


def test_cf_expand_rational_flag():
    cf = cf_expand("1/3", 10)
    assert cf.rational and cf.a == (3,)


def test_cf_recurrence_and_sandwich():
    for x in [GOLDEN, SILVER, parse_real("pi_inv")] + random_reals(5):
        cf = cf_expand(x, 30)
        for k in range(2, cf.depth + 1):
            assert cf.q[k] == cf.a[k - 1] * cf.q[k - 1] + cf.q[k - 2]
            assert cf.p[k] == cf.a[k - 1] * cf.p[k - 1] + cf.p[k - 2]
        for k in range(1, cf.depth):
            e = cf.error(k)
            assert 1 / (cf.q[k] + cf.q[k + 1]) < e < 1 / cf.q[k + 1]


def test_hartman_examples():
    cf = cf_expand(GOLDEN, 40)
    assert hartman_h(cf, 5) == pytest.approx(0.0901699437, abs=1e-10)
    assert hartman_h(cf, 5) == pytest.approx(brute_h_mp(golden_mp(), 5), abs=1e-12)
    assert hartman_h(cf, 1) == pytest.approx(0.3819660113, abs=1e-10)
    for k in range(3, 11):
        assert hartman_h(cf, cf.q[k]) == cf.error(k)
        assert hartman_h(cf, cf.q[k]) == pytest.approx(brute_h_mp(golden_mp(), cf.q[k]), abs=1e-14)


def test_hartman_needs_depth():
    with pytest.raises(ValueError):
        hartman_h(cf_expand(GOLDEN, 5), 100)


def test_brute_h_examples():
    assert brute_h(GOLDEN, 5) == pytest.approx(0.0901699437, abs=1e-10)
    for x in (GOLDEN, SILVER, parse_real("0.3")):
        assert brute_h(x, 1) == pytest.approx(min(float(x) % 1, 1 - float(x) % 1), abs=1e-15)
    prof = brute_h_profile(GOLDEN, 10 ** 4)
    assert np.all(np.diff(prof) <= 0)


def test_hartman_matches_brute_on_random_reals():
    for x in random_reals(6, seed=3) + [GOLDEN]:
        cf = cf_expand(x, 40)
        prof = brute_h_profile(x, 3000)
        got = np.array([hartman_h(cf, n) for n in range(1, 3001)])
        assert np.max(np.abs(got - prof)) <= 1e-12


def test_distances_agree_with_mpmath():
    q = np.arange(-40, 41)
    got = distances(GOLDEN, q, "1/7")
    with mpmath.workdps(50):
        g = golden_mp()
        ref = [float(min((k * g + mpmath.mpf(1) / 7) % 1, 1 - (k * g + mpmath.mpf(1) / 7) % 1)) for k in q]
    assert np.allclose(got, ref, atol=1e-16)


def test_circle_h_examples():
    h, ht = circle_h(GOLDEN, Real.lattice(GOLDEN, 3), 3)
    assert ht == 0.0
    h, ht = circle_h(GOLDEN, "1/2", 5)
    rh, rht = circle_h_scan(golden_mp(), mpmath.mpf(1) / 2, 5)
    assert (h, ht) == (pytest.approx(rh, abs=1e-15), pytest.approx(rht, abs=1e-15))
    for x, b in [(SILVER, "0.3"), (parse_real("pi_inv"), "1/5"), (GOLDEN, "cf:2")]:
        for n in (1, 7, 50):
            h, ht = circle_h(x, b, n)
            assert h <= ht


def test_multi_h_examples():
    for n in (3, 10, 40):
        assert multi_h(GOLDEN, [GOLDEN], n) == circle_h(GOLDEN, GOLDEN, n)[0]
        assert multi_h(GOLDEN, ["1/2"], n) == pytest.approx(circle_h(GOLDEN, "1/2", n)[0], abs=1e-15)
    third = mpmath.mpf(1) / 3
    with mpmath.workdps(50):
        g = golden_mp()
        pts = [mpmath.mpf(0), third, 2 * third]
        ref = min(float(min((q * g + bk - bl) % 1, 1 - (q * g + bk - bl) % 1))
                  for q in range(-10, 11) for i, bk in enumerate(pts) for j, bl in enumerate(pts)
                  if (q, i - j) != (0, 0))
    assert multi_h(GOLDEN, ["1/3", "2/3"], 10) == pytest.approx(ref, abs=1e-15)
    with pytest.raises(RationalInputError):
        multi_h("1/2", ["1/3"], 10)


def test_sturmian_one_third_bound():
    for x in (GOLDEN, SILVER):
        cf = cf_expand(x, 40)
        for k in range(0, 16):
            n = cf.q[k + 1] - 1
            if n >= 1:
                assert n * hartman_h(cf, n) >= 1 / 3


def test_bounded_quotients_bound():
    for x, c in [(GOLDEN, 1), (SILVER, 2), (Real.from_cf((), (5, 1, 3)), 5)]:
        prof = brute_h_profile(x, 10 ** 4)
        n = np.arange(1, 10 ** 4 + 1)
        assert np.all(n * prof > 1 / (c + 2))


def test_negative_cf_digits_and_reconstruction():
    ncf = negative_cf(GOLDEN, 6)
    assert ncf.a == (2, 3, 3, 3, 3, 3)
    assert negative_cf(SILVER, 5).a == (3, 2, 4, 2, 4)
    for x, ref in [(GOLDEN, lambda: (mpmath.sqrt(5) - 1) / 2), (SILVER, lambda: mpmath.sqrt(2) - 1)]:
        ncf = negative_cf(x, 30)
        assert list(ncf.a) == negative_digits(to_fraction(ref, 200), 30)
        assert all(a >= 2 for a in ncf.a)
        assert abs(float(ncf.value()) - float(x)) < 1e-10


def test_negative_cf_recurrences():
    ncf = negative_cf(parse_real("pi_inv"), 25)
    p_prev, q_prev = -1, 0
    for i in range(1, 26):
        assert ncf.p[i] == ncf.a[i - 1] * ncf.p[i - 1] - (p_prev if i == 1 else ncf.p[i - 2])
        assert ncf.q[i] == ncf.a[i - 1] * ncf.q[i - 1] - (q_prev if i == 1 else ncf.q[i - 2])
    with mpmath.workprec(ncf.prec):
        a = parse_real("pi_inv").frac_mpf(ncf.prec)
        for i in range(0, 25):
            assert abs(ncf.D[i] - (ncf.q[i] * a - ncf.p[i])) < mpmath.mpf(2) ** -200


def test_negative_cf_rejects_rationals():
    with pytest.raises(RationalInputError):
        negative_cf("2/5", 5)
    with pytest.raises(ValueError):
        negative_cf("3/2", 5)


def test_alpha_expansion_examples():
    ncf = negative_cf(GOLDEN, 25)
    e = alpha_expansion(ncf, GOLDEN, 20)
    assert e.b[0] == 1 and all(b == 0 for b in e.b[1:])
    assert e.residuals[1] == 0 and e.reconstruction_error == 0.0
    assert all(b == 0 for b in alpha_expansion(ncf, 0, 20).b)
    half = alpha_expansion(ncf, "1/2", 20)
    assert half.reconstruction_error < float(ncf.D[19])


def test_alpha_expansion_digit_rule_and_error_decay():
    ncf = negative_cf(SILVER, 30)
    e = alpha_expansion(ncf, "pi_inv", 28)
    for K in range(1, 29):
        err = alpha_expansion(ncf, "pi_inv", K).reconstruction_error
        # the remainder after K digits is gamma_K D_(K-1) with 0 <= gamma_K < 1
        assert err == pytest.approx(float(e.residuals[K] * ncf.D[K - 1]), rel=1e-9, abs=1e-300)
        assert err < float(ncf.D[K - 1])
    with mpmath.workprec(ncf.prec):
        for n in range(28):
            r = e.residuals[n] / ncf.tails[n]
            assert e.b[n] == int(mpmath.floor(r)) >= 0
            assert abs(e.residuals[n + 1] - (r - mpmath.floor(r))) < mpmath.mpf(2) ** -300


def test_pinner_terms_match_brute_scan():
    # each min(s_1..s_4) term is |n| ||n alpha - gamma|| for a specific n up to a vanishing error
    for alpha in (GOLDEN, SILVER):
        for gamma in ("1/2", "pi_inv"):
            res = pinner_for(alpha, gamma, 14)
            ncf = negative_cf(alpha, 16)
            g = parse_real(gamma)
            for k, *_, m in res.rows:
                if k < 10:
                    continue
                n = np.arange(1, ncf.q[k + 1] + 1)
                n = np.concatenate((n, -n))
                hi, lo = orbit_fixed(parse_real(alpha).fixed(), n, (-g.fixed()) % ONE)
                vals = np.abs(n) * fixed_norm(hi, lo)
                assert np.min(np.abs(vals - m)) / m < 1e-2


def test_pinner_golden_half_against_aligned_scan():
    res = pinner_for(GOLDEN, "1/2", 30)
    ref = tail_inhomogeneous_min(golden_mp(), mpmath.mpf(1) / 2, 1000, 30000)
    assert abs(res.value - ref) <= max(res.certificate, 5e-3)
    assert res.value <= 0.25


def test_pinner_results_below_quarter():
    for alpha in (GOLDEN, SILVER):
        for gamma in ("1/2", "pi_inv", "cf:2"):
            try:
                res = pinner_for(alpha, gamma, 30)
            except HypothesisError:
                assert alpha is SILVER and gamma == "cf:2"
                continue
            assert res.value <= 0.25 + 1e-9
            assert res.certificate <= 1e-6 * res.value


def test_pinner_flags_lattice_gamma():
    with pytest.raises(HypothesisError):
        pinner_for(SILVER, "silver", 20)


def test_brute_M_examples():
    assert brute_M(GOLDEN, 0, 10 ** 5).value == pytest.approx(1 / math.sqrt(5), abs=2e-4)
    # gamma = {2 alpha} hits exactly only at n = 2; the tail windows see the homogeneous constant
    for N in (10 ** 3, 10 ** 4, 10 ** 5):
        assert brute_M(GOLDEN, Real.lattice(GOLDEN, 2), N).value == pytest.approx(1 / math.sqrt(5), abs=2e-3)
    # minimizers for gamma = 1/2 grow by a factor near 4.24, so a single [N/2, N] window can miss
    # them; three consecutive windows cover [N/2, 4N] and stabilize
    spans = [min(brute_M(GOLDEN, "1/2", m * N).value for m in (1, 2, 4)) for N in (10 ** 3, 10 ** 4, 10 ** 5)]
    assert max(spans) - min(spans) < 0.1 * min(spans)
    with pytest.raises(ValueError):
        brute_M(GOLDEN, 0, 999)
