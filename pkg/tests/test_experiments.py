import math

import numpy as np
import pytest

from uttoeplitz import experiments as ex
from uttoeplitz.errors import BoundViolation
from uttoeplitz.toeplitz import K_THEOREM, C_PAIRED, toeplitz_coefficients


def test_sweep_n2_ratio_at_most_one():
    (res,) = ex.bound_sweep([2], 50, seed=3)
    assert res.worst_ratio <= 1.0 + 1e-15


def test_sweep_n4():
    (res,) = ex.bound_sweep([4], 200)
    assert res.worst_ratio <= 1.7733
    assert res.max_skew_gap <= 1e-8
    assert res.max_eig_error <= 1e-9


def test_zero_spectrum_ratio():
    assert ex.realize_trial(np.zeros(4))["ratio"] == 0.0


def test_sweep_is_deterministic_and_order_free():
    a = ex.bound_sweep([8, 16], 10, seed=7)
    b = ex.bound_sweep([16], 10, seed=7, workers=4)
    np.testing.assert_array_equal(a[1].ratios, b[0].ratios)
    np.testing.assert_array_equal(ex.bound_sweep([8], 10, seed=7)[0].ratios, a[0].ratios)


def test_sweep_two_point():
    (res,) = ex.bound_sweep([16], 20, distribution="two-point")
    assert res.worst_ratio <= K_THEOREM
    with pytest.raises(ValueError):
        ex.bound_sweep([5], 1, distribution="two-point")


def test_sweep_violation(monkeypatch):
    monkeypatch.setattr(ex, "K_THEOREM", 0.1)
    with pytest.raises(BoundViolation) as info:
        ex.bound_sweep([4], 3)
    assert len(info.value.instance["spectrum"]) == 4


def test_balanced_closed_form_n2():
    np.testing.assert_allclose(ex.balanced_strip_closed_form(2), [(1 + 1j) / 2, 0, (1 - 1j) / 2], atol=1e-15)


@pytest.mark.parametrize("n", [1, 2, 3, 8, 33])
def test_balanced_closed_form_matches_fft(n):
    got = toeplitz_coefficients(ex.balanced_family(n)).strip
    np.testing.assert_allclose(got, ex.balanced_strip_closed_form(n), atol=1e-10)


def test_lowerbound_growth_small():
    g = ex.lowerbound_growth([2, 4, 8, 16, 32])
    np.testing.assert_allclose(g.quad_forms.real, 0.5, atol=1e-10)
    assert np.all(g.norms >= g.bounds)
    assert g.monotone
    assert 0.15 < g.slope < 1 / math.pi


def test_lower_bound_value():
    assert ex.lower_bound(512) == pytest.approx(math.log(512) / math.pi - 1.5 / math.pi)
    assert ex.lower_bound(512) == pytest.approx(1.508, abs=1e-3)


def test_rearrangement_gap_small():
    raw, greedy = ex.rearrangement_gap(32)
    assert greedy == pytest.approx(1.0)
    assert raw > 1.7


def test_paired_sweep():
    for row in ex.paired_sweep(20, m_max=64, seed=2):
        assert row["rotation_sum_max"] <= 3 * row["sup"] + 1e-10
        assert row["norm"] <= row["bound"] + 1e-8
        assert row["bound"] == pytest.approx(C_PAIRED * row["sup"])


def test_oracle_comparison():
    for row in ex.oracle_comparison(6, sizes=(4, 5, 6)):
        assert row["min_norm"] <= row["greedy_norm"] + 1e-12
        assert row["min_norm"] <= K_THEOREM * row["sup"]


def test_batch_realize_example():
    realized = ex.batch_realize([[1, -1], [2, -1, -1]])
    assert all(r <= K_THEOREM for _, r in realized)
    prof = ex.batch_profile(realized, 4)
    assert prof[1] > 0
    np.testing.assert_array_equal(prof[2:], 0)


def test_batch_zero_fiber():
    ((T, r),) = ex.batch_realize([np.zeros(3)])
    assert not T.any() and r == 0


def test_batch_random_fibers(rng):
    fibers = [rng.uniform(-1, 1, 16) for _ in range(100)]
    fibers = [f - f.mean() for f in fibers]
    assert max(r for _, r in ex.batch_realize(fibers)) <= 1.7733


def test_irrational_reduces_to_balanced():
    np.testing.assert_allclose(ex.irrational_family(0.5, 4), [0.5, 0.5, -0.5, -0.5])
    (row,) = ex.irrational_explorer(0.5, [4])
    assert row["ratio"] <= K_THEOREM


def test_irrational_explorer():
    rows = ex.irrational_explorer(2**-0.5, [16, 64])
    assert rows[-1]["ratio"] <= K_THEOREM + 1e-8
    assert all(r["profile_mn"] == 0.0 and r["flag"] == "EXPLORATORY" for r in rows)
    with pytest.raises(ValueError):
        ex.irrational_explorer(1.5, [4])


def test_skew_bound_holds(rng):
    x = rng.uniform(-1, 1, 30)
    assert ex.skew_bound_holds(x - x.mean())
