import json
import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import integrate, optimize

from uttoeplitz import indlimit as il
from uttoeplitz.embed import dilate_strip, fourier_conjugate
from uttoeplitz.errors import (
    BoundViolation,
    DensityBelowDelta,
    LengthMismatch,
    MeasureError,
    NonUnitMass,
    NotNilpotentBlock,
    TooLarge,
)
from uttoeplitz.toeplitz import C_PAIRED, operator_norm, strip_matrix

TENT = {"ac": [{"interval": [-1, 1], "density": [[-1, 0.25], [0, 0.75], [1, 0.25]], "delta": 0.25, "mass": "1"}]}
MIXED = {"atoms": [{"x": -0.5, "w": "1/4"}, {"x": 0.5, "w": "1/4"}],
         "ac": [{"interval": [-0.25, 0.25], "density": [[-0.25, 1.0], [0.25, 1.0]], "delta": 1, "mass": "1/2"}]}


# --- measures -----------------------------------------------------------------


def test_measure_parsing(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps(MIXED))
    m = il.MeasureSpec.load(path)
    assert len(m.atoms) == 2 and m.atoms[0][1] == Fraction(1, 4)
    assert il.choose_n1(m) == 4
    assert il.choose_n1(il.uniform_measure()) == 2


@pytest.mark.parametrize("doc, err", [
    ({"atoms": [{"x": 0, "w": "1/2"}]}, NonUnitMass),
    ({"atoms": [{"x": 1, "w": "1"}]}, MeasureError),
    ({"ac": [{"interval": [-1, 1], "density": [[-1, 0.5], [1, 0.5]], "delta": 0.6, "mass": "1"}]}, DensityBelowDelta),
    ({"ac": [{"interval": [-1, 1], "density": [[-1, 0.4], [1, 0.4]], "delta": 0.1, "mass": "1"}]}, MeasureError),
    ({"ac": [{"interval": [-1, 1]}]}, MeasureError),
    ({"atoms": [{"x": 0, "w": "1/7919"}, {"x": 0.1, "w": "1/7907"}, {"x": -0.1, "w": "1"}]}, NonUnitMass),
])
def test_measure_rejects(doc, err):
    with pytest.raises(err):
        il.MeasureSpec.from_dict(doc)


def test_n1_cap():
    doc = {"atoms": [{"x": -1, "w": "1/2"}, {"x": 1, "w": "4095/8194"}, {"x": 2049, "w": "1/4097"}]}
    doc["atoms"][1]["x"] = -(-0.5 + 2049 / 4097) / (4095 / 8194)
    with pytest.raises(TooLarge):
        il.choose_n1(il.MeasureSpec.from_dict(doc))


# --- dyadic approximation -------------------------------------------------------


def test_uniform_two_stages():
    approx = il.dyadic_approximation(il.uniform_measure(), 2)
    np.testing.assert_allclose(approx.cuts[0][0], [-0.5, 0, 0.5], atol=1e-12)
    np.testing.assert_allclose(approx.cuts[1][0], [-0.5, -0.25, 0, 0.25, 0.5], atol=1e-12)
    np.testing.assert_allclose(approx.stages[0], [-0.25, 0.25], atol=1e-12)
    np.testing.assert_allclose(approx.stages[1], [-0.375, -0.125, 0.125, 0.375], atol=1e-12)
    np.testing.assert_allclose(approx.increment_norms, [0.25, 0.125], atol=1e-12)
    p = il.increments_to_pairs(approx, 2)
    np.testing.assert_allclose(p.pairs, [[-0.125, 0.125], [-0.125, 0.125]], atol=1e-12)


def test_uniform_increment_norms_halve():
    approx = il.dyadic_approximation(il.uniform_measure(), 6)
    np.testing.assert_allclose(approx.increment_norms, 0.5 ** np.arange(2, 8), atol=1e-12)


def _quad(f, lo, hi, kinks):
    pts = [k for k in kinks if lo < k < hi]
    return integrate.quad(f, lo, hi, points=pts or None, epsabs=1e-14, epsrel=1e-13)[0]


def _quad_oracle(density, a, b, cells, kinks=()):
    """Cell averages by adaptive quadrature and root finding."""
    total = _quad(density, a, b, kinks)
    cdf = lambda t: _quad(density, a, t, kinks)
    cuts = [a] + [optimize.brentq(lambda t: cdf(t) - k * total / cells, a, b, xtol=1e-14)
                  for k in range(1, cells)] + [b]
    return np.array([_quad(lambda x: x * density(x), lo, hi, kinks) / _quad(density, lo, hi, kinks)
                     for lo, hi in zip(cuts, cuts[1:])])


def test_tent_matches_quadrature_oracle():
    m = il.MeasureSpec.from_dict(TENT)
    approx = il.dyadic_approximation(m, 4)
    dens = lambda x: 0.75 - 0.5 * abs(x)
    for j in (1, 3, 4):
        cells = approx.n1 * 2 ** (j - 1)
        np.testing.assert_allclose(approx.stages[j - 1], _quad_oracle(dens, -1, 1, cells, kinks=(0.0,)), atol=1e-9)


def test_mixed_measure_stages():
    approx = il.dyadic_approximation(il.MeasureSpec.from_dict(MIXED), 3)
    assert approx.n1 == 4
    # atoms stay put, the uniform middle refines
    np.testing.assert_allclose(approx.stages[0], [-0.5, -0.125, 0.125, 0.5], atol=1e-12)
    assert approx.refinement_gap() <= 1e-12
    for j in range(1, 4):
        assert abs(approx.stages[j - 1].mean()) <= 1e-12


def test_constant_piece_gives_zero_pairs():
    approx = il.dyadic_approximation(il.MeasureSpec.from_dict({"atoms": [{"x": 0, "w": "1"}]}), 3)
    assert not il.increments_to_pairs(approx, 2).pairs.any()


@pytest.mark.parametrize("doc", [TENT, MIXED])
def test_pairs_centered(doc):
    approx = il.dyadic_approximation(il.MeasureSpec.from_dict(doc), 4)
    for j in range(2, 5):
        values = approx.increment(j).values
        m = values.size // 2
        assert np.max(np.abs(values[:m] + values[m:])) <= 1e-10


def test_flip_positions_is_permutation():
    for n1 in (1, 2, 3):
        for j in range(1, 5):
            pos = il.flip_positions(n1, j)
            assert sorted(pos) == list(range(n1 * 2 ** (j - 1)))


# --- assembly -----------------------------------------------------------------


def test_single_stage():
    asm = il.assemble(il.StagePlan(2, 1), [[1, -1]])
    np.testing.assert_allclose(asm.matrix(), [[0, 1], [0, 0]], atol=1e-15)


def test_zero_increments():
    asm = il.assemble(il.StagePlan(2, 3), [np.zeros(2), np.zeros(4), np.zeros(8)])
    assert not asm.strip.any()


def test_two_stage_example():
    a2 = [0.5, 0.5, -0.5, -0.5]  # pairs (1/2, -1/2) twice, by parent position
    asm = il.assemble(il.StagePlan(2, 2), [[1, -1], a2])
    assert asm.flips[1] == [False, True]
    np.testing.assert_allclose(asm.increments[1].values, [0.5, -0.5, -0.5, 0.5])
    np.testing.assert_allclose(asm.strip, [(1 - 1j) / 4, 1, (1 + 1j) / 4], atol=1e-15)
    assert operator_norm(asm.matrix()) <= C_PAIRED * 1.5 + 1e-8


def test_assemble_length_checks():
    with pytest.raises(LengthMismatch):
        il.assemble(il.StagePlan(2, 2), [[1, -1]])
    with pytest.raises(LengthMismatch):
        il.assemble(il.StagePlan(2, 2), [[1, -1], [1, -1]])


def test_bound_violation_is_reported(monkeypatch):
    monkeypatch.setattr(il, "K_THEOREM", 0.1)
    with pytest.raises(BoundViolation) as info:
        il.assemble(il.StagePlan(2, 1), [[1, -1]])
    assert info.value.instance["stage"] == 1


@pytest.mark.parametrize("doc", [None, TENT, MIXED])
def test_realized_diagonal_is_last_stage(doc):
    m = il.uniform_measure() if doc is None else il.MeasureSpec.from_dict(doc)
    approx, asm = il.realize_measure(m, 4)
    diag = asm.realized_diagonal()
    np.testing.assert_allclose(np.sort(diag), np.sort(approx.stages[-1]), atol=1e-12)
    np.testing.assert_allclose(diag, approx.stage_values(4)[asm.source], atol=1e-12)
    z = asm.matrix()
    np.testing.assert_allclose(z + z.conj().T, fourier_conjugate(np.diag(diag)), atol=1e-12)


def test_stage_strips_commute():
    _, asm = il.realize_measure(il.MeasureSpec.from_dict(TENT), 4)
    mats = [strip_matrix(s) for s in asm.stage_strips]
    for a in mats:
        for b in mats:
            assert operator_norm(a @ b - b @ a) <= 1e-10


def test_uniform_j6():
    approx, asm = il.realize_measure(il.uniform_measure(), 6, n1=2)
    z = asm.matrix()
    assert asm.N == 64
    assert not np.tril(z).any()
    assert not np.linalg.matrix_power(z, 64).any()
    assert operator_norm(z) <= asm.norm_budget + 1e-8
    assert il.power_norm_profile(z, 64)[-1] <= 1e-12


# --- profiles -------------------------------------------------------------------


def test_profile_examples():
    e = np.array([[0.0, 1.0], [0.0, 0.0]])
    np.testing.assert_array_equal(il.power_norm_profile(e, 3), [1, 0, 0])
    np.testing.assert_allclose(il.power_norm_profile(np.eye(3), 4), np.ones(4))


def test_profile_assembled_n8():
    _, asm = il.realize_measure(il.uniform_measure(), 3)
    prof = il.power_norm_profile(asm.matrix(), 8)
    assert prof[-1] == 0.0


def test_direct_sum_profile():
    e = np.array([[0.0, 1.0], [0.0, 0.0]])
    np.testing.assert_array_equal(il.direct_sum_profile([e, e], 3), [1, 0, 0])
    np.testing.assert_array_equal(il.direct_sum_profile([], 4), np.zeros(4))
    big = strip_matrix(np.ones(3))
    expect = np.maximum(il.power_norm_profile(e, 5), il.power_norm_profile(big, 5))
    np.testing.assert_allclose(il.direct_sum_profile([e, big], 5), expect, rtol=1e-12)
    # blockwise agrees with the materialized block-diagonal matrix
    from scipy.linalg import block_diag
    np.testing.assert_allclose(il.direct_sum_profile([e, big], 5), il.power_norm_profile(block_diag(e, big), 5), rtol=1e-12)
    with pytest.raises(NotNilpotentBlock):
        il.direct_sum_profile([np.eye(2)], 2)


# --- counterexample -----------------------------------------------------------------


def exact_tail(N, terms=400):
    return sum(Fraction(1, n * 2**n) for n in range(N + 1, N + terms))


def test_counterexample_first_row():
    row = il.counterexample_series(1)[0]
    assert abs(row.s_N - (math.log(2) - 0.5)) <= 1e-12
    assert abs(row.increment_norm - max(1 / 8, abs(row.s_N - 0.5))) <= 1e-12


def test_tail_sums_match_rational_oracle():
    for N in (1, 2, 5, 20, 60):
        assert il.tail_sum(N) == pytest.approx(float(exact_tail(N)), rel=1e-14)
        assert il.scaled_tail(N) == pytest.approx(float(exact_tail(N) * 2**N), rel=1e-14)


def test_cell_averages_by_enumeration():
    # step function 1/n on (2^-n, 2^-n+1]; average over (0, 2^-N) by summing its steps
    for N in (1, 3, 7):
        avg = sum(Fraction(1, n) * Fraction(1, 2**n) for n in range(N + 1, N + 400)) * 2**N
        assert il.scaled_tail(N) == pytest.approx(float(avg), rel=1e-14)


def test_counterexample_divergence():
    rows = il.counterexample_series(100)
    assert rows[-1].partial_sum >= 3.5
    assert all(0 < r.s_N < 2.0 ** (-r.N - 1) for r in rows[:50])
    # the exact cell-average jumps, unlike the tabulated increments, are summable
    assert sum(r.cell_average_increment for r in rows) < 1.0
