import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pmqkd.sifting import (
    TWO_PI,
    NotOnLattice,
    PhaseSample,
    accepted_offsets,
    correspondence_table,
    flip_by_detector,
    flip_by_phase,
    ideal_detector,
    phase_delta,
    sift_round,
    slice_index,
    slice_match,
    total_phase,
)

PI = math.pi

# (kappa_a, kappa_b, delta_phi in units of 2pi/3, kappa_b', kappa_b'') with |phi_a - phi_b| = 4pi/3
TABLE_1 = [
    (0, 0, 2, 2, 0),
    (0, 1, 1, 2, 0),
    (0, 2, 0, 2, 0),
    (1, 0, 0, 0, 1),
    (1, 1, 2, 0, 1),
    (1, 2, 1, 0, 1),
    (2, 0, 1, 1, 2),
    (2, 1, 0, 1, 2),
    (2, 2, 2, 1, 2),
]


@pytest.mark.parametrize("kappa, phi, expected", [
    (0, 0.0, 0.0),
    (2, 0.0, 4 * PI / 3),
    (1, 3 * PI / 2, PI / 6),
])
def test_total_phase(kappa, phi, expected):
    assert total_phase(kappa, phi, 3) == pytest.approx(expected, abs=1e-12)


def test_phase_delta_examples():
    assert phase_delta(0.0, 0.0) == 0.0
    phi_a, phi_b = 4 * PI / 3, 0.0
    d = phase_delta(total_phase(0, phi_a, 3), total_phase(0, phi_b, 3))
    assert d == pytest.approx(4 * PI / 3)
    d = phase_delta(total_phase(2, phi_a, 3), total_phase(0, phi_b, 3))
    assert d == pytest.approx(2 * PI / 3)


def test_phase_delta_is_signed():
    # the absolute value would give 2pi/3 here, not 4pi/3
    assert phase_delta(0.0, 2 * PI / 3) == pytest.approx(4 * PI / 3)


def test_ideal_detector():
    assert ideal_detector(0.0, 3) == 0
    assert ideal_detector(2 * PI / 3, 3) == 1
    assert ideal_detector(4 * PI / 3 + 1e-12, 3, tol=1e-9) == 2
    assert ideal_detector(TWO_PI - 1e-12, 3) == 0
    with pytest.raises(NotOnLattice):
        ideal_detector(0.3, 3)


def test_flips():
    assert flip_by_detector(0, 0, 3) == 0
    assert flip_by_detector(0, 2, 3) == 2
    assert flip_by_detector(2, 2, 3) == 1
    assert flip_by_phase(2, 0, 3) == 2
    assert flip_by_phase(2, 2, 3) == 0
    assert flip_by_phase(1, 2, 3) == 2
    with pytest.raises(ValueError):
        flip_by_detector(3, 0, 3)


def test_sift_round_examples():
    out = sift_round(1, 1, 4 * PI / 3, 0.0, 3)
    assert (out.detector, out.kappa_b_prime, out.kappa_b_double_prime) == (2, 0, 1)
    assert out.accepted
    out = sift_round(0, 0, 0.0, 0.0, 3)
    assert (out.detector, out.kappa_b_double_prime) == (0, 0)
    with pytest.raises(NotOnLattice):
        sift_round(0, 0, 0.5, 0.0, 3)


def test_sift_round_accepts_phase_samples():
    a, b = PhaseSample.from_radians(4 * PI / 3, 15), PhaseSample.from_radians(0.0, 15)
    assert sift_round(2, 0, a, b, 3).kappa_b_double_prime == 2


def test_all_27_cases():
    for ka in range(3):
        for kb in range(3):
            for s in range(3):
                out = sift_round(ka, kb, TWO_PI * s / 3 + 0.7, 0.7, 3)
                assert out.kappa_b_double_prime == ka


def test_table_1_rows():
    rows = correspondence_table(3, 2)
    assert len(rows) == 9
    for row, (ka, kb, dk, kp, kpp) in zip(rows, TABLE_1):
        assert (row.kappa_a, row.kappa_b) == (ka, kb)
        assert row.phase_offset == pytest.approx(4 * PI / 3)
        assert row.delta_phi == pytest.approx(TWO_PI * dk / 3)
        assert row.detector == dk
        assert (row.kappa_b_prime, row.kappa_b_double_prime) == (kp, kpp)


def test_table_zero_offset_diagonal_fires_d0():
    for r in correspondence_table(3, 0):
        assert (r.detector == 0) == (r.kappa_a == r.kappa_b)


def test_table_two_phase():
    rows = correspondence_table(2, 0)
    assert len(rows) == 4
    for r in rows:
        assert r.detector == (0 if r.kappa_a == r.kappa_b else 1)
        assert r.kappa_b_double_prime == r.kappa_a


@pytest.mark.parametrize("n", range(2, 8))
def test_table_structure(n):
    for s in range(n):
        rows = correspondence_table(n, s)
        assert len(rows) == n * n
        for ka in range(n):
            col = [r for r in rows if r.kappa_a == ka]
            assert sorted(r.detector for r in col) == list(range(n))
            assert {r.kappa_b_double_prime for r in col} == {ka}


@pytest.mark.parametrize("phi, M, expected", [(0.0, 16, 0), (PI, 16, 8), (3.2, 16, 8)])
def test_slice_index(phi, M, expected):
    assert slice_index(phi, M) == expected


def test_slice_index_wraps():
    assert slice_index(TWO_PI, 16) == 0
    assert slice_index(-1e-18, 16) in (0, 15)
    assert slice_index(TWO_PI - 1e-15, 16) == 15


def test_slice_match_examples():
    assert slice_match(7, 7, 16, 3) == (True, 0, 0.0)
    assert slice_match(7, 2, 15, 3) == (True, 1, 0.0)
    ok, s, res = slice_match(6, 1, 16, 3)
    assert ok and s == 1 and res == pytest.approx(1 / 3)
    assert slice_match(7, 1, 16, 3)[0] is False


def test_accepted_fraction_is_n_over_M():
    for n in (2, 3, 4):
        for M in (16, 15, 12, 24):
            if M >= n and M % n == 0:
                assert len(accepted_offsets(M, n)) == n
    # 16 slices, 3 phases: offsets 0, 5, 11 (residuals 0, -1/3, +1/3)
    assert [(d, s) for d, s, _ in accepted_offsets(16, 3)] == [(0, 0), (5, 1), (11, 2)]


trits = st.integers(0, 6)


@given(st.integers(2, 7), st.data())
def test_sifting_correct_property(n, data):
    ka = data.draw(st.integers(0, n - 1))
    kb = data.draw(st.integers(0, n - 1))
    s = data.draw(st.integers(0, n - 1))
    phi_b = data.draw(st.floats(0, TWO_PI, exclude_max=True))
    out = sift_round(ka, kb, phi_b + TWO_PI * s / n, phi_b, n)
    assert out.kappa_b_double_prime == ka


@given(st.integers(0, 2), st.integers(0, 2), st.integers(0, 2),
       st.floats(-10, 10, allow_nan=False))
def test_global_phase_invariance(ka, kb, s, offset):
    base = sift_round(ka, kb, TWO_PI * s / 3, 0.0, 3)
    shifted = sift_round(ka, kb, TWO_PI * s / 3 + offset, offset, 3)
    assert base == shifted
    d0 = phase_delta(total_phase(ka, TWO_PI * s / 3, 3), total_phase(kb, 0.0, 3))
    d1 = phase_delta(total_phase(ka, TWO_PI * s / 3 + offset, 3), total_phase(kb, offset, 3))
    assert min(abs(d0 - d1), TWO_PI - abs(d0 - d1)) < 1e-9


@given(st.floats(0, TWO_PI, exclude_max=True), st.floats(0, TWO_PI, exclude_max=True),
       st.integers(1, 64))
def test_slice_index_monotone_and_total(a, b, M):
    lo, hi = sorted((a, b))
    assert 0 <= slice_index(lo, M) <= slice_index(hi, M) < M


@given(st.integers(2, 7), st.integers(1, 8), st.data())
def test_slice_match_exact_lattice(n, mult, data):
    M = n * mult
    s = data.draw(st.integers(0, n - 1))
    m_b = data.draw(st.integers(0, M - 1))
    m_a = (m_b + s * mult) % M
    assert slice_match(m_a, m_b, M, n) == (True, s, 0.0)
