"""Tests for mutual coherence metrics."""

import numpy as np
import pytest

from ultracs.coherence import (
    CoherenceReport,
    coherence_frobenius,
    coherence_report,
    mutual_coherence_max,
    normalize_columns,
)


def brute_force_mu_max(a):
    # straight double loop over normalized column pairs
    a = np.asarray(a, dtype=float)
    norms = np.sqrt((a * a).sum(axis=0))
    cols = [i for i in range(a.shape[1]) if norms[i] > 0]
    best = 0.0
    for ii, i in enumerate(cols):
        for j in cols[ii + 1 :]:
            g = abs(a[:, i] @ a[:, j]) / (norms[i] * norms[j])
            best = max(best, g)
    return best


def brute_force_mu_frob(a):
    a = np.asarray(a, dtype=float)
    norms = np.sqrt((a * a).sum(axis=0))
    cols = [i for i in range(a.shape[1]) if norms[i] > 0]
    total = 0.0
    for i in cols:
        for j in cols:
            if i == j:
                continue
            g = (a[:, i] @ a[:, j]) / (norms[i] * norms[j])
            total += g * g
    return total / a.shape[1]


def test_hand_case_three_columns():
    a = np.array(
        [
            [1.0, 1.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
        ]
    )
    assert mutual_coherence_max(a) == pytest.approx(1.0 / np.sqrt(2.0), rel=1e-15)


def test_orthogonal_columns_zero():
    a = np.diag([3.0, 5.0, 0.25, 7.0])
    assert mutual_coherence_max(a) == 0.0
    assert coherence_frobenius(a) == 0.0


def test_duplicate_columns_one():
    rng = np.random.default_rng(7)
    c = rng.normal(size=6)
    a = np.column_stack([c, 2.5 * c, rng.normal(size=6)])
    assert mutual_coherence_max(a) == pytest.approx(1.0, rel=1e-12)


def test_fewer_than_two_nonzero_columns_rejected():
    with pytest.raises(ValueError):
        mutual_coherence_max(np.array([[1.0], [2.0]]))
    with pytest.raises(ValueError):
        mutual_coherence_max(np.array([[1.0, 0.0], [2.0, 0.0]]))


def test_two_identical_unit_columns_frobenius():
    a = np.array([[1.0, 1.0], [0.0, 0.0]])
    # single off-diagonal pair contributes 1 + 1, divided by L = 2
    assert coherence_frobenius(a) == pytest.approx(1.0, rel=1e-15)


def test_frobenius_matches_gram_identity():
    rng = np.random.default_rng(11)
    a = rng.normal(size=(9, 14))
    g, _ = normalize_columns(a)
    gram = g.T @ g
    expected = (np.linalg.norm(gram) ** 2 - a.shape[1]) / a.shape[1]
    assert coherence_frobenius(a) == pytest.approx(expected, rel=1e-12)


def test_matches_brute_force():
    rng = np.random.default_rng(23)
    for _ in range(20):
        rows = int(rng.integers(2, 12))
        cols = int(rng.integers(2, 15))
        a = rng.normal(size=(rows, cols))
        if rng.random() < 0.5:
            a[:, rng.integers(0, cols)] = 0.0
        if np.count_nonzero((a * a).sum(axis=0)) < 2:
            continue
        assert mutual_coherence_max(a) == pytest.approx(
            brute_force_mu_max(a), rel=1e-12, abs=1e-15
        )
        assert coherence_frobenius(a) == pytest.approx(
            brute_force_mu_frob(a), rel=1e-12, abs=1e-15
        )


def test_frobenius_bounded_by_max():
    rng = np.random.default_rng(31)
    for _ in range(10):
        a = rng.normal(size=(8, 11))
        mu = mutual_coherence_max(a)
        frob = coherence_frobenius(a)
        assert frob <= (a.shape[1] - 1) * mu * mu + 1e-12


def test_column_scaling_invariance():
    rng = np.random.default_rng(41)
    a = rng.normal(size=(7, 9))
    scales = rng.uniform(0.1, 10.0, size=9)
    b = a * scales
    assert mutual_coherence_max(b) == pytest.approx(mutual_coherence_max(a), rel=1e-12)
    assert coherence_frobenius(b) == pytest.approx(coherence_frobenius(a), rel=1e-12)


def test_row_permutation_invariance():
    rng = np.random.default_rng(43)
    a = rng.normal(size=(10, 6))
    b = a[rng.permutation(10)]
    assert mutual_coherence_max(b) == pytest.approx(mutual_coherence_max(a), rel=1e-12)
    assert coherence_frobenius(b) == pytest.approx(coherence_frobenius(a), rel=1e-12)


def test_deterministic_repeats():
    rng = np.random.default_rng(47)
    a = rng.normal(size=(30, 700))
    first = mutual_coherence_max(a)
    second = mutual_coherence_max(a)
    assert first == second
    assert coherence_frobenius(a) == coherence_frobenius(a)


def test_blocked_path_matches_small_path():
    # column count above the internal block size exercises the tiled loop
    rng = np.random.default_rng(53)
    a = rng.normal(size=(6, 1100))
    direct = brute_force_mu_max(a[:, :40])
    assert mutual_coherence_max(a[:, :40]) == pytest.approx(direct, rel=1e-12)
    g, _ = normalize_columns(a)
    gram = g.T @ g
    np.fill_diagonal(gram, 0.0)
    assert mutual_coherence_max(a) == pytest.approx(np.abs(gram).max(), rel=1e-12)


def test_report_fields_and_zero_columns():
    a = np.array(
        [
            [1.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
        ]
    )
    rep = coherence_report(a)
    assert rep.n_columns == 4
    assert rep.zero_columns == (1, 3)
    assert rep.mu_max == pytest.approx(1.0 / np.sqrt(2.0), rel=1e-14)


def test_report_text_roundtrip():
    rep = CoherenceReport(
        mu_max=0.25, mu_frob=0.125, n_columns=9, zero_columns=(2, 5)
    )
    back = CoherenceReport.from_text(rep.to_text())
    assert back == rep
    empty = CoherenceReport(mu_max=1.0, mu_frob=0.5, n_columns=3, zero_columns=())
    assert CoherenceReport.from_text(empty.to_text()) == empty
