import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from qnso.cubic import (CubicMatrix, MatrixFormatError, check_conditions, check_edge_necessity,
                        load_matrix, quadratic_range_on_unit_interval, save_matrix, symmetrize)
from qnso import models

from conftest import random_cond_ii_matrix, random_stochastic_matrix, random_sufficient_matrix


def v2_matrix(a):
    return models.build(models.v2(a))


# ---------------------------------------------------------------- symmetrize

def test_symmetrize_mean_of_transposed_pair():
    raw = np.zeros((2, 2, 2))
    raw[0, 1, 0] = 1.0
    out = symmetrize(raw).entries
    assert out[0, 1, 0] == out[1, 0, 0] == 0.5


def test_symmetrize_leaves_symmetric_input_alone():
    P = v2_matrix(1.3)
    assert symmetrize(P) == P


@given(arrays(np.float64, st.sampled_from([(2, 2, 2), (3, 3, 3), (4, 4, 4)]),
              elements=st.floats(-10, 10, allow_nan=False)))
def test_symmetrize_idempotent(raw):
    once = symmetrize(raw)
    assert once.is_symmetric()
    assert symmetrize(once) == once


@given(arrays(np.float64, (3, 3, 3), elements=st.floats(-5, 5, allow_nan=False)))
def test_symmetrize_keeps_row_sum_residuals(raw):
    # row sums become the averages of the (i, j) and (j, i) sums, so a matrix
    # satisfying condition i) still does
    np.testing.assert_allclose(symmetrize(raw).entries.sum(axis=2),
                               0.5 * (raw.sum(axis=2) + raw.sum(axis=2).T), atol=1e-12)


def test_symmetrize_rejects_non_finite():
    raw = np.zeros((2, 2, 2))
    raw[0, 0, 0] = np.nan
    with pytest.raises(ValueError):
        symmetrize(raw)


def test_matrix_is_read_only():
    P = v2_matrix(1.0)
    with pytest.raises(ValueError):
        P.entries[0, 0, 0] = 3.0


@pytest.mark.parametrize("shape", [(2, 2), (2, 3, 2), (1, 1, 1)])
def test_bad_shapes(shape):
    with pytest.raises(MatrixFormatError):
        CubicMatrix(np.zeros(shape))


# ---------------------------------------------------------------- conditions

def test_v2_a1_boundary_case_passes_iii():
    rep = check_conditions(v2_matrix(1.0))
    assert rep.cond_i and rep.cond_ii and rep.cond_iii and rep.cond_iii_prime
    assert rep.has_negative_offdiagonal
    assert not rep.is_3_stochastic


def test_v2_a2_fails_iii_only_on_first_coordinate():
    rep = check_conditions(v2_matrix(2.0))
    assert rep.cond_i and rep.cond_ii and rep.cond_iii_prime
    assert not rep.cond_iii
    # P_{12,1} + (1/2) sqrt(1*1) = -1 + 1/2
    assert (0, 1, 0, -0.5) in rep.iii_violations
    assert {(i, j, k) for i, j, k, _ in rep.iii_violations} == {(0, 1, 0), (0, 2, 0)}


def test_non_preserving_matrix_passes_necessary_conditions_only():
    rep = check_conditions(models.non_preserving_example())
    assert rep.cond_i and rep.cond_ii and rep.cond_iii_prime
    assert not rep.cond_iii


def test_stochastic_volterra_matrix():
    P = np.zeros((2, 2, 2))
    P[0, 0, 0] = 1.0
    P[1, 1, 1] = 1.0
    P[0, 1] = P[1, 0] = [0.5, 0.5]
    rep = check_conditions(symmetrize(P))
    assert rep.cond_iv_volterra
    assert rep.is_3_stochastic
    assert not rep.has_negative_offdiagonal
    assert rep.sufficient


def test_v3_is_not_volterra():
    rep = check_conditions(models.build(models.v3(1.0)))
    assert not rep.cond_iv_volterra
    assert rep.cond_iii   # -1/2 >= -(1/2) sqrt(1*1)


def test_negative_tol_rejected():
    with pytest.raises(ValueError):
        check_conditions(v2_matrix(1.0), tol=-1e-3)


def test_tolerance_applies_to_row_sums():
    P = v2_matrix(1.0).entries.copy()
    P[0, 0, 0] += 1e-10
    assert not check_conditions(CubicMatrix(P)).cond_i
    assert check_conditions(CubicMatrix(P), tol=1e-9).cond_i


def test_negative_diagonal_marks_triples_not_evaluable():
    P = v2_matrix(1.0).entries.copy()
    P[1, 1, 0] = -0.2
    P[1, 1, 1] = 1.2
    rep = check_conditions(CubicMatrix(P))
    assert not rep.cond_ii
    nan_triples = [(i, j, k) for i, j, k, mg in rep.iii_violations if math.isnan(mg)]
    assert (0, 1, 0) in nan_triples
    assert json.dumps(rep.to_dict())   # nan rendered as null


def test_report_lists_empty_iff_ok(rng):
    for _ in range(200):
        rep = check_conditions(random_cond_ii_matrix(rng, 3))
        assert rep.cond_ii == (not rep.ii_violations)
        assert rep.cond_iii == (not rep.iii_violations)
        assert rep.cond_iii_prime == (not rep.iii_prime_violations)


def test_iii_implies_iii_prime_given_i_and_ii(rng):
    # the upper half of iii') follows from iii) only together with i) and ii)
    for m in (2, 3, 4):
        for _ in range(200):
            rep = check_conditions(random_sufficient_matrix(rng, m))
            assert rep.cond_i and rep.cond_ii and rep.cond_iii
            assert rep.cond_iii_prime


def test_iii_lower_bound_implies_iii_prime_lower_bound(rng):
    for _ in range(300):
        rep = check_conditions(random_cond_ii_matrix(rng, 3))
        if rep.cond_iii:
            assert not [v for v in rep.iii_prime_violations if v[3] == "lower"]


def test_sufficient_conditions_exclude_volterra(rng):
    # a matrix with i)-iii) and iv) has no negative coefficient
    for m in (2, 3, 4):
        for _ in range(100):
            P = np.zeros((m, m, m))
            for i in range(m):
                P[i, i, i] = 1.0
                for j in range(i + 1, m):
                    w = rng.uniform(-0.2, 1.2)
                    P[i, j, i] = P[j, i, i] = w
                    P[i, j, j] = P[j, i, j] = 1.0 - w
            rep = check_conditions(CubicMatrix(P))
            assert rep.cond_iv_volterra
            if rep.sufficient:
                assert not rep.has_negative_offdiagonal


# ---------------------------------------------------------------- edge ranges

def brute_range(a, b, c, n=200_001):
    t = np.linspace(0.0, 1.0, n)
    f = (a - 2 * b + c) * t ** 2 + 2 * (b - c) * t + c
    return f.min(), f.max()


@pytest.mark.parametrize("abc, expected", [
    ((1.0, 1.0, 1.0), (1.0, 1.0)),
    ((1.0, -1.0, 1.0), (0.0, 1.0)),
    ((0.0, 0.0, 1.0), (0.0, 1.0)),
])
def test_quadratic_range_examples(abc, expected):
    assert quadratic_range_on_unit_interval(*abc) == expected


def test_quadratic_range_linear_case():
    # a - 2b + c = 0
    assert quadratic_range_on_unit_interval(0.2, 0.5, 0.8) == (0.2, 0.8)


@settings(max_examples=300)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_quadratic_range_matches_dense_grid(a, b, c):
    lo, hi = quadratic_range_on_unit_interval(a, b, c)
    blo, bhi = brute_range(a, b, c)
    # the grid can only miss the extremum by the curvature over half a cell
    slack = abs(a - 2 * b + c) * (0.5 / 200_000) ** 2 + 1e-12
    assert lo <= blo + 1e-12 and blo - slack <= lo
    assert hi >= bhi - 1e-12 and bhi + slack >= hi


def test_edge_check_v2_a2_first_edge():
    rep = check_edge_necessity(v2_matrix(2.0))
    e = next(e for e in rep.edges if (e.i, e.j, e.k) == (0, 1, 0))
    assert (e.lo, e.hi) == (0.0, 1.0)
    assert e.ok and rep.passed


def test_edge_check_non_preserving_matrix_passes():
    # the violation is inside a 2-face, not on an edge
    assert check_edge_necessity(models.non_preserving_example()).passed


def test_edge_check_stochastic(rng):
    for m in (2, 3, 4):
        for _ in range(50):
            assert check_edge_necessity(random_stochastic_matrix(rng, m)).passed


def test_edge_check_equivalent_to_iii_prime(rng):
    seen = set()
    for n in range(1000):
        P = random_cond_ii_matrix(rng, 2 + n % 3)
        rep = check_conditions(P)
        assert rep.cond_ii
        edge = check_edge_necessity(P).passed
        assert edge == rep.cond_iii_prime
        seen.add(edge)
    assert seen == {True, False}


# ---------------------------------------------------------------- json

def test_json_roundtrip(tmp_path):
    P = v2_matrix(1.7)
    path = tmp_path / "p.json"
    save_matrix(P, path)
    Q, changed = load_matrix(path)
    assert Q == P and not changed


def test_loader_symmetrizes_and_reports(tmp_path):
    raw = np.zeros((2, 2, 2))
    raw[0, 0, 0] = raw[1, 1, 1] = 1.0
    raw[0, 1, 0] = 1.0
    raw[1, 0, 1] = 1.0
    path = tmp_path / "raw.json"
    path.write_text(json.dumps({"m": 2, "entries": raw.tolist()}))
    P, changed = load_matrix(path)
    assert changed
    assert P.entries[0, 1, 0] == P.entries[1, 0, 0] == 0.5


@pytest.mark.parametrize("text", [
    "{not json",
    json.dumps({"entries": [[[1]]]}),
    json.dumps({"m": 2, "entries": [[[1, 0], [0, 1]]]}),
    json.dumps({"m": 2, "entries": [[["a", 0], [0, 1]], [[0, 1], [0, 1]]]}),
])
def test_loader_rejects_malformed(tmp_path, text):
    path = tmp_path / "bad.json"
    path.write_text(text)
    with pytest.raises(MatrixFormatError):
        load_matrix(path)


def test_symmetrize_preserves_cond_i_residual(rng):
    for m in (2, 3, 4):
        P = random_sufficient_matrix(rng, m).entries
        raw = P.copy()
        noise = rng.normal(size=(m, m, m))
        raw += noise - noise.transpose(1, 0, 2)   # antisymmetric part vanishes
        assert check_conditions(symmetrize(raw)).cond_i_residual <= 1e-12
