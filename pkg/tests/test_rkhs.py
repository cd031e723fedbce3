import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import quad_box, ref_dc, ref_matrix, ref_ss, ref_tc
from rkhs_sysid import (DivergenceSuspected, InvalidArgument, RkhsElement, constant, dc,
                        element_gram, evaluate, inner, norm, section, section_integral,
                        section_sum, ss, tc)
from rkhs_sysid.rkhs import cross_form

CASES = [
    (tc(0.5), ref_tc(0.5)), (tc(0.93), ref_tc(0.93)), (dc(0.7, -0.4), ref_dc(0.7, -0.4)),
    (ss(0.3, "discrete"), ref_ss(0.3)), (tc(1.2, "continuous"), ref_tc(1.2, True)),
    (dc(0.5, 0.8, "continuous"), ref_dc(0.5, 0.8)), (ss(0.6), ref_ss(0.6)),
]
IDS = [f"{k.family}-{k.domain.value}-{i}" for i, (k, _) in enumerate(CASES)]


def random_atoms(k, rng, n=10):
    c = rng.integers(0, 40, n).astype(float) if k.discrete else rng.uniform(0, 6, n)
    return c, rng.normal(size=n)


def test_section_reproduces():
    k = tc(0.5)
    assert evaluate(section(k, 2), 1) == 0.25
    assert evaluate(section(k, 2), 1) == k(1, 2)


@pytest.mark.parametrize("k, f", CASES, ids=IDS)
def test_section_norm(k, f, rng):
    for t in (rng.integers(0, 50, 50) if k.discrete else rng.uniform(0, 9, 50)):
        assert norm(section(k, t)) ** 2 == pytest.approx(f(t, t), rel=1e-12)
        assert norm(section(k, t)) == pytest.approx(math.sqrt(f(t, t)), rel=1e-12)


@pytest.mark.parametrize("k, f", CASES, ids=IDS)
def test_inner_double_loop_oracle(k, f, rng):
    for _ in range(5):
        c1, w1 = random_atoms(k, rng)
        c2, w2 = random_atoms(k, rng)
        oracle = sum(a * b * f(s, t) for a, s in zip(w1, c1) for b, t in zip(w2, c2))
        got = inner(RkhsElement(k, c1, w1), RkhsElement(k, c2, w2))
        assert got == pytest.approx(oracle, rel=1e-12, abs=1e-14)


@pytest.mark.parametrize("k, f", CASES, ids=IDS)
def test_norm_quadratic_form(k, f, rng):
    c, w = random_atoms(k, rng)
    g = ref_matrix(f, c)
    assert norm(RkhsElement(k, c, w)) ** 2 == pytest.approx(w @ g @ w, rel=1e-12, abs=1e-14)


@pytest.mark.parametrize("k, f", CASES, ids=IDS)
def test_evaluate_equals_inner_with_section(k, f, rng):
    c, w = random_atoms(k, rng)
    e = RkhsElement(k, c, w)
    ts = rng.integers(0, 60, 100) if k.discrete else rng.uniform(0, 10, 100)
    vals = evaluate(e, ts)
    for t, v in zip(ts, vals):
        assert abs(v - inner(e, section(k, t))) <= 1e-12 * (1 + abs(v))
        assert v == pytest.approx(sum(a * f(t, s) for a, s in zip(w, c)), rel=1e-12, abs=1e-14)


def test_inner_basic_identities(rng):
    k = dc(0.6, 0.3)
    assert inner(section(k, 3), section(k, 5)) == pytest.approx(k(3, 5), rel=1e-15)
    c, w = random_atoms(k, rng)
    e = RkhsElement(k, c, w)
    assert inner(e, RkhsElement.zero(k)) == 0.0
    alpha = -2.7
    assert norm(alpha * e) == pytest.approx(abs(alpha) * norm(e), rel=1e-12)
    e2 = RkhsElement(k, *random_atoms(k, rng))
    t = 7.0
    assert evaluate(e + e2, t) == pytest.approx(evaluate(e, t) + evaluate(e2, t), rel=1e-12)
    assert inner(e, e2) == pytest.approx(inner(e2, e), rel=1e-14)


def test_mismatched_kernels_rejected():
    with pytest.raises(InvalidArgument):
        inner(section(tc(0.5), 1), section(tc(0.6), 1))
    with pytest.raises(InvalidArgument):
        section(tc(0.5), 1) + section(dc(0.5, 0.5), 1)


def test_atoms_coalesce():
    e = RkhsElement(tc(0.5), [3, 1, 3], [1.0, 2.0, 0.5])
    assert e.atoms == [(2.0, 1.0), (1.5, 3.0)]


@pytest.mark.parametrize("k", [tc(0.8), ss(0.4), constant(1.5), tc(2.0, "continuous")])
def test_fast_path_matches_dense(k, rng):
    # semiseparable prefix sums vs a direct kernel matrix
    n = 300
    x = rng.integers(0, 200, n).astype(float) if k.discrete else rng.uniform(0, 20, n)
    y = rng.integers(0, 200, n).astype(float) if k.discrete else rng.uniform(0, 20, n)
    a, b = rng.normal(size=n), rng.normal(size=n)
    dense = a @ k.matrix(x, y) @ b
    assert cross_form(k, x, a, y, b) == pytest.approx(dense, rel=1e-10, abs=1e-12)


def test_element_gram_matches_pairwise(rng):
    k = tc(0.7)
    els = [RkhsElement(k, *random_atoms(k, rng)) for _ in range(6)]
    g = element_gram(els)
    for i, a in enumerate(els):
        for j, b in enumerate(els):
            assert g[i, j] == pytest.approx(inner(a, b), rel=1e-12, abs=1e-14)


def test_section_integral_level_zero():
    f0 = section_integral(tc(1.0, "continuous"), 0, 1, 0)
    assert f0.atoms == [(1.0, 0.0)]


def test_section_integral_structure():
    f3 = section_integral(tc(1.0, "continuous"), 0.5, 2.5, 3)
    np.testing.assert_allclose(f3.centers, 0.5 + 0.25 * np.arange(8))
    np.testing.assert_allclose(f3.weights, 0.25)


def test_section_integral_norm_identity():
    k = tc(1.0, "continuous")
    target = quad_box(ref_tc(1.0, True), (0, 1), (0, 1))
    assert target == pytest.approx(2 - 4 / math.e, abs=1e-12)
    assert norm(section_integral(k, 0, 1, 14)) ** 2 == pytest.approx(target, abs=1e-4)


def test_refinement_gaps_non_increasing():
    k = tc(1.0, "continuous")
    fs = [section_integral(k, 0, 1, n) for n in range(4, 16)]
    gaps = [norm(b - a) for a, b in zip(fs, fs[1:])]
    assert all(b <= a for a, b in zip(gaps, gaps[1:]))


def test_section_integral_constant_kernel_exact():
    k = constant(2.5, "continuous")
    for n in range(6):
        assert norm(section_integral(k, 0, 1, n)) ** 2 == pytest.approx(2.5, rel=1e-14)


@pytest.mark.parametrize("bad", [
    lambda: section_integral(tc(0.5), 0, 1, 3),
    lambda: section_integral(tc(1.0, "continuous"), 1, 1, 3),
    lambda: section_integral(tc(1.0, "continuous"), 0, math.inf, 3),
    lambda: section_sum(tc(1.0, "continuous"), 0, 2),
    lambda: section_sum(tc(0.5), 3, 2),
])
def test_section_preconditions(bad):
    with pytest.raises(InvalidArgument):
        bad()


def test_section_sum_examples(rng):
    k = tc(0.5)
    assert section_sum(k, 4, 4).atoms == section(k, 4).atoms
    assert norm(section_sum(k, 0, 1)) ** 2 == pytest.approx(2.5, rel=1e-15)
    for _ in range(10):
        g = RkhsElement(k, rng.integers(0, 15, 5).astype(float), rng.normal(size=5))
        oracle = sum(evaluate(g, t) for t in range(2, 12))
        assert inner(section_sum(k, 2, 11), g) == pytest.approx(oracle, rel=1e-10)


def test_section_sum_infinite_matches_series():
    k = tc(0.5)
    e = section_sum(k, 0, tail_tol=1e-8)
    # ||sum_t k(., t)||^2 = sum_{s,t} beta^max(s,t) = 6
    assert norm(e) ** 2 == pytest.approx(6.0, abs=1e-8)


def test_section_sum_divergent():
    with pytest.raises(DivergenceSuspected):
        section_sum(constant(1.0), 0)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 30), st.floats(-5, 5)), min_size=1, max_size=12),
       st.floats(0.05, 0.95))
def test_inner_psd_property(atoms, beta):
    k = tc(beta)
    c = [a[0] for a in atoms]
    w = np.array([a[1] for a in atoms])
    e = RkhsElement(k, c, w)
    bound = 1e-10 * np.sum(np.abs(w)) ** 2 * max(k(x, x) for x in c)
    assert inner(e, e) >= -bound
