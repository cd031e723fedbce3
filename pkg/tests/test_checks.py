import csv
import io
import math

import numpy as np
import pytest

from conftest import quad_box, ref_tc
from rkhs_sysid import (InvalidArgument, Signal, check_continuity_certificate,
                        check_dyadic_cauchy, check_fubini, check_integrability,
                        check_partial_sum_cauchy, check_stability_probe, constant, dc,
                        run_checks, ss, tabulated, tc)
from rkhs_sysid.checks import CHECK_NAMES, reports_csv, worst_case_probe


def test_integrability_pass_and_fail():
    rep = check_integrability(tc(0.5))
    assert rep.verdict and rep.observed["measure"] == pytest.approx(6.0, abs=1e-9)
    bad = check_integrability(constant(1.0))
    assert not bad.verdict and "divergence" in bad.note


def test_integrability_identity_table():
    rep = check_integrability(tabulated(np.arange(6), np.eye(6)))
    assert rep.verdict and rep.observed["measure"] == 6.0


def test_stability_probe_examples():
    k = tc(0.5)
    probes = [Signal.discrete(np.ones(257)), Signal.zero(), worst_case_probe(k, 256)]
    rep = check_stability_probe(k, probes, 256)
    assert rep.verdict
    assert "evidence" in rep.note
    # sum_t |sum_s beta^max(t,s)| = sum_{s,t} beta^max(s,t) = 6 for u = 1
    assert rep.observed["input0_partial_sum"] == pytest.approx(6.0, abs=1e-9)
    assert rep.observed["input1_partial_sum"] == 0.0
    assert rep.observed["input2_partial_sum"] <= rep.observed["integrability_measure"] + 1e-9


def test_stability_probe_continuous_rejected():
    with pytest.raises(InvalidArgument):
        check_stability_probe(tc(1.0, "continuous"), [], 10)


def test_dyadic_cauchy_tc():
    rep = check_dyadic_cauchy(tc(1.0, "continuous"), 0, 1, 14)
    assert rep.verdict
    assert rep.observed["norm_sq"][-1] == pytest.approx(2 - 4 / math.e, abs=1e-4)
    assert rep.observed["refinement_gaps"][-1] <= 1e-4


def test_dyadic_cauchy_constant_exact():
    rep = check_dyadic_cauchy(constant(3.0, "continuous"), 0, 1, 6)
    assert rep.verdict
    assert all(g == 0.0 for g in rep.observed["refinement_gaps"])
    assert all(n == pytest.approx(3.0, rel=1e-14) for n in rep.observed["norm_sq"])


def test_dyadic_cauchy_tabulated_notes_continuity():
    grid = np.linspace(0, 1, 5)
    k = tabulated(grid, np.exp(-np.maximum.outer(grid, grid)), "continuous")
    rep = check_dyadic_cauchy(k, 0, 1, 4, gap_tol=1.0, identity_tol=1.0)
    assert "continuity is assumed" in rep.note


def test_dyadic_cauchy_preconditions():
    with pytest.raises(InvalidArgument):
        check_dyadic_cauchy(tc(1.0, "continuous"), 1, 1)
    with pytest.raises(InvalidArgument):
        check_dyadic_cauchy(tc(0.5), 0, 1)


def test_fubini_disjoint_boxes():
    k = tc(1.0, "continuous")
    rep = check_fubini(k, (0, 1), (1.5, 2.5))
    assert rep.verdict
    oracle = quad_box(ref_tc(1.0, True), (0, 1), (1.5, 2.5))
    assert rep.observed["inner"] == pytest.approx(oracle, abs=1e-4)
    swapped = check_fubini(k, (1.5, 2.5), (0, 1))
    assert swapped.observed["inner"] == pytest.approx(rep.observed["inner"], abs=1e-12)


def test_fubini_same_box_is_norm_identity():
    rep = check_fubini(tc(1.0, "continuous"), (0, 1), (0, 1))
    assert rep.verdict
    assert rep.observed["inner"] == pytest.approx(2 - 4 / math.e, abs=1e-4)


@pytest.mark.parametrize("k", [tc(0.5), dc(0.8, 0.6)], ids=["tc", "dc"])
def test_partial_sum_cauchy(k, rng):
    u = Signal.discrete(rng.choice([-1.0, 1.0], 80))
    rep = check_partial_sum_cauchy(k, u, 70, ladder=(4, 8, 16))
    assert rep.verdict


def test_partial_sum_zero_and_equal():
    k = tc(0.5)
    rep = check_partial_sum_cauchy(k, Signal.zero(), 10)
    assert all(v == 0.0 for v in rep.observed.values())
    same = check_partial_sum_cauchy(k, Signal.discrete(np.ones(20)), 10, ladder=(5,), ratio=1)
    assert same.observed["d_5_5"] == 0.0


def test_continuity_certificate_discrete(rng):
    k = tc(0.5)
    u = Signal.discrete(rng.uniform(-1, 1, 40), start=-10)
    rep = check_continuity_certificate(k, u, 20, 1000, seed=1)
    assert rep.verdict


def test_continuity_certificate_impulse_and_zero():
    k = tc(0.5)
    rep = check_continuity_certificate(k, Signal.discrete([1.0]), 3, 50)
    assert rep.verdict
    assert rep.observed["operator_norm"] == pytest.approx(math.sqrt(k(3, 3)), rel=1e-14)
    zero = check_continuity_certificate(k, Signal.zero(), 3, 50)
    assert zero.verdict and zero.observed["operator_norm"] == 0.0


def test_run_checks_suites():
    reps = run_checks(tc(0.5), trials=200)
    assert [r.check_name for r in reps] == ["integrability", "stability_probe",
                                          "partial_sum_cauchy", "continuity_certificate"]
    assert all(r.verdict for r in reps)
    cont = run_checks(ss(1.0), trials=50)
    assert all(r.verdict for r in cont), [r.summary() for r in cont if not r.verdict]


def test_run_checks_divergent_kernel_fails_every_check():
    reps = run_checks(constant(1.0), trials=10)
    assert reps and not any(r.verdict for r in reps)


def test_run_checks_unknown_name():
    with pytest.raises(InvalidArgument):
        run_checks(tc(0.5), ["nope"])


def test_reports_csv_shape():
    reps = run_checks(tc(0.5), ["integrability", "partial_sum_cauchy"], trials=10)
    rows = list(csv.reader(io.StringIO(reports_csv(reps))))
    assert rows[0] == ["check", "parameter_hash", "verdict", "worst_margin"]
    assert len(rows) == 3
    assert {r[2] for r in rows[1:]} == {"pass"}
    assert set(CHECK_NAMES) >= {r[0] for r in rows[1:]}
