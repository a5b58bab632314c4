"""Acceptance criteria, one PASS/FAIL line each (printed even when pytest captures output)."""

from __future__ import annotations

import time

import numpy as np
import pytest

from solitonforge import catalog
from solitonforge import curvature as C
from solitonforge import group as G
from solitonforge import soliton as S
from solitonforge.checks import distinct_metrics, run_case
from solitonforge.exprlang import Binary, Const, parse
from solitonforge.metric import check_f_left_invariance, f_values, make_metric
from solitonforge.sampling import Box, rng

from conftest import random_inputs

RESIDUAL_TOL = 1e-9
ORACLE_TOL = 1e-7
EQUIV_TOL = 1e-8
MILNOR_VAR_TOL = 1e-18
INVARIANCE_TOL = 1e-9
FLOW_TOL = 1e-4

# As printed, lambda = 2 exp(-x^2-y^2) has the wrong sign: the rotation field is
# Killing, so lambda must equal the Gaussian curvature -2 exp(-x^2-y^2).
KNOWN_FAILURES = {"r2.almost.rotation": "printed lambda has the wrong sign; residual is -8 on the diagonal"}


def say(capsys, ok: bool, label: str, detail: str) -> None:
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'} {label}: {detail}", end="")


def test_criterion_1_cigar(capsys):
    c = catalog.lookup("cigar")
    t0 = time.perf_counter()
    pts = Box((-2.0, -2.0), (2.0, 2.0), (20, 20)).grid()
    d = C.frame_data(c.metric, pts)
    k_err = float(np.max(np.abs(C.sectional_matrix(c.metric, pts, d)[:, 0, 1] - 2 / (1 + (pts**2).sum(1)))))
    res = float(np.max(np.abs(S.soliton_residual(c, pts, d))))
    grad = float(np.max(np.abs(S.gradient_components(c.metric, c.phi, pts) - S.frame_field(c.metric, c.X, pts)[0])))
    elapsed = time.perf_counter() - t0
    ok = k_err < 1e-9 and res < 1e-9 and grad < 1e-9 and elapsed < 1.0
    say(capsys, ok, "criterion 1 (cigar)",
        f"kappa err {k_err:.2e}, residual {res:.2e}, potential err {grad:.2e}, {elapsed:.3f} s")
    assert ok


def test_criterion_2_hyperbolic(capsys):
    c = catalog.lookup("rxr+.f=1.translation")
    pts = c.sample_box().grid()
    k_err = float(np.max(np.abs(C.sectional(c.metric, 0, 1, pts) + 1)))
    res = float(np.max(np.abs(S.soliton_residual(c, pts))))
    cert = S.nongradience_certificate(c.metric, c.X, pts)
    ok = k_err < 1e-10 and res < 1e-9 and cert > 1e-3
    say(capsys, ok, "criterion 2 (hyperbolic plane)", f"|K+1| {k_err:.2e}, residual {res:.2e}, certificate {cert:.3g}")
    assert ok


def _case_params():
    out = []
    for c in catalog.all_cases():
        marks = []
        if c.id in KNOWN_FAILURES:
            marks.append(pytest.mark.xfail(strict=True, reason=KNOWN_FAILURES[c.id]))
        out.append(pytest.param(c.id, marks=marks, id=c.id))
    return out


@pytest.mark.parametrize("case_id", _case_params())
def test_criterion_3_golden_case(case_id, capsys):
    rep = run_case(catalog.lookup(case_id))
    parts = [f"{ch.name}={ch.value:.2e}" if ch.value is not None else f"{ch.name}:{ch.detail}"
             for ch in rep.checks]
    say(capsys, rep.passed, f"criterion 3 [{case_id}]", ", ".join(parts))
    assert rep.passed, [f"{f.name} {f.value} at {f.point} entry {f.entry}" for f in rep.failures()]


def test_criterion_3_suite_runtime(capsys):
    t0 = time.perf_counter()
    reports = [run_case(c) for c in catalog.all_cases()]
    elapsed = time.perf_counter() - t0
    failed = [r.case_id for r in reports if not r.passed]
    ok = elapsed < 30.0 and set(failed) <= set(KNOWN_FAILURES)
    verdict = "PASS" if not failed and elapsed < 30.0 else "FAIL"
    with capsys.disabled():
        print(f"\n{verdict} criterion 3 (all golden cases): {len(reports) - len(failed)}/{len(reports)} pass "
              f"in {elapsed:.1f} s; failing: {', '.join(failed) or 'none'}", end="")
    # the runtime bound and the absence of unexpected failures are asserted here;
    # the known failure is asserted (as xfail) by its own parametrized test
    assert ok


def test_criterion_4_oracle(capsys):
    worst, where = 0.0, ""
    for c in catalog.all_cases():
        pts = c.sample_box().random(25, rng(c.seed))
        dev = float(np.max(C.curvature_report(c.metric, pts).oracle_deviation))
        if dev >= worst:
            worst, where = dev, c.id
    ok = worst < ORACLE_TOL
    say(capsys, ok, "criterion 4 (coordinate oracle)", f"max deviation {worst:.2e} ({where}), tol {ORACLE_TOL:g}")
    assert ok


def test_criterion_5_system_equivalence(capsys):
    r = np.random.default_rng(20240501)
    worst, detail = 0.0, []
    for gid in S.KERNELS:
        g = catalog.lookup(gid).group
        f, X, lam = random_inputs(g, r)
        m = make_metric(g, f)
        Xe = [parse(t, g.coords) for t in X]
        le = parse(lam, g.coords)
        pts = g.box().random(50, rng(5))
        gen = S.general_residual(m, Xe, le, pts)
        dev = float(np.max(np.abs(S.specialized_system(m, Xe, le, pts) - gen)))
        assert np.max(np.abs(gen)) > 1e-3  # the inputs are not solitons
        worst = max(worst, dev)
        detail.append(f"{gid} {dev:.1e}")
    ok = worst < EQUIV_TOL
    say(capsys, ok, "criterion 5 (specialized systems)", ", ".join(detail))
    assert ok


def test_criterion_6_milnor(capsys):
    worst = 0.0
    for e in catalog.catalog_entries():
        m = make_metric(e.group, "1")
        pts = e.group.box(6).grid() if e.group.dim <= 3 else e.group.box(4).grid()
        worst = max(worst, float(np.max(np.var(C.sectional_matrix(m, pts), axis=0))))
    ok = worst < MILNOR_VAR_TOL
    say(capsys, ok, "criterion 6 (f = 1 sectional constant)", f"max variance {worst:.2e}")
    assert ok


def test_criterion_7_f_left_invariance(capsys):
    worst = 0.0
    metrics = distinct_metrics(catalog.all_cases())
    for i, m in enumerate(metrics):
        r = rng(100 + i)
        box = G.sample_pair_box(m.group)
        worst = max(worst, check_f_left_invariance(m, (box.random(50, r), box.random(50, r))))
    ok = worst < INVARIANCE_TOL
    say(capsys, ok, "criterion 7 (f-left invariance)", f"{len(metrics)} metrics, max residual {worst:.2e}")
    assert ok


def test_criterion_8_flow_identity(capsys):
    worst, ran, skipped = 0.0, 0, []
    for c in catalog.all_cases():
        if c.is_almost:
            continue
        try:
            rep = S.flow_check(c, 0.2, 64)
        except S.FlowDomainError:
            skipped.append(c.id)
            continue
        ran += 1
        worst = max(worst, rep.t0_deviation)
    ok = worst < FLOW_TOL
    say(capsys, ok, "criterion 8 (flow identity at t = 0)",
        f"{ran} cases, max deviation {worst:.2e}" + (f", skipped {skipped}" if skipped else ""))
    assert ok


def test_criterion_9_negative_controls(capsys):
    bad = []
    for c in catalog.all_cases():
        lam = Binary("+", c.lam, Const(0.1))
        shifted = S.make_case(c.id + "+0.1", c.metric, c.X, lam, c.expected_class,
                              c.expected_gradient, c.phi, None, check_class=False)
        rep = run_case(shifted)
        res = rep.checks[0]
        pts = c.sample_box().grid()
        # for constant f the shift 2 * 0.1 * f meets the bound with equality, so allow rounding
        floor = 0.1 * float(np.min(2 * f_values(c.metric, pts))) - 1e-12
        localized = res.point is not None and res.entry is not None
        if rep.passed or res.passed or res.value < floor or not localized:
            bad.append(c.id)
    ok = not bad
    say(capsys, ok, "criterion 9 (lambda + 0.1 negative controls)",
        f"{len(catalog.all_cases())} cases fail as expected with point and entry" if ok else f"not caught: {bad}")
    assert ok
