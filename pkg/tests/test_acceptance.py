"""Acceptance criteria, one test each; every test reports a PASS/FAIL line."""

import os
import time

import numpy as np
import pytest

from algrand.bitstore import BitString, complement, loop_to
from algrand.borel import bias, borel_metric
from algrand.cli import RunManifest, cmd_compare, cmd_test
from algrand.csss import ORIENTATIONS, csss_test_4, run_sample
from algrand.numtheory import (
    DEFAULT_TEST_NUMBERS,
    TestNumberSet,
    carmichael_up_to,
    cs_params,
    is_prime_trial,
    ss_predicate,
)
from algrand.records import read_csv_summary, read_results
from algrand.sources import mt19937_bits, mt19937_words
from algrand.stats import ks_two_sample, shapiro_wilk, welch_t

from fixtures import MT19937_5489_FIRST10, TABLE1, brute_carmichael, sig2

scipy_stats = pytest.importorskip("scipy.stats")


def test_01_table1(acceptance_report):
    t0 = time.perf_counter()
    got = []
    for n in DEFAULT_TEST_NUMBERS:
        cs_params.cache_clear()
        t = cs_params(n)
        got.append((n, t.m_cs, t.k_digits, sig2(t.p_ss)))
    elapsed = time.perf_counter() - t0
    bad = [g for g, w in zip(got, TABLE1) if g != w]
    ok = not bad and len(got) == 26 and elapsed < 1.0
    acceptance_report("1 Table 1 reproduction", ok, f"26 rows, {len(bad)} mismatches, {elapsed:.3f}s")
    assert not bad
    assert elapsed < 1.0


def test_02_solovay_strassen_soundness(acceptance_report):
    t0 = time.perf_counter()
    prime_fail = []
    composite_fail = []
    for n in range(3, 2000, 2):
        w = sum(ss_predicate(n, a) for a in range(1, n))
        if is_prime_trial(n):
            if w:
                prime_fail.append(n)
        elif 2 * w < n - 1:
            composite_fail.append(n)
    elapsed = time.perf_counter() - t0
    ok = not prime_fail and not composite_fail and elapsed < 30
    acceptance_report(
        "2 Solovay-Strassen soundness",
        ok,
        f"prime failures {len(prime_fail)}, composite failures {len(composite_fail)}, {elapsed:.1f}s",
    )
    assert not prime_fail and not composite_fail
    assert elapsed < 30


def test_03_carmichael_oracle(acceptance_report):
    t0 = time.perf_counter()
    got = carmichael_up_to(10**6)
    want = brute_carmichael(10**6)
    elapsed = time.perf_counter() - t0
    ok = got == want and len(got) == 43 and got[:3] == [561, 1105, 1729] and elapsed < 60
    acceptance_report("3 Carmichael oracle equivalence", ok, f"{len(got)} numbers, {elapsed:.1f}s")
    assert got == want
    assert len(got) == 43 and got[:3] == [561, 1105, 1729]
    assert elapsed < 60


def test_04_looped_multiplicity(acceptance_report):
    # digits 1, 3, 4, 6 witness n=9; every 3-bit window of the 1100 filler is
    # one of them, so the only Z-true block is the one whose low 39 bits are
    # the zero run, at offset 1 of each 400-bit period
    unit = BitString.from_text("11" + ("0" * 39 + "1100" * 100)[:398])
    nine = TestNumberSet.from_ints([9])
    once = csss_test_4(unit, nine, record_starts=True)
    view = loop_to(unit, unit.length * 100)
    r = csss_test_4(view, nine, record_starts=True)
    offsets = {p % unit.length for p in r.violation_starts[9]}
    ok = once.per_n_violations[9] == 1 and r.per_n_violations[9] == view.repetitions == 100 and offsets == {1}
    acceptance_report(
        "4 looped violation multiplicity",
        ok,
        f"unique segment {once.per_n_violations[9]} violation, "
        f"{view.repetitions} repetitions -> {r.per_n_violations[9]} violations",
    )
    assert once.per_n_violations[9] == 1
    assert r.per_n_violations[9] == view.repetitions == 100
    assert offsets == {1}


def test_05_statistical_oracles(acceptance_report):
    rng = np.random.default_rng(20240501)
    pairs = []
    for i in range(10):
        a = rng.normal(0.0, 1.0, 100)
        b = rng.normal(0.15 * (i % 4), 1.0 + 0.1 * (i % 3), 100)
        pairs.append((a, b))
    t0 = time.perf_counter()
    ours = [(ks_two_sample(a, b)[1], welch_t(a, b)[2], shapiro_wilk(a)[1], shapiro_wilk(b)[1]) for a, b in pairs]
    elapsed = time.perf_counter() - t0
    ks_err = welch_err = sw_err = 0.0
    for (a, b), (ks_p, w_p, sw_a, sw_b) in zip(pairs, ours):
        ks_err = max(ks_err, abs(ks_p - scipy_stats.ks_2samp(a, b).pvalue))
        welch_err = max(welch_err, abs(w_p - scipy_stats.ttest_ind(a, b, equal_var=False).pvalue))
        sw_err = max(sw_err, abs(sw_a - scipy_stats.shapiro(a).pvalue), abs(sw_b - scipy_stats.shapiro(b).pvalue))
    ok = ks_err <= 1e-6 and welch_err <= 1e-6 and sw_err <= 1e-4 and elapsed < 5
    acceptance_report(
        "5 statistical oracle equivalence",
        ok,
        f"max |dp| KS {ks_err:.1e}, Welch {welch_err:.1e}, Shapiro-Wilk {sw_err:.1e}, {elapsed:.2f}s",
    )
    assert ks_err <= 1e-6
    assert welch_err <= 1e-6
    assert sw_err <= 1e-4
    assert elapsed < 5


def test_06_mt19937_vector(acceptance_report):
    got = mt19937_words(5489, 10).tolist()
    ok = got == MT19937_5489_FIRST10
    acceptance_report("6 MT19937 reference vector", ok, f"first word {got[0]}")
    assert got == MT19937_5489_FIRST10


@pytest.mark.slow
def test_07_desk_scale_pipeline(tmp_path, acceptance_report):
    manifest = RunManifest.from_dict(
        {
            "samples": [
                {"label": "mt19937", "kind": "mt19937", "count": 20, "length": 2**20, "seed": 1},
                {"label": "gfsr4", "kind": "gfsr4", "count": 20, "length": 2**20, "seed": 1},
            ],
            "carmichael": 10**6,
            "complement": True,
            "jobs": os.cpu_count() or 1,
            "out": str(tmp_path / "run"),
        },
        tmp_path,
    )
    t0 = time.perf_counter()
    path, failures = cmd_test(manifest)
    rows = cmd_compare([path], tmp_path / "cmp", include_self=True)
    elapsed = time.perf_counter() - t0

    rf = read_results(path)
    keys = {r.key for r in rf.records}
    csv_rows = read_csv_summary(path.with_suffix(".csv"))
    csv_same = [float(r["value"]) for r in csv_rows] == [float(r.value) for r in rf.records]
    selfs = [r for _, r in rows if r.kind == "self"]
    pairs = [r for _, r in rows if r.kind != "self"]
    self_ok = len(selfs) == 5 * 2 * 2 and all(r.ks_p == 1.0 and not r.significant_ks for r in selfs)
    complete = len(rf.records) == 2 * 20 * 2 * 5 == len(keys) and failures == 0
    ok = self_ok and complete and csv_same and elapsed < 15 * 60
    flagged = sum(r.significant_ks or r.significant_welch for r in pairs)
    acceptance_report(
        "7 desk-scale pipeline",
        ok,
        f"{len(rf.records)} records, {failures} failures, {len(selfs)} self-pairs all ks_p=1: {self_ok}, "
        f"{len(pairs)} cross-generator pairs ({flagged} flagged), {elapsed:.0f}s",
    )
    assert complete
    assert csv_same
    assert self_ok
    assert elapsed < 15 * 60


def test_08_borel_detection(acceptance_report):
    alt = borel_metric(BitString.from_text("01" * 32))
    mt = borel_metric(mt19937_bits(5489, 2**20))
    ok = abs(alt.metric - 2.449) <= 1e-3 and not alt.normal and mt.metric < 1
    acceptance_report(
        "8 Borel detection",
        ok,
        f"alternating fixture {alt.metric:.4f} (violation: {not alt.normal}), MT19937 2^20 bits {mt.metric:.4f}",
    )
    assert alt.metric == pytest.approx(2.449, abs=1e-3)
    assert not alt.normal
    assert mt.metric < 1


def test_09_complement_symmetry(acceptance_report):
    rng = np.random.default_rng(99)
    mismatches = 0
    for i in range(100):
        n = int(rng.integers(1, 5000))
        x = BitString.from_bits(rng.random(n) < rng.uniform(0.05, 0.95))
        mismatches += bias(x) != bias(complement(x))
    strings = [mt19937_bits(s, 2**14) for s in range(3)]
    out = run_sample(strings, complement=True, carmichael=carmichael_up_to(10**5))
    have = {(o.index, o.orientation, o.test) for o in out if o.error is None}
    csss = ("csss1", "csss2", "csss3", "csss4")
    missing = [(i, o, t) for i in range(3) for o in ORIENTATIONS for t in csss if (i, o, t) not in have]
    ok = mismatches == 0 and not missing
    acceptance_report(
        "9 complement symmetry",
        ok,
        f"{mismatches}/100 bias mismatches, {len(missing)} missing complemented CSSS results",
    )
    assert mismatches == 0
    assert not missing
