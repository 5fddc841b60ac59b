"""Acceptance criteria 1-9, run at full trial counts.

Each test prints one PASS/FAIL line (also collected into the terminal
summary by conftest).
"""
import os
import shutil
import subprocess
import sys
import time
from importlib import resources

import pytest

from varlex.harness import ExperimentConfig, run_verification


@pytest.fixture(scope="module")
def full_report():
    path = resources.files("varlex") / "configs" / "full.json"
    cfg = ExperimentConfig.load(str(path))
    report = run_verification(cfg, threads=4)
    return {r.id: r for r in report.records}


def _verdict(criterion, number, records, ok, detail):
    ok = ok and all(r.status in ("pass", "report") for r in records)
    criterion(number, ok, detail)
    print(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
    return ok


def test_criterion_1_constant_exponent_collapse(full_report, criterion):
    r = full_report["luxemburg.constant_collapse"]
    m = r.measured
    ok = m["max_rel_err"] <= 1e-8 and m["fields"] == 300 and r.runtime < 5.0
    assert _verdict(criterion, 1, [r], ok,
                    f"max rel err {m['max_rel_err']:.2e} over {m['fields']} fields in {r.runtime:.2f}s")


def test_criterion_2_modular_bounds_and_holder(full_report, criterion):
    recs = [full_report["foundations.modular_norm"], full_report["foundations.holder"]]
    ok = all(r.measured["trials"] >= 500 and r.measured["violations"] == 0 for r in recs)
    assert _verdict(criterion, 2, recs, ok,
                    f"violations {[r.measured['violations'] for r in recs]} over 500 trials each")


def test_criterion_3_trivial_weight(full_report, criterion):
    r = full_report["weights.trivial"]
    cases = r.measured["cases"]
    ok = r.measured["max_abs_dev"] <= 1e-6 and {(c["m"], c["alpha_over_n"]) for c in cases} == {
        (1, 0.0), (1, 0.25), (2, 0.0), (2, 0.25)}
    assert _verdict(criterion, 3, [r], ok, f"max |constant - 1| = {r.measured['max_abs_dev']:.1e}")


def test_criterion_4_averaging_upper_bound(full_report, criterion):
    up, lo = full_report["averaging.upper"], full_report["averaging.lower"]
    ok = (up.measured["configs"] == 20 and up.measured["violations"] == 0
          and all(map(lambda x: 0 < x < float("inf"), lo.measured["ratios"])))
    assert _verdict(criterion, 4, [up, lo], ok,
                    f"max excess {up.measured['max_excess']:.1e}, witness ratios <= "
                    f"{lo.measured['max_ratio']:.3f} (within 10: {lo.measured['within_10']})")


def test_criterion_5_cz_exactness(full_report, criterion):
    r = full_report["cz.exactness"]
    m = r.measured
    ok = m["trials"] == 50 and not m["failures"] and m["max_sparse_ratio"] <= r.tolerance["sparse_bound"]
    assert _verdict(criterion, 5, [r], ok,
                    f"max sparse ratio {m['max_sparse_ratio']:.3f} <= {r.tolerance['sparse_bound']:.3f}")


def test_criterion_6_shifted_cover(full_report, criterion):
    r = full_report["cover.shifted"]
    cases = r.measured["cases"]
    ok = all(c["dyadic_below_full"] and c["rel_change"] < 0.1 for c in cases)
    assert _verdict(criterion, 6, [r], ok,
                    "rel change " + ", ".join(f"{c['rel_change']:.1e}" for c in cases))


def test_criterion_7_matrix_sandwich(full_report, criterion):
    recs = [full_report[k] for k in ("matrix.sandwich", "matrix.scalar_collapse",
                                    "matrix.averaging", "matrix.reduced_band")]
    s, sc, av, band = (r.measured for r in recs)
    ok = (s["configs"] == 20 and s["failures"] == 0 and sc["max_rel_diff"] <= 1e-4
          and av["violations"] == 0 and band["c_d"] <= 50)
    assert _verdict(criterion, 7, recs, ok,
                    f"sandwich factor <= {s['max_factor']:.3f}, d=1 diff {sc['max_rel_diff']:.1e}, "
                    f"factor-4 ratio {av['max_ratio_to_bound']:.2f}, c_d {band['c_d']:.3f}")


def test_criterion_8_norm_bound(full_report, criterion):
    r = full_report["matrix.norm_bound"]
    ok = r.measured["violations"] == 0 and len(r.measured["configs"]) == 20
    assert _verdict(criterion, 8, [r], ok,
                    f"max [||W||]/(d[W]) = {r.measured['max_ratio']:.3f}")


def test_criterion_9_smoke_cli(criterion, tmp_path):
    env = dict(os.environ)
    env.pop("VARLEX_SEED", None)
    t0 = time.perf_counter()
    exe = shutil.which("varlex")
    cmd = [exe] if exe else [sys.executable, "-m", "varlex.cli"]
    proc = subprocess.run(cmd + ["verify", "--config", "smoke.json", "--out", str(tmp_path / "report.json")],
                          capture_output=True, text=True, env=env, timeout=300)
    elapsed = time.perf_counter() - t0
    ok = proc.returncode == 0 and elapsed < 60
    criterion(9, ok, f"exit {proc.returncode} in {elapsed:.1f}s")
    print(f"criterion 9: {'PASS' if ok else 'FAIL'}  exit {proc.returncode} in {elapsed:.1f}s")
    assert ok, proc.stdout + proc.stderr
