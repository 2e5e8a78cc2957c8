"""End-to-end acceptance criteria, each at its stated tolerance and size.

Every test prints one ``[PASS]``/``[FAIL]`` line (also repeated in the
terminal summary) with the measured quantities, then asserts.
"""
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from gnpr.baselines import WfConfig, wf_solve
from gnpr.core import dist
from gnpr.diagnostics import convergence_order, pooled_convergence_order
from gnpr.experiments import runners
from gnpr.experiments.config import build_config
from gnpr.experiments.pgm import read_pgm, write_pgm
from gnpr.experiments.plot import read_result_csv
from gnpr.gauss_newton import SolverConfig, dense_min_norm_step_oracle, gn_step, solve
from gnpr.sensing import GaussianEnsemble, MeasurementSet
from gnpr.spectral import spectral_initialize

import conftest
from conftest import make_problem

pytestmark = pytest.mark.acceptance
CONV = SolverConfig(inner_mode="to_convergence")


def verdict(tag, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {tag}: {detail}"
    print(line)
    conftest.ACCEPTANCE_LINES.append(line)
    assert ok, line


def test_c01_scalar_exactness():
    e, ms = GaussianEnsemble(np.array([[1.0]])), MeasurementSet(y=np.array([1.0]))
    want = [2.0, 1.25, 1.025, 1.0003048780487804]

    def run():
        z, seq = np.array([2.0 + 0j]), [2.0]
        for _ in range(3):
            z, _ = gn_step(e, ms, z, CONV)
            seq.append(z[0].real)
        return seq

    seq = run()
    best = min(_timed(run) for _ in range(5))
    ok_vals = all(abs(a - b) <= 1e-12 * abs(b) for a, b in zip(seq, want))
    verdict("C1 scalar exactness", ok_vals and best < 1e-3,
            f"sequence {[f'{v:.15g}' for v in seq]}, runtime {best * 1e3:.3f} ms")


def _timed(fn):
    t = time.perf_counter()
    fn()
    return time.perf_counter() - t


def test_c02_pseudoinverse_equivalence():
    t0 = time.perf_counter()
    worst_rel, worst_defect = 0.0, 0.0
    for s in range(100):
        n = 1 + s % 8
        m = min(48, 2 * n + 1 + (7 * s) % (5 * n + 1))
        e, x, ms, r = make_problem(n, m, seed=s)
        z = x + 0.5 * np.linalg.norm(x) * r.child(9).standard_normal(n) / np.sqrt(n)
        ref = dense_min_norm_step_oracle(e, ms, z)
        z1, info = gn_step(e, ms, z, CONV)
        delta = z1 - z
        worst_rel = max(worst_rel, np.linalg.norm(delta - ref) / max(np.linalg.norm(ref), 1e-300))
        worst_defect = max(worst_defect, abs(np.imag(np.vdot(delta, z))) / (np.linalg.norm(delta) * np.linalg.norm(z)))
    dt = time.perf_counter() - t0
    verdict("C2 pseudoinverse equivalence", worst_rel <= 1e-8 and worst_defect <= 1e-8 and dt < 5,
            f"max rel err {worst_rel:.2e}, max |Im(d^*z)|/(|d||z|) {worst_defect:.2e}, {dt:.1f} s")


def test_c03_quadratic_contraction():
    t0 = time.perf_counter()
    n, m = 128, 640
    fast, capped_ok, ratios, traces, per_trace = 0, 0, [], [], []
    for s in range(100):
        e, x, ms, r = make_problem(n, m, seed=s)
        _, tr = solve(e, ms, CONV, x, r.child(3))
        k = tr.first_below(1e-12)
        fast += k is not None and k <= 15
        err = tr.errors
        for a, b in zip(err[:-1], err[1:]):
            if 1e-6 <= a <= 1e-2:
                ratios.append(b / a**2)
        traces.append(err)
        try:
            per_trace.append(convergence_order(err)[0])
        except ValueError:
            pass
        _, tc = solve(e, ms, SolverConfig(), x, r.child(3))
        k = tc.first_below(1e-12)
        capped_ok += k is not None and k <= 25
    frac = np.mean(np.array(ratios) <= 4)
    slope, pairs = pooled_convergence_order(traces)
    dt = time.perf_counter() - t0
    ok = fast >= 95 and capped_ok >= 90 and frac >= 0.9 and 1.7 <= slope <= 2.3 and dt < 60
    verdict("C3 quadratic contraction", ok,
            f"(a) {fast}/100 <=15 it (converged inner), {capped_ok}/100 <=25 it (cap 10); "
            f"(b) {100 * frac:.1f}% of {len(ratios)} transitions e+/e^2 <= 4; "
            f"(c) pooled slope {slope:.3f} over {pairs} pairs "
            f"(per-run slopes from {len(per_trace)} runs: median {np.median(per_trace):.3f}); {dt:.1f} s")


def test_c04_success_rate(tmp_path):
    t0 = time.perf_counter()
    rows = read_result_csv(runners.run_success_rate(build_config("success-rate", out=tmp_path)))
    dt = time.perf_counter() - t0
    rate = {(r["ensemble"], float(r["m_over_n"])): float(r["rate"]) for r in rows}
    mono = True
    for ens in ("gaussian", "cdp"):
        seq = [v for (k, _), v in sorted(rate.items()) if k == ens]
        mono &= all(b >= a - 0.05 for a, b in zip(seq[:-1], seq[1:]))
    g6, c6 = rate[("gaussian", 6.0)], rate[("cdp", 6.0)]
    verdict("C4 success-rate plateau", g6 >= 0.95 and c6 >= 0.90 and mono and dt < 300,
            f"gaussian m=6n {g6:.2f}, cdp L=6 {c6:.2f}, monotone(+-0.05) {mono}, {dt:.0f} s; "
            + " ".join(f"{k[0][0]}{k[1]:g}:{v:.2f}" for k, v in rate.items()))


def test_c05_spectral_initialization():
    t0 = time.perf_counter()
    d = []
    for s in range(100):
        e, x, ms, r = make_problem(128, 1280, seed=s)
        d.append(dist(spectral_initialize(e, ms, None, r.child(3)), x) / np.linalg.norm(x))
    d = np.array(d)
    hits = int(np.sum(d <= 0.4))
    dt = time.perf_counter() - t0
    verdict("C5 spectral initialization", hits >= 95 and dt < 30,
            f"{hits}/100 seeds with dist(z0,x)/|x| <= 0.4 (median {np.median(d):.3f}, "
            f"min {d.min():.3f}, max {d.max():.3f}), {dt:.1f} s")


def test_c06_gn_matrix_bounds(tmp_path):
    t0 = time.perf_counter()
    rows = read_result_csv(runners.run_bounds(build_config("bounds", out=tmp_path)))
    dt = time.perf_counter() - t0
    lo = np.array([float(r["lambda_min_H_normalized"]) for r in rows])
    hi = np.array([float(r["lambda_max_AA_normalized"]) for r in rows])
    holds = sum(r["holds"] == "true" for r in rows)
    verdict("C6 Gauss-Newton matrix bounds", holds >= 95 and dt < 60,
            f"{holds}/100 seeds satisfy lambda_min(H) >= 1.8 and lambda_max(A*A) <= 5.0; "
            f"lambda_min(H) median {np.median(lo):.3f} [{lo.min():.3f}, {lo.max():.3f}], "
            f"lambda_max(A*A) max {hi.max():.3f} ({np.sum(hi <= 5.0)}/100 <= 5.0); {dt:.1f} s")


def test_c07_leave_one_out(tmp_path):
    t0 = time.perf_counter()
    rows = read_result_csv(runners.run_loo(build_config("loo", out=tmp_path, overrides=[("trials", "100")])))
    dt = time.perf_counter() - t0
    per_trial = {}
    for r in rows:
        per_trial.setdefault(r["trial"], []).append(r["within_thresholds"] == "true")
    good = sum(all(v) for v in per_trial.values())
    c1 = max(float(r["c1_empirical"]) for r in rows)
    c2 = max(float(r["c2_empirical"]) for r in rows)
    raw = tmp_path / "loo_raw.csv"
    archived = raw.exists() and raw.stat().st_size > 0
    verdict("C7 leave-one-out hypotheses", good >= 90 and archived and dt < 300,
            f"{good}/100 seeds with C2, C1 <= 10 at every k <= 8 (max C1 {c1:.3f}, max C2 {c2:.3f}), "
            f"raw values archived {archived}, {dt:.0f} s")


def test_c08_noise_behavior(tmp_path):
    t0 = time.perf_counter()
    rows = read_result_csv(runners.run_noise_sweep(build_config("noise-sweep", out=tmp_path)))
    dt = time.perf_counter() - t0
    g = [r for r in rows if r["noise_kind"] == "gaussian"]
    snr = np.array([float(r["achieved_snr_db"]) for r in g])
    mse = np.array([float(r["mse_db"]) for r in g])
    slope = np.polyfit(snr, mse, 1)[0]
    calib = max(abs(float(r["achieved_snr_db"]) - float(r["target_snr_db"])) for r in g)
    pois = {float(r["signal_norm"]): float(r["mse_db"]) for r in rows if r["noise_kind"] == "poisson"}
    finite = set(pois) == {1.0, 4.0} and all(np.isfinite(v) for v in pois.values())
    verdict("C8 noise behavior", -1.2 <= slope <= -0.8 and finite and dt < 180,
            f"MSE/SNR slope {slope:.3f}, mean |achieved - target| SNR <= {calib:.2f} dB, "
            f"Poisson MSE {pois}, {dt:.1f} s")


def test_c09_baseline_gap():
    t0 = time.perf_counter()
    wins, ratios = 0, []
    for s in range(100):
        e, x, ms, r = make_problem(128, 640, seed=s)
        _, gn = solve(e, ms, SolverConfig(stop_error=1e-5), x, r.child(3))
        _, wf = wf_solve(e, ms, WfConfig(stop_error=1e-5), x, r.child(3))
        kg, kw = gn.first_below(1e-5), wf.first_below(1e-5)
        ok = kg is not None and (kw is None or 5 * kg <= kw)
        wins += ok
        if kg and kw:
            ratios.append(kw / kg)
    dt = time.perf_counter() - t0
    verdict("C9 baseline gap", wins >= 90 and dt < 120,
            f"{wins}/100 seeds with GN iterations <= WF/5 (median WF/GN ratio {np.median(ratios):.1f}), {dt:.1f} s")


def test_c10_image_recovery(tmp_path):
    i, j = np.mgrid[0:64, 0:64]
    src = tmp_path / "gradient.pgm"
    write_pgm(src, (2 * i + j + 3) % 256)
    t0 = time.perf_counter()
    cfg = build_config("image", out=tmp_path / "a", overrides=[("record_timing", "false")])
    pgm_a, csv_a = runners.run_image(src, cfg)
    dt = time.perf_counter() - t0
    pgm_b, csv_b = runners.run_image(src, build_config("image", out=tmp_path / "b",
                                                       overrides=[("record_timing", "false")]))
    rows = read_result_csv(csv_a)
    err = float(rows[-1]["relative_error"])
    same = pgm_a.read_bytes() == pgm_b.read_bytes() and csv_a.read_bytes() == csv_b.read_bytes()
    gray = int(np.max(np.abs(read_pgm(src)[0].astype(int) - read_pgm(pgm_a)[0])))
    verdict("C10 desk-scale image run", err <= 1e-8 and same and dt < 60,
            f"64x64, L=8, inner cap 5: rel err {err:.2e} after {rows[-1]['iteration']} iterations, "
            f"max gray-level diff {gray}, deterministic {same}, {dt:.1f} s")


def test_c11_property_suites():
    t0 = time.perf_counter()
    root = Path(__file__).resolve().parent
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-m", "property", "-p", "no:cacheprovider",
                           str(root)], capture_output=True, text=True, cwd=root.parent)
    dt = time.perf_counter() - t0
    summary = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    verdict("C11 property suites", proc.returncode == 0 and dt < 60, f"{summary} ({dt:.1f} s)")
