"""Acceptance criteria 1-10; each test records one PASS/FAIL line."""
import dataclasses
import time

import numpy as np
import pytest

from test_filterbank import chain, rand_filters, random_spec
from wola_lab.bench import ScenarioConfig, derive_seed, rows_to_csv, simulate, sweep
from wola_lab.complexity import FlopCounter, table1
from wola_lab.filterbank import (
    FilterBankSpec,
    SubbandFilterSet,
    analysis_frames,
    lptv_impulse_responses,
    subband_images,
    synthesis_overlap_add,
)
from wola_lab.gwola import GwolaEngine, build_regressor
from wola_lab.prototype import cosine_series, make_window
from wola_lab.ptwola import PtwolaConfig, PtwolaEngine, ptwola_regressor
from wola_lab.steady_state import (
    analytical_erle,
    compute_Z0,
    generate_rir,
    image_support,
    solve_subband_ls,
    steady_state_images,
)

WINDOWS = ["rect", "cosine", "root-hann"]
SYNTHESES = ["min-norm", "min-distortion"]

pytestmark = pytest.mark.acceptance


def test_01_pr_passthrough(acceptance):
    N, D = 1024, 512
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    spec = FilterBankSpec.design(N, D, "root-hann", "min-norm")
    worst = 0.0
    for _ in range(10):
        x = rng.standard_normal(16000)
        Q = -(-(len(x) + N - 1) // D) + 1
        y = synthesis_overlap_add(analysis_frames(x, spec, Q, half=True), spec)
        worst = max(worst, np.linalg.norm(y[N - 1 : N - 1 + len(x)] - x) / np.linalg.norm(x))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-9 and elapsed < 2.0
    acceptance.record(1, ok, f"PR passthrough: max rel err {worst:.2e} (< 1e-9), {elapsed:.2f} s (< 2 s)")
    assert ok


def test_02_lptv_oracle(acceptance):
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(100):
        N = int(rng.choice([8, 16]))
        D = int(rng.choice([N // 2, N]))
        T = int(rng.choice([1, 2, 5]))
        spec = random_spec(N, D, rng)
        c = rand_filters(N, T, rng)
        res = lptv_impulse_responses(c, spec)
        L = res.predicted.shape[1]
        for p in range(D):
            u = np.zeros(L)
            u[p] = 1
            y = chain(u, c.coeffs, spec.h0.coefficients, spec.f0.coefficients, D, L)
            worst = max(worst, np.linalg.norm(y - res.predicted[p]) / np.linalg.norm(y))
    ok = worst < 1e-10
    acceptance.record(2, ok, f"LPTV vs brute-force chain, 100 configs: max rel err {worst:.2e} (< 1e-10)")
    assert ok


def test_03_cross_term_exactness(acceptance):
    N = 1024
    u = np.random.default_rng(3).standard_normal(8 * N)
    errs = {}
    for w, R in [("cosine", 1), ("rect", 0)]:
        spec = FilterBankSpec.design(N, N // 2, w)
        weights = cosine_series(spec.h0, R).cross_weights()
        e = 0.0
        for q in (2, 5, 11):
            r = ptwola_regressor(u, q, PtwolaConfig(R, 2 * R + 1), spec)
            X = build_regressor(u, q, 1, spec).matrix[:, 0]
            e = max(e, float(np.max(np.abs(r.cross @ weights - X))))
        errs[w] = e
    ok = max(errs.values()) < 1e-12
    acceptance.record(3, ok, "cross-term rows: " + ", ".join(f"{w} {e:.1e}" for w, e in errs.items()) + " (< 1e-12)")
    assert ok


def _ls_images(h, w, N, T):
    # real h and w: c_{N-k} = conj(c_k)
    half = np.array([solve_subband_ls(h, w, T, k) for k in range(N // 2 + 1)])
    return subband_images(SubbandFilterSet.from_half(half, N)).images


def test_04_z0_structure(acceptance):
    id_err, img_err = 0.0, 0.0
    for N, T in [(16, 4), (1024, 15)]:
        rir = generate_rir(N // 2, 0.07, seed=4).w
        for win in WINDOWS:
            h = make_window(win, N).coefficients
            model = compute_Z0(h, N, T)
            id_err = max(id_err, float(np.max(np.abs(model.Z0[:, :T] - np.eye(T)))))
            ref = _ls_images(h, rir, N, T)
            got = steady_state_images(model, rir).images
            img_err = max(img_err, float(np.max(np.abs(got - ref)) / np.max(np.abs(ref))))
    ok = id_err < 1e-10 and img_err < 1e-9
    acceptance.record(4, ok, f"Z0 identity block err {id_err:.1e} (< 1e-10); images vs LS rel err {img_err:.1e} (< 1e-9)")
    assert ok


def test_05_image_support(acceptance):
    N, T = 1024, 15
    model = compute_Z0(make_window("rect", N), N, T)
    parts, ok = [], True
    for L in (512, 55):
        s = image_support(steady_state_images(model, generate_rir(L, 0.07, seed=5).w))
        ok &= bool(np.all(s <= L - T + 1))
        parts.append(f"L={L}: max support {int(s.max())} (<= {L - T + 1})")
    acceptance.record(5, ok, "rect image support: " + "; ".join(parts))
    assert ok


def test_06_analytical_erle_spot_values(acceptance):
    t0 = time.perf_counter()
    rirs = [generate_rir(512, 0.07, seed=derive_seed(6, i)).w for i in range(10)]
    got = {}
    for win, target in [("rect", 13.4), ("root-hann", 15.8)]:
        spec = FilterBankSpec.design(1024, 512, win, "min-norm")
        got[win] = (float(np.mean([analytical_erle(w, spec, 1).erle_db for w in rirs])), target)
    elapsed = time.perf_counter() - t0
    ok = all(abs(v - t) <= 1.5 for v, t in got.values()) and elapsed < 60
    acceptance.record(6, ok, "analytic ERLE min-norm T=1, 10 seeds: "
                      + ", ".join(f"{w} {v:.2f} dB (target {t} +-1.5)" for w, (v, t) in got.items())
                      + f", {elapsed:.1f} s (< 60 s)")
    assert ok


def test_07_simulated_erle(acceptance):
    t0 = time.perf_counter()
    spots = {}
    for win, syn, T, target in [("root-hann", "min-distortion", 1, 19.2), ("cosine", "min-norm", 3, 23.1)]:
        vals = []
        for i in range(5):
            cfg = ScenarioConfig(window=win, synthesis=syn, T=T, frames=4000, seed=derive_seed(7, i))
            vals.append(simulate(cfg)[syn].steady_erle_db)
        spots[(win, syn, T)] = (float(np.mean(vals)), target)
    grid = list(range(1, 102, 10))
    template = ScenarioConfig(frames=2000, seed=derive_seed(7, 0))
    rows = sweep(template, grid, WINDOWS, SYNTHESES, ["gwola"], [template.seed])
    curves = {(r["window"], r["synthesis"]): [] for r in rows}
    for r in rows:
        curves[(r["window"], r["synthesis"])].append(r["steady_erle_db"])
    elapsed = time.perf_counter() - t0
    spot_ok = all(abs(v - t) <= 1.5 for v, t in spots.values())
    worst_drop = min(float(np.min(np.diff(c))) for c in curves.values())
    worst_order = min(float(np.min(np.subtract(curves[(w, "min-distortion")], curves[(w, "min-norm")])))
                      for w in WINDOWS)
    ok = spot_ok and worst_drop >= -0.3 and worst_order >= 0 and elapsed < 900
    detail = ", ".join(f"{w} {s} T={T} {v:.2f} dB (target {t} +-1.5)" for (w, s, T), (v, t) in spots.items())
    detail += (f"; grid smallest step {worst_drop:+.2f} dB (>= -0.3); min(min-dist - min-norm) {worst_order:.2f} dB"
               f" (>= 0); {elapsed / 60:.1f} min (< 15)")
    for (w, s), c in curves.items():
        print(f"  {w:9s} {s:14s} " + " ".join(f"{v:6.2f}" for v in c))
    acceptance.record(7, ok, detail)
    assert ok


def test_08_ptwola_parity(acceptance):
    # (window, R, {synthesis: tolerance}) at equal total taps
    cases = [("rect", 0, {"min-norm": 0.2, "min-distortion": 0.2}),
             ("cosine", 1, {"min-norm": 0.2, "min-distortion": 0.2}),
             ("root-hann", 2, {"min-norm": 0.5}),
             ("root-hann", 4, {"min-distortion": 0.5})]
    seeds = [derive_seed(8, i) for i in range(3)]
    diffs = {}
    for T in (21, 51):
        gw = {}
        for win in WINDOWS:
            vals = [simulate(ScenarioConfig(window=win, T=T, frames=2000, seed=s), SYNTHESES) for s in seeds]
            gw[win] = {syn: np.mean([v[syn].steady_erle_db for v in vals]) for syn in SYNTHESES}
        for win, R, tol in cases:
            vals = [simulate(ScenarioConfig(window=win, method="ptwola", R=R, T=T, frames=2000, seed=s), list(tol))
                    for s in seeds]
            for syn in tol:
                diffs[(win, R, syn, T)] = (float(np.mean([v[syn].steady_erle_db for v in vals]) - gw[win][syn]), tol[syn])
    failed = [k for k, (d, tol) in diffs.items() if abs(d) > tol]
    ok = not failed
    detail = "; ".join(f"{w} R={R} {s} T={T}: {d:+.2f} dB (+-{tol})" for (w, R, s, T), (d, tol) in diffs.items())
    acceptance.record(8, ok, "ptwola - gwola: " + detail)
    assert ok


def test_09_flop_counters(acceptance):
    results = []
    for N, T, R in [(1024, 1, 0), (1024, 51, 4), (256, 15, 2)]:
        spec = FilterBankSpec.design(N, N // 2, "root-hann")
        rng = np.random.default_rng(9)
        for method, eng_of in [("gwola", lambda c: GwolaEngine(spec, T, counter=c)),
                               ("ptwola", lambda c: PtwolaEngine(spec, PtwolaConfig(R, T), counter=c))]:
            cnt = FlopCounter()
            eng = eng_of(cnt)
            coeffs = np.zeros((spec.half, T), complex)
            for _ in range(3):
                eng.filter(eng.push(rng.standard_normal(N // 2)), coeffs)
            rep = table1(method, N, T, R)
            results.append((method, N, T, R, cnt.per_frame() == (rep.real_mults, rep.real_adds)))
    ok = all(r[-1] for r in results)
    acceptance.record(9, ok, "runtime counters == closed forms: "
                      + ", ".join(f"{m}({N},{T},{R}) {'ok' if e else 'MISMATCH'}" for m, N, T, R, e in results))
    assert ok


def test_10_determinism(acceptance):
    template = ScenarioConfig(N=256, D=128, L=128, frames=300, seed=10)
    args = ([1, 5], WINDOWS, SYNTHESES, ["gwola", "ptwola", "conventional"], 2)
    a = rows_to_csv(sweep(template, *args, R_list=[0, 2]))
    b = rows_to_csv(sweep(dataclasses.replace(template), *args, R_list=[0, 2]))
    ok = a == b and len(a.splitlines()) > 1
    acceptance.record(10, ok, f"two sweeps with identical seeds: {len(a.splitlines()) - 1} rows, "
                      f"{'bit-identical' if a == b else 'DIFFERENT'} CSV")
    assert ok
