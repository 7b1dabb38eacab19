import numpy as np
import pytest

from wola_lab.complexity import FlopCounter, table1
from wola_lab.errors import LengthMismatch, TapMismatch
from wola_lab.filterbank import FilterBankSpec, SubbandFilterSet, analysis_frame, characterize
from wola_lab.gwola import (
    ConventionalEngine,
    GwolaEngine,
    build_regressor,
    effective_responses,
    flops,
    subband_output,
    subband_outputs,
)


def direct_regressor(u, q, T, h, D):
    N = len(h)
    X = np.zeros((N, T), complex)
    for t in range(T):
        for k in range(N):
            for m in range(N):
                n = q * D - t - m
                if 0 <= n < len(u):
                    X[k, t] += h[m] * np.exp(2j * np.pi * m * k / N) * u[n]
    return X


def test_impulse_rect_two_taps():
    spec = FilterBankSpec.design(8, 4, "rect")
    u = np.zeros(16)
    u[0] = 1
    X = build_regressor(u, 0, 2, spec).matrix
    np.testing.assert_allclose(X[:, 0], 1, atol=1e-14)
    np.testing.assert_allclose(X[:, 1], 0, atol=1e-14)


def test_t1_is_analysis_frame():
    spec = FilterBankSpec.design(16, 8, "root-hann")
    u = np.random.default_rng(0).standard_normal(64)
    np.testing.assert_allclose(build_regressor(u, 5, 1, spec).matrix[:, 0], analysis_frame(u, 5, spec), atol=1e-12)


def test_direct_sum_oracle_and_half():
    spec = FilterBankSpec.design(8, 4, "cosine")
    u = np.random.default_rng(1).standard_normal(40)
    for q in range(6):
        X = build_regressor(u, q, 3, spec).matrix
        np.testing.assert_allclose(X, direct_regressor(u, q, 3, spec.h0.coefficients, 4), atol=1e-12)
        np.testing.assert_allclose(build_regressor(u, q, 3, spec, half=True).matrix, X[:5], atol=1e-12)


def test_column_shift_property():
    spec = FilterBankSpec.design(16, 8, "root-hann")
    u = np.random.default_rng(2).standard_normal(100)
    X = build_regressor(u, 6, 4, spec).matrix
    for t in range(4):
        delayed = np.concatenate([np.zeros(t), u])[: len(u)]
        np.testing.assert_allclose(X[:, t], build_regressor(delayed, 6, 1, spec).matrix[:, 0], atol=1e-12)


def test_subband_output_examples():
    spec = FilterBankSpec.design(8, 4, "cosine")
    u = np.random.default_rng(3).standard_normal(30)
    fr = build_regressor(u, 3, 2, spec)
    e0 = np.zeros((8, 2))
    e0[:, 0] = 1
    for k in range(8):
        assert subband_output(fr, e0, k) == pytest.approx(fr.matrix[k, 0])
        assert subband_output(fr, np.zeros((8, 2)), k) == 0
    with pytest.raises(TapMismatch):
        subband_output(fr, np.zeros((8, 3)), 0)


def test_subband_output_matches_full_rate_filtering():
    # oracle: convolve the subband signal by c_k at the full rate, then decimate
    rng = np.random.default_rng(4)
    N, D, T = 8, 4, 3
    spec = FilterBankSpec.design(N, D, "root-hann", "min-distortion")
    u = rng.standard_normal(60)
    c = rng.standard_normal((N, T)) + 1j * rng.standard_normal((N, T))
    h = spec.h0.coefficients
    n = np.arange(N)
    for k in range(N):
        xk = np.convolve(u, h * np.exp(2j * np.pi * n * k / N))
        yk = np.convolve(xk, c[k])
        for q in range(1, 10):
            assert abs(subband_output(build_regressor(u, q, T, spec), c, k) - yk[q * D]) < 1e-12


def test_effective_response_characterization():
    rng = np.random.default_rng(5)
    N, D, T = 16, 8, 3
    spec = FilterBankSpec.design(N, D, "cosine")
    c = rng.standard_normal((N, T)) + 1j * rng.standard_normal((N, T))
    b = effective_responses(c, spec.h0, N)
    u = rng.standard_normal(80)
    for k in (0, 5):
        yk = np.convolve(u, b[k])
        for q in range(2, 8):
            assert abs(yk[q * D] - subband_output(build_regressor(u, q, T, spec), c, k)) < 1e-11


def test_engine_matches_direct_regressor():
    spec = FilterBankSpec.design(16, 8, "root-hann")
    u = np.random.default_rng(6).standard_normal(160)
    eng = GwolaEngine(spec, 3, half=False)
    pad = np.concatenate([np.zeros(7), u])
    for q in range(20):
        fr = eng.push(pad[q * 8 : q * 8 + 8])
        np.testing.assert_allclose(fr.matrix, build_regressor(u, q, 3, spec).matrix, atol=1e-12)
    with pytest.raises(LengthMismatch):
        eng.push(np.zeros(3))


def test_engine_run_matches_characterization():
    rng = np.random.default_rng(7)
    N, D, T = 16, 8, 2
    spec = FilterBankSpec.design(N, D, "cosine", "min-distortion")
    half = rng.standard_normal((N // 2 + 1, T)) + 1j * rng.standard_normal((N // 2 + 1, T))
    half[[0, -1]] = half[[0, -1]].real
    c = SubbandFilterSet.from_half(half, N)
    u = rng.standard_normal(200)
    y = GwolaEngine(spec, T).run(u, half)
    ch = characterize(c, spec.kernels, spec)
    n = np.arange(len(u))
    ref = np.convolve(u, ch.t_hat)[: len(u)]
    for m in range(1, D):
        ref = ref + np.convolve(u * np.exp(2j * np.pi * n * m / D), ch.a_hat[m - 1])[: len(u)]
    assert np.linalg.norm(y - ref.real) < 1e-10 * np.linalg.norm(ref)


def test_conventional_engine_stacks_frames():
    spec = FilterBankSpec.design(16, 8, "root-hann")
    u = np.random.default_rng(8).standard_normal(200)
    eng = ConventionalEngine(spec, 3, half=False)
    pad = np.concatenate([np.zeros(7), u])
    for q in range(12):
        X = eng.push(pad[q * 8 : q * 8 + 8]).matrix
        np.testing.assert_allclose(X, build_regressor(u, q, 3, spec, step=8).matrix, atol=1e-12)


@pytest.mark.parametrize("N,T", [(1024, 1), (1024, 51), (256, 15)])
def test_runtime_counter_matches_closed_form(N, T):
    spec = FilterBankSpec.design(N, N // 2, "root-hann")
    cnt = FlopCounter()
    eng = GwolaEngine(spec, T, counter=cnt)
    coeffs = np.zeros((N // 2 + 1, T), complex)
    rng = np.random.default_rng(0)
    for _ in range(3):
        eng.filter(eng.push(rng.standard_normal(N // 2)), coeffs)
    rep = table1("gwola", N, T)
    assert cnt.per_frame() == (rep.real_mults, rep.real_adds)


def test_flops_values():
    assert (flops(1024, 1).real_mults, flops(1024, 1).real_adds) == (23552, 31744)
    assert flops(1024, 51).real_mults == 1_201_152
    with pytest.raises(ValueError):
        flops(1024, 0)


def test_subband_outputs_shape_check():
    spec = FilterBankSpec.design(8, 4, "rect")
    fr = build_regressor(np.ones(10), 1, 2, spec)
    with pytest.raises(TapMismatch):
        subband_outputs(fr, np.zeros((8, 1)))
