"""Generalized-WOLA regressors and streaming engine.

Each frame the regressor of subband k holds the windowed transforms of T
successive one-sample-shifted input frames,

    U[k, t] = sum_m h0(m) alpha_N^{mk} u(qD - t - m),

so that the subband output c_k . U[k, :] equals full-rate filtering by c_k
followed by decimation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .complexity import ComplexityReport, FlopCounter, Method, table1
from .errors import LengthMismatch, TapMismatch
from .filterbank import FilterBankSpec, SubbandFilterSet, _gather


@dataclass(frozen=True, eq=False)
class RegressorFrame:
    """Per-frame regressor, row k for subband k (K = N or N/2+1 rows)."""

    matrix: np.ndarray
    q: int = 0

    @property
    def T(self) -> int:
        return self.matrix.shape[1]


def build_regressor(u_history, q, T, spec, half=False, step=1) -> RegressorFrame:
    """Regressor of frame q built directly from an absolute-time history.

    Column t is the analysis frame of the input delayed by ``t * step``
    samples (``step = 1`` for generalized WOLA, ``step = D`` stacks past
    frames as in conventional WOLA).
    """
    h = spec.h0.coefficients
    N = spec.N
    idx = q * spec.D - step * np.arange(T)[:, None] - np.arange(N)[None, :]
    seg = _gather(u_history, idx) * h[None, :]
    if half and not np.iscomplexobj(seg):
        X = np.conj(np.fft.rfft(seg, axis=1))
    else:
        X = N * np.fft.ifft(seg, axis=1)
        if half:
            X = X[:, : N // 2 + 1]
    return RegressorFrame(X.T.copy(), q)


def subband_output(frame: RegressorFrame, filters, k) -> complex:
    """Y_k(q) = sum_t c_k(t) U[k, t]."""
    c = filters.coeffs if isinstance(filters, SubbandFilterSet) else np.atleast_2d(filters)
    if c.shape[1] != frame.T:
        raise TapMismatch(f"filters have {c.shape[1]} taps, regressor has {frame.T}")
    return complex(np.dot(frame.matrix[k], c[k]))


def subband_outputs(frame: RegressorFrame, coeffs) -> np.ndarray:
    c = coeffs.coeffs if isinstance(coeffs, SubbandFilterSet) else np.atleast_2d(coeffs)
    if c.shape != frame.matrix.shape:
        raise TapMismatch(f"coefficient shape {c.shape} != regressor shape {frame.matrix.shape}")
    return np.einsum("kt,kt->k", frame.matrix, c)


def flops(N, T) -> ComplexityReport:
    return table1(Method.GWOLA, N, T)


def effective_responses(coeffs, h0, N, step=1, subbands=None) -> np.ndarray:
    """Full-rate responses b_k(p) = sum_t c_k(t) h0(p - t step) alpha_N^{(p - t step) k}."""
    c = np.atleast_2d(np.asarray(coeffs, complex))
    h = np.asarray(getattr(h0, "coefficients", h0), float)
    K, T = c.shape
    k = np.arange(K) if subbands is None else np.asarray(subbands)
    n = np.arange(N)
    hk = h[None, :] * np.exp(2j * np.pi * np.outer(k, n) / N)
    out = np.zeros((K, N + (T - 1) * step), complex)
    for t in range(T):
        out[:, t * step : t * step + N] += c[:, t : t + 1] * hk
    return out


def frame_blocks(u, D):
    """Split ``u`` into per-frame blocks; block q holds u(qD-D+1..qD)."""
    u = np.asarray(u)
    Q = -(-len(u) // D)
    pad = np.concatenate([np.zeros(D - 1, u.dtype), u, np.zeros(Q * D - len(u) + 1, u.dtype)])
    for q in range(Q):
        yield pad[q * D : q * D + D]


class OverlapAddSynthesizer:
    """Streaming synthesis: one subband frame in, D output samples out."""

    def __init__(self, spec: FilterBankSpec, half=True, f0=None):
        self.N, self.D = spec.N, spec.D
        self.half = half
        self.f0 = np.asarray(spec.f0.coefficients if f0 is None else getattr(f0, "coefficients", f0))
        self.acc = np.zeros(self.N, float if half else complex)

    def push(self, Y):
        N, D = self.N, self.D
        if self.half:
            v = np.fft.irfft(Y, n=N) * N
        else:
            v = N * np.fft.ifft(Y)
        self.acc += np.roll(v, -1) * self.f0
        out = self.acc[:D].copy()
        self.acc[:-D] = self.acc[D:].copy()
        self.acc[-D:] = 0
        return out


class GwolaEngine:
    """Streaming generalized-WOLA analysis and filtering.

    Parameters
    ----------
    spec : FilterBankSpec
    T : int
        Taps per subband.
    half : bool
        Process only subbands 0..N/2 of a real input.
    counter : FlopCounter, optional
        Receives the transform-stage and filtering-stage operation counts.
    """

    method = Method.GWOLA

    def __init__(self, spec: FilterBankSpec, T: int, half=True, counter: FlopCounter | None = None):
        if T < 1:
            raise TapMismatch("T must be >= 1")
        self.spec, self.T, self.half = spec, int(T), half
        self.counter = counter
        self.buf = np.zeros(spec.N + self.T - 1, float if half else complex)
        self.q = -1
        self._h = spec.h0.coefficients

    @property
    def n_subbands(self) -> int:
        return self.spec.half if self.half else self.spec.N

    def _shift_in(self, block):
        D = self.spec.D
        if len(block) != D:
            raise LengthMismatch(f"block must hold D={D} samples")
        self.buf[:-D] = self.buf[D:].copy()
        self.buf[-D:] = block
        self.q += 1

    def push(self, block) -> RegressorFrame:
        """Consume u(qD-D+1..qD) and return the regressor of frame q."""
        self._shift_in(block)
        N = self.spec.N
        rev = self.buf[::-1]
        seg = sliding_window_view(rev, N)[: self.T] * self._h[None, :]
        if self.half:
            X = np.conj(np.fft.rfft(seg, axis=1))
        else:
            X = N * np.fft.ifft(seg, axis=1)
        if self.counter is not None:
            for _ in range(self.T):
                self.counter.count_fft(N, windowed=True)
        return RegressorFrame(np.ascontiguousarray(X.T), self.q)

    def filter(self, frame: RegressorFrame, coeffs) -> np.ndarray:
        Y = subband_outputs(frame, coeffs)
        if self.counter is not None:
            self.counter.count_dot(self.spec.N // 2, frame.T)
            self.counter.end_frame()
        return Y

    def run(self, u, coeffs, f0=None):
        """Filter a whole signal with fixed coefficients; returns len(u) samples."""
        syn = OverlapAddSynthesizer(self.spec, self.half, f0)
        out = [syn.push(self.filter(self.push(b), coeffs)) for b in frame_blocks(u, self.spec.D)]
        return np.concatenate(out)[: len(u)] if out else np.zeros(0)


class ConventionalEngine(GwolaEngine):
    """Conventional WOLA: one windowed transform per frame, T-tap filters across frames."""

    method = Method.CONVENTIONAL

    def __init__(self, spec, T, half=True, counter=None):
        super().__init__(spec, 1, half, counter)
        self.T = int(T)
        self.hist = np.zeros((self.n_subbands, self.T), complex)

    def push(self, block) -> RegressorFrame:
        self._shift_in(block)
        N = self.spec.N
        seg = self.buf[::-1][:N] * self._h
        X = np.conj(np.fft.rfft(seg)) if self.half else N * np.fft.ifft(seg)
        if self.counter is not None:
            self.counter.count_fft(N, windowed=True)
        self.hist[:, 1:] = self.hist[:, :-1].copy()
        self.hist[:, 0] = X
        return RegressorFrame(self.hist.copy(), self.q)
