"""PT-WOLA: one non-windowed transform per frame plus cross and difference terms.

With the window written as a cosine series, the windowed transform row k is a
weighted sum of non-windowed rows k-R..k+R,

    X_k(s) = sum_{|r| <= R} w_r U_{k+r}(s),   w_0 = gamma(0), w_r = gamma(|r|)/2,

and a one-sample shift of a non-windowed transform follows the sliding-DFT
recursion U_k(s-1) = alpha_N^{-k} (U_k(s) - du(s)), du(s) = u(s) - u(s-N).
The regressor of subband k is therefore

    [U_{k-R}(qD), ..., U_{k+R}(qD), du(qD), du(qD-1), ..., du(qD-T_diff+1)].
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .complexity import ComplexityReport, FlopCounter, Method, table1
from .errors import InvalidConfig, LengthMismatch, TapMismatch, TruncationMismatch
from .filterbank import FilterBankSpec, SubbandFilterSet, _gather
from .gwola import OverlapAddSynthesizer, RegressorFrame, frame_blocks, subband_outputs
from .prototype import CosineSeries


@dataclass(frozen=True)
class PtwolaConfig:
    """R cross terms on each side and T_total taps per subband."""

    R: int
    T_total: int

    def __post_init__(self):
        if self.R < 0 or self.T_total < 2 * self.R + 1:
            raise InvalidConfig(f"need R >= 0 and T_total >= 2R+1, got R={self.R}, T={self.T_total}")

    @property
    def T_diff(self) -> int:
        return self.T_total - (2 * self.R + 1)

    @property
    def n_cross(self) -> int:
        return 2 * self.R + 1

    @classmethod
    def for_gwola_taps(cls, R, T) -> "PtwolaConfig":
        """Configuration that exactly represents a T-tap generalized-WOLA filter."""
        return cls(int(R), int(T) + 2 * int(R))


@dataclass(frozen=True, eq=False)
class PtwolaFilterSet:
    """Row k holds v_k: 2R+1 cross coefficients then T_diff difference coefficients."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.coeffs, complex))
        if not np.all(np.isfinite(c)):
            raise InvalidConfig("non-finite PT-WOLA coefficients")
        object.__setattr__(self, "coeffs", c)


@dataclass(frozen=True, eq=False)
class PtwolaRegressor:
    """Cross part (K x (2R+1)) and the real difference terms (T_diff)."""

    cross: np.ndarray
    diff: np.ndarray
    q: int = 0

    def matrix(self) -> np.ndarray:
        K = self.cross.shape[0]
        return np.concatenate([self.cross, np.broadcast_to(self.diff, (K, len(self.diff)))], axis=1)

    def as_frame(self) -> RegressorFrame:
        return RegressorFrame(self.matrix(), self.q)


def _rows(N, R, subbands):
    return (np.asarray(subbands)[:, None] + np.arange(-R, R + 1)[None, :]) % N


def ptwola_regressor(u_history, q, cfg: PtwolaConfig, spec: FilterBankSpec, half=False) -> PtwolaRegressor:
    """PT-WOLA regressor of frame q from an absolute-time history."""
    N, D = spec.N, spec.D
    seg = _gather(u_history, q * D - np.arange(N))
    U = N * np.fft.ifft(seg)
    j = np.arange(cfg.T_diff)
    diff = _gather(u_history, q * D - j) - _gather(u_history, q * D - j - N)
    K = N // 2 + 1 if half else N
    return PtwolaRegressor(U[_rows(N, cfg.R, np.arange(K))], diff, q)


def gamma_bar(series: CosineSeries, T) -> np.ndarray:
    """Block-diagonal T x T(2R+1) matrix with the cross weights on each block."""
    w = series.cross_weights()
    n = len(w)
    G = np.zeros((T, T * n))
    for t in range(T):
        G[t, t * n : (t + 1) * n] = w
    return G


def l_bar(k, R, T, N) -> np.ndarray:
    """Lower block-triangular map from [U rows, du terms] to T shifted row blocks.

    Block t maps to U_{k+r}(s-t) = alpha^{-t(k+r)} U_{k+r}(s)
    - sum_{d<t} alpha^{-(t-d)(k+r)} du(s-d).
    """
    n = 2 * R + 1
    rows = k + np.arange(-R, R + 1)
    L = np.zeros((T * n, n + T - 1), complex)
    for t in range(T):
        blk = slice(t * n, (t + 1) * n)
        L[blk, :n] = np.diag(np.exp(-2j * np.pi * t * rows / N))
        for d in range(t):
            L[blk, n + d] = -np.exp(-2j * np.pi * (t - d) * rows / N)
    return L


def map_coefficients(c: SubbandFilterSet, series: CosineSeries, cfg: PtwolaConfig,
                     spec: FilterBankSpec) -> PtwolaFilterSet:
    """v_k = c_k Gamma_R L_k for every subband.

    Requires ``cfg.T_diff = T - 1`` where T is the tap count of ``c``. The
    mapping is exact when the window's cosine series terminates at R.
    """
    if series.truncation_R != cfg.R:
        raise TruncationMismatch(f"series truncated at {series.truncation_R}, config has R={cfg.R}")
    coeffs = c.coeffs if isinstance(c, SubbandFilterSet) else np.atleast_2d(c)
    T = coeffs.shape[1]
    if cfg.T_diff != T - 1:
        raise TapMismatch(f"mapping needs T_total = 2R + T = {2 * cfg.R + T}, got {cfg.T_total}")
    N = spec.N
    G = gamma_bar(series, T)
    v = np.array([coeffs[i] @ G @ l_bar(k, cfg.R, T, N) for i, k in enumerate(range(coeffs.shape[0]))])
    return PtwolaFilterSet(v)


def decomposition_check(k, cfg: PtwolaConfig, spec: FilterBankSpec) -> float:
    """max |F_k - L_k F_bar_k| for the stacked shifted transform rows of subband k.

    T = cfg.T_diff + 1 shifts are used; F_bar_k stacks the 2R+1 non-windowed
    rows (zero-padded) and the difference selectors [I, 0, -I].
    """
    N, R = spec.N, cfg.R
    T = cfg.T_diff + 1
    n = 2 * R + 1
    rows = k + np.arange(-R, R + 1)
    m = np.arange(N)
    width = N + T - 1
    F = np.zeros((T * n, width), complex)
    for t in range(T):
        F[t * n : (t + 1) * n, t : t + N] = np.exp(2j * np.pi * np.outer(rows, m) / N)
    Fb = np.zeros((n + T - 1, width), complex)
    Fb[:n, :N] = np.exp(2j * np.pi * np.outer(rows, m) / N)
    for d in range(T - 1):
        Fb[n + d, d] = 1.0
        Fb[n + d, d + N] = -1.0
    return float(np.max(np.abs(F - l_bar(k, R, T, N) @ Fb)))


def flops(N, T_total, R) -> ComplexityReport:
    return table1(Method.PTWOLA, N, T_total, R)


def effective_responses(coeffs, cfg: PtwolaConfig, N, subbands=None) -> np.ndarray:
    """Full-rate input-to-subband responses implied by PT-WOLA coefficients v_k."""
    v = np.atleast_2d(np.asarray(coeffs, complex))
    K = v.shape[0]
    k = np.arange(K) if subbands is None else np.asarray(subbands)
    rows = _rows(N, cfg.R, k)
    m = np.arange(N)
    out = np.zeros((K, N + max(cfg.T_diff, 1)), complex)
    # cross: sum_r v_k(r) alpha^{m (k+r)}
    out[:, :N] = np.einsum("kr,krm->km", v[:, : cfg.n_cross], np.exp(2j * np.pi * rows[:, :, None] * m / N))
    for d in range(cfg.T_diff):
        out[:, d] += v[:, cfg.n_cross + d]
        out[:, d + N] -= v[:, cfg.n_cross + d]
    return out


class PtwolaEngine:
    """Streaming PT-WOLA regressor construction and filtering."""

    method = Method.PTWOLA

    def __init__(self, spec: FilterBankSpec, cfg: PtwolaConfig, half=True, counter: FlopCounter | None = None):
        self.spec, self.cfg, self.half = spec, cfg, half
        self.counter = counter
        self.buf = np.zeros(spec.N + cfg.T_diff, float if half else complex)
        self.q = -1
        K = spec.half if half else spec.N
        self._rows = _rows(spec.N, cfg.R, np.arange(K))

    @property
    def T(self) -> int:
        return self.cfg.T_total

    @property
    def n_subbands(self) -> int:
        return self.spec.half if self.half else self.spec.N

    def push(self, block) -> RegressorFrame:
        N, D = self.spec.N, self.spec.D
        if len(block) != D:
            raise LengthMismatch(f"block must hold D={D} samples")
        self.buf[:-D] = self.buf[D:].copy()
        self.buf[-D:] = block
        self.q += 1
        rev = self.buf[::-1]
        seg = rev[:N]
        U = np.conj(np.fft.fft(seg)) if self.half else N * np.fft.ifft(seg)
        Td = self.cfg.T_diff
        diff = rev[:Td] - rev[N : N + Td]
        if self.counter is not None:
            self.counter.count_fft(N)
            self.counter.count_real_adds(Td)
        K = len(self._rows)
        X = np.empty((K, self.cfg.T_total), complex)
        X[:, : self.cfg.n_cross] = U[self._rows]
        X[:, self.cfg.n_cross :] = diff[None, :]
        return RegressorFrame(X, self.q)

    def filter(self, frame: RegressorFrame, coeffs) -> np.ndarray:
        Y = subband_outputs(frame, coeffs)
        if self.counter is not None:
            self.counter.count_dot(self.spec.N // 2, self.cfg.n_cross, self.cfg.T_diff)
            self.counter.end_frame()
        return Y

    def run(self, u, coeffs, f0=None):
        syn = OverlapAddSynthesizer(self.spec, self.half, f0)
        out = [syn.push(self.filter(self.push(b), coeffs)) for b in frame_blocks(u, self.spec.D)]
        return np.concatenate(out)[: len(u)] if out else np.zeros(0)
