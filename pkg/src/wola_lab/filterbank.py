"""DFT-modulated filter-bank transforms and time-domain characterisation.

Analysis of frame q gives X_k(q) = sum_m h0(m) alpha_N^{mk} x(qD - m) with
alpha_N = exp(2j pi/N). Synthesis filters are f_k(n) = f0(n) alpha_N^{k(n+1)}.
With length-T subband filters c_k applied at the full rate before decimation
the bank is linear periodically time-varying,

    y_hat(n) = (t_hat * u)(n) + sum_m (a_hat_m * u_m)(n),
    u_m(n) = u(n) alpha_D^{nm},

where t_hat is the distortion response and a_hat_m the aliasing responses.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .errors import InsufficientHistory, InvalidConfig, KernelMismatch, LengthMismatch
from .prototype import (
    PrototypeFilter,
    SynthesisDesign,
    SynthesisPrototype,
    TransferKernels,
    compute_kernels,
    design_synthesis,
    make_window,
    verify_pr,
)


@dataclass(frozen=True, eq=False)
class FilterBankSpec:
    """Uniform filter bank: N subbands, decimation D, prototypes h0 and f0.

    When ``pr_certified`` is set the pair is checked for perfect
    reconstruction with delay ``tau = N - 1`` at construction.
    """

    N: int
    D: int
    h0: PrototypeFilter
    f0: SynthesisPrototype
    pr_certified: bool = False

    def __post_init__(self):
        N, D = int(self.N), int(self.D)
        if N < 2 or N & (N - 1):
            raise InvalidConfig(f"N must be a power of two, got {N}")
        if D < 1 or N % D:
            raise InvalidConfig(f"D={D} must divide N={N}")
        if self.h0.N != N or self.f0.N != N:
            raise LengthMismatch("prototype lengths must equal N")
        if self.pr_certified:
            rep = verify_pr(self.h0, self.f0, N, D)
            if not rep.passed:
                raise InvalidConfig(f"prototype pair is not PR: {rep}")

    @property
    def tau(self) -> int:
        return self.N - 1

    @property
    def half(self) -> int:
        """Number of non-redundant subbands of a real signal, N/2 + 1."""
        return self.N // 2 + 1

    @cached_property
    def kernels(self) -> TransferKernels:
        return compute_kernels(self.h0, self.f0, self.N, self.D)

    def with_synthesis(self, f0: SynthesisPrototype) -> "FilterBankSpec":
        return FilterBankSpec(self.N, self.D, self.h0, f0, self.pr_certified)

    @classmethod
    def design(cls, N, D, window="root-hann", synthesis="min-norm", **kw) -> "FilterBankSpec":
        """PR-certified bank with a designed synthesis window (memoised)."""
        h0 = window if isinstance(window, PrototypeFilter) else make_window(window, N)
        syn = SynthesisDesign(synthesis) if not isinstance(synthesis, SynthesisDesign) else synthesis
        key = tuple(sorted(kw.items()))
        f = _designed(h0.label, int(N), int(D), syn.value, key)
        return cls(int(N), int(D), make_window(h0.label, N), SynthesisPrototype(f.copy(), syn), True)


@lru_cache(maxsize=64)
def _designed(label, N, D, design, key):
    h0 = make_window(label, N)
    f = design_synthesis(h0, N, D, design, **dict(key)).coefficients
    f.setflags(write=False)
    return f


@dataclass(frozen=True, eq=False)
class SubbandFilterSet:
    """Subband FIR coefficients, row k holding c_k(0..T-1)."""

    coeffs: np.ndarray
    real_signal_symmetric: bool = False

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.coeffs, complex))
        if c.shape[1] < 1:
            raise InvalidConfig("T must be >= 1")
        object.__setattr__(self, "coeffs", c)

    @property
    def N(self) -> int:
        return self.coeffs.shape[0]

    @property
    def T(self) -> int:
        return self.coeffs.shape[1]

    @classmethod
    def identity(cls, N, T=1):
        c = np.zeros((N, T), complex)
        c[:, 0] = 1.0
        return cls(c, True)

    @classmethod
    def from_half(cls, half, N):
        """Full set from subbands 0..N/2 using c_{N-k} = conj(c_k)."""
        half = np.atleast_2d(np.asarray(half, complex))
        if half.shape[0] != N // 2 + 1:
            raise LengthMismatch(f"expected {N // 2 + 1} rows, got {half.shape[0]}")
        full = np.concatenate([half, np.conj(half[-2:0:-1])], axis=0)
        return cls(full, True)

    def half(self) -> np.ndarray:
        return self.coeffs[: self.N // 2 + 1]

    def is_symmetric(self, tol=1e-12) -> bool:
        mirror = np.conj(self.coeffs[(-np.arange(self.N)) % self.N])
        return bool(np.max(np.abs(mirror - self.coeffs)) <= tol * max(1.0, np.max(np.abs(self.coeffs))))


@dataclass(frozen=True, eq=False)
class SubbandImages:
    """Time-domain images, row l holding one period of c~^l(n)."""

    images: np.ndarray

    @property
    def T(self) -> int:
        return self.images.shape[0]

    @property
    def N(self) -> int:
        return self.images.shape[1]

    def periodic(self, n) -> np.ndarray:
        return self.images[:, np.asarray(n) % self.N]

    def to_filters(self) -> SubbandFilterSet:
        return SubbandFilterSet(images_to_coefficients(self.images))


@dataclass(frozen=True, eq=False)
class TransferCharacterization:
    """Distortion response t_hat and aliasing responses a_hat (row m-1 for m)."""

    t_hat: np.ndarray
    a_hat: np.ndarray


# ----------------------------------------------------------------------------
# transforms
# ----------------------------------------------------------------------------


def _frame_indices(q, D, N, shift=0):
    return q * D - shift - np.arange(N)


def _gather(x, idx, zero_extend=True):
    x = np.asarray(x)
    ok = (idx >= 0) & (idx < len(x))
    if not zero_extend and np.any(idx < 0):
        raise InsufficientHistory("frame reaches before the start of the history")
    out = np.zeros(idx.shape, x.dtype if np.iscomplexobj(x) else float)
    out[ok] = x[idx[ok]]
    return out


def _h(spec_or_n, filt):
    if filt is not None:
        return np.asarray(filt.coefficients if isinstance(filt, PrototypeFilter) else filt, float)
    return np.asarray(spec_or_n.h0.coefficients, float)


def analysis_frame(signal_history, q, spec, filter=None, shift=0, zero_extend=True):
    """X_k(q) = sum_m h0(m) alpha_N^{mk} x(qD - shift - m), k = 0..N-1.

    ``signal_history`` is indexed by absolute time starting at 0. Samples
    before 0 (and past the end) are treated as zero.
    """
    h = _h(spec, filter)
    N = len(h)
    seg = _gather(signal_history, _frame_indices(q, spec.D, N, shift), zero_extend)
    return N * np.fft.ifft(h * seg)


def analysis_frames(x, spec, n_frames, shift=0, half=False, filter=None):
    """Stack of analysis frames q = 0..n_frames-1, one row per frame."""
    h = _h(spec, filter)
    N = len(h)
    idx = np.arange(n_frames)[:, None] * spec.D - shift - np.arange(N)[None, :]
    seg = _gather(x, idx) * h[None, :]
    if half and not np.iscomplexobj(seg):
        return np.conj(np.fft.rfft(seg, axis=1))
    X = N * np.fft.ifft(seg, axis=1)
    return X[:, : N // 2 + 1] if half else X


def _full_frames(frames, N):
    frames = np.atleast_2d(np.asarray(frames, complex))
    if frames.shape[1] == N:
        return frames, False
    if frames.shape[1] == N // 2 + 1:
        return np.concatenate([frames, np.conj(frames[:, -2:0:-1])], axis=1), True
    raise LengthMismatch(f"frames must have N={N} or N/2+1 columns")


def synthesis_frame(frame, spec):
    """Contribution of one subband frame to samples qD..qD+N-1."""
    full, half = _full_frames(frame, spec.N)
    v = spec.N * np.fft.ifft(full[0])
    out = np.roll(v, -1) * spec.f0.coefficients
    return out.real if half else out


def synthesis_overlap_add(subband_frames, spec, real=None):
    """Overlap-add synthesis of frames q = 0..Q-1.

    y(n) = sum_q sum_k Y_k(q) f0(n - qD) alpha_N^{k(n - qD + 1)}. Frames with
    N/2+1 columns are taken as the non-redundant half of a real signal. The
    output has (Q-1)D + N samples; it is real when ``real`` is true or the
    frames are half spectra.
    """
    N, D = spec.N, spec.D
    full, half = _full_frames(subband_frames, N)
    Q = full.shape[0]
    v = N * np.fft.ifft(full, axis=1)
    v = np.roll(v, -1, axis=1) * spec.f0.coefficients[None, :]
    if real or half:
        v = v.real
    out = np.zeros((Q - 1) * D + N, v.dtype)
    for q in range(Q):
        out[q * D : q * D + N] += v[q]
    return out


def subband_images(filters: SubbandFilterSet) -> SubbandImages:
    """c~^l(n) = sum_k c_k(l) alpha_N^{k(n+1)}, n = 0..N-1."""
    c = filters.coeffs if isinstance(filters, SubbandFilterSet) else np.atleast_2d(filters)
    N = c.shape[0]
    img = N * np.fft.ifft(c, axis=0)
    return SubbandImages(np.roll(img, -1, axis=0).T.copy())


def images_to_coefficients(images) -> np.ndarray:
    """Inverse of :func:`subband_images`: c_k(l) = (1/N) sum_n c~^l(n) alpha_N^{-k(n+1)}."""
    img = np.atleast_2d(np.asarray(images, complex))
    N = img.shape[1]
    return (np.fft.fft(np.roll(img, 1, axis=1), axis=1) / N).T.copy()


# ----------------------------------------------------------------------------
# characterisation
# ----------------------------------------------------------------------------


def _extend(c, N):
    # one full period then the first N-1 samples again
    return np.concatenate([c, c[..., : N - 1]], axis=-1)


def characterize(filters, kernels: TransferKernels, spec, method="fast") -> TransferCharacterization:
    """Distortion and aliasing responses of the bank with subband filters.

    t_hat(n) = sum_l g0(n-l) c~^l((n-l) mod N) and
    a_hat_m(n) = sum_l alpha_D^{lm} psi_m(n-l) c~^l((n-l) mod N),
    for n = 0..2N+T-3. ``method="direct"`` evaluates the double sums over k and
    l literally.
    """
    N, D = spec.N, spec.D
    if kernels.N != N or kernels.D != D or len(kernels.g0) != 2 * N - 1:
        raise KernelMismatch("kernels do not match the filter-bank spec")
    c = filters.coeffs
    if c.shape[0] != N:
        raise LengthMismatch(f"filters have {c.shape[0]} subbands, spec has {N}")
    T = c.shape[1]
    M = 2 * N + T - 2
    m = np.arange(1, D)
    t_hat = np.zeros(M, complex)
    a_hat = np.zeros((D - 1, M), complex)
    if method == "direct":
        k = np.arange(N)
        for l in range(T):
            for n in range(l, l + 2 * N - 1):
                img = np.sum(np.exp(2j * np.pi * k * (n - l + 1) / N) * c[:, l])
                t_hat[n] += kernels.g0[n - l] * img
                a_hat[:, n] += np.exp(2j * np.pi * l * m / D) * kernels.psi[:, n - l] * img
    else:
        imgs = subband_images(filters).images
        for l in range(T):
            ext = _extend(imgs[l], N)
            t_hat[l : l + 2 * N - 1] += kernels.g0 * ext
            if D > 1:
                a_hat[:, l : l + 2 * N - 1] += (
                    np.exp(2j * np.pi * l * m / D)[:, None] * kernels.psi * ext[None, :]
                )
    return TransferCharacterization(t_hat, a_hat)


def characterize_effective(responses, spec, alias=True) -> TransferCharacterization:
    """Characterisation from per-subband effective impulse responses.

    ``responses[k]`` is the full-rate response b_k from the input to subband
    k before decimation (analysis filter followed by any linear subband
    processing). Then t_hat = (1/D) sum_k b_k * f_k and
    a_hat_m = (1/D) sum_k (b_k alpha_D^{pm}) * f_k.
    """
    b = np.atleast_2d(np.asarray(responses, complex))
    N, D = spec.N, spec.D
    if b.shape[0] != N:
        raise LengthMismatch(f"need responses for all {N} subbands")
    Lb = b.shape[1]
    M = Lb + N - 1
    f = spec.f0.coefficients
    # Bt[p, j] = sum_k b_k(p) alpha_N^{jk}
    Bt = N * np.fft.ifft(b, axis=0).T
    S = f[None, :] * np.roll(Bt, -1, axis=1)
    acc = np.zeros((D, M), complex)
    for p in range(Lb):
        acc[p % D, p : p + N] += S[p]
    parts = np.fft.ifft(acc, axis=0)
    t_hat = parts[0]
    a_hat = parts[1:] if alias else np.zeros((0, M), complex)
    return TransferCharacterization(t_hat, a_hat)


@dataclass(frozen=True, eq=False)
class LptvResult:
    simulated: np.ndarray
    predicted: np.ndarray

    def max_relative_error(self) -> float:
        num = np.linalg.norm(self.simulated - self.predicted, axis=1)
        den = np.maximum(np.linalg.norm(self.simulated, axis=1), 1e-300)
        return float(np.max(num / den))


def _chain_response(p, c, spec, length):
    """Brute-force full-rate chain driven by a unit impulse at time p."""
    N, D = spec.N, spec.D
    h, f = spec.h0.coefficients, spec.f0.coefficients
    n = np.arange(N)
    u = np.zeros(length)
    u[p] = 1.0
    y = np.zeros(length, complex)
    for k in range(N):
        hk = h * np.exp(2j * np.pi * n * k / N)
        fk = f * np.exp(2j * np.pi * (n + 1) * k / N)
        xk = np.convolve(u, hk)[:length]
        yk = np.convolve(xk, c[k])[:length]
        dec = np.zeros(length, complex)
        dec[::D] = yk[::D]
        y += np.convolve(dec, fk)[:length]
    return y


def lptv_impulse_responses(filters, spec) -> LptvResult:
    """Responses to impulses at phases p = 0..D-1, simulated and predicted.

    Simulation runs the full chain (full-rate analysis and subband filtering,
    decimation, interpolation, synthesis filtering). The prediction is
    r_p(n) = t_hat(n-p) + sum_m a_hat_m(n-p) alpha_D^{pm} from
    :func:`characterize`.
    """
    N, D = spec.N, spec.D
    c = filters.coeffs
    T = c.shape[1]
    char = characterize(filters, spec.kernels, spec)
    M = len(char.t_hat)
    length = D + M
    sim = np.zeros((D, length), complex)
    pred = np.zeros((D, length), complex)
    m = np.arange(1, D)
    for p in range(D):
        sim[p] = _chain_response(p, c, spec, length)
        pred[p, p : p + M] = char.t_hat + np.exp(2j * np.pi * p * m / D) @ char.a_hat
    return LptvResult(sim, pred)


def apply_full_system(u, filters, spec):
    """Streamed generalized-WOLA chain applied to ``u``; returns len(u) samples."""
    from .gwola import GwolaEngine

    u = np.asarray(u)
    real = not np.iscomplexobj(u) and filters.is_symmetric()
    eng = GwolaEngine(spec, filters.T, half=real)
    coeffs = filters.half() if real else filters.coeffs
    return eng.run(u, coeffs)
