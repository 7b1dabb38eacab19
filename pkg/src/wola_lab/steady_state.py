"""Converged least-squares subband filters and the analytical ERLE model.

For white input the converged T-tap filter of subband k solves the Toeplitz
least-squares problem H_k c_k ~ H_k w, where H_k is the convolution matrix of
the modulated analysis filter h0(n) alpha_N^{nk}. All subbands share the
operator Z0 = pinv(H_c) H_w = [I_T | xi0] built from h0 alone.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import LengthMismatch, SingularGram, ZeroRir
from .filterbank import FilterBankSpec, SubbandFilterSet, SubbandImages, characterize
from .prototype import _residue_convolutions

ERLE_CAP_DB = 300.0


class RankDeficientWarning(RuntimeWarning):
    pass


def _h(h0):
    return np.asarray(getattr(h0, "coefficients", h0), float)


def toeplitz_hw(h0) -> np.ndarray:
    """(2N-1) x N convolution matrix of h0."""
    h = _h(h0)
    N = len(h)
    H = np.zeros((2 * N - 1, N))
    for j in range(N):
        H[j : j + N, j] = h
    return H


def _pad(w, N):
    w = np.asarray(w, float).ravel()
    if len(w) > N:
        raise LengthMismatch(f"impulse response length {len(w)} exceeds N={N}")
    out = np.zeros(N)
    out[: len(w)] = w
    return out


@dataclass(frozen=True, eq=False)
class SteadyStateModel:
    """Z0 = [I_T | xi0] and the Toeplitz matrices it is built from."""

    Z0: np.ndarray
    xi0: np.ndarray
    Hc: np.ndarray
    Hw: np.ndarray

    @property
    def T(self) -> int:
        return self.Z0.shape[0]

    @property
    def N(self) -> int:
        return self.Z0.shape[1]

    def coefficients(self, w) -> np.ndarray:
        """Converged c_k(l) = sum_j Z0(l, j) w(j) alpha_N^{-k(j-l)} for all k (N x T)."""
        N, T = self.N, self.T
        wp = _pad(w, N)
        l = np.arange(T)
        k = np.arange(N)
        # A[l, k] = sum_j Z0(l, j) w(j) alpha_N^{-kj}
        A = np.fft.fft(self.Z0 * wp[None, :], axis=1)
        return (A * np.exp(2j * np.pi * np.outer(l, k) / N)).T.copy()


def compute_Z0(h0, N=None, T=1) -> SteadyStateModel:
    """Steady-state operator Z0 = pinv(H_c) H_w with H_c the first T columns of H_w."""
    h = _h(h0)
    N = len(h) if N is None else int(N)
    if len(h) != N:
        raise LengthMismatch("h0 length must equal N")
    T = int(T)
    if not 1 <= T <= N:
        raise LengthMismatch(f"T must lie in [1, N], got {T}")
    Hw = toeplitz_hw(h)
    Hc = Hw[:, :T]
    Q, Rm = np.linalg.qr(Hc)
    d = np.abs(np.diag(Rm))
    if d.min() <= d.max() * 1e-13:
        raise SingularGram("H_c^T H_c is singular for this window")
    # H_c is badly conditioned for windows with small edge samples; two steps
    # of iterative refinement recover the accuracy lost in the QR solve
    Z0 = scipy.linalg.solve_triangular(Rm, Q.T @ Hw)
    for _ in range(2):
        Z0 += scipy.linalg.solve_triangular(Rm, Q.T @ (Hw - Hc @ Z0))
    return SteadyStateModel(Z0, Z0[:, T:].copy(), Hc, Hw)


def solve_subband_ls(h0, w, T, k) -> np.ndarray:
    """Least-squares c_k of length T for subband k (reference path).

    Solves min || H_k[:, :T] c - H_k w ||, H_k the convolution matrix of
    h0(n) alpha_N^{nk}.
    """
    h = _h(h0)
    N = len(h)
    wp = _pad(w, N)
    n = np.arange(N)
    hk = h * np.exp(2j * np.pi * n * k / N)
    Hk = np.zeros((2 * N - 1, N), complex)
    for j in range(N):
        Hk[j : j + N, j] = hk
    c, _, rank, _ = np.linalg.lstsq(Hk[:, :T], Hk @ wp, rcond=None)
    if rank < T:
        warnings.warn(f"rank-deficient subband system ({rank} < {T})", RankDeficientWarning)
    return c


def steady_state_images(model: SteadyStateModel, w, T=None) -> SubbandImages:
    """Closed-form images c~^l(n) = N (Z0(l, :) o w)((n + 1 + l) mod N)."""
    T = model.T if T is None else int(T)
    N = model.N
    wp = _pad(w, N)
    n = np.arange(N)
    rows = [N * (model.Z0[l] * wp)[(n + 1 + l) % N] for l in range(T)]
    return SubbandImages(np.array(rows, complex))


def image_support(images: SubbandImages, threshold_db=-200.0) -> np.ndarray:
    """Per-tap number of samples within ``threshold_db`` of the tap's peak."""
    a = np.abs(images.images)
    peak = np.max(a, axis=1, keepdims=True)
    return np.sum(a > peak * 10 ** (threshold_db / 20), axis=1)


def w_extended(w, N, T) -> np.ndarray:
    """[0_{N-1}, w padded to N, 0_{T-1}]: the delayed target of t_hat."""
    return np.concatenate([np.zeros(N - 1), _pad(w, N), np.zeros(T - 1)])


@dataclass(frozen=True, eq=False)
class ErleModel:
    """Linear maps from w to t_hat and a_hat_m.

    Every output sample n depends on the single tap w((n+1) mod N), so the
    maps are stored as gains: t_hat(n) = G_xi[n] w(j(n)) and
    a_hat_m(n) = Psi_xi[m-1, n] w(j(n)) with j(n) = (n + 1) mod N.
    """

    G_xi: np.ndarray
    Psi_xi: np.ndarray
    N: int
    T: int

    @property
    def index(self) -> np.ndarray:
        return (np.arange(len(self.G_xi)) + 1) % self.N

    def distortion(self, w) -> np.ndarray:
        return self.G_xi * _pad(w, self.N)[self.index]

    def aliasing(self, w) -> np.ndarray:
        return self.Psi_xi * _pad(w, self.N)[self.index][None, :]

    def G_matrix(self) -> np.ndarray:
        """Dense (2N+T-2) x N matrix of the distortion map."""
        G = np.zeros((len(self.G_xi), self.N), complex)
        G[np.arange(len(self.G_xi)), self.index] = self.G_xi
        return G

    def Psi_matrix(self, m) -> np.ndarray:
        P = np.zeros((len(self.G_xi), self.N), complex)
        P[np.arange(len(self.G_xi)), self.index] = self.Psi_xi[m - 1]
        return P


def erle_model(spec: FilterBankSpec, T, model: SteadyStateModel | None = None) -> ErleModel:
    """Build G_xi and Psi_xi from the prototypes and Z0.

    The aliasing gains are accumulated per residue class of h0 (real
    arithmetic) and modulated once at the end:
    Psi[m, n] = (1/D) sum_s C[n, s] alpha_D^{sm}.
    """
    N, D = spec.N, spec.D
    model = compute_Z0(spec.h0, N, T) if model is None else model
    B = _residue_convolutions(spec.h0.coefficients, spec.f0.coefficients, N, D)
    g0 = B.sum(axis=1) / D
    M = 2 * N + T - 2
    n = np.arange(2 * N - 1)
    G = np.zeros(M)
    C = np.zeros((M, D))
    for l in range(T):
        # column of Z0 hit by output sample n' = n + l is (n + l + 1) mod N
        z = N * model.Z0[l, (n + l + 1) % N]
        G[l : l + 2 * N - 1] += g0 * z
        # tap delay l moves residue r to (r + l) mod D
        C[l : l + 2 * N - 1] += np.roll(B, l, axis=1) * z[:, None]
    P = np.fft.ifft(C, axis=1).T[1:]
    return ErleModel(G.astype(complex), P, N, T)


@dataclass(frozen=True)
class ErleResult:
    erle_db: float
    distortion_err: float
    alias_err: float


def _erle_db(ref_energy, err_energy):
    if err_energy <= ref_energy * 10 ** (-ERLE_CAP_DB / 10):
        return ERLE_CAP_DB
    return float(10 * np.log10(ref_energy / err_energy))


def analytical_erle(w, spec: FilterBankSpec, T, model: SteadyStateModel | None = None,
                    erle: ErleModel | None = None) -> ErleResult:
    """Steady-state ERLE for white input.

    ERLE = ||w_ext||^2 / (||t_hat - w_ext||^2 + sum_m ||a_hat_m||^2) with the
    converged filters, reported in dB (capped at 300 dB).
    """
    N = spec.N
    wp = _pad(w, N)
    ref = float(np.sum(wp**2))
    if ref == 0:
        raise ZeroRir("impulse response is all zero")
    em = erle_model(spec, T, model) if erle is None else erle
    dist = float(np.sum(np.abs(em.distortion(wp) - w_extended(wp, N, T)) ** 2))
    alias = float(np.sum(np.abs(em.aliasing(wp)) ** 2))
    return ErleResult(_erle_db(ref, dist + alias), dist, alias)


def erle_from_characterization(w, spec, filters: SubbandFilterSet) -> ErleResult:
    """Same metric evaluated from :func:`characterize` of arbitrary filters."""
    N = spec.N
    c = characterize(filters, spec.kernels, spec)
    T = filters.T
    wp = _pad(w, N)
    dist = float(np.sum(np.abs(c.t_hat - w_extended(wp, N, T)) ** 2))
    alias = float(np.sum(np.abs(c.a_hat) ** 2))
    return ErleResult(_erle_db(float(np.sum(wp**2)), dist + alias), dist, alias)


@dataclass(frozen=True, eq=False)
class RoomImpulseResponse:
    """w(n) = Omega(n) exp(-kappa n), n < L, with white Gaussian Omega."""

    w: np.ndarray
    t60: float
    kappa: float
    seed: int | None
    fs: float = 16000.0

    @property
    def L(self) -> int:
        return len(self.w)


def generate_rir(L, t60, fs=16000.0, seed=None) -> RoomImpulseResponse:
    """Exponentially decaying Gaussian impulse response.

    kappa = 3 ln(10) / (t60 fs) per sample; ``t60 = inf`` gives white noise.
    ``seed`` may be an int, a SeedSequence or a Generator.
    """
    L = int(L)
    if L < 1:
        raise LengthMismatch("L must be >= 1")
    if not t60 > 0:
        raise ValueError("t60 must be positive")
    kappa = 0.0 if np.isinf(t60) else 3.0 * np.log(10.0) / (t60 * fs)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    omega = rng.standard_normal(L)
    s = seed if isinstance(seed, (int, np.integer)) else None
    return RoomImpulseResponse(omega * np.exp(-kappa * np.arange(L)), float(t60), kappa, s, fs)
