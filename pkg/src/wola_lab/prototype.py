"""Prototype windows, cosine series and perfect-reconstruction synthesis design.

All windows have length ``N`` and all filter banks use the modulation constant
``alpha_N = exp(2j*pi/N)``. Perfect reconstruction (PR) is normalised to a delay
of ``N - 1`` samples with unit gain.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import (
    AsymmetricWindow,
    DegenerateWindow,
    InvalidN,
    InvalidShape,
    LengthMismatch,
)

# Scenario the minimum-distortion design is tuned for by default: exponential
# impulse-response energy decay with T60 = 0.07 s at 16 kHz.
DEFAULT_PRIOR_T60 = 0.07
DEFAULT_PRIOR_FS = 16000.0


class WindowKind(enum.Enum):
    RECTANGULAR = "rect"
    COSINE = "cosine"
    ROOT_HANN = "root-hann"
    RAISED_COSINE_ROOT = "raised"


class SynthesisDesign(enum.Enum):
    MIN_NORM = "min-norm"
    MIN_DISTORTION = "min-distortion"
    CUSTOM = "custom"


def _check_n(N):
    N = int(N)
    if N < 4 or N & (N - 1):
        raise InvalidN(f"N must be a power of two >= 4, got {N}")
    return N


def _check_nd(N, D):
    if len(np.atleast_1d(N)) != 1:
        raise InvalidN("N must be scalar")
    N = int(N)
    if N < 1 or N & (N - 1):
        raise InvalidN(f"N must be a power of two, got {N}")
    D = int(D)
    if D < 1 or N % D:
        raise InvalidN(f"D={D} must divide N={N}")
    return N, D


@dataclass(frozen=True, eq=False)
class PrototypeFilter:
    """Real analysis window of length N.

    Attributes
    ----------
    coefficients : ndarray
        Window samples h0(n), n = 0..N-1.
    kind : WindowKind
    rho, eta : float or None
        Shape parameters of the raised-cosine-root family.
    """

    coefficients: np.ndarray
    kind: WindowKind
    rho: float | None = None
    eta: float | None = None

    @property
    def N(self) -> int:
        return len(self.coefficients)

    @property
    def label(self) -> str:
        if self.kind is WindowKind.RAISED_COSINE_ROOT:
            return f"raised:{self.rho:g}:{self.eta:g}"
        return self.kind.value


@dataclass(frozen=True, eq=False)
class SynthesisPrototype:
    """Real synthesis window f0 of length N and how it was obtained."""

    coefficients: np.ndarray
    design: SynthesisDesign = SynthesisDesign.CUSTOM

    @property
    def N(self) -> int:
        return len(self.coefficients)


def parse_window(spec):
    """Parse a window specifier.

    Accepts a :class:`WindowKind` or one of the strings ``rect``, ``cosine``,
    ``root-hann`` and ``raised:RHO:ETA``.

    Returns
    -------
    (WindowKind, rho, eta)
    """
    if isinstance(spec, WindowKind):
        return spec, None, None
    s = str(spec).strip().lower()
    aliases = {
        "rect": WindowKind.RECTANGULAR,
        "rectangular": WindowKind.RECTANGULAR,
        "cosine": WindowKind.COSINE,
        "cos": WindowKind.COSINE,
        "hann": WindowKind.COSINE,
        "root-hann": WindowKind.ROOT_HANN,
        "roothann": WindowKind.ROOT_HANN,
        "sqrt-hann": WindowKind.ROOT_HANN,
    }
    if s in aliases:
        return aliases[s], None, None
    if s.startswith("raised"):
        parts = s.split(":")
        if len(parts) != 3:
            raise InvalidShape(f"expected raised:RHO:ETA, got {spec!r}")
        return WindowKind.RAISED_COSINE_ROOT, float(parts[1]), float(parts[2])
    raise InvalidShape(f"unknown window {spec!r}")


def make_window(kind, N, rho=None, eta=None) -> PrototypeFilter:
    """Build a prototype analysis window.

    Parameters
    ----------
    kind : WindowKind or str
        Window family, see :func:`parse_window`.
    N : int
        Window length, a power of two >= 4.
    rho, eta : float, optional
        Parameters of ``(rho - eta*cos(2*pi*n/N))**0.5``; required for the
        raised-cosine-root family unless given in the string form.

    Examples
    --------
    >>> make_window("cosine", 4).coefficients
    array([0. , 0.5, 1. , 0.5])
    """
    N = _check_n(N)
    kind, r2, e2 = parse_window(kind)
    rho = r2 if rho is None else rho
    eta = e2 if eta is None else eta
    n = np.arange(N)
    if kind is WindowKind.RECTANGULAR:
        h = np.ones(N)
    elif kind is WindowKind.COSINE:
        h = 0.5 - 0.5 * np.cos(2 * np.pi * n / N)
    elif kind is WindowKind.ROOT_HANN:
        h = np.sin(np.pi * n / N)
    else:
        if rho is None or eta is None:
            raise InvalidShape("raised-cosine-root window needs rho and eta")
        rho, eta = float(rho), float(eta)
        if not (0.0 <= eta <= rho <= 1.0):
            raise InvalidShape(f"need 0 <= eta <= rho <= 1, got rho={rho}, eta={eta}")
        h = np.sqrt(np.maximum(rho - eta * np.cos(2 * np.pi * n / N), 0.0))
        return PrototypeFilter(h, kind, rho, eta)
    return PrototypeFilter(h, kind)


@dataclass(frozen=True, eq=False)
class CosineSeries:
    """Cosine series h0(n) = sum_r gamma(r) cos(2 pi r n / N), r = 0..N/2.

    ``truncation_R`` is the number of retained terms beyond r = 0.
    """

    gamma: np.ndarray
    truncation_R: int

    @property
    def N(self) -> int:
        return 2 * (len(self.gamma) - 1)

    def truncated(self, R: int) -> "CosineSeries":
        R = int(R)
        if not 0 <= R <= self.N // 2:
            raise InvalidShape(f"R must lie in [0, {self.N // 2}]")
        return CosineSeries(self.gamma, R)

    def reconstruct(self) -> np.ndarray:
        """Window rebuilt from the retained terms."""
        n = np.arange(self.N)
        r = np.arange(self.truncation_R + 1)
        return np.cos(2 * np.pi * np.outer(n, r) / self.N) @ self.gamma[: self.truncation_R + 1]

    def cross_weights(self) -> np.ndarray:
        """Weights of the non-windowed rows k-R..k+R that form windowed row k.

        Entry ``R + r`` multiplies row ``k + r``: gamma(0) at r = 0 and
        gamma(|r|)/2 elsewhere.
        """
        R = self.truncation_R
        g = self.gamma[np.abs(np.arange(-R, R + 1))].astype(float)
        g[np.arange(-R, R + 1) != 0] *= 0.5
        return g


def cosine_series(h0: PrototypeFilter, R=None) -> CosineSeries:
    """Exact cosine-series coefficients of a symmetric window.

    gamma(r) = c_r/N * sum_n h0(n) cos(2 pi r n/N) with c_0 = c_{N/2} = 1 and
    c_r = 2 otherwise (real-DFT projection, exact for any symmetric window).
    """
    h = np.asarray(h0.coefficients if isinstance(h0, PrototypeFilter) else h0, float)
    N = len(h)
    _check_n(N)
    mirror = h[(-np.arange(N)) % N]
    if np.max(np.abs(mirror - h)) > 1e-12 * max(1.0, np.max(np.abs(h))):
        raise AsymmetricWindow("window is not symmetric, h0(N-n) != h0(n)")
    gamma = np.fft.rfft(h).real / N
    gamma[1 : N // 2] *= 2.0
    return CosineSeries(gamma, N // 2).truncated(N // 2 if R is None else R)


# ----------------------------------------------------------------------------
# PR constraint system
# ----------------------------------------------------------------------------


def _coeffs(x):
    if isinstance(x, (PrototypeFilter, SynthesisPrototype)):
        return np.asarray(x.coefficients, float)
    return np.asarray(x, float)


def _check_degenerate(h, N, D):
    energy = np.sum(h.reshape(N // D, D) ** 2, axis=0)
    if np.any(energy <= 0):
        r = int(np.flatnonzero(energy <= 0)[0])
        raise DegenerateWindow(f"residue class {r} mod {D} of h0 is identically zero")


def pr_constraint_system(h0, N, D):
    """Real linear system A f0 = b expressing PR without subband processing.

    The distortion and alias coefficients at unit subband gains are
    ``t(n) = g0(n) * img(n)`` and ``a_m(n) = psi_m(n) * img(n)`` where
    ``img(n) = sum_k alpha_N^{k(n+1)}``. Both are linear in f0; rows where the
    image vanishes identically are dropped, the rest are split into real and
    imaginary parts.
    """
    h = _coeffs(h0)
    N, D = _check_nd(N, D)
    if len(h) != N:
        raise LengthMismatch(f"h0 has length {len(h)}, expected {N}")
    n = np.arange(2 * N - 1)
    img_period = N * np.fft.ifft(np.ones(N))
    img = img_period[(n + 1) % N]
    active = np.flatnonzero(np.abs(img) > 1e-9 * N)
    m = np.arange(D)
    j = np.arange(N)
    rows, rhs = [], []
    for nn in active:
        p = nn - j
        valid = (p >= 0) & (p < N)
        base = np.zeros(N, complex)
        base[valid] = h[p[valid]]
        mod = np.exp(2j * np.pi * np.outer(m, np.where(valid, p, 0)) / D)
        block = img[nn] / D * base[None, :] * mod
        rows.append(block)
        target = np.zeros(D, complex)
        target[0] = 1.0 if nn == N - 1 else 0.0
        rhs.append(target)
    A = np.concatenate(rows)
    b = np.concatenate(rhs)
    return np.concatenate([A.real, A.imag]), np.concatenate([b.real, b.imag])


def _solve_constraints(h, N, D):
    """Pseudoinverse solution of the PR system and a basis of its null space."""
    A, b = pr_constraint_system(h, N, D)
    U, s, Vt = np.linalg.svd(A, full_matrices=True)
    rank = int(np.sum(s > s[0] * 1e-10))
    fp = Vt[:rank].T @ ((U[:, :rank].T @ b) / s[:rank])
    if np.linalg.norm(A @ fp - b) > 1e-9 * max(1.0, np.linalg.norm(b)):
        raise DegenerateWindow("PR constraints are inconsistent for this window")
    return fp, Vt[rank:].T


def folded_products(h0, f0, N, D):
    """Per-residue sums sum_i h0(r+iD) f0(N-1-r-iD), r = 0..D-1."""
    h, f = _coeffs(h0), _coeffs(f0)
    rev = f[::-1]
    return np.sum((h * rev).reshape(N // D, D), axis=0)


def _assert_reduced_form(h, f, N, D):
    dev = np.max(np.abs(folded_products(h, f, N, D) * N - 1.0))
    if dev > 1e-9:
        raise DegenerateWindow(f"PR solution violates the folded constraints ({dev:.3g})")


def design_min_norm_synthesis(h0, N, D) -> SynthesisPrototype:
    """Minimum-norm synthesis window satisfying PR with delay N-1.

    Examples
    --------
    >>> h = make_window("rect", 8)
    >>> design_min_norm_synthesis(h, 8, 4).coefficients
    array([0.0625, 0.0625, 0.0625, 0.0625, 0.0625, 0.0625, 0.0625, 0.0625])
    """
    h = _coeffs(h0)
    N, D = _check_nd(N, D)
    if len(h) != N:
        raise LengthMismatch(f"h0 has length {len(h)}, expected {N}")
    _check_degenerate(h, N, D)
    fp, _ = _solve_constraints(h, N, D)
    _assert_reduced_form(h, fp, N, D)
    return SynthesisPrototype(fp, SynthesisDesign.MIN_NORM)


def default_prior_decay(t60=DEFAULT_PRIOR_T60, fs=DEFAULT_PRIOR_FS):
    """Amplitude decay rate per sample, 3 ln(10)/(t60 fs)."""
    return 3.0 * np.log(10.0) / (t60 * fs)


def _prior(N, rir_len, decay):
    L = N // 2 if rir_len is None else int(rir_len)
    kappa = default_prior_decay() if decay is None else float(decay)
    j = np.arange(N)
    return np.where(j < L, np.exp(-2.0 * kappa * j), 0.0)


def _toeplitz(h, N):
    H = np.zeros((2 * N - 1, N))
    for c in range(N):
        H[c : c + N, c] = h
    return H


def _distortion_quadratic(h, N, D, prior):
    """Quadratic form (Q, lin, const) of the expected single-tap modeling error."""
    r = np.correlate(h, h, mode="full")[N - 1 :]
    z = r / r[0]
    n = np.arange(2 * N - 1)
    j = (n + 1) % N
    tgt = (n >= N - 1).astype(float)
    H = _toeplitz(h, N)
    wn = prior[j] * z[j] ** 2 * N**2
    a = np.arange(N)
    mask = (a[:, None] - a[None, :]) % D == 0
    Q = ((H * wn[:, None]).T @ H) * mask / D
    lin = H.T @ (prior[j] * z[j] * N * tgt) / D
    const = float(np.sum(prior[j] * tgt))
    return Q, lin, const


def min_distortion_objective(f0, h0, N, D, rir_len=None, decay=None) -> float:
    """Expected distortion plus aliasing energy of the one-tap steady state.

    For a random impulse response with independent taps of variance
    ``exp(-2 decay j)`` on ``j < rir_len`` the converged one-tap subband filters
    give distortion ``t_hat`` and aliasing ``a_hat_m``; the value returned is
    ``E ||t_hat - w_ext||^2 + sum_m E ||a_hat_m||^2``.
    """
    h, f = _coeffs(h0), _coeffs(f0)
    N, D = _check_nd(N, D)
    prior = _prior(N, rir_len, decay)
    r = np.correlate(h, h, mode="full")[N - 1 :]
    z = r / r[0]
    k = compute_kernels(h, f, N, D)
    n = np.arange(2 * N - 1)
    j = (n + 1) % N
    tgt = (n >= N - 1).astype(float)
    dist = np.sum(prior[j] * (N * z[j] * k.g0 - tgt) ** 2)
    alias = np.sum(prior[j][None, :] * (N * z[j][None, :]) ** 2 * np.abs(k.psi) ** 2)
    return float(dist + alias)


def design_min_distortion_synthesis(h0, N, D, rir_len=None, decay=None) -> SynthesisPrototype:
    """PR synthesis window minimising the expected one-tap modeling error.

    The objective is :func:`min_distortion_objective`: the energy of the
    distortion error and all aliasing terms of the converged single-tap
    subband system, averaged over exponentially decaying random impulse
    responses of length ``rir_len`` (default N/2) and per-sample amplitude
    decay ``decay`` (default 3 ln10 / (0.07 s * 16 kHz)). The minimisation is
    done exactly over the affine PR set.
    """
    h = _coeffs(h0)
    N, D = _check_nd(N, D)
    if len(h) != N:
        raise LengthMismatch(f"h0 has length {len(h)}, expected {N}")
    _check_degenerate(h, N, D)
    fp, Z = _solve_constraints(h, N, D)
    Q, lin, _ = _distortion_quadratic(h, N, D, _prior(N, rir_len, decay))
    if Z.shape[1]:
        y = np.linalg.lstsq(Z.T @ Q @ Z, Z.T @ (lin - Q @ fp), rcond=1e-13)[0]
        f = fp + Z @ y
    else:
        f = fp
    _assert_reduced_form(h, f, N, D)
    return SynthesisPrototype(f, SynthesisDesign.MIN_DISTORTION)


def design_synthesis(h0, N, D, design="min-norm", **kw) -> SynthesisPrototype:
    design = SynthesisDesign(design) if not isinstance(design, SynthesisDesign) else design
    if design is SynthesisDesign.MIN_NORM:
        return design_min_norm_synthesis(h0, N, D)
    if design is SynthesisDesign.MIN_DISTORTION:
        return design_min_distortion_synthesis(h0, N, D, **kw)
    raise InvalidShape("custom synthesis windows are supplied directly")


# ----------------------------------------------------------------------------
# Transfer kernels and PR check
# ----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TransferKernels:
    """g0 (length 2N-1) and psi_m for m = 1..D-1 (row m-1)."""

    g0: np.ndarray
    psi: np.ndarray
    N: int
    D: int

    def psi_all(self) -> np.ndarray:
        """All D modulated kernels, row 0 being g0."""
        return np.vstack([self.g0[None, :].astype(complex), self.psi])


def _residue_convolutions(h, f, N, D):
    # B[n, r] = sum_i h(r + iD) f(n - r - iD)
    B = np.zeros((2 * N - 1, D))
    r = np.arange(D)
    s = np.arange(N)
    for i in range(N // D):
        p = r + i * D
        B[p[:, None] + s[None, :], r[:, None]] += h[p][:, None] * f[None, :]
    return B


def compute_kernels(h0, f0, N, D) -> TransferKernels:
    """g0(n) = (1/D) (h0 * f0)(n) and psi_m(n) = (1/D) sum_p h0(p) alpha_D^{pm} f0(n-p).

    Examples
    --------
    >>> compute_kernels([1, 1], [1, 1], 2, 2).g0
    array([0.5, 1. , 0.5])
    """
    h, f = _coeffs(h0), _coeffs(f0)
    N, D = int(N), int(D)
    if len(h) != N or len(f) != N:
        raise LengthMismatch(f"prototypes must have length N={N}, got {len(h)} and {len(f)}")
    if D < 1 or N % D:
        raise InvalidN(f"D={D} must divide N={N}")
    g0 = np.convolve(h, f) / D
    B = _residue_convolutions(h, f, N, D)
    # psi_m(n) = (1/D) sum_r B[n, r] alpha_D^{rm}
    psi = np.fft.ifft(B, axis=1).T[1:]
    return TransferKernels(g0, psi, N, D)


@dataclass(frozen=True)
class PrReport:
    tau: int
    max_distortion_dev: float
    max_alias: float
    tol: float = 1e-10

    @property
    def passed(self) -> bool:
        return self.max_distortion_dev < self.tol and self.max_alias < self.tol


def verify_pr(h0, f0, N, D, tol=1e-10) -> PrReport:
    """Distortion and alias coefficients of the bank without subband processing."""
    h, f = _coeffs(h0), _coeffs(f0)
    k = compute_kernels(h, f, N, D)
    n = np.arange(2 * N - 1)
    img = (N * np.fft.ifft(np.ones(N)))[(n + 1) % N]
    t = k.g0 * img
    target = (n == N - 1).astype(float)
    dev = float(np.max(np.abs(t - target)))
    alias = float(np.max(np.abs(k.psi * img[None, :]))) if D > 1 else 0.0
    return PrReport(N - 1, dev, alias, tol)


def first_image_energy(h0, f0, N, D) -> float:
    """sum_{n < N-1} g0(n)^2."""
    g0 = np.convolve(_coeffs(h0), _coeffs(f0)) / D
    return float(np.sum(g0[: N - 1] ** 2))

