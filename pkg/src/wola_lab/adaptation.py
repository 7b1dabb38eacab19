"""Exponentially weighted RLS per subband.

The estimate is the plain inner product ``coeffs . x`` (same orientation as
the subband filtering path), so the recursion minimises
sum_i lambda^(q-i) |d_i - x_i^T c|^2:

    Px = P conj(x),  den = lambda + x^T Px,  e = d - c . x
    c <- c + Px e / den
    P <- (P - Px Px^H / den) / lambda
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import InvalidParam, LengthMismatch, NonFinite


@dataclass
class RlsState:
    """Coefficients, inverse correlation matrix and forgetting factor."""

    coeffs: np.ndarray
    P: np.ndarray
    lam: float
    updates: int = 0

    @property
    def T(self) -> int:
        return len(self.coeffs)

    def is_positive_definite(self) -> bool:
        return bool(np.min(np.linalg.eigvalsh(self.P)) > 0)


def _check_params(T, lam, p0):
    if int(T) < 1:
        raise InvalidParam("T must be >= 1")
    if not 0 < lam <= 1:
        raise InvalidParam(f"forgetting factor must lie in (0, 1], got {lam}")
    if not p0 > 0:
        raise InvalidParam("p0 must be positive")


def rls_init(T, lam=0.999, p0=100.0) -> RlsState:
    """Zero coefficients and P = p0 I."""
    _check_params(T, lam, p0)
    T = int(T)
    return RlsState(np.zeros(T, complex), p0 * np.eye(T, dtype=complex), float(lam))


def rls_update(state: RlsState, regressor, desired) -> complex:
    """One RLS step in place; returns the a-priori error."""
    x = np.asarray(regressor, complex).ravel()
    if len(x) != state.T:
        raise LengthMismatch(f"regressor has {len(x)} taps, state has {state.T}")
    if not (np.all(np.isfinite(x)) and np.isfinite(desired)):
        raise NonFinite("regressor or desired value is not finite")
    P, lam = state.P, state.lam
    Px = P @ np.conj(x)
    den = lam + np.real(x @ Px)
    e = complex(desired - state.coeffs @ x)
    state.coeffs = state.coeffs + Px * (e / den)
    P = (P - np.outer(Px, np.conj(Px)) / den) / lam
    state.P = 0.5 * (P + P.conj().T)
    state.updates += 1
    return e


@numba.njit(cache=True, fastmath=True)
def _bank_step(P, c, X, d, lam, err, est):
    K, T = X.shape
    Px = np.empty(T, np.complex128)
    il = 1.0 / lam
    for k in range(K):
        y = 0j
        for i in range(T):
            y += c[k, i] * X[k, i]
        est[k] = y
        e = d[k] - y
        err[k] = e
        den = lam
        for i in range(T):
            s = 0j
            for j in range(T):
                s += P[k, i, j] * X[k, j].conjugate()
            Px[i] = s
        for i in range(T):
            den += (X[k, i] * Px[i]).real
        g = e / den
        for i in range(T):
            c[k, i] += Px[i] * g
        idn = 1.0 / den
        # Hermitian rank-one downdate: fill the upper triangle, mirror it
        for i in range(T):
            a = Px[i] * idn
            P[k, i, i] = ((P[k, i, i] - a * Px[i].conjugate()).real * il) + 0j
            for j in range(i + 1, T):
                v = (P[k, i, j] - a * Px[j].conjugate()) * il
                P[k, i, j] = v
                P[k, j, i] = v.conjugate()


@dataclass
class RlsBank:
    """Independent RLS filters for K subbands updated together.

    Symmetry of every P is enforced at each step by computing the upper
    triangle of the update and mirroring it.
    """

    coeffs: np.ndarray
    P: np.ndarray
    lam: float
    updates: int = 0
    _err: np.ndarray = field(default=None, repr=False)
    _est: np.ndarray = field(default=None, repr=False)

    @classmethod
    def create(cls, K, T, lam=0.999, p0=100.0) -> "RlsBank":
        _check_params(T, lam, p0)
        K, T = int(K), int(T)
        P = np.zeros((K, T, T), complex)
        P[:, np.arange(T), np.arange(T)] = p0
        return cls(np.zeros((K, T), complex), P, float(lam))

    @property
    def K(self) -> int:
        return self.coeffs.shape[0]

    @property
    def T(self) -> int:
        return self.coeffs.shape[1]

    def update(self, X, d):
        """Update all subbands; returns (a-priori estimate, a-priori error)."""
        X = np.ascontiguousarray(X, dtype=np.complex128)
        d = np.ascontiguousarray(d, dtype=np.complex128)
        if X.shape != self.coeffs.shape or d.shape != (self.K,):
            raise LengthMismatch(f"expected regressors {self.coeffs.shape} and {self.K} targets")
        if self._err is None:
            self._err = np.empty(self.K, complex)
            self._est = np.empty(self.K, complex)
        _bank_step(self.P, self.coeffs, X, d, self.lam, self._err, self._est)
        self.updates += 1
        return self._est.copy(), self._err.copy()

    def state(self, k) -> RlsState:
        return RlsState(self.coeffs[k].copy(), self.P[k].copy(), self.lam, self.updates)
