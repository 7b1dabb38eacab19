"""Per-frame FLOP model of the subband filtering structures.

Conventions: a radix-2 N-point FFT costs 2 N log2 N real multiplications and
3 N log2 N real additions; a complex multiplication costs 4 real
multiplications and 2 real additions; a complex addition costs 2 real
additions. Only the transform stage and the subband filtering stage are
counted, over the N/2 unique subbands of a real-valued signal. Synthesis
windowing and overlap-add are excluded.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import InvalidConfig


class Method(enum.Enum):
    GWOLA = "gwola"
    PTWOLA = "ptwola"
    CONVENTIONAL = "conventional"


@dataclass(frozen=True)
class ComplexityReport:
    method: Method
    N: int
    T: int
    R: int
    real_mults: int
    real_adds: int


def _log2(N):
    N = int(N)
    if N < 2 or N & (N - 1):
        raise InvalidConfig(f"N must be a power of two, got {N}")
    return N.bit_length() - 1


def fft_cost(N):
    """(mults, adds) of one radix-2 N-point FFT."""
    lg = _log2(N)
    return 2 * N * lg, 3 * N * lg


def table1(method, N, T, R=0) -> ComplexityReport:
    """Closed-form real multiplications and additions per frame.

    Examples
    --------
    >>> table1("gwola", 1024, 1).real_mults
    23552
    >>> table1("ptwola", 1024, 1, 0).real_mults
    22528
    """
    method = Method(method) if not isinstance(method, Method) else method
    N, T, R = int(N), int(T), int(R)
    lg = _log2(N)
    if T < 1:
        raise InvalidConfig("T must be >= 1")
    if R < 0:
        raise InvalidConfig("R must be >= 0")
    if method is Method.GWOLA:
        mults = T * N * (2 * lg + 3)
        adds = T * N * (3 * lg + 2) - N
        R = 0
    elif method is Method.PTWOLA:
        if T < 2 * R + 1:
            raise InvalidConfig(f"PT-WOLA needs T >= 2R+1, got T={T}, R={R}")
        mults = 2 * N * lg + N * (2 * R + T + 1)
        adds = 3 * N * lg + (T - 2 * R - 1) + N * (2 * R + T)
    else:
        # one windowed transform per frame, T-tap filtering over past frames
        mults = N * (2 * lg + 1) + 2 * N * T
        adds = 3 * N * lg + N * (2 * T - 1)
        R = 0
    return ComplexityReport(method, N, T, R, mults, adds)


class FlopCounter:
    """Accumulator of real multiplications and additions.

    Engines call the ``count_*`` methods as they execute; ``per_frame`` divides
    by the number of frames processed.
    """

    def __init__(self):
        self.reset()

    def reset(self):
        self.mults = 0
        self.adds = 0
        self.frames = 0

    def count_fft(self, N, windowed=False):
        m, a = fft_cost(N)
        self.mults += m + (N if windowed else 0)
        self.adds += a

    def count_real_adds(self, n):
        self.adds += int(n)

    def count_dot(self, n_subbands, complex_terms, real_terms=0):
        """Inner product per subband of complex coefficients with a regressor.

        ``complex_terms`` regressor entries are complex, ``real_terms`` are
        real (2 real mults each, no adds).
        """
        n = complex_terms + real_terms
        self.mults += n_subbands * (4 * complex_terms + 2 * real_terms)
        self.adds += n_subbands * (2 * complex_terms + 2 * (n - 1))

    def end_frame(self):
        self.frames += 1

    def per_frame(self):
        if not self.frames:
            return 0, 0
        return self.mults // self.frames, self.adds // self.frames
