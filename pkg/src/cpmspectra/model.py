"""
CPM format description and ideal waveform synthesis.

A format is the tuple (M, phase response, modulation-index sequence,
symbol probabilities).  Symbols live in ``{-(M-1), ..., -1, +1, ..., M-1}``
and are indexed ``0..M-1`` in increasing order, so index ``k`` carries the
value ``2k - (M-1)``.

Modulation indices are kept as integers ``r_n`` over the least common
denominator ``p``.  The sequence is periodic with period ``N_h`` and is
extended to negative time modulo ``N_h``.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, lcm, log, pi, sqrt

import numpy as np
from scipy.special import ndtr

from .errors import InvalidFormatError, InvalidSymbolError


def alphabet(m):
    """Symbol values of the M-ary alphabet in index order."""
    return np.arange(-(m - 1), m, 2)


@dataclass(frozen=True)
class ModulationIndexSet:
    """Rational modulation indices ``h_n = r_n / p`` with period ``N_h``."""

    numerators: tuple
    denominator: int

    def __post_init__(self):
        if not self.numerators:
            raise InvalidFormatError("modulation index list is empty")
        if self.denominator < 1:
            raise InvalidFormatError("common denominator must be positive")

    @property
    def period(self):
        return len(self.numerators)

    @property
    def p(self):
        return self.denominator

    def r(self, n):
        return self.numerators[n % self.period]

    def h(self, n):
        return Fraction(self.r(n), self.denominator)

    def rotated(self, offset):
        """Index set seen from symbol ``offset`` onwards."""
        k = offset % self.period
        return ModulationIndexSet(self.numerators[k:] + self.numerators[:k],
                                  self.denominator)

    def as_strings(self):
        return [f"{Fraction(r, self.denominator)}" for r in self.numerators]


def _to_fraction(h):
    if isinstance(h, Fraction):
        return h
    if isinstance(h, str):
        try:
            return Fraction(h.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidFormatError(f"cannot parse modulation index {h!r}") from exc
    if isinstance(h, int):
        return Fraction(h)
    if isinstance(h, tuple) and len(h) == 2:
        if h[1] <= 0:
            raise InvalidFormatError("denominators must be positive")
        return Fraction(h[0], h[1])
    raise InvalidFormatError(f"modulation index {h!r} is not rational")


def normalize_indices(hs):
    """
    Bring a list of rational indices to a common denominator.

    Accepts ``Fraction``, ``int``, ``"num/den"`` strings or ``(num, den)``
    tuples.  The denominator is the least common one of the reduced
    fractions, so ``gcd(r_0, ..., r_{N-1}, p) == 1``.

    >>> normalize_indices(["1/4", "5/16", "1/2", "5/8"])
    ModulationIndexSet(numerators=(4, 5, 8, 10), denominator=16)
    """
    hs = list(hs)
    if not hs:
        raise InvalidFormatError("modulation index list is empty")
    fr = [_to_fraction(h) for h in hs]
    if any(f <= 0 for f in fr):
        raise InvalidFormatError("modulation indices must be positive")
    p = lcm(*(f.denominator for f in fr))
    r = tuple(int(f * p) for f in fr)
    assert gcd(p, *r) == 1
    return ModulationIndexSet(r, p)


GMSK_K = pi / (2.0 * sqrt(log(2.0)))


def _gauss_ramp(a):
    # integral of the Gaussian CDF: a*Phi(a) + pdf(a)
    return a * ndtr(a) + np.exp(-0.5 * a * a) / sqrt(2.0 * pi)


@dataclass(frozen=True)
class PhaseResponse:
    """
    Phase response ``phi(t)`` with ``phi = 0`` for ``t <= 0`` and ``1/2`` for
    ``t >= L`` (time in units of the symbol period T).

    kind
        ``"cpfsk"`` (LREC), ``"rc"`` (LRC) or ``"gmsk"``.
    memory
        Pulse length L in symbols.
    bt
        Gaussian bandwidth-time product, used by ``"gmsk"`` only.  The
        default 0.25 gives the shaping constant ``K = pi / (2 sqrt(ln 2))``.
    """

    kind: str
    memory: int = 1
    bt: float = 0.25
    _gmsk_norm: tuple = field(default=(0.0, 1.0), init=False, repr=False,
                              compare=False)

    def __post_init__(self):
        kind = self.kind.lower()
        kind = {"lrec": "cpfsk", "rec": "cpfsk", "lrc": "rc"}.get(kind, kind)
        if kind not in ("cpfsk", "rc", "gmsk"):
            raise InvalidFormatError(f"unknown phase response kind {self.kind!r}")
        if self.memory < 1:
            raise InvalidFormatError("phase response memory must be >= 1")
        object.__setattr__(self, "kind", kind)
        if kind == "gmsk":
            lo = float(self._gmsk_raw(np.array(0.0)))
            hi = float(self._gmsk_raw(np.array(float(self.memory))))
            object.__setattr__(self, "_gmsk_norm", (lo, hi - lo))

    @property
    def shaping_constant(self):
        return 2.0 * pi * self.bt / sqrt(log(2.0))

    def _gmsk_raw(self, t):
        k = self.shaping_constant
        c = self.memory / 2.0
        return (_gauss_ramp(k * (t - c + 0.5)) - _gauss_ramp(k * (t - c - 0.5))) / (2 * k)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        L = self.memory
        x = np.clip(t, 0.0, float(L))
        if self.kind == "cpfsk":
            val = x / (2 * L)
        elif self.kind == "rc":
            val = x / (2 * L) - np.sin(2 * pi * x / L) / (4 * pi)
        else:
            lo, span = self._gmsk_norm
            val = 0.5 * (self._gmsk_raw(x) - lo) / span
        val = np.where(t <= 0, 0.0, np.where(t >= L, 0.5, val))
        return val if val.ndim else float(val)

    def frequency_pulse(self, t):
        """Frequency pulse ``g = dphi/dt`` on ``(0, L)``, zero outside."""
        t = np.asarray(t, dtype=float)
        L = self.memory
        inside = (t > 0) & (t < L)
        if self.kind == "cpfsk":
            g = np.full_like(t, 1.0 / (2 * L))
        elif self.kind == "rc":
            g = (1 - np.cos(2 * pi * t / L)) / (2 * L)
        else:
            k = self.shaping_constant
            c = L / 2.0
            # derivative of 0.5 * (raw - lo) / span
            g = (ndtr(k * (t - c + 0.5)) - ndtr(k * (t - c - 0.5))) / 4.0
            g = g / self._gmsk_norm[1]
        return np.where(inside, g, 0.0)


@dataclass(frozen=True, eq=False)
class CpmFormat:
    """
    Complete modulation description.

    ``q`` defaults to equiprobable symbols.  ``T`` is the symbol period;
    all spectra are reported against ``f*T``.
    """

    M: int
    phase: PhaseResponse
    indices: ModulationIndexSet
    q: np.ndarray = None
    T: float = 1.0

    def __post_init__(self):
        if self.M < 2 or self.M % 2:
            raise InvalidFormatError(f"alphabet size must be even, got {self.M}")
        q = (np.full(self.M, 1.0 / self.M) if self.q is None
             else np.asarray(self.q, dtype=float).copy())
        if q.shape != (self.M,):
            raise InvalidFormatError(f"q must have {self.M} entries")
        if np.any(q < 0) or abs(q.sum() - 1.0) > 1e-12:
            raise InvalidFormatError("symbol probabilities must be >= 0 and sum to 1")
        q.setflags(write=False)
        object.__setattr__(self, "q", q)
        if self.T <= 0:
            raise InvalidFormatError("symbol period must be positive")

    @property
    def L(self):
        return self.phase.memory

    @property
    def p(self):
        return self.indices.denominator

    @property
    def alphabet(self):
        return alphabet(self.M)

    def symbol_index(self, a):
        a = np.asarray(a)
        idx = (a + self.M - 1) // 2
        bad = (np.abs(a) > self.M - 1) | ((a + self.M - 1) % 2 != 0)
        if np.any(bad):
            raise InvalidSymbolError(
                f"symbols {np.unique(a[bad]).tolist()} not in the {self.M}-ary alphabet")
        return idx

    def rotated(self, offset):
        return CpmFormat(self.M, self.phase, self.indices.rotated(offset),
                         self.q, self.T)

    def with_indices(self, indices):
        return CpmFormat(self.M, self.phase, indices, self.q, self.T)

    def describe(self):
        hs = ",".join(self.indices.as_strings())
        return f"M={self.M} L={self.L} {self.phase.kind} h={{{hs}}}"

    def __repr__(self):
        return f"CpmFormat({self.describe()}, q={self.q.tolist()})"


@dataclass(frozen=True, eq=False)
class WaveformSegment:
    samples: np.ndarray
    sample_rate: int
    start_index: int = 0


def _phase_at(fmt, symbols, start_index, n, tau):
    """Phase alpha at interval ``n`` (relative), offset ``tau`` in [0, 1]."""
    a = np.asarray(symbols, dtype=np.int64)
    p, L, nh = fmt.p, fmt.L, fmt.indices.period
    r_all = np.asarray(fmt.indices.numerators, dtype=np.int64)
    r = r_all[(start_index + np.arange(a.size)) % nh]
    inc = r * a
    cum = np.concatenate([[0], np.cumsum(inc)])
    n = np.asarray(n)
    done = cum[np.clip(n - L + 1, 0, a.size)] % (2 * p)
    alpha = pi * done / p
    for i in range(L):
        m = n - i
        ok = (m >= 0) & (m < a.size)
        mm = np.where(ok, m, 0)
        alpha = alpha + np.where(ok, 2 * pi * inc[mm] / p * fmt.phase(tau + i), 0.0)
    return alpha


def phase(fmt, symbols, t, start_index=0, left=False):
    """
    Phase ``alpha(t)`` of the CPM signal driven by ``symbols`` (t in units of T).

    No symbols precede index 0.  With ``left=True`` integer times are taken
    as the limit from the left, which is how phase continuity is checked.
    """
    t = np.asarray(t, dtype=float)
    n = np.floor(t).astype(np.int64)
    if left:
        n = np.ceil(t).astype(np.int64) - 1
    return _phase_at(fmt, symbols, start_index, n, t - n)


def synthesize_waveform(fmt, symbols, sample_rate, start_index=0):
    """
    Samples of ``exp(j alpha(t))`` at ``sample_rate`` samples per symbol.

    The accumulated phase of completed pulses is tracked as an integer
    modulo ``2p``, so long records do not drift.
    """
    a = np.asarray(symbols)
    if a.size == 0:
        raise InvalidFormatError("symbol list is empty")
    if sample_rate < 8:
        raise InvalidFormatError("sample_rate must be >= 8 samples per symbol")
    fmt.symbol_index(a)
    tau = np.arange(sample_rate) / sample_rate
    n = np.arange(a.size)[:, None]
    alpha = _phase_at(fmt, a, start_index, n, tau[None, :])
    return WaveformSegment(np.exp(1j * alpha).ravel(), sample_rate, start_index)
