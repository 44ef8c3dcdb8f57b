"""
Monte-Carlo oracles: Welch PSD estimates of synthesized CPM waveforms and
empirical statistics of the modulator state path.

Random symbols come from numpy's Philox counter-based generator, so a
stream is fully determined by ``(seed, algorithm)`` and both are recorded
in every result.
"""

import json
from dataclasses import asdict, dataclass, field
from math import lcm

import numpy as np
from scipy.signal import welch

from .chain import cyclo_period
from .errors import ConfigError
from .machine import build_machine
from .model import synthesize_waveform

RNG_ALGORITHM = "Philox4x64-10"

# variance inflation of 50%-overlapped Hann segments: 1 + 2 * rho(0.5)**2
_HANN_OVERLAP_FACTOR = 1.0 + 2.0 * 0.1667 ** 2
CHUNK_SAMPLES = 2 ** 22


def make_rng(seed):
    return np.random.Generator(np.random.Philox(seed))


def draw_symbols(fmt, count, seed):
    """i.i.d. symbols with probabilities ``fmt.q``."""
    return make_rng(seed).choice(fmt.alphabet, size=count, p=fmt.q)


@dataclass(frozen=True)
class WelchConfig:
    """
    Welch estimator settings.

    ``segment_symbols`` defaults to ``256 * N_c`` and must be a multiple of
    ``N_c`` so every segment starts at the same cyclostationary phase.
    """

    symbols: int = 10 ** 6
    samples_per_symbol: int = 64
    segment_symbols: int = None
    overlap: float = 0.5
    window: str = "hann"
    seed: int = 0

    def resolved_segment(self, n_c):
        seg = 256 * n_c if self.segment_symbols is None else self.segment_symbols
        if seg <= 0 or seg % n_c:
            raise ConfigError(f"segment of {seg} symbols is not a multiple of N_c={n_c}")
        if seg > self.symbols:
            raise ConfigError(f"segment of {seg} symbols exceeds the record of {self.symbols}")
        return seg


@dataclass(eq=False)
class EstimatedSpectrum:
    """Welch estimate on ``grid`` (units of ``f*T``) with a 95% band."""

    grid: np.ndarray
    psd: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    n_segments: int
    meta: dict = field(default_factory=dict)

    @property
    def psd_db(self):
        return 10 * np.log10(np.maximum(self.psd, 1e-300) / self.psd.max())

    def total_power(self):
        return float(np.trapezoid(self.psd, self.grid))

    def to_csv(self, path, absolute=False):
        db = (10 * np.log10(np.maximum(self.psd, 1e-300)) if absolute
              else self.psd_db)
        with open(path, "w") as fh:
            fh.write("fT,psd_linear,psd_db\n")
            for f, v, d in zip(self.grid, self.psd, db):
                fh.write(f"{f:.17g},{v:.17g},{d:.17g}\n")

    def write_sidecar(self, path):
        with open(path, "w") as fh:
            json.dump(self.meta, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _chunked_welch(fmt, symbols, sps, nperseg, noverlap, window, segments_per_chunk):
    # Welch over segment-aligned chunks; the weighted mean equals a single
    # call on the full record while only one chunk of samples is resident.
    L = fmt.L
    step = nperseg - noverlap
    total = symbols.size * sps
    n_seg = (total - noverlap) // step
    acc, freqs = None, None
    power, count = 0.0, 0
    for first in range(0, n_seg, segments_per_chunk):
        k = min(segments_per_chunk, n_seg - first)
        lo = first * step
        hi = lo + (k - 1) * step + nperseg
        s_lo, s_hi = lo // sps, -(-hi // sps)
        ctx = min(L - 1, s_lo)
        seg_syms = symbols[s_lo - ctx:s_hi]
        x = synthesize_waveform(fmt, seg_syms, sps, start_index=s_lo - ctx).samples
        off = lo - (s_lo - ctx) * sps
        x = x[off:off + hi - lo]
        freqs, pxx = welch(x, fs=sps, window=window, nperseg=nperseg, noverlap=noverlap,
                           detrend=False, return_onesided=False, scaling="density")
        acc = pxx * k if acc is None else acc + pxx * k
        power += float(np.sum(np.abs(x) ** 2))
        count += x.size
    return freqs, acc / n_seg, n_seg, power / count


def simulate_psd(fmt, cfg=None):
    """
    Estimate the average PSD of ``fmt`` from one long synthesized record.

    The estimate is two-sided, density-scaled and fftshifted, so it
    integrates to the average signal power over ``f*T``.  Sampling is
    synchronous with the symbols, which folds cyclic cross-spectra into the
    band with a bias falling like ``1/samples_per_symbol**2``; the default
    64 samples per symbol keep it near 0.03 dB over ``|fT| <= 3``.
    """
    cfg = WelchConfig() if cfg is None else cfg
    if cfg.symbols < 10 ** 4:
        raise ConfigError("simulation needs at least 1e4 symbols")
    if not 0 <= cfg.overlap < 1:
        raise ConfigError("overlap must be in [0, 1)")
    n_c = cyclo_period(fmt.indices)
    seg = cfg.resolved_segment(n_c)
    sps = cfg.samples_per_symbol
    if sps < 8:
        raise ConfigError("samples_per_symbol must be >= 8")
    symbols = draw_symbols(fmt, cfg.symbols, cfg.seed)
    nperseg = seg * sps
    noverlap = int(round(cfg.overlap * nperseg))
    per_chunk = max(1, CHUNK_SAMPLES // nperseg)
    f, pxx, n_seg, power = _chunked_welch(fmt, symbols, sps, nperseg, noverlap,
                                          cfg.window, per_chunk)
    f, pxx = np.fft.fftshift(f), np.fft.fftshift(pxx)
    k_eff = n_seg / (_HANN_OVERLAP_FACTOR if cfg.overlap > 0 else 1.0)
    half = 1.96 / np.sqrt(k_eff)
    meta = {
        "format": fmt.describe(),
        "q": fmt.q.tolist(),
        "seed": cfg.seed,
        "rng": RNG_ALGORITHM,
        "config": asdict(cfg),
        "estimator": {"method": "welch", "window": cfg.window, "nperseg": nperseg,
                      "noverlap": noverlap, "segments": n_seg, "N_c": n_c,
                      "scaling": "density", "sides": "two"},
        "time_power": power,
    }
    return EstimatedSpectrum(f, pxx, pxx * (1 - half), pxx * (1 + half), n_seg, meta)


@dataclass(frozen=True, eq=False)
class ChainStats:
    """Empirical behaviour of a simulated state path."""

    states: np.ndarray              # flat PTI state per time step
    visit_freq: np.ndarray          # over all steps, length I
    block_freq: np.ndarray          # at block boundaries, per class state, length I0
    block_parity: np.ndarray        # parity of z at block boundaries
    tpms: np.ndarray                # empirical pi_n, shape (N_h, I, I)
    n_c: int

    def tv_distance(self, target, which="block"):
        freq = self.block_freq if which == "block" else self.visit_freq
        return 0.5 * float(np.abs(freq - np.asarray(target).real).sum())


def simulate_states(fmt, symbols):
    """Flat PTI state indices ``s_0 .. s_n`` driven by ``symbols`` from state index 0."""
    M, L, p = fmt.M, fmt.L, fmt.p
    nh = fmt.indices.period
    n_recent = M ** (L - 1)
    a = np.asarray(symbols, dtype=np.int64)
    n = a.size - (L - 1)
    r = np.asarray(fmt.indices.numerators, dtype=np.int64)
    # a[k] is the symbol at time k-L+1; the first L-1 entries form the start state
    inc = r[(np.arange(n) - L + 1) % nh] * a[:n]
    z = np.concatenate([[0], np.cumsum(inc)]) % (2 * p)
    idx = (a + M - 1) // 2
    u = np.zeros(n + 1, dtype=np.int64)
    for k in range(L - 1):
        u = u * M + idx[k:k + n + 1]
    return z * n_recent + u


def empirical_chain_stats(fmt, steps=10 ** 6, seed=0):
    """
    Simulate ``steps`` symbols of the modulator and gather state statistics.

    The start state has phase state 0 and recent symbols drawn from ``q``.
    """
    if steps < 10 ** 5:
        raise ConfigError("chain statistics need at least 1e5 steps")
    L, p = fmt.L, fmt.p
    nh = fmt.indices.period
    n_recent = fmt.M ** (L - 1)
    size = 2 * p * n_recent
    n_c = cyclo_period(fmt.indices)
    symbols = draw_symbols(fmt, steps + L - 1, seed)
    s = simulate_states(fmt, symbols)
    visit = np.bincount(s, minlength=size) / s.size

    blocks = s[::n_c]
    zb = blocks // n_recent
    cls = (zb // 2) * n_recent + blocks % n_recent
    block_freq = np.bincount(cls, minlength=size // 2) / cls.size

    tpms = np.zeros((nh, size, size))
    phase = np.arange(s.size - 1) % nh
    np.add.at(tpms, (phase, s[1:], s[:-1]), 1.0)
    cols = tpms.sum(axis=1, keepdims=True)
    tpms = np.divide(tpms, cols, out=np.zeros_like(tpms), where=cols > 0)
    return ChainStats(s, visit, block_freq, zb % 2, tpms, n_c)


def parity_trace_period(stats, indices):
    """
    Cyclostationarity period read off a simulated path.

    The parity of the phase state is periodic; combined with the index
    period this gives ``N_c = lcm(parity period, N_h)``.
    """
    n_recent = stats.visit_freq.size // (2 * indices.p)
    par = (stats.states // n_recent) % 2
    nh = indices.period
    for d in range(1, 2 * nh + 1):
        if np.array_equal(par[d:], par[:-d]):
            return lcm(d, nh)
    raise RuntimeError("parity trace is not periodic within 2 N_h")


def chain_tpm_error(fmt, stats):
    """Largest deviation of the empirical per-phase TPMs from ``pi_n`` (observed columns only)."""
    pti = build_machine(fmt)
    err = 0.0
    for n in range(fmt.indices.period):
        seen = stats.tpms[n].sum(axis=0) > 0
        err = max(err, float(np.abs(stats.tpms[n][:, seen] - pti.pi(n).real[:, seen]).max()))
    return err
