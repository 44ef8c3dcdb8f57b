from fractions import Fraction
from math import gcd, log, pi, sqrt

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from scipy.stats import norm

from cpmspectra.errors import InvalidFormatError, InvalidSymbolError
from cpmspectra.model import (
    GMSK_K,
    CpmFormat,
    PhaseResponse,
    alphabet,
    normalize_indices,
    phase,
    synthesize_waveform,
)

from conftest import MULTIH, make_format


def wrap(a):
    return np.angle(np.exp(1j * np.asarray(a)))


def brute_phase(fmt, symbols, t):
    # direct sum over every pulse, indices taken from the periodic list
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    for n, a in enumerate(symbols):
        h = float(fmt.indices.h(n))
        out += 2 * pi * h * a * fmt.phase(t - n)
    return out


class TestIndices:
    def test_example_set(self):
        idx = normalize_indices(["1/4", "5/16", "1/2", "5/8"])
        assert idx.p == 16 and idx.numerators == (4, 5, 8, 10)

    def test_single(self):
        idx = normalize_indices([Fraction(1, 2)])
        assert idx.p == 2 and idx.numerators == (1,)

    def test_reduction(self):
        idx = normalize_indices(["2/4", "3/4"])
        assert idx.p == 4 and idx.numerators == (2, 3)

    def test_input_kinds(self):
        idx = normalize_indices([(1, 3), 1, Fraction(2, 3), " 1/6 "])
        assert idx.p == 6 and idx.numerators == (2, 6, 4, 1)

    @pytest.mark.parametrize("bad", [[], ["x"], ["1/0"], [(1, 0)], ["-1/2"], [0.5]])
    def test_rejects(self, bad):
        with pytest.raises(InvalidFormatError):
            normalize_indices(bad)

    @given(st.lists(st.tuples(st.integers(1, 40), st.integers(1, 40)), min_size=1, max_size=6))
    def test_normalization_properties(self, pairs):
        idx = normalize_indices(pairs)
        assert gcd(idx.p, *idx.numerators) == 1
        for n, (a, b) in enumerate(pairs):
            assert idx.h(n) == Fraction(a, b)
        assert idx.h(len(pairs)) == idx.h(0)
        assert idx.r(-1) == idx.numerators[-1]

    def test_rotation(self):
        assert MULTIH.indices.rotated(1).numerators == (5, 8, 10, 4)
        assert MULTIH.indices.rotated(-1).numerators == (10, 4, 5, 8)


class TestPhaseResponse:
    def test_cpfsk_half_symbol(self):
        assert PhaseResponse("cpfsk", 1)(0.5) == 0.25

    def test_rc_saturation(self):
        assert PhaseResponse("rc", 2)(2.0) == 0.5

    @pytest.mark.parametrize("kind", ["cpfsk", "rc", "gmsk", "lrec", "lrc"])
    @pytest.mark.parametrize("L", [1, 2, 3, 4])
    def test_boundaries_and_monotone(self, kind, L):
        ph = PhaseResponse(kind, L)
        assert abs(ph(0.0)) <= 1e-12 and abs(ph(float(L)) - 0.5) <= 1e-12
        assert ph(-3.0) == 0.0 and ph(L + 7.0) == 0.5
        t = np.linspace(-1, L + 1, 4001)
        assert np.all(np.diff(ph(t)) >= -1e-15)

    def test_gmsk_against_frequency_pulse_integral(self):
        # untruncated Gaussian-filtered rectangle centred at L/2, integrated by quad
        L = 4
        k = pi / (2 * sqrt(log(2)))
        c = L / 2

        def g(t):
            return norm.cdf(k * (t - c + 0.5)) - norm.cdf(k * (t - c - 0.5))

        total = quad(g, 0, L, epsabs=1e-13, epsrel=1e-13)[0]
        ph = PhaseResponse("gmsk", L)
        for t in (0.5, 1.0, 2.0, 2.7, 3.5):
            expect = 0.5 * quad(g, 0, t, epsabs=1e-13, epsrel=1e-13)[0] / total
            assert abs(ph(t) - expect) <= 1e-12
        assert abs(ph(2.0) - 0.25) <= 1e-12
        assert ph.shaping_constant == pytest.approx(GMSK_K, rel=1e-15)

    @pytest.mark.parametrize("kind", ["cpfsk", "rc", "gmsk"])
    def test_frequency_pulse_integrates_to_half(self, kind):
        ph = PhaseResponse(kind, 3)
        val = quad(ph.frequency_pulse, 0, 3, points=[1, 2], epsabs=1e-13)[0]
        assert abs(val - 0.5) <= 1e-10

    def test_unknown_kind(self):
        with pytest.raises(InvalidFormatError):
            PhaseResponse("tfm", 1)
        with pytest.raises(InvalidFormatError):
            PhaseResponse("rc", 0)


class TestFormat:
    def test_alphabet(self):
        assert alphabet(4).tolist() == [-3, -1, 1, 3]

    def test_defaults(self):
        fmt = MULTIH
        assert fmt.p == 16 and fmt.L == 1 and np.array_equal(fmt.q, [0.25] * 4)
        with pytest.raises(ValueError):
            fmt.q[0] = 1.0

    @pytest.mark.parametrize("M,q", [(3, None), (2, [0.5, 0.6]), (2, [1.0]), (2, [-0.5, 1.5])])
    def test_invalid(self, M, q):
        with pytest.raises(InvalidFormatError):
            make_format(M, "cpfsk", 1, ["1/2"], q)

    def test_symbol_index(self):
        assert MULTIH.symbol_index(np.array([-3, 1, 3])).tolist() == [0, 2, 3]
        for bad in (0, 2, 5):
            with pytest.raises(InvalidSymbolError):
                MULTIH.symbol_index(bad)


class TestWaveform:
    def test_single_symbol_ramp(self):
        fmt = make_format(2, "cpfsk", 1, ["1/2"])
        t = np.linspace(0, 1, 11)
        assert np.allclose(phase(fmt, [1], t), pi / 2 * t, atol=1e-15)

    def test_multih_end_phase(self):
        end = phase(MULTIH, [1, 1, 1, 1], 4.0, left=True)
        assert abs(wrap(end - pi * (4 + 5 + 8 + 10) / 16)) <= 1e-12

    @pytest.mark.parametrize("kind,L", [("cpfsk", 1), ("rc", 3), ("gmsk", 4)])
    def test_continuity_and_brute_force(self, kind, L, rng):
        fmt = make_format(4, kind, L, ["3/8", "1/2", "5/8"])
        sym = rng.choice(fmt.alphabet, 60)
        n = np.arange(1, 60, dtype=float)
        jump = phase(fmt, sym, n, left=True) - phase(fmt, sym, n)
        assert np.abs(wrap(jump)).max() <= 1e-9
        t = rng.uniform(0, 60, 300)
        assert np.abs(wrap(phase(fmt, sym, t) - brute_phase(fmt, sym, t))).max() <= 1e-9

    def test_constant_envelope(self, rng):
        fmt = make_format(4, "rc", 2, ["4/16", "5/16"])
        seg = synthesize_waveform(fmt, rng.choice(fmt.alphabet, 5000), 16)
        assert np.abs(np.abs(seg.samples) - 1).max() <= 1e-12
        assert seg.samples.size == 5000 * 16

    def test_single_h_reduces_to_plain_sum(self, rng):
        fmt = make_format(2, "rc", 2, ["1/2"])
        sym = rng.choice(fmt.alphabet, 40)
        seg = synthesize_waveform(fmt, sym, 8)
        t = np.arange(40 * 8) / 8
        direct = np.exp(1j * brute_phase(fmt, sym, t))
        assert np.abs(seg.samples - direct).max() <= 1e-9

    def test_start_index_selects_indices(self, rng):
        sym = rng.choice(MULTIH.alphabet, 20)
        a = synthesize_waveform(MULTIH, sym, 8, start_index=1).samples
        b = synthesize_waveform(MULTIH.rotated(1), sym, 8).samples
        assert np.array_equal(a, b)

    def test_errors(self):
        with pytest.raises(InvalidSymbolError):
            synthesize_waveform(MULTIH, [1, 2], 8)
        with pytest.raises(InvalidFormatError):
            synthesize_waveform(MULTIH, [], 8)
        with pytest.raises(InvalidFormatError):
            synthesize_waveform(MULTIH, [1], 4)
