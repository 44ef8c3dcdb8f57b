import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cpmspectra.linalg import cyclic_shift_power
from cpmspectra.machine import (
    SmState,
    StateCodec,
    build_conditional_matrices,
    build_machine,
    build_tpm,
    format_tpm,
    invariant_apv,
    output_word,
    parity_order,
    state_update,
    symbolic_tpm,
)
from cpmspectra.model import ModulationIndexSet

from conftest import MULTIH, RC_L2, make_format

# Printed TPMs for L=1, p=4, M=2, rows/columns ordered 0 2 4 6 1 3 5 7
# ("a" = q_-1, "b" = q_1, "0" = empty)
TABLE_R3 = """
0 0 0 0 0 a b 0
0 0 0 0 0 0 a b
0 0 0 0 b 0 0 a
0 0 0 0 a b 0 0
0 0 a b 0 0 0 0
b 0 0 a 0 0 0 0
a b 0 0 0 0 0 0
0 a b 0 0 0 0 0
"""
TABLE_R2 = """
0 a 0 b 0 0 0 0
b 0 a 0 0 0 0 0
0 b 0 a 0 0 0 0
a 0 b 0 0 0 0 0
0 0 0 0 0 a 0 b
0 0 0 0 b 0 a 0
0 0 0 0 0 b 0 a
0 0 0 0 a 0 b 0
"""
ORDER = [0, 2, 4, 6, 1, 3, 5, 7]


def parse_table(text):
    names = {"a": "q_-1", "b": "q_1", "0": "0"}
    return [[names[c] for c in row.split()] for row in text.strip().splitlines()]


def l1_format(r, p=4, M=2, q=None):
    return make_format(M, "cpfsk", 1, ModulationIndexSet((r,), p), q)


def brute_successor(fmt, state, a, n):
    # direct arithmetic on the state definition, independent of the codec
    r = fmt.indices.r(n - fmt.L + 1)
    if fmt.L == 1:
        return (state[0] + r * a) % (2 * fmt.p), ()
    return (state[0] + r * state[1][0]) % (2 * fmt.p), state[1][1:] + (a,)


def all_states(fmt):
    for z in range(2 * fmt.p):
        for rec in itertools.product(fmt.alphabet.tolist(), repeat=fmt.L - 1):
            yield z, tuple(rec)


small_formats = st.builds(
    lambda M, L, rs, p: make_format(M, "rc", L, ModulationIndexSet(tuple(rs), p)),
    st.sampled_from([2, 4]),
    st.integers(1, 3),
    st.lists(st.integers(1, 7), min_size=1, max_size=3),
    st.sampled_from([1, 2, 3, 4, 8]),
).filter(lambda f: f.M ** (f.L - 1) * f.p <= 64)


class TestCodec:
    def test_roundtrip(self):
        codec = StateCodec(4, 3, 2)
        assert codec.size == 2 * 2 * 16
        for i in range(codec.size):
            assert codec.encode(codec.decode(i)) == i

    def test_phase_state_most_significant(self):
        codec = StateCodec(2, 3, 2)
        assert codec.encode(SmState(1, (-1, -1))) == 4
        assert codec.encode(SmState(0, (1, -1))) == 2


class TestUpdateAndOutput:
    def test_update_example(self):
        fmt = make_format(2, "rc", 2, ModulationIndexSet((5,), 8))
        assert state_update(fmt, SmState(3, (-1,)), 1, 0) == SmState(14, (1,))

    def test_update_full_response(self):
        fmt = l1_format(1, p=2)
        assert state_update(fmt, SmState(0), 1, 0) == SmState(1)

    def test_output_word_examples(self):
        fmt = make_format(4, "cpfsk", 1, ["1/2"])
        assert np.array_equal(output_word(fmt, SmState(0), 1), [0, 0, 1, 0])
        assert np.array_equal(output_word(fmt, SmState(1), -3), [1j, 0, 0, 0])

    def test_output_word_positions(self):
        fmt = make_format(2, "rc", 2, ["1/4"])
        w = {-1: np.array([1, 0]), 1: np.array([0, 1])}
        for z, (s1,) in all_states(fmt):
            for a in (-1, 1):
                y = output_word(fmt, SmState(z, (s1,)), a)
                expect = np.kron(w[s1], w[a]) * np.exp(2j * np.pi * z / 8)
                assert np.count_nonzero(y) == 1
                assert np.allclose(y, expect, atol=1e-15)


class TestConditional:
    def test_full_response_shift(self):
        e = build_conditional_matrices(l1_format(1, p=2))
        assert np.array_equal(e[0, 1], cyclic_shift_power(4, 1))

    @settings(max_examples=30, deadline=None)
    @given(small_formats)
    def test_matches_brute_force(self, fmt):
        e = build_conditional_matrices(fmt)
        pti = build_machine(fmt)
        codec = pti.codec
        assert np.all(np.count_nonzero(e, axis=2) == 1)
        for n in range(fmt.indices.period):
            for k, a in enumerate(fmt.alphabet.tolist()):
                for z, rec in all_states(fmt):
                    j = codec.encode(SmState(z, rec))
                    nz, nrec = brute_successor(fmt, (z, rec), a, n)
                    i = codec.encode(SmState(nz, nrec))
                    assert e[n, k, i, j] == 1
                    assert state_update(fmt, SmState(z, rec), a, n) == SmState(nz, nrec)

    def test_l2_p4_exhaustive(self):
        fmt = make_format(2, "rc", 2, ModulationIndexSet((3,), 4))
        e = build_conditional_matrices(fmt)
        codec = StateCodec(2, 2, 4)
        g = {}
        for z, rec in all_states(fmt):
            for a in (-1, 1):
                g[(codec.encode(SmState(z, rec)), a)] = codec.encode(
                    SmState(*brute_successor(fmt, (z, rec), a, 0)))
        for (j, a), i in g.items():
            col = e[0, (a + 1) // 2, :, j]
            assert col[i] == 1 and np.count_nonzero(col) == 1


class TestTpm:
    @pytest.mark.parametrize("r,table", [(3, TABLE_R3), (2, TABLE_R2)])
    def test_printed_tables(self, r, table):
        pti = build_machine(l1_format(r))
        labels = symbolic_tpm(pti, 0)
        got = [[labels[i][j] for j in ORDER] for i in ORDER]
        assert got == parse_table(table)
        assert parity_order(pti.codec).tolist() == ORDER

    @pytest.mark.parametrize("r,table", [(3, TABLE_R3), (2, TABLE_R2)])
    def test_printed_tables_numeric(self, r, table):
        q = np.array([0.375, 0.625])
        pti = build_machine(l1_format(r, q=q))
        val = {"q_-1": q[0], "q_1": q[1], "0": 0.0}
        expect = np.array([[val[c] for c in row] for row in parse_table(table)])
        assert np.array_equal(pti.pi(0)[np.ix_(ORDER, ORDER)], expect)

    @pytest.mark.parametrize("fmt", [MULTIH, RC_L2, make_format(4, "gmsk", 3, ["1/3", "2/5"])])
    def test_kron_equals_definition(self, fmt):
        assert np.array_equal(build_tpm(fmt, "kron"), build_tpm(fmt, "sum"))

    @settings(max_examples=25, deadline=None)
    @given(small_formats, st.lists(st.integers(1, 255), min_size=3, max_size=3))
    def test_column_sums_exact(self, fmt, w):
        # dyadic probabilities k/1024 so that every partial sum is exact
        w = w[: fmt.M - 1]
        q = np.array(w + [1024 - sum(w)], dtype=float) / 1024
        f = fmt.__class__(fmt.M, fmt.phase, fmt.indices, q)
        tpm = build_tpm(f)
        assert np.array_equal(tpm.sum(axis=1), np.ones((tpm.shape[0], tpm.shape[2])))
        assert np.array_equal(tpm, build_tpm(f, "sum"))

    def test_period(self):
        pti = build_machine(MULTIH)
        for n in range(8):
            assert np.array_equal(pti.pi(n + 4), pti.pi(n))
            assert np.array_equal(pti.e(1, n + 4), pti.e(1, n))

    def test_debug_dump(self):
        text = format_tpm(build_machine(l1_format(3)), 0)
        lines = text.splitlines()
        assert lines[0].split("|")[1].split() == ["0", "2", "4", "6"]
        assert "q_-1" in text and "q_1" in text
        num = format_tpm(build_machine(l1_format(3)), 0, symbolic=False)
        assert "0.5" in num


class TestApv:
    def test_full_response(self):
        assert np.array_equal(invariant_apv(l1_format(1, p=2)), [0.25] * 4)

    def test_kronecker_expansion(self):
        fmt = make_format(2, "rc", 2, ["1/2"], q=[0.3, 0.7])
        p = invariant_apv(fmt)
        assert p.shape == (8,)
        assert np.allclose(p, np.tile([0.075, 0.175], 4), atol=1e-17)

    @pytest.mark.parametrize("fmt", [MULTIH, RC_L2, make_format(4, "rc", 3, ["1/4", "3/8"],
                                                                  q=[0.1, 0.2, 0.3, 0.4])])
    def test_fixed_point(self, fmt):
        pti = build_machine(fmt)
        for n in range(fmt.indices.period):
            assert np.abs(pti.pi(n) @ pti.apv - pti.apv).max() <= 1e-14
