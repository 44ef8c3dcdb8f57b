import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cpmspectra.chain import (
    block_split,
    build_polyphase,
    cyclo_period,
    is_irreducible,
    limit_residual,
    parity_partition,
    shift_correction,
    stationary_distribution,
    trajectory_tpms,
)
from cpmspectra.errors import ClassificationError, InvalidFormatError, StructureViolationError
from cpmspectra.linalg import cyclic_shift_power, kron_power
from cpmspectra.machine import build_machine
from cpmspectra.model import ModulationIndexSet

from conftest import GMSK_L4, H2, H3, H4, MSK, MULTIH, RC_L2, make_format


def lformat(idx, M=2, L=1, kind="cpfsk", q=None):
    return make_format(M, kind, L, idx, q)


small_formats = st.builds(
    lambda M, L, rs, p: make_format(M, "rc", L, ModulationIndexSet(tuple(rs), p)),
    st.sampled_from([2, 4]),
    st.integers(1, 2),
    st.lists(st.integers(1, 7), min_size=1, max_size=3),
    st.sampled_from([2, 3, 4, 8]),
).filter(lambda f: f.M ** (f.L - 1) * f.p <= 32 and f.M ** (cyclo_period(f.indices) + f.L - 1) <= 4096)


class TestPeriod:
    @pytest.mark.parametrize("idx,nc", [(H2, 3), (H3, 6), (H4, 4),
                                        (ModulationIndexSet((1,), 2), 2),
                                        (ModulationIndexSet((2,), 3), 1)])
    def test_examples(self, idx, nc):
        assert cyclo_period(idx) == nc

    def test_multih(self):
        assert cyclo_period(MULTIH.indices) == 8

    @given(st.lists(st.integers(1, 9), min_size=1, max_size=6), st.integers(1, 10))
    def test_returns_to_parity(self, rs, p):
        idx = ModulationIndexSet(tuple(rs), p)
        nc = cyclo_period(idx)
        assert nc in (idx.period, 2 * idx.period)
        assert sum(idx.r(n) for n in range(nc)) % 2 == 0


class TestTrajectory:
    @pytest.mark.parametrize("idx,sign,labels", [
        (H2, "+", ["F0", "G1", "DG2"]),
        (H2, "-", ["F0", "DG1", "G2"]),
        (H3, "+", ["F0", "G1", "F2", "F0", "DG1", "F2"]),
        (H4, "+", ["F0", "G1", "F0", "DG1"]),
    ])
    def test_labels(self, idx, sign, labels):
        assert trajectory_tpms(lformat(idx), sign).labels == labels

    @pytest.mark.parametrize("idx", [H2, H3, H4])
    def test_product_is_class_block(self, idx):
        fmt = lformat(idx, q=[0.25, 0.75])
        m = build_polyphase(fmt)
        for sign in "+-":
            assert np.array_equal(trajectory_tpms(fmt, sign).product(), m.big_tpm[sign])

    def test_shift_commutes_with_f(self):
        fmt = lformat(H3)
        pti = build_machine(fmt)
        part = parity_partition(fmt)
        d = shift_correction(fmt.p, 1)
        f = block_split(pti.pi(0), part, 2, fmt.p, 1).block
        assert np.array_equal(d @ f, f @ d)

    def test_shift_correction_is_shift_power(self):
        p, nr = 4, 2
        i0 = p * nr
        assert np.array_equal(shift_correction(p, nr), cyclic_shift_power(i0, i0 // p))

    def test_corrupted_tpm(self):
        fmt = lformat(H2)
        pti = build_machine(fmt)
        part = parity_partition(fmt)
        bad = pti.pi(0).copy()
        bad[part.even[0], part.odd[0]] = 0.5
        with pytest.raises(StructureViolationError):
            block_split(bad, part, 2, fmt.p, 1)
        odd = pti.pi(1).copy()
        odd[part.odd[0], part.even[1]] += 0.25
        with pytest.raises(StructureViolationError):
            block_split(odd, part, 1, fmt.p, 1)
        with pytest.raises(StructureViolationError):
            block_split(pti.pi(1), part, 2, fmt.p, 1)


class TestPolyphase:
    @pytest.mark.parametrize("fmt", [MULTIH, RC_L2, lformat(H2), lformat(H3, M=4, L=2, kind="rc")])
    def test_conditional_sum(self, fmt, machines):
        m = machines(fmt)
        for sign in "+-":
            tot = sum(m.word_probs[x] * m.conditional(x, sign) for x in range(m.n_words))
            assert np.abs(tot - m.big_tpm[sign]).max() <= 1e-15

    @pytest.mark.parametrize("fmt", [MULTIH, RC_L2, lformat(H3), GMSK_L4])
    def test_classes_identical(self, fmt, machines):
        m = machines(fmt)
        assert np.array_equal(m.big_tpm["+"], m.big_tpm["-"])
        assert np.array_equal(m.next_state["+"], m.next_state["-"])

    @pytest.mark.parametrize("fmt", [MULTIH, RC_L2, lformat(H4)])
    def test_odd_outputs_rotated(self, fmt, machines):
        m = machines(fmt)
        w = m.roots[1]
        for x in np.linspace(0, m.n_words - 1, 9).astype(int):
            assert np.array_equal(m.output_matrix(x, "-"), w * m.output_matrix(x, "+"))

    def test_output_kron_form(self):
        fmt = make_format(2, "rc", 2, ModulationIndexSet((1,), 2))
        m = build_polyphase(fmt)
        assert m.n_c == 2 and m.n_outputs == 8
        for x in range(m.n_words):
            for sign in "+-":
                assert np.allclose(m.output_matrix(x, sign), m.output_matrix_kron(x, sign),
                                   atol=1e-15, rtol=0)

    def test_single_h_even_numerator(self):
        fmt = make_format(2, "cpfsk", 1, ["2/3"])
        m = build_polyphase(fmt)
        assert m.n_c == 1 and m.p == 3
        assert np.array_equal(m.big_tpm["+"], m.pti.pi(0)[np.ix_([0, 2, 4], [0, 2, 4])])

    @pytest.mark.parametrize("fmt", [MULTIH, lformat(H3, q=[0.375, 0.625])])
    def test_block_sampling(self, fmt, machines):
        # n block steps equal n * N_c per-symbol steps restricted to the class
        m = machines(fmt)
        part = parity_partition(fmt)
        full = np.eye(m.pti.size, dtype=complex)
        for n in range(3 * m.n_c):
            full = m.pti.pi(n) @ full
        blk = np.linalg.matrix_power(m.big_tpm["+"], 3)
        assert np.abs(full[np.ix_(part.even, part.even)] - blk).max() <= 1e-14

    def test_block_increment(self, machines):
        m = machines(RC_L2)
        delta, u_next = m.block_increment()
        assert delta.shape == (m.n_recent, m.n_words)
        assert np.all(delta % 2 == 0) and np.all(u_next < m.n_recent)

    def test_word_budget(self):
        fmt = make_format(4, "rc", 4, ["1/2", "1/4", "1/8", "3/8", "5/8", "7/8", "3/4", "1/8"])
        with pytest.raises(InvalidFormatError):
            build_polyphase(fmt)

    @settings(max_examples=20, deadline=None)
    @given(small_formats)
    def test_structure_holds(self, fmt):
        m = build_polyphase(fmt)
        assert np.array_equal(m.big_tpm["+"], m.big_tpm["-"])
        assert np.abs(m.big_tpm["+"].sum(axis=0) - 1).max() <= 1e-13
        m.block_increment()


class TestStationary:
    def test_examples(self):
        m = build_polyphase(make_format(2, "rc", 3, ["1/2"], q=[0.25, 0.75]))
        expect = np.kron(np.full(2, 0.5), kron_power(np.array([[0.25], [0.75]]), 2).ravel())
        assert np.array_equal(m.stationary, expect)
        assert np.array_equal(build_polyphase(MULTIH).stationary, np.full(16, 1 / 16))

    @pytest.mark.parametrize("fmt", [GMSK_L4, MULTIH, RC_L2])
    def test_fixed_point_and_power(self, fmt, machines):
        m = machines(fmt)
        p_inf, lim = stationary_distribution(m)
        assert np.abs(m.tpm @ p_inf - p_inf).max() <= 1e-12
        assert np.array_equal(lim[:, 3], p_inf)
        assert limit_residual(m, 400) <= 1e-10

    def test_reducible(self):
        m = build_polyphase(MSK)
        eye = np.eye(m.i0, dtype=complex)
        bad = dataclasses.replace(m, big_tpm={"+": eye, "-": eye})
        assert not is_irreducible(eye)
        with pytest.raises(ClassificationError):
            stationary_distribution(bad)

    def test_offset_rotates_indices(self):
        m = build_polyphase(MULTIH, offset=1)
        assert m.fmt.indices.numerators == (5, 8, 10, 4) and m.offset == 1
