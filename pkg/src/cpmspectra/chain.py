"""
Classification of the PTI chain and the polyphase (block) machine.

Odd symbols make the parity of the phase state flip exactly when the
active ``r`` is odd, so the state space splits into the classes
``S(+)`` (even z) and ``S(-)`` (odd z).  A trajectory started in one class
follows a deterministic parity pattern and returns to it after ``N_c``
symbols, ``N_c`` being ``N_h`` or ``2 N_h``.

Blocking ``N_c`` symbols per step gives a time-invariant machine on
``I0 = p * M**(L-1)`` states per class.  Within a class, states are
numbered ``(z // 2) * M**(L-1) + u``.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import ClassificationError, InvalidFormatError, StructureViolationError
from .linalg import cyclic_shift_power, kron, kron_chain, unit_roots
from .machine import build_machine

DEFAULT_WORD_BUDGET = 2 ** 20


def cyclo_period(indices):
    """``N_h`` if an even number of the ``r_n`` are odd, else ``2 N_h``."""
    odd = sum(r % 2 for r in indices.numerators)
    return indices.period * (1 if odd % 2 == 0 else 2)


@dataclass(frozen=True, eq=False)
class ParityPartition:
    even: np.ndarray
    odd: np.ndarray
    i0: int

    @property
    def order(self):
        return np.concatenate([self.even, self.odd])


def parity_partition(fmt):
    n_recent = fmt.M ** (fmt.L - 1)
    z = np.arange(2 * fmt.p * n_recent) // n_recent
    even, odd = np.flatnonzero(z % 2 == 0), np.flatnonzero(z % 2 == 1)
    return ParityPartition(even, odd, even.size)


def shift_correction(p, n_recent):
    """``D_I0 ** (I0/p) = D_p (x) I_{M^(L-1)}``: the odd-to-even wrap of the phase state."""
    return kron(cyclic_shift_power(p, 1), np.eye(n_recent, dtype=complex))


@dataclass(frozen=True, eq=False)
class BlockSplit:
    kind: str          # "F" (r even, block diagonal) or "G" (r odd, antidiagonal)
    block: np.ndarray


def block_split(pi_n, partition, r, p, n_recent):
    """
    Split a full TPM into its parity blocks.

    For even ``r`` both diagonal blocks must be equal (``F``) and the
    off-diagonal ones zero.  For odd ``r`` the diagonal blocks must be zero,
    the lower-left block is ``G`` and the upper-right one equals
    ``shift_correction @ G``.  Any deviation means an indexing bug and
    raises :class:`StructureViolationError`.
    """
    ev, od = partition.even, partition.odd
    pp, pm = pi_n[np.ix_(ev, ev)], pi_n[np.ix_(ev, od)]
    mp, mm = pi_n[np.ix_(od, ev)], pi_n[np.ix_(od, od)]
    if r % 2 == 0:
        if np.any(pm != 0) or np.any(mp != 0):
            raise StructureViolationError("even r: off-diagonal blocks are not zero")
        if not np.array_equal(pp, mm):
            raise StructureViolationError("even r: diagonal blocks differ")
        return BlockSplit("F", pp)
    if np.any(pp != 0) or np.any(mm != 0):
        raise StructureViolationError("odd r: diagonal blocks are not zero")
    if not np.array_equal(pm, shift_correction(p, n_recent) @ mp):
        raise StructureViolationError("odd r: upper-right block is not D*G")
    return BlockSplit("G", mp)


@dataclass(frozen=True, eq=False)
class TrajectoryChain:
    sign: str
    period: int
    tpms: list
    labels: list

    def product(self):
        out = np.eye(self.tpms[0].shape[0], dtype=complex)
        for t in self.tpms:
            out = t @ out
        return out


def trajectory_tpms(fmt, sign="+", machine=None):
    """
    Per-trajectory TPMs over one cyclostationarity period.

    Starting on the ``sign`` side, step n emits ``F_n`` when ``r_{n-L+1}``
    is even, ``G_n`` when it is odd and the chain sits on the even side, and
    ``D G_n`` when it is odd and the chain sits on the odd side.  Labels use
    ``n mod N_h``.
    """
    if sign not in "+-":
        raise ValueError("sign must be '+' or '-'")
    machine = build_machine(fmt) if machine is None else machine
    part = parity_partition(fmt)
    n_recent = fmt.M ** (fmt.L - 1)
    corr = shift_correction(fmt.p, n_recent)
    nc = cyclo_period(fmt.indices)
    nh = fmt.indices.period
    side = sign
    tpms, labels = [], []
    for n in range(nc):
        r = fmt.indices.r(n - fmt.L + 1)
        split = block_split(machine.pi(n), part, r, fmt.p, n_recent)
        if split.kind == "F":
            tpms.append(split.block)
            labels.append(f"F{n % nh}")
        elif side == "+":
            tpms.append(split.block)
            labels.append(f"G{n % nh}")
            side = "-"
        else:
            tpms.append(corr @ split.block)
            labels.append(f"DG{n % nh}")
            side = "+"
    if side != sign:
        raise ClassificationError("trajectory did not return to its class after N_c steps")
    return TrajectoryChain(sign, nc, tpms, labels)


def is_irreducible(mat):
    n, _ = connected_components(np.abs(np.asarray(mat)) > 0, directed=True,
                                connection="strong")
    return n == 1


def _mixed_radix_digits(count, base, width):
    idx = np.arange(count)
    out = np.empty((count, width), dtype=np.int64)
    for k in range(width - 1, -1, -1):
        idx, out[:, k] = np.divmod(idx, base)
    return out


@dataclass(frozen=True, eq=False)
class PolyphaseMachine:
    """
    Time-invariant machine over blocks of ``N_c`` symbols.

    Input words ``x = (x_0, ..., x_{N_c-1})`` are numbered in mixed radix
    with ``x_0`` most significant.  Conditional matrices are stored as
    successor tables ``next[sign][x, s]``; dense ``E_x`` and ``Y_x`` are
    produced on demand.
    """

    fmt: object
    pti: object
    offset: int
    n_c: int
    i0: int
    n_recent: int
    words: np.ndarray
    word_probs: np.ndarray
    next_state: dict
    full_tpm: np.ndarray
    big_tpm: dict
    stationary: np.ndarray
    roots: np.ndarray = field(repr=False)

    @property
    def M(self):
        return self.fmt.M

    @property
    def L(self):
        return self.fmt.L

    @property
    def p(self):
        return self.fmt.p

    @property
    def n_words(self):
        return self.words.shape[0]

    @property
    def n_outputs(self):
        """Output word length ``N_0 = M**(N_c + L - 1)``."""
        return self.n_recent * self.n_words

    @property
    def tpm(self):
        return self.big_tpm["+"]

    @cached_property
    def limit(self):
        """``p_inf 1^T``, the limit of ``tpm**k``."""
        return np.outer(self.stationary, np.ones(self.i0))

    def state_z(self, sign="+"):
        return 2 * (np.arange(self.i0) // self.n_recent) + (sign == "-")

    def state_u(self):
        return np.arange(self.i0) % self.n_recent

    def conditional(self, x, sign="+"):
        """Dense ``E_x(sign)`` for word index ``x``."""
        out = np.zeros((self.i0, self.i0), dtype=complex)
        out[self.next_state[sign][x], np.arange(self.i0)] = 1.0
        return out

    def output_matrix(self, x, sign="+"):
        """``Y_x(sign)``: column s is the block output word from state s (shape ``N_0 x I0``)."""
        out = np.zeros((self.n_outputs, self.i0), dtype=complex)
        rows = self.state_u() * self.n_words + x
        out[rows, np.arange(self.i0)] = self.roots[self.state_z(sign)]
        return out

    def output_matrix_kron(self, x, sign="+"):
        """``Y_x(sign)`` assembled as ``V_p (x) I (x) w_{x_0} (x) ... (x) w_{x_{N_c-1}}``."""
        vp = self.roots[0::2][None, :]
        factors = [vp, np.eye(self.n_recent, dtype=complex)]
        for k in self.words[x]:
            w = np.zeros((self.M, 1), dtype=complex)
            w[k, 0] = 1.0
            factors.append(w)
        y = kron_chain(*factors)
        return self.roots[1] * y if sign == "-" else y

    def block_increment(self):
        """
        Phase-state increment and successor recent-symbol index per (u, x).

        The block update is ``(z, u) -> (z + delta[u, x], u_next[u, x])``;
        shift invariance in z is checked against the successor table.
        """
        nxt = self.next_state["+"]
        u = self.state_u()
        base = nxt[:, : self.n_recent]            # states with z = 0
        delta = 2 * (base // self.n_recent)
        u_next = base % self.n_recent
        zq = np.arange(self.i0) // self.n_recent
        expect = ((zq[None, :] + delta[:, u] // 2) % self.p) * self.n_recent + u_next[:, u]
        if not np.array_equal(expect, nxt):
            raise StructureViolationError("block update is not shift invariant in z")
        return delta.T, u_next.T


def build_polyphase(fmt, offset=0, word_budget=DEFAULT_WORD_BUDGET):
    """
    Build the block machine anchored ``offset`` symbols into the index period.

    The block transition is the chronological product
    ``pi_{N_c-1} ... pi_1 pi_0`` (earliest slot applied first); conditional
    block transitions compose the per-symbol successor tables the same way.
    """
    fmt = fmt.rotated(offset) if offset else fmt
    nc = cyclo_period(fmt.indices)
    M, L, p = fmt.M, fmt.L, fmt.p
    n_words = M ** nc
    n_outputs = M ** (nc + L - 1)
    if n_outputs > word_budget:
        raise InvalidFormatError(
            f"{n_outputs} output words per block exceed the budget of {word_budget}")
    pti = build_machine(fmt)
    part = parity_partition(fmt)
    n_recent = M ** (L - 1)
    i0 = part.i0

    cur = np.arange(pti.size)[None, :]
    for i in range(nc):
        table = pti.next_table(i)                 # (M, I)
        cur = table[:, cur].transpose(1, 0, 2).reshape(-1, pti.size)

    full = np.eye(pti.size, dtype=complex)
    for i in range(nc):
        full = pti.pi(i) @ full

    pos = np.empty(pti.size, dtype=np.int64)
    pos[part.even] = np.arange(i0)
    pos[part.odd] = np.arange(i0)
    next_state, big = {}, {}
    for sign, cls, other in (("+", part.even, part.odd), ("-", part.odd, part.even)):
        succ = cur[:, cls]
        if np.isin(succ, other).any():
            raise ClassificationError(f"block transition leaves class S({sign})")
        next_state[sign] = pos[succ]
        if np.any(full[np.ix_(other, cls)] != 0):
            raise StructureViolationError("block TPM is not block diagonal")
        big[sign] = full[np.ix_(cls, cls)]

    q = np.asarray(fmt.q, dtype=float)
    words = _mixed_radix_digits(n_words, M, nc)
    word_probs = np.prod(q[words], axis=1)
    stationary = kron_chain(np.full((p, 1), 1.0 / p),
                            *([q[:, None]] * (L - 1))).ravel()
    return PolyphaseMachine(fmt, pti, offset, nc, i0, n_recent, words, word_probs,
                            next_state, full, big, stationary, unit_roots(2 * p))


def stationary_distribution(machine, check=True):
    """
    Return ``(p_inf, Pi_inf)`` for the (+) class.

    ``p_inf = (1/p) 1_p (x) q (x) ... (x) q``.  With ``check`` the class chain
    must be irreducible and ``p_inf`` a fixed point of the block TPM.
    """
    if check:
        for sign in "+-":
            if not is_irreducible(machine.big_tpm[sign]):
                raise ClassificationError(f"block chain of class S({sign}) is reducible")
            res = np.abs(machine.big_tpm[sign] @ machine.stationary - machine.stationary).max()
            if res > 1e-12:
                raise ClassificationError(f"stationary vector residual {res:.3g}")
    return machine.stationary, machine.limit


def limit_residual(machine, k=200, sign="+"):
    """``max|Pi(sign)**k - p_inf 1^T|``."""
    pk = np.linalg.matrix_power(machine.big_tpm[sign], k)
    return float(np.abs(pk - machine.limit).max())
