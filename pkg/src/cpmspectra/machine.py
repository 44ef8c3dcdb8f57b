"""
Periodically time-invariant sequential machine of a CPM modulator.

The state at time n is ``(z_{n-L}, a_{n-L+1}, ..., a_{n-1})``: the phase
state modulo 2p plus the L-1 most recent symbols.  Flat state indices use
mixed radix with the phase state as the most significant digit::

    index = z * M**(L-1) + u,    u = mixed radix of the recent symbol indices

which matches the factor order of the Kronecker forms below.

Transition matrices follow the column convention
``pi_n[i, j] = P[s_{n+1} = i | s_n = j]``, so every ``pi_n`` is
column-stochastic and state distributions are column vectors updated as
``p_{n+1} = pi_n @ p_n``.
"""

from dataclasses import dataclass

import numpy as np

from .linalg import cyclic_shift_power, kron_chain, kron_power, unit_roots


@dataclass(frozen=True)
class SmState:
    """Phase state ``z`` in ``0..2p-1`` and the recent symbol values, oldest first."""

    z: int
    recent: tuple = ()


class StateCodec:
    """Bijection between :class:`SmState` and flat indices ``0..I-1``."""

    def __init__(self, M, L, p):
        self.M, self.L, self.p = M, L, p
        self.n_recent = M ** (L - 1)
        self.size = 2 * p * self.n_recent

    def encode(self, state):
        u = 0
        for a in state.recent:
            u = u * self.M + (a + self.M - 1) // 2
        return state.z * self.n_recent + u

    def decode(self, index):
        z, u = divmod(int(index), self.n_recent)
        digits = []
        for _ in range(self.L - 1):
            u, d = divmod(u, self.M)
            digits.append(2 * d - (self.M - 1))
        return SmState(z, tuple(reversed(digits)))

    def states(self):
        return [self.decode(i) for i in range(self.size)]


def _indicator(m, k):
    w = np.zeros((m, 1), dtype=complex)
    w[k, 0] = 1.0
    return w


def state_update(fmt, state, symbol, n):
    """Next state under input ``symbol`` at time ``n``."""
    fmt.symbol_index(symbol)
    p, L = fmt.p, fmt.L
    r = fmt.indices.r(n - L + 1)
    if L == 1:
        return SmState((state.z + r * symbol) % (2 * p))
    z = (state.z + r * state.recent[0]) % (2 * p)
    return SmState(z, tuple(state.recent[1:]) + (symbol,))


def output_word(fmt, state, symbol):
    """
    Output word ``W_2p**z * w_{s1} (x) ... (x) w_{s_{L-1}} (x) w_a``.

    A length ``M**L`` vector with a single root-of-unity entry; it does not
    depend on time.
    """
    M = fmt.M
    pos = 0
    for a in tuple(state.recent) + (symbol,):
        pos = pos * M + int(fmt.symbol_index(a))
    out = np.zeros(M ** fmt.L, dtype=complex)
    out[pos] = unit_roots(2 * fmt.p)[state.z % (2 * fmt.p)]
    return out


def build_conditional_matrices(fmt):
    """
    Conditional transition matrices, shape ``(N_h, M, I, I)``.

    ``result[n, k]`` is ``e_{alpha, n}`` for the k-th symbol ``alpha``.  For
    L >= 2 it is ``sum_b D^(r b) (x) w_b^T (x) I_{M^(L-2)} (x) w_alpha``
    with ``r = r_{n-L+1}``; for L = 1 it is ``D^(r alpha)``.
    """
    M, L, p = fmt.M, fmt.L, fmt.p
    nh = fmt.indices.period
    size = 2 * p * M ** (L - 1)
    out = np.zeros((nh, M, size, size), dtype=complex)
    for n in range(nh):
        r = fmt.indices.r(n - L + 1)
        for k, alpha in enumerate(fmt.alphabet):
            if L == 1:
                out[n, k] = cyclic_shift_power(2 * p, r * alpha)
                continue
            acc = np.zeros((size, size), dtype=complex)
            mid = np.eye(M ** (L - 2), dtype=complex)
            for b, beta in enumerate(fmt.alphabet):
                acc += kron_chain(cyclic_shift_power(2 * p, r * beta),
                                  _indicator(M, b).T, mid, _indicator(M, k))
            out[n, k] = acc
    return out


def build_tpm(fmt, method="kron", conditional=None):
    """
    Transition matrices ``pi_0..pi_{N_h-1}``, shape ``(N_h, I, I)``.

    ``method="kron"`` uses the closed Kronecker form with ``q`` as the last
    factor; ``method="sum"`` forms ``sum_alpha q_alpha e_{alpha,n}``.
    """
    M, L, p = fmt.M, fmt.L, fmt.p
    nh = fmt.indices.period
    q = np.asarray(fmt.q, dtype=complex)
    if method == "sum":
        e = build_conditional_matrices(fmt) if conditional is None else conditional
        out = np.zeros(e.shape[:1] + e.shape[2:], dtype=complex)
        for k in range(M):
            out += q[k] * e[:, k]
        return out
    if method != "kron":
        raise ValueError(f"unknown method {method!r}")
    size = 2 * p * M ** (L - 1)
    out = np.zeros((nh, size, size), dtype=complex)
    for n in range(nh):
        r = fmt.indices.r(n - L + 1)
        if L == 1:
            for k, beta in enumerate(fmt.alphabet):
                out[n] += q[k] * cyclic_shift_power(2 * p, r * beta)
            continue
        mid = np.eye(M ** (L - 2), dtype=complex)
        for b, beta in enumerate(fmt.alphabet):
            out[n] += kron_chain(cyclic_shift_power(2 * p, r * beta),
                                 _indicator(M, b).T, mid, q[:, None])
    return out


def invariant_apv(fmt):
    """Invariant state distribution ``(1/2p) 1_2p (x) q (x) ... (x) q`` (L-1 factors)."""
    p = fmt.p
    ones = np.full((2 * p, 1), 1.0 / (2 * p), dtype=complex)
    return kron_chain(ones, kron_power(np.asarray(fmt.q, dtype=complex)[:, None],
                                       fmt.L - 1)).ravel()


@dataclass(frozen=True, eq=False)
class PtiMachine:
    fmt: object
    codec: StateCodec
    conditional: np.ndarray
    tpm: np.ndarray
    apv: np.ndarray

    @property
    def size(self):
        return self.codec.size

    def e(self, alpha, n):
        k = int(self.fmt.symbol_index(alpha))
        return self.conditional[n % self.fmt.indices.period, k]

    def pi(self, n):
        return self.tpm[n % self.fmt.indices.period]

    def next_table(self, n):
        """``table[k, j]`` = flat index of the successor of state j under symbol k."""
        e = self.conditional[n % self.fmt.indices.period].real
        return np.argmax(e, axis=1)


def build_machine(fmt):
    cond = build_conditional_matrices(fmt)
    return PtiMachine(fmt, StateCodec(fmt.M, fmt.L, fmt.p), cond,
                      build_tpm(fmt, "kron"), invariant_apv(fmt))


def parity_order(codec):
    """Flat indices with even phase states first, then odd ones."""
    z = np.arange(codec.size) // codec.n_recent
    return np.concatenate([np.flatnonzero(z % 2 == 0), np.flatnonzero(z % 2 == 1)])


def symbolic_tpm(machine, n):
    """
    ``pi_n`` as a grid of labels such as ``"q_-1"`` or ``"q_-1+q_1"`` ("0" if empty).

    Built from the conditional matrices, so it shows which symbols drive
    each transition independently of the numeric value of ``q``.
    """
    e = machine.conditional[n % machine.fmt.indices.period]
    size = machine.size
    labels = [["0"] * size for _ in range(size)]
    for k, alpha in enumerate(machine.fmt.alphabet):
        for i, j in zip(*np.nonzero(e[k])):
            tag = f"q_{alpha:d}"
            labels[i][j] = tag if labels[i][j] == "0" else labels[i][j] + "+" + tag
    return labels


def format_tpm(machine, n, symbolic=True):
    """Debug dump of ``pi_n`` with even phase states first (block form)."""
    codec = machine.codec
    order = parity_order(codec)
    if symbolic:
        grid = symbolic_tpm(machine, n)
    else:
        num = machine.pi(n).real
        grid = [[f"{v:.4g}" for v in row] for row in num]

    def name(i):
        s = codec.decode(i)
        return str(s.z) if not s.recent else f"{s.z}|{','.join(map(str, s.recent))}"

    width = max(6, max(len(grid[i][j]) for i in order for j in order))
    half = len(order) // 2
    head = " " * width + " |" + "".join(
        f"{name(j):>{width}}" + (" |" if c == half - 1 else "")
        for c, j in enumerate(order))
    lines = [head, "-" * len(head)]
    for c, i in enumerate(order):
        cells = "".join(
            f"{(grid[i][j] if grid[i][j] != '0' else '.'):>{width}}"
            + (" |" if cc == half - 1 else "")
            for cc, j in enumerate(order))
        lines.append(f"{name(i):>{width}} |{cells}")
        if c == half - 1:
            lines.append("-" * len(head))
    return "\n".join(lines)
