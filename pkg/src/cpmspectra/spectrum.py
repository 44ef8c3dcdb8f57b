"""
Closed-form average power spectral density of a CPM signal.

Over one block of ``N_c`` symbols the complex envelope is
``v_{x,s}(t)``, a function of the block input word x and the block-start
state s.  With ``V_{x,s}(f)`` its Fourier transform over ``[0, T_c)``,
the continuous part of the average PSD is::

    S_c(f) = ( K0 - |mu|^2 + 2 Re[ K2 (I - Pi_inf) (lam I - Pi + Pi_inf)^-1 K1 ] ) / T_c

with ``lam = exp(j 2 pi f T_c)``,

    K0 = sum_x P[x] V_x diag(p_inf) V_x^H
    K1 = sum_x P[x] E_x diag(p_inf) V_x^H
    K2 = sum_x P[x] V_x
    mu = K2 p_inf

``mu`` vanishes unless ``p == 1``; then the PSD also has lines of weight
``|mu(k/T_c)|^2 / T_c^2`` at ``f = k/T_c``.

Everything is normalized to ``T = 1``: frequencies are ``f*T`` and the
PSD integrates to the unit signal power over ``f*T``.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .chain import _mixed_radix_digits
from .errors import StructureViolationError
from .linalg import make_resolvent, DEFAULT_SINGULAR_THRESHOLD

DEFAULT_GRID = (-2.0, 2.0, 2001)
DEFAULT_ORDER = 32
LINE_FLOOR = 1e-12
MEAN_TOLERANCE = 1e-12


def default_grid():
    return np.linspace(*DEFAULT_GRID)


def gauss_legendre(order):
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def _chunks(n, size):
    return [slice(s, min(s + size, n)) for s in range(0, n, size)]


@dataclass(frozen=True, eq=False)
class PulseTransformSet:
    """
    Fourier transforms ``V_{x,s}(f)`` of the block waveforms on a grid.

    The transform of block row ``(u, x)`` with phase state 0 is
    ``sum_i exp(-j2 pi f i) exp(j theta_i) S_i[w_i](f)``: each segment
    ``[i, i+1)`` contributes a windowed integral that depends only on the L
    symbols active there (``S_i``, computed once by Gauss-Legendre) times
    the phase already completed inside the block.  ``coeff`` holds those
    phases, so ``base = coeff @ segments``.  The phase-state factor
    ``W_2p**z`` is applied analytically.
    """

    machine: object
    grid: np.ndarray
    order: int
    segments: np.ndarray = field(repr=False)
    coeff: object = field(repr=False)

    @property
    def n_rows(self):
        return self.coeff.shape[0]

    def base(self, sl=slice(None)):
        """Transforms of all rows ``u*n_words + x`` at ``grid[sl]`` for z = 0."""
        return np.asarray(self.coeff @ self.segments[:, sl])

    def value(self, x, s, sign="+"):
        """``V_{x,s}(f)`` on the whole grid for word index x and class state s."""
        m = self.machine
        u = s % m.n_recent
        z = 2 * (s // m.n_recent) + (sign == "-")
        row = self.coeff[u * m.n_words + x]
        return m.roots[z] * np.asarray(row @ self.segments).ravel()

    def chunk_size(self, budget=2 ** 22):
        return max(1, min(self.grid.size, budget // max(self.n_rows, 1)))


def pulse_transforms(machine, grid, order=DEFAULT_ORDER):
    """
    Build the :class:`PulseTransformSet` of ``machine`` on ``grid``.

    ``order`` Gauss-Legendre nodes are used on every symbol interval; the
    phase response has its kinks at multiples of T so each interval is
    smooth.
    """
    if order < 4:
        raise ValueError("quadrature order must be >= 4")
    grid = np.asarray(grid, dtype=float)
    if not np.all(np.isfinite(grid)):
        raise ValueError("frequency grid must be finite")
    fmt = machine.fmt
    M, L, p, nc = fmt.M, fmt.L, fmt.p, machine.n_c
    alpha = fmt.alphabet
    tau, wt = gauss_legendre(order)
    n_win = M ** L
    win_digits = _mixed_radix_digits(n_win, M, L)      # oldest first

    segs = np.empty((nc * n_win, grid.size), dtype=complex)
    for i in range(nc):
        ph = np.zeros((n_win, order))
        for k in range(L):
            pos = i - L + 1 + k
            h = fmt.indices.r(pos) / p
            ph += 2 * np.pi * h * alpha[win_digits[:, k]][:, None] * fmt.phase(tau + (i - pos))
        kern = wt[:, None] * np.exp(-2j * np.pi * np.outer(tau + i, grid))
        segs[i * n_win:(i + 1) * n_win] = np.exp(1j * ph) @ kern

    n_rows = machine.n_outputs
    seq = _mixed_radix_digits(n_rows, M, nc + L - 1)
    r = np.array([fmt.indices.r(j - L + 1) for j in range(nc + L - 1)])
    inc = r[None, :] * alpha[seq]
    done = np.concatenate([np.zeros((n_rows, 1), dtype=np.int64),
                           np.cumsum(inc, axis=1)], axis=1) % (2 * p)
    rows = np.repeat(np.arange(n_rows), nc)
    cols = np.empty((n_rows, nc), dtype=np.int64)
    vals = np.empty((n_rows, nc), dtype=complex)
    weights = M ** np.arange(L - 1, -1, -1)
    for i in range(nc):
        cols[:, i] = i * n_win + seq[:, i:i + L] @ weights
        vals[:, i] = machine.roots[done[:, i]]
    coeff = sp.csr_matrix((vals.ravel(), (rows, cols.ravel())),
                          shape=(n_rows, nc * n_win))
    return PulseTransformSet(machine, grid, order, segs, coeff)


def class_embedding(machine, sign="+"):
    """
    ``(I0, n_recent)`` matrix ``B`` with ``B[s, u] = W**z(s)`` when ``u(s) == u``.

    ``K2 = B @ K2u`` and ``K1 = conj(B) @ C`` where ``K2u`` and ``C`` are the
    per-recent-symbol aggregates of :func:`reduced_aggregates`.
    """
    out = np.zeros((machine.i0, machine.n_recent), dtype=complex)
    out[np.arange(machine.i0), machine.state_u()] = machine.roots[machine.state_z(sign)]
    return out


def reduced_aggregates(transforms, sl=slice(None)):
    """
    ``K0`` (F,) and the per-recent-symbol factors ``K2u``, ``C`` (n_recent, F).

    Uses the z-shift invariance of the block update,
    ``(z, u) -> (z + delta[u, x], u_next[u, x])``: the phase state enters
    ``K1`` and ``K2`` only through a unit-modulus factor, see
    :func:`class_embedding`.
    """
    m = transforms.machine
    nr, nw = m.n_recent, m.n_words
    b = transforms.base(sl)
    pz = m.stationary.reshape(m.p, nr)             # p_inf(z, u), uniform in z
    q_u = pz.sum(axis=0)
    wrow = (q_u[:, None] * m.word_probs[None, :]).ravel()
    k0 = wrow @ (b * b.conj())
    k2u = np.einsum("w,uwf->uf", m.word_probs, b.reshape(nr, nw, -1))
    delta, u_next = m.block_increment()
    gather = sp.csr_matrix(
        ((pz[0][:, None] * m.word_probs[None, :] * m.roots[delta]).ravel(),
         (u_next.ravel(), np.arange(nr * nw))), shape=(nr, nr * nw))
    c = np.asarray(gather @ b.conj())
    return k0, k2u, c


def k_aggregates(transforms, sl=slice(None), sign="+"):
    """``K0`` (F,), ``K1`` (I0, F) and ``K2`` (I0, F) at ``grid[sl]``."""
    k0, k2u, c = reduced_aggregates(transforms, sl)
    emb = class_embedding(transforms.machine, sign)
    return k0, emb.conj() @ c, emb @ k2u


@dataclass(frozen=True)
class SpectralLine:
    k: int
    freq: float
    weight: float


@dataclass(eq=False)
class SpectrumResult:
    """PSD on a grid of ``f*T`` values plus spectral lines and diagnostics."""

    grid: np.ndarray
    psd: np.ndarray
    lines: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def psd_db(self):
        """PSD in dB relative to its peak."""
        return 10 * np.log10(np.maximum(self.psd, 1e-300) / self.psd.max())

    def total_power(self):
        inside = [ln.weight for ln in self.lines
                  if self.grid[0] <= ln.freq <= self.grid[-1]]
        return float(np.trapezoid(self.psd, self.grid) + sum(inside))

    def to_csv(self, path, absolute=False):
        db = (10 * np.log10(np.maximum(self.psd, 1e-300)) if absolute
              else self.psd_db)
        with open(path, "w") as fh:
            fh.write("fT,psd_linear,psd_db\n")
            for f, v, d in zip(self.grid, self.psd, db):
                fh.write(f"{f:.17g},{v:.17g},{d:.17g}\n")

    def lines_to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("k,fT,weight\n")
            for ln in self.lines:
                fh.write(f"{ln.k},{ln.freq:.17g},{ln.weight:.17g}\n")


# ----------------------------------------------------------------------
# mean output and spectral lines

def mean_output(machine, sign="+"):
    """``m_y = sum_x P[x] Y_x(sign) p_inf`` as a length-``N_0`` vector."""
    nw = machine.n_words
    rows = machine.state_u()[None, :] * nw + np.arange(nw)[:, None]
    vals = (machine.word_probs[:, None] * machine.stationary[None, :]
            * machine.roots[machine.state_z(sign)][None, :])
    m = np.zeros(machine.n_outputs, dtype=complex)
    np.add.at(m, rows.ravel(), vals.ravel())
    return m


@dataclass(frozen=True, eq=False)
class LineTest:
    p: int
    has_lines: bool
    mean_plus: np.ndarray
    mean_minus: np.ndarray

    @property
    def max_mean(self):
        return float(np.abs(self.mean_plus).max())


def spectral_line_test(machine):
    """
    Decide whether the PSD carries lines.

    Lines exist iff ``p == 1``.  For ``p > 1`` the mean output must vanish;
    a nonzero mean is reported as a structure violation.
    """
    mp, mm = mean_output(machine, "+"), mean_output(machine, "-")
    has = machine.p == 1
    if not has and max(np.abs(mp).max(), np.abs(mm).max()) > MEAN_TOLERANCE:
        raise StructureViolationError(
            f"p={machine.p} but the mean output is {np.abs(mp).max():.3g}")
    return LineTest(machine.p, has, mp, mm)


# ----------------------------------------------------------------------
# closed form

def closed_form_psd(machine, grid=None, backend="direct", order=DEFAULT_ORDER,
                    sign="+", transforms=None, threshold=DEFAULT_SINGULAR_THRESHOLD,
                    workers=1, chunk=None):
    """
    Evaluate the closed-form PSD of ``machine`` on ``grid`` (units of ``f*T``).

    ``backend`` selects the resolvent evaluation ("direct" LU solves or
    "poly" adjugate polynomial).  Frequencies are processed in independent
    chunks of ``chunk`` frequencies; ``workers > 1`` maps them over a thread
    pool with the output order unchanged.
    """
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    lines_info = spectral_line_test(machine)
    tr = transforms if transforms is not None else pulse_transforms(machine, grid, order)
    nc, i0 = machine.n_c, machine.i0
    pi_s, pinf_m, pinf = machine.big_tpm[sign], machine.limit, machine.stationary
    res = make_resolvent(pi_s - pinf_m, backend, threshold)
    emb = class_embedding(machine, sign)
    # K2 and K1 lie in n_recent-dimensional subspaces, so the resolvent is
    # only needed between the two fixed bases
    left_basis = emb.T @ (np.eye(i0) - pinf_m)
    right_basis = emb.conj()
    psd = np.empty(grid.size)
    imag = np.zeros(grid.size)

    def work(sl):
        k0, k2u, c = reduced_aggregates(tr, sl)
        lam = np.exp(2j * np.pi * grid[sl] * nc)
        small = res.sandwich(left_basis, right_basis, lam)
        rr = np.einsum("uk,kuv,vk->k", k2u, small, c)
        mu = (emb @ k2u).T @ pinf
        psd[sl] = (k0.real - np.abs(mu) ** 2 + 2 * rr.real) / nc
        imag[sl] = np.abs(k0.imag) / nc

    slices = _chunks(grid.size, chunk or tr.chunk_size())
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            list(ex.map(work, slices))
    else:
        for sl in slices:
            work(sl)

    lines = []
    if lines_info.has_lines:
        ks = np.arange(int(np.ceil(grid[0] * nc)), int(np.floor(grid[-1] * nc)) + 1)
        tk = pulse_transforms(machine, ks / nc, tr.order)
        _, _, k2 = k_aggregates(tk, slice(None), sign)
        w = np.abs(k2.T @ pinf) ** 2 / nc ** 2
        lines = [SpectralLine(int(k), k / nc, float(v))
                 for k, v in zip(ks, w) if v > LINE_FLOOR]

    result = SpectrumResult(grid, psd, lines, {
        "format": machine.fmt.describe(),
        "N_c": nc,
        "I_0": i0,
        "p": machine.p,
        "backend": backend,
        "quadrature_order": tr.order,
        "trajectory": sign,
        "anchor_offset": machine.offset,
        "imag_residual": float(imag.max()),
        "min_value": float(psd.min()),
    })
    result.meta["total_power"] = result.total_power()
    return result


# ----------------------------------------------------------------------
# correlation ladder and series oracle

@dataclass(frozen=True, eq=False)
class CorrelationLadder:
    """
    Output-word correlation ``r_y(n) = E[y_{m+n} y_m^H]`` of the block machine.

    ``r_y(0)`` is diagonal; for ``n >= 1`` it is ``C2 Pi**(n-1) C1``; negative
    lags use ``r_y(-n) = r_y(n)^H``.  The limit is the rank-one matrix
    ``C2 Pi_inf C1 = (C2 p_inf)(1^T C1)``, kept factored.
    """

    machine: object
    sign: str
    c1: object
    c2: object
    r0: object

    @cached_property
    def rd_left(self):
        return np.asarray(self.c2 @ self.machine.stationary).ravel()

    @cached_property
    def rd_right(self):
        return np.asarray(np.ones(self.machine.i0) @ self.c1).ravel()

    def rd_max_abs(self):
        return float(np.abs(self.rd_left).max() * np.abs(self.rd_right).max())

    def rd_dense(self):
        return np.outer(self.rd_left, self.rd_right)

    def r(self, n):
        """Dense ``r_y(n)`` (small formats only)."""
        if n == 0:
            return self.r0.toarray()
        if n < 0:
            return self.r(-n).conj().T
        pk = np.linalg.matrix_power(self.machine.big_tpm[self.sign], n - 1)
        return np.asarray(self.c2 @ (self.c1.T @ pk.T).T)

    def r_max_abs(self, n):
        """``max|r_y(n)|`` for ``n >= 1`` without forming the ``N_0 x N_0`` matrix."""
        m = self.machine
        pk = np.linalg.matrix_power(m.big_tpm[self.sign], n - 1)
        b = np.asarray((self.c1.T @ pk.T).T)              # (I0, N_0)
        rz = m.roots[m.state_z(self.sign)]
        per_u = np.zeros((m.n_recent, b.shape[1]), dtype=complex)
        np.add.at(per_u, m.state_u(), rz[:, None] * b)
        return float(m.word_probs.max() * np.abs(per_u).max())


def correlation_ladder(machine, sign="+"):
    nw, i0 = machine.n_words, machine.i0
    x = np.repeat(np.arange(nw), i0)
    s = np.tile(np.arange(i0), nw)
    rows = machine.state_u()[s] * nw + x
    px = machine.word_probs[x]
    ps = machine.stationary[s]
    rz = machine.roots[machine.state_z(sign)][s]
    n0 = machine.n_outputs
    c2 = sp.csr_matrix((px * rz, (rows, s)), shape=(n0, i0))
    nxt = machine.next_state[sign][x, s]
    c1 = sp.csr_matrix((px * ps * rz.conj(), (nxt, rows)), shape=(i0, n0))
    r0 = sp.csr_matrix((px * ps, (rows, rows)), shape=(n0, n0))
    return CorrelationLadder(machine, sign, c1, c2, r0)


def filter_bank_samples(machine, t):
    """
    Interpolating filter bank ``phi(t)`` at block times ``t`` in ``[0, N_c)``.

    Built as the Kronecker product of one length-M factor per symbol
    position ``-L+1 .. N_c-1``; returns shape ``(len(t), N_0)``.
    """
    fmt = machine.fmt
    t = np.asarray(t, dtype=float)
    out = np.ones((t.size, 1), dtype=complex)
    for pos in range(-fmt.L + 1, machine.n_c):
        h = fmt.indices.r(pos) / fmt.p
        fac = np.exp(2j * np.pi * h * fmt.alphabet[None, :] * fmt.phase(t - pos)[:, None])
        out = (out[:, :, None] * fac[:, None, :]).reshape(t.size, -1)
    return out


def series_psd_oracle(machine, grid=None, truncation=400, order=DEFAULT_ORDER, sign="+"):
    """
    PSD from the truncated correlation series ``sum_{|n|<=N}`` (validation only).

    The filter-bank transform ``Phi(f)`` is integrated directly from the
    Kronecker bank and sandwiched around the correlation ladder, so this
    path shares no transform or aggregation code with
    :func:`closed_form_psd`.
    """
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    if truncation < 0:
        raise ValueError("truncation must be >= 0")
    ladder = correlation_ladder(machine, sign)
    nc = machine.n_c
    tau, wt = gauss_legendre(order)
    nodes = (tau[None, :] + np.arange(nc)[:, None]).ravel()
    weights = np.tile(wt, nc)
    bank = filter_bank_samples(machine, nodes)
    r0 = ladder.r0.diagonal()
    pi_s = machine.big_tpm[sign]
    psd = np.empty(grid.size)
    size = max(1, min(grid.size, 2 ** 22 // machine.n_outputs))
    for sl in _chunks(grid.size, size):
        f = grid[sl]
        kern = weights[None, :] * np.exp(-2j * np.pi * np.outer(f, nodes))
        phi = kern @ bank
        a0 = (np.abs(phi) ** 2) @ r0
        left = np.asarray(ladder.c2.T @ phi.T).T
        right = np.asarray(ladder.c1 @ phi.conj().T)
        d = (left @ machine.stationary) * right.sum(axis=0)
        acc = np.zeros(f.size, dtype=complex)
        vec = right
        lam_inv = np.exp(-2j * np.pi * f * nc)
        step = np.ones(f.size, dtype=complex)
        for _ in range(truncation):
            step = step * lam_inv
            acc += (np.einsum("fi,if->f", left, vec) - d) * step
            vec = pi_s @ vec
        psd[sl] = (a0 - d + 2 * acc).real / nc
    return SpectrumResult(grid, psd, [], {
        "format": machine.fmt.describe(), "N_c": nc, "I_0": machine.i0,
        "method": "series", "truncation": truncation, "quadrature_order": order,
    })
