"""
Dense complex linear algebra used by the state machine and spectrum code.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128`` in
row-major, 0-indexed layout.  Everything built from exact inputs (0/1
entries, probabilities, roots of unity) is assembled without arithmetic
that could perturb structural zeros.

Storage is dense on purpose: the state count of a CPM machine is
``I = 2p * M**(L-1)`` and the polyphase resolvent works on
``I0 = p * M**(L-1)``, so desk-scale formats stay in the low hundreds.

Functions
---------
kron, kron_chain, kron_power
    Kronecker products with the ``(i_a*rows_b + i_b, j_a*cols_b + j_b)``
    index convention.
cyclic_shift_power
    Powers of the single-step cyclic shift ``D_n``.
unit_roots
    Table of n-th roots of unity with exact quarter-turn values.
char_poly
    Faddeev-LeVerrier characteristic polynomial coefficients.
DirectResolvent, PolynomialResolvent, resolvent_apply
    Evaluation of ``(lam*I - F)^-1`` by LU solves or by the adjugate
    matrix polynomial.
"""

import numpy as np

from .errors import InvalidDimensionError, NearSingularResolventError

DEFAULT_SINGULAR_THRESHOLD = 1e-12


def _as_matrix(a):
    a = np.asarray(a, dtype=complex)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise InvalidDimensionError(f"expected a matrix, got ndim={a.ndim}")
    return a


def _require_square(f):
    f = _as_matrix(f)
    if f.shape[0] != f.shape[1]:
        raise InvalidDimensionError(f"matrix must be square, got {f.shape}")
    return f


def kron(a, b):
    """Kronecker product ``a (x) b`` of two matrices (vectors are columns)."""
    return np.kron(_as_matrix(a), _as_matrix(b))


def kron_chain(*factors):
    """Left-to-right Kronecker product of any number of factors."""
    if not factors:
        return np.ones((1, 1), dtype=complex)
    out = _as_matrix(factors[0])
    for f in factors[1:]:
        out = np.kron(out, _as_matrix(f))
    return out


def kron_power(a, k):
    """k-th Kronecker power; ``kron_power(a, 0)`` is the 1x1 identity."""
    if k < 0:
        raise InvalidDimensionError("Kronecker power must be non-negative")
    return kron_chain(*([a] * k))


def cyclic_shift_power(size, exponent):
    """
    Return ``D_size ** exponent``.

    ``D`` has ones at ``(i, j)`` with ``i = j + 1 (mod size)``, i.e. the
    first row holds its 1 in the last column.  With this orientation
    ``D**e`` has ``(i, j) = 1`` iff ``i = (j + e) mod size``, which is the
    phase-state update ``z' = (z + r*a) mod 2p`` written as a matrix acting
    on column indicator vectors.
    """
    if size < 1:
        raise InvalidDimensionError("shift matrix size must be >= 1")
    e = int(exponent) % size
    out = np.zeros((size, size), dtype=complex)
    cols = np.arange(size)
    out[(cols + e) % size, cols] = 1.0
    return out


def unit_roots(n):
    """
    Table ``[W_n**k for k in range(n)]`` with ``W_n = exp(2j*pi/n)``.

    Quarter-turn values (1, j, -1, -j) are exact.  For even ``n`` every odd
    power is formed as ``W_n * W_n**(k-1)`` so that odd-indexed entries are
    bit-exactly ``W_n`` times the preceding even-indexed ones.
    """
    if n < 1:
        raise InvalidDimensionError("root order must be >= 1")
    k = np.arange(n)
    ang = 2.0 * np.pi * k / n
    re, im = np.cos(ang), np.sin(ang)
    quarter = (4 * k) % n == 0
    turns = (4 * k[quarter]) // n
    re[quarter] = np.array([1.0, 0.0, -1.0, 0.0])[turns]
    im[quarter] = np.array([0.0, 1.0, 0.0, -1.0])[turns]
    roots = re + 1j * im
    if n % 2 == 0 and n > 1:
        roots[1::2] = roots[1] * roots[0::2]
    return roots


def char_poly(f):
    """
    Coefficients ``d_0..d_I`` of ``det(x*I - F) = sum_k d_k x**(I-k)``.

    Computed with the Faddeev-LeVerrier trace recurrence, so ``d_0 == 1``.
    """
    return _faddeev_leverrier(_require_square(f))[0]


def _faddeev_leverrier(f):
    # returns (d, G) with G[k] = sum_m d_{k-m} F^m, the adjugate coefficients
    n = f.shape[0]
    d = np.zeros(n + 1, dtype=complex)
    d[0] = 1.0
    g = np.empty((n, n, n), dtype=complex)
    eye = np.eye(n, dtype=complex)
    m = eye
    for k in range(1, n + 1):
        g[k - 1] = m
        am = f @ m
        d[k] = -np.trace(am) / k
        m = am + d[k] * eye
    return d, g


def poly_eval(coeffs, x):
    """Evaluate ``sum_k coeffs[k] * x**(deg-k)`` by Horner's rule (vectorized in x)."""
    x = np.asarray(x, dtype=complex)
    acc = np.zeros_like(x)
    for c in coeffs:
        acc = acc * x + c
    return acc


class DirectResolvent:
    """
    Resolvent of F evaluated with one LU solve per lambda.

    Near-singularity is judged by the distance from ``lam`` to the spectrum
    of F, computed once at construction.
    """

    def __init__(self, f, threshold=DEFAULT_SINGULAR_THRESHOLD):
        self.f = _require_square(f)
        self.size = self.f.shape[0]
        self.threshold = threshold
        self._eigs = np.linalg.eigvals(self.f) if self.size else np.zeros(0)

    def _check(self, lam):
        lam = np.atleast_1d(np.asarray(lam, dtype=complex))
        if not self.size:
            return
        dist = np.abs(lam[:, None] - self._eigs[None, :]).min(axis=1)
        bad = np.flatnonzero(dist < self.threshold)
        if bad.size:
            i = bad[0]
            raise NearSingularResolventError(lam[i], dist[i], self.threshold)

    def apply(self, lam, rhs):
        """Return ``(lam*I - F)^-1 @ rhs`` for a single complex ``lam``."""
        self._check(lam)
        a = lam * np.eye(self.size, dtype=complex) - self.f
        return np.linalg.solve(a, np.asarray(rhs, dtype=complex))

    def bilinear(self, left, right, lam, chunk=256):
        """
        Evaluate ``left[k] @ (lam[k]*I - F)^-1 @ right[k]`` for every k.

        ``left`` and ``right`` have shape ``(K, I)``; ``lam`` has shape ``(K,)``.
        """
        lam = np.asarray(lam, dtype=complex)
        self._check(lam)
        left = np.asarray(left, dtype=complex)
        right = np.asarray(right, dtype=complex)
        out = np.empty(lam.shape[0], dtype=complex)
        eye = np.eye(self.size, dtype=complex)
        for s in range(0, lam.shape[0], chunk):
            sl = slice(s, s + chunk)
            a = lam[sl, None, None] * eye - self.f
            x = np.linalg.solve(a, right[sl, :, None])[..., 0]
            out[sl] = np.einsum("ki,ki->k", left[sl], x)
        return out


    def sandwich(self, left_basis, right_basis, lam, chunk=256):
        """
        ``left_basis @ (lam[k]*I - F)^-1 @ right_basis`` for every k.

        ``left_basis`` is ``(r1, I)`` and ``right_basis`` is ``(I, r2)``;
        returns shape ``(K, r1, r2)``.  Used when the bilinear vectors live
        in fixed low-dimensional subspaces.
        """
        lam = np.asarray(lam, dtype=complex)
        self._check(lam)
        lb = np.asarray(left_basis, dtype=complex)
        rb = np.asarray(right_basis, dtype=complex)
        out = np.empty((lam.shape[0], lb.shape[0], rb.shape[1]), dtype=complex)
        eye = np.eye(self.size, dtype=complex)
        for s in range(0, lam.shape[0], chunk):
            sl = slice(s, s + chunk)
            a = lam[sl, None, None] * eye - self.f
            x = np.linalg.solve(a, np.broadcast_to(rb, (a.shape[0],) + rb.shape))
            out[sl] = lb @ x
        return out


class PolynomialResolvent:
    """
    Resolvent of F through its adjugate polynomial.

    ``(lam*I - F)^-1 = sum_k G_k lam**(I-1-k) / d(lam)`` where ``d`` is the
    characteristic polynomial and ``G_k = sum_m d_{k-m} F**m``.  The
    ``G_k`` stack is precomputed once, after which a sweep over many
    lambdas reduces to one matrix product plus Horner evaluations.
    """

    def __init__(self, f, threshold=DEFAULT_SINGULAR_THRESHOLD):
        self.f = _require_square(f)
        self.size = self.f.shape[0]
        self.threshold = threshold
        self.coeffs, self.adjugate_terms = _faddeev_leverrier(self.f)

    def det(self, lam):
        return poly_eval(self.coeffs, lam)

    def _denominator(self, lam):
        den = self.det(lam)
        small = np.flatnonzero(np.abs(np.atleast_1d(den)) < self.threshold)
        if small.size:
            i = small[0]
            lam1 = np.atleast_1d(lam)
            raise NearSingularResolventError(
                lam1[i], abs(np.atleast_1d(den)[i]), self.threshold
            )
        return den

    def apply(self, lam, rhs):
        lam = complex(lam)
        den = self._denominator(lam)
        acc = np.zeros((self.size, self.size), dtype=complex)
        for g in self.adjugate_terms:
            acc = acc * lam + g
        return (acc @ np.asarray(rhs, dtype=complex)) / den

    def bilinear(self, left, right, lam, chunk=256):
        """Same contract as :meth:`DirectResolvent.bilinear`."""
        lam = np.asarray(lam, dtype=complex)
        den = self._denominator(lam)
        n = self.size
        left = np.asarray(left, dtype=complex)
        right = np.asarray(right, dtype=complex)
        stack = self.adjugate_terms.reshape(n * n, n)
        out = np.empty(lam.shape[0], dtype=complex)
        for s in range(0, lam.shape[0], chunk):
            sl = slice(s, s + chunk)
            y = (stack @ right[sl].T).reshape(n, n, -1)
            t = np.einsum("ki,jik->jk", left[sl], y)
            acc = np.zeros(t.shape[1], dtype=complex)
            for row in t:
                acc = acc * lam[sl] + row
            out[sl] = acc
        return out / den

    def sandwich(self, left_basis, right_basis, lam, chunk=256):
        """Same contract as :meth:`DirectResolvent.sandwich`."""
        lam = np.asarray(lam, dtype=complex)
        den = self._denominator(lam)
        lb = np.asarray(left_basis, dtype=complex)
        rb = np.asarray(right_basis, dtype=complex)
        # reduced adjugate terms, after which each lambda is a small Horner sweep
        h = lb[None] @ self.adjugate_terms @ rb[None]
        out = np.zeros((lam.shape[0],) + h.shape[1:], dtype=complex)
        for hk in h:
            out = out * lam[:, None, None] + hk
        return out / den[:, None, None]


_BACKENDS = {"direct": DirectResolvent, "poly": PolynomialResolvent}


def make_resolvent(f, backend="direct", threshold=DEFAULT_SINGULAR_THRESHOLD):
    try:
        cls = _BACKENDS[backend]
    except KeyError:
        raise ValueError(f"unknown resolvent backend {backend!r}") from None
    return cls(f, threshold=threshold)


def resolvent_apply(f, lam, rhs, backend="direct",
                    threshold=DEFAULT_SINGULAR_THRESHOLD):
    """Return ``(lam*I - F)^-1 @ rhs`` using the chosen backend."""
    return make_resolvent(f, backend, threshold).apply(lam, rhs)
