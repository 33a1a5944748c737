"""Equivalent real-valued lattice of an orthogonal space-time block code.

With Y = G(s) H + V received over M antennas, stacking the columns of Y and
interleaving real and imaginary parts turns the system into a real one:

    y_check = H_check @ x + v_check

where x = (Re s_1, Im s_1, ..., Re s_K, Im s_K) and H_check is 2MT x 2K with

    H_check^T H_check = sigma * I,      sigma = c * ||H||_F^2.

Channel coefficients are flattened the same way: h_(2l-1+2(j-1)N) = Re h_{l,j}
and h_(2l+2(j-1)N) = Im h_{l,j} (1-based), i.e. Re/Im interleaved down each
channel column.

H_check is assembled by the complex route: F_a has columns vec(A_k H), F_b has
columns 1j * vec(B_k H), the real stack F' = [[Re F_a, Re F_b],
[Im F_a, Im F_b]] relates grouped vectors, and two pure index permutations
(grouped <-> interleaved) reorder rows and columns into H_check.  The
construction here is carried out symbolically: every H_check entry is kept as
an exact integer-tagged linear form over the flattened channel coefficients,
so the matrix doubles as input to the operation scheduler and evaluates
deterministically.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .codes import _TAG_VALUES, DispersionCode

__all__ = [
    "Term",
    "LinForm",
    "ChannelRealization",
    "ComplexStack",
    "SymbolicLattice",
    "RealLattice",
    "LatticeReport",
    "interleaving_perm",
    "h_index",
    "build_symbolic_lattice",
    "build_F",
    "build_check_H",
    "vectorize_received",
    "complex_stack",
    "deinterleave",
    "verify_lattice",
    "evaluate_lattice",
    "evaluate_lattice_batch",
    "linform_value",
    "write_hcheck_csv",
]

# one additive term of a lattice entry: (flattened channel index, entry tag)
Term = tuple[int, int]
# exact lattice entry: sum of terms, ascending channel index, empty == zero
LinForm = tuple[Term, ...]


def h_index(l: int, j: int, imag: bool, n: int) -> int:
    """Flattened index of Re/Im of channel coefficient h_{l+1, j+1} (0-based l, j)."""
    return 2 * l + (1 if imag else 0) + 2 * j * n


def interleaving_perm(n: int) -> np.ndarray:
    """Index map p with interleaved[i] = grouped[p[i]] for n complex values.

    Grouped layout is (Re_1..Re_n, Im_1..Im_n); interleaved is
    (Re_1, Im_1, ..., Re_n, Im_n).
    """
    p = np.empty(2 * n, dtype=np.intp)
    p[0::2] = np.arange(n)
    p[1::2] = n + np.arange(n)
    return p


@dataclass(frozen=True)
class ChannelRealization:
    """A channel matrix together with its flattened real coefficient vector.

    Attributes
    ----------
    matrix : ndarray, complex, shape (N, M)
    h : ndarray, float, shape (2NM,)
        Re/Im interleaved down each column of `matrix`.
    """

    matrix: np.ndarray
    h: np.ndarray

    @classmethod
    def from_matrix(cls, matrix) -> "ChannelRealization":
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.ndim != 2:
            raise ValueError("channel matrix must be 2-D (N x M)")
        flat = matrix.ravel(order="F")
        h = np.empty(2 * flat.size)
        h[0::2] = flat.real
        h[1::2] = flat.imag
        matrix = matrix.copy()
        matrix.setflags(write=False)
        h.setflags(write=False)
        return cls(matrix=matrix, h=h)

    @classmethod
    def from_h(cls, h, n: int, m: int) -> "ChannelRealization":
        h = np.asarray(h, dtype=float)
        if h.shape != (2 * n * m,):
            raise ValueError(f"expected {2 * n * m} real coefficients, got {h.shape}")
        matrix = (h[0::2] + 1j * h[1::2]).reshape((n, m), order="F")
        return cls.from_matrix(matrix)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def m(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class ComplexStack:
    """Column stack of the received block: z = vec(Y), zprime = (Re z; Im z)."""

    z: np.ndarray
    zprime: np.ndarray


@dataclass(frozen=True)
class SymbolicLattice:
    """H_check with every entry an exact linear form over channel coefficients."""

    code: DispersionCode
    m: int
    entries: tuple[tuple[LinForm, ...], ...]  # [2MT][2K]

    @property
    def rows(self) -> int:
        return 2 * self.m * self.code.t

    @property
    def cols(self) -> int:
        return 2 * self.code.k

    def scatter(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Flattened term arrays (positions, h indices, coefficients).

        Terms are ordered entry-major (row-major positions) and ascending
        channel index within an entry, which fixes the floating-point
        accumulation order everywhere the matrix is evaluated.
        """
        return _scatter_arrays(self)


@lru_cache(maxsize=None)
def _scatter_arrays(sym: SymbolicLattice):
    pos, hidx, coef = [], [], []
    cols = sym.cols
    for i, row in enumerate(sym.entries):
        for j, form in enumerate(row):
            for idx, tag in form:
                pos.append(i * cols + j)
                hidx.append(idx)
                coef.append(_TAG_VALUES[tag])
    out = (np.asarray(pos, dtype=np.intp), np.asarray(hidx, dtype=np.intp),
           np.asarray(coef))
    for arr in out:
        arr.setflags(write=False)
    return out


def linform_value(form: LinForm, h: np.ndarray) -> float:
    """Evaluate one entry at a coefficient vector (terms in stored order)."""
    acc = 0.0
    for idx, tag in form:
        acc += _TAG_VALUES[tag] * h[idx]
    return acc


@lru_cache(maxsize=None)
def build_symbolic_lattice(code: DispersionCode, m: int) -> SymbolicLattice:
    """Construct the exact 2MT x 2K lattice matrix for M receive antennas.

    Assembles symbolic F_a / F_b column by column, stacks real over imaginary
    parts into F', and applies the two interleaving permutations as index
    maps.  The result is cached per (code, M).
    """
    if m < 1:
        raise ValueError("receive antenna count must be positive")
    n, t, k = code.n, code.t, code.k
    mt = m * t
    # grouped real stack F': rows 0..MT-1 = Re, MT..2MT-1 = Im;
    # cols 0..K-1 from F_a, K..2K-1 from F_b
    fprime = [[() for _ in range(2 * k)] for _ in range(2 * mt)]
    for ki in range(k):
        a_k, b_k = code.a_tags[ki], code.b_tags[ki]
        for j in range(m):
            for ti in range(t):
                p = j * t + ti
                re_a, im_a, re_b, im_b = [], [], [], []
                for l in range(n):
                    tag = a_k[ti][l]
                    if tag:
                        re_a.append((h_index(l, j, False, n), tag))
                        im_a.append((h_index(l, j, True, n), tag))
                    tag = b_k[ti][l]
                    if tag:
                        # F_b holds 1j * (B_k H): Re = -Im(B_k H), Im = +Re(B_k H)
                        re_b.append((h_index(l, j, True, n), -tag))
                        im_b.append((h_index(l, j, False, n), tag))
                fprime[p][ki] = tuple(re_a)
                fprime[mt + p][ki] = tuple(im_a)
                fprime[p][k + ki] = tuple(re_b)
                fprime[mt + p][k + ki] = tuple(im_b)
    perm_y = interleaving_perm(mt)
    perm_s = interleaving_perm(k)
    entries = tuple(
        tuple(fprime[perm_y[i]][perm_s[jj]] for jj in range(2 * k))
        for i in range(2 * mt))
    return SymbolicLattice(code=code, m=m, entries=entries)


def evaluate_lattice(sym: SymbolicLattice, h: np.ndarray) -> np.ndarray:
    """Numeric H_check at one coefficient vector, shape (2MT, 2K)."""
    pos, hidx, coef = sym.scatter()
    flat = np.zeros(sym.rows * sym.cols)
    np.add.at(flat, pos, coef * h[hidx])
    return flat.reshape(sym.rows, sym.cols)


def evaluate_lattice_batch(sym: SymbolicLattice, h: np.ndarray) -> np.ndarray:
    """Numeric H_check for a batch of coefficient vectors (B, 2NM) -> (B, 2MT, 2K)."""
    pos, hidx, coef = sym.scatter()
    flat = np.zeros((h.shape[0], sym.rows * sym.cols))
    np.add.at(flat, (slice(None), pos), coef * h[:, hidx])
    return flat.reshape(h.shape[0], sym.rows, sym.cols)


@dataclass(frozen=True)
class RealLattice:
    """Numeric lattice for one channel realization."""

    code_id: str
    m: int
    hcheck: np.ndarray  # (2MT, 2K), read-only
    sigma: float        # c * ||H||_F^2
    c: int


def _as_channel(code: DispersionCode, channel) -> ChannelRealization:
    if isinstance(channel, ChannelRealization):
        ch = channel
    else:
        ch = ChannelRealization.from_matrix(channel)
    if ch.n != code.n:
        raise ValueError(
            f"channel has {ch.n} rows but code {code.id!r} uses {code.n} "
            f"transmit antennas")
    return ch


def build_check_H(code: DispersionCode, channel) -> RealLattice:
    """Build the numeric real lattice for a channel realization.

    Parameters
    ----------
    code : DispersionCode
    channel : ChannelRealization or array_like, complex, shape (N, M)

    Returns
    -------
    RealLattice
        With sigma = c * ||H||_F^2; the value is cross-checked against the
        first column's self inner product at build time.
    """
    ch = _as_channel(code, channel)
    sym = build_symbolic_lattice(code, ch.m)
    hc = evaluate_lattice(sym, ch.h)
    sigma = code.c * float(np.sum(ch.h * ch.h))
    col = float(np.dot(hc[:, 0], hc[:, 0]))
    if abs(col - sigma) > 1e-9 * max(sigma, 1e-300):
        raise ArithmeticError(
            f"sigma routes disagree: column route {col!r}, norm route {sigma!r}")
    hc.setflags(write=False)
    return RealLattice(code_id=code.id, m=ch.m, hcheck=hc, sigma=sigma, c=code.c)


def build_F(code: DispersionCode, channel) -> tuple[np.ndarray, np.ndarray]:
    """Complex mixing matrices: F_a[:, k] = vec(A_k H), F_b[:, k] = 1j vec(B_k H).

    vec() stacks columns, so row p corresponds to time slot p mod T at
    receive antenna p div T.  Both matrices have shape (MT, K).
    """
    ch = _as_channel(code, channel)
    fa = np.stack([(code.a[k] @ ch.matrix).ravel(order="F")
                   for k in range(code.k)], axis=1)
    fb = np.stack([1j * (code.b[k] @ ch.matrix).ravel(order="F")
                   for k in range(code.k)], axis=1)
    return fa, fb


def vectorize_received(y_block) -> np.ndarray:
    """T x M received block -> interleaved real vector of length 2MT."""
    z = np.asarray(y_block, dtype=complex).ravel(order="F")
    yv = np.empty(2 * z.size)
    yv[0::2] = z.real
    yv[1::2] = z.imag
    return yv


def complex_stack(y_block) -> ComplexStack:
    """T x M received block -> (z = vec(Y), zprime = (Re z; Im z))."""
    z = np.asarray(y_block, dtype=complex).ravel(order="F")
    return ComplexStack(z=z, zprime=np.concatenate([z.real, z.imag]))


def deinterleave(yv: np.ndarray) -> np.ndarray:
    """Inverse of the Re/Im interleave: 2n reals -> n complex values."""
    yv = np.asarray(yv, dtype=float)
    if yv.ndim != 1 or yv.size % 2:
        raise ValueError("interleaved vector must be 1-D with even length")
    return yv[0::2] + 1j * yv[1::2]


@dataclass(frozen=True)
class LatticeReport:
    """Orthogonality diagnostics of a numeric lattice, all relative to sigma."""

    passed: bool
    degenerate: bool
    sigma: float
    max_offdiag_rel: float
    max_diag_spread_rel: float
    sigma_mismatch_rel: float
    tol: float


def verify_lattice(lat: RealLattice, tol: float = 1e-9) -> LatticeReport:
    """Check H_check^T H_check = sigma I and the two sigma routes agree."""
    sigma = lat.sigma
    if sigma == 0.0:
        return LatticeReport(passed=False, degenerate=True, sigma=0.0,
                             max_offdiag_rel=0.0, max_diag_spread_rel=0.0,
                             sigma_mismatch_rel=0.0, tol=tol)
    gram = lat.hcheck.T @ lat.hcheck
    diag = np.diagonal(gram)
    off = gram - np.diag(diag)
    max_off = float(np.max(np.abs(off))) / sigma
    max_spread = float(np.max(np.abs(diag - sigma))) / sigma
    mismatch = abs(float(np.dot(lat.hcheck[:, 0], lat.hcheck[:, 0])) - sigma) / sigma
    passed = max_off <= tol and max_spread <= tol and mismatch <= tol
    return LatticeReport(passed=passed, degenerate=False, sigma=sigma,
                         max_offdiag_rel=max_off, max_diag_spread_rel=max_spread,
                         sigma_mismatch_rel=mismatch, tol=tol)


def write_hcheck_csv(lat: RealLattice, path) -> None:
    """Dump H_check row-major as CSV with full-precision floats."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for row in lat.hcheck:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
