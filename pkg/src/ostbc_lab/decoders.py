"""Maximum-likelihood decoding of orthogonal space-time block codes.

Because the real-valued lattice matrix of an orthogonal design satisfies
Hc^T Hc = sigma I with sigma = c ||H||_F^2, the ML decision decouples into
independent scalar quantizations of the matched-filter output

    xhat = Hc^T ycheck / sigma.

Four routes to the same soft vector are implemented:

* ``decode_lattice``   -- the real matrix-vector product above,
* ``decode_trace``     -- complex trace form, shat_k = [Re tr(H^H A_k^H Y)
  + i Im tr(H^H B_k^H Y)] / (c ||H||^2); the imaginary part enters with a
  plus sign because the matched filter for Im(s_k) is the B_k direction,
* ``decode_F``         -- the complex equivalent-channel pair (F_a, F_b)
  applied to the vectorized receive block z,
* ``decode_Fprime``    -- its real 2MT x 2K form applied to z'.

All four return identical interleaved soft vectors up to rounding, and each
feeds the same per-component quantizer.  ``exhaustive_ml`` is the brute-force
reference that minimizes ||ycheck - Hc x||^2 over the full candidate grid
without using orthogonality.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .codes import DispersionCode
from .constellation import Constellation, quantize_indices
from .lattice import (
    ChannelRealization,
    RealLattice,
    build_F,
    interleaving_perm,
)

__all__ = [
    "SoftEstimate",
    "DecodedMessage",
    "DegenerateChannelError",
    "SearchSpaceError",
    "decode_lattice",
    "decode_trace",
    "decode_F",
    "decode_Fprime",
    "exhaustive_ml",
    "MAX_SEARCH_SPACE",
]

MAX_SEARCH_SPACE = 2 ** 24


class DegenerateChannelError(ValueError):
    """All-zero channel: sigma = 0 and the matched filter is undefined."""


class SearchSpaceError(ValueError):
    """Exhaustive candidate grid would exceed MAX_SEARCH_SPACE points."""


@dataclass(frozen=True)
class SoftEstimate:
    """Unquantized matched-filter output.

    Attributes
    ----------
    z : ndarray, shape (2K,)
        Interleaved real estimate (Re s_1, Im s_1, ..., Re s_K, Im s_K).
    """

    z: np.ndarray

    @property
    def symbols(self) -> np.ndarray:
        """Complex view, shape (K,)."""
        return self.z[0::2] + 1j * self.z[1::2]


@dataclass(frozen=True)
class DecodedMessage:
    """Hard decision after per-component quantization.

    Attributes
    ----------
    xhat : ndarray, shape (2K,)
        Quantized real components.
    shat : ndarray, shape (K,)
        The same decision as complex symbols.
    indices : ndarray, shape (2K,)
        Component alphabet indices of each decision.
    """

    xhat: np.ndarray
    shat: np.ndarray
    indices: np.ndarray


def _decide(z: np.ndarray, constellation: Constellation) -> DecodedMessage:
    idx = quantize_indices(z, constellation.component_alphabet)
    xhat = constellation.component_alphabet[idx]
    return DecodedMessage(xhat=xhat, shat=xhat[0::2] + 1j * xhat[1::2],
                          indices=idx)


def _check_sigma(sigma: float) -> None:
    if sigma <= 0.0:
        raise DegenerateChannelError("sigma = 0; all-zero channel realization")


def decode_lattice(lat: RealLattice, ycheck,
                   constellation: Constellation) -> tuple[SoftEstimate, DecodedMessage]:
    """ML decode from the real lattice: xhat = Hc^T ycheck / sigma."""
    _check_sigma(lat.sigma)
    ycheck = np.asarray(ycheck, dtype=float)
    z = lat.hcheck.T @ ycheck / lat.sigma
    soft = SoftEstimate(z=z)
    return soft, _decide(z, constellation)


def decode_trace(code: DispersionCode, channel, Y,
                 constellation: Constellation,
                 c: int | None = None) -> tuple[SoftEstimate, DecodedMessage]:
    """ML decode via complex traces of the matched dispersion directions."""
    ch = ChannelRealization.from_matrix(channel) \
        if not isinstance(channel, ChannelRealization) else channel
    c = code.c if c is None else c
    sigma = c * float(np.sum(ch.h * ch.h))
    _check_sigma(sigma)
    Y = np.asarray(Y, dtype=complex)
    Hh = ch.matrix.conj().T
    z = np.empty(2 * code.k)
    for k in range(code.k):
        z[2 * k] = np.trace(Hh @ code.a[k].conj().T @ Y).real / sigma
        z[2 * k + 1] = np.trace(Hh @ code.b[k].conj().T @ Y).imag / sigma
    soft = SoftEstimate(z=z)
    return soft, _decide(z, constellation)


def decode_F(code: DispersionCode, channel, z_vec,
             constellation: Constellation,
             c: int | None = None) -> tuple[SoftEstimate, DecodedMessage]:
    """ML decode from the complex equivalent channel applied to z = vec(Y)."""
    ch = ChannelRealization.from_matrix(channel) \
        if not isinstance(channel, ChannelRealization) else channel
    c = code.c if c is None else c
    sigma = c * float(np.sum(ch.h * ch.h))
    _check_sigma(sigma)
    z_vec = np.asarray(z_vec, dtype=complex).ravel()
    fa, fb = build_F(code, ch)
    z = np.empty(2 * code.k)
    z[0::2] = (fa.conj().T @ z_vec).real / sigma
    z[1::2] = (fb.conj().T @ z_vec).real / sigma
    soft = SoftEstimate(z=z)
    return soft, _decide(z, constellation)


def decode_Fprime(code: DispersionCode, channel, zprime,
                  constellation: Constellation,
                  c: int | None = None) -> tuple[SoftEstimate, DecodedMessage]:
    """ML decode from the real 2MT x 2K equivalent channel applied to z'."""
    ch = ChannelRealization.from_matrix(channel) \
        if not isinstance(channel, ChannelRealization) else channel
    c = code.c if c is None else c
    sigma = c * float(np.sum(ch.h * ch.h))
    _check_sigma(sigma)
    zprime = np.asarray(zprime, dtype=float).ravel()
    fa, fb = build_F(code, ch)
    fc = np.hstack([fa, fb])
    fprime = np.vstack([fc.real, fc.imag])
    # F'^T z' comes out grouped (Re s_1..s_K; Im s_1..s_K); interleave it.
    grouped = fprime.T @ zprime / sigma
    z = grouped[interleaving_perm(code.k)]
    soft = SoftEstimate(z=z)
    return soft, _decide(z, constellation)


@lru_cache(maxsize=32)
def _candidate_grid(alphabet: tuple[float, ...], dims: int) -> np.ndarray:
    """All candidate x vectors, shape (dims, L**dims), lexicographic order.

    Column j enumerates component indices with the first dimension most
    significant, matching itertools.product over the alphabet.
    """
    n = len(alphabet)
    total = n ** dims
    grid = np.empty((dims, total))
    alpha = np.asarray(alphabet)
    for d in range(dims):
        reps = n ** (dims - d - 1)
        tile = n ** d
        grid[d] = np.tile(np.repeat(alpha, reps), tile)
    return grid


def exhaustive_ml(lat: RealLattice, ycheck,
                  constellation: Constellation) -> tuple[DecodedMessage, float]:
    """Brute-force ML: argmin_x ||ycheck - Hc x||^2 over the full grid.

    No orthogonality shortcut is taken; this is the reference the fast
    decoders are checked against.  Ties resolve to the lexicographically
    first candidate (component indices enumerated most-significant-first).

    Returns
    -------
    (decision, metric)
        metric is ||Hc x||^2 - 2 ycheck^T Hc x for the winner, i.e. the
        squared distance up to the candidate-independent ||ycheck||^2.
    """
    dims = lat.hcheck.shape[1]
    levels = constellation.levels
    if levels ** dims > MAX_SEARCH_SPACE:
        raise SearchSpaceError(
            f"{levels}**{dims} candidates exceed {MAX_SEARCH_SPACE}")
    ycheck = np.asarray(ycheck, dtype=float)
    grid = _candidate_grid(tuple(constellation.component_alphabet), dims)
    hx = lat.hcheck @ grid
    metric = np.sum(hx * hx, axis=0) - 2.0 * (ycheck @ hx)
    best = int(np.argmin(metric))
    idx = np.array(np.unravel_index(best, (levels,) * dims))
    xhat = constellation.component_alphabet[idx]
    decision = DecodedMessage(xhat=xhat, shat=xhat[0::2] + 1j * xhat[1::2],
                              indices=idx)
    return decision, float(metric[best])
