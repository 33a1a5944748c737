"""Seeded Monte-Carlo harness: channel sampling, trials, and error sweeps.

Model per trial: s drawn uniformly from the constellation, H and the noise
with i.i.d. CN(0,1) / CN(0,N0) entries, and the received block formed in the
real lattice domain as ycheck = Hc x + vcheck.  SNR is per-receive-antenna
E_s/N_0 in dB with unit average transmit-symbol energy, so N0 = 10^(-snr/10)
and each real noise dimension has variance N0/2.  snr = inf runs the
noise-free model (the noise draw still happens, keeping streams aligned).

Determinism: every trial owns a Philox substream keyed by
(seed, point_index << 32 | trial_index) with a fixed draw order (channel,
symbol indices, noise), so results are independent of chunking, worker
count, and trial interleaving.  ``run_trial`` is the one-trial view of the
same arithmetic the batched sweep uses.

Error counting uses the first selected decoder; any further selected
decoders are run per trial and compared, with disagreements counted
(an agreement below 100% is a bug surface, not a statistic).  JSON output
may contain the non-standard Infinity token when snr = inf is simulated.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .codes import RSQRT2, get_code
from .constellation import get_constellation, quantize_indices
from .decoders import (
    DecodedMessage,
    decode_F,
    decode_Fprime,
    decode_lattice,
    decode_trace,
    exhaustive_ml,
)
from .lattice import (
    ChannelRealization,
    RealLattice,
    build_symbolic_lattice,
    complex_stack,
    deinterleave,
    evaluate_lattice_batch,
)

__all__ = [
    "SimConfig",
    "TrialResult",
    "PointResult",
    "BerResult",
    "DECODER_NAMES",
    "SCHEMA",
    "sample_channel",
    "run_trial",
    "run_ber",
    "ber_to_json",
    "ber_to_csv",
    "resolve_workers",
]

SCHEMA = "ostbc-lab/1"
DECODER_NAMES = ("lattice", "trace", "f", "fprime", "exhaustive")
_RSQRT2 = RSQRT2
_CHUNK = 8192


@dataclass(frozen=True)
class SimConfig:
    """Full description of one simulation run; results are a pure function
    of this object."""

    code: str
    constellation: str
    snr_db: tuple[float, ...]
    trials: int
    seed: int
    m: int = 1
    decoders: tuple[str, ...] = ("lattice",)

    def __post_init__(self):
        object.__setattr__(self, "snr_db", tuple(float(s) for s in self.snr_db))
        decs = self.decoders
        if isinstance(decs, str):
            decs = (decs,)
        if "all" in decs:
            decs = DECODER_NAMES
        object.__setattr__(self, "decoders", tuple(decs))
        if not self.snr_db:
            raise ValueError("snr_db must be nonempty")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in 64 bits")
        if self.m < 1:
            raise ValueError("m must be >= 1")
        bad = [d for d in self.decoders if d not in DECODER_NAMES]
        if bad:
            raise ValueError(f"unknown decoders {bad}; pick from "
                             f"{DECODER_NAMES + ('all',)}")


@dataclass(frozen=True)
class TrialResult:
    """One trial: what was sent and what each selected decoder returned."""

    sent: np.ndarray          # (2K,) component alphabet indices
    decoded: dict[str, DecodedMessage]
    agreement: bool
    redraws: int


@dataclass(frozen=True)
class PointResult:
    snr_db: float
    trials: int
    sym_errors: int
    bit_errors: int
    ser: float
    ber: float
    redraws: int
    disagreements: int


@dataclass(frozen=True)
class BerResult:
    config: SimConfig
    rng: str
    points: tuple[PointResult, ...]

    @property
    def agreement(self) -> float:
        total = sum(p.trials for p in self.points)
        bad = sum(p.disagreements for p in self.points)
        return 1.0 - bad / total


def sample_channel(n: int, m: int, rng: np.random.Generator) -> ChannelRealization:
    """Draw H with i.i.d. CN(0,1) entries (Re, Im each Normal(0, 1/2))."""
    h = rng.standard_normal(2 * n * m) * _RSQRT2
    return ChannelRealization.from_h(h, n, m)


def _noise_scale(snr_db: float) -> float:
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    return math.sqrt(10.0 ** (-snr_db / 10.0) / 2.0)


def _trial_rng(seed: int, point: int, trial: int) -> np.random.Generator:
    key = np.array([seed, (point << 32) | trial], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _draw_trial(rng, n, m, t, k, size, scale):
    """Fixed-order draws: channel, symbol indices, noise.

    Returns (h, symbol indices, real noise vector, redraws).  An all-zero
    channel draw (never seen in practice) is redrawn within the substream.
    """
    h = rng.standard_normal(2 * n * m) * _RSQRT2
    redraws = 0
    while not h.any():
        h = rng.standard_normal(2 * n * m) * _RSQRT2
        redraws += 1
    sym = rng.integers(0, size, k)
    noise = rng.standard_normal(2 * m * t) * scale
    return h, sym, noise, redraws


def _component_indices(sym_idx: np.ndarray, levels: int) -> np.ndarray:
    """(..., K) symbol indices -> (..., 2K) interleaved component indices."""
    re_i, im_i = np.divmod(sym_idx, levels)
    out = np.empty(sym_idx.shape[:-1] + (2 * sym_idx.shape[-1],), dtype=np.intp)
    out[..., 0::2] = re_i
    out[..., 1::2] = im_i
    return out


def _lattice_soft(hc, yv, sigma):
    """Batched matched filter z = Hc^T ycheck / sigma; hc is (B, 2MT, 2K)."""
    ybar = np.einsum("bpj,bp->bj", hc, yv)
    return ybar / sigma[:, None]


def run_trial(code, constellation, snr_db: float, rng: np.random.Generator,
              decoders=("lattice",), m: int = 1) -> TrialResult:
    """One end-to-end trial on a caller-provided substream.

    code and constellation may be ids or resolved objects.  The lattice
    route shares its arithmetic with the batched sweep (a B=1 batch), so a
    sweep decomposes exactly into these trials.
    """
    code = get_code(code) if isinstance(code, str) else code
    const = get_constellation(constellation) \
        if isinstance(constellation, str) else constellation
    if isinstance(decoders, str):
        decoders = (decoders,)
    if "all" in decoders:
        decoders = DECODER_NAMES
    sym = build_symbolic_lattice(code, m)
    h, sym_idx, noise, redraws = _draw_trial(
        rng, code.n, m, code.t, code.k, const.size, _noise_scale(snr_db))
    comp = _component_indices(sym_idx, const.levels)
    x = const.component_alphabet[comp]
    hc = evaluate_lattice_batch(sym, h[None, :])
    sigma = code.c * np.sum(h * h)
    yv = np.einsum("bpj,bj->bp", hc, x[None, :])[0] + noise

    decoded: dict[str, DecodedMessage] = {}
    for name in decoders:
        if name == "lattice":
            z = _lattice_soft(hc, yv[None, :], np.array([sigma]))[0]
            idx = quantize_indices(z, const.component_alphabet)
            xq = const.component_alphabet[idx]
            decoded[name] = DecodedMessage(xhat=xq, shat=xq[0::2] + 1j * xq[1::2],
                                           indices=idx)
            continue
        ch = ChannelRealization.from_h(h, code.n, m)
        if name in ("trace", "f", "fprime"):
            y_block = deinterleave(yv).reshape(code.t, m, order="F")
            if name == "trace":
                decoded[name] = decode_trace(code, ch, y_block, const)[1]
            elif name == "f":
                decoded[name] = decode_F(code, ch, complex_stack(y_block).z,
                                         const)[1]
            else:
                decoded[name] = decode_Fprime(code, ch,
                                              complex_stack(y_block).zprime,
                                              const)[1]
        elif name == "exhaustive":
            hm = hc[0].copy()
            hm.setflags(write=False)
            lat = RealLattice(code_id=code.id, m=m, hcheck=hm,
                              sigma=sigma, c=code.c)
            decoded[name] = exhaustive_ml(lat, yv, const)[0]
        else:
            raise ValueError(f"unknown decoder {name!r}")
    first = decoded[decoders[0]].indices
    agreement = all(np.array_equal(first, d.indices) for d in decoded.values())
    return TrialResult(sent=comp, decoded=decoded, agreement=agreement,
                       redraws=redraws)


def _count_errors(sent_comp, dec_comp, gray):
    """Symbol and bit error totals for (..., 2K) component index arrays."""
    re_s, im_s = sent_comp[..., 0::2], sent_comp[..., 1::2]
    re_d, im_d = dec_comp[..., 0::2], dec_comp[..., 1::2]
    sym_err = int(np.sum((re_s != re_d) | (im_s != im_d)))
    bits = np.bitwise_count(gray[re_s] ^ gray[re_d]) \
        + np.bitwise_count(gray[im_s] ^ gray[im_d])
    return sym_err, int(np.sum(bits))


def _point_batched(config: SimConfig, point: int) -> PointResult:
    """Vectorized lattice-only sweep of one SNR point."""
    code = get_code(config.code)
    const = get_constellation(config.constellation)
    sym = build_symbolic_lattice(code, config.m)
    scale = _noise_scale(config.snr_db[point])
    n2h, n2y = 2 * code.n * config.m, 2 * config.m * code.t
    gray = const.gray
    sym_errors = bit_errors = redraws = 0
    for start in range(0, config.trials, _CHUNK):
        b = min(_CHUNK, config.trials - start)
        h = np.empty((b, n2h))
        sent = np.empty((b, code.k), dtype=np.intp)
        noise = np.empty((b, n2y))
        for i in range(b):
            rng = _trial_rng(config.seed, point, start + i)
            h[i], sent[i], noise[i], r = _draw_trial(
                rng, code.n, config.m, code.t, code.k, const.size, scale)
            redraws += r
        comp = _component_indices(sent, const.levels)
        x = const.component_alphabet[comp]
        hc = evaluate_lattice_batch(sym, h)
        sigma = code.c * np.sum(h * h, axis=1)
        yv = np.einsum("bpj,bj->bp", hc, x) + noise
        z = _lattice_soft(hc, yv, sigma)
        dec = quantize_indices(z, const.component_alphabet)
        se, be = _count_errors(comp, dec, gray)
        sym_errors += se
        bit_errors += be
    return _finish_point(config, point, const, sym_errors, bit_errors,
                         redraws, 0)


def _point_looped(config: SimConfig, point: int) -> PointResult:
    """Per-trial sweep running every selected decoder."""
    code = get_code(config.code)
    const = get_constellation(config.constellation)
    gray = const.gray
    sym_errors = bit_errors = redraws = disagreements = 0
    for t in range(config.trials):
        rng = _trial_rng(config.seed, point, t)
        tr = run_trial(code, const, config.snr_db[point], rng,
                       config.decoders, config.m)
        redraws += tr.redraws
        disagreements += not tr.agreement
        primary = tr.decoded[config.decoders[0]]
        se, be = _count_errors(tr.sent, primary.indices, gray)
        sym_errors += se
        bit_errors += be
    return _finish_point(config, point, const, sym_errors, bit_errors,
                         redraws, disagreements)


def _finish_point(config, point, const, sym_errors, bit_errors, redraws,
                  disagreements) -> PointResult:
    code = get_code(config.code)
    n_sym = config.trials * code.k
    n_bit = n_sym * const.bits_per_symbol
    if sym_errors > n_sym:
        raise AssertionError("more symbol errors than symbols")
    return PointResult(snr_db=config.snr_db[point], trials=config.trials,
                       sym_errors=sym_errors, bit_errors=bit_errors,
                       ser=sym_errors / n_sym, ber=bit_errors / n_bit,
                       redraws=redraws, disagreements=disagreements)


def _simulate_point(config: SimConfig, point: int) -> PointResult:
    if config.decoders == ("lattice",):
        return _point_batched(config, point)
    return _point_looped(config, point)


def resolve_workers() -> int:
    """Worker count from OSTBC_LAB_THREADS: unset -> 1, 0 -> all cores."""
    raw = os.environ.get("OSTBC_LAB_THREADS", "").strip()
    if not raw:
        return 1
    count = int(raw)
    if count < 0:
        raise ValueError("OSTBC_LAB_THREADS must be >= 0")
    return count if count else (os.cpu_count() or 1)


def run_ber(config: SimConfig) -> BerResult:
    """Sweep all SNR points; deterministic for a given config, regardless
    of worker count."""
    get_code(config.code)
    get_constellation(config.constellation)
    npoints = len(config.snr_db)
    workers = min(resolve_workers(), npoints)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(_simulate_point, [config] * npoints,
                                   range(npoints)))
    else:
        points = [_simulate_point(config, p) for p in range(npoints)]
    return BerResult(config=config, rng="philox", points=tuple(points))


def ber_to_json(result: BerResult) -> str:
    doc = {
        "schema": SCHEMA,
        "config": {
            "code": result.config.code,
            "constellation": result.config.constellation,
            "snr_db": list(result.config.snr_db),
            "trials": result.config.trials,
            "seed": result.config.seed,
            "m": result.config.m,
            "decoders": list(result.config.decoders),
        },
        "rng": result.rng,
        "snr_convention": "per-receive-antenna Es/N0, unit symbol energy",
        "agreement": result.agreement,
        "points": [{
            "snr_db": p.snr_db,
            "trials": p.trials,
            "sym_errors": p.sym_errors,
            "bit_errors": p.bit_errors,
            "ser": p.ser,
            "ber": p.ber,
            "redraws": p.redraws,
            "disagreements": p.disagreements,
        } for p in result.points],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def ber_to_csv(result: BerResult) -> str:
    buf = io.StringIO()
    buf.write(f"# schema: {SCHEMA}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["snr_db", "trials", "sym_errors", "bit_errors",
                     "ser", "ber"])
    for p in result.points:
        writer.writerow([f"{p.snr_db:.17g}", p.trials, p.sym_errors,
                         p.bit_errors, f"{p.ser:.17g}", f"{p.ber:.17g}"])
    return buf.getvalue()
