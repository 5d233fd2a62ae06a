"""Ergodic capacity for diagonal signaling.

Closed form for unit-mean exponential scalar gains (Rayleigh magnitudes),
Jensen upper bound, and seeded Monte-Carlo estimators over the supported
channel ensembles.  Sampling is counter-based (Philox keyed on seed and
chunk index) so estimates are bit-identical regardless of evaluation order
or worker count.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .errors import DimensionMismatch, DomainError, ValidationError
from .problem import PowerAllocation

_EULER_GAMMA = 0.5772156649015328606

#: Below this |x| the power series for Ei dominates; above it the continued
#: fraction for e^x E1(x) converges fast.  Chosen where both are < 1e-13.
_EI_SWITCH = 3.5

#: Samples per RNG chunk.  Fixed: part of the determinism contract.
_CHUNK = 4096


def _ei_series(x: float) -> float:
    """Ei via gamma + ln|x| + sum x^k/(k k!); alternating for x < 0."""
    total = _EULER_GAMMA + math.log(abs(x))
    term = 1.0
    for k in range(1, 200):
        term *= x / k
        contrib = term / k
        total += contrib
        if abs(contrib) < 1e-18 * max(abs(total), 1e-30):
            break
    return total


def _e1_scaled_cf(z: float) -> float:
    """e^z * E1(z) for z > 0 by the continued fraction (modified Lentz)."""
    tiny = 1e-300
    f = tiny
    c = f
    d = 0.0
    for k in range(1, 500):
        a = 1.0 if k == 1 else -float((k - 1) * (k - 1))
        b = z + 2.0 * k - 1.0
        d = b + a * d
        if d == 0.0:
            d = tiny
        c = b + a / c
        if c == 0.0:
            c = tiny
        d = 1.0 / d
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return f


def expint_ei(x: float) -> float:
    """Exponential integral Ei(x) for x < 0, to ~1e-13 relative accuracy."""
    if x >= 0:
        raise DomainError("only the negative branch of Ei is supported")
    if -x <= _EI_SWITCH:
        return _ei_series(x)
    return -math.exp(x) * _e1_scaled_cf(-x)


def expected_log_rayleigh(p: float) -> float:
    """E{ln(1 + g p)} for unit-mean exponential g: -e^(1/p) Ei(-1/p).

    Evaluated in scaled form, so no overflow for small p.
    """
    if p < 0:
        raise DomainError("power must be non-negative")
    if p == 0.0:
        return 0.0
    if p < 1e-8:
        # Leading terms of the asymptotic expansion p - p^2 + 2 p^3 - ...
        return p * (1.0 - p)
    z = 1.0 / p
    if z > _EI_SWITCH:
        return _e1_scaled_cf(z)
    return -math.exp(z) * _ei_series(-z)


def ergodic_capacity_closed_form(allocation: PowerAllocation) -> float:
    """Sum of per-antenna expected log rates for i.i.d. unit-mean exponential
    gains (orthogonal channel, diagonal signaling)."""
    return float(sum(expected_log_rayleigh(float(p)) for p in allocation.powers))


def jensen_upper_bound(allocation: PowerAllocation, mean_gains) -> float:
    """sum_i ln(1 + E{g_i} p_i); an upper bound on the ergodic capacity."""
    mean_gains = np.asarray(mean_gains, dtype=float)
    if mean_gains.shape != allocation.powers.shape:
        raise DimensionMismatch("mean gains and allocation dimensions differ")
    return float(np.log1p(mean_gains * allocation.powers).sum())


class EnsembleKind(Enum):
    ORTHOGONAL_IID = "orth-iid"
    RAYLEIGH_MISO = "rayleigh-miso"
    RAYLEIGH_MIMO = "rayleigh-mimo"


@dataclass(frozen=True)
class ChannelEnsemble:
    """A named stochastic channel model plus the RNG seed used to sample it.

    Complex Gaussian entries are CN(0,1): independent real/imag parts with
    variance 1/2 each, so squared magnitudes are unit-mean exponential.
    """

    kind: EnsembleKind
    n: int
    m: int
    seed: int
    gain_law: str = "exponential"

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValidationError("ensemble dimensions must be positive")
        if self.kind is EnsembleKind.RAYLEIGH_MISO and self.n != 1:
            raise ValidationError("MISO requires n = 1")
        if self.kind is EnsembleKind.ORTHOGONAL_IID and self.n != self.m:
            raise ValidationError("orthogonal ensembles require n = m")
        if self.gain_law != "exponential":
            raise ValidationError("only the unit-mean exponential gain law is supported")


@dataclass(frozen=True)
class MonteCarloEstimate:
    mean: float
    std_error: float
    samples: int
    seed: int


def _chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, chunk], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@lru_cache(maxsize=8)
def _draw_chunk(ensemble: ChannelEnsemble, chunk: int):
    """All draws for one chunk of sample indices; cached for reuse."""
    rng = _chunk_rng(ensemble.seed, chunk)
    if ensemble.kind is EnsembleKind.ORTHOGONAL_IID:
        z = rng.standard_normal((_CHUNK, ensemble.m, 2))
        out = 0.5 * (z[..., 0] ** 2 + z[..., 1] ** 2)
    else:
        z = rng.standard_normal((_CHUNK, ensemble.n, ensemble.m, 2))
        h = math.sqrt(0.5) * (z[..., 0] + 1j * z[..., 1])
        out = h[:, 0, :] if ensemble.kind is EnsembleKind.RAYLEIGH_MISO else h
    out.setflags(write=False)
    return out


def sample_gains(ensemble: ChannelEnsemble, sample_index: int):
    """The sample_index-th draw: gains (orthogonal), channel row (MISO) or
    channel matrix (MIMO).  Independent of evaluation order."""
    if sample_index < 0:
        raise ValidationError("sample_index must be non-negative")
    return _draw_chunk(ensemble, sample_index // _CHUNK)[sample_index % _CHUNK]


def _chunk_values(ensemble: ChannelEnsemble, powers: np.ndarray, chunk: int, count: int) -> np.ndarray:
    draws = _draw_chunk(ensemble, chunk)[:count]
    if ensemble.kind is EnsembleKind.ORTHOGONAL_IID:
        return np.log1p(draws * powers).sum(axis=1)
    if ensemble.kind is EnsembleKind.RAYLEIGH_MISO:
        return np.log1p((np.abs(draws) ** 2 * powers).sum(axis=1))
    hp = draws * powers
    a = np.einsum("cik,cjk->cij", hp, draws.conj())
    a[:, np.arange(ensemble.n), np.arange(ensemble.n)] += 1.0
    _, logdet = np.linalg.slogdet(a)
    return logdet


def num_threads() -> int:
    """Worker cap from GROUPFILL_THREADS (results are unchanged by its value)."""
    try:
        return max(1, int(os.environ.get("GROUPFILL_THREADS", "1")))
    except ValueError:
        return 1


def ergodic_capacity_mc(
    ensemble: ChannelEnsemble, allocation: PowerAllocation, n_samples: int
) -> MonteCarloEstimate:
    """Sample-mean capacity of the allocation under the ensemble.

    Per-chunk partial sums are combined in chunk order, so the estimate is
    bit-identical for any worker count.
    """
    p = allocation.powers
    if p.size != ensemble.m:
        raise DimensionMismatch(
            f"allocation has {p.size} antennas, ensemble expects {ensemble.m}"
        )
    if n_samples < 1:
        raise ValidationError("need at least one sample")

    chunks = [
        (c, min(_CHUNK, n_samples - c * _CHUNK))
        for c in range((n_samples + _CHUNK - 1) // _CHUNK)
    ]

    def partial(args):
        chunk, count = args
        v = _chunk_values(ensemble, p, chunk, count)
        return float(v.sum()), float((v * v).sum())

    workers = num_threads()
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(partial, chunks))
    else:
        partials = [partial(c) for c in chunks]

    total = 0.0
    total_sq = 0.0
    for s, sq in partials:
        total += s
        total_sq += sq
    mean = total / n_samples
    if n_samples > 1:
        var = max(0.0, (total_sq - n_samples * mean * mean) / (n_samples - 1))
        std_error = math.sqrt(var / n_samples)
    else:
        std_error = 0.0
    return MonteCarloEstimate(mean, std_error, n_samples, ensemble.seed)
