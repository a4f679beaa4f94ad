"""Haar-random unitaries and Monte-Carlo checks of their moments."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MIN_SAMPLES = 1000
_CHUNK = 4096


def stream_rng(master_seed: int, *stream: int) -> np.random.Generator:
    """Counter-based generator keyed by ``(master_seed, *stream)``.

    Philox streams with distinct keys are independent, so results do not
    depend on which worker draws which stream or in what order.
    """
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(ss))


def sample_haar(d: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Haar unitary via QR of a Ginibre matrix with the diagonal phase fix.

    With ``size`` a stack of shape (size, d, d) is returned.
    """
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    shape = (d, d) if size is None else (size, d, d)
    z = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    # absorb the phases of diag(R) so that the distribution is exactly Haar
    phases = diag / np.abs(diag)
    return q * phases[..., None, :]


def sample_gate_u4(rng: np.random.Generator) -> np.ndarray:
    return sample_haar(4, rng)


def sample_gate_u2(rng: np.random.Generator) -> np.ndarray:
    return sample_haar(2, rng)


def log_rising_factorial(d: float, q: int) -> float:
    """ln[d (d+1) ... (d+q-1)]."""
    return math.fsum(math.log(d + k) for k in range(q))


def haar_moment_closed(d: float, q: int) -> float:
    """E_Haar |<a|U|b>|^{2q} = q! / [d (d+1) ... (d+q-1)] for unit vectors a, b."""
    if q < 1:
        raise ValueError("q must be >= 1")
    return math.exp(math.lgamma(q + 1) - log_rising_factorial(d, q))


@dataclass(frozen=True)
class MomentEstimate:
    mean: float
    std_error: float
    samples: int
    d: int
    q: int

    def z_score(self, reference: float) -> float:
        return (self.mean - reference) / self.std_error


def mc_moment(d: int, q: int, n: int, rng: np.random.Generator | int,
              a: np.ndarray | None = None, b: np.ndarray | None = None) -> MomentEstimate:
    """Monte-Carlo estimate of E|<a|U|b>|^{2q} over ``n`` Haar unitaries.

    ``rng`` may be an integer master seed; sampling then runs in fixed-size
    chunks, each drawn from its own stream, and the chunk sums are reduced in
    chunk order.
    """
    if n < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples, got {n}")
    a = _unit(np.eye(d)[0] if a is None else a)
    b = _unit(np.eye(d)[0] if b is None else b)
    sums, sqs = [], []
    for c, start in enumerate(range(0, n, _CHUNK)):
        size = min(_CHUNK, n - start)
        gen = stream_rng(rng, c) if isinstance(rng, (int, np.integer)) else rng
        u = sample_haar(d, gen, size=size)
        x = np.abs(a.conj() @ u @ b) ** (2 * q)
        sums.append(math.fsum(x))
        sqs.append(math.fsum(x * x))
    mean = _pairwise(sums) / n
    var = max(_pairwise(sqs) / n - mean * mean, 0.0) * n / (n - 1)
    return MomentEstimate(mean, math.sqrt(var / n), n, d, q)


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    return v / np.linalg.norm(v)


def _pairwise(values: list) -> float:
    vals = list(values)
    while len(vals) > 1:
        vals = [vals[i] + vals[i + 1] if i + 1 < len(vals) else vals[i] for i in range(0, len(vals), 2)]
    return vals[0] if vals else 0.0
