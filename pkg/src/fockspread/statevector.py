"""Dense 2**L statevector evolution for every circuit variant."""
from __future__ import annotations

import hashlib
import json
import math
import struct
from dataclasses import dataclass

import numpy as np

from .model import (
    BOUNDARY_VARIANTS,
    CircuitSpec,
    MidSingleSite,
    MidTwoSite,
    RandomBrickwork,
    bits_to_index,
    ising_energies,
    kick_gate,
)
from .rmt import sample_gate_u2, sample_gate_u4, stream_rng

# 16 bytes per amplitude; ~4 GiB covers L = 28
MEMORY_BUDGET_BYTES = 1 << 32

# stream tags for per-gate seeds
_MID1, _MID2, _BRICK = 1, 2, 3


class StateTooLarge(MemoryError):
    pass


@dataclass
class StateVector:
    amps: np.ndarray
    L: int
    t: int = 0

    def __post_init__(self):
        if self.amps.shape != (1 << self.L,):
            raise ValueError(f"expected {1 << self.L} amplitudes, got shape {self.amps.shape}")

    def copy(self) -> "StateVector":
        return StateVector(self.amps.copy(), self.L, self.t)

    def norm(self) -> float:
        return math.sqrt(math.fsum(self.probabilities()))

    def probabilities(self) -> np.ndarray:
        return self.amps.real ** 2 + self.amps.imag ** 2


def required_bytes(L: int) -> int:
    return 16 * (1 << L)


def init_zero(L: int, budget: int = MEMORY_BUDGET_BYTES) -> StateVector:
    if L < 2:
        raise ValueError(f"L must be >= 2, got {L}")
    need = required_bytes(L)
    if need > budget:
        raise StateTooLarge(f"L={L} needs {need} bytes for amplitudes, budget is {budget}")
    amps = np.zeros(1 << L, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(amps, L)


def apply_diagonal(state: StateVector, phases: np.ndarray) -> StateVector:
    state.amps *= phases
    return state


def apply_ising_layer(state: StateVector, spec: CircuitSpec, energies: np.ndarray | None = None) -> StateVector:
    if spec.L != state.L:
        raise ValueError(f"spec has L={spec.L}, state has L={state.L}")
    if energies is None:
        energies = ising_energies(spec)
    return apply_diagonal(state, np.exp(-1j * energies))


def apply_single(state: StateVector, site: int, gate: np.ndarray) -> StateVector:
    """Apply a 2x2 gate to ``site`` (0-based, site 0 is the most significant bit)."""
    v = state.amps.reshape(1 << site, 2, 1 << (state.L - site - 1))
    a0 = v[:, 0, :].copy()
    a1 = v[:, 1, :]
    v[:, 0, :] = gate[0, 0] * a0 + gate[0, 1] * a1
    v[:, 1, :] = gate[1, 0] * a0 + gate[1, 1] * a1
    return state


def apply_two(state: StateVector, site: int, gate: np.ndarray) -> StateVector:
    """Apply a 4x4 gate to sites (site, site+1); basis order |z_site z_site+1>."""
    v = state.amps.reshape(1 << site, 4, 1 << (state.L - site - 2))
    v[...] = np.einsum("ab,ibj->iaj", gate, v)
    return state


def apply_kick_layer(state: StateVector, b: float, last_gate: np.ndarray | None = None) -> StateVector:
    """exp(-i b sigma^x) on every site; ``last_gate`` replaces the gate on site L."""
    k = kick_gate(b).entries
    # largest stride first
    for site in range(state.L):
        gate = last_gate if (last_gate is not None and site == state.L - 1) else k
        apply_single(state, site, gate)
    return state


def mid_site(L: int) -> int:
    """0-based index of site ceil(L/2)."""
    return (L + 1) // 2 - 1


def mid_bond(L: int) -> int:
    """0-based left site of the central bond."""
    return L // 2 - 1


def _variant_gate(seed: int, tag: int, period: int, site: int, two_site: bool) -> np.ndarray:
    rng = stream_rng(seed, tag, period, site)
    return sample_gate_u4(rng) if two_site else sample_gate_u2(rng)


def brickwork_gates(seed: int, L: int, period: int) -> list:
    """(site, gate) pairs for one period: even bonds, then odd bonds."""
    out = []
    for first in (0, 1):
        for site in range(first, L - 1, 2):
            out.append((site, _variant_gate(seed, _BRICK, period, site, True)))
    return out


def floquet_step(state: StateVector, spec: CircuitSpec, period_index: int | None = None,
                 energies: np.ndarray | None = None) -> StateVector:
    """Advance ``state`` by one period in place.

    ``period_index`` (0-based) keys the random gates; it defaults to ``state.t``.
    """
    if spec.L != state.L:
        raise ValueError(f"spec has L={spec.L}, state has L={state.L}")
    period = state.t if period_index is None else period_index
    v = spec.variant
    if isinstance(v, RandomBrickwork):
        for site, gate in brickwork_gates(v.seed, state.L, period):
            apply_two(state, site, gate)
    else:
        apply_ising_layer(state, spec, energies)
        last = v.gate.entries if isinstance(v, BOUNDARY_VARIANTS) else None
        apply_kick_layer(state, spec.b, last)
        if isinstance(v, MidSingleSite):
            site = mid_site(state.L)
            apply_single(state, site, _variant_gate(v.seed, _MID1, 0, site, False))
        elif isinstance(v, MidTwoSite):
            site = mid_bond(state.L)
            apply_two(state, site, _variant_gate(v.seed, _MID2, period, site, True))
    state.t = period + 1
    return state


def evolve(spec: CircuitSpec, t: int, state: StateVector | None = None) -> StateVector:
    state = init_zero(spec.L) if state is None else state
    energies = None if isinstance(spec.variant, RandomBrickwork) else ising_energies(spec)
    for _ in range(t):
        floquet_step(state, spec, energies=energies)
    return state


def trajectory(spec: CircuitSpec, t_max: int):
    """Yield the state at t = 0, 1, ..., t_max (the same object, advanced in place)."""
    state = init_zero(spec.L)
    energies = None if isinstance(spec.variant, RandomBrickwork) else ising_energies(spec)
    yield state
    for _ in range(t_max):
        floquet_step(state, spec, energies=energies)
        yield state


def amplitude(state: StateVector, z) -> complex:
    if isinstance(z, (int, np.integer)):
        idx = int(z)
    else:
        if len(z) != state.L:
            raise ValueError(f"bit-string has {len(z)} bits, state has L={state.L}")
        idx = bits_to_index(z)
    if not 0 <= idx < state.amps.size:
        raise IndexError(f"index {idx} out of range for L={state.L}")
    return complex(state.amps[idx])


# --- binary dump of |amps|^2 ----------------------------------------------------

_MAGIC = b"FSPROB1\n"


def spec_hash(spec: CircuitSpec) -> str:
    return hashlib.sha256(spec.to_json().encode()).hexdigest()[:16]


def dump_probabilities(path, state: StateVector, spec: CircuitSpec | None = None) -> None:
    """Write magic, uint64 LE header length, JSON header, then float64 LE |amps|^2."""
    header = {"L": state.L, "t": state.t, "dtype": "<f8", "count": 1 << state.L,
              "spec_hash": spec_hash(spec) if spec is not None else None}
    hb = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<Q", len(hb)))
        fh.write(hb)
        fh.write(state.probabilities().astype("<f8").tobytes())


def load_probabilities(path) -> tuple:
    with open(path, "rb") as fh:
        if fh.read(len(_MAGIC)) != _MAGIC:
            raise ValueError(f"{path}: not a probability dump")
        (n,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(n))
        probs = np.frombuffer(fh.read(), dtype="<f8")
    if probs.size != header["count"]:
        raise ValueError(f"{path}: expected {header['count']} values, found {probs.size}")
    return header, probs
