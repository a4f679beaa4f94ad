"""Space-time dual transfer matrices and boundary vectors.

Writing the amplitude as a sum over histories, the τ = t - 1 intermediate
bits of one site form a column c = (c_1, ..., c_τ), and columns are the
basis of a 2**τ dimensional dual space (c_1 is the most significant bit).
Per site and final bit z the column carries the weight

    w(c, z) = k[c_1, 0] k[c_2, c_1] ... k[z, c_τ] * prod_m exp(-i h s(c_m))

with k the kick gate, and neighbouring columns couple through

    C[c, c'] = prod_m exp(-i J s(c_m) s(c'_m)).

At J = b = π/4 both sqrt(2) diag(w(., z)) and C / 2**(τ/2) are unitary, so
U(z) = sqrt(2) diag(w(., z)) C is unitary and

    <z|ψ(t)> = 2**(-L/2) <L| U(z_1) ... U(z_L) |R>

with <L| = e^{-i E(0...0)} 2**(-τ/2) (1, ..., 1) and |R> = 2**(τ/2) C^{-1} (1, ..., 1).
The longitudinal fields sit inside U(z); the boundary vectors do not depend on them.
"""
from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass

import numpy as np

from .fockspace import ipr_du_analytic
from .model import BOUNDARY_VARIANTS, CircuitSpec, DualUnitary, GateU2, kick_gate

MAX_TAU = 12
UNITARY_TOL = 1e-10


def _column_weights(gate: np.ndarray, h: float, tau: int) -> np.ndarray:
    """w[c, z] for one site, shape (2**tau, 2)."""
    if tau == 0:
        return gate[:, 0].reshape(1, 2).astype(complex)
    field = np.exp(-1j * h * np.array([1.0, -1.0]))
    a = gate[:, 0] * field
    for _ in range(tau - 1):
        # append the next time slice as the least significant bit
        a = (a.reshape(-1, 2)[:, :, None] * gate.T[None, :, :] * field[None, None, :]).reshape(-1)
    return (a.reshape(-1, 2)[:, :, None] * gate.T[None, :, :]).reshape(-1, 2)


def coupling_matrix(J: float, tau: int) -> np.ndarray:
    s = np.array([1.0, -1.0])
    e = np.exp(-1j * J * np.outer(s, s))
    c = np.ones((1, 1), dtype=complex)
    for _ in range(tau):
        c = np.kron(c, e)
    return c


@dataclass(frozen=True, eq=False)
class DualTransferSet:
    tau: int
    U: np.ndarray              # (L, 2, d, d): U[j, z] acts for site j (0-based) with bit z
    left: np.ndarray
    right: np.ndarray
    norm_prefactor: float
    homogeneous: bool

    @property
    def L(self) -> int:
        return self.U.shape[0]

    @property
    def d(self) -> int:
        return 1 << self.tau

    @property
    def U0(self) -> np.ndarray:
        return self.U[0, 0]

    @property
    def U1(self) -> np.ndarray:
        return self.U[0, 1]

    def unitarity_error(self) -> float:
        eye = np.eye(self.d)
        return float(max(np.max(np.abs(m.conj().T @ m - eye)) for m in self.U.reshape(-1, self.d, self.d)))

    def to_json(self) -> str:
        def enc(a):
            return [[x.real, x.imag] for x in np.asarray(a).ravel()]
        ops = self.U[:1] if self.homogeneous else self.U
        return json.dumps({
            "tau": self.tau, "d": self.d, "L": self.L, "homogeneous": self.homogeneous,
            "layout": "row-major [re, im] pairs",
            "U": [[enc(ops[j, z]) for z in (0, 1)] for j in range(ops.shape[0])],
            "left": enc(self.left), "right": enc(self.right),
            "norm_prefactor": self.norm_prefactor,
        })


@functools.lru_cache(maxsize=64)
def build_dual_set(spec: CircuitSpec, t: int) -> DualTransferSet:
    """Dual transfer matrices for the unperturbed dual-unitary kicked Ising chain."""
    if not spec.is_dual_unitary:
        raise ValueError(f"dual construction needs J = b = pi/4, got J={spec.J}, b={spec.b}")
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    tau = t - 1
    if tau > MAX_TAU:
        raise ValueError(f"tau={tau} exceeds MAX_TAU={MAX_TAU}")
    k = kick_gate(spec.b).entries
    C = coupling_matrix(spec.J, tau)
    ops = np.empty((spec.L, 2, 1 << tau, 1 << tau), dtype=complex)
    cache: dict = {}
    for j, hj in enumerate(spec.h):
        if hj not in cache:
            w = _column_weights(k, hj, tau)
            cache[hj] = np.stack([math.sqrt(2.0) * w[:, z, None] * C for z in (0, 1)])
        ops[j] = cache[hj]
    e0 = spec.J * (spec.L - 1) + math.fsum(spec.h)
    left = np.exp(-1j * e0) * np.full(1 << tau, 2.0 ** (-tau / 2), dtype=complex)
    right = 2.0 ** (tau / 2) * np.linalg.solve(C, np.ones(1 << tau, dtype=complex))
    ops.setflags(write=False)
    return DualTransferSet(tau, ops, left, right, 2.0 ** (-spec.L / 2), spec.homogeneous)


def overlap_via_dual(dts: DualTransferSet, z) -> complex:
    """<z|ψ(t)> as a matrix-product element, swept as vector-matrix products."""
    if isinstance(z, (int, np.integer)):
        z = [(int(z) >> (dts.L - 1 - j)) & 1 for j in range(dts.L)]
    if len(z) != dts.L:
        raise ValueError(f"bit-string has {len(z)} bits, dual set has L={dts.L}")
    v = dts.left
    for j, bit in enumerate(z):
        v = v @ dts.U[j, bit]
    return complex(dts.norm_prefactor * (v @ dts.right))


def all_overlaps(dts: DualTransferSet) -> np.ndarray:
    """All 2**L amplitudes, index order matching the statevector convention."""
    rows = dts.left[None, :]
    for j in range(dts.L):
        rows = np.stack([rows @ dts.U[j, 0], rows @ dts.U[j, 1]], axis=1).reshape(-1, dts.d)
    return dts.norm_prefactor * (rows @ dts.right)


def right_boundary_perturbed(spec: CircuitSpec, t: int, z_last: int) -> np.ndarray:
    """|R(z_L)> for a chain whose last-site kick is replaced by the variant gate.

    With this vector ``<z|ψ(t)> = 2**(-L/2) <L| U(z_1) ... U(z_{L-1}) |R(z_L)>``.
    """
    if not isinstance(spec.variant, BOUNDARY_VARIANTS):
        raise ValueError("right_boundary_perturbed needs a boundary-perturbed variant")
    if z_last not in (0, 1):
        raise ValueError(f"z_last must be 0 or 1, got {z_last!r}")
    tau = t - 1
    w = _column_weights(spec.boundary_gate().entries, spec.h[-1], tau)
    return 2.0 ** ((tau + 1) / 2) * w[:, z_last]


def overlap_perturbed(spec: CircuitSpec, t: int, z) -> complex:
    """Amplitude of a boundary-perturbed chain through |R(z_L)>."""
    if len(z) != spec.L:
        raise ValueError(f"bit-string has {len(z)} bits, spec has L={spec.L}")
    dts = build_dual_set(spec.with_variant(DualUnitary()), t)
    v = dts.left
    for j, bit in enumerate(z[:-1]):
        v = v @ dts.U[j, bit]
    return complex(dts.norm_prefactor * (v @ right_boundary_perturbed(spec, t, z[-1])))


def unistochastic(u: GateU2 | np.ndarray) -> np.ndarray:
    m = np.asarray(u.entries if isinstance(u, GateU2) else u)
    return np.abs(m) ** 2


def m_element(u: GateU2 | np.ndarray, t: int, z: int) -> float:
    """<0|M^t|z> with M_ij = |u_ij|^2."""
    M = unistochastic(u)
    if t <= 64:
        return float(np.linalg.matrix_power(M, t)[0, z])
    # M is real symmetric for any 2x2 unitary
    vals, vecs = np.linalg.eigh(M)
    return float(((vecs * vals ** t) @ vecs.T)[0, z])


def ipr_via_m(L: int, t: int, q: int, u: GateU2 | np.ndarray) -> float:
    """Boundary-perturbed IPR as the dual-unitary value times the M^t factor."""
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    factor = 2.0 ** (q - 1) * math.fsum(m_element(u, t, z) ** q for z in (0, 1))
    return ipr_du_analytic(L, t, q) * factor
