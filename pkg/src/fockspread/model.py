"""Kicked Ising circuit family: parameters, variants, gates and validation.

Bit-string convention shared by every module: site 1 is the most significant
bit of the integer index, so ``index = sum_j z_j * 2**(L - j)``.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

PI = math.pi
DUAL_UNITARY_ANGLE = PI / 4
UNITARY_TOL = 1e-12
CLIFFORD_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class GateU2:
    """Single-site gate. Unitarity is checked by :func:`validate`, not here."""

    entries: np.ndarray

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError(f"GateU2 needs a 2x2 matrix, got shape {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    def unitarity_error(self) -> float:
        m = self.entries
        return float(np.max(np.abs(m.conj().T @ m - np.eye(2))))

    def is_unitary(self, tol: float = UNITARY_TOL) -> bool:
        return self.unitarity_error() < tol

    def __eq__(self, other):
        return isinstance(other, GateU2) and np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash(self.entries.tobytes())


def kick_gate(b: float) -> GateU2:
    """exp(-i b sigma^x)."""
    c, s = math.cos(b), math.sin(b)
    return GateU2(np.array([[c, -1j * s], [-1j * s, c]]))


# --- variants -----------------------------------------------------------------


@dataclass(frozen=True)
class DualUnitary:
    name = "dual"


@dataclass(frozen=True)
class BoundaryKick:
    """Kick on the last site replaced by exp(-i theta sigma^x)."""

    theta: float
    name = "boundary-kick"

    @property
    def gate(self) -> GateU2:
        return kick_gate(self.theta)


@dataclass(frozen=True)
class BoundaryGeneric:
    """Kick on the last site replaced by an arbitrary single-site gate."""

    u: GateU2
    name = "boundary-generic"

    @property
    def gate(self) -> GateU2:
        return self.u


@dataclass(frozen=True)
class MidSingleSite:
    """One fixed Haar U(2) on the central site after every dual-unitary step."""

    seed: int = 0
    name = "mid1"


@dataclass(frozen=True)
class MidTwoSite:
    """Haar U(4) on the central bond, resampled every period."""

    seed: int = 0
    name = "mid2"


@dataclass(frozen=True)
class RandomBrickwork:
    """Even-bond then odd-bond layer of independent Haar U(4) gates per period."""

    seed: int = 0
    name = "random"


Variant = Union[DualUnitary, BoundaryKick, BoundaryGeneric, MidSingleSite, MidTwoSite, RandomBrickwork]
BOUNDARY_VARIANTS = (BoundaryKick, BoundaryGeneric)
RANDOM_VARIANTS = (MidSingleSite, MidTwoSite, RandomBrickwork)


@dataclass(frozen=True)
class CircuitSpec:
    L: int
    J: float = DUAL_UNITARY_ANGLE
    b: float = DUAL_UNITARY_ANGLE
    h: tuple = ()
    g: float = PI / 3
    variant: Variant = field(default_factory=DualUnitary)

    def __post_init__(self):
        h = tuple(float(x) for x in self.h) if len(self.h) else (float(self.g),) * int(self.L)
        object.__setattr__(self, "h", h)

    @classmethod
    def self_dual(cls, L: int, g: float = PI / 3, variant: Variant | None = None,
                  h: Sequence[float] = ()) -> "CircuitSpec":
        return cls(L=L, g=g, h=tuple(h), variant=variant or DualUnitary())

    @property
    def is_dual_unitary(self) -> bool:
        return self.J == DUAL_UNITARY_ANGLE and self.b == DUAL_UNITARY_ANGLE

    @property
    def homogeneous(self) -> bool:
        return all(x == self.h[0] for x in self.h)

    def with_variant(self, variant: Variant) -> "CircuitSpec":
        return CircuitSpec(self.L, self.J, self.b, self.h, self.g, variant)

    def boundary_gate(self) -> GateU2:
        """Gate acting on site L in the kick layer."""
        if isinstance(self.variant, BOUNDARY_VARIANTS):
            return self.variant.gate
        return kick_gate(self.b)

    def to_dict(self) -> dict:
        v = self.variant
        vd: dict = {"name": v.name}
        if isinstance(v, BoundaryKick):
            vd["theta"] = v.theta
        elif isinstance(v, BoundaryGeneric):
            vd["u"] = [[[float(z.real), float(z.imag)] for z in row] for row in v.u.entries]
        elif isinstance(v, RANDOM_VARIANTS):
            vd["seed"] = v.seed
        return {"L": self.L, "J": self.J, "b": self.b, "h": list(self.h), "g": self.g, "variant": vd}

    @classmethod
    def from_dict(cls, d: dict) -> "CircuitSpec":
        vd = d.get("variant", {"name": "dual"})
        if isinstance(vd, str):
            vd = {"name": vd}
        variant = make_variant(
            vd["name"],
            theta=parse_angle(vd["theta"]) if "theta" in vd else None,
            seed=int(vd.get("seed", 0)),
            u=_parse_matrix(vd["u"]) if "u" in vd else None,
        )
        g = parse_angle(d.get("g", PI / 3))
        h = [parse_angle(x) for x in d.get("h", ())]
        return cls(
            L=int(d["L"]),
            J=parse_angle(d.get("J", DUAL_UNITARY_ANGLE)),
            b=parse_angle(d.get("b", DUAL_UNITARY_ANGLE)),
            h=tuple(h),
            g=g,
            variant=variant,
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "CircuitSpec":
        return cls.from_dict(json.loads(text))

    def to_config(self) -> str:
        d = self.to_dict()
        lines = [f"L={d['L']}", f"J={d['J']!r}", f"b={d['b']!r}", f"g={d['g']!r}",
                 "h=" + ",".join(repr(x) for x in d["h"]), f"variant={d['variant']['name']}"]
        if "theta" in d["variant"]:
            lines.append(f"theta={d['variant']['theta']!r}")
        if "seed" in d["variant"]:
            lines.append(f"seed={d['variant']['seed']}")
        if "u" in d["variant"]:
            flat = [x for row in d["variant"]["u"] for pair in row for x in pair]
            lines.append("u=" + ",".join(repr(x) for x in flat))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_config(cls, text: str) -> "CircuitSpec":
        kv = {}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"expected key=value, got {raw!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            kv[key] = value
        d: dict = {"L": int(kv["L"])}
        for key in ("J", "b", "g"):
            if key in kv:
                d[key] = kv[key]
        if kv.get("h"):
            d["h"] = [s for s in kv["h"].split(",") if s.strip()]
        vd: dict = {"name": kv.get("variant", "dual")}
        if "theta" in kv:
            vd["theta"] = kv["theta"]
        if "seed" in kv:
            vd["seed"] = kv["seed"]
        if "u" in kv:
            flat = [float(s) for s in kv["u"].split(",")]
            if len(flat) != 8:
                raise ValueError("u needs 8 floats (re, im pairs, row-major)")
            vd["u"] = [[flat[0:2], flat[2:4]], [flat[4:6], flat[6:8]]]
        d["variant"] = vd
        return cls.from_dict(d)


def make_variant(name: str, theta: float | None = None, seed: int = 0,
                 u: np.ndarray | None = None) -> Variant:
    name = name.lower()
    if name in ("dual", "dual-unitary", "du"):
        return DualUnitary()
    if name in ("boundary-kick", "kick", "boundary"):
        if theta is None:
            raise ValueError("boundary-kick variant needs theta")
        return BoundaryKick(theta)
    if name in ("boundary-generic", "generic"):
        if u is None:
            raise ValueError("boundary-generic variant needs a gate u")
        return BoundaryGeneric(GateU2(u))
    if name in ("mid1", "mid-single-site"):
        return MidSingleSite(seed)
    if name in ("mid2", "mid-two-site"):
        return MidTwoSite(seed)
    if name in ("random", "brickwork", "random-brickwork"):
        return RandomBrickwork(seed)
    raise ValueError(f"unknown variant {name!r}")


def _parse_matrix(rows) -> np.ndarray:
    return np.array([[complex(re_, im) for re_, im in row] for row in rows])


_ANGLE_RE = re.compile(
    r"^\s*(?P<sign>[+-])?\s*(?P<num>\d+(?:\.\d*)?|\.\d+)?\s*\*?\s*(?:pi|π)\s*(?:/\s*(?P<den>\d+(?:\.\d*)?))?\s*$",
    re.IGNORECASE,
)


def parse_angle(value: Union[str, float, int]) -> float:
    """Parse ``0.3``, ``"pi/3"``, ``"-3pi/8"``, ``"2*pi"`` into radians."""
    if isinstance(value, (int, float)):
        return float(value)
    text = str(value).strip()
    m = _ANGLE_RE.match(text)
    if m is None:
        return float(text)
    num = float(m.group("num")) if m.group("num") else 1.0
    den = float(m.group("den")) if m.group("den") else 1.0
    sign = -1.0 if m.group("sign") == "-" else 1.0
    return sign * num * PI / den


# --- physics ------------------------------------------------------------------


def spins(z: Sequence[int]) -> np.ndarray:
    return 1 - 2 * np.asarray(z, dtype=int)


def ising_phase(z: Sequence[int], spec: CircuitSpec) -> complex:
    """exp(-i [J sum_j s_j s_{j+1} + sum_j h_j s_j]) with open boundaries."""
    if len(z) != spec.L:
        raise ValueError(f"bit-string has {len(z)} bits, spec has L={spec.L}")
    s = spins(z)
    energy = spec.J * float(np.sum(s[:-1] * s[1:])) + float(np.dot(spec.h, s))
    return complex(np.exp(-1j * energy))


def ising_energies(spec: CircuitSpec) -> np.ndarray:
    """Ising energy of every basis index, shape (2**L,)."""
    L = spec.L
    idx = np.arange(1 << L)
    s = 1 - 2 * ((idx[:, None] >> (L - 1 - np.arange(L))[None, :]) & 1)
    return spec.J * np.sum(s[:, :-1] * s[:, 1:], axis=1) + s @ np.asarray(spec.h)


def bits_to_index(z: Sequence[int]) -> int:
    idx = 0
    for bit in z:
        if bit not in (0, 1):
            raise ValueError(f"bits must be 0 or 1, got {bit!r}")
        idx = (idx << 1) | int(bit)
    return idx


def index_to_bits(index: int, L: int) -> tuple:
    if not 0 <= index < (1 << L):
        raise ValueError(f"index {index} out of range for L={L}")
    return tuple((index >> (L - 1 - j)) & 1 for j in range(L))


# --- validation ---------------------------------------------------------------


@dataclass
class Diagnostics:
    errors: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def raise_for_errors(self):
        if self.errors:
            raise ValueError("invalid circuit spec: " + "; ".join(self.errors))


def near_clifford(g: float, tol: float = CLIFFORD_TOL) -> bool:
    k = round(g / (PI / 8))
    return abs(g - k * PI / 8) < tol


def validate(spec: CircuitSpec) -> Diagnostics:
    diag = Diagnostics()
    if not isinstance(spec.L, int) or spec.L < 2:
        diag.errors.append(f"L must be an integer >= 2, got {spec.L!r}")
    if len(spec.h) != spec.L:
        diag.errors.append(f"h has {len(spec.h)} entries, expected L={spec.L}")
    v = spec.variant
    if not isinstance(v, RandomBrickwork) and not spec.is_dual_unitary:
        diag.errors.append(f"dual-unitary mode needs J = b = pi/4, got J={spec.J}, b={spec.b}")
    if isinstance(v, BOUNDARY_VARIANTS):
        err = v.gate.unitarity_error()
        if not err < UNITARY_TOL:
            diag.errors.append(f"boundary gate is not unitary (max |u^dag u - 1| = {err:.3g})")
    if near_clifford(spec.g):
        diag.warnings.append(
            f"g = {spec.g!r} is a multiple of pi/8: the dual gates are Clifford and the "
            "Haar-moment predictions need not hold"
        )
    for j, hj in enumerate(spec.h):
        if hj != spec.g and near_clifford(hj):
            diag.warnings.append(f"h[{j}] = {hj!r} is a multiple of pi/8")
    return diag
