"""Fock-space delocalization observables and their closed-form references.

All reference laws are written in the rescaled variable x = N p (N = 2**L).
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

ATOM_RTOL = 1e-9
INF = math.inf


def _probabilities(state_or_probs) -> np.ndarray:
    if hasattr(state_or_probs, "probabilities"):
        return state_or_probs.probabilities()
    return np.asarray(state_or_probs, dtype=float)


# --- IPRs -----------------------------------------------------------------------


def ipr(state_or_probs, q: int) -> float:
    """sum_z |<z|psi>|^{2q}, correctly rounded (math.fsum)."""
    if q < 1 or int(q) != q:
        raise ValueError(f"q must be a positive integer, got {q!r}")
    p = _probabilities(state_or_probs)
    return math.fsum(p ** int(q))


def participation_entropy(I_q: float, q: int) -> float:
    if q == 1:
        raise ValueError("q = 1 (Shannon limit) is not supported")
    return math.log(I_q) / (1 - q) + 0.0


def _log_du_bracket(t: float, q: int) -> float:
    """ln[q! d^q / (d (d+1) ... (d+q-1))] with d = 2**(t-1)."""
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    tau = t - 1
    if math.isinf(tau):
        return math.lgamma(q + 1)
    # ln prod (1 + k/d) summed term by term keeps precision for large d
    d_inv = 2.0 ** (-tau)
    return math.lgamma(q + 1) - math.fsum(math.log1p(k * d_inv) for k in range(q))


def log_ipr_du_analytic(L: int, t: float, q: int) -> float:
    return L * (1 - q) * math.log(2.0) + _log_du_bracket(t, q)


def ipr_du_analytic(L: int, t: float, q: int) -> float:
    """Dual-unitary IPR after t periods; ``t = math.inf`` gives the Haar value."""
    return math.exp(log_ipr_du_analytic(L, t, q))


def s_q_du_analytic(L: int, t: float, q: int) -> float:
    if q == 1:
        raise ValueError("q = 1 (Shannon limit) is not supported")
    return log_ipr_du_analytic(L, t, q) / (1 - q)


def haar_ipr(L: int, q: int) -> float:
    return math.exp(math.lgamma(q + 1) + L * (1 - q) * math.log(2.0))


def _c_pm(t: float, theta: float) -> tuple:
    r = math.cos(2 * theta) ** t
    return 1.0 + r, 1.0 - r


def ipr_perturbed_analytic(L: int, t: float, q: int, theta: float) -> float:
    """IPR with the last-site kick detuned to exp(-i theta sigma^x)."""
    cp, cm = _c_pm(t, theta)
    return ipr_du_analytic(L, t, q) * (cp ** q + cm ** q) / 2


# --- reference laws ---------------------------------------------------------------


@dataclass(frozen=True)
class Component:
    """One rescaled dual-unitary law in x = N p.

    ``d`` is the dual dimension 2**(t-1): d = 1 is an atom at x = scale,
    d = inf is the exponential law with mean ``scale``; scale = 0 is an atom at 0.
    """

    weight: float
    scale: float
    d: float

    @property
    def is_atom(self) -> bool:
        return self.scale == 0 or self.d == 1

    @property
    def location(self) -> float:
        return 0.0 if self.scale == 0 else self.scale

    @property
    def upper(self) -> float:
        return self.location if self.is_atom else self.scale * self.d

    def pdf(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.is_atom:
            return np.zeros_like(x)
        y = x / self.scale
        if math.isinf(self.d):
            out = np.exp(-y)
        else:
            d = self.d
            inside = (y >= 0) & (y <= d)
            with np.errstate(divide="ignore", invalid="ignore"):
                body = np.ones_like(y) if d == 2 else np.exp((d - 2) * np.log1p(-np.clip(y, 0, d) / d))
            out = np.where(inside, (1 - 1 / d) * body, 0.0)
        out = np.where(y < 0, 0.0, out)
        return self.weight * out / self.scale

    def cdf(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.is_atom:
            return self.weight * (x >= self.location * (1 - ATOM_RTOL)).astype(float)
        y = np.clip(x / self.scale, 0, None)
        if math.isinf(self.d):
            return self.weight * -np.expm1(-y)
        d = self.d
        with np.errstate(divide="ignore"):
            tail = np.exp((d - 1) * np.log1p(-np.minimum(y, d) / d))
        return self.weight * (1 - tail)

    def cdf_left(self, x: np.ndarray) -> np.ndarray:
        if self.is_atom:
            x = np.asarray(x, dtype=float)
            return self.weight * (x > self.location * (1 + ATOM_RTOL)).astype(float)
        return self.cdf(x)

    def moment(self, q: int) -> float:
        """Closed-form E[x^q] * weight; used only as a cross-check."""
        if self.is_atom:
            return self.weight * self.location ** q
        if math.isinf(self.d):
            return self.weight * math.factorial(q) * self.scale ** q
        return self.weight * self.scale ** q * math.exp(
            math.lgamma(q + 1) + q * math.log(self.d) - sum(math.log(self.d + k) for k in range(q)))


@dataclass(frozen=True)
class OverlapLaw:
    """Distribution of N p as a weighted mixture of :class:`Component`."""

    L: int
    components: tuple
    label: str = ""

    @property
    def N(self) -> float:
        return 2.0 ** self.L

    def atoms(self) -> list:
        """(x, weight) pairs, merged by location."""
        merged: dict = {}
        for c in self.components:
            if c.is_atom and c.weight > 0:
                merged[c.location] = merged.get(c.location, 0.0) + c.weight
        return sorted(merged.items())

    def pdf_x(self, x) -> np.ndarray:
        return sum((c.pdf(x) for c in self.components), np.zeros_like(np.asarray(x, dtype=float)))

    def cdf_x(self, x) -> np.ndarray:
        return sum((c.cdf(x) for c in self.components), np.zeros_like(np.asarray(x, dtype=float)))

    def cdf_left_x(self, x) -> np.ndarray:
        return sum((c.cdf_left(x) for c in self.components), np.zeros_like(np.asarray(x, dtype=float)))

    def pdf(self, p) -> np.ndarray:
        """Continuous density in p (atoms excluded)."""
        return self.N * self.pdf_x(self.N * np.asarray(p, dtype=float))

    def cdf(self, p) -> np.ndarray:
        return self.cdf_x(self.N * np.asarray(p, dtype=float))

    def cdf_left(self, p) -> np.ndarray:
        return self.cdf_left_x(self.N * np.asarray(p, dtype=float))

    def snap(self, x: np.ndarray) -> np.ndarray:
        """Move samples within ATOM_RTOL of an atom onto it."""
        x = np.array(x, dtype=float)
        for loc, _ in self.atoms():
            close = np.abs(x - loc) <= ATOM_RTOL * max(loc, 0.0)
            x[close] = loc
        return x


def du_law(L: int, t: int) -> OverlapLaw:
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    return OverlapLaw(L, (Component(1.0, 1.0, 2.0 ** (t - 1)),), f"dual-unitary t={t}")


def porter_thomas_law(L: int) -> OverlapLaw:
    return OverlapLaw(L, (Component(1.0, 1.0, INF),), "porter-thomas")


def uniform_law(L: int) -> OverlapLaw:
    """Uniform on [0, 2**(1-L)], identical to the t = 2 dual-unitary law."""
    return OverlapLaw(L, (Component(1.0, 1.0, 2.0),), "uniform")


def perturbed_law(L: int, t: int, theta: float, atom_tol: float = 1e-12) -> OverlapLaw:
    """Two rescaled dual-unitary laws with scales c+ and c-; c- below ``atom_tol`` is an atom at 0."""
    cp, cm = _c_pm(t, theta)
    d = 2.0 ** (t - 1)
    comps = [Component(0.5, cp, d)]
    comps.append(Component(0.5, 0.0, d) if cm < atom_tol else Component(0.5, cm, d))
    return OverlapLaw(L, tuple(comps), f"perturbed t={t} theta={theta!r}")


def p_du_density(p, L: int, t: int) -> np.ndarray:
    if t < 2:
        raise ValueError("t = 1 is a point mass at p = 2**-L; use du_law(L, 1)")
    return du_law(L, t).pdf(p)


def porter_thomas_density(p, L: int) -> np.ndarray:
    return porter_thomas_law(L).pdf(p)


def p_perturbed_density(p, L: int, t: int, theta: float) -> np.ndarray:
    """Continuous part; a vanishing c- shows up in ``perturbed_law(...).atoms()``."""
    if t < 2:
        raise ValueError("t = 1 is a sum of point masses; use perturbed_law(L, 1, theta)")
    return perturbed_law(L, t, theta).pdf(p)


def _segments(hi: float) -> list:
    edges = [0.0]
    x = 1.0
    while x < hi:
        edges.append(x)
        x *= 4.0
    edges.append(hi)
    return list(zip(edges[:-1], edges[1:]))


def moment_of_density(law: OverlapLaw, L: int | None = None, q: int = 2) -> float:
    """2**L * integral p^q P(p) dp by adaptive quadrature, atoms added exactly."""
    L = law.L if L is None else L
    total = []
    for c in law.components:
        if c.is_atom:
            total.append(c.weight * c.location ** q)
            continue
        hi = c.upper
        if math.isinf(hi):
            hi = c.scale * (60.0 + 4 * q)  # tail below 1e-20 relative
        for a, b in _segments(hi):
            val, _ = integrate.quad(lambda x: x ** q * c.pdf(x), a, b,
                                    epsabs=0.0, epsrel=1e-13, limit=200)
            total.append(val)
    return math.fsum(total) * 2.0 ** (L * (1 - q))


# --- histograms and KS ------------------------------------------------------------


@dataclass
class OverlapHistogram:
    edges: np.ndarray          # bin edges in N p
    counts: np.ndarray
    zero_count: int
    samples: int
    L: int
    t: int | None = None
    analytic: np.ndarray | None = None        # bin-averaged reference density in N p
    analytic_zero: float | None = None
    porter_thomas: np.ndarray | None = None

    @property
    def density(self) -> np.ndarray:
        return self.counts / (self.samples * np.diff(self.edges))

    def rows(self) -> list:
        out = [(0.0, 0.0, self.zero_count, self.zero_count / self.samples,
                self.analytic_zero if self.analytic_zero is not None else 0.0, 0.0)]
        dens = self.density
        for i in range(len(self.counts)):
            out.append((self.edges[i], self.edges[i + 1], int(self.counts[i]), dens[i],
                        self.analytic[i] if self.analytic is not None else math.nan,
                        self.porter_thomas[i] if self.porter_thomas is not None else math.nan))
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bin_lo", "bin_hi", "count", "density", "analytic", "porter_thomas"])
        for lo, hi, count, dens, ana, pt in self.rows():
            w.writerow([fmt(lo), fmt(hi), int(count), fmt(dens), fmt(ana), fmt(pt)])
        return buf.getvalue()


def _bin_average(law: OverlapLaw, edges: np.ndarray) -> np.ndarray:
    """Mass of each bin divided by its width, atoms at 0 excluded."""
    mass = np.diff(law.cdf_x(edges))
    zero = sum(w for loc, w in law.atoms() if loc == 0.0)
    mass[0] -= zero
    return mass / np.diff(edges)


def histogram(state_or_probs, bins: int = 50, x_max: float | None = None, *,
              reference: OverlapLaw | None = None, t: int | None = None) -> OverlapHistogram:
    """Equal-width histogram of N p over all bit-strings plus a bucket for exact zeros."""
    if bins < 10:
        raise ValueError(f"need at least 10 bins, got {bins}")
    p = _probabilities(state_or_probs)
    L = int(round(math.log2(p.size)))
    x = p * 2.0 ** L
    zero = x == 0.0
    nz = x[~zero]
    if x_max is None:
        x_max = float(nz.max()) * (1 + 1e-9) if nz.size else 1.0
    edges = np.linspace(0.0, x_max, bins + 1)
    counts, _ = np.histogram(np.clip(nz, 0, x_max), bins=edges)
    h = OverlapHistogram(edges, counts, int(zero.sum()), int(p.size), L, t)
    h.porter_thomas = _bin_average(porter_thomas_law(L), edges)
    if reference is not None:
        h.analytic = _bin_average(reference, edges)
        h.analytic_zero = sum(w for loc, w in reference.atoms() if loc == 0.0)
    return h


def ks_statistic(state_or_probs, cdf: OverlapLaw | Callable, cdf_left: Callable | None = None) -> float:
    """Sup distance between the empirical CDF of {p_z} and a reference CDF.

    ``cdf`` is either an :class:`OverlapLaw` (atoms handled exactly) or a
    right-continuous callable of p; ``cdf_left`` gives its left limits where
    it jumps and defaults to ``cdf``.
    """
    p = _probabilities(state_or_probs)
    n = p.size
    if isinstance(cdf, OverlapLaw):
        law = cdf
        L = law.L
        x = law.snap(p * 2.0 ** L)
        F, F_left = law.cdf_x, law.cdf_left_x
    else:
        x = p
        F = cdf
        F_left = cdf_left or cdf
    values, counts = np.unique(x, return_counts=True)
    right = np.cumsum(counts) / n
    left = right - counts / n
    d_right = np.max(np.abs(right - np.asarray(F(values), dtype=float)))
    d_left = np.max(np.abs(left - np.asarray(F_left(values), dtype=float)))
    return float(max(d_right, d_left))


# --- series -------------------------------------------------------------------------


def fmt(x: float) -> str:
    return format(float(x), ".17g")


@dataclass
class IprRow:
    t: int
    q: int
    I_q: float
    S_q: float
    I_q_analytic: float
    S_q_analytic: float
    haar_ratio: float


@dataclass
class IprSeries:
    L: int
    rows: list = field(default_factory=list)

    COLUMNS = ("t", "q", "I_q", "S_q", "I_q_analytic", "S_q_analytic", "haar_ratio")

    def add(self, t: int, q: int, I_q: float, I_q_analytic: float = math.nan):
        S_q = participation_entropy(I_q, q)
        S_a = math.log(I_q_analytic) / (1 - q) + 0.0 if I_q_analytic > 0 else math.nan
        self.rows.append(IprRow(t, q, I_q, S_q, I_q_analytic, S_a, I_q / haar_ipr(self.L, q)))

    def select(self, q: int | None = None, t: int | None = None) -> list:
        return [r for r in self.rows if (q is None or r.q == q) and (t is None or r.t == t)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS)
        for r in self.rows:
            w.writerow([r.t, r.q] + [fmt(getattr(r, c)) for c in self.COLUMNS[2:]])
        return buf.getvalue()

    def to_records(self) -> list:
        return [dict(zip(self.COLUMNS, (r.t, r.q, r.I_q, r.S_q, r.I_q_analytic, r.S_q_analytic, r.haar_ratio)))
                for r in self.rows]


def analytic_ipr(spec, t: int, q: int) -> float:
    """Closed-form IPR for ``spec``'s variant, or nan when none exists."""
    from .model import BoundaryGeneric, BoundaryKick, DualUnitary

    v = spec.variant
    if t < 1:
        return 1.0
    if isinstance(v, DualUnitary):
        return ipr_du_analytic(spec.L, t, q)
    if isinstance(v, BoundaryKick):
        return ipr_perturbed_analytic(spec.L, t, q, v.theta)
    if isinstance(v, BoundaryGeneric):
        from .dual import ipr_via_m

        return ipr_via_m(spec.L, t, q, v.u)
    return math.nan


def ipr_series(spec, qs: Sequence[int], t_max: int, t_min: int = 0) -> IprSeries:
    from .statevector import trajectory

    series = IprSeries(spec.L)
    for state in trajectory(spec, t_max):
        if state.t < t_min:
            continue
        p = state.probabilities()
        for q in qs:
            series.add(state.t, q, ipr(p, q), analytic_ipr(spec, state.t, q))
    return series
