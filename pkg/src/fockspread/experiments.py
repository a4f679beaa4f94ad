"""Computations behind the CLI subcommands, free of any file IO."""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import dual, rmt
from .fockspace import (
    du_law,
    histogram,
    ipr,
    ks_statistic,
    participation_entropy,
    perturbed_law,
    porter_thomas_law,
)
from .model import (
    BoundaryKick,
    CircuitSpec,
    DualUnitary,
    MidSingleSite,
    MidTwoSite,
    RandomBrickwork,
)
from .statevector import evolve, trajectory

ERGODIC_THRESHOLD = 0.1
MODELS = ("dual", "random", "mid1", "mid2")


def reference_law(spec: CircuitSpec, t: int):
    v = spec.variant
    if isinstance(v, DualUnitary):
        return du_law(spec.L, t)
    if isinstance(v, BoundaryKick):
        return perturbed_law(spec.L, t, v.theta)
    return None


def distributions(spec: CircuitSpec, ts, bins: int = 50, x_max: float | None = None) -> list:
    """(t, histogram, ks_vs_reference, ks_vs_porter_thomas) for each requested t."""
    wanted = sorted(set(int(t) for t in ts))
    out = []
    for state in trajectory(spec, max(wanted)):
        if state.t not in wanted:
            continue
        p = state.probabilities()
        law = reference_law(spec, state.t)
        hist = histogram(p, bins, x_max, reference=law, t=state.t)
        ks_ref = ks_statistic(p, law) if law is not None else math.nan
        out.append((state.t, hist, ks_ref, ks_statistic(p, porter_thomas_law(spec.L))))
    return out


@dataclass
class DualCheck:
    L: int
    t: int
    max_modulus_dev: float
    max_complex_dev: float
    unitarity_error: float


def dual_verify(L_max: int = 8, t_max: int = 5, g: float = math.pi / 3, L_min: int = 2) -> list:
    rows = []
    for L in range(L_min, L_max + 1):
        spec = CircuitSpec.self_dual(L, g=g)
        for t in range(1, t_max + 1):
            direct = evolve(spec, t).amps
            dts = dual.build_dual_set(spec, t)
            via = dual.all_overlaps(dts)
            rows.append(DualCheck(L, t, float(np.max(np.abs(np.abs(via) - np.abs(direct)))),
                                  float(np.max(np.abs(via - direct))), dts.unitarity_error()))
    return rows


def model_variant(model: str, seed: int):
    return {"dual": lambda: DualUnitary(), "random": lambda: RandomBrickwork(seed),
            "mid1": lambda: MidSingleSite(seed), "mid2": lambda: MidTwoSite(seed)}[model]()


def s2_curve(spec: CircuitSpec, t_max: int) -> np.ndarray:
    return np.array([participation_entropy(ipr(s.probabilities(), 2), 2) for s in trajectory(spec, t_max)])


def realization_seed(master_seed: int, model: str, L: int, r: int) -> int:
    """Per-realization gate seed drawn from the (master, model, L, r) stream."""
    tag = MODELS.index(model) if model in MODELS else 99
    return int(rmt.stream_rng(master_seed, 1000 + tag, L, r).integers(0, 2**63 - 1))


def ergodic_time(S: np.ndarray, L: int, threshold: float = ERGODIC_THRESHOLD) -> int | None:
    """First t with |S_2(t) - (L-1) ln 2| < threshold."""
    gap = np.abs(np.asarray(S) - (L - 1) * math.log(2))
    hits = np.flatnonzero(gap < threshold)
    return int(hits[0]) if hits.size else None


@dataclass
class CompareResult:
    model: str
    L: int
    mean: np.ndarray
    sem: np.ndarray
    realizations: int
    t_star: int | None


def compare(models=MODELS, Ls=(10, 12, 14), realizations: int = 50, seed: int = 0, t_max: int = 20,
            threshold: float = ERGODIC_THRESHOLD, threads: int = 1, g: float = math.pi / 3) -> list:
    results = []
    for model in models:
        for L in Ls:
            n = 1 if model == "dual" else realizations
            specs = [CircuitSpec.self_dual(L, g=g, variant=model_variant(model, realization_seed(seed, model, L, r)))
                     for r in range(n)]
            if threads > 1:
                with ThreadPoolExecutor(max_workers=threads) as pool:
                    curves = list(pool.map(lambda s: s2_curve(s, t_max), specs))
            else:
                curves = [s2_curve(s, t_max) for s in specs]
            arr = np.array(curves)
            mean = arr.mean(axis=0)
            sem = arr.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros_like(mean)
            results.append(CompareResult(model, L, mean, sem, n, ergodic_time(mean, L, threshold)))
    return results


def haar_check(d: int = 8, q: int = 2, samples: int = 100_000, seed: int = 0):
    t0 = time.perf_counter()
    est = rmt.mc_moment(d, q, samples, seed)
    exact = rmt.haar_moment_closed(d, q)
    return est, exact, est.z_score(exact), time.perf_counter() - t0
