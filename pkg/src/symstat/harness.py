"""Desk-scale experiments: empirical CDF error of the expansion.

One experiment = a statistic family, an observation law, a ladder of sample
sizes, and a replication budget.  For each N the harness draws reps i.i.d.
samples in fixed blocks (reproducible for any worker count), standardizes by
the exact mean and variance from the decomposition, and measures the exact
Kolmogorov distance of the empirical law against the normal, one-term and
two-term approximations.  The DKW band at the chosen confidence is carried
along as the Monte Carlo resolution floor: distances at or below the floor
are noise, and rate fits must discard them.
"""

from __future__ import annotations

import csv
import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import metadata as _ilmd
from typing import Optional

import numpy as np

from ._rng import (PURPOSE_COUNTEREXAMPLE, PURPOSE_EXPERIMENT,
                   PURPOSE_SIGMA_ORACLE, blocks, stream)
from .cumulants import cumulants
from .edgeworth import Expansion, kolmogorov_distance
from .errors import InsufficientSignalError, InvalidArgumentError
from .hoeffding import components_for
from .model import Distribution, distribution_from_json, statistic_from_json, uniform

CSV_COLUMNS = ("N", "reps", "delta_normal", "delta_one", "delta_two", "mc_floor",
               "n_times_delta_two", "kappa3", "kappa4", "sigma2", "seed")


def mc_floor(reps: int, alpha: float = 0.05) -> float:
    """DKW bound: with prob >= 1-alpha the empirical CDF error is below this."""
    if reps < 1:
        raise InvalidArgumentError("reps must be >= 1")
    if not 0.0 < alpha < 1.0:
        raise InvalidArgumentError("alpha must lie in (0, 1)")
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * reps))


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to reproduce one accuracy experiment."""

    statistic: dict
    distribution: Distribution
    Ns: tuple
    reps: int = 10**6
    seed: int = 20260819
    alpha: float = 0.05
    cumulant_mode: str = "exact"        # "exact" | "mc"
    cumulant_reps: int = 10**6
    standardization: str = "theoretical"  # "theoretical" | "empirical" | "oracle"
    workers: int = 1
    name: str = ""

    def __post_init__(self):
        if not self.Ns:
            raise InvalidArgumentError("need at least one sample size")
        object.__setattr__(self, "Ns", tuple(int(n) for n in self.Ns))
        if any(n < 1 for n in self.Ns):
            raise InvalidArgumentError("sample sizes must be positive")
        if any(b <= a for a, b in zip(self.Ns, self.Ns[1:])):
            raise InvalidArgumentError("sample sizes must be strictly increasing")
        if self.reps < 10**3:
            raise InvalidArgumentError("reps must be >= 10^3")
        if not 0.0 < self.alpha < 1.0:
            raise InvalidArgumentError("alpha must lie in (0, 1)")
        if self.cumulant_mode not in ("exact", "mc"):
            raise InvalidArgumentError("cumulant_mode must be 'exact' or 'mc'")
        if self.standardization not in ("theoretical", "empirical", "oracle"):
            raise InvalidArgumentError(
                "standardization must be 'theoretical', 'empirical' or 'oracle'")
        if self.workers < 1:
            raise InvalidArgumentError("workers must be >= 1")

    @classmethod
    def from_json(cls, obj) -> "ExperimentSpec":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(obj) - known
        if extra:
            raise InvalidArgumentError(f"unknown experiment fields: {sorted(extra)}")
        kw = dict(obj)
        kw["distribution"] = distribution_from_json(kw["distribution"])
        kw["Ns"] = tuple(kw["Ns"])
        return cls(**kw)

    def to_json(self) -> dict:
        return {
            "statistic": dict(self.statistic),
            "distribution": self.distribution.to_json(),
            "Ns": list(self.Ns),
            "reps": self.reps,
            "seed": self.seed,
            "alpha": self.alpha,
            "cumulant_mode": self.cumulant_mode,
            "cumulant_reps": self.cumulant_reps,
            "standardization": self.standardization,
            "workers": self.workers,
            "name": self.name,
        }


def simulate_statistic(family: dict, dist: Distribution, reps: int, seed: int,
                       workers: int = 1, purpose: int = PURPOSE_EXPERIMENT) -> np.ndarray:
    """reps independent draws of the statistic, blockwise deterministic.

    Block i always consumes the stream (seed, purpose, N, i), so the result
    is bit-identical for any worker count; threads only race to fill
    disjoint slices of the output.
    """
    T, _ = statistic_from_json(family)
    N = T.N
    out = np.empty(int(reps))
    plan = []
    off = 0
    for bi, size in blocks(int(reps)):
        plan.append((bi, off, size))
        off += size

    def _fill(job):
        bi, lo, size = job
        rng = stream(seed, purpose, N, bi)
        x = dist.sample((size, N), rng=rng)
        out[lo:lo + size] = T(x)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            list(ex.map(_fill, plan))
    else:
        for job in plan:
            _fill(job)
    return out


def sigma_oracle(family: dict, dist: Distribution, reps: int, seed: int,
                 workers: int = 1) -> tuple:
    """Independent MC estimate of (E T, sd T, stderr of sd).

    Uses its own purpose tag so the draws never overlap the experiment's;
    callers that lack exact component variances standardize with this at a
    multiple of the experiment budget so the extra error stays below the
    resolution floor.
    """
    vals = simulate_statistic(family, dist, reps, seed,
                              workers=workers, purpose=PURPOSE_SIGMA_ORACLE)
    mu = float(vals.mean())
    var = float(vals.var(ddof=1))
    # delta-method standard error of the sd via the fourth central moment
    m4 = float(np.mean((vals - mu) ** 4))
    var_of_var = max(m4 - var**2, 0.0) / vals.size
    sd = math.sqrt(var)
    return mu, sd, math.sqrt(var_of_var) / (2.0 * sd) if sd > 0 else float("inf")


@dataclass
class ExperimentResult:
    """Per-N distance rows plus the fitted decay rate and run metadata.

    The CSV holds exactly the reproducible columns, so equal seeds give
    byte-identical files for any worker count; wall time and versions live
    only in the JSON metadata.
    """

    spec: ExperimentSpec
    rows: list = field(default_factory=list)
    fitted: Optional["RateFit"] = None
    fit_note: str = ""
    metadata: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return np.asarray([row[name] for row in self.rows], dtype=float)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_COLUMNS)
            for row in self.rows:
                w.writerow([_cell(row[c]) for c in CSV_COLUMNS])

    def to_json(self) -> dict:
        return {
            "spec": self.spec.to_json(),
            "rows": [dict(r) for r in self.rows],
            "fitted": self.fitted.to_json() if self.fitted is not None else None,
            "fit_note": self.fit_note,
            "metadata": dict(self.metadata),
        }


def _cell(v):
    if isinstance(v, (int, np.integer)):
        return int(v)
    return format(float(v), ".17g")


def _package_version() -> str:
    try:
        return _ilmd.version("symstat")
    except Exception:
        return "unknown"


def run_experiment(spec: ExperimentSpec, purpose: int = PURPOSE_EXPERIMENT) -> ExperimentResult:
    """Execute the accuracy experiment for every N in the ladder.

    Standardization of the draws uses the decomposition's exact mean and
    variance ("theoretical"), the draws' own sample moments ("empirical"),
    or a dedicated independent MC oracle at ten times the budget ("oracle");
    the oracle never reuses the experiment's replications.
    """
    t_start = time.perf_counter()
    dist = spec.distribution
    floor = mc_floor(spec.reps, spec.alpha)
    result = ExperimentResult(spec=spec)
    for N in spec.Ns:
        fam = {**spec.statistic, "N": int(N)}
        dec = components_for(fam, dist)
        cums = cumulants(dec, dist, mode=spec.cumulant_mode,
                         reps=spec.cumulant_reps, seed=spec.seed)
        vals = simulate_statistic(fam, dist, spec.reps, spec.seed,
                                  workers=spec.workers, purpose=purpose)
        if spec.standardization == "theoretical":
            mu, sd = dec.mean, math.sqrt(dec.sigma_T2())
        elif spec.standardization == "oracle":
            mu, sd, _ = sigma_oracle(fam, dist, 10 * spec.reps, spec.seed,
                                     workers=spec.workers)
        else:
            mu, sd = float(vals.mean()), float(vals.std(ddof=1))
        s = np.sort((vals - mu) / sd)
        exp = Expansion(int(N), cums.kappa3, cums.kappa4)
        d0 = kolmogorov_distance(s, lambda x: exp.cdf(x, order=0))
        d1 = kolmogorov_distance(s, lambda x: exp.cdf(x, order=1))
        d2 = kolmogorov_distance(s, lambda x: exp.cdf(x, order=2))
        result.rows.append({
            "N": int(N),
            "reps": int(spec.reps),
            "delta_normal": d0,
            "delta_one": d1,
            "delta_two": d2,
            "mc_floor": floor,
            "n_times_delta_two": N * d2,
            "kappa3": cums.kappa3,
            "kappa4": cums.kappa4,
            "sigma2": cums.sigma2,
            "seed": int(spec.seed),
        })
    try:
        result.fitted = rate_fit(result.column("N"), result.column("delta_two"), floor)
    except InsufficientSignalError as err:
        result.fit_note = str(err)
    result.metadata = {
        "seed": int(spec.seed),
        "workers": int(spec.workers),
        "version": _package_version(),
        "numpy": np.__version__,
        "wall_time_s": time.perf_counter() - t_start,
    }
    return result


@dataclass(frozen=True)
class RateFit:
    """OLS fit of log(distance) against log(N), floor-adjusted.

    band is slope +- 2 standard errors; with fewer than three residual
    degrees of freedom it degenerates gracefully (se = 0 for an exact fit).
    """

    slope: float
    intercept: float
    slope_se: float
    band: tuple
    n_used: int
    used: tuple
    residual_rms: float

    def to_json(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept,
                "slope_se": self.slope_se, "band": list(self.band),
                "n_used": self.n_used, "used": list(self.used),
                "residual_rms": self.residual_rms}


def rate_fit(Ns, deltas, floor, min_points: int = 3) -> RateFit:
    """Fit delta ~ C N^slope where the signal resolves above the MC floor.

    Points with delta <= 2*floor are discarded (the distance is then
    dominated by empirical-CDF noise); the rest have the floor removed in
    quadrature before the log-log regression.  Fewer than min_points
    resolvable points is a refusal, not a fit.
    """
    Ns = np.asarray(Ns, dtype=float)
    deltas = np.asarray(deltas, dtype=float)
    floor_arr = np.broadcast_to(np.asarray(floor, dtype=float), deltas.shape)
    if Ns.shape != deltas.shape:
        raise InvalidArgumentError("Ns and deltas must have matching shapes")
    keep = deltas > 2.0 * floor_arr
    if int(keep.sum()) < min_points:
        raise InsufficientSignalError(
            f"only {int(keep.sum())} of {deltas.size} distances resolve above "
            f"twice the MC floor; need {min_points}")
    adj = np.sqrt(deltas[keep] ** 2 - floor_arr[keep] ** 2)
    x = np.log(Ns[keep])
    y = np.log(adj)
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    rms = math.sqrt(float(resid @ resid) / x.size)
    dof = x.size - 2
    sxx = float(((x - x.mean()) ** 2).sum())
    se = math.sqrt(float(resid @ resid) / dof / sxx) if dof > 0 and sxx > 0 else 0.0
    return RateFit(float(slope), float(intercept), float(se),
                   (float(slope) - 2.0 * se, float(slope) + 2.0 * se),
                   int(keep.sum()), tuple(bool(k) for k in keep), rms)


def counterexample_probe(N: int, delta: float = 0.5, reps: int = 10**6,
                         seed: int = 20260819, workers: int = 1,
                         strict: bool = True, extra_deltas=()) -> dict:
    """Interval mass of the lattice-interplay statistic near its ceiling.

    With y = sqrt(N) x, r the nearest integers and f = y - r, the statistic
    factors as T = (W + V/sqrt(N))(1 - V/sqrt(N)) with W = sum(r)/N and
    V = sum(f)/sqrt(N).  On the lattice event {W = 1} (an integer identity,
    tested exactly) T equals 1 - V^2/N, so the window [1 - delta^2/N, 1]
    contains {W = 1, |V| <= delta}: its probability inherits the N^{-1}
    point mass of the integer sum times the O(delta) mass of the fraction
    sum.  The scaled estimate p_hat * N / delta therefore stays bounded
    away from zero along N, which no estimate with an o(N^{-1}) tail could
    do; that divergence from the smooth theory is what the probe measures.

    When sqrt(N) is an odd integer, W and V are exactly independent and V
    is a sum of N independent uniforms on (-1/2, 1/2) scaled by sqrt(N);
    the report includes the product p(W=1) * p(|V|<delta) next to the
    joint probability as a cross-check.  Other N are accepted only with
    strict=False (a warning notes that the factorization loses exact
    independence there).  extra_deltas evaluates additional window widths
    on the same draws, so monotonicity in delta is checked free of fresh
    sampling noise.
    """
    if int(reps) < 1:
        raise InvalidArgumentError("reps must be >= 1")
    N = int(N)
    if N < 1:
        raise InvalidArgumentError("N must be a positive integer")
    root_i = math.isqrt(N)
    odd_square = root_i * root_i == N and root_i % 2 == 1
    if not odd_square:
        if strict:
            raise InvalidArgumentError(
                f"N = {N} is not an odd square; pass strict=False to proceed")
        warnings.warn(f"N = {N} is not an odd square: the integer and "
                      "fractional parts are no longer exactly independent",
                      stacklevel=2)
    deltas = [float(delta)] + [float(d) for d in extra_deltas]
    if any(not 0.0 < d < 1.0 for d in deltas):
        raise InvalidArgumentError("every window width must lie in (0, 1)")

    root = math.sqrt(N)
    dist = uniform()
    plan = list(blocks(int(reps)))

    def _count(job):
        bi, size = job
        rng = stream(seed, PURPOSE_COUNTEREXAMPLE, N, bi)
        x = dist.sample((size, N), rng=rng)
        y = root * x
        r = np.rint(y)
        w1 = np.rint(r.sum(axis=1)).astype(np.int64) == N
        V = (y - r).sum(axis=1) / root
        T = (r.sum(axis=1) / N + V / root) * (1.0 - V / root)
        cw = int(np.count_nonzero(w1))
        cint, cv, cjoint = [], [], []
        for d in deltas:
            inside = (T >= 1.0 - d * d / N) & (T <= 1.0)
            vband = np.abs(V) < d
            cint.append(int(np.count_nonzero(inside)))
            cv.append(int(np.count_nonzero(vband)))
            cjoint.append(int(np.count_nonzero(vband & w1)))
        return cw, cint, cv, cjoint

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_count, plan))
    else:
        parts = [_count(job) for job in plan]

    n_w = sum(p[0] for p in parts)
    n_int = [sum(p[1][k] for p in parts) for k in range(len(deltas))]
    n_v = [sum(p[2][k] for p in parts) for k in range(len(deltas))]
    n_joint = [sum(p[3][k] for p in parts) for k in range(len(deltas))]

    reps = int(reps)

    def _se(count):
        p = count / reps
        return math.sqrt(p * (1.0 - p) / reps)

    p_w = n_w / reps
    by_delta = []
    for k, d in enumerate(deltas):
        p_int = n_int[k] / reps
        p_v = n_v[k] / reps
        by_delta.append({
            "delta": d,
            "p_interval": p_int,
            "p_interval_se": _se(n_int[k]),
            "scaled_interval": p_int * N / d,
            "p_v": p_v,
            "p_v_se": _se(n_v[k]),
            "p_joint": n_joint[k] / reps,
            "independence_product": p_w * p_v,
        })
    head = by_delta[0]
    return {
        "N": N,
        "delta": deltas[0],
        "reps": reps,
        "seed": int(seed),
        "odd_square": odd_square,
        "p_interval": head["p_interval"],
        "p_interval_se": head["p_interval_se"],
        "scaled_interval": head["scaled_interval"],
        "p_w1": p_w,
        "p_w1_se": _se(n_w),
        "scaled_w1": p_w * N,
        "p_v": head["p_v"],
        "p_v_se": head["p_v_se"],
        "p_joint": head["p_joint"],
        "independence_product": head["independence_product"],
        "by_delta": by_delta,
    }
