"""Observation laws, symmetric kernels and symmetric statistics.

Everything downstream (decompositions, cumulants, experiments) is built on
the two expectation oracles defined here: exact enumeration over a finite
support, and seeded Monte Carlo for sampler-backed laws.  Observations are
real-valued throughout.

Conventions
-----------
* Statistic and kernel callbacks are vectorized: a statistic maps an array
  of shape (..., N) to shape (...); a kernel of arity k maps k broadcastable
  arrays to one array.
* Statistics constructed by this module sort their input before evaluating,
  and evaluate through expressions whose value does not depend on argument
  order.  This makes permutation invariance hold to exact float equality,
  not just in exact arithmetic.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import special

from ._rng import PURPOSE_EXPECT, blocks, stream
from .errors import BudgetError, InvalidArgumentError, UnsupportedModeError

ENUM_BUDGET = 10**8  # max product-support points for exact expectations

_SAMPLER_NAMES = ("normal", "uniform", "rademacher")


# ---------------------------------------------------------------------------
# distributions


@dataclass(frozen=True)
class Distribution:
    """An observation law: finite support with probabilities, or a named sampler.

    Finite laws give exact expectations by enumeration.  Sampler laws give
    seeded Monte Carlo; the named ones (normal, uniform, rademacher) also
    expose a Gauss quadrature rule, which several modules use as a
    deterministic stand-in for exactness on continuous laws.
    """

    kind: str  # "finite" | "sampler"
    points: Optional[np.ndarray] = None
    probs: Optional[np.ndarray] = None
    name: Optional[str] = None
    params: dict = field(default_factory=dict)
    seed: int = 0
    moments_hint: Optional[tuple] = None  # (mean, var) if known

    def __post_init__(self):
        if self.kind == "finite":
            pts = np.asarray(self.points, dtype=float)
            pr = np.asarray(self.probs, dtype=float)
            if pts.ndim != 1 or pts.shape != pr.shape or pts.size == 0:
                raise InvalidArgumentError("finite support must be a nonempty 1-d pairing")
            if np.any(pr <= 0):
                raise InvalidArgumentError("support probabilities must be strictly positive")
            if abs(pr.sum() - 1.0) > 1e-12:
                raise InvalidArgumentError(f"probabilities sum to {pr.sum()!r}, not 1")
            if np.unique(pts).size != pts.size:
                raise InvalidArgumentError("support points must be distinct")
            order = np.argsort(pts)
            pts = pts[order].copy()
            pr = pr[order].copy()
            pts.flags.writeable = False
            pr.flags.writeable = False
            object.__setattr__(self, "points", pts)
            object.__setattr__(self, "probs", pr)
        elif self.kind == "sampler":
            if self.name not in _SAMPLER_NAMES:
                raise InvalidArgumentError(f"unknown sampler {self.name!r}")
        else:
            raise InvalidArgumentError(f"unknown distribution kind {self.kind!r}")

    # -- basic facts

    @property
    def is_finite(self) -> bool:
        return self.kind == "finite"

    def support(self):
        if not self.is_finite:
            raise UnsupportedModeError("sampler-backed law has no finite support")
        return self.points, self.probs

    def mean(self) -> float:
        if self.moments_hint is not None:
            return float(self.moments_hint[0])
        if self.is_finite:
            return float(self.points @ self.probs)
        if self.name == "normal":
            return float(self.params.get("mean", 0.0))
        if self.name == "uniform":
            a, b = self._uniform_ab()
            return 0.5 * (a + b)
        return 0.0  # rademacher

    def var(self) -> float:
        if self.moments_hint is not None:
            return float(self.moments_hint[1])
        if self.is_finite:
            mu = float(self.points @ self.probs)
            return float(((self.points - mu) ** 2) @ self.probs)
        if self.name == "normal":
            return float(self.params.get("sd", 1.0)) ** 2
        if self.name == "uniform":
            a, b = self._uniform_ab()
            return (b - a) ** 2 / 12.0
        return 1.0  # rademacher

    def _uniform_ab(self):
        a = float(self.params.get("a", -0.5))
        b = float(self.params.get("b", 0.5))
        if not b > a:
            raise InvalidArgumentError("uniform needs b > a")
        return a, b

    # -- sampling

    def sample(self, size, stream_id: int = 0, rng: Optional[np.random.Generator] = None) -> np.ndarray:
        """Draw observations.

        The stream is fully determined by (self.seed, stream_id); callers
        that manage their own seeding pass an explicit generator instead.
        """
        if rng is None:
            rng = stream(self.seed, 0, stream_id)
        if self.is_finite:
            idx = rng.choice(self.points.size, size=size, p=self.probs)
            return self.points[idx]
        if self.name == "normal":
            mean = float(self.params.get("mean", 0.0))
            sd = float(self.params.get("sd", 1.0))
            return mean + sd * rng.standard_normal(size)
        if self.name == "uniform":
            a, b = self._uniform_ab()
            return a + (b - a) * rng.random(size)
        # rademacher
        return rng.integers(0, 2, size=size).astype(float) * 2.0 - 1.0

    # -- quadrature (deterministic expectations for named continuous laws)

    def quad(self, n: int = 201):
        """Nodes and weights integrating against this law (weights sum to 1)."""
        if self.is_finite:
            return self.points, self.probs
        if self.name == "normal":
            # scipy's rule stays stable at high node counts where the
            # recurrence-based one overflows
            t, w = special.roots_hermitenorm(n)
            mean = float(self.params.get("mean", 0.0))
            sd = float(self.params.get("sd", 1.0))
            return mean + sd * t, w / math.sqrt(2.0 * math.pi)
        if self.name == "uniform":
            a, b = self._uniform_ab()
            t, w = np.polynomial.legendre.leggauss(n)
            return 0.5 * (a + b) + 0.5 * (b - a) * t, 0.5 * w
        # rademacher is really a finite law
        return np.array([-1.0, 1.0]), np.array([0.5, 0.5])

    # -- serialization

    def to_json(self) -> dict:
        if self.is_finite:
            return {"kind": "finite", "support": [[float(x), float(p)] for x, p in zip(self.points, self.probs)]}
        return {"kind": "sampler", "name": self.name, "params": dict(self.params), "seed": int(self.seed)}


def finite(support) -> Distribution:
    """Finite-support law from (point, probability) pairs."""
    pts = [x for x, _ in support]
    pr = [p for _, p in support]
    return Distribution(kind="finite", points=np.array(pts, float), probs=np.array(pr, float))


def normal(mean: float = 0.0, sd: float = 1.0, seed: int = 0) -> Distribution:
    return Distribution(kind="sampler", name="normal", params={"mean": mean, "sd": sd}, seed=seed)


def uniform(a: float = -0.5, b: float = 0.5, seed: int = 0) -> Distribution:
    return Distribution(kind="sampler", name="uniform", params={"a": a, "b": b}, seed=seed)


def rademacher(seed: int = 0) -> Distribution:
    return Distribution(kind="sampler", name="rademacher", params={}, seed=seed)


def distribution_from_json(obj) -> Distribution:
    """Parse {"kind":"finite","support":[[x,p],...]} or
    {"kind":"sampler","name":...,"params":{...},"seed":...}."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    kind = obj.get("kind")
    if kind == "finite":
        return finite(obj["support"])
    if kind == "sampler":
        return Distribution(
            kind="sampler",
            name=obj.get("name"),
            params=dict(obj.get("params", {})),
            seed=int(obj.get("seed", 0)),
        )
    raise InvalidArgumentError(f"unknown distribution kind {kind!r}")


# ---------------------------------------------------------------------------
# kernels and statistics


@dataclass(frozen=True)
class SymmetricKernel:
    """A symmetric function of k real arguments.

    pairsum, if set, evaluates sum_{i<j} h(x_i, x_j) over rows of an already
    sorted (..., N) array in O(N log N); it exists so degree-2 U-statistics
    stay usable at Monte Carlo scale.
    """

    arity: int
    eval: Callable
    symmetry_certified: bool = False
    name: str = ""
    pairsum: Optional[Callable] = None

    def __call__(self, *args):
        return self.eval(*args)


@dataclass(frozen=True)
class SymmetricStatistic:
    """A symmetric function of N observations, evaluated on (..., N) arrays."""

    N: int
    eval: Callable
    description: str = ""

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.N:
            raise InvalidArgumentError(f"last axis must have length N={self.N}, got {x.shape[-1]}")
        return self.eval(x)


def _gini_pairsum(xs):
    # sum_{i<j} (x_(j) - x_(i)) = sum_k (2k - 1 - N) x_(k) on sorted rows
    n = xs.shape[-1]
    w = 2.0 * np.arange(1, n + 1) - 1.0 - n
    return xs @ w


def _product_pairsum(xs):
    s = xs.sum(axis=-1)
    return 0.5 * (s * s - (xs * xs).sum(axis=-1))


def _add_pairsum(xs):
    return (xs.shape[-1] - 1) * xs.sum(axis=-1)


def kernel_gini() -> SymmetricKernel:
    return SymmetricKernel(2, lambda x, y: np.abs(x - y), True, "gini", _gini_pairsum)


def kernel_product() -> SymmetricKernel:
    return SymmetricKernel(2, lambda x, y: x * y, True, "product", _product_pairsum)


def kernel_add() -> SymmetricKernel:
    return SymmetricKernel(2, lambda x, y: x + y, True, "add", _add_pairsum)


def kernel_poly(coeffs) -> SymmetricKernel:
    """Symmetric bivariate polynomial sum_{a<=b} c[a][b] (x^a y^b + x^b y^a)/ (1 if a==b else 1).

    coeffs is a square lower/upper-triangular-agnostic matrix; it is
    symmetrized so the callback is exactly order-invariant.
    """
    c = np.asarray(coeffs, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise InvalidArgumentError("poly kernel needs a square coefficient matrix")
    c = 0.5 * (c + c.T)

    def _eval(x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        xp = [np.ones_like(x)]
        yp = [np.ones_like(y)]
        for _ in range(c.shape[0] - 1):
            xp.append(xp[-1] * x)
            yp.append(yp[-1] * y)
        out = 0.0
        for a in range(c.shape[0]):
            for b in range(a, c.shape[0]):
                if a == b:
                    out = out + c[a, a] * xp[a] * yp[a]
                else:
                    # written as a symmetric pair so float evaluation commutes
                    out = out + c[a, b] * (xp[a] * yp[b] + xp[b] * yp[a])
        return out

    return SymmetricKernel(2, _eval, True, "poly")


KERNELS = {
    "gini": kernel_gini,
    "product": kernel_product,
    "add": kernel_add,
}


def kernel_from_json(obj) -> SymmetricKernel:
    if isinstance(obj, str):
        if obj in KERNELS:
            return KERNELS[obj]()
        raise InvalidArgumentError(f"unknown kernel {obj!r}")
    kind = obj.get("kind")
    if kind in KERNELS:
        return KERNELS[kind]()
    if kind == "poly":
        return kernel_poly(obj["coeffs"])
    raise InvalidArgumentError(f"unknown kernel kind {kind!r}")


# ---------------------------------------------------------------------------
# statistic constructors


def u_statistic(h: SymmetricKernel, N: int) -> SymmetricStatistic:
    """Degree-2 U-statistic sqrt(N)/2 * C(N,2)^{-1} sum_{i<j} h(X_i, X_j)."""
    if h.arity != 2:
        raise InvalidArgumentError("u_statistic needs an arity-2 kernel")
    if N < 2:
        raise InvalidArgumentError("u_statistic needs N >= 2")
    scale = math.sqrt(N) / 2.0 / math.comb(N, 2)

    if h.pairsum is not None:
        def _eval(x):
            xs = np.sort(x, axis=-1)
            return scale * h.pairsum(xs)
    else:
        def _eval(x):
            xs = np.sort(x, axis=-1)
            acc = 0.0
            for i in range(N - 1):
                for j in range(i + 1, N):
                    acc = acc + h.eval(xs[..., i], xs[..., j])
            return scale * acc

    return SymmetricStatistic(N, _eval, f"u-statistic[{h.name or 'h'}] N={N}")


def sample_mean(N: int) -> SymmetricStatistic:
    if N < 1:
        raise InvalidArgumentError("sample_mean needs N >= 1")

    def _eval(x):
        return np.sort(x, axis=-1).sum(axis=-1) / N

    return SymmetricStatistic(N, _eval, f"sample mean N={N}")


def example1_statistic(N: int) -> SymmetricStatistic:
    """The product statistic (W + V/sqrt(N)) (1 - V/sqrt(N)) over Uniform(-1/2,1/2).

    W is the average of the nearest integers of sqrt(N) X_j and V the scaled
    sum of the fractional remainders; ties at half-integers round to even
    (a probability-zero set under the continuous uniform law).  Intended for
    N = m^2 with m odd, where W and V are exactly independent and the
    rounded values are uniform on {-(m-1)/2, ..., (m-1)/2}.
    """
    if N < 1:
        raise InvalidArgumentError("example1 needs N >= 1")
    root = math.sqrt(N)

    def _eval(x):
        y = root * np.sort(x, axis=-1)
        r = np.rint(y)
        W = r.sum(axis=-1) / N
        V = (y - r).sum(axis=-1) / root
        return (W + V / root) * (1.0 - V / root)

    return SymmetricStatistic(N, _eval, f"example1 N={N}")


def statistic_from_json(obj, N: Optional[int] = None) -> tuple:
    """Build (statistic, kernel-or-None) from a family description.

    {"family":"u-statistic","kernel":...,"N":...} |
    {"family":"example1","N":...} | {"family":"sample-mean","N":...}
    """
    fam = obj.get("family")
    n = int(obj.get("N", N or 0))
    if fam in ("u-statistic", "u_statistic"):
        h = kernel_from_json(obj["kernel"])
        return u_statistic(h, n), h
    if fam == "example1":
        return example1_statistic(n), None
    if fam in ("sample-mean", "sample_mean"):
        return sample_mean(n), None
    raise InvalidArgumentError(f"unknown statistic family {fam!r}")


# ---------------------------------------------------------------------------
# expectation oracle


def expect(dist: Distribution, f: Callable, m: int, mode: str = "exact",
           reps: int = 10**5, seed: int = 0, stream_id: int = 0):
    """E f(X_1, ..., X_m) for i.i.d. X_i ~ dist.

    Returns (value, stderr).  Exact mode enumerates the product support
    (finite laws only, support^m capped at 10^8 points) and has stderr 0.
    MC mode averages over `reps` independent draws in fixed-size blocks so
    the result is reproducible for a given (seed, stream_id).
    """
    if m < 1:
        raise InvalidArgumentError("m must be >= 1")
    if mode == "exact":
        if not dist.is_finite:
            raise UnsupportedModeError("exact expectation needs a finite-support law")
        pts, pr = dist.support()
        if pts.size ** m > ENUM_BUDGET:
            raise BudgetError(f"support^m = {pts.size ** m} exceeds {ENUM_BUDGET}")
        grids = np.meshgrid(*([pts] * m), indexing="ij", sparse=True)
        wgrids = np.meshgrid(*([pr] * m), indexing="ij", sparse=True)
        vals = np.asarray(f(*grids), dtype=float)
        w = wgrids[0]
        for wg in wgrids[1:]:
            w = w * wg
        vals = np.broadcast_to(vals, w.shape)
        return float((vals * w).sum()), 0.0
    if mode == "mc":
        if reps < 1:
            raise InvalidArgumentError("reps must be >= 1")
        total = 0.0
        total_sq = 0.0
        for bi, size in blocks(reps):
            rng = stream(seed, PURPOSE_EXPECT, stream_id, bi)
            draws = dist.sample((size, m), rng=rng)
            vals = np.asarray(f(*(draws[:, j] for j in range(m))), dtype=float)
            total += float(vals.sum())
            total_sq += float((vals * vals).sum())
        mean = total / reps
        var = max(total_sq / reps - mean * mean, 0.0)
        return mean, math.sqrt(var / reps)
    raise InvalidArgumentError(f"unknown mode {mode!r}")
