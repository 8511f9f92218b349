"""Hoeffding decompositions, difference operators and their moment identities.

A symmetric statistic T of N i.i.d. observations splits into orthogonal
canonical components indexed by subsets A of {1..N},

    T = sum_A T_A,   T_A(x_A) = sum_{B subset A} (-1)^{|A|-|B|} E(T | X_B = x_B),

where each T_A is centered and completely degenerate (its conditional
expectation given any proper subset of its arguments vanishes).  With
exchangeable observations T_A depends on |A| only, so one kernel per order
suffices.  The first three orders carry the scaled kernels used by the
Edgeworth machinery:

    T - ET = N^{-1/2} sum_i g(X_i) + N^{-3/2} sum_{i<j} psi(X_i,X_j)
           + N^{-5/2} sum_{i<j<k} chi(X_i,X_j,X_k) + R.

Exact decompositions enumerate a finite support.  Degree-2 U-statistics and
a few named families additionally get closed-form or quadrature-backed
components, usable for continuous laws where enumeration is impossible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from ._rng import PURPOSE_DELTA, blocks, stream
from .errors import BudgetError, InvalidArgumentError, UnsupportedModeError
from .model import (
    ENUM_BUDGET,
    Distribution,
    SymmetricKernel,
    SymmetricStatistic,
    uniform,
)

DECOMPOSE_MAX_N = 12


# ---------------------------------------------------------------------------
# exact tensors over a finite support


def statistic_table(T: SymmetricStatistic, dist: Distribution, chunk: int = 1 << 18) -> np.ndarray:
    """Evaluate T on the full product support, as an (S,)*N array."""
    pts, _ = dist.support()
    S, N = pts.size, T.N
    total = S**N
    if total > ENUM_BUDGET:
        raise BudgetError(f"support^N = {total} exceeds {ENUM_BUDGET}")
    out = np.empty(total)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        digits = np.empty((idx.size, N), dtype=np.int64)
        rem = idx.copy()
        for j in range(N - 1, -1, -1):
            digits[:, j] = rem % S
            rem //= S
        out[start:start + idx.size] = T(pts[digits])
    return out.reshape((S,) * N)


def _weight_tensor(probs: np.ndarray, ndim: int) -> np.ndarray:
    w = probs
    for _ in range(ndim - 1):
        w = np.multiply.outer(w, probs)
    return w


def _contract(table: np.ndarray, probs: np.ndarray, axes) -> np.ndarray:
    """Integrate out the given axes against probs, keeping the rest in order."""
    m = table
    for ax in sorted(axes, reverse=True):
        m = np.tensordot(m, probs, axes=([ax], [0]))
    return m


def _moment_tables(table: np.ndarray, probs: np.ndarray) -> list:
    """M_b(x_1..x_b) = E(T | X_1..X_b) for b = 0..N (M_b symmetric)."""
    out = [table]
    m = table
    for b in range(table.ndim - 1, -1, -1):
        m = np.tensordot(m, probs, axes=([b], [0]))
        out.append(m)
    out.reverse()
    return out


def _canonical_table(moments: list, k: int) -> np.ndarray:
    """T_A table for |A| = k by subset inclusion-exclusion over conditioning sets."""
    S = moments[1].shape[0] if k > 0 else 1
    g = np.zeros((S,) * k) if k > 0 else np.array(0.0)
    for j in range(k + 1):
        for B in combinations(range(k), j):
            shape = tuple(S if i in B else 1 for i in range(k))
            term = moments[j].reshape(shape) if k > 0 else moments[0]
            g = g + (-1) ** (k - j) * np.broadcast_to(term, g.shape)
    return g


def _lookup_kernel(points: np.ndarray, table: np.ndarray, scale: float, name: str) -> SymmetricKernel:
    k = table.ndim

    def _eval(*args):
        idxs = []
        for a in args:
            a = np.asarray(a, dtype=float)
            i = np.clip(np.searchsorted(points, a), 0, points.size - 1)
            # values may sit a rounding error below their support point
            lo = np.clip(i - 1, 0, points.size - 1)
            i = np.where(np.abs(points[lo] - a) < np.abs(points[i] - a), lo, i)
            if np.any(np.abs(points[i] - a) > 1e-9 * (1.0 + np.abs(a))):
                raise InvalidArgumentError("argument not on the finite support")
            idxs.append(i)
        return scale * table[tuple(idxs)]

    return SymmetricKernel(max(k, 1), _eval, True, name)


def _zero_kernel(k: int, name: str) -> SymmetricKernel:
    def _eval(*args):
        return np.zeros(np.broadcast(*args).shape) if len(args) > 1 else np.zeros_like(np.asarray(args[0], float))
    return SymmetricKernel(k, _eval, True, name)


# ---------------------------------------------------------------------------
# decomposition containers


@dataclass
class HoeffdingDecomposition:
    """Canonical kernels and component variances of a symmetric statistic.

    g, psi, chi follow the scaling above (g_1 = N^{-1/2} g etc.).
    component_variance[k] is the variance of the order-k canonical kernel
    T_A itself, so Var T = sum_k C(N,k) * component_variance[k].
    quad Supplies (nodes, weights) integrating kernel expressions against the
    observation law exactly enough to be treated as deterministic truth.
    """

    N: int
    mean: float
    g: SymmetricKernel
    psi: SymmetricKernel
    chi: SymmetricKernel
    component_variance: dict
    source: str = "exact-finite"
    support_points: Optional[np.ndarray] = None
    tables: dict = field(default_factory=dict)
    quad: Optional[tuple] = None  # (nodes, weights) tailored to this family
    meta: dict = field(default_factory=dict)  # family-specific exact-integration hooks

    def sigma_T2(self) -> float:
        return float(sum(math.comb(self.N, k) * v for k, v in self.component_variance.items()))

    def to_json(self) -> dict:
        out = {
            "N": self.N,
            "mean": self.mean,
            "source": self.source,
            "component_variance": {str(k): float(v) for k, v in self.component_variance.items()},
            "sigma_T2": self.sigma_T2(),
        }
        if self.support_points is not None:
            out["support"] = [float(x) for x in self.support_points]
            out["kernel_tables"] = {str(k): np.asarray(t).tolist() for k, t in self.tables.items()}
        return out


@dataclass
class DifferenceMoments:
    """Delta_m^2 = E |N^{m-1/2} D_1...D_m T|^2 for m = 1..4."""

    delta: dict
    stderr: dict
    mode: str


# ---------------------------------------------------------------------------
# exact decomposition


def canonical_component(T: SymmetricStatistic, dist: Distribution, A) -> SymmetricKernel:
    """The canonical kernel T_A as a callable on |A| arguments.

    Exchangeability makes the result depend on |A| only; A is still
    validated as a set of distinct indices in 1..N.
    """
    A = tuple(A)
    if len(set(A)) != len(A) or any(not 1 <= i <= T.N for i in A):
        raise InvalidArgumentError("A must be distinct indices in 1..N")
    if not dist.is_finite:
        raise UnsupportedModeError("canonical components need a finite-support law")
    table = statistic_table(T, dist)
    pts, pr = dist.support()
    moments = _moment_tables(table, pr)
    k = len(A)
    gk = _canonical_table(moments, k)
    if k == 0:
        const = float(gk)
        return SymmetricKernel(1, lambda x: np.full(np.shape(x), const), True, "T_empty")
    return _lookup_kernel(pts, gk, 1.0, f"T_A|{k}")


def decompose(T: SymmetricStatistic, dist: Distribution) -> HoeffdingDecomposition:
    """Full exact decomposition over a finite support (N <= 12)."""
    if not dist.is_finite:
        raise UnsupportedModeError("decompose needs a finite-support law")
    if T.N > DECOMPOSE_MAX_N:
        raise BudgetError(f"N = {T.N} exceeds decomposition budget {DECOMPOSE_MAX_N}")
    pts, pr = dist.support()
    table = statistic_table(T, dist)
    moments = _moment_tables(table, pr)
    mean = float(moments[0])

    comp_var = {}
    tables = {}
    for k in range(1, T.N + 1):
        gk = _canonical_table(moments, k)
        tables[k] = gk
        comp_var[k] = float((gk * gk * _weight_tensor(pr, k)).sum())

    N = T.N
    g = _lookup_kernel(pts, tables[1], math.sqrt(N), "g")
    psi = _lookup_kernel(pts, tables[2], N**1.5, "psi") if N >= 2 else _zero_kernel(2, "psi")
    chi = _lookup_kernel(pts, tables[3], N**2.5, "chi") if N >= 3 else _zero_kernel(3, "chi")
    return HoeffdingDecomposition(
        N=N, mean=mean, g=g, psi=psi, chi=chi,
        component_variance=comp_var, source="exact-finite",
        support_points=pts, tables=tables, quad=(pts, pr),
    )


# ---------------------------------------------------------------------------
# semi-analytic components for named families


def exact_support(dist: Distribution):
    """(points, probs) when the law admits exact finite summation, else None.

    Covers declared finite supports and the two-point rademacher sampler,
    whose quadrature rule is already the exact law.
    """
    if dist.is_finite:
        return dist.support()
    if dist.name == "rademacher":
        return dist.quad()
    return None


def _law_box(dist: Distribution):
    """(lo, hi, pdf) for a continuous named law."""
    if dist.name == "normal":
        mu = float(dist.params.get("mean", 0.0))
        sd = float(dist.params.get("sd", 1.0))
        lo, hi = mu - 10.0 * sd, mu + 10.0 * sd
        c = 1.0 / (sd * math.sqrt(2.0 * math.pi))
        return lo, hi, lambda x: c * np.exp(-0.5 * ((x - mu) / sd) ** 2)
    if dist.name == "uniform":
        a, b = dist._uniform_ab()
        return a, b, lambda x: np.full(np.shape(x), 1.0 / (b - a)) if np.ndim(x) else 1.0 / (b - a)
    raise UnsupportedModeError(f"no density for law {dist.name!r}")


def _adaptive_mean(f: Callable, dist: Distribution, kink=None) -> float:
    """E f(Y) by adaptive quadrature against a continuous named law."""
    lo, hi, pdf = _law_box(dist)
    pts = None
    if kink is not None and lo < kink < hi:
        pts = [kink]
    val, _ = integrate.quad(lambda y: f(y) * pdf(y), lo, hi, points=pts, limit=300,
                            epsabs=1e-12, epsrel=1e-12)
    return val


def conditional_mean_kernel(h: SymmetricKernel, dist: Distribution, deg: int = 240) -> Callable:
    """h_1(x) = E h(x, Y) as a Chebyshev interpolant (continuous named laws).

    The conditional mean is smooth even for kinked kernels (integration
    removes the kink), so a moderate-degree interpolant is exact to near
    machine precision on the law's effective range.
    """
    lo, hi, _ = _law_box(dist)

    def _h1_scalar(x):
        return _adaptive_mean(lambda y: h.eval(x, y), dist, kink=x)

    def _on_unit(u):
        u = np.atleast_1d(u)
        x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * u
        return np.array([_h1_scalar(float(xi)) for xi in x])

    coeffs = np.polynomial.chebyshev.chebinterpolate(_on_unit, deg)

    def _h1(x):
        u = (2.0 * np.asarray(x, float) - (lo + hi)) / (hi - lo)
        return np.polynomial.chebyshev.chebval(u, coeffs)

    return _h1


def u_stat_components(h: SymmetricKernel, dist: Distribution, N: int,
                      deg: int = 240) -> HoeffdingDecomposition:
    """Decomposition of the degree-2 U-statistic sqrt(N)/2 C(N,2)^{-1} sum h.

    Writing h_1(x) = E h(x,Y) and htilde2 = h - h_1(x) - h_1(y) + Eh, the
    scaled kernels come out exactly as g = h_1 - Eh and
    psi = N/(N-1) * htilde2; the cubic kernel and the remainder vanish.
    Works for finite laws (exact sums) and continuous named laws
    (adaptive quadrature behind a Chebyshev interpolant for h_1).
    """
    if h.arity != 2:
        raise InvalidArgumentError("needs an arity-2 kernel")
    if N < 2:
        raise InvalidArgumentError("needs N >= 2")

    sup = exact_support(dist)
    if sup is not None:
        pts, pr = sup
        hmat = h.eval(pts[:, None], pts[None, :])
        h1v = hmat @ pr
        Eh = float(h1v @ pr)

        def h1(x):
            return _lookup_kernel(pts, h1v, 1.0, "h1").eval(x)
        g_of = lambda x: h1(x) - Eh
        sigma2 = float(((h1v - Eh) ** 2) @ pr)
        Eh2 = float(((hmat ** 2) @ pr) @ pr)
        quad_rule = (pts, pr)
    else:
        h1 = conditional_mean_kernel(h, dist, deg=deg)
        Eh = _adaptive_mean(h1, dist)
        g_of = lambda x: h1(x) - Eh
        sigma2 = _adaptive_mean(lambda x: g_of(x) ** 2, dist)
        nodes, weights = dist.quad(401)
        # keep nodes inside the interpolant's box; the mass dropped is
        # far-tail and negligible next to quadrature error
        lo, hi, _ = _law_box(dist)
        keep = (nodes >= lo) & (nodes <= hi)
        nodes, weights = nodes[keep], weights[keep]
        weights = weights / weights.sum()
        hmat = h.eval(nodes[:, None], nodes[None, :])
        Eh2 = float((weights @ (hmat**2)) @ weights)
        quad_rule = (nodes, weights)

    c = N / (N - 1.0)
    scale = math.sqrt(N) / 2.0 / math.comb(N, 2)
    mean = math.comb(N, 2) * scale * Eh

    def _g(x):
        return g_of(np.asarray(x, float))

    def _psi(x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        return c * (h.eval(x, y) - h1(x) - h1(y) + Eh)

    # E htilde2^2 from the orthogonal split h = Eh + g(x) + g(y) + htilde2
    ht2_var = Eh2 - Eh * Eh - 2.0 * sigma2
    comp_var = {1: sigma2 / N, 2: (c * c * ht2_var) / N**3}

    return HoeffdingDecomposition(
        N=N, mean=mean, g=SymmetricKernel(1, _g, True, "g"),
        psi=SymmetricKernel(2, _psi, True, "psi"), chi=_zero_kernel(3, "chi"),
        component_variance=comp_var, source="u-statistic", quad=quad_rule,
        meta={"h": h, "h1": h1, "Eh": Eh, "sigma2": sigma2, "c": c, "ht2_var": ht2_var},
    )


def linear_components(g1: SymmetricKernel, dist: Distribution, N: int) -> HoeffdingDecomposition:
    """Decomposition of T = N^{-1/2} sum g1(X_i): g = g1 - E g1, psi = chi = 0."""
    if g1.arity != 1:
        raise InvalidArgumentError("needs an arity-1 kernel")
    sup = exact_support(dist)
    if sup is not None:
        pts, pr = sup
        Eg1 = float(g1.eval(pts) @ pr)
        sigma2 = float(((g1.eval(pts) - Eg1) ** 2) @ pr)
        quad_rule = (pts, pr)
    else:
        Eg1 = _adaptive_mean(lambda x: g1.eval(x), dist)
        sigma2 = _adaptive_mean(lambda x: (g1.eval(x) - Eg1) ** 2, dist)
        quad_rule = dist.quad(401)

    def _g(x):
        return g1.eval(np.asarray(x, float)) - Eg1

    return HoeffdingDecomposition(
        N=N, mean=math.sqrt(N) * Eg1, g=SymmetricKernel(1, _g, True, "g"),
        psi=_zero_kernel(2, "psi"), chi=_zero_kernel(3, "chi"),
        component_variance={1: sigma2 / N}, source="linear", quad=quad_rule,
    )


def example1_components(N: int) -> HoeffdingDecomposition:
    """Closed-form decomposition of the lattice-interplay product statistic.

    With y = sqrt(N) x, r = [y], f = {y}, the statistic is a quadratic form
    in the per-observation features (r_i, f_i), which collapses the
    decomposition to two orders:

        g(x)      = x - (r f + f^2 - E[rf] - E[f^2]) / N^{3/2},
        psi(x, y) = -(r_x f_y + r_y f_x + 2 f_x f_y) / sqrt(N),

    and mean = -(E[rf] + E[f^2]) / N.  When sqrt(N) is an odd integer the
    feature moments are E[rf] = 0, E[f^2] = 1/12, recovering mean = -1/(12N);
    boundary half-cells at other N shift them slightly.  The quadrature rule
    integrates per lattice cell, where every feature is polynomial, so the
    stored moments are exact.
    """
    if N < 1:
        raise InvalidArgumentError("needs N >= 1")
    root = math.sqrt(N)

    def _feats(x):
        y = root * np.asarray(x, float)
        r = np.rint(y)
        return r, y - r

    # per-cell Gauss rule over (-1/2, 1/2): cells split where y = sqrt(N) x
    # crosses a half-integer (the rounding breakpoints)
    halves = np.arange(math.floor(-root / 2.0), math.ceil(root / 2.0) + 1) + 0.5
    halves = halves[(halves > -root / 2.0 + 1e-12) & (halves < root / 2.0 - 1e-12)]
    edges_y = np.concatenate([[-root / 2.0], halves, [root / 2.0]])
    edges_x = edges_y / root
    t, w = np.polynomial.legendre.leggauss(16)
    nodes, weights = [], []
    for a, b in zip(edges_x[:-1], edges_x[1:]):
        nodes.append(0.5 * (a + b) + 0.5 * (b - a) * t)
        weights.append(0.5 * (b - a) * w)  # density of U(-1/2,1/2) is 1
    nodes = np.concatenate(nodes)
    weights = np.concatenate(weights)

    rn, fn = _feats(nodes)
    mu_rf = float((rn * fn) @ weights)
    m2 = float((fn * fn) @ weights)

    def _g(x):
        r, f = _feats(x)
        return np.asarray(x, float) - (r * f + f * f - mu_rf - m2) / N**1.5

    def _psi(x, y):
        rx, fx = _feats(x)
        ry, fy = _feats(y)
        return -(rx * fy + ry * fx + 2.0 * fx * fy) / root

    gv = _g(nodes)
    sigma2 = float((gv * gv) @ weights)
    psi_mat = _psi(nodes[:, None], nodes[None, :])
    Epsi2 = float((weights @ (psi_mat**2)) @ weights)

    return HoeffdingDecomposition(
        N=N, mean=-(mu_rf + m2) / N, g=SymmetricKernel(1, _g, True, "g"),
        psi=SymmetricKernel(2, _psi, True, "psi"), chi=_zero_kernel(3, "chi"),
        component_variance={1: sigma2 / N, 2: Epsi2 / N**3},
        source="example1", quad=(nodes, weights),
    )


def components_for(family: dict, dist: Distribution) -> HoeffdingDecomposition:
    """Semi-analytic decomposition for a named statistic family description."""
    from .model import kernel_from_json, kernel_poly  # local to avoid cycles

    fam = family.get("family")
    N = int(family["N"])
    if fam in ("u-statistic", "u_statistic"):
        return u_stat_components(kernel_from_json(family["kernel"]), dist, N)
    if fam == "example1":
        return example1_components(N)
    if fam in ("sample-mean", "sample_mean"):
        # mean = N^{-1/2} sum of x/sqrt(N)
        k1 = SymmetricKernel(1, lambda x: np.asarray(x, float) / math.sqrt(N), True, "x/sqrtN")
        return linear_components(k1, dist, N)
    if fam == "linear":
        coeffs = family.get("g", [0.0, 1.0])
        def _p(x, c=tuple(coeffs)):
            return np.polynomial.polynomial.polyval(np.asarray(x, float), c)
        return linear_components(SymmetricKernel(1, _p, True, "poly1"), dist, N)
    raise InvalidArgumentError(f"unknown family {fam!r}")


# ---------------------------------------------------------------------------
# difference operators


def difference_op(T: SymmetricStatistic, dist: Distribution, indices, x,
                  mode: str = "exact", reps: int = 10**4, seed: int = 0) -> float:
    """(D_{i1} ... D_{im} T)(x) by inclusion-exclusion over conditioning sets.

    Each E_S replaces the observations at S with fresh ones and averages:
    exact enumeration on finite laws, common-random-number MC otherwise.
    """
    idx = tuple(int(i) - 1 for i in indices)
    if len(set(idx)) != len(idx):
        raise InvalidArgumentError("indices must be distinct")
    if any(not 0 <= i < T.N for i in idx):
        raise InvalidArgumentError("indices out of range")
    x = np.asarray(x, dtype=float)
    if x.shape != (T.N,):
        raise InvalidArgumentError("x must be a length-N vector")

    total = 0.0
    for j in range(len(idx) + 1):
        for Ssub in combinations(idx, j):
            sgn = (-1.0) ** j
            if j == 0:
                total += sgn * float(T(x))
                continue
            if mode == "exact":
                pts, pr = dist.support()
                if pts.size**j > ENUM_BUDGET:
                    raise BudgetError("conditioning enumeration too large")
                grids = np.meshgrid(*([pts] * j), indexing="ij")
                flat = [gr.ravel() for gr in grids]
                rows = np.tile(x, (flat[0].size, 1))
                for col, vals in zip(Ssub, flat):
                    rows[:, col] = vals
                w = _weight_tensor(pr, j).ravel()
                total += sgn * float(T(rows) @ w)
            elif mode == "mc":
                rng = stream(seed, PURPOSE_DELTA, 0, j, sum(1 << c for c in Ssub))
                rows = np.tile(x, (reps, 1))
                rows[:, list(Ssub)] = dist.sample((reps, j), rng=rng)
                total += sgn * float(T(rows).mean())
            else:
                raise InvalidArgumentError(f"unknown mode {mode!r}")
    return total


def delta_moments(T: SymmetricStatistic, dist: Distribution, mode: str = "exact",
                  reps: int = 2 * 10**4, seed: int = 0) -> DifferenceMoments:
    """Delta_m^2 for m = 1..4.

    Exact mode squares the full difference tensor.  MC mode uses two
    conditionally independent one-draw estimates A, A' of (D_1..D_m T)(X);
    E[A A'] is exactly E (D_1..D_m T)^2, so the product is an unbiased
    estimator with a clean standard error.
    """
    out, err = {}, {}
    mmax = min(4, T.N)
    if mode == "exact":
        pts, pr = dist.support()
        table = statistic_table(T, dist)
        W = _weight_tensor(pr, T.N)
        for m in range(1, mmax + 1):
            D = np.zeros_like(table)
            for j in range(m + 1):
                for Ssub in combinations(range(m), j):
                    c = _contract(table, pr, Ssub)
                    shape = tuple(table.shape[i] if i not in Ssub else 1 for i in range(T.N))
                    D = D + (-1.0) ** j * c.reshape(shape)
            out[m] = float(T.N ** (2 * m - 1) * (D * D * W).sum())
            err[m] = 0.0
    elif mode == "mc":
        for m in range(1, mmax + 1):
            s = s2 = 0.0
            n = 0
            for bi, size in blocks(reps):
                rng = stream(seed, PURPOSE_DELTA, 1, m, bi)
                base = dist.sample((size, T.N), rng=rng)
                fresh = dist.sample((size, m), rng=rng)
                fresh2 = dist.sample((size, m), rng=rng)
                prods = np.ones(size)
                for f in (fresh, fresh2):
                    acc = np.zeros(size)
                    for j in range(m + 1):
                        for Ssub in combinations(range(m), j):
                            rows = base.copy()
                            cols = list(Ssub)
                            if cols:
                                rows[:, cols] = f[:, cols]
                            acc += (-1.0) ** j * T(rows)
                    prods *= acc
                s += float(prods.sum())
                s2 += float((prods * prods).sum())
                n += size
            mean = s / n
            var = max(s2 / n - mean * mean, 0.0)
            scale = T.N ** (2 * m - 1)
            out[m] = scale * mean
            err[m] = scale * math.sqrt(var / n)
    else:
        raise InvalidArgumentError(f"unknown mode {mode!r}")
    for m in range(mmax + 1, 5):
        out[m] = 0.0 if T.N < m else out.get(m, 0.0)
        err[m] = 0.0
    return DifferenceMoments(delta=out, stderr=err, mode=mode)


def delta_from_components(dec: HoeffdingDecomposition, m: int) -> float:
    """Delta_m^2 = N^{2m-1} sum_k sigma_k^2 C(N-m, k-m) from component variances."""
    N = dec.N
    tot = 0.0
    for k, v in dec.component_variance.items():
        if k >= m:
            tot += v * math.comb(N - m, k - m)
    return N ** (2 * m - 1) * tot


def verify_appendix1(T: SymmetricStatistic, dist: Distribution) -> dict:
    """Check the variance identity and the remainder/difference inequalities.

    Rows: identity Var T = sum_k C(N,k) sigma_k^2; the remainder bound
    E R_m^2 <= N^{-(m-1)} Delta_m^2; the recursion
    Delta_m^2 <= N^{2m-1} sigma_m^2 + N^{-1} Delta_{m+1}^2; and agreement of
    Delta_m^2 computed from the definition vs from component variances.
    """
    dec = decompose(T, dist)
    dm = delta_moments(T, dist, mode="exact")
    N = T.N
    tol = 1e-9

    def var_T():
        table = statistic_table(T, dist)
        _, pr = dist.support()
        W = _weight_tensor(pr, N)
        mu = float((table * W).sum())
        return float(((table - mu) ** 2 * W).sum())

    sigma_T2 = var_T()
    rows = {"variance_identity": {
        "lhs": sigma_T2, "rhs": dec.sigma_T2(),
        "pass": bool(abs(sigma_T2 - dec.sigma_T2()) <= tol * (1.0 + abs(sigma_T2)))}}

    remainder = []
    for m in range(1, min(4, N) + 1):
        ER2 = sum(math.comb(N, k) * v for k, v in dec.component_variance.items() if k >= m)
        rhs = N ** (-(m - 1)) * dm.delta[m]
        remainder.append({"m": m, "lhs": ER2, "rhs": rhs, "pass": bool(ER2 <= rhs + tol * (1.0 + abs(rhs)))})
    rows["remainder_bounds"] = remainder

    recursion = []
    deltas = dict(dm.delta)
    for m in range(1, min(4, N - 1) + 1):
        if m + 1 not in deltas or deltas.get(m + 1) is None:
            break
        if m + 1 > min(4, N):
            break
        lhs = deltas[m]
        rhs = N ** (2 * m - 1) * dec.component_variance.get(m, 0.0) + deltas[m + 1] / N
        recursion.append({"m": m, "lhs": lhs, "rhs": rhs, "pass": bool(lhs <= rhs + tol * (1.0 + abs(rhs)))})
    rows["recursion_bounds"] = recursion

    agreement = []
    for m in range(1, min(4, N) + 1):
        lhs = dm.delta[m]
        rhs = delta_from_components(dec, m)
        agreement.append({"m": m, "lhs": lhs, "rhs": rhs,
                          "pass": bool(abs(lhs - rhs) <= tol * (1.0 + abs(rhs)))})
    rows["difference_identity"] = agreement
    rows["all_pass"] = bool(
        rows["variance_identity"]["pass"]
        and all(r["pass"] for r in remainder)
        and all(r["pass"] for r in recursion)
        and all(r["pass"] for r in agreement)
    )
    return rows
