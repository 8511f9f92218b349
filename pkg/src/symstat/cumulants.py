"""Third and fourth cumulant inputs, reducibility, and expansion side conditions.

The standardized statistic's two-term expansion needs exactly two scalars
built from the decomposition kernels,

    kappa3 = sigma^{-3} (E g^3 + 3 E g(X1) g(X2) psi(X1,X2)),
    kappa4 = sigma^{-4} (E g^4 - 3 sigma^4
             + 12 E g^2(X1) g(X2) psi(X1,X2)
             + 12 E g(X1) g(X2) psi(X1,X3) psi(X2,X3)
             + 4  E g(X1) g(X2) g(X3) chi(X1,X2,X3)),

with sigma^2 = E g^2.  Everything here reduces to expectations of kernel
products: exact sums on a finite support, deterministic quadrature for the
semi-analytic families, or plain Monte Carlo averages.

Reducibility asks whether the quadratic kernel is a symmetrized product of
one-variable functions.  The residual after projecting psi onto
b(x) g(y) + b(y) g(x), with

    b(x) = sigma^{-2} E(psi(x, X2) g(X2)) - (kappa / (2 sigma^4)) g(x),
    kappa = E psi(X1,X2) g(X1) g(X2),

has second moment delta3^2; the statistic is reducible exactly when it
vanishes, and the expansion's validity conditions want it bounded away
from zero relative to Var T.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate

from ._rng import PURPOSE_CUMULANT, blocks, stream
from .errors import InvalidArgumentError, UnsupportedModeError
from .hoeffding import (
    HoeffdingDecomposition,
    _adaptive_mean,
    _law_box,
    delta_from_components,
    exact_support,
)
from .model import Distribution

INPUT_NAMES = ("Eg2", "Eg3", "Eg4", "Eggpsi", "Eg2gpsi", "Eggpsipsi", "Egggchi")
SIDE_NAMES = ("Eabsg3", "Epsi2", "Echi2")


@dataclass
class CumulantSet:
    """sigma2 = E g^2 plus the two expansion cumulants and their moment inputs.

    beta3 is the standardized absolute third moment E|g|^3 / sigma^3; gamma
    and zeta map a power t to the raw absolute moments E|psi|^t and E|chi|^t
    (populated with t = 2 at construction, extended on demand by the side
    condition checker).
    """

    N: int
    sigma2: float
    kappa3: float
    kappa4: float
    inputs: dict
    beta3: float = 0.0
    gamma: dict = field(default_factory=dict)
    zeta: dict = field(default_factory=dict)
    stderr: dict = field(default_factory=dict)
    mode: str = "exact"

    def to_json(self) -> dict:
        return {
            "N": self.N, "mode": self.mode,
            "sigma2": self.sigma2, "kappa3": self.kappa3, "kappa4": self.kappa4,
            "beta3": self.beta3,
            "gamma": {str(k): float(v) for k, v in self.gamma.items()},
            "zeta": {str(k): float(v) for k, v in self.zeta.items()},
            "inputs": {k: float(v) for k, v in self.inputs.items()},
            "stderr": {k: float(v) for k, v in self.stderr.items()},
        }


def _assemble(inputs: dict) -> tuple:
    s2 = inputs["Eg2"]
    s3 = s2 ** 1.5
    k3 = (inputs["Eg3"] + 3.0 * inputs["Eggpsi"]) / s3
    k4 = (inputs["Eg4"] - 3.0 * s2 * s2
          + 12.0 * inputs["Eg2gpsi"]
          + 12.0 * inputs["Eggpsipsi"]
          + 4.0 * inputs["Egggchi"]) / (s2 * s2)
    return k3, k4


# ---------------------------------------------------------------------------
# deterministic paths


def _rule_inputs(dec: HoeffdingDecomposition) -> dict:
    """Kernel-product moments under the decomposition's own quadrature rule.

    Exact on finite supports and for the per-cell rules of the named
    families, whose integrands are piecewise polynomial.
    """
    if dec.quad is None:
        raise UnsupportedModeError("decomposition carries no quadrature rule")
    t, w = dec.quad
    gv = dec.g.eval(t)
    wg = w * gv
    out = {
        "Eg2": float(wg @ gv),
        "Eg3": float(wg @ (gv * gv)),
        "Eg4": float((wg * gv) @ (gv * gv)),
    }
    psi_mat = dec.psi.eval(t[:, None], t[None, :])
    out["Eggpsi"] = float(wg @ psi_mat @ wg)
    out["Eg2gpsi"] = float((wg * gv) @ psi_mat @ wg)
    mvec = psi_mat @ wg
    out["Eggpsipsi"] = float(w @ (mvec * mvec))
    if 3 in dec.tables:
        chi = dec.N ** 2.5 * np.asarray(dec.tables[3])
        out["Egggchi"] = float(np.einsum("i,j,k,ijk->", wg, wg, wg, chi))
    elif dec.source in ("u-statistic", "example1", "linear"):
        out["Egggchi"] = 0.0
    elif t.size ** 3 <= 2 * 10**7:
        chi = dec.chi.eval(t[:, None, None], t[None, :, None], t[None, None, :])
        out["Egggchi"] = float(np.einsum("i,j,k,ijk->", wg, wg, wg, chi))
    else:
        raise UnsupportedModeError("cubic kernel grid too large")
    return out


_USTAT_CACHE: dict = {}


def _chebgrid(fun, lo: float, hi: float, deg: int = 240):
    def _on_unit(u):
        x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * np.atleast_1d(u)
        return np.array([fun(float(xi)) for xi in x])
    coeffs = np.polynomial.chebyshev.chebinterpolate(_on_unit, deg)

    def _ev(x):
        u = (2.0 * np.asarray(x, float) - (lo + hi)) / (hi - lo)
        return np.polynomial.chebyshev.chebval(u, coeffs)
    return _ev


def _ustat_pair_moments(dec: HoeffdingDecomposition, dist: Distribution) -> dict:
    """h-level moments for a degree-2 U-statistic over a continuous law.

    Independence reduces every pair integral to 1-d adaptive quadrature of
    smooth conditional means: with qg(z) = E g(Y) h(z, Y),

        E g g psi       = c * E[g qg],
        E g^2 g psi     = c * (E[g^2 qg] - sigma^4),
        E g g psi psi   = c^2 * E[(qg - sigma^2)^2].
    """
    key = (id(dec.meta["h"]), json.dumps(dist.to_json(), sort_keys=True))
    if key in _USTAT_CACHE:
        return _USTAT_CACHE[key]
    h, h1, Eh = dec.meta["h"], dec.meta["h1"], dec.meta["Eh"]
    sigma2 = dec.meta["sigma2"]
    lo, hi, pdf = _law_box(dist)
    g = lambda x: h1(x) - Eh

    def _qg_scalar(z):
        pts = [z] if lo < z < hi else None
        v, _ = integrate.quad(lambda y: g(y) * h.eval(z, y) * pdf(y), lo, hi,
                              points=pts, limit=300, epsabs=1e-12, epsrel=1e-12)
        return v

    qg = _chebgrid(_qg_scalar, lo, hi)
    out = {
        "Eg3": _adaptive_mean(lambda x: g(x) ** 3, dist),
        "Eg4": _adaptive_mean(lambda x: g(x) ** 4, dist),
        "A": _adaptive_mean(lambda x: g(x) * qg(x), dist),
        "B": _adaptive_mean(lambda x: g(x) ** 2 * qg(x), dist),
        "Q2": _adaptive_mean(lambda x: (qg(x) - sigma2) ** 2, dist),
        "qg": qg,
        # keeping the kernel alive pins its id(), so the cache key can
        # never alias a later object reusing the same address
        "h": h,
    }
    _USTAT_CACHE[key] = out
    return out


def _ustat_inputs(dec: HoeffdingDecomposition, dist: Distribution) -> dict:
    m = _ustat_pair_moments(dec, dist)
    c = dec.meta["c"]
    s2 = dec.meta["sigma2"]
    return {
        "Eg2": s2, "Eg3": m["Eg3"], "Eg4": m["Eg4"],
        "Eggpsi": c * m["A"],
        "Eg2gpsi": c * (m["B"] - s2 * s2),
        "Eggpsipsi": c * c * m["Q2"],
        "Egggchi": 0.0,
    }


# ---------------------------------------------------------------------------
# Monte Carlo path


def _mc_inputs(dec: HoeffdingDecomposition, dist: Distribution, reps: int, seed: int):
    """Plain sample means of the kernel products, with blockwise stderr.

    kappa estimates re-assemble per block; the spread of block values gives
    the reported cumulant standard errors.
    """
    names = INPUT_NAMES + SIDE_NAMES
    sums = {k: 0.0 for k in names}
    sums2 = {k: 0.0 for k in names}
    block_k3, block_k4 = [], []
    n = 0
    for bi, size in blocks(reps):
        rng = stream(seed, PURPOSE_CUMULANT, 0, bi)
        x = dist.sample((size, 3), rng=rng)
        g1 = dec.g.eval(x[:, 0])
        g2 = dec.g.eval(x[:, 1])
        g3 = dec.g.eval(x[:, 2])
        p12 = dec.psi.eval(x[:, 0], x[:, 1])
        p13 = dec.psi.eval(x[:, 0], x[:, 2])
        p23 = dec.psi.eval(x[:, 1], x[:, 2])
        c123 = dec.chi.eval(x[:, 0], x[:, 1], x[:, 2])
        vals = {
            "Eg2": g1 * g1, "Eg3": g1 ** 3, "Eg4": g1 ** 4,
            "Eggpsi": g1 * g2 * p12,
            "Eg2gpsi": g1 * g1 * g2 * p12,
            "Eggpsipsi": g1 * g2 * p13 * p23,
            "Egggchi": g1 * g2 * g3 * c123,
            "Eabsg3": np.abs(g1) ** 3,
            "Epsi2": p12 * p12,
            "Echi2": c123 * c123,
        }
        bmeans = {}
        for k, v in vals.items():
            sums[k] += float(v.sum())
            sums2[k] += float((v * v).sum())
            bmeans[k] = float(v.mean())
        if bmeans["Eg2"] > 0:
            k3b, k4b = _assemble(bmeans)
            block_k3.append(k3b)
            block_k4.append(k4b)
        n += size
    inputs = {k: sums[k] / n for k in names}
    stderr = {k: math.sqrt(max(sums2[k] / n - inputs[k] ** 2, 0.0) / n) for k in names}
    nb = len(block_k3)
    stderr["kappa3"] = float(np.std(block_k3, ddof=1) / math.sqrt(nb)) if nb > 1 else float("inf")
    stderr["kappa4"] = float(np.std(block_k4, ddof=1) / math.sqrt(nb)) if nb > 1 else float("inf")
    return inputs, stderr


def cumulants(dec: HoeffdingDecomposition, dist: Distribution, mode: str = "exact",
              reps: int = 10**6, seed: int = 0) -> CumulantSet:
    """Cumulant inputs for the expansion of (T - ET)/sigma.

    mode "exact" takes whatever deterministic route the decomposition
    supports (finite enumeration, per-cell rules, adaptive quadrature for
    U-statistics over continuous laws); "mc" averages kernel products over
    fresh triples.
    """
    if mode == "exact":
        if dec.source == "u-statistic" and exact_support(dist) is None:
            inputs = _ustat_inputs(dec, dist)
            inputs["Epsi2"] = dec.meta["c"] ** 2 * dec.meta["ht2_var"]
        else:
            inputs = _rule_inputs(dec)
            inputs["Epsi2"] = _abs_moment(dec, dist, 2.0, "psi")
        inputs["Eabsg3"] = _abs_moment(dec, dist, 3.0, "g")
        inputs["Echi2"] = _abs_moment(dec, dist, 2.0, "chi")
        stderr = {k: 0.0 for k in INPUT_NAMES + SIDE_NAMES}
        stderr["kappa3"] = stderr["kappa4"] = 0.0
    elif mode == "mc":
        inputs, stderr = _mc_inputs(dec, dist, reps, seed)
    else:
        raise InvalidArgumentError(f"unknown mode {mode!r}")
    k3, k4 = _assemble(inputs)
    return CumulantSet(N=dec.N, sigma2=inputs["Eg2"], kappa3=k3, kappa4=k4,
                       inputs=inputs,
                       beta3=inputs["Eabsg3"] / inputs["Eg2"] ** 1.5,
                       gamma={2.0: inputs["Epsi2"]}, zeta={2.0: inputs["Echi2"]},
                       stderr=stderr, mode=mode)


# ---------------------------------------------------------------------------
# reducibility


@dataclass
class ReducibilityReport:
    """Residual of psi after projection onto b(x) g(y) + b(y) g(x)."""

    N: int
    delta3_sq: float
    stderr: float
    sigma_T2: float
    kappa: float
    reducible: bool
    mode: str
    b_grid: tuple  # (x nodes, b values)
    consistency: dict  # direct vs expanded residual moment

    def to_json(self) -> dict:
        return {
            "N": self.N, "mode": self.mode,
            "delta3_sq": self.delta3_sq, "stderr": self.stderr,
            "sigma_T2": self.sigma_T2, "kappa": self.kappa,
            "reducible": self.reducible,
            "consistency": {k: float(v) for k, v in self.consistency.items()},
        }


B_GRID_POINTS = 512


def _b_callable(dec: HoeffdingDecomposition, dist: Distribution):
    """The projection coefficient b as an exact callable, plus its pieces.

    m(x) = E psi(x, Y) g(Y) is evaluated exactly at any requested point:
    through the smooth conditional-mean interpolant for U-statistics over
    continuous laws, through the decomposition's quadrature rule otherwise.
    A uniform-grid interpolation of b is NOT used inside any integral: b
    inherits jump discontinuities from lattice-valued kernels, and smearing
    those jumps injects spurious residual mass that can dominate delta3^2.
    The 512-point tabulation returned alongside is a reporting artifact.
    """
    if dec.quad is None:
        raise UnsupportedModeError("decomposition carries no quadrature rule")
    t, w = dec.quad
    gv = dec.g.eval(t)
    wg = w * gv
    sigma2 = float(wg @ gv)

    if dec.source == "u-statistic" and exact_support(dist) is None:
        m_moment = _ustat_pair_moments(dec, dist)
        c = dec.meta["c"]
        kappa = c * m_moment["A"]
        qg = m_moment["qg"]

        def m_of(x):
            return c * (qg(x) - sigma2)
        lo, hi, _ = _law_box(dist)
    else:
        psi_mat = dec.psi.eval(t[:, None], t[None, :])
        kappa = float(wg @ psi_mat @ wg)

        def m_of(x):
            x = np.asarray(x, float)
            return dec.psi.eval(x[..., None], t) @ wg
        lo, hi = float(t.min()), float(t.max())

    def b(x):
        x = np.asarray(x, float)
        return m_of(x) / sigma2 - (kappa / (2.0 * sigma2 * sigma2)) * dec.g.eval(x)

    grid = t if exact_support(dist) is not None else np.linspace(lo, hi, B_GRID_POINTS)
    return b, (grid, b(grid)), kappa, sigma2


def reducibility(dec: HoeffdingDecomposition, dist: Distribution, mode: str = "exact",
                 reps: int = 10**6, seed: int = 0) -> ReducibilityReport:
    """delta3^2 = E (psi - b g - g b)^2 and the reducibility verdict.

    Exact mode declares the statistic reducible when delta3^2 falls below
    1e-8 * Var T; MC mode when the estimate is within 3 standard errors of
    zero.  The consistency rows compare the direct residual moment with the
    expanded form E psi^2 - 4 E[b m] + 2 E[b^2] sigma^2 + 2 (E b g)^2 and
    with the projection identity E psi^2 - 2 E[b^2] sigma^2 - 2 (E b g)^2
    (the latter two agree exactly when b solves the normal equations).
    """
    b, b_grid, kappa, sigma2 = _b_callable(dec, dist)
    t, w = dec.quad
    gv = dec.g.eval(t)
    wg = w * gv

    def resid(x, y):
        return dec.psi.eval(x, y) - b(x) * dec.g.eval(y) - b(y) * dec.g.eval(x)

    if dec.source == "u-statistic" and exact_support(dist) is None:
        # every piece reduces to a smooth 1-d integral: the 2-d rule would
        # see the kernel kink and lose ~1e-4 of accuracy
        c = dec.meta["c"]
        Epsi2 = c * c * dec.meta["ht2_var"]
        qg = _ustat_pair_moments(dec, dist)["qg"]
        m_of = lambda x: c * (qg(x) - sigma2)
        Ebm = _adaptive_mean(lambda x: b(x) * m_of(x), dist)
        Eb2 = _adaptive_mean(lambda x: b(x) ** 2, dist)
        Ebg = _adaptive_mean(lambda x: b(x) * dec.g.eval(x), dist)
    else:
        psi_mat = dec.psi.eval(t[:, None], t[None, :])
        Epsi2 = float((w @ (psi_mat**2)) @ w)
        bv = b(t)
        mv = psi_mat @ wg
        Ebm = float((w * bv) @ mv)
        Eb2 = float((w * bv) @ bv)
        Ebg = float((w * bv) @ gv)

    expanded = Epsi2 - 4.0 * Ebm + 2.0 * Eb2 * sigma2 + 2.0 * Ebg * Ebg
    projection = Epsi2 - 2.0 * Eb2 * sigma2 - 2.0 * Ebg * Ebg

    if dec.source == "u-statistic" and exact_support(dist) is None:
        direct = expanded
    else:
        rs = resid(t[:, None], t[None, :])
        direct = float((w @ (rs * rs)) @ w)

    sigma_T2 = dec.sigma_T2()
    if mode == "exact":
        val, se = direct, 0.0
        verdict = val < 1e-8 * sigma_T2
    elif mode == "mc":
        s = s2 = 0.0
        n = 0
        for bi, size in blocks(reps):
            rng = stream(seed, PURPOSE_CUMULANT, 1, bi)
            xy = dist.sample((size, 2), rng=rng)
            v = resid(xy[:, 0], xy[:, 1]) ** 2
            s += float(v.sum())
            s2 += float((v * v).sum())
            n += size
        val = s / n
        se = math.sqrt(max(s2 / n - val * val, 0.0) / n)
        verdict = val < 3.0 * se
    else:
        raise InvalidArgumentError(f"unknown mode {mode!r}")

    return ReducibilityReport(
        N=dec.N, delta3_sq=val, stderr=se, sigma_T2=sigma_T2, kappa=kappa,
        reducible=bool(verdict), mode=mode, b_grid=b_grid,
        consistency={"direct": direct, "expanded": expanded, "projection": projection},
    )


# ---------------------------------------------------------------------------
# side conditions


@dataclass
class ConditionReport:
    """Implied constants for the validity conditions, with pass/fail rows.

    constants carries the raw ingredients under their usual symbols:
    sigma2 = E g^2, beta3 = E|g|^3 / sigma^3, gamma_r = E|psi|^r,
    zeta_s = E|chi|^s, delta4_sq, rho, delta3_sq.
    """

    N: int
    rows: dict
    constants: dict
    nu: float
    params: dict
    all_pass: bool

    def to_json(self) -> dict:
        return {"N": self.N, "nu": self.nu, "params": self.params,
                "constants": {k: float(v) for k, v in self.constants.items()},
                "rows": self.rows, "all_pass": self.all_pass}


def _abs_moment(dec: HoeffdingDecomposition, dist: Distribution, power: float,
                which: str) -> float:
    """E |kernel|^power for kernel in {g, psi, chi} under the best rule."""
    t, w = dec.quad
    if which == "g":
        if exact_support(dist) is not None or dec.source in ("example1",):
            return float(w @ np.abs(dec.g.eval(t)) ** power)
        lo, hi, pdf = _law_box(dist)
        v, _ = integrate.quad(lambda x: abs(dec.g.eval(x)) ** power * pdf(x),
                              lo, hi, limit=300, epsabs=1e-11, epsrel=1e-11)
        return float(v)
    if which == "psi":
        pm = np.abs(dec.psi.eval(t[:, None], t[None, :])) ** power
        return float((w @ pm) @ w)
    if which == "chi":
        if 3 in dec.tables:
            chi = dec.N ** 2.5 * np.abs(np.asarray(dec.tables[3])) ** power
            return float(np.einsum("i,j,k,ijk->", w, w, w, chi))
        return 0.0
    raise InvalidArgumentError(which)


def check_conditions(dec: HoeffdingDecomposition, dist: Distribution,
                     r: float = 4.5, s: float = 2.5,
                     nu1: float = 0.25, nu2: float = 0.25,
                     A_star: float = 0.25, M_star: float = 100.0,
                     D_star: float = 1.0, delta: float = 0.01,
                     delta_star: float = 0.1, G_star: float = 0.01,
                     grid: int = 4096) -> ConditionReport:
    """Check the five side conditions at the supplied constants.

    Each row reports the implied constant (the tightest value making the
    condition hold) next to the supplied threshold.  nu is
    min(nu1, nu2, s - 2, r - 4) / 600, the exponent entering the error
    bound C N^{-1-nu} (1 + delta_*^{-1} N^{-nu}) and the relaxed
    non-degeneracy floor.
    """
    if not (r > 4.0 and s > 2.0):
        raise InvalidArgumentError("need r > 4 and s > 2")
    if not (0.0 < nu1 < 0.5):
        raise InvalidArgumentError("need nu1 in (0, 1/2)")
    from .charfn import cramer_rho  # local import; charfn builds on model only

    N = dec.N
    sigma_T2 = dec.sigma_T2()
    sigma_T = math.sqrt(sigma_T2)
    t, w = dec.quad
    gv = dec.g.eval(t)
    sigma2 = float((w * gv) @ gv)

    rows = {}
    # moment condition: E g^2 > A* Var T; E|g|^r, E|psi|^r < M* sigma_T^r;
    # E|chi|^s < M* sigma_T^s
    implied_A = sigma2 / sigma_T2
    gamma_r = _abs_moment(dec, dist, r, "psi")
    zeta_s = _abs_moment(dec, dist, s, "chi")
    g_r = _abs_moment(dec, dist, r, "g") / sigma_T**r
    psi_r = gamma_r / sigma_T**r
    chi_s = zeta_s / sigma_T**s
    implied_M = max(g_r, psi_r, chi_s)
    rows["moments"] = {
        "implied_A": implied_A, "A_star": A_star,
        "implied_M": implied_M, "M_star": M_star,
        "pass": bool(implied_A > A_star and implied_M < M_star),
        "detail": {"g_r": g_r, "psi_r": psi_r, "chi_s": chi_s},
    }

    # fourth difference moment: Delta_4^2 / Var T <= N^{1 - 2 nu1} D*
    d4 = delta_from_components(dec, 4) if N >= 4 else 0.0
    implied_D = d4 / sigma_T2 / N ** (1.0 - 2.0 * nu1)
    rows["fourth_difference"] = {
        "implied_D": implied_D, "D_star": D_star,
        "pass": bool(implied_D <= D_star),
    }

    # smoothness: rho over |t| in [1/beta3, N^{nu2 + 1/2}] for g/sigma
    beta3 = _abs_moment(dec, dist, 3.0, "g") / sigma2 ** 1.5
    tmax = N ** (nu2 + 0.5)
    rho = cramer_rho(lambda x: dec.g.eval(x) / math.sqrt(sigma2), dist,
                     1.0 / beta3, tmax, grid=grid)
    rows["smoothness"] = {
        "rho": rho, "delta": delta, "beta3": beta3,
        "t_range": [1.0 / beta3, tmax],
        "pass": bool(rho >= delta),
    }

    # non-degeneracy of the quadratic residual, strict and relaxed
    red = reducibility(dec, dist, mode="exact")
    ratio = red.delta3_sq / sigma_T2
    rows["quadratic_residual"] = {
        "delta3_sq_ratio": ratio, "implied_delta_star": math.sqrt(max(ratio, 0.0)),
        "delta_star": delta_star, "pass": bool(ratio >= delta_star**2),
    }
    nu = min(nu1, nu2, s - 2.0, r - 4.0) / 600.0
    relaxed = ratio * N ** (2.0 * nu)
    rows["quadratic_residual_relaxed"] = {
        "value": relaxed, "G_star": G_star, "nu": nu,
        "pass": bool(relaxed >= G_star),
    }

    all_pass = all(rows[k]["pass"] for k in rows)
    constants = {
        "sigma2": sigma2, "beta3": beta3, "gamma_r": gamma_r, "zeta_s": zeta_s,
        "delta4_sq": d4, "rho": rho, "delta3_sq": red.delta3_sq,
    }
    return ConditionReport(
        N=N, rows=rows, constants=constants, nu=nu,
        params={"r": r, "s": s, "nu1": nu1, "nu2": nu2, "A_star": A_star,
                "M_star": M_star, "D_star": D_star, "delta": delta,
                "delta_star": delta_star, "G_star": G_star},
        all_pass=bool(all_pass),
    )
