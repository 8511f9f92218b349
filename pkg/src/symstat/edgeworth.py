"""Two-term expansion of the standardized distribution function.

For S = (T - ET)/sigma_T with cumulant inputs kappa3, kappa4 computed from
the decomposition kernels, the approximating function is

    G(x) = Phi(x) - kappa3/(6 sqrt(N)) (x^2 - 1) phi(x)
         - (1/N) [ kappa3^2/72 (x^5 - 10 x^3 + 15 x)
                 + kappa4/24  (x^3 - 3 x) ] phi(x).

G is a signed approximation: it is asymptotically a distribution function
but may dip below 0 or exceed 1 in the tails for finite N, and its
derivative can go slightly negative.  Order 0 keeps Phi alone, order 1 adds
the skewness term, order 2 both corrections.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import ndtr

from .errors import InvalidArgumentError

SQRT2PI = math.sqrt(2.0 * math.pi)


def _phi(x):
    return np.exp(-0.5 * x * x) / SQRT2PI


def he3(x):
    return x**3 - 3.0 * x


def he4(x):
    return x**4 - 6.0 * x**2 + 3.0


def he5(x):
    return x**5 - 10.0 * x**3 + 15.0 * x


def he6(x):
    return x**6 - 15.0 * x**4 + 45.0 * x**2 - 15.0


@dataclass(frozen=True)
class Expansion:
    """The expansion for one sample size and cumulant pair.

    order fixes which corrections the evaluation methods include by default
    (0 normal only, 1 adds skewness, 2 both); each method also takes an
    explicit order argument that overrides it.
    """

    N: int
    kappa3: float
    kappa4: float
    order: int = 2

    def __post_init__(self):
        if self.order not in (0, 1, 2):
            raise InvalidArgumentError("order must be 0, 1 or 2")
        if self.N < 1:
            raise InvalidArgumentError("needs N >= 1")

    def terms(self, x):
        """The three additive pieces of G: Phi, the 1/sqrt(N) and 1/N corrections."""
        x = np.asarray(x, dtype=float)
        p = _phi(x)
        t0 = ndtr(x)
        t1 = -self.kappa3 / (6.0 * math.sqrt(self.N)) * (x * x - 1.0) * p
        t2 = -(self.kappa3**2 / 72.0 * he5(x) + self.kappa4 / 24.0 * he3(x)) * p / self.N
        return {"normal": t0, "order1": t1, "order2": t2}

    def cdf(self, x, order: Optional[int] = None):
        order = self.order if order is None else order
        t = self.terms(x)
        if order == 0:
            return t["normal"]
        if order == 1:
            return t["normal"] + t["order1"]
        if order == 2:
            return t["normal"] + t["order1"] + t["order2"]
        raise InvalidArgumentError("order must be 0, 1 or 2")

    def density(self, x, order: Optional[int] = None):
        """dG/dx via the Hermite recurrence (d/dx)[He_k phi] = -He_{k+1} phi."""
        order = self.order if order is None else order
        x = np.asarray(x, dtype=float)
        p = _phi(x)
        out = np.ones_like(x)
        if order >= 1:
            out = out + self.kappa3 / (6.0 * math.sqrt(self.N)) * he3(x)
        if order >= 2:
            out = out + (self.kappa3**2 / 72.0 * he6(x) + self.kappa4 / 24.0 * he4(x)) / self.N
        if order not in (0, 1, 2):
            raise InvalidArgumentError("order must be 0, 1 or 2")
        return p * out

    def fourier(self, t, order: Optional[int] = None):
        """int e^{itx} dG(x): the expansion's characteristic function."""
        order = self.order if order is None else order
        t = np.asarray(t, dtype=complex)
        base = np.exp(-0.5 * t * t)
        f = np.ones_like(t)
        if order >= 1:
            f = f + self.kappa3 / 6.0 * (1j * t) ** 3 / math.sqrt(self.N)
        if order >= 2:
            f = f + (self.kappa4 / 24.0 * (1j * t) ** 4
                     + self.kappa3**2 / 72.0 * (1j * t) ** 6) / self.N
        if order not in (0, 1, 2):
            raise InvalidArgumentError("order must be 0, 1 or 2")
        return base * f

    def density_sup(self, lo: float = -12.0, hi: float = 12.0, grid: int = 4096) -> float:
        """sup |dG/dx| on a grid with local golden-section sharpening."""
        xs = np.linspace(lo, hi, grid)
        vals = np.abs(self.density(xs))
        k = int(np.argmax(vals))
        a = xs[max(k - 1, 0)]
        b = xs[min(k + 1, grid - 1)]
        f = lambda x: -abs(float(self.density(x)))
        return -_golden_min(f, a, b, 1e-10)

    def to_json(self) -> dict:
        return {"N": self.N, "kappa3": self.kappa3, "kappa4": self.kappa4,
                "order": self.order}


def _golden_min(f, a: float, b: float, tol: float) -> float:
    """Plain golden-section minimization on [a, b]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while abs(b - a) > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return min(fc, fd)


def expansion_cdf(x, N: int, kappa3: float, kappa4: float, order: int = 2):
    return Expansion(N, kappa3, kappa4).cdf(x, order)


def expansion_density(x, N: int, kappa3: float, kappa4: float, order: int = 2):
    return Expansion(N, kappa3, kappa4).density(x, order)


def expansion_fourier(t, N: int, kappa3: float, kappa4: float, order: int = 2):
    return Expansion(N, kappa3, kappa4).fourier(t, order)


def kolmogorov_distance(values, cdf) -> float:
    """sup_x |F_n(x) - G(x)| for the empirical law of `values`.

    The supremum of the difference against a continuous comparison function
    is attained at a jump of the empirical CDF, from one side or the other,
    so it is evaluated exactly on the sorted sample.
    """
    xs = np.sort(np.asarray(values, dtype=float).ravel())
    n = xs.size
    if n == 0:
        raise InvalidArgumentError("empty sample")
    gx = np.asarray(cdf(xs), dtype=float)
    hi = np.arange(1, n + 1) / n - gx
    lo = gx - np.arange(0, n) / n
    return float(max(hi.max(), lo.max()))
