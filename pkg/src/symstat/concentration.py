"""Anticoncentration of signed sums: ball counts and sparse partitions.

For vectors x_1, ..., x_n in R^d with every norm at least r, the number of
the 2^n signed sums  sum_i eps_i x_i  (eps_i = +-1) inside any open ball of
radius r is at most binomial(n, floor(n/2)).  The certificate here is the
classical chain construction: the sign patterns are partitioned into that
many r-sparse classes (pairwise distances >= 2r), and an open radius-r ball
can hold at most one point of each class.

This is the structural fact behind N^{-1/2}-anticoncentration of lattice
statistics, and the reason the usual smoothing route cannot give o(N^{-1/2})
without a nondegeneracy assumption on top.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist

from .errors import BudgetError, CertificationError, InvalidArgumentError

MAX_ENUM_BITS_1D = 22   # 2^22 scalar sums: sort-based exact window
MAX_ENUM_BITS_ND = 14   # tree queries over 2^n points in d > 1
MAX_PARTITION_BITS = 16
MIDPOINT_CENTER_BITS = 10  # pair midpoints only while C(2^n, 2) stays small
_STRICT = 1e-12  # open-ball slack: points this close to the shell don't count


@dataclass(frozen=True)
class SignedSumInstance:
    """n vectors in R^d and a ball radius r with every ||x_i|| >= r."""

    vectors: np.ndarray
    r: float

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] == 0:
            raise InvalidArgumentError("vectors must form a nonempty (n, d) array")
        if not (self.r > 0):
            raise InvalidArgumentError("radius r must be positive")
        norms = np.linalg.norm(v, axis=1)
        if np.any(norms < self.r * (1.0 - _STRICT)):
            raise InvalidArgumentError("every vector must have norm at least r")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "vectors", v)

    @property
    def n(self) -> int:
        return int(self.vectors.shape[0])

    @property
    def d(self) -> int:
        return int(self.vectors.shape[1])

    def sums(self) -> np.ndarray:
        """All 2^n signed sums; row index is the sign bitmask (bit i set -> +x_i)."""
        if self.n > MAX_ENUM_BITS_1D:
            raise BudgetError(f"2^{self.n} signed sums exceed the enumeration budget")
        s = np.zeros((1, self.d))
        for x in self.vectors:
            s = np.vstack([s - x, s + x])
        return s

    @classmethod
    def from_json(cls, obj) -> "SignedSumInstance":
        """Parse {"vectors": [[...], ...], "r": 1.0}; scalar entries mean d = 1."""
        if isinstance(obj, str):
            obj = json.loads(obj)
        vecs = obj["vectors"]
        arr = np.asarray([[v] if np.isscalar(v) else list(v) for v in vecs], dtype=float)
        return cls(vectors=arr, r=float(obj.get("r", 1.0)))

    def to_json(self) -> dict:
        return {"vectors": self.vectors.tolist(), "r": self.r}


def kleitman_bound(n: int) -> int:
    """binomial(n, floor(n/2)): the ball-count ceiling for n signed vectors."""
    if n < 1:
        raise InvalidArgumentError("n must be a positive integer")
    return math.comb(n, n // 2)


def symmetric_partition(inst: SignedSumInstance, certify: bool = True):
    """Partition the sign patterns into kleitman_bound(n) sparse classes.

    Returns a list of lists of bitmasks.  Induction on the vectors: a class
    K with extreme pattern s* (maximizing <sum, x>) splits into the shifted
    class {s - x} + {s* + x} and the remainder {s + x, s != s*}; the argmax
    choice is exactly what keeps the new long class 2r-separated.

    With certify=True the construction is re-checked from scratch: classes
    cover each pattern once, the class count equals the binomial bound, and
    every within-class pairwise distance is >= 2r (up to float slack).
    """
    n = inst.n
    if n > MAX_PARTITION_BITS:
        raise BudgetError(f"partition over 2^{n} patterns exceeds the budget")
    x0 = inst.vectors[0]
    chains = [([0, 1], np.vstack([-x0, x0]))]
    for i in range(1, n):
        x = inst.vectors[i]
        bit = 1 << i
        nxt = []
        for patterns, sums in chains:
            j = int(np.argmax(sums @ x))
            big_p = list(patterns) + [patterns[j] | bit]
            big_s = np.vstack([sums - x, sums[j] + x])
            nxt.append((big_p, big_s))
            if len(patterns) > 1:
                keep = [k for k in range(len(patterns)) if k != j]
                nxt.append(([patterns[k] | bit for k in keep], sums[keep] + x))
        chains = nxt
    classes = [p for p, _ in chains]
    if certify:
        if len(classes) != kleitman_bound(n):
            raise CertificationError(
                f"{len(classes)} classes != binomial bound {kleitman_bound(n)}")
        flat = sorted(p for cl in classes for p in cl)
        if flat != list(range(1 << n)):
            raise CertificationError("classes do not partition the sign patterns")
        all_sums = inst.sums()
        gap = 2.0 * inst.r * (1.0 - 1e-9)
        for cl in classes:
            if len(cl) > 1 and pdist(all_sums[cl]).min() < gap:
                raise CertificationError("a class is not 2r-separated")
    return classes


def _window_count_1d(sums: np.ndarray, width: float) -> tuple:
    """Exact max count of points in an open interval of given width."""
    s = np.sort(sums.ravel())
    hi = np.searchsorted(s, s + width, side="left")
    counts = hi - np.arange(s.size)
    k = int(np.argmax(counts))
    # midpoint of the window's extreme points: both end up strictly inside
    center = 0.5 * (s[k] + s[hi[k] - 1])
    return int(counts[k]), np.array([center])


def max_ball_count(inst: SignedSumInstance) -> dict:
    """Largest number of signed sums inside one open ball of radius r.

    d = 1: exact (sliding window over the sorted sums).  d > 1: a certified
    lower bound from candidate centers at the sums and, for small n, at all
    pairwise midpoints; the true maximum can only be larger, and the
    binomial ceiling applies to it as well.
    """
    n = inst.n
    if inst.d == 1:
        count, center = _window_count_1d(inst.sums(), 2.0 * inst.r)
        exact = True
    else:
        if n > MAX_ENUM_BITS_ND:
            raise BudgetError(f"2^{n} points in d = {inst.d} exceed the query budget")
        sums = inst.sums()
        centers = [sums]
        if n <= MIDPOINT_CENTER_BITS:
            ii, jj = np.triu_indices(sums.shape[0], k=1)
            centers.append(0.5 * (sums[ii] + sums[jj]))
        tree = cKDTree(sums)
        radius = inst.r * (1.0 - _STRICT)
        best, best_c = 0, None
        for block in centers:
            for s in range(0, block.shape[0], 1 << 16):
                chunk = block[s:s + (1 << 16)]
                cnt = tree.query_ball_point(chunk, radius, return_length=True)
                k = int(np.argmax(cnt))
                if cnt[k] > best:
                    best, best_c = int(cnt[k]), chunk[k]
        count, center, exact = best, best_c, False
    return {
        "count": count,
        "center": [float(c) for c in np.atleast_1d(center)],
        "bound": kleitman_bound(n),
        "exact": exact,
        "n": n,
        "d": inst.d,
        "r": inst.r,
    }
