"""Acceptance gate: nine desk-scale checks, one test per criterion.

`pytest -v tests/test_acceptance.py` prints one pass/fail line per
criterion.  Criteria 1-4, 7 and 8 are exact or small Monte Carlo and run
in seconds; criteria 5, 6 and 9 rerun the committed-seed experiments at
full scale and dominate the wall time (several minutes).

Monte Carlo regression values are pinned to the first run of master seed
20260819 (archived under results/).  The seed was fixed before that run
and never searched; the pins record what it produced and guard against
drift.  Ordering assertions follow the resolution rule used throughout
the harness: a difference of distances is claimed only where it exceeds
twice the DKW noise floor.
"""

import math
import time
from itertools import combinations

import numpy as np
import pytest
from scipy import integrate

import symstat as ss
from symstat.hoeffding import statistic_table, verify_appendix1
from symstat.model import SymmetricKernel

from conftest import random_finite

MASTER_SEED = 20260819

IDENT = SymmetricKernel(1, lambda x: x, True, "identity")

# accuracy ladder, first committed run of seed 20260819 (results/):
# N -> (delta_normal, delta_one, delta_two)
ACCURACY_PINS = {
    20: (0.011746482217499354, 0.0018353236148652696, 0.0016209783354544927),
    50: (0.0069779150490437702, 0.00058285129750712539, 0.00051740544818346113),
    100: (0.0058150380454803363, 0.00092780213809062761, 0.00094243762560253241),
    200: (0.003599541058482314, 0.00077300105186262069, 0.00072424241596735772),
}

# lattice probe, same run: N -> (p_interval, p_w1) at delta = 0.5, 1e7 reps
PROBE_PINS = {
    25: (8.21e-05, 9.03e-05),
    49: (5.45e-05, 5.9e-05),
    81: (3.21e-05, 3.52e-05),
    121: (2.28e-05, 2.44e-05),
}

# floors for the scaled counterexample quantities: half the observed minimum
# over the four N of the committed run (0.0041 and 0.0023 respectively), so
# a genuine decay toward zero fails while seed-level jitter cannot
INTERVAL_LEVEL = 0.002
W1_LEVEL = 0.001


def _accuracy_spec(workers: int) -> ss.ExperimentSpec:
    return ss.ExperimentSpec(
        statistic={"family": "u-statistic", "kernel": "gini"},
        distribution=ss.normal(),
        Ns=(20, 50, 100, 200),
        reps=10**6,
        seed=MASTER_SEED,
        workers=workers,
        standardization="theoretical",
        name="gini-normal-accuracy",
    )


@pytest.fixture(scope="module")
def accuracy_run():
    t0 = time.monotonic()
    res = ss.run_experiment(_accuracy_spec(workers=1))
    return res, time.monotonic() - t0


@pytest.fixture(scope="module")
def probe_runs():
    t0 = time.monotonic()
    reports = [
        ss.counterexample_probe(N, delta=0.5, reps=10**7, seed=MASTER_SEED, workers=2)
        for N in (25, 49, 81, 121)
    ]
    return reports, time.monotonic() - t0


def _random_statistic(rng, N: int):
    roll = int(rng.integers(0, 6))
    if roll == 0:
        return ss.sample_mean(N)
    if roll == 1:
        return ss.u_statistic(ss.kernel_gini(), N)
    if roll == 2:
        return ss.u_statistic(ss.kernel_product(), N)
    if roll == 3:
        return ss.u_statistic(ss.kernel_add(), N)
    return ss.u_statistic(ss.kernel_poly(rng.normal(size=(3, 3))), N)


def _product_weights(pr: np.ndarray, N: int) -> np.ndarray:
    W = np.array(1.0)
    for _ in range(N):
        W = np.multiply.outer(W, pr)
    return W


def _reconstruct(dec, table_shape):
    n = len(table_shape)
    recon = np.full(table_shape, dec.mean)
    for k, tab in dec.tables.items():
        for A in combinations(range(n), k):
            shape = tuple(table_shape[i] if i in A else 1 for i in range(n))
            recon = recon + np.asarray(tab).reshape(shape)
    return recon


def test_criterion_1_hoeffding_exactness():
    # 50 random finite-support statistics, N <= 6, at most 4 support points:
    # pointwise reconstruction to 1e-9, conditional degeneracy of every
    # component to 1e-10, variance identity to 1e-10
    t0 = time.monotonic()
    rng = np.random.default_rng(MASTER_SEED)
    for _ in range(50):
        dist = random_finite(rng, max_points=4)
        N = int(rng.integers(3, 7))
        stat = _random_statistic(rng, N)
        dec = ss.decompose(stat, dist)
        table = statistic_table(stat, dist)

        gap = float(np.max(np.abs(_reconstruct(dec, table.shape) - table)))
        assert gap < 1e-9, f"reconstruction gap {gap} for {stat.description}"

        _, pr = dist.support()
        for k, tab in dec.tables.items():
            for ax in range(k):
                resid = np.tensordot(np.asarray(tab), pr, axes=([ax], [0]))
                worst = float(np.max(np.abs(resid)))
                assert worst < 1e-10, f"order {k} degeneracy residual {worst}"

        W = _product_weights(pr, N)
        mu = float((table * W).sum())
        var = float(((table - mu) ** 2 * W).sum())
        err = abs(var - dec.sigma_T2())
        assert err <= 1e-10 * (1.0 + abs(var)), f"variance identity off by {err}"
    assert time.monotonic() - t0 < 60.0


def test_criterion_2_moment_inequalities():
    # remainder bound and variance recursion hold with the correct sign on
    # 100 random exact instances, N in {4, 5, 6}
    t0 = time.monotonic()
    rng = np.random.default_rng(MASTER_SEED + 1)
    for _ in range(100):
        dist = random_finite(rng, max_points=4)
        N = int(rng.integers(4, 7))
        stat = _random_statistic(rng, N)
        rep = verify_appendix1(stat, dist)
        for row in rep["remainder_bounds"] + rep["recursion_bounds"]:
            slack = 1e-9 * (1.0 + abs(row["rhs"]))
            assert row["lhs"] <= row["rhs"] + slack, (stat.description, row)
        assert rep["all_pass"], (stat.description, rep)
    assert time.monotonic() - t0 < 60.0


def test_criterion_3_cumulant_ground_truths():
    t0 = time.monotonic()
    rad = ss.rademacher()
    normal = ss.normal()

    # linear statistic over a symmetric two-point law: exact cumulants
    cs = ss.cumulants(ss.linear_components(IDENT, rad, 10), rad)
    assert cs.kappa3 == 0.0
    assert cs.kappa4 == -2.0

    # h(x, y) = xy + x + y is reducible: the quadratic residual vanishes
    h = ss.kernel_poly([[0.0, 1.0], [1.0, 1.0]])
    red = ss.reducibility(ss.u_stat_components(h, rad, 8), rad)
    assert red.reducible
    assert red.delta3_sq <= 1e-10, f"delta3_sq = {red.delta3_sq}"

    # the pairwise-distance kernel over a normal law is not: delta3^2 > 0
    # at five standard errors from a 1e6-pair oracle
    dec = ss.u_stat_components(ss.kernel_gini(), normal, 20)
    mc = ss.reducibility(dec, normal, mode="mc", reps=10**6, seed=MASTER_SEED)
    assert mc.stderr > 0.0
    assert mc.delta3_sq > 5.0 * mc.stderr, (mc.delta3_sq, mc.stderr)
    assert time.monotonic() - t0 < 120.0


def test_criterion_4_expansion_evaluator():
    # G(0) closed form (the 1/N polynomials vanish at 0), transform matching
    # direct quadrature of dG on |t| <= 20, and exact unit mass at t = 0
    for N, k3, k4 in ((20, 0.68604805687041626, -0.033319363214516631),
                      (25, 0.9, 0.4),
                      (100, -1.3, 2.2)):
        exp = ss.Expansion(N, k3, k4)
        want0 = 0.5 + k3 * math.exp(-0.0) / (6.0 * math.sqrt(N) * math.sqrt(2 * math.pi))
        assert abs(float(exp.cdf(0.0)) - want0) <= 1e-12
        assert complex(exp.fourier(0.0)) == 1.0 + 0.0j

    exp = ss.Expansion(25, 0.9, 0.4)
    for t in (0.5, 3.0, 11.0, 20.0, -7.0):
        re, _ = integrate.quad(lambda x: math.cos(t * x) * float(exp.density(x)),
                               -14, 14, limit=400)
        im, _ = integrate.quad(lambda x: math.sin(t * x) * float(exp.density(x)),
                               -14, 14, limit=400)
        err = abs(complex(exp.fourier(t)) - complex(re, im))
        assert err < 1e-6, f"t={t}: transform off by {err}"


def test_criterion_5_convergence_ordering(accuracy_run):
    res, elapsed = accuracy_run
    assert elapsed <= 1800.0
    rows = {int(r["N"]): r for r in res.rows}
    assert sorted(rows) == [20, 50, 100, 200]
    floor = rows[20]["mc_floor"]
    thresh = 2.0 * floor

    # normal-approximation error clears both expansion errors by more than
    # twice the floor at the two largest N
    for N in (100, 200):
        r = rows[N]
        assert r["delta_normal"] - r["delta_one"] > thresh, (N, r)
        assert r["delta_normal"] - r["delta_two"] > thresh, (N, r)

    # full ordering wherever the difference resolves above the floor; the
    # one-term/two-term gap is O(1/N) and sits below it by design
    order = ("delta_two", "delta_one", "delta_normal")
    for N, r in rows.items():
        for i, lo in enumerate(order):
            for hi in order[i + 1:]:
                if abs(r[hi] - r[lo]) > thresh:
                    assert r[hi] > r[lo], f"N={N}: {hi} < {lo} resolved"

    # N * delta_two non-increasing along the ladder, within the floor's
    # resolution at the larger N of each adjacent pair
    Ns = sorted(rows)
    for a, b in zip(Ns, Ns[1:]):
        jump = rows[b]["n_times_delta_two"] - rows[a]["n_times_delta_two"]
        assert jump <= thresh * b, (a, b, jump)

    # regression pins from the first committed run
    for N, (dn, d1, d2) in ACCURACY_PINS.items():
        r = rows[N]
        assert r["delta_normal"] == pytest.approx(dn, rel=1e-12)
        assert r["delta_one"] == pytest.approx(d1, rel=1e-12)
        assert r["delta_two"] == pytest.approx(d2, rel=1e-12)


def test_criterion_6_lattice_counterexample(probe_runs):
    reports, elapsed = probe_runs
    assert elapsed <= 1800.0
    for rep in reports:
        N = rep["N"]
        # N/delta-scaled interval probability stays bounded away from zero:
        # no o(1/N) decay for the near-lattice statistic
        assert rep["scaled_interval"] >= INTERVAL_LEVEL, (N, rep["scaled_interval"])
        # and the atom W_N = 1 alone carries probability >= c/N
        assert rep["scaled_w1"] >= W1_LEVEL, (N, rep["scaled_w1"])
    for rep in reports:
        pin_int, pin_w1 = PROBE_PINS[rep["N"]]
        assert rep["p_interval"] == pytest.approx(pin_int, rel=1e-12)
        assert rep["p_w1"] == pytest.approx(pin_w1, rel=1e-12)


def test_criterion_7_subset_sum_concentration():
    t0 = time.monotonic()

    # all-equal weights attain the central binomial bound exactly, n <= 12
    for n in range(1, 13):
        inst = ss.SignedSumInstance(vectors=np.ones((n, 1)), r=1.0)
        out = ss.max_ball_count(inst)
        assert out["count"] == ss.kleitman_bound(n), (n, out)

    # 500 random instances, alternating 1-d and 3-d, never exceed it
    rng = np.random.default_rng(MASTER_SEED + 7)
    for i in range(500):
        d = 1 if i % 2 == 0 else 3
        n = int(rng.integers(4, 15))
        v = rng.normal(size=(n, d))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        v *= rng.uniform(1.0, 2.5, size=(n, 1))
        inst = ss.SignedSumInstance(vectors=v, r=1.0)
        out = ss.max_ball_count(inst)
        assert out["count"] <= ss.kleitman_bound(n), (d, n, out)

    # the symmetric-chain partition certifies sparseness up to n = 12
    for n in range(1, 13):
        v = rng.normal(size=(n, 1))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        v *= rng.uniform(1.0, 2.5, size=(n, 1))
        inst = ss.SignedSumInstance(vectors=v, r=1.0)
        classes = ss.symmetric_partition(inst, certify=True)
        assert len(classes) == ss.kleitman_bound(n)
        assert sum(len(c) for c in classes) == 2**n
    assert time.monotonic() - t0 < 300.0


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
def test_criterion_8_characteristic_functions():
    normal = ss.normal()
    rad = ss.rademacher()

    # nondegeneracy margin on a fixed window: exact for the normal law,
    # absent for the 1-periodic modulus of the two-point law
    rho = ss.cramer_rho(lambda x: x, normal, 1.0, 10.0)
    assert abs(rho - (1.0 - math.exp(-0.5))) < 1e-6
    assert ss.cramer_rho(lambda x: x, rad, 1.0, 4.0) <= 1e-6

    # small-t modulus bound for the standardized linear part, with the
    # product form over subset sizes, at N = 1e4 and 1e6
    for dist in (normal, rad):
        for N in (10**4, 10**6):
            dec = ss.linear_components(IDENT, dist, N)
            rep = ss.verify_alpha_bound(dec, dist)
            assert rep["passed"], (dist.kind, N, rep)
            assert rep["product_bound"]["passed"], (dist.kind, N, rep)

    # band-limited smoothing kernel: closed-form transform matches a direct
    # numerical transform to 1e-3, including the dead zone past the cutoff
    a = ss.calibrate_smoothing_scale(k=2, target=0.75)
    ker = ss.smoothing_kernel(2, a)
    for t in (0.0, 0.7, 1.9, 0.9 * ker.cutoff, ker.cutoff, 1.2 * ker.cutoff,
              1.5 * ker.cutoff):
        num, _ = integrate.quad(lambda x: 2.0 * float(ker.density(x)), 0.0, 3000.0,
                                weight="cos", wvar=t, limit=2000)
        err = abs(num - float(ker.cf(t)))
        assert err <= 1e-3, f"t={t}: transform error {err}"


def test_criterion_9_worker_determinism(accuracy_run, tmp_path):
    # same spec and seed, different worker counts: identical rows and
    # byte-identical CSVs; only wall time may differ
    res1, _ = accuracy_run
    res2 = ss.run_experiment(_accuracy_spec(workers=2))

    p1, p2 = tmp_path / "w1.csv", tmp_path / "w2.csv"
    res1.to_csv(p1)
    res2.to_csv(p2)
    assert p1.read_bytes() == p2.read_bytes()

    j1, j2 = res1.to_json(), res2.to_json()
    for j in (j1, j2):
        j["metadata"].pop("wall_time_s")
        j["metadata"].pop("workers")
        j["spec"].pop("workers")
    assert j1 == j2
