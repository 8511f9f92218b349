"""Experiment harness: simulation streams, distance ladders, rate fits, probe."""

import csv
import json
import math

import numpy as np
import pytest

import symstat as ss
from symstat.errors import InsufficientSignalError, InvalidArgumentError
from symstat.harness import CSV_COLUMNS, mc_floor


def _spec(**overrides):
    kw = dict(
        statistic={"family": "u-statistic", "kernel": "gini"},
        distribution=ss.finite([[-1.0, 0.25], [0.0, 0.5], [2.0, 0.25]]),
        Ns=(20, 50),
        reps=2000,
        seed=20260819,
        workers=1,
    )
    kw.update(overrides)
    return ss.ExperimentSpec(**kw)


# ---------------------------------------------------------------------------
# floor and spec plumbing


def test_mc_floor_formula():
    assert mc_floor(10**6, 0.05) == pytest.approx(
        math.sqrt(math.log(40.0) / (2.0 * 10**6)), rel=1e-15
    )
    with pytest.raises(InvalidArgumentError):
        mc_floor(0)
    with pytest.raises(InvalidArgumentError):
        mc_floor(100, alpha=1.5)


def test_spec_invariants():
    with pytest.raises(InvalidArgumentError):
        _spec(Ns=(50, 20))  # not increasing
    with pytest.raises(InvalidArgumentError):
        _spec(Ns=(20, 20))  # not strictly
    with pytest.raises(InvalidArgumentError):
        _spec(reps=100)  # below the MC sanity floor
    with pytest.raises(InvalidArgumentError):
        _spec(standardization="guess")
    with pytest.raises(InvalidArgumentError):
        _spec(workers=0)


def test_spec_json_round_trip():
    spec = _spec(standardization="empirical", name="demo")
    again = ss.ExperimentSpec.from_json(spec.to_json())
    assert again.to_json() == spec.to_json()
    bad = spec.to_json()
    bad["surprise"] = 1
    with pytest.raises(InvalidArgumentError):
        ss.ExperimentSpec.from_json(bad)


# ---------------------------------------------------------------------------
# simulation streams


def test_simulate_statistic_worker_invariant():
    fam = {"family": "u-statistic", "kernel": "gini", "N": 12}
    dist = ss.normal()
    one = ss.simulate_statistic(fam, dist, 60_000, seed=5, workers=1)
    four = ss.simulate_statistic(fam, dist, 60_000, seed=5, workers=4)
    assert np.array_equal(one, four), "worker count changed the draw stream"
    other = ss.simulate_statistic(fam, dist, 60_000, seed=6, workers=1)
    assert not np.array_equal(one, other)


def test_sigma_oracle_recovers_known_sd(normal):
    # sample mean of 16 standard normals has sd exactly 1/4
    mu, sd, sd_se = ss.sigma_oracle({"family": "sample-mean", "N": 16},
                                    normal, 40_000, seed=2)
    assert sd_se > 0
    assert abs(sd - 0.25) < 4 * sd_se, f"sd {sd} se {sd_se}"
    assert abs(mu) < 4 * 0.25 / math.sqrt(40_000)


# ---------------------------------------------------------------------------
# experiments


def test_run_experiment_rows_and_cumulants():
    spec = _spec()
    res = ss.run_experiment(spec)
    assert [row["N"] for row in res.rows] == [20, 50]
    for row in res.rows:
        dec = ss.components_for({**spec.statistic, "N": row["N"]}, spec.distribution)
        cums = ss.cumulants(dec, spec.distribution)
        assert row["kappa3"] == pytest.approx(cums.kappa3, rel=1e-12)
        assert row["kappa4"] == pytest.approx(cums.kappa4, rel=1e-12)
        assert row["sigma2"] == pytest.approx(cums.sigma2, rel=1e-12)
        assert row["n_times_delta_two"] == pytest.approx(
            row["N"] * row["delta_two"], rel=1e-15
        )
        assert row["mc_floor"] == pytest.approx(mc_floor(spec.reps), rel=1e-15)
        for d in ("delta_normal", "delta_one", "delta_two"):
            assert 0.0 < row[d] < 1.0
    for key in ("seed", "workers", "version", "numpy", "wall_time_s"):
        assert key in res.metadata
    json.dumps(res.to_json())


def test_run_experiment_csv_byte_identical_across_workers(tmp_path):
    a = tmp_path / "w1.csv"
    b = tmp_path / "w3.csv"
    ss.run_experiment(_spec(workers=1)).to_csv(a)
    ss.run_experiment(_spec(workers=3)).to_csv(b)
    assert a.read_bytes() == b.read_bytes(), "worker count leaked into the CSV"


def test_csv_cells_round_trip_exactly(tmp_path):
    res = ss.run_experiment(_spec())
    path = tmp_path / "out.csv"
    res.to_csv(path)
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert tuple(rows[0].keys()) == CSV_COLUMNS
    for parsed, row in zip(rows, res.rows):
        for c in CSV_COLUMNS:
            assert float(parsed[c]) == float(row[c]), f"column {c} lost precision"


def test_run_experiment_standardization_modes():
    # all three standardizations must agree on the scale of the distances
    base = ss.run_experiment(_spec())
    emp = ss.run_experiment(_spec(standardization="empirical"))
    ora = ss.run_experiment(_spec(standardization="oracle", reps=1000))
    for res in (emp, ora):
        for r_other, r_base in zip(res.rows, base.rows):
            assert abs(r_other["delta_normal"] - r_base["delta_normal"]) < 0.05
    assert emp.rows != base.rows  # the standardizing moments do differ


def test_run_experiment_reports_unfittable_ladders():
    # two sample sizes can never give three resolvable points
    res = ss.run_experiment(_spec())
    assert res.fitted is None
    assert "resolve" in res.fit_note


# ---------------------------------------------------------------------------
# rate fits


def test_rate_fit_clean_power_law():
    Ns = np.array([20.0, 50.0, 100.0, 200.0, 500.0])
    fit = ss.rate_fit(Ns, 3.0 * Ns**-1.0, floor=1e-12)
    assert fit.slope == pytest.approx(-1.0, abs=1e-6)
    assert fit.slope_se < 1e-6
    assert fit.band[0] <= -1.0 <= fit.band[1]
    assert fit.n_used == 5


def test_rate_fit_noisy_decay_recovers_exponent():
    rng = np.random.default_rng(0)
    Ns = np.array([20.0, 50.0, 100.0, 200.0, 500.0, 1000.0])
    deltas = 0.9 * Ns**-1.3 * (1.0 + 0.01 * rng.standard_normal(Ns.size))
    fit = ss.rate_fit(Ns, deltas, floor=1e-6)
    assert -1.4 < fit.slope < -1.2, f"slope {fit.slope}"
    assert fit.band[0] <= -1.3 <= fit.band[1]


def test_rate_fit_removes_floor_in_quadrature():
    Ns = np.array([10.0, 30.0, 90.0, 270.0])
    floor = 2e-3
    deltas = np.sqrt((0.8 * Ns**-1.0) ** 2 + floor**2)
    fit = ss.rate_fit(Ns, deltas, floor=floor)
    assert fit.slope == pytest.approx(-1.0, abs=1e-9)


def test_rate_fit_refuses_noise():
    Ns = np.array([10.0, 20.0, 40.0, 80.0])
    floor = 0.01
    with pytest.raises(InsufficientSignalError):
        ss.rate_fit(Ns, np.full(4, 0.015), floor=floor)  # all below 2*floor


def test_rate_fit_drops_floored_points():
    Ns = np.array([10.0, 30.0, 90.0, 270.0, 810.0])
    deltas = 2.0 * Ns**-1.0
    deltas[-1] = 1e-9  # buried in the floor
    fit = ss.rate_fit(Ns, deltas, floor=1e-3)
    assert fit.n_used == 4
    assert fit.used == (True, True, True, True, False)


# ---------------------------------------------------------------------------
# lattice counterexample probe


def test_probe_counts_and_set_inclusions():
    out = ss.counterexample_probe(25, reps=120_000, seed=1)
    assert out["odd_square"]
    # {W=1, |V| <= delta} sits inside the interval event, and the joint
    # event inside each marginal: the counts must respect both inclusions
    assert out["p_interval"] >= out["p_joint"]
    assert out["p_joint"] <= min(out["p_w1"], out["p_v"])
    assert out["scaled_interval"] == pytest.approx(
        out["p_interval"] * 25 / 0.5, rel=1e-15
    )
    assert out["scaled_w1"] == pytest.approx(out["p_w1"] * 25, rel=1e-15)
    # V is close to N(0, 1/12): the 0.5-window mass is near 2 Phi(sqrt 3) - 1
    assert abs(out["p_v"] - 0.9167) < 0.006


def test_probe_monotone_in_delta_on_common_draws():
    out = ss.counterexample_probe(25, delta=0.5, reps=60_000, seed=4,
                                  extra_deltas=(0.25, 0.75))
    rows = sorted(out["by_delta"], key=lambda r: r["delta"])
    assert [r["delta"] for r in rows] == [0.25, 0.5, 0.75]
    for a, b in zip(rows, rows[1:]):
        assert a["p_interval"] <= b["p_interval"]
        assert a["p_v"] <= b["p_v"]
        assert a["p_joint"] <= b["p_joint"]


def test_probe_worker_invariant():
    one = ss.counterexample_probe(9, reps=80_000, seed=3, workers=1)
    four = ss.counterexample_probe(9, reps=80_000, seed=3, workers=4)
    assert one == four


def test_probe_guards_non_odd_square():
    with pytest.raises(InvalidArgumentError):
        ss.counterexample_probe(24, reps=1000)
    with pytest.warns(UserWarning, match="odd square"):
        out = ss.counterexample_probe(24, reps=1000, strict=False)
    assert not out["odd_square"]
    with pytest.raises(InvalidArgumentError):
        ss.counterexample_probe(25, reps=1000, delta=1.5)
    with pytest.raises(InvalidArgumentError):
        ss.counterexample_probe(0, reps=1000)
