"""Command-line front end.

Every subcommand reads one run description (JSON, or TOML when the file
ends in .toml) and writes JSON or CSV.  The format follows --format when
given, otherwise the --out extension, otherwise JSON on stdout.  Floats in
CSV are printed with 17 significant digits so files round-trip exactly;
--seed, --reps and --workers override the corresponding spec fields, which
keeps one spec file reusable across budgets.

    symstat decompose run.json --out dec.json
    symstat simulate gini.toml --out table.csv --workers 8
    symstat counterexample probe.json --reps 1000000 --out probe.csv
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

try:
    import tomllib
except ModuleNotFoundError:  # 3.10
    import tomli as tomllib

import numpy as np

from .charfn import char_function, smoothing_kernel
from .concentration import SignedSumInstance, kleitman_bound, max_ball_count, symmetric_partition
from .cumulants import check_conditions, cumulants, reducibility
from .edgeworth import Expansion
from .errors import InvalidArgumentError, SymstatError
from .harness import CSV_COLUMNS, ExperimentSpec, counterexample_probe, run_experiment
from .hoeffding import components_for, decompose
from .model import distribution_from_json, statistic_from_json

DECOMPOSE_EXACT_MAX_N = 12


def _load_spec(path: str) -> dict:
    if path.endswith(".toml"):
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    with open(path) as fh:
        return json.load(fh)


def _cell(v):
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    return format(float(v), ".17g")


def _pick_format(args) -> str:
    if args.format:
        return args.format
    if args.out and args.out.endswith(".csv"):
        return "csv"
    return "json"


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    return v


def _emit_json(obj, args) -> None:
    text = json.dumps(_jsonable(obj), indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _emit_csv(columns, rows, args) -> None:
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(row[c]) for c in columns])
    finally:
        if args.out:
            fh.close()


def _emit(obj, columns, rows, args) -> None:
    if _pick_format(args) == "csv":
        _emit_csv(columns, rows, args)
    else:
        _emit_json(obj, args)


def _statistic_and_dist(spec: dict):
    dist = distribution_from_json(spec["distribution"])
    family = dict(spec["statistic"])
    return family, dist


def _override(spec: dict, args, keys=("seed", "reps", "workers")) -> dict:
    out = dict(spec)
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            out[k] = v
    return out


def _g_from_json(obj):
    """Arity-1 kernel description: "identity" or {"coeffs": [c0, c1, ...]}."""
    if obj in (None, "identity"):
        return lambda x: np.asarray(x, dtype=float)
    if isinstance(obj, dict) and "coeffs" in obj:
        c = tuple(float(v) for v in obj["coeffs"])
        return lambda x: np.polynomial.polynomial.polyval(np.asarray(x, float), c)
    raise InvalidArgumentError(f"unknown kernel description {obj!r}")


def _grid(spec: dict, default_lo: float, default_hi: float, default_points: int):
    g = spec.get("grid", spec.get("t", {}))
    lo = float(g.get("lo", default_lo))
    hi = float(g.get("hi", default_hi))
    pts = int(g.get("points", default_points))
    if not (hi > lo and pts >= 2):
        raise InvalidArgumentError("grid needs hi > lo and at least two points")
    return np.linspace(lo, hi, pts)


# ---------------------------------------------------------------------------
# subcommands


def _cmd_decompose(spec, args):
    family, dist = _statistic_and_dist(spec)
    method = spec.get("method", "auto")
    exact_ok = dist.is_finite and int(family["N"]) <= DECOMPOSE_EXACT_MAX_N
    if method == "exact" or (method == "auto" and exact_ok):
        T, _ = statistic_from_json(family)
        dec = decompose(T, dist)
    else:
        dec = components_for(family, dist)
    _emit_json(dec.to_json(), args)


def _cmd_cumulants(spec, args):
    spec = _override(spec, args)
    family, dist = _statistic_and_dist(spec)
    dec = components_for(family, dist)
    mode = spec.get("mode", "exact")
    cums = cumulants(dec, dist, mode=mode,
                     reps=int(spec.get("reps", 10**6)), seed=int(spec.get("seed", 0)))
    out = cums.to_json()
    if spec.get("reducibility", False):
        out["reducibility"] = reducibility(
            dec, dist, mode=mode,
            reps=int(spec.get("reps", 10**6)), seed=int(spec.get("seed", 0))).to_json()
    _emit_json(out, args)


def _cmd_conditions(spec, args):
    family, dist = _statistic_and_dist(spec)
    dec = components_for(family, dist)
    params = {k: float(v) for k, v in spec.get("params", {}).items()}
    rep = check_conditions(dec, dist, **params)
    _emit_json(rep.to_json(), args)


def _cmd_expand(spec, args):
    if "kappa3" in spec:
        N = int(spec["N"])
        k3, k4 = float(spec["kappa3"]), float(spec.get("kappa4", 0.0))
    else:
        family, dist = _statistic_and_dist(spec)
        dec = components_for(family, dist)
        cums = cumulants(dec, dist, mode=spec.get("mode", "exact"))
        N, k3, k4 = dec.N, cums.kappa3, cums.kappa4
    e = Expansion(N, k3, k4)
    xs = _grid(spec, -6.0, 6.0, 241)
    t = e.terms(xs)
    rows = [{"x": x, "normal": n, "one_term": n + a, "two_term": n + a + b}
            for x, n, a, b in zip(xs, t["normal"], t["order1"], t["order2"])]
    obj = {"N": N, "kappa3": k3, "kappa4": k4, "rows": rows}
    _emit(obj, ("x", "normal", "one_term", "two_term"), rows, args)


def _cmd_simulate(spec, args):
    spec = _override(spec, args)
    espec = ExperimentSpec.from_json(spec)
    result = run_experiment(espec)
    if _pick_format(args) == "csv":
        _emit_csv(CSV_COLUMNS, result.rows, args)
    else:
        _emit_json(result.to_json(), args)


PROBE_COLUMNS = ("N", "delta", "reps", "seed", "p_interval", "p_interval_se",
                 "scaled_interval", "p_w1", "p_w1_se", "scaled_w1",
                 "p_v", "p_v_se", "p_joint", "independence_product")


def _cmd_counterexample(spec, args):
    spec = _override(spec, args)
    Ns = spec.get("Ns", [spec["N"]] if "N" in spec else None)
    if not Ns:
        raise InvalidArgumentError("spec needs N or Ns")
    reports = [counterexample_probe(
        int(N),
        delta=float(spec.get("delta", 0.5)),
        reps=int(spec.get("reps", 10**6)),
        seed=int(spec.get("seed", 20260819)),
        workers=int(spec.get("workers", 1)),
        strict=bool(spec.get("strict", True)),
        extra_deltas=tuple(spec.get("extra_deltas", ())),
    ) for N in Ns]
    rows = [{c: r[c] for c in PROBE_COLUMNS} for r in reports]
    _emit({"reports": reports}, PROBE_COLUMNS, rows, args)


def _cmd_kleitman(spec, args):
    inst = SignedSumInstance.from_json(spec)
    out = max_ball_count(inst)
    out["bound"] = kleitman_bound(inst.n)
    if spec.get("partition", False):
        classes = symmetric_partition(inst, certify=True)
        out["partition_class_sizes"] = sorted((len(c) for c in classes), reverse=True)
        out["partition_certified"] = True
    row = {k: out[k] for k in ("n", "d", "r", "count", "bound", "exact")}
    _emit(out, ("n", "d", "r", "count", "bound", "exact"), [row], args)


def _cmd_charfn(spec, args):
    ts = _grid(spec, 0.0, 20.0, 2001)
    if "smoothing" in spec:
        sm = spec["smoothing"]
        kern = smoothing_kernel(int(sm.get("k", 2)), float(sm.get("a", 1.0)))
        mods = np.abs(kern.cf(ts))
        bound = (np.abs(ts) <= kern.cutoff).astype(float)
        meta = {"smoothing": kern.to_json()}
    else:
        g = _g_from_json(spec.get("g"))
        dist = distribution_from_json(spec["distribution"])
        cf = char_function(g, dist, npts=int(spec.get("npts", 20001)))
        if "N" in spec:
            # alpha(t) = cf(t / sqrt(N)) next to its quadratic-decay bound
            N = int(spec["N"])
            mods = cf.modulus(ts / np.sqrt(N))
            bound = np.maximum(1.0 - ts**2 / (4.0 * N), 0.0)
        else:
            mods = cf.modulus(ts)
            bound = np.ones_like(ts)
        meta = {"exact_representation": bool(cf.exact)}
    rows = [{"t": t, "modulus": m, "bound": b} for t, m, b in zip(ts, mods, bound)]
    obj = {**meta, "rows": rows}
    _emit(obj, ("t", "modulus", "bound"), rows, args)


_COMMANDS = {
    "decompose": _cmd_decompose,
    "cumulants": _cmd_cumulants,
    "conditions": _cmd_conditions,
    "expand": _cmd_expand,
    "simulate": _cmd_simulate,
    "counterexample": _cmd_counterexample,
    "kleitman": _cmd_kleitman,
    "charfn": _cmd_charfn,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="symstat",
        description="Decompositions, expansions and experiments for symmetric statistics.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        sp = sub.add_parser(name, help=fn.__doc__)
        sp.add_argument("spec", help="JSON or TOML run description")
        sp.add_argument("--out", default=None, help="output path (.csv or .json)")
        sp.add_argument("--format", choices=("json", "csv"), default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--reps", type=int, default=None)
        sp.add_argument("--workers", type=int, default=None)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = _load_spec(args.spec)
        _COMMANDS[args.command](spec, args)
    except (SymstatError, OSError, KeyError, ValueError) as err:
        print(f"symstat {args.command}: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
