"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line; the lines are printed in the pytest
terminal summary (and directly when run as a script).
"""

import csv
import io
import json
import time

import numpy as np
import pytest

from yukawa_mc import oracles
from yukawa_mc.cli import main
from yukawa_mc.domains import Ball
from yukawa_mc.estimators import BoundaryFn, solve
from yukawa_mc.oracles import oracle_walk
from yukawa_mc.rng import RngStream

SEED = 0
N = 100_000
REPORT = []


def record(number, title, passed, detail=""):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {title}"
    if detail:
        line += f" ({detail})"
    REPORT.append(line)
    print(line)
    assert passed, line


def test_01_psi_exactness():
    t0 = time.perf_counter()
    v = oracles.psi_closed_form_check(points=200)
    elapsed = time.perf_counter() - t0
    record(1, "psi_3 = mu/sinh mu and psi_2 = 1/I_0 to 1e-10 on 200 points, < 1 s",
           v.passed and elapsed < 1.0, f"max rel err {v.stats['max_rel_err']:.2e}, {elapsed:.2f} s")


def test_02_figure_reproduction(tmp_path):
    out = tmp_path / "psi.csv"
    assert main(["psi", "--grid", "0:10:0.1", "--n", "2,3,4,10", "--out", str(out)]) == 0
    lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    rows = list(csv.reader(io.StringIO("\n".join(lines))))[1:]
    table = np.array(rows, dtype=float)
    mu, vals = table[:, 0], table[:, 1:]
    pos = vals[mu > 0]
    in_range = bool(np.all((pos > 0.0) & (pos < 1.0)))
    ordered = bool(np.all(np.diff(pos, axis=1) > 0.0))
    decreasing = bool(np.all(np.diff(vals, axis=0) < 0.0))
    record(2, "psi figure curves in (0,1), psi_2 < psi_3 < psi_4 < psi_10, strictly decreasing",
           len(rows) == 101 and in_range and ordered and decreasing,
           f"{len(rows)} rows, range {in_range}, order {ordered}, decrease {decreasing}")


def test_03_mean_value_oracle():
    t0 = time.perf_counter()
    verdicts = oracles.SUITES["mean-value"](SEED)
    elapsed = time.perf_counter() - t0
    zs = []
    for v in verdicts:
        for e in v.stats["estimators"].values():
            st = e["stats"] if e["attempts"] == 1 else e["stats"]["retry"]
            zs.append(abs(st["z"]))
    record(3, "mean-value oracle: 4 cases x 4 estimators, 99% CI contains psi_n(mu r), < 60 s",
           all(v.passed for v in verdicts) and elapsed < 60.0,
           f"max |z| {max(zs):.2f}, {elapsed:.1f} s")


def test_04_cross_estimator():
    v = oracles.cross_check(n_samples=N, seed=SEED)
    stats = v.stats if v.attempts == 1 else v.stats["retry"]
    means = ", ".join(f"{k} {r['estimate']:.4f}" for k, r in stats["results"].items())
    record(4, "off-centre B_3 cross-estimator: all six pairwise 99% CIs overlap", v.passed,
           f"{means}; attempts {v.attempts}")


def test_05_harmonic_reduction():
    v = oracles.harmonic_reduction_check(n_samples=N, seed=SEED)
    record(5, "mu = 0, f = 1: discounted and WoS give exactly 1.0 with zero variance", v.passed,
           "ball and box")


def test_06_domination():
    v = oracles.domination_ladder_check(mus=(0.0, 0.5, 1.0, 2.0), n_samples=N, seed=SEED)
    record(6, "common random numbers: estimates non-increasing in mu, pathwise and in mean", v.passed,
           "means " + ", ".join(f"{m:.4f}" for m in v.stats["means"]))


def test_07_radon_nikodym():
    v = oracles.rn_structure_check(n=3, bins=8, n_samples=N, seed=SEED)
    flat = v.stats["flat"]["stats"]
    z = flat["z"] if "z" in flat else flat["retry"]["z"]
    record(7, "centred-ball RN ratios within 4 stderr of psi, in (0,1], non-increasing in mu", v.passed,
           f"max |z| {max(abs(x) for x in z):.2f}")


@pytest.mark.parametrize("n", [2, 3])
def test_08_uniformity(n):
    v = oracles.uniformity_check(n, n_samples=N, bins=16, seed=SEED)
    p = v.stats["p_value"] if v.attempts == 1 else v.stats["retry"]["p_value"]
    record(8, f"exit-place chi-square uniformity, n = {n}, 16 bins, 1% level", v.passed,
           f"p = {p:.3f}, attempts {v.attempts}")


def test_09_stepper_marginal():
    v = oracles.stepper_marginal_check(n=3, t=1.0, n_samples=10_000, seed=SEED)
    ps = v.stats["p_values"] if v.attempts == 1 else v.stats["retry"]["p_values"]
    record(9, "free-space stepper at t = 1: per-coordinate KS vs Gaussian, 1% level", v.passed,
           "p = " + ", ".join(f"{p:.3f}" for p in ps))


def test_10_disintegration():
    v = oracles.disintegration_check(n=2, n_samples=N, seed=SEED)
    d3 = oracles.disintegration_check(n=3, n_samples=20_000, seed=SEED)
    record(10, "time-binned joint histogram marginalises bit-identically to the spatial one",
           v.passed and d3.passed)


def test_11_reproducibility(tmp_path):
    ball = '{"kind":"ball","center":[0,0,0],"radius":1}'
    fast = ["--step-h", "0.0025", "--bridge"]
    runs = {
        "psi.csv": ["psi"],
        "solve.json": ["solve", "--domain", ball, "--pole", "0.5,0,0", "--mu", "1", "--estimator", "all",
                       "--f", '{"kind":"indicator","axis":1}', "--n-samples", "20000", *fast],
        "measure.csv": ["measure", "--domain", ball, "--mu", "1", "--n-samples", "20000",
                        "--binning", '{"scheme":"cap","bins":8}', "--time-bins", "8", *fast],
        "validate.json": ["validate", "--suite", "specfun"],
    }
    same = True
    for name, argv in runs.items():
        blobs = []
        for rep in ("a", "b"):
            out = tmp_path / rep / name
            assert main(["--seed", str(SEED), "--out", str(out)] + argv) == 0
            blobs.append(out.read_bytes())
            time_table = out.with_name(out.stem + ".time.csv")
            if time_table.exists():
                blobs[-1] += time_table.read_bytes()
        same &= blobs[0] == blobs[1]
    # library-level rerun of a full acceptance solve
    d = Ball((0.0, 0.0, 0.0), 1.0)
    a = solve("duffin", d, (0.5, 0.0, 0.0), BoundaryFn.indicator(1), 1.0, N, oracle_walk(d), RngStream(SEED))
    b = solve("duffin", d, (0.5, 0.0, 0.0), BoundaryFn.indicator(1), 1.0, N, oracle_walk(d), RngStream(SEED))
    same &= json.dumps(a.to_dict()) == json.dumps(b.to_dict())
    record(11, "same seed reruns give byte-identical outputs", same, f"{len(runs)} CLI outputs + 1 solve")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
