"""Executable checks of the solver against exact values and structural properties.

Every check returns a :class:`Verdict`. Statistical checks follow a two-stage
policy: a failure is re-run once on an independent stream family and the
check fails only if the re-run fails too.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import mpmath
import numpy as np
from scipy import stats

from . import __version__
from .domains import Ball, BoundaryBinning, Domain, FreeSpace
from .estimators import (
    ESTIMATORS,
    BoundaryFn,
    compare_estimators,
    measure_histogram,
    path_values,
    rn_derivative,
    solve,
)
from .rng import RngStream, derive_seed
from .sampling import WalkConfig, simulate_steps
from .specfun import bessel_i, psi

__all__ = [
    "ORACLE_STEP",
    "SUITES",
    "OracleCase",
    "Verdict",
    "cross_check",
    "disintegration_check",
    "domination_check",
    "harmonic_reduction_check",
    "mean_value_check",
    "oracle_walk",
    "psi_closed_form_check",
    "psi_property_check",
    "rn_structure_check",
    "run_suite",
    "stepper_marginal_check",
    "uniformity_check",
]

#: Time step of oracle runs in units of (domain scale)^2; bridge correction on.
ORACLE_STEP = 2.5e-3
SIGNIFICANCE = 0.01
PSI_RTOL = 1e-10
BESSEL_RTOL = 1e-12


def oracle_walk(d: Domain, **overrides) -> WalkConfig:
    opts = {"step_h": ORACLE_STEP * d.scale**2, "bridge_correction": True}
    opts.update(overrides)
    return WalkConfig(**opts)


@dataclass
class Verdict:
    name: str
    passed: bool
    stats: dict = field(default_factory=dict)
    attempts: int = 1

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "attempts": self.attempts, "stats": self.stats}


@dataclass(frozen=True)
class OracleCase:
    """A solve with a known answer; ``provenance`` is closed-form-psi, trivial or cross-estimator."""

    name: str
    domain: Domain
    pole: tuple
    mu: float
    f: BoundaryFn
    exact_value: float | None
    provenance: str
    tolerance_policy: tuple


def mean_value_case(n: int, mu: float, r: float) -> OracleCase:
    return OracleCase(
        name=f"mean-value n={n} mu={mu!r} r={r!r}",
        domain=Ball((0.0,) * n, r),
        pole=(0.0,) * n,
        mu=mu,
        f=BoundaryFn.constant(1.0),
        exact_value=psi(n, mu * r),
        provenance="closed-form-psi",
        tolerance_policy=("ci", 0.99),
    )


MEAN_VALUE_CASES = ((2, 1.0, 1.0), (3, 1.0, 1.0), (3, 2.0, 0.5), (4, 1.0, 1.0))


def _two_stage(name: str, run: Callable[[RngStream], tuple], rng: RngStream) -> Verdict:
    passed, info = run(rng)
    if passed:
        return Verdict(name, True, info, attempts=1)
    passed, retry = run(rng.spawn(0x5EC0D))
    info = {"first": info, "retry": retry}
    return Verdict(name, passed, info, attempts=2)


def _rel_err(a: float, b: float) -> float:
    return abs(a - b) / abs(b)


def psi_closed_form_check(points: int = 200) -> Verdict:
    """psi_3(mu) = mu / sinh(mu) and psi_2(mu) = 1 / I_0(mu) on a log grid in [1e-3, 50]."""
    grid = np.logspace(-3.0, math.log10(50.0), points)
    failures = []
    worst = 0.0
    with mpmath.workdps(40):
        for mu in grid:
            mu = float(mu)
            exact3 = float(mpmath.mpf(mu) / mpmath.sinh(mu))
            exact2 = float(1 / mpmath.besseli(0, mu))
            for n, exact in ((3, exact3), (2, exact2)):
                err = _rel_err(psi(n, mu), exact)
                worst = max(worst, err)
                if err > PSI_RTOL:
                    failures.append({"n": n, "mu": mu, "rel_err": err})
    limit = psi(3, 0.0) == 1.0 and psi(2, 0.0) == 1.0
    return Verdict(
        "psi-closed-form",
        not failures and limit,
        {"grid_points": points, "max_rel_err": worst, "failures": failures, "psi_at_zero_is_one": limit},
    )


def bessel_half_integer_check(points: int = 200) -> Verdict:
    """Series I_{1/2}, I_{3/2} against their sinh/cosh forms (evaluated at 40 digits)."""
    grid = np.logspace(-3.0, math.log10(50.0), points)
    failures = []
    worst = 0.0
    with mpmath.workdps(40):
        for x in grid:
            x = float(x)
            xm = mpmath.mpf(x)
            pref = mpmath.sqrt(2 / (mpmath.pi * xm))
            half = float(pref * mpmath.sinh(xm))
            three_half = float(pref * (mpmath.cosh(xm) - mpmath.sinh(xm) / xm))
            for nu, exact in ((0.5, half), (1.5, three_half)):
                err = _rel_err(bessel_i(nu, x), exact)
                worst = max(worst, err)
                if err > BESSEL_RTOL:
                    failures.append({"nu": nu, "x": x, "rel_err": err})
    return Verdict("bessel-half-integer", not failures, {"max_rel_err": worst, "failures": failures})


def psi_property_check(dims=(2, 3, 4, 10)) -> Verdict:
    """Range, strict decrease in mu, increase in n and decay on mu in {0.1, ..., 10}."""
    mus = np.round(np.arange(1, 101) * 0.1, 10)
    table = np.array([[psi(n, m) for m in mus] for n in dims])
    in_range = bool(np.all((table > 0.0) & (table <= 1.0)))
    decreasing = bool(np.all(np.diff(table, axis=1) < 0.0))
    ordered = bool(np.all(np.diff(table, axis=0) > 0.0))
    decay = psi(2, 10.0) < 0.01
    return Verdict(
        "psi-properties",
        in_range and decreasing and ordered and decay,
        {
            "in_unit_interval": in_range,
            "strictly_decreasing_in_mu": decreasing,
            "increasing_in_n": ordered,
            "psi_2_at_10": psi(2, 10.0),
            "values_at_mu_1": {str(n): float(table[i, 9]) for i, n in enumerate(dims)},
        },
    )


def mean_value_check(n: int, mu: float, r: float, n_samples: int = 100_000, seed: int = 0,
                     estimators=ESTIMATORS) -> Verdict:
    """Each estimator's 99% CI for ``u = 1`` at the centre of ``B_n(0, r)`` must contain ``psi_n(mu r)``."""
    case = mean_value_case(n, mu, r)
    cfg = oracle_walk(case.domain)
    rng = RngStream(seed)
    results = {}
    passed = True
    for tag, kind in enumerate(estimators):

        def run(stream, kind=kind):
            est = solve(kind, case.domain, case.pole, case.f, mu, n_samples, cfg, stream)
            info = est.to_dict()
            info["z"] = est.z_score(case.exact_value)
            return est.contains(case.exact_value), info

        v = _two_stage(kind, run, rng.spawn(tag))
        results[kind] = v.to_dict()
        passed &= v.passed
    return Verdict(case.name, passed, {"target": case.exact_value, "estimators": results})


def domination_check(d: Domain, x, f: BoundaryFn, nu: float, mu: float, n_samples: int = 10_000,
                     seed: int = 0, cfg: WalkConfig | None = None) -> Verdict:
    """Discounted estimates with common random numbers are pathwise ordered: ``u_mu <= u_nu``."""
    if not 0.0 <= nu < mu:
        raise ValueError("need 0 <= nu < mu")
    cfg = cfg if cfg is not None else oracle_walk(d)
    v_nu, _ = path_values("discounted", d, x, f, nu, n_samples, cfg, RngStream(seed))
    v_mu, _ = path_values("discounted", d, x, f, mu, n_samples, cfg, RngStream(seed))
    pathwise = bool(np.all(v_mu <= v_nu))
    m_nu = math.fsum(v_nu) / n_samples
    m_mu = math.fsum(v_mu) / n_samples
    return Verdict(
        f"domination nu={nu!r} mu={mu!r}",
        pathwise and m_mu <= m_nu,
        {"mean_nu": m_nu, "mean_mu": m_mu, "pathwise": pathwise},
    )


def domination_ladder_check(mus=(0.0, 0.5, 1.0, 2.0), n: int = 3, pole=None, n_samples: int = 20_000,
                            seed: int = 0) -> Verdict:
    d = Ball((0.0,) * n, 1.0)
    x = pole if pole is not None else (0.3,) + (0.0,) * (n - 1)
    cfg = oracle_walk(d)
    f = BoundaryFn.constant(1.0)
    values = [path_values("discounted", d, x, f, m, n_samples, cfg, RngStream(seed))[0] for m in mus]
    pathwise = all(bool(np.all(b <= a)) for a, b in zip(values, values[1:]))
    means = [math.fsum(v) / n_samples for v in values]
    in_mean = all(b <= a for a, b in zip(means, means[1:]))
    return Verdict(
        "domination-ladder",
        pathwise and in_mean,
        {"mus": list(mus), "means": means, "pathwise": pathwise},
    )


def harmonic_reduction_check(n_samples: int = 20_000, seed: int = 0) -> Verdict:
    """At ``mu = 0`` with ``f = 1`` the discounted and WoS estimates are exactly 1 with zero spread."""
    from .domains import Box

    cases = {
        "ball": (Ball((0.0, 0.0, 0.0), 1.0), (0.2, -0.1, 0.3)),
        "box": (Box((0.0, 0.0), (2.0, 1.0)), (0.5, 0.3)),
    }
    f = BoundaryFn.constant(1.0)
    info = {}
    passed = True
    for name, (d, x) in cases.items():
        for kind in ("discounted", "wos"):
            est = solve(kind, d, x, f, 0.0, n_samples, oracle_walk(d), RngStream(seed))
            ok = est.mean == 1.0 and est.stderr == 0.0 and est.truncation_fraction == 0.0
            info[f"{name}/{kind}"] = {"estimate": est.mean, "stderr": est.stderr}
            passed &= ok
    return Verdict("harmonic-reduction", passed, info)


def rn_structure_check(n: int = 3, r: float = 1.0, mu: float = 1.0, bins: int = 8,
                       n_samples: int = 100_000, seed: int = 0, ladder=(0.5, 1.0, 2.0)) -> Verdict:
    """Centred-ball Radon-Nikodym ratios are flat at ``psi_n(mu r)``, lie in (0, 1] and fall with mu."""
    d = Ball((0.0,) * n, r)
    x = (0.0,) * n
    binning = BoundaryBinning("angular" if n == 2 else "cap", bins)
    cfg = oracle_walk(d)
    target = psi(n, mu * r)

    def run(stream):
        rn = rn_derivative(d, x, mu, binning, n_samples, cfg, stream)
        z = (rn.ratio - target) / rn.stderr
        ok = bool(np.all(~rn.missing) and np.all(np.abs(z) <= 4.0))
        return ok, {"ratios": rn.ratio.tolist(), "z": z.tolist()}

    flat = _two_stage("flat", run, RngStream(seed))
    ladder_rn = [rn_derivative(d, x, m, binning, n_samples, cfg, RngStream(seed)) for m in ladder]
    ratios = np.array([rn.ratio for rn in ladder_rn])
    in_range = bool(np.all((ratios > 0.0) & (ratios <= 1.0)))
    monotone = bool(np.all(np.diff(ratios, axis=0) <= 0.0))
    return Verdict(
        f"rn-structure n={n}",
        flat.passed and in_range and monotone,
        {"target": target, "flat": flat.to_dict(), "in_unit_interval": in_range,
         "non_increasing_in_mu": monotone, "ladder": list(ladder)},
        attempts=flat.attempts,
    )


def uniformity_check(n: int, r: float = 1.0, n_samples: int = 100_000, bins: int = 16, seed: int = 0,
                     sampler: Callable | None = None) -> Verdict:
    """Chi-square test of exit places from the centre of ``B_n(0, r)`` against the uniform law.

    ``sampler(rng, n_samples)`` may replace the stepper; it must return exit points.
    """
    d = Ball((0.0,) * n, r)
    binning = BoundaryBinning("angular" if n == 2 else "cap", bins)
    expected = binning.uniform_probabilities(d) * n_samples
    cfg = oracle_walk(d)

    def run(stream):
        if sampler is None:
            pts = simulate_steps(d, (0.0,) * n, cfg, stream, n_samples).points
        else:
            pts = sampler(stream, n_samples)
        counts = np.bincount(binning.indices(d, pts), minlength=bins)
        stat, pvalue = stats.chisquare(counts, expected)
        return bool(pvalue > SIGNIFICANCE), {"chi2": float(stat), "p_value": float(pvalue)}

    return _two_stage(f"uniformity n={n} bins={bins}", run, RngStream(seed))


def stepper_marginal_check(n: int = 3, t: float = 1.0, n_samples: int = 10_000, step_h: float = 1e-2,
                           seed: int = 0) -> Verdict:
    """KS test of free-space path coordinates at time ``t`` against the Gaussian transition law."""
    d = FreeSpace(n)
    steps = int(round(t / step_h))
    cfg = WalkConfig(step_h=step_h, max_steps=steps)
    x0 = np.zeros(n)
    cdf = stats.norm(scale=math.sqrt(steps * step_h)).cdf

    def run(stream):
        batch = simulate_steps(d, x0, cfg, stream, n_samples)
        pvalues = [float(stats.kstest(batch.points[:, i] - x0[i], cdf).pvalue) for i in range(n)]
        return all(p > SIGNIFICANCE for p in pvalues), {"p_values": pvalues}

    return _two_stage(f"stepper-marginal n={n} t={t!r}", run, RngStream(seed))


def disintegration_check(n: int = 2, mu: float = 1.0, n_samples: int = 20_000, time_bins: int = 24,
                         seed: int = 0) -> Verdict:
    """Summing the joint exit time-place histogram over time reproduces the spatial one bit for bit."""
    d = Ball((0.0,) * n, 1.0)
    binning = BoundaryBinning("angular" if n == 2 else "cap", 8)
    hist = measure_histogram(d, (0.3,) + (0.0,) * (n - 1), mu, binning, n_samples, oracle_walk(d),
                             RngStream(seed), time_bins=time_bins)
    exact_counts = bool(np.array_equal(hist.time_counts.sum(axis=0), hist.counts))
    exact_mass = bool(np.array_equal(hist.time_marginal(), hist.unweighted_mass))
    return Verdict("disintegration", exact_counts and exact_mass,
                   {"counts_equal": exact_counts, "masses_equal": exact_mass})


def cross_check(n_samples: int = 100_000, seed: int = 0, mu: float = 1.0) -> Verdict:
    """Off-centre pole in ``B_3(0, 1)`` with ``f = 1{y_1 > 0}``: all pairwise 99% CIs overlap."""
    d = Ball((0.0, 0.0, 0.0), 1.0)
    f = BoundaryFn.indicator(axis=1, threshold=0.0)
    cfg = oracle_walk(d)

    def run(stream):
        report = compare_estimators(d, (0.5, 0.0, 0.0), f, mu, n_samples, cfg, stream)
        return report.all_overlap, report.to_dict()

    return _two_stage("cross-estimator", run, RngStream(seed))


def _specfun_suite(seed: int) -> list:
    return [psi_closed_form_check(), bessel_half_integer_check(), psi_property_check()]


def _mean_value_suite(seed: int) -> list:
    # a scaled copy of a case would otherwise replay the very same paths
    return [mean_value_check(n, mu, r, seed=derive_seed(seed, i)) for i, (n, mu, r) in enumerate(MEAN_VALUE_CASES)]


def _domination_suite(seed: int) -> list:
    d = Ball((0.0, 0.0, 0.0), 1.0)
    one = BoundaryFn.constant(1.0)
    return [
        domination_check(d, (0.0, 0.0, 0.0), one, 1.0, 2.0, seed=seed),
        domination_check(d, (0.4, 0.1, 0.0), BoundaryFn.indicator(1, 0.0), 0.0, 1.0, seed=seed),
        domination_ladder_check(seed=seed),
        harmonic_reduction_check(seed=seed),
        rn_structure_check(seed=seed),
    ]


def _uniformity_suite(seed: int) -> list:
    return [uniformity_check(2, seed=seed), uniformity_check(3, seed=seed)]


def _cross_suite(seed: int) -> list:
    return [cross_check(seed=seed)]


def _stepper_suite(seed: int) -> list:
    return [stepper_marginal_check(seed=seed), disintegration_check(seed=seed)]


SUITES = {
    "specfun": _specfun_suite,
    "mean-value": _mean_value_suite,
    "domination": _domination_suite,
    "uniformity": _uniformity_suite,
    "cross": _cross_suite,
    "stepper": _stepper_suite,
}


def run_suite(name: str, seed: int = 0) -> dict:
    """Run one suite (or ``all``) and return a JSON-ready report."""
    if name == "all":
        names = list(SUITES)
    elif name in SUITES:
        names = [name]
    else:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES) + ['all']}")
    verdicts = []
    for suite in names:
        for v in SUITES[suite](seed):
            entry = v.to_dict()
            entry["suite"] = suite
            verdicts.append(entry)
    return {
        "suite": name,
        "seed": seed,
        "version": __version__,
        "passed": all(v["passed"] for v in verdicts),
        "verdicts": verdicts,
    }
