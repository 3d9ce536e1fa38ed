"""Monte Carlo estimators for the Yukawa Dirichlet problem and its boundary measures.

Four unbiased routes to ``u(x) = int f dH^x_mu``:

* ``discounted``: mean of ``exp(-mu^2 tau / 2) f(W_tau)`` over discrete paths;
* ``killed``: mean of ``f(W_tau)`` over paths whose exponential clock of rate
  ``mu^2 / 2`` outlasts ``tau``;
* ``duffin``: mean of ``cos(mu W~_tau) f(W_tau)`` over ``(n+1)``-dimensional
  paths whose extra coordinate stays inside ``(-pi/(2 mu), pi/(2 mu))``;
* ``wos``: walk-on-spheres with the weight ``psi_n(mu r)`` per jump.

Truncated paths contribute zero and are reported through ``truncation_fraction``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .domains import OUT_OF_WINDOW, BoundaryBinning, Domain
from .rng import RngStream
from .sampling import ExitBatch, WalkConfig, simulate_steps, simulate_wos

__all__ = [
    "ESTIMATORS",
    "Z99",
    "BoundaryFn",
    "BoundaryHistogram",
    "CompareReport",
    "McEstimate",
    "RnDerivative",
    "compare_estimators",
    "measure_histogram",
    "path_values",
    "rn_derivative",
    "run_paths",
    "solve",
    "solve_discounted",
    "solve_duffin",
    "solve_killed",
    "solve_wos",
]

ESTIMATORS = ("discounted", "killed", "duffin", "wos")
#: Two-sided 99% normal quantile.
Z99 = 2.576
#: Bins with fewer exits than this are reported as missing by ``rn_derivative``.
MIN_BIN_HITS = 100


@dataclass(frozen=True)
class BoundaryFn:
    """Bounded boundary data ``f``.

    Kinds: ``constant`` (``value``), ``indicator`` (``y_axis > threshold``, or
    membership in ``bins`` of ``binning``), ``coordinate`` (``y_axis``) and
    ``table`` (``values[bin]`` over ``binning``; needs a declared ``sup``).
    Axes are 1-based. Points outside a grid window get table value 0.
    """

    kind: str
    value: float = 1.0
    axis: int = 1
    threshold: float = 0.0
    binning: BoundaryBinning | None = None
    bins: tuple = ()
    values: tuple = ()
    sup: float | None = None

    def __post_init__(self):
        if self.kind not in ("constant", "indicator", "coordinate", "table"):
            raise ValueError(f"unknown boundary function kind {self.kind!r}")
        object.__setattr__(self, "bins", tuple(int(b) for b in self.bins))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if self.kind == "table":
            if self.binning is None or not self.values:
                raise ValueError("table boundary functions need a binning and values")
            if self.sup is None:
                raise ValueError("table boundary functions must declare sup |f|")
            if max(abs(v) for v in self.values) > self.sup:
                raise ValueError("table values exceed the declared sup")
        if self.kind == "indicator" and self.bins and self.binning is None:
            raise ValueError("bin indicators need a binning")

    @classmethod
    def constant(cls, c: float = 1.0) -> "BoundaryFn":
        return cls("constant", value=float(c))

    @classmethod
    def indicator(cls, axis: int, threshold: float = 0.0) -> "BoundaryFn":
        return cls("indicator", axis=int(axis), threshold=float(threshold))

    @classmethod
    def indicator_bins(cls, binning: BoundaryBinning, bins) -> "BoundaryFn":
        return cls("indicator", binning=binning, bins=tuple(bins))

    @classmethod
    def coordinate(cls, axis: int) -> "BoundaryFn":
        return cls("coordinate", axis=int(axis))

    @classmethod
    def table(cls, binning: BoundaryBinning, values, sup: float) -> "BoundaryFn":
        return cls("table", binning=binning, values=tuple(values), sup=float(sup))

    @classmethod
    def from_dict(cls, spec: dict) -> "BoundaryFn":
        spec = dict(spec)
        kind = spec.pop("kind", None)
        binning = spec.pop("binning", None)
        if binning is not None:
            binning = BoundaryBinning.from_dict(binning)
        allowed = {"value", "axis", "threshold", "bins", "values", "sup"}
        extra = set(spec) - allowed
        if extra:
            raise ValueError(f"unknown boundary function fields: {sorted(extra)}")
        return cls(kind, binning=binning, **spec)

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.kind == "constant":
            out["value"] = self.value
        elif self.kind == "coordinate":
            out["axis"] = self.axis
        elif self.kind == "indicator" and not self.bins:
            out.update(axis=self.axis, threshold=self.threshold)
        else:
            out["binning"] = self.binning.to_dict()
            if self.kind == "table":
                out.update(values=list(self.values), sup=self.sup)
            else:
                out["bins"] = list(self.bins)
        return out

    def sup_abs(self, d: Domain) -> float:
        """``sup |f|`` over the boundary of ``d``; raises if ``f`` is unbounded there."""
        if self.kind == "constant":
            return abs(self.value)
        if self.kind == "indicator":
            return 1.0
        if self.kind == "table":
            return float(self.sup)
        if not d.bounded:
            raise ValueError("coordinate boundary functions are unbounded on unbounded domains")
        lo, hi = _coordinate_range(d, self.axis - 1)
        return max(abs(lo), abs(hi))

    def check(self, d: Domain) -> None:
        if self.kind in ("indicator", "coordinate") and not self.bins and not 1 <= self.axis <= d.dim:
            raise ValueError(f"boundary function axis must be in 1..{d.dim}")
        if self.binning is not None:
            count = self.binning.bin_count(d)
            if self.kind == "table" and len(self.values) != count:
                raise ValueError(f"table has {len(self.values)} values for {count} bins")
        self.sup_abs(d)

    def __call__(self, d: Domain, ys) -> np.ndarray:
        """Evaluate on boundary points ``ys`` of shape ``(m, n)``."""
        ys = np.atleast_2d(np.asarray(ys, dtype=float))
        if self.kind == "constant":
            return np.full(len(ys), self.value)
        if self.kind == "coordinate":
            return ys[:, self.axis - 1].copy()
        if self.kind == "indicator" and not self.bins:
            return (ys[:, self.axis - 1] > self.threshold).astype(float)
        if len(ys) == 0:
            return np.zeros(0)
        idx = self.binning.indices(d, ys)
        if self.kind == "indicator":
            return np.isin(idx, self.bins).astype(float)
        table = np.append(np.asarray(self.values), 0.0)
        return table[np.where(idx == OUT_OF_WINDOW, len(self.values), idx)]


def _coordinate_range(d: Domain, axis: int):
    if hasattr(d, "radius"):
        c = d.center[axis]
        return c - d.radius, c + d.radius
    return d.lower[axis], d.upper[axis]


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    n_samples: int
    ci99: tuple
    truncation_fraction: float

    @classmethod
    def from_values(cls, values: np.ndarray, truncation_fraction: float = 0.0) -> "McEstimate":
        values = np.asarray(values, dtype=float)
        n = values.size
        if n < 2:
            raise ValueError("need at least two samples")
        if np.all(values == values[0]):
            # constant samples: keep the value exact rather than fsum(v * n) / n
            return cls(float(values[0]), 0.0, n, (float(values[0]),) * 2, float(truncation_fraction))
        mean = math.fsum(values) / n
        dev = values - mean
        var = math.fsum(dev * dev) / (n - 1)
        stderr = math.sqrt(var / n)
        return cls(mean, stderr, n, (mean - Z99 * stderr, mean + Z99 * stderr), float(truncation_fraction))

    def contains(self, value: float) -> bool:
        return self.ci99[0] <= value <= self.ci99[1]

    def overlaps(self, other: "McEstimate") -> bool:
        return self.ci99[0] <= other.ci99[1] and other.ci99[0] <= self.ci99[1]

    def z_score(self, value: float) -> float:
        if self.stderr == 0.0:
            return 0.0 if self.mean == value else math.copysign(math.inf, self.mean - value)
        return (self.mean - value) / self.stderr

    def to_dict(self) -> dict:
        return {
            "estimate": self.mean,
            "stderr": self.stderr,
            "ci99": list(self.ci99),
            "n_samples": self.n_samples,
            "truncation_fraction": self.truncation_fraction,
        }


def _defaults(cfg, rng):
    return (cfg if cfg is not None else WalkConfig()), (rng if rng is not None else RngStream(0))


def run_paths(kind: str, d: Domain, x, mu: float, n_samples: int, cfg: WalkConfig | None = None,
              rng: RngStream | None = None) -> ExitBatch:
    """Paths for estimator ``kind`` at killing parameter ``mu``."""
    cfg, rng = _defaults(cfg, rng)
    cfg = cfg.with_mu(mu)
    if kind == "wos":
        return simulate_wos(d, x, cfg, rng, n_samples)
    if kind == "killed" and mu == 0.0:
        kind = "discounted"
    if kind not in ESTIMATORS:
        raise ValueError(f"unknown estimator {kind!r}")
    return simulate_steps(d, x, cfg, rng, n_samples, mode=kind)


def _values(batch: ExitBatch, d: Domain, f: BoundaryFn) -> np.ndarray:
    values = np.zeros(len(batch))
    live = batch.landed & (batch.weights != 0.0)
    values[live] = batch.weights[live] * f(d, batch.points[live])
    return values


def path_values(kind: str, d: Domain, x, f: BoundaryFn, mu: float, n_samples: int,
                cfg: WalkConfig | None = None, rng: RngStream | None = None):
    """Per-path contributions ``weight * f(exit)`` and the truncation fraction."""
    if int(n_samples) < 2:
        raise ValueError("n_samples must be >= 2")
    if not mu >= 0.0:
        raise ValueError(f"mu must be >= 0, got {mu}")
    if kind == "duffin" and mu == 0.0:
        raise ValueError("the escaping (Duffin) estimator is undefined for mu = 0")
    f.check(d)
    batch = run_paths(kind, d, x, mu, n_samples, cfg, rng)
    return _values(batch, d, f), batch.truncation_fraction


def solve(kind: str, d: Domain, x, f: BoundaryFn, mu: float, n_samples: int,
          cfg: WalkConfig | None = None, rng: RngStream | None = None) -> McEstimate:
    values, trunc = path_values(kind, d, x, f, mu, n_samples, cfg, rng)
    return McEstimate.from_values(values, trunc)


def solve_discounted(d, x, f, mu, n_samples, cfg=None, rng=None) -> McEstimate:
    """``E^x[exp(-mu^2 tau_D / 2) f(W(tau_D))]`` by discrete Brownian paths."""
    return solve("discounted", d, x, f, mu, n_samples, cfg, rng)


def solve_killed(d, x, f, mu, n_samples, cfg=None, rng=None) -> McEstimate:
    """``E^x[f(W(tau_D)); Y > tau_D]`` with ``Y`` exponential of rate ``mu^2 / 2``."""
    return solve("killed", d, x, f, mu, n_samples, cfg, rng)


def solve_duffin(d, x, f, mu, n_samples, cfg=None, rng=None) -> McEstimate:
    """Escaping estimator: ``E^{x,0}[cos(mu W~(tau_D)) f(W(tau_D)); sup |W~| < pi/(2 mu)]``."""
    return solve("duffin", d, x, f, mu, n_samples, cfg, rng)


def solve_wos(d, x, f, mu, n_samples, cfg=None, rng=None) -> McEstimate:
    """Walk-on-spheres with survival weight ``psi_n(mu r)`` per jump."""
    return solve("wos", d, x, f, mu, n_samples, cfg, rng)


@dataclass
class BoundaryHistogram:
    """Binned harmonic (unweighted) and panharmonic (weighted) exit masses.

    Masses are normalised by the number of paths. ``overflow_*`` collect
    exits outside a grid window. With a time grid, ``time_counts[k, b]``
    counts exits in bin ``b`` with exit time in ``[time_edges[k], time_edges[k+1])``.
    """

    binning: BoundaryBinning
    n_paths: int
    counts: np.ndarray
    unweighted_mass: np.ndarray
    weighted_mass: np.ndarray
    overflow_count: int = 0
    overflow_unweighted: float = 0.0
    overflow_weighted: float = 0.0
    truncation_fraction: float = 0.0
    time_edges: np.ndarray | None = None
    time_counts: np.ndarray | None = None
    time_weighted: np.ndarray | None = None

    @property
    def z_ratio(self) -> np.ndarray:
        """Weighted over unweighted mass per bin (NaN for empty bins)."""
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.counts > 0, self.weighted_mass / self.unweighted_mass, np.nan)

    @property
    def time_mass(self) -> np.ndarray | None:
        return None if self.time_counts is None else self.time_counts / self.n_paths

    def time_marginal(self) -> np.ndarray:
        """Unweighted spatial masses recovered by summing the time grid."""
        if self.time_counts is None:
            raise ValueError("histogram has no time grid")
        return self.time_counts.sum(axis=0) / self.n_paths


def _bin_of(binning: BoundaryBinning, d: Domain, points: np.ndarray) -> np.ndarray:
    idx = binning.indices(d, points) if len(points) else np.zeros(0, dtype=np.int64)
    return np.where(idx == OUT_OF_WINDOW, binning.bin_count(d), idx)


def time_grid(cfg: WalkConfig, n_bins: int) -> np.ndarray:
    """Edges ``0, h, ..., max_steps * h`` with geometric spacing after the first edge."""
    if int(n_bins) < 2:
        raise ValueError("need at least two time bins")
    h = cfg.step_h
    t_max = cfg.max_steps * h
    return np.concatenate([[0.0], np.geomspace(h, t_max, int(n_bins))])


def measure_histogram(d: Domain, x, mu: float, binning: BoundaryBinning, n_samples: int,
                      cfg: WalkConfig | None = None, rng: RngStream | None = None,
                      kind: str = "discounted", time_bins: int | None = None) -> BoundaryHistogram:
    """Exit histogram of ``n_samples`` paths of estimator ``kind``.

    Unweighted masses estimate the harmonic measure of each bin; weighted ones
    the panharmonic measure. ``time_bins`` adds the joint exit time-place grid.
    """
    if int(n_samples) < 2:
        raise ValueError("n_samples must be >= 2")
    if kind == "wos" and time_bins:
        raise ValueError("walk-on-spheres paths carry no exit time; time bins are unavailable")
    cfg, rng = _defaults(cfg, rng)
    count = binning.bin_count(d)
    batch = run_paths(kind, d, x, mu, n_samples, cfg, rng)
    landed = batch.landed
    idx = _bin_of(binning, d, batch.points[landed])
    w = batch.weights[landed]
    n = len(batch)
    counts = np.bincount(idx, minlength=count + 1)
    wsum = np.bincount(idx, weights=w, minlength=count + 1)
    hist = BoundaryHistogram(
        binning=binning,
        n_paths=n,
        counts=counts[:count],
        unweighted_mass=counts[:count] / n,
        weighted_mass=wsum[:count] / n,
        overflow_count=int(counts[count]),
        overflow_unweighted=counts[count] / n,
        overflow_weighted=float(wsum[count]) / n,
        truncation_fraction=batch.truncation_fraction,
    )
    if time_bins:
        edges = time_grid(cfg.resolve(d), time_bins)
        k = len(edges) - 1
        tk = np.clip(np.searchsorted(edges, batch.times[landed], side="right") - 1, 0, k - 1)
        flat = tk * (count + 1) + idx
        hist.time_edges = edges
        hist.time_counts = np.bincount(flat, minlength=k * (count + 1)).reshape(k, count + 1)[:, :count]
        hist.time_weighted = (
            np.bincount(flat, weights=w, minlength=k * (count + 1)).reshape(k, count + 1)[:, :count] / n
        )
    return hist


@dataclass
class RnDerivative:
    """Per-bin Radon-Nikodym ratios; ``ratio`` and ``stderr`` are NaN where ``missing``."""

    ratio: np.ndarray
    stderr: np.ndarray
    counts: np.ndarray
    missing: np.ndarray = field(init=False)

    def __post_init__(self):
        self.missing = np.isnan(self.ratio)


def rn_derivative(d: Domain, x, mu: float, binning: BoundaryBinning, n_samples: int,
                  cfg: WalkConfig | None = None, rng: RngStream | None = None,
                  min_hits: int = MIN_BIN_HITS) -> RnDerivative:
    """Mean discount ``exp(-mu^2 tau / 2)`` among paths exiting through each bin."""
    batch = run_paths("discounted", d, x, mu, n_samples, cfg, rng)
    landed = batch.landed
    count = binning.bin_count(d)
    idx = _bin_of(binning, d, batch.points[landed])
    w = batch.weights[landed]
    hits = np.bincount(idx, minlength=count + 1)[:count]
    wsum = np.bincount(idx, weights=w, minlength=count + 1)[:count]
    ok = hits >= max(int(min_hits), 2)
    ratio = np.full(count, np.nan)
    ratio[ok] = wsum[ok] / hits[ok]
    inside = idx < count
    dev = w[inside] - np.nan_to_num(ratio)[idx[inside]]
    ss = np.bincount(idx[inside], weights=dev * dev, minlength=count)
    stderr = np.full(count, np.nan)
    stderr[ok] = np.sqrt(ss[ok] / (hits[ok] - 1) / hits[ok])
    return RnDerivative(ratio=ratio, stderr=stderr, counts=hits)


@dataclass
class CompareReport:
    estimates: dict
    overlaps: dict

    @property
    def all_overlap(self) -> bool:
        return all(self.overlaps.values())

    def to_dict(self) -> dict:
        return {
            "results": {k: v.to_dict() for k, v in self.estimates.items()},
            "overlaps": dict(self.overlaps),
        }


def compare_estimators(d: Domain, x, f: BoundaryFn, mu: float, n_samples: int,
                       cfg: WalkConfig | None = None, rng: RngStream | None = None) -> CompareReport:
    """Run all four estimators on independent stream families and cross-check their 99% CIs."""
    if not mu > 0.0:
        raise ValueError("estimator comparison needs mu > 0")
    cfg, rng = _defaults(cfg, rng)
    estimates = {
        kind: solve(kind, d, x, f, mu, n_samples, cfg, rng.spawn(tag))
        for tag, kind in enumerate(ESTIMATORS)
    }
    overlaps = {
        f"{a}|{b}": estimates[a].overlaps(estimates[b])
        for a, b in itertools.combinations(ESTIMATORS, 2)
    }
    return CompareReport(estimates, overlaps)
