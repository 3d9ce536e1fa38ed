"""Brownian exit samplers: discrete stepping, walk-on-spheres and the Duffin strip walk.

Single-path functions return an :class:`ExitSample`; the ``simulate_*``
functions run many independent paths (path ``i`` uses stream
``rng.stream_id + i``) and return an :class:`ExitBatch` of arrays.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as kern
from .domains import Domain, FreeSpace
from .rng import RngStream
from .specfun import BesselOrder

__all__ = [
    "ExitBatch",
    "ExitSample",
    "STATUS_NAMES",
    "WalkConfig",
    "duffin_path_to_exit",
    "simulate_duffin",
    "simulate_steps",
    "simulate_wos",
    "step_path_to_exit",
    "wos_path_to_exit",
]

STATUS_NAMES = ("exited", "killed", "truncated")
EXITED, KILLED, TRUNCATED = 0, 1, 2

MODES = {"discounted": kern.DISCOUNTED, "killed": kern.KILLED, "duffin": kern.DUFFIN}


@dataclass(frozen=True)
class WalkConfig:
    """Discretisation knobs.

    ``step_h`` and ``eps_shell`` default to ``1e-4 * scale**2`` and
    ``1e-4 * scale`` of the domain the walk runs in.
    """

    mu: float = 0.0
    step_h: float | None = None
    eps_shell: float | None = None
    max_steps: int = 1_000_000
    bridge_correction: bool = False

    def __post_init__(self):
        if not self.mu >= 0.0:
            raise ValueError(f"mu must be >= 0, got {self.mu}")
        if self.step_h is not None and not self.step_h > 0.0:
            raise ValueError(f"step_h must be positive, got {self.step_h}")
        if self.eps_shell is not None and not self.eps_shell > 0.0:
            raise ValueError(f"eps_shell must be positive, got {self.eps_shell}")
        if int(self.max_steps) < 1:
            raise ValueError("max_steps must be >= 1")

    def resolve(self, d: Domain) -> "WalkConfig":
        """Fill in scale-dependent defaults for domain ``d``."""
        step_h = self.step_h if self.step_h is not None else 1e-4 * d.scale**2
        eps = self.eps_shell if self.eps_shell is not None else 1e-4 * d.scale
        if d.bounded and not eps < d.scale:
            raise ValueError(f"eps_shell {eps} must be smaller than the domain scale {d.scale}")
        return dataclasses.replace(self, step_h=float(step_h), eps_shell=float(eps))

    def with_mu(self, mu: float) -> "WalkConfig":
        return dataclasses.replace(self, mu=float(mu))

    @classmethod
    def from_dict(cls, spec: dict) -> "WalkConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(spec) - known
        if extra:
            raise ValueError(f"unknown walk settings: {sorted(extra)}")
        return cls(**spec)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class ExitSample:
    """Outcome of one path.

    ``exit_time`` is ``None`` for walk-on-spheres paths, which carry no clock.
    Killed paths keep the point where the unkilled path left the domain;
    truncated paths hold their last position.
    """

    exit_point: np.ndarray
    exit_time: float | None
    weight: float
    status: str
    steps: int


@dataclass
class ExitBatch:
    points: np.ndarray
    times: np.ndarray  # NaN for walk-on-spheres
    weights: np.ndarray
    status: np.ndarray
    steps: np.ndarray

    def __len__(self):
        return self.points.shape[0]

    @property
    def landed(self) -> np.ndarray:
        """Paths whose ``points`` lie on the boundary (exited or killed)."""
        return self.status != TRUNCATED

    @property
    def truncation_fraction(self) -> float:
        return float(np.mean(self.status == TRUNCATED))

    def sample(self, i: int) -> ExitSample:
        t = float(self.times[i])
        return ExitSample(
            exit_point=self.points[i].copy(),
            exit_time=None if math.isnan(t) else t,
            weight=float(self.weights[i]),
            status=STATUS_NAMES[int(self.status[i])],
            steps=int(self.steps[i]),
        )


def _start(d: Domain, x0) -> np.ndarray:
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.size != d.dim:
        raise ValueError(f"start point has dimension {x0.size}, domain has dimension {d.dim}")
    if not d.contains(x0):
        raise ValueError(f"start point {x0.tolist()} is not inside the domain")
    return x0


def _alloc(n_paths: int, dim: int):
    if int(n_paths) < 1:
        raise ValueError("n_paths must be positive")
    n_paths = int(n_paths)
    return (
        np.empty((n_paths, dim)),
        np.empty(n_paths),
        np.empty(n_paths),
        np.empty(n_paths, dtype=np.int8),
        np.empty(n_paths, dtype=np.int64),
    )


def simulate_steps(d: Domain, x0, cfg: WalkConfig, rng: RngStream, n_paths: int, mode: str = "discounted") -> ExitBatch:
    """Discrete-time Brownian paths run to exit.

    ``mode`` selects the weight: ``discounted`` (``exp(-mu^2 tau / 2)``),
    ``killed`` (survival of an independent exponential clock of rate
    ``mu^2 / 2``) or ``duffin`` (cosine weight of the strip walk).
    """
    if mode not in MODES:
        raise ValueError(f"unknown step mode {mode!r}")
    x0 = _start(d, x0)
    cfg = cfg.resolve(d)
    if mode == "duffin" and not cfg.mu > 0.0:
        raise ValueError("the escaping (Duffin) estimator needs mu > 0")
    pts, times, weights, status, steps = _alloc(n_paths, d.dim)
    kern.step_batch(
        d.kind, d.params, x0, cfg.step_h, int(cfg.max_steps), bool(cfg.bridge_correction),
        MODES[mode], float(cfg.mu), np.uint64(rng.seed), np.uint64(rng.stream_id),
        pts, times, weights, status, steps,
    )
    return ExitBatch(pts, times, weights, status, steps)


def simulate_duffin(d: Domain, x0, cfg: WalkConfig, rng: RngStream, n_paths: int) -> ExitBatch:
    return simulate_steps(d, x0, cfg, rng, n_paths, mode="duffin")


def simulate_wos(d: Domain, x0, cfg: WalkConfig, rng: RngStream, n_paths: int) -> ExitBatch:
    """Walk-on-spheres paths; each jump of radius ``r`` multiplies the weight by ``psi_n(mu r)``."""
    if isinstance(d, FreeSpace):
        raise ValueError("walk-on-spheres needs a domain with a boundary")
    x0 = _start(d, x0)
    cfg = cfg.resolve(d)
    pts, times, weights, status, steps = _alloc(n_paths, d.dim)
    times[:] = np.nan
    kern.wos_batch(
        d.kind, d.params, x0, cfg.eps_shell, int(cfg.max_steps), float(cfg.mu),
        BesselOrder.from_dimension(d.dim).nu, np.uint64(rng.seed), np.uint64(rng.stream_id),
        pts, weights, status, steps,
    )
    if np.isnan(weights).any():
        raise OverflowError("psi series failed to converge for a walk-on-spheres jump")
    return ExitBatch(pts, times, weights, status, steps)


def step_path_to_exit(rng: RngStream, d: Domain, x0, cfg: WalkConfig) -> ExitSample:
    """Gaussian increments of size ``step_h`` until the path leaves ``d``."""
    return simulate_steps(d, x0, cfg, rng, 1).sample(0)


def killed_path_to_exit(rng: RngStream, d: Domain, x0, cfg: WalkConfig) -> ExitSample:
    """Like ``step_path_to_exit`` but weighted by survival of the exponential clock."""
    return simulate_steps(d, x0, cfg, rng, 1, mode="killed").sample(0)


def wos_path_to_exit(rng: RngStream, d: Domain, x0, cfg: WalkConfig) -> ExitSample:
    return simulate_wos(d, x0, cfg, rng, 1).sample(0)


def duffin_path_to_exit(rng: RngStream, d: Domain, x0, cfg: WalkConfig) -> ExitSample:
    """Walk ``(W, W~)`` from ``(x0, 0)``; weight ``cos(mu W~)`` if ``W`` exits before ``|W~|`` reaches ``pi/(2 mu)``.

    Paths whose auxiliary coordinate escapes the strip first get weight 0 and
    keep walking until ``W`` exits, so the exit point is always on the boundary.
    """
    return simulate_duffin(d, x0, cfg, rng, 1).sample(0)
