"""Regular domains (ball, half-space, box) and binnings of their boundaries.

Axis indices in this module's public surface are 1-based, matching the usual
``x_1, ..., x_n`` notation: ``HalfSpace(axis=n)`` is the upper half-space
``{x_n > offset}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _geometry as geom

__all__ = [
    "OUT_OF_WINDOW",
    "Ball",
    "BoundaryBinning",
    "Box",
    "Domain",
    "FreeSpace",
    "HalfSpace",
    "bin_index",
    "contains",
    "dist_to_boundary",
    "domain_from_dict",
    "project_to_boundary",
]

#: Marker returned by ``bin_index`` for boundary points outside a grid window.
OUT_OF_WINDOW = -1
#: Relative boundary-membership tolerance (multiplied by the domain scale).
BOUNDARY_TOL = 1e-9


class Domain:
    """Common query surface; subclasses supply ``dim``, ``scale`` and the packed form."""

    kind: int
    dim: int

    @property
    def scale(self) -> float:
        raise NotImplementedError

    @property
    def params(self) -> np.ndarray:
        raise NotImplementedError

    @property
    def bounded(self) -> bool:
        return True

    def _vec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.size != self.dim:
            raise ValueError(f"point has dimension {x.size}, domain has dimension {self.dim}")
        return x

    def contains(self, x) -> bool:
        return bool(geom.signed_dist(self.kind, self.params, self._vec(x)) > 0.0)

    def dist_to_boundary(self, x) -> float:
        x = self._vec(x)
        d = geom.signed_dist(self.kind, self.params, x)
        if not d > 0.0:
            raise ValueError(f"point {x.tolist()} is not inside the domain")
        return float(d)

    def project_to_boundary(self, x) -> np.ndarray:
        x = self._vec(x)
        if not geom.signed_dist(self.kind, self.params, x) > 0.0:
            raise ValueError(f"point {x.tolist()} is not inside the domain")
        out = np.empty(self.dim)
        geom.project(self.kind, self.params, x, out)
        return out

    def boundary_offset(self, ys) -> np.ndarray:
        """Distance of each point in ``ys`` (shape ``(m, n)``) from the boundary."""
        ys = np.atleast_2d(np.asarray(ys, dtype=float))
        out = np.empty(ys.shape)
        dist = np.empty(ys.shape[0])
        for j, y in enumerate(ys):
            geom.project(self.kind, self.params, y, out[j])
            dist[j] = np.linalg.norm(out[j] - y)
        return dist

    def on_boundary(self, y, tol: float = BOUNDARY_TOL) -> bool:
        return bool(self.boundary_offset(self._vec(y))[0] <= tol * self.scale)

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Ball(Domain):
    center: tuple
    radius: float

    kind = geom.BALL

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if len(self.center) < 2:
            raise ValueError("domains need dimension >= 2")
        if not self.radius > 0.0:
            raise ValueError(f"ball radius must be positive, got {self.radius}")
        object.__setattr__(self, "_params", np.array(self.center + (self.radius,)))

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def scale(self) -> float:
        return self.radius

    @property
    def params(self) -> np.ndarray:
        return self._params

    def boundary_offset(self, ys) -> np.ndarray:
        ys = np.atleast_2d(np.asarray(ys, dtype=float))
        return np.abs(np.linalg.norm(ys - np.array(self.center), axis=1) - self.radius)

    def to_dict(self) -> dict:
        return {"kind": "ball", "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class HalfSpace(Domain):
    """``{x : x_axis > offset}`` in ``dim`` dimensions (``axis`` is 1-based)."""

    axis: int
    offset: float
    dim: int

    kind = geom.HALF

    def __post_init__(self):
        if int(self.dim) < 2:
            raise ValueError("domains need dimension >= 2")
        if not 1 <= int(self.axis) <= int(self.dim):
            raise ValueError(f"axis must be in 1..{self.dim}, got {self.axis}")
        object.__setattr__(self, "axis", int(self.axis))
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "offset", float(self.offset))
        object.__setattr__(self, "_params", np.array([self.axis - 1.0, self.offset]))

    @property
    def scale(self) -> float:
        return 1.0

    @property
    def params(self) -> np.ndarray:
        return self._params

    @property
    def bounded(self) -> bool:
        return False

    def boundary_offset(self, ys) -> np.ndarray:
        ys = np.atleast_2d(np.asarray(ys, dtype=float))
        return np.abs(ys[:, self.axis - 1] - self.offset)

    def to_dict(self) -> dict:
        return {"kind": "half_space", "axis": self.axis, "offset": self.offset, "dim": self.dim}


@dataclass(frozen=True)
class Box(Domain):
    lower: tuple
    upper: tuple

    kind = geom.BOX

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        if len(lo) != len(hi) or len(lo) < 2:
            raise ValueError("box corners must have equal dimension >= 2")
        if not all(h > l for l, h in zip(lo, hi)):
            raise ValueError("box needs upper > lower in every coordinate")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "_params", np.array(lo + hi))

    @property
    def dim(self) -> int:
        return len(self.lower)

    def boundary_offset(self, ys) -> np.ndarray:
        ys = np.atleast_2d(np.asarray(ys, dtype=float))
        lo = np.array(self.lower)
        hi = np.array(self.upper)
        gap = np.minimum(ys - lo, hi - ys)
        inside = (gap >= 0.0).all(axis=1)
        outside = np.linalg.norm(np.clip(ys, lo, hi) - ys, axis=1)
        return np.where(inside, gap.min(axis=1), outside)

    @property
    def scale(self) -> float:
        """Inradius: half the shortest side."""
        return 0.5 * min(h - l for l, h in zip(self.lower, self.upper))

    @property
    def params(self) -> np.ndarray:
        return self._params

    def to_dict(self) -> dict:
        return {"kind": "box", "lower": list(self.lower), "upper": list(self.upper)}


@dataclass(frozen=True)
class FreeSpace(Domain):
    """All of space; paths never exit. Used to check the free-space stepper."""

    dim: int

    kind = geom.FREE

    def __post_init__(self):
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "_params", np.zeros(0))

    @property
    def scale(self) -> float:
        return 1.0

    @property
    def params(self) -> np.ndarray:
        return self._params

    @property
    def bounded(self) -> bool:
        return False

    def to_dict(self) -> dict:
        return {"kind": "free", "dim": self.dim}


def domain_from_dict(spec: dict) -> Domain:
    """Build a domain from its tagged-record form (see ``Domain.to_dict``)."""
    spec = dict(spec)
    kind = spec.pop("kind", None)
    try:
        if kind == "ball":
            return Ball(center=spec["center"], radius=spec["radius"])
        if kind == "half_space":
            return HalfSpace(axis=spec["axis"], offset=spec.get("offset", 0.0), dim=spec["dim"])
        if kind == "box":
            return Box(lower=spec["lower"], upper=spec["upper"])
        if kind == "free":
            return FreeSpace(dim=spec["dim"])
    except KeyError as exc:
        raise ValueError(f"domain of kind {kind!r} is missing field {exc.args[0]!r}") from None
    raise ValueError(f"unknown domain kind {kind!r}")


def contains(d: Domain, x) -> bool:
    return d.contains(x)


def dist_to_boundary(d: Domain, x) -> float:
    return d.dist_to_boundary(x)


def project_to_boundary(d: Domain, x) -> np.ndarray:
    return d.project_to_boundary(x)


@dataclass(frozen=True)
class BoundaryBinning:
    """Partition of (a window of) the boundary into bins.

    ``angular``
        planar ball, ``bins`` equal arcs starting at angle 0.
    ``cap``
        ball, ``bins`` equal-width slabs in coordinate ``axis`` of the unit
        sphere (equal measure for ``n = 3``).
    ``grid``
        half-space or box; ``bins`` cells per free coordinate. Half-spaces
        need ``window = (lo, hi)`` applied to every free coordinate; box faces
        are gridded in full, face by face.
    """

    scheme: str
    bins: int
    axis: int = 1
    window: tuple | None = None

    def __post_init__(self):
        if self.scheme not in ("angular", "cap", "grid"):
            raise ValueError(f"unknown binning scheme {self.scheme!r}")
        if int(self.bins) < 1:
            raise ValueError("bins must be a positive integer")
        object.__setattr__(self, "bins", int(self.bins))
        object.__setattr__(self, "axis", int(self.axis))
        if self.window is not None:
            lo, hi = (float(v) for v in self.window)
            if not hi > lo:
                raise ValueError("grid window needs hi > lo")
            object.__setattr__(self, "window", (lo, hi))

    @classmethod
    def from_dict(cls, spec: dict) -> "BoundaryBinning":
        return cls(
            scheme=spec["scheme"],
            bins=spec["bins"],
            axis=spec.get("axis", 1),
            window=spec.get("window"),
        )

    def to_dict(self) -> dict:
        out = {"scheme": self.scheme, "bins": self.bins, "axis": self.axis}
        if self.window is not None:
            out["window"] = list(self.window)
        return out

    def check(self, d: Domain) -> None:
        """Raise ``ValueError`` if this binning does not apply to ``d``."""
        if self.scheme == "angular":
            if not (isinstance(d, Ball) and d.dim == 2):
                raise ValueError("angular binning needs a planar ball")
        elif self.scheme == "cap":
            if not isinstance(d, Ball):
                raise ValueError("cap binning needs a ball")
            if not 1 <= self.axis <= d.dim:
                raise ValueError(f"cap axis must be in 1..{d.dim}")
        elif isinstance(d, HalfSpace):
            if self.window is None:
                raise ValueError("grid binning of a half-space needs a window")
        elif not isinstance(d, Box):
            raise ValueError("grid binning needs a half-space or a box")

    def bin_count(self, d: Domain) -> int:
        self.check(d)
        if self.scheme in ("angular", "cap"):
            return self.bins
        cells = self.bins ** (d.dim - 1)
        return cells if isinstance(d, HalfSpace) else 2 * d.dim * cells

    def indices(self, d: Domain, ys, tol: float = BOUNDARY_TOL) -> np.ndarray:
        """Vectorised ``bin_index`` over the rows of ``ys``."""
        self.check(d)
        ys = np.atleast_2d(np.asarray(ys, dtype=float))
        if ys.shape[1] != d.dim:
            raise ValueError(f"points have dimension {ys.shape[1]}, domain has {d.dim}")
        off = d.boundary_offset(ys)
        bad = ~(off <= tol * d.scale)
        if bad.any():
            j = int(np.argmax(bad))
            raise ValueError(f"point {ys[j].tolist()} is not on the boundary (offset {off[j]:.3g})")
        k = self.bins
        if self.scheme == "angular":
            c = np.array(d.center)
            ang = np.arctan2(ys[:, 1] - c[1], ys[:, 0] - c[0]) % (2.0 * math.pi)
            return np.minimum((ang / (2.0 * math.pi) * k).astype(np.int64), k - 1)
        if self.scheme == "cap":
            z = (ys[:, self.axis - 1] - d.center[self.axis - 1]) / d.radius
            z = np.clip(z, -1.0, 1.0)
            return np.minimum(((z + 1.0) * 0.5 * k).astype(np.int64), k - 1)
        if isinstance(d, HalfSpace):
            free = [i for i in range(d.dim) if i != d.axis - 1]
            lo, hi = self.window
            out = np.zeros(len(ys), dtype=np.int64)
            inside = np.ones(len(ys), dtype=bool)
            for i in free:
                v = ys[:, i]
                inside &= (v >= lo) & (v < hi)
                cell = np.clip(((v - lo) / (hi - lo) * k).astype(np.int64), 0, k - 1)
                out = out * k + cell
            out[~inside] = OUT_OF_WINDOW
            return out
        lo = np.array(d.lower)
        hi = np.array(d.upper)
        tol_abs = tol * d.scale
        face = np.full(len(ys), -1, dtype=np.int64)
        for f in range(2 * d.dim - 1, -1, -1):
            axis, side = divmod(f, 2)
            plane = hi[axis] if side else lo[axis]
            face[np.abs(ys[:, axis] - plane) <= tol_abs] = f
        face_axis = face // 2
        cell = np.zeros(len(ys), dtype=np.int64)
        for i in range(d.dim):
            frac = (ys[:, i] - lo[i]) / (hi[i] - lo[i])
            digit = np.clip((frac * k).astype(np.int64), 0, k - 1)
            free = face_axis != i
            cell[free] = cell[free] * k + digit[free]
        return face * k ** (d.dim - 1) + cell

    def index(self, d: Domain, y) -> int:
        return int(self.indices(d, y)[0])

    def descriptor(self, d: Domain, i: int) -> str:
        """Human-readable label of bin ``i`` (``"overflow"`` for the out-of-window bin)."""
        k = self.bins
        if i == OUT_OF_WINDOW or i >= self.bin_count(d):
            return "overflow"
        if self.scheme == "angular":
            w = 2.0 * math.pi / k
            return f"angle[{i * w!r},{(i + 1) * w!r})"
        if self.scheme == "cap":
            w = 2.0 / k
            return f"x{self.axis}[{-1.0 + i * w!r},{-1.0 + (i + 1) * w!r})"
        cells = k ** (d.dim - 1)
        face, cell = divmod(i, cells)
        digits = []
        for _ in range(d.dim - 1):
            cell, r = divmod(cell, k)
            digits.append(r)
        label = "cell(" + ",".join(str(v) for v in reversed(digits)) + ")"
        if isinstance(d, Box):
            axis, side = divmod(face, 2)
            label = f"face(x{axis + 1},{'upper' if side else 'lower'})/" + label
        return label

    def uniform_probabilities(self, d: Domain) -> np.ndarray:
        """Bin masses of the uniform measure on a ball's sphere (angular or cap schemes)."""
        from scipy.stats import beta

        if self.scheme == "angular":
            self.check(d)
            return np.full(self.bins, 1.0 / self.bins)
        if self.scheme == "cap":
            self.check(d)
            a = 0.5 * (d.dim - 1)
            edges = np.linspace(0.0, 1.0, self.bins + 1)
            return np.diff(beta(a, a).cdf(edges))
        raise ValueError("uniform bin masses are defined only for sphere binnings")


def bin_index(b: BoundaryBinning, d: Domain, y) -> int:
    return b.index(d, y)
