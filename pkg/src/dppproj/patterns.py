"""Point patterns on [0, 1]^iota, coordinate projection and torus geometry.

All distances are periodic: the kernels are Fourier series on the torus, so
the translation-invariant torus estimator needs no edge correction.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, DuplicatePoints, InvalidParameter, InvalidRadius
from .kernels import IndexSet

GEOMETRY = "torus"


@dataclass(frozen=True, eq=False)
class PointPattern:
    """A simple finite point pattern in the unit hypercube.

    ``points`` has shape ``(count, iota)``; it is stored read-only.
    """

    points: np.ndarray
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2:
            raise DimensionMismatch(f"points must be a 2-d array, got shape {pts.shape}")
        if pts.shape[1] < 1:
            raise DimensionMismatch("points need at least one coordinate")
        if pts.size and (not np.isfinite(pts).all() or pts.min() < 0.0 or pts.max() > 1.0):
            raise InvalidParameter("coordinates must lie in [0, 1]")
        if len(pts) > 1 and len(np.unique(pts, axis=0)) != len(pts):
            raise DuplicatePoints("pattern contains repeated points")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @classmethod
    def empty(cls, iota: int, seed=None, meta=None) -> "PointPattern":
        return cls(np.empty((0, iota)), seed, dict(meta or {}))

    @property
    def iota(self) -> int:
        return self.points.shape[1]

    @property
    def count(self) -> int:
        return self.points.shape[0]

    def __len__(self) -> int:
        return self.count

    def __eq__(self, other):
        if not isinstance(other, PointPattern):
            return NotImplemented
        return self.points.shape == other.points.shape and np.array_equal(self.points, other.points)

    __hash__ = None

    # -- serialization -------------------------------------------------------

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(f"x{i + 1}" for i in range(self.iota)) + "\n")
        for row in self.points:
            buf.write(",".join(format(v, ".17g") for v in row) + "\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, seed=None) -> "PointPattern":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows:
            raise InvalidParameter("empty CSV")
        header = rows[0]
        if header != [f"x{i + 1}" for i in range(len(header))]:
            raise InvalidParameter(f"unexpected header {header}")
        pts = np.array([[float(v) for v in row] for row in rows[1:] if row], dtype=float)
        return cls(pts.reshape(-1, len(header)), seed)

    def write_csv(self, path) -> None:
        Path(path).write_text(self.to_csv())

    @classmethod
    def read_csv(cls, path, seed=None) -> "PointPattern":
        return cls.from_csv(Path(path).read_text(), seed)


def project(p: PointPattern, I) -> PointPattern:
    """Keep the coordinates listed in ``I`` (sorted), dropping the others."""
    I = IndexSet.coerce(I, p.iota)
    meta = dict(p.meta, projected_on=list(I.indices))
    return PointPattern(p.points[:, list(I.indices)], p.seed, meta)


def _wrap(diff):
    a = np.abs(diff)
    return np.minimum(a, 1.0 - a)


def torus_sup_distance(x, y):
    """max_i min(|x_i - y_i|, 1 - |x_i - y_i|); broadcasts over leading axes."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1:] != y.shape[-1:]:
        raise DimensionMismatch(f"dimensions differ: {x.shape[-1:]} vs {y.shape[-1:]}")
    out = _wrap(x - y).max(axis=-1)
    return float(out) if out.ndim == 0 else out


def pair_distances(p: PointPattern) -> np.ndarray:
    """Torus sup-distances of the unordered pairs i < j, flattened."""
    n = p.count
    if n < 2:
        return np.empty(0)
    out = []
    pts = p.points
    # row blocks keep the (block, n, iota) temporary small
    step = max(1, 2**20 // max(1, n * p.iota))
    for start in range(0, n - 1, step):
        block = pts[start:start + step]
        dist = _wrap(block[:, None, :] - pts[None, :, :]).max(axis=-1)
        rows = np.arange(start, start + len(block))
        mask = np.arange(n)[None, :] > rows[:, None]
        out.append(dist[mask])
    return np.concatenate(out)


def pair_counts(p: PointPattern, r_grid) -> np.ndarray:
    """Ordered-pair counts ``#{(x, y): x != y, d(x, y) <= r}`` for every r."""
    r = np.asarray(r_grid, dtype=float)
    if r.size and (r.min() < 0 or r.max() > 0.5):
        raise InvalidRadius("radii must lie in [0, 1/2]")
    dist = np.sort(pair_distances(p))
    return 2 * np.searchsorted(dist, r, side="right").astype(np.int64)


def pair_count(p: PointPattern, r: float) -> int:
    return int(pair_counts(p, [r])[0])
