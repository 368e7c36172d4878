"""Discrete weighted point measures and the geometric primitives built on them.

A `DiscreteMeasure` is a finite list of points in R^n with nonnegative
weights, standing in for a compactly supported Radon measure.  Everything
else in the package consumes the operations defined here: mass of closed
euclidean/ellipse balls, restriction to predicate regions, affine
pushforward, and the anisotropic rescaling

    y  |->  M(a)^{-1} (y - a) / r

driven by a matrix field a |-> M(a).

All objects are immutable values; every operation returns a new measure.
Ball membership is closed with a tie tolerance of ``TIE_TOL`` relative to the
radius so floating-point boundary ties resolve deterministically.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, DimensionMismatchError, SingularMatrixError

# Relative tolerance for closed-ball membership: |y - a| <= r * (1 + TIE_TOL).
TIE_TOL = 1e-12

# |det| floor below which an affine map is rejected as singular.
_AFFINE_DET_FLOOR = 1e-12


def _as_points(points, dim=None):
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        if dim is None:
            raise ContractError("empty point list needs an explicit dim")
        return np.zeros((0, dim), dtype=float)
    if pts.ndim == 1:
        pts = pts[None, :]
    if pts.ndim != 2:
        raise ContractError(f"points must be a (N, dim) array, got shape {pts.shape}")
    return pts


def _freeze(arr):
    arr = np.ascontiguousarray(arr, dtype=float)
    arr.setflags(write=False)
    return arr


class DiscreteMeasure:
    """Finite weighted point set in R^n.

    Parameters
    ----------
    points : array-like, shape (N, dim)
        Point coordinates.
    weights : array-like, shape (N,)
        Nonnegative masses, one per point.
    dim : int, optional
        Ambient dimension; required when ``points`` is empty.
    """

    __slots__ = ("points", "weights", "dim")

    def __init__(self, points, weights, dim=None):
        pts = _as_points(points, dim)
        w = np.asarray(weights, dtype=float).reshape(-1)
        if dim is not None and pts.shape[1] != dim:
            raise DimensionMismatchError(
                f"points have dimension {pts.shape[1]}, expected {dim}"
            )
        if pts.shape[1] < 1:
            raise ContractError("ambient dimension must be >= 1")
        if w.shape[0] != pts.shape[0]:
            raise ContractError(
                f"{pts.shape[0]} points but {w.shape[0]} weights"
            )
        if not np.all(np.isfinite(pts)):
            raise ContractError("points must be finite")
        if not np.all(np.isfinite(w)):
            raise ContractError("weights must be finite")
        if w.size and w.min() < 0.0:
            raise ContractError("weights must be nonnegative")
        self.points = _freeze(pts)
        self.weights = _freeze(w)
        self.dim = pts.shape[1]

    @classmethod
    def empty(cls, dim):
        """The zero measure in R^dim."""
        return cls(np.zeros((0, dim)), np.zeros(0), dim=dim)

    @classmethod
    def dirac(cls, point, weight=1.0):
        """A single atom ``weight * delta_point``."""
        return cls(np.asarray(point, dtype=float)[None, :], [weight])

    @property
    def size(self):
        return self.points.shape[0]

    @property
    def total_mass(self):
        return float(self.weights.sum())

    def support(self):
        """Points carrying strictly positive weight."""
        keep = self.weights > 0.0
        return self.points[keep]

    def scaled(self, factor):
        """Measure with all weights multiplied by ``factor`` (>= 0)."""
        if factor < 0:
            raise ContractError("scaling factor must be nonnegative")
        return DiscreteMeasure(self.points, self.weights * factor, dim=self.dim)

    def __repr__(self):
        return (
            f"DiscreteMeasure(n={self.dim}, points={self.size}, "
            f"mass={self.total_mass:.6g})"
        )


# ---------------------------------------------------------------------------
# Predicate regions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Ball:
    """Closed ball: euclidean when ``matrix`` is None, otherwise the ellipse

    ``{ y : |matrix^{-1}(y - center)| <= radius }``.

    The matrix is the anisotropy evaluated at the center, i.e. the ellipse is
    ``center + matrix . B(0, radius)``.
    """

    center: np.ndarray
    radius: float
    matrix: np.ndarray | None = None
    _inv: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(-1)
        object.__setattr__(self, "center", _freeze(c))
        if not self.radius > 0.0:
            raise ContractError(f"ball radius must be positive, got {self.radius}")
        if self.matrix is not None:
            m = np.asarray(self.matrix, dtype=float)
            if m.shape != (c.size, c.size):
                raise ContractError("ellipse matrix shape must match center")
            det = np.linalg.det(m)
            if abs(det) < _AFFINE_DET_FLOOR:
                raise SingularMatrixError("ellipse matrix is singular")
            object.__setattr__(self, "matrix", _freeze(m))
            object.__setattr__(self, "_inv", _freeze(np.linalg.inv(m)))

    @property
    def dim(self):
        return self.center.size

    def contains(self, points):
        """Boolean mask of points inside the closed ball (tie-tolerant)."""
        pts = np.asarray(points, dtype=float)
        diff = pts - self.center
        if self.matrix is not None:
            diff = diff @ self._inv.T
        dist = np.sqrt(np.sum(diff * diff, axis=-1))
        return dist <= self.radius * (1.0 + TIE_TOL)


@dataclass(frozen=True)
class HalfSpace:
    """Closed half-space { y : <normal, y> <= offset }."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float).reshape(-1)
        if np.linalg.norm(n) == 0.0:
            raise ContractError("half-space normal must be nonzero")
        object.__setattr__(self, "normal", _freeze(n))

    def contains(self, points):
        pts = np.asarray(points, dtype=float)
        return pts @ self.normal <= self.offset


@dataclass(frozen=True)
class Box:
    """Closed axis-aligned box { y : lo <= y <= hi componentwise }."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float).reshape(-1)
        hi = np.asarray(self.hi, dtype=float).reshape(-1)
        if lo.shape != hi.shape or np.any(lo > hi):
            raise ContractError("box needs lo <= hi of equal dimension")
        object.__setattr__(self, "lo", _freeze(lo))
        object.__setattr__(self, "hi", _freeze(hi))

    def contains(self, points):
        pts = np.asarray(points, dtype=float)
        return np.all((pts >= self.lo) & (pts <= self.hi), axis=-1)


class AllSpace:
    """The trivial region containing everything."""

    def contains(self, points):
        return np.ones(np.asarray(points).shape[0], dtype=bool)


class EmptyRegion:
    """The empty region."""

    def contains(self, points):
        return np.zeros(np.asarray(points).shape[0], dtype=bool)


# ---------------------------------------------------------------------------
# Affine maps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AffineMap:
    """Invertible affine map y |-> matrix @ y + offset."""

    matrix: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        b = np.asarray(self.offset, dtype=float).reshape(-1)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] != b.size:
            raise ContractError("affine map needs square matrix and matching offset")
        if abs(np.linalg.det(m)) < _AFFINE_DET_FLOOR:
            raise SingularMatrixError("affine map has singular linear part")
        object.__setattr__(self, "matrix", _freeze(m))
        object.__setattr__(self, "offset", _freeze(b))

    @classmethod
    def identity(cls, dim):
        return cls(np.eye(dim), np.zeros(dim))

    @classmethod
    def linear(cls, matrix):
        matrix = np.asarray(matrix, dtype=float)
        return cls(matrix, np.zeros(matrix.shape[0]))

    @classmethod
    def translate_scale(cls, a, r):
        """The rescaling y |-> (y - a) / r about the point ``a``."""
        a = np.asarray(a, dtype=float).reshape(-1)
        if not r > 0.0:
            raise ContractError("scale must be positive")
        return cls(np.eye(a.size) / r, -a / r)

    @property
    def dim(self):
        return self.offset.size

    def apply(self, points):
        pts = np.asarray(points, dtype=float)
        return pts @ self.matrix.T + self.offset

    def compose(self, other):
        """The map ``self o other`` (apply ``other`` first)."""
        return AffineMap(
            self.matrix @ other.matrix,
            self.matrix @ other.offset + self.offset,
        )

    def inverse(self):
        inv = np.linalg.inv(self.matrix)
        return AffineMap(inv, -inv @ self.offset)


# ---------------------------------------------------------------------------
# Matrix (ellipse) fields
# ---------------------------------------------------------------------------

class EllipseField:
    """A map a |-> M(a) in GL(n, R) defining the ellipses M(a) B(0, r).

    Parameters
    ----------
    evaluator : callable
        Maps an n-vector to an (n, n) matrix.
    dim : int
        Ambient dimension n.
    kind : {"constant", "analytic", "piecewise"}
        Tag describing the field; ``constant`` fields are evaluated once.
    batch_evaluator : callable, optional
        Vectorized form mapping a (K, n) array to a (K, n, n) array; used by
        quadrature-heavy consumers.  Falls back to a python loop.
    det_floor : float
        Matrices with |det| below this floor are rejected.  Invertibility is
        all the geometry needs, but numerics require quantitative
        nondegeneracy.
    """

    def __init__(self, evaluator, dim, kind="analytic", batch_evaluator=None,
                 det_floor=1e-9):
        if kind not in ("constant", "analytic", "piecewise"):
            raise ContractError(f"unknown field kind {kind!r}")
        if dim < 1:
            raise ContractError("dimension must be >= 1")
        self._evaluator = evaluator
        self.dim = int(dim)
        self.kind = kind
        self._batch = batch_evaluator
        self.det_floor = float(det_floor)
        self._cache = {}

    @classmethod
    def constant(cls, matrix):
        """Field returning the same matrix everywhere."""
        m = np.asarray(matrix, dtype=float)
        return cls(lambda a, _m=m: _m, m.shape[0], kind="constant")

    @classmethod
    def identity(cls, dim):
        return cls.constant(np.eye(dim))

    def _validate(self, m, a):
        m = np.asarray(m, dtype=float)
        if m.shape != (self.dim, self.dim):
            raise ContractError(
                f"field evaluated at {a} returned shape {m.shape}, "
                f"expected ({self.dim}, {self.dim})"
            )
        det = np.linalg.det(m)
        if not np.isfinite(det) or abs(det) < self.det_floor:
            raise SingularMatrixError(
                f"field matrix at {a} has |det| = {abs(det):.3g} "
                f"below floor {self.det_floor:.3g}"
            )
        return m

    def _entry(self, a):
        a = np.asarray(a, dtype=float).reshape(-1)
        key = b"" if self.kind == "constant" else a.tobytes()
        hit = self._cache.get(key)
        if hit is None:
            m = self._validate(self._evaluator(a), a)
            hit = (_freeze(m), _freeze(np.linalg.inv(m)))
            self._cache[key] = hit
        return hit

    def matrix(self, a):
        """M(a), validated against the determinant floor."""
        return self._entry(a)[0]

    def inverse(self, a):
        """Cached M(a)^{-1}."""
        return self._entry(a)[1]

    def matrices(self, points):
        """Batch evaluation at a (K, n) array of points; no caching."""
        pts = np.asarray(points, dtype=float)
        if self.kind == "constant":
            m = self.matrix(np.zeros(self.dim))
            return np.broadcast_to(m, (pts.shape[0],) + m.shape).copy()
        if self._batch is not None:
            out = np.asarray(self._batch(pts), dtype=float)
            if out.shape != (pts.shape[0], self.dim, self.dim):
                raise ContractError("batch evaluator returned wrong shape")
            return out
        return np.stack([self._validate(self._evaluator(p), p) for p in pts])


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def mass_in(mu, ball):
    """Total mass of ``mu`` inside a closed (euclidean or ellipse) ball."""
    if ball.dim != mu.dim:
        raise DimensionMismatchError(
            f"ball in R^{ball.dim} but measure in R^{mu.dim}"
        )
    mask = ball.contains(mu.points)
    return float(mu.weights[mask].sum())


def restrict(mu, region):
    """Restriction of ``mu`` to a predicate region (mass non-increasing)."""
    keep = np.asarray(region.contains(mu.points), dtype=bool)
    return DiscreteMeasure(mu.points[keep], mu.weights[keep], dim=mu.dim)


def pushforward(mu, amap):
    """Image measure under an invertible affine map: points move, mass stays."""
    if amap.dim != mu.dim:
        raise DimensionMismatchError(
            f"map in R^{amap.dim} but measure in R^{mu.dim}"
        )
    return DiscreteMeasure(amap.apply(mu.points), mu.weights, dim=mu.dim)


def lambda_rescale(mu, a, r, field):
    """Anisotropic rescaling y |-> M(a)^{-1}((y - a)/r) as an image measure.

    Implemented as the exact factorization: linear pushforward by M(a)^{-1}
    followed by the plain rescaling about M(a)^{-1} a, so the two routes
    agree point-by-point.  Satisfies

        lambda_rescale(mu, a, r, field)  of  B(0, 1)
            ==  mass of mu in the ellipse  a + M(a) B(0, r).
    """
    if not r > 0.0:
        raise ContractError("rescaling radius must be positive")
    a = np.asarray(a, dtype=float).reshape(-1)
    if a.size != mu.dim:
        raise DimensionMismatchError("center dimension mismatch")
    inv = field.inverse(a)
    linear = pushforward(mu, AffineMap.linear(inv))
    return pushforward(linear, AffineMap.translate_scale(inv @ a, r))


def ellipse_ball(a, r, field):
    """The closed ellipse a + M(a) B(0, r) as a `Ball`."""
    a = np.asarray(a, dtype=float).reshape(-1)
    return Ball(a, r, matrix=field.matrix(a))


# ---------------------------------------------------------------------------
# CSV interchange
# ---------------------------------------------------------------------------

def save_measure_csv(mu, path, header_comment=None):
    """Write ``mu`` as CSV with header x1,...,xn,w (17 significant digits).

    An optional ``# ...`` comment line (e.g. a config hash) precedes the
    header; the loader skips comments.
    """
    with open(path, "w", newline="") as fh:
        if header_comment is not None:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh)
        writer.writerow([f"x{i + 1}" for i in range(mu.dim)] + ["w"])
        for p, w in zip(mu.points, mu.weights):
            writer.writerow([f"{v:.17g}" for v in p] + [f"{w:.17g}"])


def load_measure_csv(path, dim=None):
    """Read a measure written by `save_measure_csv`.

    Leading ``#`` comment lines are skipped; when ``dim`` is given the
    column count is validated against it.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        while header and header[0].startswith("#"):
            header = next(reader, None)
        if not header or header[-1] != "w":
            raise ContractError(f"{path}: expected header x1,...,xn,w")
        ncols = len(header)
        if dim is not None and ncols != dim + 1:
            raise ContractError(
                f"{path}: {ncols - 1} coordinate columns, expected {dim}"
            )
        pts, ws = [], []
        for row in reader:
            if not row or row[0].startswith("#"):
                continue
            if len(row) != ncols:
                raise ContractError(f"{path}: ragged row {row!r}")
            vals = [float(v) for v in row]
            pts.append(vals[:-1])
            ws.append(vals[-1])
    return DiscreteMeasure(np.array(pts).reshape(len(ws), ncols - 1), ws,
                           dim=ncols - 1)
