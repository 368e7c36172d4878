"""Anisotropic Riesz-type kernels, truncated principal values, and the
constant-coefficient elliptic kernels with their factorization identities.

Three kernel flavors act on pairs (x, y), all singular at y = x:

* ``riesz``:    M(x)^{-1}(y-x) / |M(x)^{-1}(y-x)|^{m+1} for an anisotropy
                field M, the codimension-m transform driving the
                rectifiability diagnostics;
* ``theta``:    the gradient of the constant-coefficient fundamental solution
                A^{-1}(y-x) / (det(A)^{1/2} <A^{-1}(y-x), y-x>^{n/2}), with
                the dimensional normalizing constant fixed to 1 (exposed as
                ``constant``; every identity checked here is stated so it
                cancels);
* ``finsler``:  A^{-1}(y-x) / <A^{-1}(y-x), y-x>^{(m+1)/2}, the kernel of the
                Finsler p-Laplacian layer potential, equal to L^{-1} applied
                to the riesz kernel of the square root L of A.

Truncated sums integrate a kernel against a discrete measure over the window
eps <= |L(x)^{-1}(y-x)| < R (ellipse truncation; the euclidean window is
available as an option without any equivalence claim).  The convergence scan
classifies the eps-ladder behavior as converged / oscillating / diverging,
and ``frozen_discrepancy`` measures how far the kernel frozen at a ball
average drifts from the kernel frozen at the center, the engine of the
variable-coefficient comparison.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, DimensionMismatchError, ResolutionGuardError
from .measures import TIE_TOL, EllipseField
from .reports import ScanReport

_SQRT_RESIDUAL_TOL = 1e-10

# Convergence-scan thresholds.
PV_CONVERGED_REL = 1e-2
PV_DIVERGING_RATIO = 1.2


def spd_sqrt(matrix):
    """Unique symmetric positive-definite square root, via eigendecomposition."""
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractError("matrix must be square")
    if np.abs(a - a.T).max() > 1e-10 * (1 + np.abs(a).max()):
        raise ContractError("matrix must be symmetric")
    evals, evecs = np.linalg.eigh(a)
    if evals.min() <= 0:
        raise ContractError("matrix must be positive definite")
    root = (evecs * np.sqrt(evals)) @ evecs.T
    if np.abs(root @ root - a).max() > _SQRT_RESIDUAL_TOL * (1 + np.abs(a).max()):
        raise ContractError("square-root residual above tolerance")
    return root


@dataclass(frozen=True)
class KernelSpec:
    """Kernel flavor plus its anisotropy data.

    ``riesz`` uses the matrix field and codimension m; ``theta`` uses the SPD
    matrix (m ignored, the exponent is n/2); ``finsler`` uses the SPD matrix
    and m.  For theta/finsler the SPD square root is computed once and reused
    for the ellipse truncation window.
    """

    flavor: str
    dim: int
    m: int | None = None
    anisotropy: EllipseField | None = None
    matrix: np.ndarray | None = None
    constant: float = 1.0
    _sqrt: np.ndarray | None = field(default=None, repr=False, compare=False)
    _sqrt_inv: np.ndarray | None = field(default=None, repr=False, compare=False)
    _inv: np.ndarray | None = field(default=None, repr=False, compare=False)
    _det_root: float | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.flavor not in ("riesz", "theta", "finsler"):
            raise ContractError(f"unknown kernel flavor {self.flavor!r}")
        n = self.dim
        if self.flavor in ("riesz", "finsler"):
            if self.m is None or not 1 <= self.m <= n - 1:
                raise ContractError(
                    f"codimension parameter m must lie in 1..{n - 1}"
                )
        if self.flavor == "riesz":
            if self.anisotropy is None or self.anisotropy.dim != n:
                raise ContractError("riesz flavor needs an anisotropy field")
        else:
            if self.matrix is None:
                raise ContractError(f"{self.flavor} flavor needs an SPD matrix")
            a = np.asarray(self.matrix, dtype=float)
            if a.shape != (n, n):
                raise ContractError("matrix shape must match dim")
            root = spd_sqrt(a)
            object.__setattr__(self, "matrix", a)
            object.__setattr__(self, "_sqrt", root)
            object.__setattr__(self, "_sqrt_inv", np.linalg.inv(root))
            object.__setattr__(self, "_inv", np.linalg.inv(a))
            object.__setattr__(self, "_det_root",
                               float(np.sqrt(np.linalg.det(a))))

    def sqrt_matrix(self):
        return self._sqrt


def riesz_kernel(anisotropy, m):
    return KernelSpec("riesz", anisotropy.dim, m=m, anisotropy=anisotropy)


def theta_kernel(matrix, constant=1.0):
    matrix = np.asarray(matrix, dtype=float)
    return KernelSpec("theta", matrix.shape[0], matrix=matrix, constant=constant)


def finsler_kernel(matrix, m):
    matrix = np.asarray(matrix, dtype=float)
    return KernelSpec("finsler", matrix.shape[0], matrix=matrix, m=m)


def _kernel_rows(spec, x, targets):
    """Kernel vectors K(x, y) for all rows y of ``targets``, vectorized.

    Returns (values, window_radii): the truncation variable is
    |L^{-1}(y - x)| with L the anisotropy at x (riesz) or the SPD square root
    (theta/finsler).
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    diff = targets - x
    n = spec.dim
    if spec.flavor == "riesz":
        inv = spec.anisotropy.inverse(x)
        u = diff @ inv.T
        t = np.sqrt(np.sum(u * u, axis=1))
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = u / t[:, None] ** (spec.m + 1)
        return vals, t
    inv_root = spec._sqrt_inv
    u = diff @ inv_root.T
    t = np.sqrt(np.sum(u * u, axis=1))
    w = diff @ spec._inv.T
    if spec.flavor == "theta":
        denom = spec._det_root * t ** n
    else:
        denom = t ** (spec.m + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = spec.constant * w / denom[:, None]
    return vals, t


def kernel_eval(spec, x, y):
    """Kernel vector at a single pair; raises at the singularity y = x."""
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.size != spec.dim or y.size != spec.dim:
        raise DimensionMismatchError("kernel arguments dimension mismatch")
    if np.array_equal(x, y):
        raise ContractError("kernel is singular at y = x")
    vals, _ = _kernel_rows(spec, x, y[None, :])
    return vals[0]


def truncated_pv(spec, mu, x, eps, R=None, truncation="ellipse"):
    """Weighted kernel sum over the window eps <= |L^{-1}(y - x)| < R.

    ``truncation="euclidean"`` windows on |y - x| instead; the two are not
    claimed equivalent.  Atoms at x itself are excluded by the truncation.
    """
    if not eps > 0:
        raise ContractError("eps must be positive")
    outer = np.inf if R is None else float(R)
    if not eps < outer:
        raise ContractError(f"need eps < R, got ({eps}, {outer})")
    if truncation not in ("ellipse", "euclidean"):
        raise ContractError(f"unknown truncation {truncation!r}")
    if mu.dim != spec.dim:
        raise DimensionMismatchError("measure dimension mismatch")
    vals, t = _kernel_rows(spec, x, mu.points)
    if truncation == "euclidean":
        diff = mu.points - np.asarray(x, dtype=float).reshape(-1)
        t = np.sqrt(np.sum(diff * diff, axis=1))
    # Tie-tolerant half-open window [eps, R): mirror-symmetric samples whose
    # float distances straddle a cut by an ulp must land on the same side, or
    # odd-kernel cancellation breaks at the boundary spheres.
    mask = (t >= eps * (1.0 - TIE_TOL)) & (t < outer * (1.0 - TIE_TOL))
    if not mask.any():
        return np.zeros(spec.dim)
    return (mu.weights[mask, None] * vals[mask]).sum(axis=0)


def pv_convergence_scan(spec, mu, x, eps_ladder, spacing, R=None,
                        truncation="ellipse"):
    """Cauchy-criterion diagnosis of the truncated sums along an eps-ladder.

    The ladder must be strictly decreasing with ratio 2, hold at least four
    rungs, and stay at or above 5 * spacing (the resolution guard; below it
    discretization noise swamps the thresholds).

    Verdicts: ``converged`` when the last three successive differences are
    each below 1e-2 * (1 + |last value|); ``diverging`` when the norms grow
    monotonically with per-rung ratio >= 1.2; ``oscillating`` otherwise.
    """
    ladder = [float(e) for e in eps_ladder]
    if len(ladder) < 4:
        raise ContractError("eps ladder needs at least 4 rungs")
    for prev, nxt in zip(ladder, ladder[1:]):
        if not nxt < prev:
            raise ContractError("eps ladder must be strictly decreasing")
        if abs(nxt / prev - 0.5) > 1e-9:
            raise ContractError("eps ladder must halve at each rung")
    if ladder[-1] < 5.0 * spacing:
        raise ResolutionGuardError(
            f"bottom rung {ladder[-1]} below 5 * spacing = {5 * spacing}"
        )

    values = np.array([
        truncated_pv(spec, mu, x, e, R=R, truncation=truncation)
        for e in ladder
    ])
    diffs = np.linalg.norm(np.diff(values, axis=0), axis=1)
    norms = np.linalg.norm(values, axis=1)

    last = norms[-1]
    tol = PV_CONVERGED_REL * (1.0 + last)
    if np.all(diffs[-3:] <= tol):
        verdict = "converged"
    else:
        growing = np.all(np.diff(norms) > 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = norms[1:] / norms[:-1]
        if growing and np.all(ratios >= PV_DIVERGING_RATIO):
            verdict = "diverging"
        else:
            verdict = "oscillating"

    columns = {"eps": ladder}
    for k in range(spec.dim):
        columns[f"v{k + 1}"] = values[:, k].tolist()
    columns["successive_diff"] = [np.nan] + diffs.tolist()
    meta = {"max_diff": float(diffs.max()), "norms": norms.tolist()}
    if verdict == "converged":
        meta["limit"] = values[-1].tolist()
        meta["limit_norm"] = float(last)
    return ScanReport(columns=columns, verdict=verdict, meta=meta)


def layer_potential_identity_residual(A, mu, x, eps):
    """Residual of the exact layer-potential factorization at fixed truncation.

    With L the SPD square root of A,

        L^{-1} . (riesz sum, m = n-1)  ==  det(A)^{1/2} . (theta sum)

    over the same eps-ellipse window; the residual is float noise (<= 1e-10).
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    root = spd_sqrt(A)
    field = EllipseField.constant(root)
    riesz_sum = truncated_pv(riesz_kernel(field, n - 1), mu, x, eps)
    theta_sum = truncated_pv(theta_kernel(A), mu, x, eps)
    lhs = np.linalg.inv(root) @ riesz_sum
    rhs = float(np.sqrt(np.linalg.det(A))) * theta_sum
    return float(np.linalg.norm(lhs - rhs))


# ---------------------------------------------------------------------------
# Frozen-coefficient discrepancy
# ---------------------------------------------------------------------------

def ball_average(field, center, r, grid=16):
    """Midpoint-grid average of a matrix field over the ball B(center, r).

    Returns (average, error_estimate) with the error from a half-resolution
    Richardson comparison.  Supported for dim <= 3.
    """
    center = np.asarray(center, dtype=float).reshape(-1)
    n = center.size
    if n > 3:
        raise ContractError("ball averages implemented for dim <= 3 only")
    if grid < 8:
        raise ContractError("ball-average grid must be >= 8 points per axis")

    def midpoint_mean(k):
        offsets = (np.arange(k) + 0.5) / k * (2 * r) - r
        grids = np.meshgrid(*([offsets] * n), indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1) + center
        inball = np.sqrt(np.sum((pts - center) ** 2, axis=1)) <= r
        mats = field.matrices(pts[inball])
        return mats.mean(axis=0)

    full = midpoint_mean(grid)
    half = midpoint_mean(grid // 2)
    return full, float(np.abs(full - half).max())


def _annulus_grid(n, c2, C2, radial=8, angular=96):
    radii = np.linspace(c2, C2, radial)
    if n == 2:
        th = np.arange(angular) * (2 * np.pi / angular)
        dirs = np.column_stack([np.cos(th), np.sin(th)])
    elif n == 3:
        k = np.arange(angular)
        z = -1.0 + 2.0 * (k + 0.5) / angular
        phi = k * np.pi * (3.0 - np.sqrt(5.0))
        rho = np.sqrt(np.maximum(1.0 - z * z, 0.0))
        dirs = np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])
    else:
        raise ContractError("annulus grids implemented for dim <= 3 only")
    return (radii[:, None, None] * dirs[None, :, :]).reshape(-1, n)


def frozen_discrepancy(field, a, r, annulus=(0.5, 2.0), grid=16):
    """Sup over the annulus of the frozen-kernel drift, scale-normalized:

        sup  | grad_theta(a, y; avg of A over B(a, 1.5 r))
               - grad_theta(a, y; A(a)) | * |y - a|^{n-1}

    over c2 * r <= |y - a| <= C2 * r.  Zero for constant fields; decreasing
    in r wherever the field is continuous at ``a`` (trend check only).
    """
    a = np.asarray(a, dtype=float).reshape(-1)
    n = a.size
    if field.dim != n:
        raise DimensionMismatchError("field/center dimension mismatch")
    if not r > 0:
        raise ContractError("radius must be positive")
    c2, C2 = annulus
    if not 0 < c2 < C2:
        raise ContractError("annulus must satisfy 0 < c2 < C2")

    avg, _ = ball_average(field, a, 1.5 * r, grid=grid)
    avg = 0.5 * (avg + avg.T)
    if np.linalg.eigvalsh(avg).min() <= 0:
        raise ContractError("ball average of the field is not SPD")
    local = np.asarray(field.matrix(a), dtype=float)

    ys = a + r * _annulus_grid(n, c2, C2)
    k_avg = theta_kernel(avg)
    k_loc = theta_kernel(local)
    v_avg, _ = _kernel_rows(k_avg, a, ys)
    v_loc, _ = _kernel_rows(k_loc, a, ys)
    dist = np.sqrt(np.sum((ys - a) ** 2, axis=1))
    gap = np.sqrt(np.sum((v_avg - v_loc) ** 2, axis=1)) * dist ** (n - 1)
    return float(gap.max())
