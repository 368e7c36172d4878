"""Anisotropic blowup sequences and their per-scale rectifiability diagnostics.

A scale ladder drives three intertwined diagnostics at a base point a:

* ``density_scan``:   the ellipse densities mu(B_M(a, r_i)) / r_i^m per
                      scale, with running max/min as finite-scale stand-ins
                      for the upper and lower densities, and their gap ratio;
* ``blowup_sequence``: the rescaled measures c_i . T^M_{a, r_i}[mu]
                      restricted to a window ball, normalized either by the
                      ellipse mass (c_i = 1/mu(B_M(a, r_i))) or by the power
                      law (c_i = r_i^{-m});
* ``flatness_profile`` and ``sandwich_check``: distances of the blowups to
                      the flat cone, and the finite-scale density sandwich

        (min window density) * R^m <= nu_i(B_R) <= (max window density) * R^m

                      that holds up to discretization slack whenever the
                      density exists.

A resolution guard refuses ladders whose smallest radius does not dominate
the sample spacing; refusing beats reporting noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cones import cone_floor, d_cone_flat, symmetry_defect
from .errors import ContractError, ResolutionGuardError
from .measures import (Ball, DiscreteMeasure, ellipse_ball, lambda_rescale,
                       mass_in)
from .reports import ScanReport

# Each ellipse must contain at least this many sample cells per tangent
# direction for densities to be trustworthy.
RESOLUTION_GUARD = 20.0

# Blowups are restricted to this ball: large enough for flatness at scale 1
# and the sandwich at R <= 2, small enough to bound LP sites.
WINDOW_RADIUS = 4.0


@dataclass(frozen=True)
class ScaleLadder:
    """Geometric radius ladder r_i = r0 * rho^i with a resolution guard."""

    r0: float
    rho: float
    count: int
    spacing: float
    guard: float = RESOLUTION_GUARD

    def __post_init__(self):
        if not self.r0 > 0:
            raise ContractError("ladder top radius must be positive")
        if not 0 < self.rho < 1:
            raise ContractError("ladder ratio must lie in (0, 1)")
        if self.count < 1:
            raise ContractError("ladder needs at least one radius")
        if self.spacing < 0:
            raise ContractError("spacing must be nonnegative")
        if self.r_min < self.guard * self.spacing:
            raise ResolutionGuardError(
                f"smallest ladder radius {self.r_min:.4g} is below "
                f"{self.guard:g} sample spacings ({self.guard * self.spacing:.4g})"
            )

    @property
    def radii(self):
        return self.r0 * self.rho ** np.arange(self.count)

    @property
    def r_min(self):
        return float(self.r0 * self.rho ** (self.count - 1))


def ellipse_density(mu, a, r, anisotropy, m):
    """mu(B_M(a, r)) / r^m, the finite-scale anisotropic density."""
    return mass_in(mu, ellipse_ball(a, r, anisotropy)) / r ** m


def density_scan(mu, a, anisotropy, m, ladder):
    """Per-scale ellipse densities with the running gap ratio.

    A point outside the support neighborhood yields all-zero densities; the
    report flags that rather than failing.
    """
    radii = ladder.radii
    dens = np.array([ellipse_density(mu, a, r, anisotropy, m) for r in radii])
    running = []
    top, bot = -np.inf, np.inf
    for v in dens:
        top, bot = max(top, v), min(bot, v)
        running.append(top / bot if bot > 0 else np.inf)
    meta = {"gap_ratio": running[-1], "all_zero": bool(np.all(dens == 0.0))}
    return ScanReport(
        columns={"r": radii.tolist(), "density": dens.tolist(),
                 "gap_ratio_so_far": running},
        meta=meta,
    )


def density_gap_verdict(report, threshold):
    """``small-gap`` when (max/min - 1) < threshold, else ``large-gap``.

    The threshold is a required input: it stands in for the dimensional
    constant of the density-gap rectifiability criterion, whose numeric value
    is not pinned down.
    """
    ratio = report.meta["gap_ratio"]
    return "small-gap" if ratio - 1.0 < threshold else "large-gap"


@dataclass(frozen=True)
class BlowupSequence:
    """Normalized rescaled measures per ladder scale.

    ``measures[i]`` is None when mass normalization hit an empty ellipse at
    that scale (index also recorded in ``skipped``).  ``densities`` holds the
    power-law density at each scale, computed along the same arithmetic path
    as `density_scan`.
    """

    radii: np.ndarray
    measures: list
    densities: np.ndarray
    mode: str
    m: int | None
    skipped: list = field(default_factory=list)
    window_radius: float = WINDOW_RADIUS


def blowup_sequence(mu, a, anisotropy, ladder, mode="power", m=None):
    """Blowups c_i . T^M_{a, r_i}[mu] restricted to the window ball.

    ``power`` mode uses c_i = r_i^{-m} (needs m); ``mass`` mode normalizes
    each blowup to unit mass on B(0, 1) and skips scales where the ellipse
    carries no mass.
    """
    if mode not in ("power", "mass"):
        raise ContractError(f"unknown normalization mode {mode!r}")
    if mode == "power" and m is None:
        raise ContractError("power mode needs the dimension parameter m")
    a = np.asarray(a, dtype=float).reshape(-1)
    radii = ladder.radii
    window = Ball(np.zeros(mu.dim), WINDOW_RADIUS)
    measures, skipped, densities = [], [], []
    for i, r in enumerate(radii):
        resc = lambda_rescale(mu, a, float(r), anisotropy)
        unit_mass = mass_in(resc, Ball(np.zeros(mu.dim), 1.0))
        densities.append(
            ellipse_density(mu, a, float(r), anisotropy, m) if m is not None
            else np.nan
        )
        inside = window.contains(resc.points)
        kept = DiscreteMeasure(resc.points[inside], resc.weights[inside],
                               dim=mu.dim)
        if mode == "mass":
            if unit_mass <= 0.0:
                measures.append(None)
                skipped.append(i)
                continue
            measures.append(kept.scaled(1.0 / unit_mass))
        else:
            measures.append(kept.scaled(float(r) ** (-m)))
    return BlowupSequence(radii=radii, measures=measures,
                          densities=np.asarray(densities), mode=mode, m=m,
                          skipped=skipped)


def flatness_profile(blowups, m, s=1.0):
    """Cone distance of each blowup to the m-flats, with a trend verdict.

    Verdicts (floor = the cone discretization floor): ``decreasing`` when the
    last value is at most half the first and the sequence is monotone within
    20% noise; ``non-vanishing`` when every value stays >= 2x floor;
    ``inconclusive`` otherwise.
    """
    pairs = [(r, nu) for r, nu in zip(blowups.radii, blowups.measures)
             if nu is not None]
    if not pairs:
        raise ContractError("no blowups to profile")
    radii = [float(r) for r, _ in pairs]
    vals = [d_cone_flat(nu, m, s) for _, nu in pairs]
    floor = cone_floor(s, m)
    first, last = vals[0], vals[-1]
    monotone = all(nxt <= prev * 1.2 for prev, nxt in zip(vals, vals[1:]))
    if last <= 0.5 * first and monotone:
        verdict = "decreasing"
    elif min(vals) >= 2.0 * floor:
        verdict = "non-vanishing"
    else:
        verdict = "inconclusive"
    return ScanReport(
        columns={"r": radii, "flatness": vals},
        verdict=verdict,
        meta={"floor": floor, "final": last},
    )


def sandwich_check(mu, a, anisotropy, m, ladder, R_list):
    """Finite-scale density sandwich for power-normalized blowups.

    For each scale i and each R, checks

        dmin * R^m <= nu_i(B_R) <= dmax * R^m

    where dmin/dmax are the extreme densities over the scanned window.  The
    worst signed violation (in density units) is compared against the slack
    3 h / (r_min * rho); violations beyond it mean the density-existence
    hypothesis fails and the report says ``inconclusive``.
    """
    R_list = [float(R) for R in R_list]
    if not R_list or min(R_list) <= 0:
        raise ContractError("R list must be positive")
    if max(R_list) > WINDOW_RADIUS:
        raise ContractError(f"R beyond the blowup window {WINDOW_RADIUS}")
    seq = blowup_sequence(mu, a, anisotropy, ladder, mode="power", m=m)
    dens = seq.densities
    if np.min(dens) <= 0.0:
        raise ContractError("sandwich needs positive densities on the window")
    dmin, dmax = float(dens.min()), float(dens.max())

    rows_r, rows_R, viol = [], [], []
    for r, nu in zip(seq.radii, seq.measures):
        for R in R_list:
            val = mass_in(nu, Ball(np.zeros(mu.dim), R)) / R ** m
            gap = max(dmin - val, val - dmax, 0.0)
            rows_r.append(float(r))
            rows_R.append(R)
            viol.append(gap)
    slack = 3.0 * ladder.spacing / (ladder.r_min * ladder.rho)
    worst = float(max(viol))
    return ScanReport(
        columns={"r": rows_r, "R": rows_R, "violation": viol},
        verdict="ok" if worst <= slack else "inconclusive",
        meta={"worst_violation": worst, "slack": slack,
              "density_window": (dmin, dmax)},
    )


def blowup_symmetry_defect(blowup, r=0.1, R=1.0, m=1):
    """Symmetry defect of a blowup at the origin over the (r, R) annulus."""
    return symmetry_defect(blowup, np.zeros(blowup.dim), r, R, m)


# ---------------------------------------------------------------------------
# Eccentricity bucketing of invertible matrices
# ---------------------------------------------------------------------------

def containment_constants(m1, m2):
    """(c, C) with  m1 B(0, c r)  inside  m2 B(0, r)  inside  m1 B(0, C r).

    c and C are the extreme singular values of m1^{-1} m2; for m1 = identity
    they bound how ellipse densities compare to euclidean ones.
    """
    m1 = np.asarray(m1, dtype=float)
    m2 = np.asarray(m2, dtype=float)
    sv = np.linalg.svd(np.linalg.solve(m1, m2), compute_uv=False)
    return float(sv.min()), float(sv.max())


def eccentricity_bucket(matrix, eps):
    """Hashable key such that matrices sharing a key define ellipses that
    sandwich each other within radius factors (1 - eps, 1 + eps).

    Quantizes the entries at a resolution tied to a power-of-two floor of
    the smallest singular value; a countable cover of the invertible
    matrices, not a minimal one (near-identical matrices can straddle cells).
    """
    m = np.asarray(matrix, dtype=float)
    if not 0 < eps < 1:
        raise ContractError("eps must lie in (0, 1)")
    n = m.shape[0]
    smin = np.linalg.svd(m, compute_uv=False).min()
    if smin <= 0:
        raise ContractError("matrix must be invertible")
    k0 = int(np.floor(np.log2(smin)))
    delta = eps * 2.0 ** k0 / (2.0 * n * n)
    cells = np.round(m / delta).astype(np.int64)
    return (k0, n) + tuple(cells.ravel().tolist())
