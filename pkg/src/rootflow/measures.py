"""Probability measures on the circle and their cumulative distribution fields.

A measure lives on the torus of circumference ``2*pi`` and is represented by
atoms (location/weight pairs) plus an optional sampled density.  Its CDF is
stored as a :class:`CdfField`: a unit linear ramp ``theta / (2*pi)`` plus a
periodic remainder sampled on a uniform grid, so that the circle relation
``F(theta + 2*pi) = F(theta) + 1`` holds exactly by construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError, InvalidMeasureError, ShapeError

TWO_PI = 2.0 * np.pi

MASS_TOL = 1e-12
HM_SLACK = 1e-10
MONOTONE_SLACK = 1e-12


def wrap_angle(theta):
    """Map angles to the fundamental interval ``[0, 2*pi)``."""
    out = np.mod(theta, TWO_PI)
    # mod can return 2*pi for negative inputs within one ulp of a multiple
    return np.where(out >= TWO_PI, out - TWO_PI, out)


# ---------------------------------------------------------------------------
# measures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CircleMeasure:
    """Probability measure on the circle: atoms plus an optional density.

    Parameters
    ----------
    atom_positions : ndarray
        Strictly sorted atom locations in ``[0, 2*pi)``.
    atom_weights : ndarray
        Nonnegative weights, one per atom.
    density : ndarray or None
        Samples of a nonnegative density on the uniform grid
        ``2*pi*j/len(density)``; quadrature weight ``2*pi/len(density)``.
    """

    atom_positions: np.ndarray
    atom_weights: np.ndarray
    density: np.ndarray | None = None

    def __post_init__(self):
        pos = np.atleast_1d(np.asarray(self.atom_positions, dtype=float))
        w = np.atleast_1d(np.asarray(self.atom_weights, dtype=float))
        if pos.size != w.size:
            raise InvalidMeasureError("atom positions and weights differ in length")
        if pos.size and (np.any(pos < 0.0) or np.any(pos >= TWO_PI)):
            raise InvalidMeasureError("atom positions must lie in [0, 2*pi)")
        if pos.size > 1 and np.any(np.diff(pos) <= 0.0):
            raise InvalidMeasureError("atom positions must be strictly sorted")
        if np.any(w < 0.0):
            raise InvalidMeasureError("atom weights must be nonnegative")
        object.__setattr__(self, "atom_positions", pos)
        object.__setattr__(self, "atom_weights", w)
        if self.density is not None:
            dens = np.asarray(self.density, dtype=float)
            if dens.ndim != 1 or dens.size < 4:
                raise InvalidMeasureError("density needs at least 4 samples")
            if np.any(dens < -MASS_TOL):
                raise InvalidMeasureError("density samples must be nonnegative")
            object.__setattr__(self, "density", dens)
        mass = self.total_mass
        if abs(mass - 1.0) > MASS_TOL:
            raise InvalidMeasureError(f"total mass {mass!r} is not 1 within {MASS_TOL}")

    @property
    def total_mass(self) -> float:
        mass = float(self.atom_weights.sum()) if self.atom_weights.size else 0.0
        if self.density is not None:
            mass += float(self.density.mean()) * TWO_PI
        return mass

    @property
    def density_mass(self) -> float:
        if self.density is None:
            return 0.0
        return float(self.density.mean()) * TWO_PI

    # -- constructors -------------------------------------------------------

    @staticmethod
    def uniform(grid_size: int = 256) -> "CircleMeasure":
        dens = np.full(grid_size, 1.0 / TWO_PI)
        return CircleMeasure(np.empty(0), np.empty(0), dens)

    @staticmethod
    def dirac(theta: float = 0.0) -> "CircleMeasure":
        return CircleMeasure(np.array([wrap_angle(theta)]), np.array([1.0]))

    @staticmethod
    def from_atoms(pairs) -> "CircleMeasure":
        pairs = sorted((wrap_angle(t), w) for t, w in pairs)
        pos = np.array([p[0] for p in pairs])
        w = np.array([p[1] for p in pairs])
        return CircleMeasure(pos, w)

    @staticmethod
    def from_density(samples) -> "CircleMeasure":
        return CircleMeasure(np.empty(0), np.empty(0), np.asarray(samples, dtype=float))

    @staticmethod
    def cosine_density(amplitudes, grid_size: int = 512) -> "CircleMeasure":
        """Density ``1/(2*pi) + sum_k a_k cos(k*theta + phi_k)``.

        ``amplitudes`` is a sequence of ``(k, a_k, phi_k)`` triples; the result
        must stay nonnegative.  The CDF of this measure is the unit ramp plus
        ``sum_k (a_k/k) * (sin(k*theta + phi_k) - sin(phi_k))``.
        """
        theta = TWO_PI * np.arange(grid_size) / grid_size
        dens = np.full(grid_size, 1.0 / TWO_PI)
        for k, a, phi in amplitudes:
            dens = dens + a * np.cos(k * theta + phi)
        if np.any(dens < 0.0):
            raise InvalidMeasureError("cosine density dips below zero")
        return CircleMeasure.from_density(dens)

    @staticmethod
    def mixture(parts) -> "CircleMeasure":
        """Convex combination ``sum_i c_i * mu_i`` of measures (weights sum to 1)."""
        coeffs = [c for c, _ in parts]
        if abs(sum(coeffs) - 1.0) > MASS_TOL:
            raise InvalidMeasureError("mixture coefficients must sum to 1")
        atom_map: dict[float, float] = {}
        dens = None
        for c, mu in parts:
            for t, w in zip(mu.atom_positions, mu.atom_weights):
                atom_map[t] = atom_map.get(t, 0.0) + c * w
            if mu.density is not None:
                scaled = c * mu.density
                if dens is None:
                    dens = scaled.copy()
                else:
                    if dens.size != scaled.size:
                        raise ShapeError("mixture densities need a common grid")
                    dens = dens + scaled
        pos = np.array(sorted(atom_map))
        w = np.array([atom_map[t] for t in sorted(atom_map)])
        return CircleMeasure(pos, w, dens)

    # -- serialization (External Interfaces) --------------------------------

    def to_json(self) -> str:
        obj = {"atoms": [{"theta": float(t), "w": float(w)}
                         for t, w in zip(self.atom_positions, self.atom_weights)]}
        if self.density is not None:
            obj["density"] = {"M": int(self.density.size),
                              "samples": [float(v) for v in self.density]}
        return json.dumps(obj)

    @staticmethod
    def from_json(text: str) -> "CircleMeasure":
        obj = json.loads(text)
        atoms = obj.get("atoms", [])
        pos = np.array([a["theta"] for a in atoms], dtype=float)
        w = np.array([a["w"] for a in atoms], dtype=float)
        dens = None
        if "density" in obj and obj["density"] is not None:
            dens = np.asarray(obj["density"]["samples"], dtype=float)
            if dens.size != obj["density"]["M"]:
                raise InvalidMeasureError("density sample count disagrees with M")
        return CircleMeasure(pos, w, dens)


def rotate(mu: CircleMeasure, a: float) -> CircleMeasure:
    """Push the measure forward by the rotation ``theta -> theta + a``.

    Densities are rotated by rolling their samples, so ``a`` must be an
    integer multiple of the density grid spacing.
    """
    pairs = sorted((wrap_angle(t + a), w) for t, w in
                   zip(mu.atom_positions, mu.atom_weights))
    pos = np.array([p[0] for p in pairs])
    w = np.array([p[1] for p in pairs])
    dens = mu.density
    if dens is not None:
        step = TWO_PI / dens.size
        shift = a / step
        if abs(shift - round(shift)) > 1e-9:
            raise DomainError("density rotation requires a grid-multiple angle")
        dens = np.roll(dens, int(round(shift)))
    return CircleMeasure(pos, w, dens)


# ---------------------------------------------------------------------------
# CDF fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CdfField:
    """Circle CDF as unit ramp plus periodic part on a uniform grid.

    ``samples[j]`` holds the periodic remainder ``g(theta_j)`` where
    ``F(theta) = theta/(2*pi) + g(theta)`` and ``theta_j = 2*pi*j/M``.
    The convention at jumps is right-continuity.
    """

    samples: np.ndarray
    right_continuous: bool = True
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        g = np.asarray(self.samples, dtype=float)
        if g.ndim != 1 or g.size < 8:
            raise ConfigError("CdfField needs at least 8 grid samples")
        object.__setattr__(self, "samples", g)
        vals = self.values()
        wrapped = np.append(vals[1:], vals[0] + 1.0)
        if np.any(wrapped - vals < -MONOTONE_SLACK):
            raise InvalidMeasureError("CDF samples are not non-decreasing")

    @property
    def grid_size(self) -> int:
        return self.samples.size

    @property
    def nodes(self) -> np.ndarray:
        return TWO_PI * np.arange(self.grid_size) / self.grid_size

    def values(self) -> np.ndarray:
        """Full CDF values ``F(theta_j)`` (ramp plus periodic part)."""
        return self.nodes / TWO_PI + self.samples

    def grid_slopes(self) -> np.ndarray:
        """One-cell forward slopes ``(F(theta_{j+1}) - F(theta_j)) / dtheta``."""
        vals = self.values()
        dth = TWO_PI / self.grid_size
        return (np.append(vals[1:], vals[0] + 1.0) - vals) / dth


@dataclass(frozen=True)
class HmCertificate:
    """Outcome of the minimum-slope hypothesis check ``F(t+h)-F(t) >= m*h``."""

    m: float
    satisfied: bool
    min_slope: float
    worst_pair: tuple[float, float, float]  # (theta, theta + h, slope)


def cdf_from_measure(mu: CircleMeasure, grid_size: int) -> CdfField:
    """Sample the right-continuous CDF of ``mu`` on a uniform grid.

    Atoms are snapped to the first grid node at or past their position, so
    each contributes a jump of exactly its weight; the largest snap
    displacement is reported in ``metadata["snap_error"]``.  The density part
    is integrated through its trigonometric interpolant, which reproduces the
    per-cell masses of band-limited densities exactly.
    """
    if grid_size < 8:
        raise ConfigError("CDF grid size must be at least 8")
    theta = TWO_PI * np.arange(grid_size) / grid_size
    vals = np.zeros(grid_size)
    snap_error = 0.0
    if mu.atom_positions.size:
        dth = TWO_PI / grid_size
        idx = np.ceil(mu.atom_positions / dth - 1e-12).astype(int)
        idx = np.minimum(idx, grid_size)  # an atom just below 2*pi snaps to the wrap
        snap_error = float(np.max(np.abs(idx * dth - mu.atom_positions)))
        for j, w in zip(idx, mu.atom_weights):
            if j < grid_size:
                vals[j:] += w
            # j == grid_size: jump lands at theta = 2*pi, carried by the ramp
    if mu.density is not None:
        vals += _density_cumulative(mu.density, theta)
    g = vals - theta / TWO_PI
    return CdfField(g, metadata={"snap_error": snap_error})


def _density_cumulative(samples: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Integral of the trig interpolant of ``samples`` from 0 to each theta."""
    md = samples.size
    coef = np.fft.rfft(samples)
    out = coef[0].real / md * theta
    kmax = coef.size - 1
    # chunk the outer product so large grids stay within memory
    chunk = max(1, 2_000_000 // max(md, 1))
    for start in range(0, theta.size, chunk):
        th = theta[start:start + chunk]
        k = np.arange(1, kmax + 1)
        phase = np.exp(1j * np.outer(th, k))
        terms = (phase - 1.0) * (coef[1:] / (1j * k))
        scale = np.full(kmax, 2.0)
        if md % 2 == 0:
            scale[-1] = 1.0  # Nyquist coefficient enters once
        out[start:start + chunk] += (terms.real * scale).sum(axis=1) / md
    return out


def quantile(F: CdfField, p: float) -> float:
    """Generalized inverse ``inf{theta : F(theta) >= p}`` on the grid.

    The grid samples are read as a right-continuous staircase, so the result
    is always a grid node; at jumps this returns the jump location.
    """
    if not 0.0 <= p < 1.0:
        raise DomainError(f"quantile level {p!r} outside [0, 1)")
    return float(quantile_levels(F, np.array([p]))[0])


def quantile_levels(F: CdfField, levels: np.ndarray) -> np.ndarray:
    """Vectorized :func:`quantile`; levels past the last node wrap to 0."""
    levels = np.asarray(levels, dtype=float)
    if np.any(levels < 0.0) or np.any(levels >= 1.0):
        raise DomainError("quantile levels must lie in [0, 1)")
    vals = F.values()
    idx = np.searchsorted(vals, levels, side="left")
    idx = np.where(idx >= F.grid_size, 0, idx)  # reached only at theta = 2*pi == 0
    return F.nodes[idx]


def check_Hm(F: CdfField, m: float) -> HmCertificate:
    """Exhaustively check ``F(theta + h) - F(theta) >= m*h`` on grid pairs.

    All pairs within one period are scanned, including pairs wrapping past
    ``2*pi`` via ``F(theta + 2*pi) = F(theta) + 1``.  Slopes over spans longer
    than one period are averages of within-period slopes, so the scan is
    complete.
    """
    if m <= 0.0:
        raise ConfigError("the slope floor m must be positive")
    vals = F.values()
    M = F.grid_size
    dth = TWO_PI / M
    best_slope = np.inf
    best = (0.0, 0.0, np.inf)
    for d in range(1, M + 1):
        shifted = np.roll(vals, -d).copy()
        shifted[M - d:] += 1.0
        slopes = (shifted - vals) / (d * dth)
        j = int(np.argmin(slopes))
        if slopes[j] < best_slope:
            best_slope = float(slopes[j])
            best = (float(F.nodes[j]), float(F.nodes[j] + d * dth), best_slope)
    return HmCertificate(m=m, satisfied=bool(best_slope >= m - HM_SLACK),
                         min_slope=best_slope, worst_pair=best)


def sup_distance(F: CdfField, G: CdfField) -> float:
    """Max over the grid of ``|F - G|`` (the ramps cancel)."""
    if F.grid_size != G.grid_size:
        raise ShapeError(f"grid mismatch: {F.grid_size} vs {G.grid_size}")
    return float(np.max(np.abs(F.samples - G.samples)))


# ---------------------------------------------------------------------------
# mollification
# ---------------------------------------------------------------------------

def bump_kernel(eps: float, offsets: np.ndarray) -> np.ndarray:
    """Unnormalized bump ``exp(-1/(1-(w/eps)^2))`` supported on ``(-eps, eps)``."""
    w = np.asarray(offsets, dtype=float)
    s = w / eps
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return out


def mollify(mu: CircleMeasure, eps: float, grid_size: int | None = None) -> CircleMeasure:
    """Convolve ``mu`` with the compactly supported bump of half-width ``eps``.

    The kernel samples are normalized to unit grid mass, which preserves the
    total mass of the measure to machine precision; atoms are smeared into
    the density, so the result is density-only.
    """
    if not 0.0 < eps < np.pi:
        raise ConfigError("mollifier half-width must lie in (0, pi)")
    if grid_size is None:
        grid_size = mu.density.size if mu.density is not None else 512
    theta = TWO_PI * np.arange(grid_size) / grid_size
    dth = TWO_PI / grid_size
    # kernel on signed grid offsets, normalized so dth * sum == 1
    offs = theta.copy()
    offs[offs > np.pi] -= TWO_PI
    kern = bump_kernel(eps, offs)
    kern /= kern.sum() * dth
    if eps < 4 * dth:
        raise ConfigError("mollifier support must span at least 4 grid cells")
    dens = np.zeros(grid_size)
    for t, w in zip(mu.atom_positions, mu.atom_weights):
        d = theta - t
        d = np.where(d > np.pi, d - TWO_PI, d)
        d = np.where(d < -np.pi, d + TWO_PI, d)
        k = bump_kernel(eps, d)
        dens += w * k / (k.sum() * dth)
    if mu.density is not None:
        if mu.density.size != grid_size:
            raise ShapeError("mollify grid must match the density grid")
        conv = np.fft.irfft(np.fft.rfft(mu.density) * np.fft.rfft(kern),
                            n=grid_size) * dth
        dens += conv
    dens = np.maximum(dens, 0.0)
    total = dens.mean() * TWO_PI
    dens *= mu.total_mass / total  # repair <=1e-15 clipping/roundoff drift
    return CircleMeasure(np.empty(0), np.empty(0), dens)
