"""Discrete-time particle dynamics: jump to derivative roots every 1/(2N).

Starting from ``2N`` roots, each step replaces the configuration by the
roots of the derivative of its factored trigonometric polynomial and
advances time by ``1/(2N)``.  Positions are kept unwrapped on the real
line (the anchor drifts with the flow), so cumulative boundary crossings
remain visible to the level-tracking empirical CDF.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericalError, ShapeError
from .measures import (TWO_PI, CdfField, CircleMeasure, cdf_from_measure,
                       quantile_levels)
from .trig import ParticleConfig, derivative_roots, interlacing_check

COMPARISON_TOL = 1e-10
DEGENERATE_GAP = 1e-8


@dataclass(frozen=True)
class FlowTrajectory:
    """Time-indexed configurations at ``t_k = k/(2N)``."""

    configs: list
    N: int
    origin: str = ""

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.configs)) / (2.0 * self.N)

    def to_csv(self) -> str:
        """Columns: step, time, root_index, theta, mult."""
        buf = io.StringIO()
        buf.write("step,time,root_index,theta,mult\n")
        for k, cfg in enumerate(self.configs):
            t = k / (2.0 * self.N)
            for i, (theta, m) in enumerate(zip(cfg.positions, cfg.mults)):
                buf.write(f"{k},{t!r},{i},{theta!r},{int(m)}\n")
        return buf.getvalue()


@dataclass(frozen=True)
class GapDiagnostics:
    """Per-gap spacing errors against a reference density.

    ``vj[j] = gap_j - 1/(2*N*psi(x_j))`` measures how far consecutive roots
    deviate from the ideal quantile spacing of the density ``psi``;
    ``spacing_ratio`` is ``gap_j * 2*N*psi(x_j)`` (ideally 1).  When a
    successor configuration is supplied, ``displacement_ratios`` holds the
    one-step displacements divided by the time step ``1/(2N)``.
    """

    gaps: np.ndarray
    vj: np.ndarray
    max_abs_vj: float
    spacing_ratio_range: tuple[float, float]
    displacement_ratios: np.ndarray | None = None


@dataclass(frozen=True)
class SpeedResidualStats:
    """Residuals of one-step displacements against the macroscopic speed law."""

    residuals: np.ndarray
    mean_residual: float
    max_residual: float
    excluded: int


@dataclass(frozen=True)
class ComparisonResult:
    """Outcome of the ordered-pair root comparison."""

    ordered_input: bool
    holds: bool
    max_violation: float
    violating_index: int | None = None
    offset: int = 0


def init_from_measure(mu: CircleMeasure, N: int,
                      cdf_grid: int | None = None) -> ParticleConfig:
    """Place ``2N`` particles at the quantile levels ``(i + 1/2)/(2N)``.

    The half offset keeps levels away from CDF jump values; coincident
    quantiles (atoms) merge into multiplicities.
    """
    if N < 1:
        raise ConfigError("N must be a positive integer")
    if cdf_grid is None:
        cdf_grid = max(1024, 8 * N)
    F = cdf_from_measure(mu, cdf_grid)
    levels = (np.arange(2 * N) + 0.5) / (2 * N)
    points = quantile_levels(F, levels)
    return ParticleConfig.from_points(points, anchor=0.0)


def evolve(start: ParticleConfig, steps: int, origin: str = "") -> FlowTrajectory:
    """Iterate derivative-root jumps for ``steps`` steps of size ``1/(2N)``."""
    if steps < 0:
        raise ConfigError("steps must be nonnegative")
    configs = [start]
    cfg = start
    for k in range(steps):
        try:
            cfg = derivative_roots(cfg)
        except NumericalError as exc:
            raise NumericalError(f"derivative-root solve failed at step {k + 1}",
                                 diagnostics={"step": k + 1, **exc.diagnostics}) from exc
        configs.append(cfg)
    return FlowTrajectory(configs, N=start.half_count, origin=origin)


def empirical_cdf(config: ParticleConfig, grid_size: int) -> CdfField:
    """CDF of the atomic measure ``(1/2N) sum mult_j delta_{x_j}`` on the grid.

    Positions are reduced mod ``2*pi``; jumps have size ``mult/(2N)`` and the
    staircase is right-continuous.
    """
    theta = TWO_PI * np.arange(grid_size) / grid_size
    pos = np.mod(config.positions, TWO_PI)
    order = np.argsort(pos, kind="stable")
    pos = pos[order]
    w = config.mults[order] / config.total_count
    cum = np.cumsum(w)
    idx = np.searchsorted(pos, theta, side="right")
    vals = np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0)
    return CdfField(vals - theta / TWO_PI)


def running_empirical_cdf(config: ParticleConfig, grid_size: int) -> CdfField:
    """Level-tracking empirical CDF built from unwrapped positions.

    Counts all periodized copies ``x_j + 2*pi*k`` at or below each node, so a
    particle crossing the period boundary lowers the level by ``1/(2N)``
    instead of re-entering at level zero.  This is the particle counterpart
    of the solver's CDF, whose value at a fixed angle records the integrated
    flux through it.
    """
    theta = TWO_PI * np.arange(grid_size) / grid_size
    counts = np.floor((theta[:, None] - config.positions[None, :]) / TWO_PI) + 1.0
    vals = (counts * config.mults).sum(axis=1) / config.total_count
    return CdfField(vals - theta / TWO_PI)


def discrete_comparison_check(x: ParticleConfig, y: ParticleConfig,
                              tol: float = COMPARISON_TOL) -> ComparisonResult:
    """Check that ordered root families stay ordered after one differentiation.

    The hypothesis ``x_i <= y_i`` (for the flattened periodized sequences,
    under the tightest valid index alignment) is verified first; if it fails
    the result reports ``ordered_input=False`` rather than raising.  Otherwise
    both derivative configurations are computed and ``x'_i <= y'_i`` is
    checked under the same alignment.
    """
    if x.total_count != y.total_count:
        raise ShapeError(f"count mismatch: {x.total_count} vs {y.total_count}")
    n = x.total_count
    xs = x.flattened()
    ys = y.flattened()

    def aligned(seq, r, wraps):
        # periodized entry paired with index i: seq[(i+r) mod n] + 2*pi*(floor((i+r)/n) + wraps)
        idx = (np.arange(n) + r) % n
        wrap = (np.arange(n) + r) // n + wraps
        return seq[idx] + TWO_PI * wrap

    best, best_span = None, np.inf
    for wraps in (-1, 0, 1):
        for r in range(n):
            d = aligned(ys, r, wraps) - xs
            if np.all(d >= -tol):
                span = float(d.max())
                if span < best_span:
                    best, best_span = (r, wraps), span
    if best is None:
        return ComparisonResult(ordered_input=False, holds=False,
                                max_violation=np.nan)
    r, wraps = best
    # derivative flattenings are gap-aligned with their inputs (the root in
    # gap i carries index i), so the hypothesis alignment transfers verbatim
    xd = derivative_roots(x).flattened()
    yd = derivative_roots(y).flattened()
    diffs = aligned(yd, r, wraps) - xd
    worst = float(diffs.min())
    if worst < -tol:
        return ComparisonResult(ordered_input=True, holds=False,
                                max_violation=-worst,
                                violating_index=int(np.argmin(diffs)),
                                offset=r)
    return ComparisonResult(ordered_input=True, holds=True,
                            max_violation=max(0.0, -worst), offset=r)


def gap_diagnostics(config: ParticleConfig, psi: np.ndarray,
                    successor: ParticleConfig | None = None) -> GapDiagnostics:
    """Spacing errors of a configuration against a reference density.

    ``psi`` gives strictly positive density samples on a uniform grid; it is
    interpolated periodically at the particle positions.
    """
    psi = np.asarray(psi, dtype=float)
    if np.any(psi <= 0.0):
        raise ConfigError("reference density must be strictly positive")
    xs = config.flattened()
    n = config.total_count
    N = config.half_count
    gaps = np.append(xs[1:], xs[0] + TWO_PI) - xs
    psix = _periodic_interp(np.mod(xs, TWO_PI), psi)
    ideal = 1.0 / (2.0 * N * psix)
    vj = gaps - ideal
    ratio = gaps / ideal
    disp = None
    if successor is not None:
        if successor.total_count != n:
            raise ShapeError("successor has a different root count")
        # successor is expected to be derivative_roots(config): its
        # flattening is gap-aligned with xs by construction
        disp = (successor.flattened() - xs) * (2.0 * N)
    return GapDiagnostics(gaps=gaps, vj=vj,
                          max_abs_vj=float(np.max(np.abs(vj))),
                          spacing_ratio_range=(float(ratio.min()), float(ratio.max())),
                          displacement_ratios=disp)


def _periodic_interp(x: np.ndarray, samples: np.ndarray) -> np.ndarray:
    m = samples.size
    nodes = TWO_PI * np.arange(m + 1) / m
    vals = np.append(samples, samples[0])
    return np.interp(x, nodes, vals)


def speed_vs_heuristic(config: ParticleConfig) -> SpeedResidualStats:
    """Compare one-step displacements with the macroscopic speed law.

    The law predicts a displacement of
    ``(arctan(H/u) + pi/2) / (2*pi*N*u)`` per step, where ``u`` is the local
    density estimated from the symmetric two-gap spacing
    ``u(x_m) = 1/(N*(x_{m+1} - x_{m-1}))`` and ``H`` is the empirical
    circular Hilbert transform at the particle (self-term excluded).
    Degenerate gaps (multiplicities or near-collisions) are excluded from
    the statistics and counted.
    """
    xs = config.flattened()
    n = xs.size
    N = config.half_count
    nxt = np.append(xs[1:], xs[0] + TWO_PI)
    prv = np.append(xs[-1] - TWO_PI, xs[:-1])
    two_gap = nxt - prv
    gaps = nxt - xs
    ok = (gaps > DEGENERATE_GAP) & (two_gap > 2 * DEGENERATE_GAP)

    u = np.where(ok, 1.0 / (N * np.where(ok, two_gap, 1.0)), np.nan)
    d = 0.5 * (xs[:, None] - xs[None, :])
    with np.errstate(divide="ignore"):
        c = 1.0 / np.tan(d)
    np.fill_diagonal(c, 0.0)
    c[~np.isfinite(c)] = 0.0  # coincident flattened copies: excluded below anyway
    H = c.sum(axis=1) / (4.0 * np.pi * N)

    actual = derivative_roots(config).flattened() - xs

    with np.errstate(invalid="ignore"):
        predicted = (np.arctan(H / u) + np.pi / 2) / (2.0 * np.pi * N * u)
        residuals = np.abs(actual - predicted) / predicted
    residuals = residuals[ok & np.isfinite(residuals)]
    if residuals.size == 0:
        return SpeedResidualStats(residuals=residuals, mean_residual=np.nan,
                                  max_residual=np.nan, excluded=int(n))
    return SpeedResidualStats(residuals=residuals,
                              mean_residual=float(residuals.mean()),
                              max_residual=float(residuals.max()),
                              excluded=int(n - residuals.size))


def iid_sample_config(mu: CircleMeasure, N: int,
                      rng: np.random.Generator) -> ParticleConfig:
    """Draw ``2N`` independent samples from ``mu`` (inverse-CDF method)."""
    F = cdf_from_measure(mu, max(4096, 8 * N))
    levels = rng.uniform(0.0, 1.0, size=2 * N)
    levels = np.minimum(levels, np.nextafter(1.0, 0.0))
    pts = quantile_levels(F, levels)
    return ParticleConfig.from_points(pts, anchor=0.0)


def dirac_mass_table(N: int) -> list[tuple[int, int, float]]:
    """Evolve a fully degenerate start and tabulate the mass left at 0.

    Returns ``(step, multiplicity_at_origin, mass_at_origin)`` for
    ``k = 0..2N``; the multiplicity drops by exactly one per differentiation.
    """
    cfg = ParticleConfig(np.array([0.0]), np.array([2 * N]), anchor=0.0)
    rows = []
    for k in range(2 * N + 1):
        at0 = 0
        j = np.searchsorted(np.mod(cfg.positions, TWO_PI), 0.0)
        if j < cfg.positions.size and abs(np.mod(cfg.positions[j], TWO_PI)) < 1e-12:
            at0 = int(cfg.mults[j])
        rows.append((k, at0, at0 / (2.0 * N)))
        if k < 2 * N:
            cfg = derivative_roots(cfg)
    return rows


def interlaces_everywhere(traj: FlowTrajectory) -> bool:
    """Every consecutive pair of trajectory configs interlaces."""
    return all(interlacing_check(a, b)
               for a, b in zip(traj.configs, traj.configs[1:]))
