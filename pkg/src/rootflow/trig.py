"""Trigonometric polynomials in factored form and their derivative roots.

A configuration of ``2N`` roots (counted with multiplicity) on one period
determines the polynomial ``p(x) = prod_j sin((x - x_j)/2)`` up to a
constant.  Its logarithmic derivative is the cotangent sum
``p'(x)/p(x) = (1/2) sum_j cot((x - x_j)/2)``, whose zeros between
consecutive distinct roots are the new (Rolle) roots of ``p'``; retained
multiple roots lose one order of multiplicity.  Differentiation therefore
never changes the total root count on the circle.
"""

from __future__ import annotations

from dataclasses import dataclass
import json

import numpy as np

from .errors import BracketError, ConfigError, DomainError, PoleError, ShapeError
from .measures import TWO_PI

MERGE_TOL = 1e-10       # roots closer than this collapse into a multiplicity
POLE_TOL = 1e-14        # evaluation this close to a root is refused
NEAR_POLE = 1e-6        # switch to singular-term-last summation below this
BISECT_STEPS = 30       # bracket width shrinks by 2^-30 before polishing
NEWTON_STEPS = 3


@dataclass(frozen=True)
class ParticleConfig:
    """Sorted root multiset on one period ``[anchor, anchor + 2*pi)``.

    ``positions`` are the distinct root locations (strictly increasing) and
    ``mults`` their positive integer multiplicities; the flattened sequence
    periodizes by ``x[k + 2N] = x[k] + 2*pi``.
    """

    positions: np.ndarray
    mults: np.ndarray
    anchor: float = 0.0

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        mm = np.asarray(self.mults, dtype=int)
        if pos.ndim != 1 or pos.size != mm.size or pos.size == 0:
            raise ConfigError("positions and multiplicities must be matching 1-d arrays")
        if np.any(mm < 1):
            raise ConfigError("multiplicities must be positive integers")
        if np.any(np.diff(pos) <= 0.0):
            raise ConfigError("positions must be strictly increasing")
        if pos[0] < self.anchor - 1e-12 or pos[-1] >= self.anchor + TWO_PI + 1e-12:
            raise ConfigError("positions must lie within [anchor, anchor + 2*pi)")
        total = int(mm.sum())
        if total < 2 or total % 2 != 0:
            raise ConfigError(f"total root count {total} must be even and >= 2")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "mults", mm)

    @property
    def total_count(self) -> int:
        return int(self.mults.sum())

    @property
    def half_count(self) -> int:
        return self.total_count // 2

    def flattened(self) -> np.ndarray:
        """Positions repeated by multiplicity, ascending, length ``2N``."""
        return np.repeat(self.positions, self.mults)

    def shifted(self, c: float) -> "ParticleConfig":
        return ParticleConfig(self.positions + c, self.mults.copy(), self.anchor + c)

    @staticmethod
    def from_points(points, anchor: float = 0.0,
                    merge_tol: float = MERGE_TOL) -> "ParticleConfig":
        """Build a configuration from raw angles, merging near-coincident roots."""
        pts = np.sort(np.mod(np.asarray(points, dtype=float) - anchor, TWO_PI)) + anchor
        pos, mult = [pts[0]], [1]
        for x in pts[1:]:
            if x - pos[-1] <= merge_tol:
                mult[-1] += 1
            else:
                pos.append(x)
                mult.append(1)
        # wrap-around merge: last root within tolerance of first + 2*pi
        if len(pos) > 1 and (pos[0] + TWO_PI) - pos[-1] <= merge_tol:
            mult[0] += mult.pop()
            pos.pop()
        return ParticleConfig(np.array(pos), np.array(mult), anchor)

    def to_json(self) -> str:
        return json.dumps({"anchor": self.anchor,
                           "roots": [{"theta": float(t), "mult": int(m)}
                                     for t, m in zip(self.positions, self.mults)]})

    @staticmethod
    def from_json(text: str) -> "ParticleConfig":
        obj = json.loads(text)
        pos = np.array([r["theta"] for r in obj["roots"]], dtype=float)
        mm = np.array([r["mult"] for r in obj["roots"]], dtype=int)
        return ParticleConfig(pos, mm, float(obj["anchor"]))


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def _cot_terms(config: ParticleConfig, x: float) -> np.ndarray:
    return config.mults / np.tan(0.5 * (x - config.positions))


def log_derivative(config: ParticleConfig, x: float) -> float:
    """Cotangent sum ``(1/2) sum_j mult_j cot((x - x_j)/2)`` at ``x``.

    Raises :class:`PoleError` when ``x`` coincides with a root to within
    ``1e-14`` (mod ``2*pi``).  Within ``1e-6`` of a root the bounded terms
    are summed first and the singular term added last, so the regular part
    is not absorbed into the rounding of the dominant pole.
    """
    d = np.mod(x - config.positions, TWO_PI)
    dist = np.minimum(d, TWO_PI - d)
    j = int(np.argmin(dist))
    if dist[j] <= POLE_TOL:
        raise PoleError(f"x={x!r} coincides with root index {j}", root_index=j)
    terms = _cot_terms(config, x)
    if dist[j] < NEAR_POLE:
        regular = terms.sum() - terms[j]
        return 0.5 * (regular + terms[j])
    return 0.5 * float(terms.sum())


def evaluate_poly(config: ParticleConfig, x) -> float | np.ndarray:
    """Product ``prod_j sin((x - x_j)/2)**mult_j`` with leading constant 1."""
    xa = np.asarray(x, dtype=float)
    fac = np.sin(0.5 * (xa[..., None] - config.positions)) ** config.mults
    out = fac.prod(axis=-1)
    return float(out) if np.ndim(x) == 0 else out


def euler_cot_partial_sum(z: float, K: int) -> float:
    """Symmetric partial sum ``sum_{|k| <= K} 1/(z + k*pi)`` of the cotangent series.

    Converges to ``cot(z)`` as ``K -> inf`` with error ``O(1/K)``.
    """
    if K < 0:
        raise ConfigError("K must be nonnegative")
    if abs(np.sin(z)) < 1e-15:
        raise DomainError(f"z={z!r} is a pole of cot")
    k = np.arange(-K, K + 1)
    return float(np.sum(1.0 / (z + k * np.pi)))


# ---------------------------------------------------------------------------
# derivative roots
# ---------------------------------------------------------------------------

def _gap_sum(x: np.ndarray, positions: np.ndarray, mults: np.ndarray):
    """Cotangent sum and its derivative at one point per gap (vectorized)."""
    d = 0.5 * (x[:, None] - positions[None, :])
    with np.errstate(divide="ignore"):
        c = 1.0 / np.tan(d)
    g = (c * mults).sum(axis=1)
    dg = (-0.5 * (1.0 + c * c) * mults).sum(axis=1)
    return g, dg


def _rolle_roots(positions: np.ndarray, mults: np.ndarray) -> np.ndarray:
    """One zero of the cotangent sum inside each gap of distinct roots.

    The sum decreases strictly from ``+inf`` to ``-inf`` across every open
    gap, so a sign-change bracket always exists; probes step toward the gap
    edges geometrically until the signs are right, then lockstep bisection
    shrinks every bracket before a clamped Newton polish.
    """
    upper = np.append(positions[1:], positions[0] + TWO_PI)
    gaps = upper - positions
    eta_lo = np.full(positions.size, 0.25)
    eta_hi = np.full(positions.size, 0.25)
    for _ in range(120):
        g, _ = _gap_sum(positions + eta_lo * gaps, positions, mults)
        bad = g <= 0.0
        if not bad.any():
            break
        eta_lo = np.where(bad, eta_lo * 0.25, eta_lo)
    else:
        raise BracketError("no sign change approaching gap left edges",
                           diagnostics={"gaps": gaps[bad].tolist()})
    for _ in range(120):
        g, _ = _gap_sum(upper - eta_hi * gaps, positions, mults)
        bad = g >= 0.0
        if not bad.any():
            break
        eta_hi = np.where(bad, eta_hi * 0.25, eta_hi)
    else:
        raise BracketError("no sign change approaching gap right edges",
                           diagnostics={"gaps": gaps[bad].tolist()})
    lo = positions + eta_lo * gaps
    hi = upper - eta_hi * gaps
    for _ in range(BISECT_STEPS):
        mid = 0.5 * (lo + hi)
        g, _ = _gap_sum(mid, positions, mults)
        pos_side = g > 0.0
        lo = np.where(pos_side, mid, lo)
        hi = np.where(pos_side, hi, mid)
    x = 0.5 * (lo + hi)
    for _ in range(NEWTON_STEPS):
        g, dg = _gap_sum(x, positions, mults)
        with np.errstate(invalid="ignore"):
            step = np.clip(x - g / dg, lo, hi)
        x = np.where(np.isfinite(step), step, x)
    return x


def derivative_roots(config: ParticleConfig) -> ParticleConfig:
    """Roots of ``p'`` for the factored polynomial with roots ``config``.

    Retained multiple roots keep their position with multiplicity reduced by
    one; each gap between consecutive distinct roots (wrapping the period)
    contributes exactly one simple root.  The output is anchored at its first
    root so that the flattened sequences interlace index-by-index:
    ``x[i] <= x'[i] <= x[i+1]``.
    """
    pos, mm = config.positions, config.mults
    if pos.size == 1:
        # single distinct root: p = sin(x/2)^(2N) up to shift, the lone
        # Rolle root sits exactly opposite
        new = _assemble(pos, mm, np.array([pos[0] + np.pi]))
        return new
    rolle = _rolle_roots(pos, mm)
    return _assemble(pos, mm, rolle)


def _assemble(pos, mm, rolle) -> ParticleConfig:
    out_pos, out_mult = [], []
    for i in range(pos.size):
        if mm[i] > 1:
            out_pos.append(pos[i])
            out_mult.append(int(mm[i] - 1))
        out_pos.append(float(rolle[i]))
        out_mult.append(1)
    return ParticleConfig(np.array(out_pos), np.array(out_mult), anchor=out_pos[0])


def interlacing_check(p: ParticleConfig, dp: ParticleConfig,
                      tol: float = 1e-10) -> bool:
    """True iff the flattened periodized sequences satisfy ``x_i <= x'_i <= x_{i+1}``.

    The index alignment between the two flattenings is found by locating the
    first derivative root at or past ``x_0``; nearby offsets are also tried so
    anchor choices cannot produce false negatives.
    """
    if p.total_count != dp.total_count:
        raise ShapeError(f"count mismatch: {p.total_count} vs {dp.total_count}")
    xs = p.flattened()
    ys = dp.flattened()
    n = xs.size
    # bring ys into the window starting at xs[0]
    ys = np.sort(np.mod(ys - xs[0], TWO_PI)) + xs[0]
    xnext = np.append(xs[1:], xs[0] + TWO_PI)
    for r in (0, 1, n - 1):
        idx = (np.arange(n) + r) % n
        wrap = (np.arange(n) + r) // n
        yr = ys[idx] + TWO_PI * wrap
        if np.all(xs <= yr + tol) and np.all(yr <= xnext + tol):
            return True
    return False
