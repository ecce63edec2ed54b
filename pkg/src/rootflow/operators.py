"""Periodic Hilbert transform and half-Laplacian with two cross-validating backends.

The Hilbert transform is the principal-value convolution with
``(1/2pi) cot(theta/2)`` and acts on Fourier mode ``k`` as ``-i*sgn(k)``;
the half-Laplacian has the symmetric kernel ``1/(8pi sin^2(theta'/2))`` and
multiplier ``|k|``.  The spectral backend applies the multipliers directly;
the quadrature backend evaluates the subtracted-singularity integrals on the
grid and exists to cross-check signs, kernels, and normalizations.  Both
operators annihilate constants, and the half-Laplacian kills the affine ramp
of a :class:`~rootflow.measures.CdfField` identically, so CDF inputs are
processed through their periodic part only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .measures import TWO_PI, CdfField


@dataclass(frozen=True)
class SpectralGrid:
    """Uniform angular grid with cached Fourier-mode bookkeeping."""

    M: int

    def __post_init__(self):
        if self.M < 8 or self.M % 2 != 0:
            raise ConfigError("grid size must be even and at least 8")

    @property
    def nodes(self) -> np.ndarray:
        return TWO_PI * np.arange(self.M) / self.M

    @property
    def dtheta(self) -> float:
        return TWO_PI / self.M

    @property
    def rfft_modes(self) -> np.ndarray:
        return np.arange(self.M // 2 + 1)


@dataclass(frozen=True)
class OperatorBackend:
    """Backend selector: exact multipliers or grid quadrature.

    ``delta`` is only consulted by the local/nonlocal split and must lie in
    ``(0, pi)`` when present.
    """

    kind: str = "spectral"
    delta: float | None = None

    def __post_init__(self):
        if self.kind not in ("spectral", "quadrature"):
            raise ConfigError(f"unknown backend kind {self.kind!r}")
        if self.delta is not None and not 0.0 < self.delta < np.pi:
            raise ConfigError("split radius delta must lie in (0, pi)")


SPECTRAL = OperatorBackend("spectral")
QUADRATURE = OperatorBackend("quadrature")


def _as_periodic_samples(f) -> np.ndarray:
    if isinstance(f, CdfField):
        return f.samples
    out = np.asarray(f, dtype=float)
    if out.ndim != 1 or out.size < 8:
        raise ConfigError("operators need at least 8 periodic samples")
    return out


def spectral_derivative(f, order: int = 1) -> np.ndarray:
    """Derivative through the Fourier multiplier ``(ik)**order``.

    The Nyquist mode is zeroed for odd orders (its sine image vanishes on
    the grid).
    """
    u = _as_periodic_samples(f)
    M = u.size
    U = np.fft.rfft(u)
    k = np.arange(U.size, dtype=float)
    if order % 2 == 1 and M % 2 == 0:
        k[-1] = 0.0
    return np.fft.irfft((1j * k) ** order * U, n=M)


def hilbert_transform(u, backend: OperatorBackend = SPECTRAL) -> np.ndarray:
    """Periodic Hilbert transform of grid samples.

    Spectral backend: multiply mode ``k`` by ``-i*sgn(k)`` (mode 0 and the
    Nyquist mode go to 0).  Quadrature backend: periodic trapezoid rule on
    the subtracted form ``(1/2pi) PV int cot((y-x)/2) (u(x) - u(y)) dx``,
    with the removable singularity at ``x = y`` filled by its limit value
    ``-2 u'(y)``.
    """
    u = _as_periodic_samples(u)
    if backend.kind == "spectral":
        M = u.size
        U = np.fft.rfft(u)
        mult = np.full(U.size, -1j)
        mult[0] = 0.0
        if M % 2 == 0:
            mult[-1] = 0.0
        return np.fft.irfft(mult * U, n=M)
    return _hilbert_quadrature(u)


def _hilbert_quadrature(u: np.ndarray) -> np.ndarray:
    M = u.size
    dth = TWO_PI / M
    ell = np.arange(1, M)
    kern = np.zeros(M)
    kern[1:] = 1.0 / np.tan(-ell * dth / 2.0)   # cot((y - x)/2) at x = y + l*dth
    acc = _circular_correlation(kern, u) - kern.sum() * u
    acc += -2.0 * spectral_derivative(u, 1)      # limit of the integrand at x = y
    return acc * dth / TWO_PI


def half_laplacian(f, backend: OperatorBackend = SPECTRAL) -> np.ndarray:
    """Half-Laplacian of a CdfField or of plain periodic samples.

    The unit ramp of a CdfField is annihilated identically (the symmetric
    second difference of an affine function vanishes), so only the periodic
    part is transformed.  Spectral backend: multiplier ``|k|``.  Quadrature
    backend: periodic trapezoid rule on the symmetric form
    ``(1/8pi) int (2f(t) - f(t-s) - f(t+s)) / sin^2(s/2) ds`` with the
    ``s = 0`` node filled by the integrand limit ``-4 f''(t)``.
    """
    g = _as_periodic_samples(f)
    if backend.kind == "spectral":
        M = g.size
        U = np.fft.rfft(g)
        k = np.arange(U.size, dtype=float)
        return np.fft.irfft(k * U, n=M)
    return _half_laplacian_quadrature(g)


def _half_laplacian_quadrature(g: np.ndarray) -> np.ndarray:
    M = g.size
    dth = TWO_PI / M
    ell = np.arange(1, M)
    kern = np.zeros(M)
    kern[1:] = 1.0 / np.sin(ell * dth / 2.0) ** 2
    # sum_l w_l (2 f_j - f_{j-l} - f_{j+l}); the kernel is even so the two
    # shifted sums coincide with one circular correlation
    corr = _circular_correlation(kern, g)
    acc = 2.0 * kern.sum() * g - 2.0 * corr
    acc += -4.0 * spectral_derivative(g, 2)
    return acc * dth / (8.0 * np.pi)


def _circular_correlation(kern: np.ndarray, u: np.ndarray) -> np.ndarray:
    """``out[j] = sum_l kern[l] * u[j + l]`` with periodic indexing."""
    return np.fft.irfft(np.conj(np.fft.rfft(kern)) * np.fft.rfft(u), n=u.size)


def split_I1_I2(f, theta: float, delta: float) -> tuple[float, float]:
    """Local/nonlocal split of the half-Laplacian at one grid node.

    ``I1`` integrates the symmetric second difference over ``|s| <= delta``
    (the part that acts like a differential operator), ``I2`` over the rest;
    grid offsets are assigned to exactly one side, so ``I1 + I2`` reproduces
    the quadrature half-Laplacian at the node identically.  ``theta`` must
    coincide with a grid node.
    """
    g = _as_periodic_samples(f)
    if not 0.0 < delta <= np.pi:
        raise ConfigError("split radius delta must lie in (0, pi]")
    M = g.size
    dth = TWO_PI / M
    j = int(round(theta / dth)) % M
    if abs(theta - (j * dth + TWO_PI * round((theta - j * dth) / TWO_PI))) > 1e-9:
        raise ConfigError("theta must coincide with a grid node")
    ell = np.arange(1, M)
    signed = ell * dth
    signed = np.where(signed > np.pi, signed - TWO_PI, signed)
    second_diff = 2.0 * g[j] - g[(j - ell) % M] - g[(j + ell) % M]
    weights = 1.0 / np.sin(ell * dth / 2.0) ** 2
    terms = second_diff * weights * dth / (8.0 * np.pi)
    local = np.abs(signed) <= delta
    i1 = float(terms[local].sum())
    i2 = float(terms[~local].sum())
    # the removable s = 0 node belongs to the local part
    d2 = spectral_derivative(g, 2)
    i1 += float(-4.0 * d2[j] * dth / (8.0 * np.pi))
    return i1, i2


def a0_equals_h_of_derivative_check(f, backend: OperatorBackend = SPECTRAL) -> float:
    """Max deviation of ``A0[f]`` from ``H[f']`` on the grid.

    With the spectral backend this verifies the multiplier identity
    ``|k| = (-i sgn k)(ik)``; with the quadrature backend it cross-checks the
    kernel normalizations ``1/(8pi)`` and ``1/(2pi)`` against each other.
    """
    g = _as_periodic_samples(f)
    lhs = half_laplacian(g, backend)
    rhs = hilbert_transform(spectral_derivative(g, 1), backend)
    return float(np.max(np.abs(lhs - rhs)))


def self_test(M: int = 1024, k_max: int = 16) -> dict:
    """Multiplier and normalization report for both backends.

    Returns a JSON-ready dict with the worst multiplier errors over
    ``cos(k theta)`` and ``sin(k theta)`` for ``k <= k_max``, the ramp
    annihilation error, and the verified ``A0 = H o d/dtheta`` deviation.
    """
    grid = SpectralGrid(M)
    th = grid.nodes
    report = {"M": M, "k_max": k_max,
              "kernel_constants": {"hilbert": "1/(2*pi) cot(theta/2)",
                                   "half_laplacian_symmetric": "1/(8*pi) / sin^2(theta'/2)",
                                   "half_laplacian_one_sided": "1/(4*pi) / sin^2(theta'/2)"},
              "backends": {}}
    rng = np.random.default_rng(20_25)
    band = np.zeros(M)
    for k in range(1, max(2, M // 8)):
        a, b = rng.normal(size=2) / (1 + k) ** 2
        band += a * np.cos(k * th) + b * np.sin(k * th)
    for backend in (SPECTRAL, QUADRATURE):
        err = 0.0
        for k in range(1, k_max + 1):
            c, s = np.cos(k * th), np.sin(k * th)
            err = max(err,
                      float(np.max(np.abs(hilbert_transform(c, backend) - s))),
                      float(np.max(np.abs(hilbert_transform(s, backend) + c))),
                      float(np.max(np.abs(half_laplacian(c, backend) - k * c))),
                      float(np.max(np.abs(half_laplacian(s, backend) - k * s))))
        ramp = CdfField(np.zeros(M))  # periodic part of the pure ramp
        ramp_err = float(np.max(np.abs(half_laplacian(ramp, backend))))
        report["backends"][backend.kind] = {
            "backend": backend.kind,
            "M": M,
            "max_multiplier_error": err,
            "ramp_annihilation_error": ramp_err,
            "a0_equals_h_ddtheta_deviation":
                a0_equals_h_of_derivative_check(band, backend),
        }
    return report
