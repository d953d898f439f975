"""Periodic Fourier machinery on a uniform 1-D grid.

Conventions
-----------
Forward transform carries the 1/n factor::

    u_hat[k] = (1/n) * sum_j u[j] * exp(-i xi_k x_j)

so a unit-amplitude mode ``exp(i xi x)`` has coefficient 1. Coefficient arrays
are stored in numpy FFT order (0, 1, ..., n/2-1, -n/2, ..., -1). Sobolev norms
carry the domain length so that they converge to the continuum integrals::

    ||u||_s^2 = length * sum_k (1 + xi_k^2)^s |u_hat[k]|^2
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import InvalidParams, InvalidSign, NonFiniteField, NonHermitianSpectrum

HERMITIAN_RTOL = 1e-10


@dataclass(frozen=True)
class Grid:
    length: float
    n: int

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError(f"grid length must be positive, got {self.length}")
        if self.n < 8 or self.n % 2:
            raise ValueError(f"grid size must be even and >= 8, got {self.n}")

    @property
    def spacing(self) -> float:
        return self.length / self.n

    @cached_property
    def x(self) -> np.ndarray:
        return np.arange(self.n) * self.spacing

    @cached_property
    def index(self) -> np.ndarray:
        """Integer mode index j of each coefficient slot (FFT order)."""
        return np.fft.fftfreq(self.n, d=1.0 / self.n).astype(int)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        return 2 * np.pi * self.index / self.length

    @cached_property
    def nyquist(self) -> int:
        return self.n // 2

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        return np.abs(self.index) <= self.n / 3

    def field(self, values) -> "Field":
        return Field(self, values)

    def sample(self, func: Callable[[np.ndarray], np.ndarray]) -> "Field":
        return Field(self, func(self.x))


@dataclass(frozen=True, eq=False)
class Field:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} samples, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise NonFiniteField("field contains non-finite values")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __add__(self, other):
        return Field(self.grid, self.values + _vals(other))

    def __radd__(self, other):
        return self + other

    def __sub__(self, other):
        return Field(self.grid, self.values - _vals(other))

    def __rsub__(self, other):
        return Field(self.grid, _vals(other) - self.values)

    def __mul__(self, other):
        return Field(self.grid, self.values * _vals(other))

    __rmul__ = __mul__

    def __neg__(self):
        return Field(self.grid, -self.values)

    def mean(self) -> float:
        return float(np.mean(self.values))

    def integral(self) -> float:
        return float(self.grid.spacing * np.sum(self.values))


def _vals(other):
    return other.values if isinstance(other, Field) else other


@dataclass(frozen=True, eq=False)
class Spectrum:
    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} coefficients, got shape {c.shape}")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    def mode(self, j: int) -> complex:
        return complex(self.coeffs[j % self.grid.n])


@dataclass(frozen=True)
class MultiplierSymbol:
    """Fourier symbol xi -> m(xi) plus a human-readable label."""

    func: Callable[[np.ndarray], np.ndarray]
    label: str = "symbol"
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def on(self, grid: Grid) -> np.ndarray:
        if grid not in self._cache:
            m = np.asarray(self.func(grid.wavenumbers), dtype=complex)
            m = np.broadcast_to(m, (grid.n,)).copy()
            if not np.all(np.isfinite(m)):
                raise ValueError(f"symbol {self.label!r} is not finite on the grid")
            # The Nyquist mode is its own conjugate partner; only a real factor
            # keeps it real. This zeroes odd-order derivatives there.
            m[grid.nyquist] = m[grid.nyquist].real
            m.flags.writeable = False
            self._cache[grid] = m
        return self._cache[grid]

    def __mul__(self, other: "MultiplierSymbol") -> "MultiplierSymbol":
        return MultiplierSymbol(lambda xi: self.func(xi) * other.func(xi),
                                f"{self.label}*{other.label}")


def forward(f: Field) -> Spectrum:
    return Spectrum(f.grid, np.fft.fft(f.values) / f.grid.n)


def _to_real(grid: Grid, coeffs: np.ndarray) -> np.ndarray:
    z = np.fft.ifft(coeffs) * grid.n
    scale = np.max(np.abs(z)) if z.size else 0.0
    # below the normal range relative precision is gone, so skip the check there
    if scale >= np.finfo(float).tiny and np.max(np.abs(z.imag)) > HERMITIAN_RTOL * scale:
        raise NonHermitianSpectrum(
            f"imaginary residue {np.max(np.abs(z.imag)):.3e} relative to {scale:.3e}")
    return z.real


def inverse(s: Spectrum) -> Field:
    return Field(s.grid, _to_real(s.grid, s.coeffs))


def apply_multiplier(f: Field, m: MultiplierSymbol) -> Field:
    g = f.grid
    return Field(g, _to_real(g, np.fft.fft(f.values) / g.n * m.on(g)))


def derivative_symbol(order: int) -> MultiplierSymbol:
    if order < 1:
        raise ValueError("derivative order must be >= 1")
    return MultiplierSymbol(lambda xi: (1j * xi) ** order, f"d^{order}")


def bessel_symbol(s: float) -> MultiplierSymbol:
    return MultiplierSymbol(lambda xi: (1.0 + xi**2) ** (s / 2), f"Lambda^{s}")


def helmholtz_symbol(mubeta: float) -> MultiplierSymbol:
    if mubeta >= 0:
        raise InvalidSign(f"mu*beta must be negative, got {mubeta}")
    return MultiplierSymbol(lambda xi: 1.0 / (1.0 - mubeta * xi**2),
                            f"(1+{mubeta}dxx)^-1")


def derivative(f: Field, order: int = 1) -> Field:
    return apply_multiplier(f, derivative_symbol(order))


def bessel_potential(f: Field, s: float) -> Field:
    return apply_multiplier(f, bessel_symbol(s))


def helmholtz_inverse(f: Field, mubeta: float) -> Field:
    """Apply (1 + mubeta d_xx)^-1; requires mubeta < 0."""
    return apply_multiplier(f, helmholtz_symbol(mubeta))


def sobolev_norm(f: Field, s: float) -> float:
    g = f.grid
    c = np.fft.fft(f.values) / g.n
    w = (1.0 + g.wavenumbers**2) ** s
    return float(np.sqrt(g.length * np.sum(w * np.abs(c) ** 2)))


def l2_quadrature(f: Field) -> float:
    return float(np.sqrt(f.grid.spacing * np.sum(f.values**2)))


def dealias(f: Field) -> Field:
    g = f.grid
    c = np.fft.fft(f.values)
    c[~g.dealias_mask] = 0.0
    return Field(g, np.fft.ifft(c).real)


def resolution_fraction(f: Field) -> float:
    """Share of spectral energy sitting above the dealiasing cutoff."""
    c = np.abs(np.fft.fft(f.values)) ** 2
    total = c.sum()
    if total == 0:
        return 0.0
    return float(c[~f.grid.dealias_mask].sum() / total)


@dataclass(frozen=True)
class InequalityReport:
    mu: float
    beta: float
    xi_max: float
    n_samples: int
    max_ratio: float
    n_violations: int

    @property
    def passed(self) -> bool:
        return self.n_violations == 0


def multiplier_inequality_check(mu: float, beta: float, xi_max: float = 1e4,
                                n_samples: int = 100_000) -> InequalityReport:
    """Check xi/(1 - mu*beta*xi^2) <= |mu*beta|^-1 (1+xi^2)^-1/2 pointwise.

    Samples are xi = 0 followed by a geometric ladder ending at ``xi_max``.
    """
    if not (mu > 0 and beta < 0):
        raise InvalidParams(f"need mu > 0 and beta < 0, got mu={mu}, beta={beta}")
    a = abs(mu * beta)
    if a >= 1:
        raise InvalidParams(f"|mu*beta| = {a} must be < 1")
    xi = np.concatenate([[0.0], np.geomspace(xi_max * 1e-8, xi_max, n_samples - 1)])
    lhs = xi / (1.0 + a * xi**2)
    rhs = (1.0 / a) / np.sqrt(1.0 + xi**2)
    ratio = lhs / rhs
    return InequalityReport(mu, beta, xi_max, int(xi.size), float(ratio.max()),
                            int(np.count_nonzero(lhs > rhs)))
