"""Periodic grid, discrete Fourier transforms, Sobolev norms, and the
smooth radial cutoff.

Conventions
-----------
The computational domain is the half-open box [-L, L)^d sampled at N
uniform nodes per axis, x_j = -L + h*j with h = 2L/N, row-major (C)
ordering. The dual lattice carries frequencies xi_n = (pi/L)*n with
integer n in [-N/2, N/2) per axis; spectral arrays are stored in numpy
FFT order (``numpy.fft.fftfreq`` layout) throughout the package.

``forward_transform`` returns the trapezoidal quadrature of the
continuous Fourier transform,

    F(xi_n) = h^d * sum_j exp(-i xi_n . x_j) f(x_j),

so spectral samples of a smooth field supported inside the box
approximate its continuous transform. ``inverse_transform`` inverts it
exactly on the lattice (round-trip at machine precision). The Sobolev
norm uses the matching lattice Parseval weight,

    ||f||_{W^{a,2}}^2 = (2L)^{-d} * sum_n <xi_n>^{2a} |F(xi_n)|^2,

with <xi> = (1 + |xi|^2)^{1/2}, so the a = 0 case coincides with the
discrete L2 norm h^d sum |f|^2.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigError, GridMismatch

__all__ = [
    "GridSpec",
    "RealField",
    "ComplexField",
    "forward_transform",
    "inverse_transform",
    "sobolev_norm",
    "l2_norm",
    "bump_cutoff",
    "glue_profile",
]


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on [-L, L)^d with its dual lattice.

    Parameters
    ----------
    d : int
        Space dimension, 2 or 3.
    N : int
        Nodes per axis; even and >= 8.
    L : float
        Half-width of the box (length units).
    R : float
        Support radius of the potential. The cutoff-extended support
        |x| <= 2R must fit strictly inside the box: 2R < L.
    """

    d: int
    N: int
    L: float
    R: float

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ConfigError(f"dimension d must be 2 or 3, got {self.d}")
        if self.N < 8 or self.N % 2 != 0:
            raise ConfigError(f"N must be even and >= 8, got {self.N}")
        if not (self.L > 0):
            raise ConfigError(f"box half-width L must be > 0, got {self.L}")
        if not (0 < self.R and 2 * self.R < self.L):
            raise ConfigError(
                f"support radius must satisfy 0 < R and 2R < L, got R={self.R}, L={self.L}"
            )

    @property
    def h(self) -> float:
        """Grid spacing 2L/N."""
        return 2.0 * self.L / self.N

    @property
    def shape(self) -> tuple:
        return (self.N,) * self.d

    @property
    def size(self) -> int:
        return self.N**self.d

    @property
    def nyquist(self) -> float:
        """Largest per-axis lattice frequency magnitude, pi*N/(2L)."""
        return np.pi * self.N / (2.0 * self.L)

    @property
    def cell_volume(self) -> float:
        return self.h**self.d

    @property
    def box_volume(self) -> float:
        return (2.0 * self.L) ** self.d

    def axis(self) -> np.ndarray:
        """Node coordinates along one axis, -L + h*j."""
        return -self.L + self.h * np.arange(self.N)

    def coords(self) -> tuple:
        """Broadcastable coordinate arrays, one per axis."""
        return _coords(self)

    def radii(self) -> np.ndarray:
        """|x| at every node, shape ``self.shape``."""
        return _radii(self)

    def freq_axis(self) -> np.ndarray:
        """Lattice frequencies along one axis in FFT order, (pi/L)*n."""
        return 2.0 * np.pi * np.fft.fftfreq(self.N, d=self.h)

    def freqs(self) -> tuple:
        """Broadcastable frequency arrays in FFT order, one per axis."""
        return _freqs(self)

    def freq_norm2(self) -> np.ndarray:
        """|xi|^2 on the lattice, FFT order, shape ``self.shape``."""
        return _freq_norm2(self)


@lru_cache(maxsize=32)
def _coords(spec: GridSpec) -> tuple:
    ax = spec.axis()
    out = []
    for c in range(spec.d):
        shape = [1] * spec.d
        shape[c] = spec.N
        out.append(ax.reshape(shape))
    return tuple(out)


@lru_cache(maxsize=32)
def _radii(spec: GridSpec) -> np.ndarray:
    r2 = np.zeros(spec.shape)
    for x in _coords(spec):
        r2 = r2 + x * x
    r = np.sqrt(r2)
    r.flags.writeable = False
    return r


@lru_cache(maxsize=32)
def _freqs(spec: GridSpec) -> tuple:
    ax = spec.freq_axis()
    out = []
    for c in range(spec.d):
        shape = [1] * spec.d
        shape[c] = spec.N
        out.append(ax.reshape(shape))
    return tuple(out)


@lru_cache(maxsize=32)
def _freq_norm2(spec: GridSpec) -> np.ndarray:
    s = np.zeros(spec.shape)
    for xi in _freqs(spec):
        s = s + xi * xi
    s.flags.writeable = False
    return s


@lru_cache(maxsize=32)
def _phase_checkerboard(d: int, N: int) -> np.ndarray:
    """(-1)^(j_1+...+j_d) over the index grid.

    Absorbs the e^{+i pi sum(n)} phase between the node convention
    x_j = -L + h*j and numpy's origin-at-index-0 FFT (valid for even N).
    """
    sign = 1.0 - 2.0 * (np.arange(N) % 2)
    out = sign
    for _ in range(d - 1):
        out = np.multiply.outer(out, sign)
    out = np.ascontiguousarray(out)
    out.flags.writeable = False
    return out


class _Field:
    """Sampled values on a grid; immutable after construction."""

    __slots__ = ("spec", "values")
    _dtype: type = None

    def __init__(self, spec: GridSpec, values):
        arr = np.asarray(values, dtype=self._dtype)
        if arr.shape != spec.shape:
            raise GridMismatch(
                f"values shape {arr.shape} does not match grid shape {spec.shape}"
            )
        arr = np.ascontiguousarray(arr.copy())
        arr.flags.writeable = False
        object.__setattr__(self, "spec", spec)
        object.__setattr__(self, "values", arr)

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    @classmethod
    def zeros(cls, spec: GridSpec):
        return cls(spec, np.zeros(spec.shape, dtype=cls._dtype))


class RealField(_Field):
    """Real float64 samples at the grid nodes."""

    _dtype = np.float64


class ComplexField(_Field):
    """Complex128 samples at the grid nodes (or spectral samples on the
    dual lattice in FFT order)."""

    _dtype = np.complex128


def _check_same_grid(a, b):
    if a.spec != b.spec:
        raise GridMismatch(f"grids differ: {a.spec} vs {b.spec}")


def forward_transform(f) -> ComplexField:
    """Discrete approximation of the continuous Fourier transform.

    Returns the spectral field F(xi_n) = h^d sum_j e^{-i xi_n.x_j} f(x_j)
    on the dual lattice in FFT order. Exact inverse of
    ``inverse_transform`` on the lattice.
    """
    spec = f.spec
    ph = _phase_checkerboard(spec.d, spec.N)
    out = (spec.cell_volume * ph) * np.fft.fftn(f.values)
    return ComplexField(spec, out)


def inverse_transform(g) -> ComplexField:
    """Inverse of :func:`forward_transform` on the lattice."""
    spec = g.spec
    ph = _phase_checkerboard(spec.d, spec.N)
    out = np.fft.ifftn(g.values * ph) / spec.cell_volume
    return ComplexField(spec, out)


def l2_norm(f) -> float:
    """Discrete L2 norm, (h^d sum_j |f_j|^2)^{1/2}."""
    v = f.values
    return float(np.sqrt(f.spec.cell_volume * np.sum(v.real**2 + v.imag**2)))


def sobolev_norm(f, alpha: float) -> float:
    """Discrete W^{alpha,2} norm of a grid field.

    Computed on the dual lattice as
    ((2L)^{-d} sum_n (1+|xi_n|^2)^alpha |F(xi_n)|^2)^{1/2},
    consistent with Parseval so that ``sobolev_norm(f, 0) == l2_norm(f)``
    up to rounding. ``alpha`` may be any finite real, either sign.
    """
    if not np.isfinite(alpha):
        raise ConfigError(f"Sobolev exponent must be finite, got {alpha}")
    spec = f.spec
    g = forward_transform(f).values
    w = (1.0 + spec.freq_norm2()) ** alpha
    total = np.sum(w * (g.real**2 + g.imag**2))
    return float(np.sqrt(total / spec.box_volume))


def glue_profile(r: np.ndarray, inner: float, outer: float) -> np.ndarray:
    """Smooth radial plateau: 1 for r <= inner, 0 for r >= outer.

    The transition is the exponential glue psi(t) = g(2-t)/(g(2-t)+g(t-1))
    with g(s) = exp(-1/s) for s > 0 (else 0), evaluated at
    t = 1 + (r-inner)/(outer-inner); for inner = R, outer = 2R this is
    exactly psi(|x|/R). C-infinity, values in [0, 1], psi at the
    midpoint is exactly 1/2 by symmetry.
    """
    if not (0 < inner < outer):
        raise ConfigError(f"need 0 < inner < outer, got {inner}, {outer}")
    r = np.asarray(r, dtype=np.float64)
    t = 1.0 + (r - inner) / (outer - inner)
    out = np.zeros(t.shape)
    out[t <= 1.0] = 1.0
    mid = (t > 1.0) & (t < 2.0)
    tm = t[mid]
    with np.errstate(divide="ignore", over="ignore"):
        g_up = np.exp(-1.0 / (2.0 - tm))
        g_dn = np.exp(-1.0 / (tm - 1.0))
    out[mid] = g_up / (g_up + g_dn)
    return out


def bump_cutoff(spec: GridSpec) -> RealField:
    """The smooth cutoff phi: 1 on |x| <= R, 0 on |x| >= 2R.

    Multiplying any field supported in |x| <= R by phi leaves it
    unchanged; reconstruction iterates are confined to |x| <= 2R by it.
    """
    if not (2 * spec.R < spec.L):
        raise ConfigError(
            f"cutoff support 2R={2 * spec.R} must fit strictly inside L={spec.L}"
        )
    return RealField(spec, glue_profile(spec.radii(), spec.R, 2.0 * spec.R))
