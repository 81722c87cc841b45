"""Outgoing resolvent of the Laplacian applied to compactly supported
grid fields.

The operator realized here is the outgoing (limiting-absorption)
resolvent with Fourier symbol

    1 / (k^2 - |xi|^2 + i0),

the inverse of (k^2 + Laplacian) selecting radiating solutions. Its
convolution kernel is the negative of the classical outgoing Helmholtz
Green's function,

    kernel = -G_k,  G_k(x) = (i/4) H0^(1)(k|x|)      (d = 2)
                    G_k(x) = exp(ik|x|) / (4 pi |x|)  (d = 3).

Two realizations:

``TruncatedKernel`` (production): -G_k is truncated at radius T = 2L,
sampled on a 2x zero-padded copy of the grid, and applied as an FFT
circular convolution. Because the padded torus has period 4L and every
difference of two original-box nodes stays inside (-2L, 2L)^d per axis,
the circular convolution is alias-free and equals the plain quadrature
sum_j kernel(x - x_j) f(x_j) h^d exactly; for data supported in
|x| <= 2R < L the truncation never bites where the pipeline reads the
result. The singular x = 0 sample is replaced by the cell average of
the kernel over the ball of radius h/2, computed by adaptive quadrature
at plan build time.

``EpsMultiplier`` (validation fallback): the explicit rational symbol
1/(k^2 - |xi_n|^2 + i*eps) applied on the original lattice. eps = 0 is
allowed only when no lattice frequency sits on the sphere |xi| = k;
lattice plane waves are then exact eigenvectors.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .errors import ConfigError, GridMismatch, InvalidWavenumber, ResonantLattice
from .hankel import hankel1_0
from .spectral import ComplexField, GridSpec

__all__ = [
    "TruncatedKernel",
    "EpsMultiplier",
    "ResolventPlan",
    "build_plan",
    "apply_resolvent",
    "default_eps",
    "outgoing_green",
    "origin_cell_average",
    "resolve_method",
]


@dataclass(frozen=True)
class TruncatedKernel:
    """Truncated Green's kernel convolution (truncation radius 2L)."""


@dataclass(frozen=True)
class EpsMultiplier:
    """Regularized rational symbol 1/(k^2 - |xi|^2 + i*eps)."""

    eps: float = 0.0


def default_eps(spec: GridSpec, k: float) -> float:
    """Regularization used for cross-validation, (pi/L)^2 * k * h."""
    return (np.pi / spec.L) ** 2 * k * spec.h


def resolve_method(name: str, eps: float | None = None, spec=None, k=None):
    """Map a config string to a method object.

    ``eps=None`` for the multiplier picks :func:`default_eps`.
    """
    if name == "truncated_kernel":
        return TruncatedKernel()
    if name == "eps_multiplier":
        if eps is None:
            if spec is None or k is None:
                raise ConfigError("eps_multiplier needs eps or (spec, k)")
            eps = default_eps(spec, k)
        return EpsMultiplier(eps)
    raise ConfigError(f"unknown resolvent method {name!r}")


def outgoing_green(d: int, k: float, r: np.ndarray) -> np.ndarray:
    """Classical outgoing Helmholtz Green's function G_k(|x|), r > 0."""
    if d == 2:
        return 0.25j * hankel1_0(k * r)
    if d == 3:
        return np.exp(1j * k * r) / (4.0 * np.pi * r)
    raise ConfigError(f"unsupported dimension {d}")


def origin_cell_average(d: int, k: float, a: float) -> complex:
    """Average of G_k over the ball of radius ``a``, by adaptive quadrature.

    The kernel is locally integrable; averaging the singular cell keeps
    second-order quadrature accuracy of the sampled-kernel convolution.
    """
    if d == 2:
        # (1/(pi a^2)) int_0^a (i/4) H0(kr) 2 pi r dr
        def re_part(r):
            return (0.25j * hankel1_0(k * r) * r).real

        def im_part(r):
            return (0.25j * hankel1_0(k * r) * r).imag

        re, _ = quad(re_part, 0.0, a, limit=200)
        im, _ = quad(im_part, 0.0, a, limit=200)
        return complex(2.0 / a**2 * re, 2.0 / a**2 * im)
    if d == 3:
        # (1/((4/3) pi a^3)) int_0^a e^{ikr}/(4 pi r) 4 pi r^2 dr
        re, _ = quad(lambda r: np.cos(k * r) * r, 0.0, a, limit=200)
        im, _ = quad(lambda r: np.sin(k * r) * r, 0.0, a, limit=200)
        return complex(3.0 / a**3 * re, 3.0 / a**3 * im)
    raise ConfigError(f"unsupported dimension {d}")


@lru_cache(maxsize=32)
def _padded_radii(spec: GridSpec) -> np.ndarray:
    """|x| on the 2x padded grid [-2L, 2L)^d with the same spacing."""
    n = 2 * spec.N
    ax = -2.0 * spec.L + spec.h * np.arange(n)
    r2 = np.zeros((n,) * spec.d)
    for c in range(spec.d):
        shape = [1] * spec.d
        shape[c] = n
        r2 = r2 + (ax.reshape(shape)) ** 2
    r = np.sqrt(r2)
    r.flags.writeable = False
    return r


@dataclass(frozen=True)
class ResolventPlan:
    """Precomputed multiplier for repeated applications at one wavenumber.

    ``symbol`` holds the complex multiplier per lattice frequency in FFT
    order: on the 2x padded lattice for ``TruncatedKernel`` (where it
    approximates the transform of the truncated kernel,
    -int_{|x|<=2L} G_k e^{-i xi x} dx), and on the original lattice for
    ``EpsMultiplier`` (the exact rational symbol).
    """

    spec: GridSpec
    k: float
    method: object
    symbol: np.ndarray

    @property
    def padded(self) -> bool:
        return isinstance(self.method, TruncatedKernel)


def build_plan(spec: GridSpec, k: float, method) -> ResolventPlan:
    """Precompute the resolvent multiplier for wavenumber ``k``."""
    if not (k > 0) or not np.isfinite(k):
        raise InvalidWavenumber(f"wavenumber must be > 0, got {k}")

    if isinstance(method, TruncatedKernel):
        r = _padded_radii(spec)
        kernel = np.zeros(r.shape, dtype=np.complex128)
        mask = (r > 0) & (r <= 2.0 * spec.L)
        kernel[mask] = -outgoing_green(spec.d, k, r[mask])
        origin = tuple(np.argwhere(r == 0.0)[0])
        kernel[origin] = -origin_cell_average(spec.d, k, spec.h / 2.0)
        # forward transform on the padded box; the checkerboard phase
        # recentres the kernel at x = 0 for the circular convolution
        n = 2 * spec.N
        sign = 1.0 - 2.0 * (np.arange(n) % 2)
        ph = sign
        for _ in range(spec.d - 1):
            ph = np.multiply.outer(ph, sign)
        symbol = (spec.cell_volume * ph) * np.fft.fftn(kernel)
        symbol.flags.writeable = False
        return ResolventPlan(spec=spec, k=k, method=method, symbol=symbol)

    if isinstance(method, EpsMultiplier):
        eps = method.eps
        if eps < 0:
            raise ConfigError(f"eps must be >= 0, got {eps}")
        xi2 = spec.freq_norm2()
        if eps == 0.0:
            gap = np.abs(k * k - xi2)
            if np.min(gap) <= 1e-12 * k * k:
                raise ResonantLattice(
                    f"a lattice frequency sits on |xi| = k = {k}; "
                    "eps = 0 is not admissible"
                )
        symbol = 1.0 / (k * k - xi2 + 1j * eps)
        symbol.flags.writeable = False
        return ResolventPlan(spec=spec, k=k, method=method, symbol=symbol)

    raise ConfigError(f"unknown resolvent method {method!r}")


def _apply_values(plan: ResolventPlan, values: np.ndarray) -> np.ndarray:
    """Apply the plan to raw grid values (no Field wrapping)."""
    spec = plan.spec
    if plan.padded:
        n = 2 * spec.N
        off = spec.N // 2
        pad = np.zeros((n,) * spec.d, dtype=np.complex128)
        sl = tuple(slice(off, off + spec.N) for _ in range(spec.d))
        pad[sl] = values
        out = np.fft.ifftn(plan.symbol * np.fft.fftn(pad))
        return np.ascontiguousarray(out[sl])
    return np.fft.ifftn(plan.symbol * np.fft.fftn(values))


def _apply_values_batch(plan: ResolventPlan, stack: np.ndarray) -> np.ndarray:
    """Apply the plan to a stack of fields, axis 0 = batch."""
    spec = plan.spec
    axes = tuple(range(1, spec.d + 1))
    if plan.padded:
        n = 2 * spec.N
        off = spec.N // 2
        pad = np.zeros((stack.shape[0],) + (n,) * spec.d, dtype=np.complex128)
        sl = (slice(None),) + tuple(slice(off, off + spec.N) for _ in range(spec.d))
        pad[sl] = stack
        out = np.fft.ifftn(plan.symbol[None] * np.fft.fftn(pad, axes=axes), axes=axes)
        return np.ascontiguousarray(out[sl])
    return np.fft.ifftn(plan.symbol[None] * np.fft.fftn(stack, axes=axes), axes=axes)


def apply_resolvent(plan: ResolventPlan, f) -> ComplexField:
    """Apply the outgoing resolvent to a grid field.

    Linear in ``f``; callers are responsible for keeping the data
    supported in |x| <= 2R (not re-checked per call).
    """
    if f.spec != plan.spec:
        raise GridMismatch(f"field grid {f.spec} does not match plan grid {plan.spec}")
    return ComplexField(plan.spec, _apply_values(plan, f.values))


class PlanCache:
    """Plans keyed by the bit pattern of k; shared within a sweep.

    Thread-safe for concurrent reads after :meth:`prepopulate`; inserts
    are serialized by the GIL (dict set is atomic), and plan
    construction is deterministic, so duplicated builds are harmless.
    """

    def __init__(self, spec: GridSpec, method):
        self.spec = spec
        self.method = method
        self._plans: dict = {}

    @staticmethod
    def _key(k: float) -> bytes:
        return np.float64(k).tobytes()

    def get(self, k: float) -> ResolventPlan:
        key = self._key(k)
        plan = self._plans.get(key)
        if plan is None:
            plan = build_plan(self.spec, k, self.method)
            self._plans[key] = plan
        return plan

    def prepopulate(self, ks) -> None:
        for k in sorted(set(float(k) for k in ks)):
            self.get(k)
