"""Lippmann-Schwinger solver for the scattered wave and the far-field
pattern; the synthetic-data generator.

The scattered wave of the Schroedinger scattering problem satisfies the
volume integral equation

    u_s = R_k(q e^{ik theta.x}) + R_k(q u_s),

solved here either by plain Neumann (Born-series) iteration, whose
convergence is itself the small-potential diagnostic, or by a dense
direct solve on tiny grids for cross-validation. The far-field pattern
is the quadrature

    u_inf(omega, theta, k) = h^d sum_j e^{-ik omega.x_j} q_j (e^{ik theta.x_j} + u_s_j),

whose leading term is the potential's Fourier transform on the Ewald
sphere k(omega - theta).
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DenseTooLarge, NoContraction
from .resolvent import (
    PlanCache,
    TruncatedKernel,
    _apply_values,
    _apply_values_batch,
    build_plan,
    resolve_method,
)
from .spectral import ComplexField, GridSpec, RealField

logger = logging.getLogger(__name__)

__all__ = [
    "ScatterSolution",
    "SolverOptions",
    "FarFieldDataset",
    "plane_wave",
    "solve_scattered",
    "far_field",
    "generate_dataset",
    "unit_vector",
]

DENSE_SIZE_CAP = 4096

# consecutive non-decreasing residual steps before giving up
_STALL_LIMIT = 5


def unit_vector(v, tol: float = 1e-12) -> np.ndarray:
    """Validate and return a unit vector as float64."""
    v = np.asarray(v, dtype=np.float64)
    norm = float(np.sqrt(np.sum(v * v)))
    if abs(norm - 1.0) > tol:
        raise ValueError(f"direction must be a unit vector, |v| = {norm}")
    return v


def plane_wave(spec: GridSpec, k: float, theta) -> ComplexField:
    """Incident wave e^{ik theta.x} sampled on the grid."""
    theta = np.asarray(theta, dtype=np.float64)
    phase = np.zeros(spec.shape)
    for c, x in enumerate(spec.coords()):
        phase = phase + theta[c] * x
    return ComplexField(spec, np.exp(1j * k * phase))


def _plane_wave_values(spec: GridSpec, k: float, theta) -> np.ndarray:
    phase = np.zeros(spec.shape)
    for c, x in enumerate(spec.coords()):
        phase = phase + theta[c] * x
    return np.exp(1j * k * phase)


@dataclass(frozen=True)
class ScatterSolution:
    """Scattered wave on the grid with solver metadata.

    ``residual`` is the final relative fixed-point residual in discrete
    L2 (step norm over the norm of the first Born term); at most the
    requested tolerance on successful return.
    """

    u_s: ComplexField
    theta: np.ndarray
    k: float
    iterations: int
    residual: float


@dataclass(frozen=True)
class SolverOptions:
    """Forward-solver settings shared by data generators and oracles."""

    tol: float = 1e-10
    max_iter: int = 200
    method: str = "neumann"
    resolvent_method: str = "truncated_kernel"
    resolvent_eps: float | None = None
    born_only: bool = False

    def make_plan_cache(self, spec: GridSpec) -> PlanCache:
        if self.resolvent_method == "eps_multiplier" and self.resolvent_eps is None:
            return _PerKEpsCache(spec)
        method = resolve_method(self.resolvent_method, self.resolvent_eps)
        return PlanCache(spec, method)


class _PerKEpsCache(PlanCache):
    """Plan cache for eps_multiplier with the default k-dependent eps."""

    def __init__(self, spec: GridSpec):
        super().__init__(spec, None)

    def get(self, k: float):
        from .resolvent import EpsMultiplier, default_eps

        key = self._key(k)
        plan = self._plans.get(key)
        if plan is None:
            plan = build_plan(self.spec, k, EpsMultiplier(default_eps(self.spec, k)))
            self._plans[key] = plan
        return plan


def solve_scattered(
    q: RealField,
    theta,
    k: float,
    tol: float = 1e-10,
    max_iter: int = 200,
    method: str = "neumann",
    plan=None,
    plan_cache: PlanCache | None = None,
) -> ScatterSolution:
    """Solve the Lippmann-Schwinger equation at one (theta, k).

    Parameters
    ----------
    q : RealField
        Potential, supported in |x| <= R.
    theta : array_like
        Unit incident direction.
    k : float
        Wavenumber > 0.
    tol : float
        Relative L2 stopping tolerance of the Neumann iteration.
    max_iter : int
        Iteration cap.
    method : {"neumann", "dense"}
        Neumann iterates the Born series and reports ``NoContraction``
        when it stalls (the informative failure of the small-potential
        regime); dense assembles (I - R_k M_q) and solves directly,
        permitted only for N^d <= 4096.
    plan, plan_cache
        Optional prebuilt resolvent plan or cache; defaults to a fresh
        ``TruncatedKernel`` plan.

    Raises
    ------
    NoContraction
        Residuals non-decreasing over 5 consecutive steps, or max_iter
        reached above tolerance.
    DenseTooLarge
        Dense requested beyond the size cap.
    """
    spec = q.spec
    theta = unit_vector(theta, tol=1e-14)
    if plan is None:
        if plan_cache is not None:
            plan = plan_cache.get(k)
        else:
            plan = build_plan(spec, k, TruncatedKernel())
    if not (tol > 0):
        raise ValueError(f"tol must be > 0, got {tol}")

    qv = q.values
    u_inc = _plane_wave_values(spec, k, theta)
    rhs = _apply_values(plan, qv * u_inc)
    norm0 = float(np.sqrt(spec.cell_volume * np.sum(rhs.real**2 + rhs.imag**2)))

    if norm0 == 0.0:
        return ScatterSolution(
            u_s=ComplexField(spec, np.zeros(spec.shape, dtype=np.complex128)),
            theta=theta,
            k=k,
            iterations=1,
            residual=0.0,
        )

    if method == "dense":
        return _solve_dense(q, theta, k, tol, plan, rhs, norm0)
    if method != "neumann":
        raise ValueError(f"unknown solver method {method!r}")

    u_prev = rhs
    iterations = 1
    residuals: list = []
    stall = 0
    for _ in range(max_iter):
        u_next = rhs + _apply_values(plan, qv * u_prev)
        diff = u_next - u_prev
        r = float(np.sqrt(spec.cell_volume * np.sum(diff.real**2 + diff.imag**2))) / norm0
        residuals.append(r)
        iterations += 1
        if r <= tol:
            return ScatterSolution(
                u_s=ComplexField(spec, u_next),
                theta=theta,
                k=k,
                iterations=iterations,
                residual=r,
            )
        if len(residuals) >= 2 and r >= residuals[-2]:
            stall += 1
            if stall >= _STALL_LIMIT:
                raise NoContraction(
                    f"Neumann residuals non-decreasing over {_STALL_LIMIT} "
                    f"consecutive steps at k={k} (last residual {r:.3e}); "
                    "the coupling is too strong for the Born series",
                    k=k,
                    residuals=residuals,
                )
        else:
            stall = 0
        u_prev = u_next
    raise NoContraction(
        f"Neumann iteration did not reach tol={tol} within {max_iter} "
        f"iterations at k={k} (last residual {residuals[-1]:.3e})",
        k=k,
        residuals=residuals,
    )


def _solve_dense(q, theta, k, tol, plan, rhs, norm0) -> ScatterSolution:
    spec = q.spec
    size = spec.size
    if size > DENSE_SIZE_CAP:
        raise DenseTooLarge(
            f"dense solve capped at N^d <= {DENSE_SIZE_CAP}, got {size}"
        )
    qflat = q.values.reshape(-1)
    # columns of R_k M_q via batched applications of the same plan
    cols = np.zeros((size, size), dtype=np.complex128)
    chunk = 128
    for start in range(0, size, chunk):
        stop = min(start + chunk, size)
        basis = np.zeros((stop - start,) + spec.shape, dtype=np.complex128)
        flat = basis.reshape(stop - start, size)
        for i, j in enumerate(range(start, stop)):
            flat[i, j] = qflat[j]
        out = _apply_values_batch(plan, basis)
        cols[:, start:stop] = out.reshape(stop - start, size).T
    a = np.eye(size, dtype=np.complex128) - cols
    u = np.linalg.solve(a, rhs.reshape(-1)).reshape(spec.shape)
    # consistency residual of the solved fixed point
    diff = u - (rhs + _apply_values(plan, q.values * u))
    r = float(np.sqrt(spec.cell_volume * np.sum(diff.real**2 + diff.imag**2))) / norm0
    return ScatterSolution(
        u_s=ComplexField(spec, u), theta=theta, k=k, iterations=1, residual=r
    )


def _direction_dots(spec: GridSpec, directions: np.ndarray) -> np.ndarray:
    """omega . x_j for each direction, shape (n_dir, grid size)."""
    pts = np.stack([np.broadcast_to(x, spec.shape).reshape(-1) for x in spec.coords()])
    return directions @ pts


def _far_field_values(
    spec: GridSpec, qu_total: np.ndarray, k: float, directions: np.ndarray
) -> np.ndarray:
    """h^d sum_j e^{-ik omega.x_j} (q u)(x_j) for each omega row."""
    dots = _direction_dots(spec, directions)
    return spec.cell_volume * (np.exp(-1j * k * dots) @ qu_total.reshape(-1))


def far_field(q: RealField, sol: ScatterSolution, omega) -> complex:
    """Far-field amplitude u_inf(omega, theta, k) for one direction.

    Equals the Born term q_hat(k(omega - theta)) plus the quadrature of
    e^{-ik omega.y} q u_s.
    """
    omega = unit_vector(omega)
    spec = q.spec
    u_tot = _plane_wave_values(spec, sol.k, sol.theta) + sol.u_s.values
    vals = _far_field_values(spec, q.values * u_tot, sol.k, omega[None, :])
    return complex(vals[0])


@dataclass(frozen=True)
class FarFieldDataset:
    """Tabulated far-field samples u_inf(omega, s*theta0, k).

    Rows are kept in the deterministic (sign, k, omega) order: sign +1
    before -1, wavenumbers ascending, directions lexicographic.
    """

    d: int
    theta0: np.ndarray
    R: float
    signs: np.ndarray  # (n,) int
    ks: np.ndarray  # (n,) float
    omegas: np.ndarray  # (n, d) float
    values: np.ndarray  # (n,) complex
    generator: dict = field(default_factory=dict)

    @property
    def n_samples(self) -> int:
        return len(self.values)

    @property
    def k_count(self) -> int:
        return len(np.unique(self.ks))

    @property
    def omega_count(self) -> int:
        return len(np.unique(self.omegas, axis=0))

    def sample_key_array(self) -> np.ndarray:
        """(n, d+2) array of (sign, k, omega) keys for comparisons."""
        return np.column_stack(
            [self.signs.astype(np.float64), self.ks, self.omegas]
        )


def _sorted_directions(omega_list) -> np.ndarray:
    omegas = np.asarray(omega_list, dtype=np.float64)
    if omegas.ndim != 2:
        raise ValueError("omega_list must be a 2-d array of directions")
    order = np.lexsort(tuple(omegas[:, c] for c in reversed(range(omegas.shape[1]))))
    return omegas[order]


def generate_dataset(
    q: RealField,
    theta0,
    k_list,
    omega_list,
    options: SolverOptions = SolverOptions(),
    workers: int = 1,
) -> FarFieldDataset:
    """Tabulate u_inf(omega, s*theta0, k) over s in {+1,-1} and the
    given (k, omega) product.

    Input lists are sorted internally (k ascending, omega lexicographic)
    so regenerating from shuffled inputs yields an identical dataset.
    Solves for distinct (s, k) pairs run independently (optionally in
    threads) and are merged in the fixed deterministic order.

    Raises
    ------
    NoContraction
        Tagged with the offending (sign, k).
    """
    spec = q.spec
    theta0 = unit_vector(theta0)
    ks = np.sort(np.asarray(k_list, dtype=np.float64))
    if np.any(ks <= 0):
        raise ValueError("all wavenumbers must be > 0")
    omegas = _sorted_directions(omega_list)
    for w in omegas:
        unit_vector(w)

    plan_cache = options.make_plan_cache(spec)
    plan_cache.prepopulate(ks)
    tasks = [(s, float(k)) for s in (1, -1) for k in ks]

    def run(task):
        s, k = task
        theta = s * theta0
        if options.born_only:
            u_tot = _plane_wave_values(spec, k, theta)
        else:
            try:
                sol = solve_scattered(
                    q,
                    theta,
                    k,
                    tol=options.tol,
                    max_iter=options.max_iter,
                    method=options.method,
                    plan=plan_cache.get(k),
                )
            except NoContraction as exc:
                exc.sign = s
                raise
            u_tot = _plane_wave_values(spec, k, theta) + sol.u_s.values
        return _far_field_values(spec, q.values * u_tot, k, omegas)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, tasks))
    else:
        results = [run(t) for t in tasks]

    n = len(tasks) * len(omegas)
    signs = np.empty(n, dtype=np.int64)
    kcol = np.empty(n, dtype=np.float64)
    wcol = np.empty((n, spec.d), dtype=np.float64)
    vals = np.empty(n, dtype=np.complex128)
    row = 0
    for (s, k), ff in zip(tasks, results):
        m = len(omegas)
        signs[row : row + m] = s
        kcol[row : row + m] = k
        wcol[row : row + m] = omegas
        vals[row : row + m] = ff
        row += m

    gen = {
        "kind": "synthetic_product",
        "solver": {
            "tol": options.tol,
            "max_iter": options.max_iter,
            "method": options.method,
            "resolvent_method": options.resolvent_method,
            "born_only": options.born_only,
        },
    }
    return FarFieldDataset(
        d=spec.d,
        theta0=theta0,
        R=spec.R,
        signs=signs,
        ks=kcol,
        omegas=wcol,
        values=vals,
        generator=gen,
    )
