"""Coefficient-side and oscillation-side norms.

The central object is the Morrey-weighted sup over dyadic cubes of a mixed
L^p(l^q) aggregate of detail coefficients,

    sup_Q |Q|^{gamma2/n - 1/p} || ( sum_{Q_{j,k} subset Q, eps}
        2^{q j (gamma1 + n/2)} |a^eps_{j,k}|^q chi(2^j x - k) )^{1/q} ||_{L^p},

together with its slow oscillation-definition counterpart (cutoff, moment-
matched polynomial subtraction, plain Triebel-Lizorkin norm per cube).
Scaling coefficients never enter these norms: the spaces are homogeneous and
the scaling block only carries the sub-band remainder of the discretization.

Cube sups are exact over the finite dyadic family; when gamma2 = n/p and the
coarsest cube is the whole torus, the Morrey sup is attained there and the
evaluator returns bit-for-bit the plain Triebel-Lizorkin norm.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DegenerateRegimeWarning,
    MomentConditioningError,
    ParameterError,
)
from .grid import DyadicCube, GridFunction, GridSpec
from .wavelet import CoeffField

CONDITION_LIMIT = 1e10


@dataclass(frozen=True)
class SpaceParams:
    """(gamma1, gamma2, p, q) with 0 < p < inf and 0 < q <= inf."""

    gamma1: float
    gamma2: float
    p: float
    q: float

    def __post_init__(self):
        if not (0 < self.p < np.inf):
            raise ParameterError(f"p must be finite positive, got {self.p}")
        if not (self.q > 0):
            raise ParameterError(f"q must be positive (or inf), got {self.q}")

    def degenerate(self, n: int) -> bool:
        """gamma2 > n/p: continuum space reduces to polynomials."""
        return self.gamma2 > n / self.p


def _upsample(arr: np.ndarray, J: int) -> np.ndarray:
    """Blow a (2^j,)^n array up to the (2^J,)^n grid by block repetition."""
    factor = (1 << J) // arr.shape[0]
    out = arr
    for axis in range(arr.ndim):
        out = np.repeat(out, factor, axis=axis)
    return out


def _block_reduce_sum(arr: np.ndarray, j0: int, J: int) -> np.ndarray:
    """Sum the full-grid array over each level-j0 cube; result (2^{j0},)^n."""
    L, w = 1 << j0, 1 << (J - j0)
    n = arr.ndim
    reshaped = arr.reshape(sum(((L, w),) * n, ()))
    return reshaped.sum(axis=tuple(range(1, 2 * n, 2)))


def _level_aggregates(c: CoeffField, gamma1: float, q: float,
                      extra_weight: float = 0.0) -> dict[int, np.ndarray]:
    """Per level j, the full-grid field sum_eps 2^{qj(gamma1+n/2+extra)} |a|^q
    (pointwise sup over eps of the weighted |a| when q = inf)."""
    n, J = c.spec.n, c.spec.J
    out: dict[int, np.ndarray] = {}
    for j in c.levels:
        stack = [np.abs(c.detail[(eps, j)]) for eps in _types(c)]
        w = 2.0 ** (j * (gamma1 + n / 2.0 + extra_weight))
        if q == np.inf:
            lvl = w * np.maximum.reduce(stack)
        else:
            lvl = (w ** q) * sum(a ** q for a in stack)
        out[j] = _upsample(lvl, J)
    return out


def _types(c: CoeffField):
    seen = sorted({eps for eps, _ in c.detail})
    return seen


def _suffix_combine(levels: dict[int, np.ndarray], q: float) -> dict[int, np.ndarray]:
    """V[j0] = aggregate over levels j >= j0 (sum for finite q, sup for q=inf)."""
    out: dict[int, np.ndarray] = {}
    acc = None
    for j in sorted(levels, reverse=True):
        if acc is None:
            acc = levels[j].copy()
        else:
            acc = np.maximum(acc, levels[j]) if q == np.inf else acc + levels[j]
        out[j] = acc.copy()
    return out


@dataclass
class TlmReport:
    value: float
    argmax_cube: DyadicCube | None
    per_level: dict[int, float] = field(default_factory=dict)


def tl_norm(c: CoeffField, gamma1: float, p: float, q: float) -> float:
    """Plain Triebel-Lizorkin norm of a coefficient field (no cube sup)."""
    sp = SpaceParams(gamma1, c.spec.n / p, p, q)
    return _tlm_core(c, sp, cube_levels=(c.spec.j_min,), whole_domain=True).value


def tlm_wavelet_norm(c: CoeffField, sp: SpaceParams) -> float:
    return tlm_wavelet_norm_report(c, sp).value


def tlm_wavelet_norm_report(c: CoeffField, sp: SpaceParams) -> TlmReport:
    if sp.degenerate(c.spec.n):
        warnings.warn(
            f"gamma2={sp.gamma2} > n/p={c.spec.n / sp.p}: degenerate regime "
            "(continuum space contains only polynomials)",
            DegenerateRegimeWarning,
            stacklevel=2,
        )
    return _tlm_core(c, sp, cube_levels=None, whole_domain=False)


def _tlm_core(c: CoeffField, sp: SpaceParams, cube_levels, whole_domain) -> TlmReport:
    n, J = c.spec.n, c.spec.J
    cell = c.spec.cell_volume
    levels = _level_aggregates(c, sp.gamma1, sp.q)
    if not levels:
        return TlmReport(0.0, None)
    V = _suffix_combine(levels, sp.q)
    if cube_levels is None:
        cube_levels = range(c.spec.j_min, J)
    best, best_cube = 0.0, None
    per_level: dict[int, float] = {}
    for j0 in cube_levels:
        # levels >= j0 contribute; nothing left above the finest detail level
        avail = [j for j in V if j >= j0]
        if not avail:
            per_level[j0] = 0.0
            continue
        Vj = V[min(avail)]
        integrand = Vj if sp.q == np.inf else Vj ** (1.0 / sp.q)
        if whole_domain:
            val = float((cell * np.sum(integrand ** sp.p)) ** (1.0 / sp.p))
            per_level[j0] = val
            if val > best:
                best, best_cube = val, DyadicCube(j0, (0,) * n)
            continue
        sums = _block_reduce_sum(integrand ** sp.p, j0, J)
        weight = 2.0 ** (-j0 * (sp.gamma2 - n / sp.p))
        vals = weight * (cell * sums) ** (1.0 / sp.p)
        flat = int(np.argmax(vals))
        per_level[j0] = float(vals.reshape(-1)[flat])
        if per_level[j0] > best:
            best = per_level[j0]
            k = np.unravel_index(flat, vals.shape)
            best_cube = DyadicCube(j0, tuple(int(v) for v in k))
    return TlmReport(best, best_cube, per_level)


# -- cutoff family and moment system -------------------------------------------

def _default_bump_profile(n: int) -> tuple[float, float, Callable]:
    """Radial profile: 1 on [0, r_in], C-infty decay on (r_in, r_out), 0 beyond.

    r_in = sqrt(n), r_out = n as in the defining condition; dimension one is
    degenerate there (sqrt(1) = 1) so the support is widened to 2."""
    r_in = float(np.sqrt(n))
    r_out = float(n) if n > np.sqrt(n) else 2.0 * r_in

    def psi(r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        out[r <= r_in] = 1.0
        trans = (r > r_in) & (r < r_out)
        s = (r[trans] - r_in) / (r_out - r_in)
        out[trans] = np.exp(1.0 - 1.0 / (1.0 - s**2))
        return out

    return r_in, r_out, psi


@dataclass
class CutoffFamily:
    """phi_Q(x) = phi((x - x_Q)/r): radial bump, 1 on the cube, compact support."""

    n: int
    plateau_radius: float = 0.0
    support_radius: float = 0.0
    profile: Callable | None = None

    def __post_init__(self):
        r_in, r_out, psi = _default_bump_profile(self.n)
        if self.plateau_radius == 0.0:
            self.plateau_radius = r_in
        if self.support_radius == 0.0:
            self.support_radius = r_out
        if self.profile is None:
            if (self.plateau_radius, self.support_radius) != (r_in, r_out):
                a, b = self.plateau_radius, self.support_radius

                def scaled(r):
                    r = np.asarray(r, dtype=float)
                    out = np.zeros_like(r)
                    out[r <= a] = 1.0
                    trans = (r > a) & (r < b)
                    s = (r[trans] - a) / (b - a)
                    out[trans] = np.exp(1.0 - 1.0 / (1.0 - s**2))
                    return out

                self.profile = scaled
            else:
                self.profile = psi

    def evaluate(self, u_radius: np.ndarray) -> np.ndarray:
        return self.profile(u_radius)


def _cube_chart(spec: GridSpec, cube: DyadicCube, cutoff: CutoffFamily):
    """Sample box covering supp(phi_Q) in the fundamental domain [0,1)^n,
    plus the scaled chart coordinates u = (x - x_Q)/r on that box.

    Charts never wrap: the oscillation definition treats [0,1)^n as a window
    of the plane, which keeps polynomial subtraction exact for global
    polynomials."""
    N = spec.samples_per_axis
    r = cube.side
    R = cutoff.support_radius * r
    slices, axes_u = [], []
    for ci in cube.center:
        lo = max(0, int(np.floor((ci - R) * N)))
        hi = min(N, int(np.ceil((ci + R) * N)) + 1)
        slices.append(slice(lo, hi))
        axes_u.append((np.arange(lo, hi) / N - ci) / r)
    grids = np.meshgrid(*axes_u, indexing="ij")
    radius = np.sqrt(sum(g**2 for g in grids))
    return tuple(slices), grids, radius


def _monomial_exponents(n: int, m0: int) -> list[tuple[int, ...]]:
    out = []

    def rec(prefix, remaining, budget):
        if remaining == 0:
            out.append(tuple(prefix))
            return
        for d in range(budget + 1):
            rec(prefix + [d], remaining - 1, budget - d)

    rec([], n, m0)
    return sorted(out, key=lambda e: (sum(e), e))


@dataclass
class MomentSystem:
    """Per-cube moment-matched polynomial P_{Q,f} of total degree <= m0."""

    m0: int
    exponents: list[tuple[int, ...]]
    coefficients: np.ndarray
    condition: float

    def residual_moments(self, weight, grids, fvals) -> np.ndarray:
        resid = fvals - self.evaluate(grids)
        return np.array([
            np.sum(weight * _mono(grids, a) * resid) for a in self.exponents
        ])

    def evaluate(self, grids) -> np.ndarray:
        out = np.zeros_like(grids[0], dtype=complex)
        for coeff, expo in zip(self.coefficients, self.exponents):
            out += coeff * _mono(grids, expo)
        return out


def _mono(grids, expo) -> np.ndarray:
    out = np.ones_like(grids[0])
    for g, d in zip(grids, expo):
        if d:
            out = out * g**d
    return out


def solve_moment_system(weight: np.ndarray, grids, fvals: np.ndarray,
                        m0: int, cube: DyadicCube) -> MomentSystem:
    """Least squares on the Gram system <u^a, phi u^b> c = <u^a, phi f>."""
    expos = _monomial_exponents(len(grids), m0)
    monos = [_mono(grids, e) for e in expos]
    G = np.array([[np.sum(weight * ma * mb) for mb in monos] for ma in monos])
    b = np.array([np.sum(weight * ma * fvals) for ma in monos])
    cond = float(np.linalg.cond(G))
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise MomentConditioningError(cube, cond)
    coeffs, *_ = np.linalg.lstsq(G, b, rcond=None)
    return MomentSystem(m0, expos, coeffs, cond)


@dataclass
class OscillationReport:
    value: float
    argmax_cube: DyadicCube | None
    per_cube: list[tuple[DyadicCube, float]]
    refined_value: float | None = None


def oscillation_norm(f: GridFunction, sp: SpaceParams, cutoff: CutoffFamily,
                     m0: int, basis, cube_levels: Sequence[int] | None = None,
                     refine: bool = False) -> float:
    return oscillation_norm_report(f, sp, cutoff, m0, basis,
                                   cube_levels=cube_levels, refine=refine).value


def oscillation_norm_report(f: GridFunction, sp: SpaceParams,
                            cutoff: CutoffFamily, m0: int, basis,
                            cube_levels: Sequence[int] | None = None,
                            refine: bool = False) -> OscillationReport:
    """Definition-side norm: sup over cubes of the weighted TL norm of
    phi_Q (f - P_{Q,f}), the slow oracle against the wavelet norm."""
    spec = f.spec
    if cube_levels is None:
        cube_levels = range(spec.j_min, spec.J)
    best, best_cube = 0.0, None
    table: list[tuple[DyadicCube, float]] = []
    for j0 in cube_levels:
        for flat in range((1 << j0) ** spec.n):
            k = np.unravel_index(flat, (1 << j0,) * spec.n)
            cube = DyadicCube(j0, tuple(int(v) for v in k))
            val = _cube_oscillation(f, sp, cutoff, m0, basis, cube)
            table.append((cube, val))
            if val > best:
                best, best_cube = val, cube
    refined = None
    if refine and best_cube is not None:
        refined = _refine_cube(f, sp, cutoff, m0, basis, best_cube, best)
    return OscillationReport(best, best_cube, table, refined)


def _cube_oscillation(f, sp, cutoff, m0, basis, cube) -> float:
    spec = f.spec
    slices, grids, radius = _cube_chart(spec, cube, cutoff)
    weight = cutoff.evaluate(radius)
    fvals = f.data[slices]
    system = solve_moment_system(weight, grids, fvals, m0, cube)
    resid = weight * (fvals - system.evaluate(grids))
    g = np.zeros(spec.shape, dtype=complex)
    g[slices] = resid
    c = basis.analyze(GridFunction(spec, g))
    tl = tl_norm(c, sp.gamma1, sp.p, sp.q)
    return 2.0 ** (-cube.j * (sp.gamma2 - spec.n / sp.p)) * tl


def _refine_cube(f, sp, cutoff, m0, basis, cube, moment_value) -> float:
    """Direct minimization over the polynomial, recorded when it undercuts
    the moment-matched solution by a noticeable margin."""
    from scipy.optimize import minimize

    spec = f.spec
    slices, grids, radius = _cube_chart(spec, cube, cutoff)
    weight = cutoff.evaluate(radius)
    fvals = f.data[slices]
    expos = _monomial_exponents(spec.n, m0)
    start = solve_moment_system(weight, grids, fvals, m0, cube).coefficients.real

    def objective(coeffs):
        poly = np.zeros_like(grids[0])
        for coeff, expo in zip(coeffs, expos):
            poly += coeff * _mono(grids, expo)
        g = np.zeros(spec.shape, dtype=complex)
        g[slices] = weight * (fvals - poly)
        c = basis.analyze(GridFunction(spec, g))
        return tl_norm(c, sp.gamma1, sp.p, sp.q)

    res = minimize(objective, start, method="Nelder-Mead",
                   options={"maxiter": 200, "xatol": 1e-6, "fatol": 1e-9})
    w = 2.0 ** (-cube.j * (sp.gamma2 - spec.n / sp.p))
    return float(min(moment_value, w * res.fun))


# -- maximal function and kernel sums ------------------------------------------

def dyadic_maximal(f: GridFunction) -> GridFunction:
    """M g (x) = max over dyadic cubes containing x of the average of |g|."""
    spec = f.spec
    h = np.abs(f.data)
    best = h.copy()
    for j0 in range(spec.J - 1, -1, -1):
        avg = _block_reduce_sum(h, j0, spec.J) / float(1 << (spec.n * (spec.J - j0)))
        best = np.maximum(best, _upsample(avg, spec.J))
    return GridFunction(spec, best)


def vector_maximal(fs: Sequence[GridFunction], A: float,
                   spec: GridSpec | None = None) -> GridFunction:
    """( sum_j M(|f_j|^A) )^{1/A} with the dyadic maximal operator.

    An empty sequence yields the zero function (the grid must then be
    supplied explicitly)."""
    if A <= 0:
        raise ParameterError(f"A must be positive, got {A}")
    if not fs:
        if spec is None:
            raise ParameterError("empty sequence: pass spec= for the zero field")
        return GridFunction.zeros(spec)
    spec = fs[0].spec
    acc = np.zeros(spec.shape, dtype=float)
    for f in fs:
        powered = GridFunction(spec, np.abs(f.data) ** A)
        acc += dyadic_maximal(powered).data.real
    return GridFunction(spec, acc ** (1.0 / A))


def level_indicator_field(c: CoeffField, j: int, s: float) -> GridFunction:
    """f_j = sum_{eps,k} 2^{j(s+n/2)} |a^eps_{j,k}| chi(2^j x - k)."""
    n = c.spec.n
    total = sum(np.abs(c.detail[(eps, j)]) for eps in _types(c))
    lvl = 2.0 ** (j * (s + n / 2.0)) * total
    return GridFunction(c.spec, _upsample(lvl, c.spec.J))


def kernel_sum(c: CoeffField, j_prime: int, j: int, k: tuple[int, ...],
               gamma: float, s: float) -> float:
    """The discrete kernel sum pairing level j' mass against position k at
    level j, with decay exponent n + gamma in the normalized distance."""
    n = c.spec.n
    if j_prime not in c.levels:
        raise ParameterError(f"level {j_prime} not in field band")
    L = 1 << j_prime
    kp = np.stack(np.meshgrid(*([np.arange(L)] * n), indexing="ij"), axis=-1)
    if j >= j_prime:
        target = np.asarray(k, dtype=float) * 2.0 ** (j_prime - j)
        diff = kp - target
        diff = diff - np.round(diff / L) * L            # periodic min-image
    else:
        scaled = kp * 2.0 ** (j - j_prime)
        diff = scaled - np.asarray(k, dtype=float)
        diff = diff - np.round(diff / (1 << j)) * (1 << j)
    dist = np.sqrt(np.sum(diff**2, axis=-1))
    kern = (1.0 + dist) ** (-(n + gamma))
    total = 0.0
    for eps in _types(c):
        total += float(np.sum(np.abs(c.detail[(eps, j_prime)]) * kern))
    return 2.0 ** (j_prime * (s + n / 2.0)) * total


@dataclass
class KernelBoundReport:
    value: float
    maximal_min: float
    ratio: float
    guaranteed: bool


def kernel_bound_report(c: CoeffField, j_prime: int, j: int, k: tuple[int, ...],
                        gamma: float, s: float, A: float) -> KernelBoundReport:
    """Measured constant in the bound kernel_sum <= C M_A(f_{j'}) on Q_{j,k}
    (the extra 2^{n(j'-j)/A} factor applies when j < j')."""
    n = c.spec.n
    guaranteed = gamma > n / A + 1
    if not guaranteed:
        warnings.warn(
            f"gamma={gamma} <= n/A + 1 = {n / A + 1}: bound not guaranteed",
            UserWarning, stacklevel=2,
        )
    g_val = kernel_sum(c, j_prime, j, k, gamma, s)
    fj = level_indicator_field(c, j_prime, s)
    MA = vector_maximal([fj], A)
    from .grid import cube_sample_slices

    cube = DyadicCube(j, tuple(k))
    box = MA.data[cube_sample_slices(c.spec, cube)]
    m_min = float(np.min(box.real))
    scale = 2.0 ** (n * (j_prime - j) / A) if j < j_prime else 1.0
    ratio = g_val / (scale * m_min) if m_min > 0 else (0.0 if g_val == 0 else np.inf)
    return KernelBoundReport(g_val, m_min, ratio, guaranteed)
