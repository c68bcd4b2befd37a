"""Tent norms on time-indexed coefficient fields.

Four parts split the upper half-space seen by a cube Q_r:

  I   sup over t of the L-infinity-in-t piece at levels j >= max(-log2 r,
      -log2(t)/(2 beta)), weighted t^m and 2^{qj(gamma1+n/2+2m beta)};
  II  the intermediate band -log2 r < j < -log2(t)/(2 beta), plain weights;
  III per coefficient, the time integral over (2^{-2j beta}, r^{2 beta}]
      against t^{qm} dt/t;
  IV  the time integral over (0, 2^{-2j beta}] against t^{qm'} dt/t.

The combined norm is the max of the four.  Parts III/IV integrate the
t^{q m} dt/t measure exactly over each log cell (the coefficient modulus is
sampled at the cell midpoint), so constant-in-t profiles integrate to the
closed form up to the window-edge cell resolution.

The outer 1/q power on the level sums of parts III/IV follows the same
L^p(l^q) shape as parts I/II; `literal_exponent=True` switches to the
displayed form without that root.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ParameterError
from .grid import DyadicCube, GridSpec
from .norms import SpaceParams, _block_reduce_sum, _upsample
from .semigroup import TimeCoeffField, TimeGrid
from .wavelet import detail_types


@dataclass(frozen=True)
class TentParams:
    sp: SpaceParams
    m: float
    m_prime: float
    beta: float
    tau: float = 1.0

    def __post_init__(self):
        if self.m_prime <= 0:
            raise ParameterError(f"m' must be positive, got {self.m_prime}")
        if self.beta <= 0:
            raise ParameterError(f"beta must be positive, got {self.beta}")

    def characterization_preconditions(self, n: int) -> list[str]:
        """Hypotheses the lift characterization runs under; returns violations."""
        bad = []
        if not (1 < self.sp.p < self.m):
            bad.append(f"need 1 < p < m, got p={self.sp.p}, m={self.m}")
        if not (self.sp.gamma1 - self.sp.gamma2 < 0):
            bad.append(
                f"need gamma1 - gamma2 < 0, got {self.sp.gamma1 - self.sp.gamma2}"
            )
        if not (self.tau + (self.sp.gamma1 - self.sp.gamma2)
                / (2 * self.beta) > 0):
            bad.append("need tau + (gamma1-gamma2)/(2 beta) > 0")
        return bad


@dataclass
class PartResult:
    value: float
    argmax_cube: DyadicCube | None = None
    argmax_node: int | None = None


@dataclass
class TentNormReport:
    part_i: PartResult
    part_ii: PartResult
    part_iii: PartResult
    part_iv: PartResult
    seam_levels: dict = field(default_factory=dict)
    quadrature_estimate: float = 0.0

    @property
    def values(self) -> tuple[float, float, float, float]:
        return (self.part_i.value, self.part_ii.value,
                self.part_iii.value, self.part_iv.value)

    @property
    def combined(self) -> float:
        return max(self.values)


def _level_base_fields(tcf: TimeCoeffField, ell: int, q: float) -> dict[int, np.ndarray]:
    """Per level j: the full-grid field sum_eps |a(t_ell)|^q (sup for q=inf)."""
    out = {}
    for j in tcf.levels:
        stack = [np.abs(tcf.detail[(eps, j)][ell]) for eps in detail_types(tcf.spec.n)]
        agg = np.maximum.reduce(stack) if q == np.inf else sum(a**q for a in stack)
        out[j] = _upsample(agg, tcf.spec.J)
    return out


def _cube_sup(field_by_level: dict[int, np.ndarray], level_weights: dict[int, float],
              admit, sp: SpaceParams, spec: GridSpec,
              cube_levels: Sequence[int]) -> tuple[float, DyadicCube | None]:
    """sup over cubes of |Q|^{gamma2/n - 1/p} || (sum_{j in admit(j0)} w_j F_j)
    ^{1/q} ||_p with the sum restricted to the cube."""
    n, J, cell = spec.n, spec.J, spec.cell_volume
    q, p = sp.q, sp.p
    best, best_cube = 0.0, None
    for j0 in cube_levels:
        levels = [j for j in field_by_level if admit(j0, j)]
        if not levels:
            continue
        if q == np.inf:
            agg = np.maximum.reduce(
                [level_weights[j] * field_by_level[j] for j in levels])
            integrand = agg
        else:
            agg = sum(level_weights[j] * field_by_level[j] for j in levels)
            integrand = agg ** (1.0 / q)
        sums = _block_reduce_sum(integrand**p, j0, J)
        weight = 2.0 ** (-j0 * (sp.gamma2 - n / p))
        vals = weight * (cell * sums) ** (1.0 / p)
        flat = int(np.argmax(vals))
        v = float(vals.reshape(-1)[flat])
        if v > best:
            k = np.unravel_index(flat, vals.shape)
            best, best_cube = v, DyadicCube(j0, tuple(int(x) for x in k))
    return best, best_cube


def _time_moment_antiderivative(logt: np.ndarray, qm: float) -> np.ndarray:
    """Antiderivative of t^{qm} dt/t as a function of log t."""
    if qm == 0.0:
        return logt
    return np.exp(qm * logt) / qm


class _WindowIntegrals:
    """Per-coefficient integrals int_window |a(t)|^q t^{qm} dt/t with the
    measure integrated exactly on each log cell and |a| held at the node."""

    def __init__(self, tcf: TimeCoeffField, q: float, qm: float):
        if q == np.inf:
            raise ParameterError("time-integrated parts need finite q")
        self.tcf = tcf
        self.qm = qm
        edges = tcf.tg.log_edges()
        self.log_edges = edges
        anti = _time_moment_antiderivative(edges, qm)
        self.cell_mass = np.diff(anti)          # full-cell measure moments
        self.blocks = {}
        for key, arr in tcf.detail.items():
            absq = np.abs(arr.reshape(tcf.tg.L, -1)) ** q
            full = absq * self.cell_mass[:, None]
            prefix = np.concatenate(
                [np.zeros((1, absq.shape[1])), np.cumsum(full, axis=0)], axis=0)
            self.blocks[key] = (absq, prefix)

    def _eval(self, key, log_s: float) -> np.ndarray:
        """G(s) = integral over (t_min-edge, s] per coefficient."""
        absq, prefix = self.blocks[key]
        edges = self.log_edges
        if log_s <= edges[0]:
            return np.zeros(absq.shape[1])
        if log_s >= edges[-1]:
            return prefix[-1]
        cellidx = int(np.searchsorted(edges, log_s, side="right")) - 1
        anti_lo = _time_moment_antiderivative(np.array([edges[cellidx]]), self.qm)[0]
        anti_s = _time_moment_antiderivative(np.array([log_s]), self.qm)[0]
        return prefix[cellidx] + absq[cellidx] * (anti_s - anti_lo)

    def window(self, key, log_lo: float, log_hi: float) -> np.ndarray:
        if log_hi <= log_lo:
            return np.zeros(self.blocks[key][0].shape[1])
        return np.maximum(self._eval(key, log_hi) - self._eval(key, log_lo), 0.0)


def tent_norms(tcf: TimeCoeffField, tp: TentParams,
               literal_exponent: bool = False) -> TentNormReport:
    """All four tent parts in one pass; the combined norm is their max.

    q = inf evaluates the sup-aggregate reading of parts I/II; the
    time-integrated parts III/IV are defined through integrals with
    exponent q and are reported as zero in that limit (their content is
    carried by the sup-in-t part)."""
    spec, tg = tcf.spec, tcf.tg
    sp, beta, q = tp.sp, tp.beta, tp.sp.q
    n = spec.n
    nodes = tg.nodes()
    cube_levels = list(range(spec.j_min, spec.J))
    ln2 = np.log(2.0)

    part1 = PartResult(0.0)
    part2 = PartResult(0.0)
    seam_levels = {}
    w_i = {j: 2.0 ** (q * j * (sp.gamma1 + n / 2.0 + 2 * tp.m * beta))
           if q != np.inf else 2.0 ** (j * (sp.gamma1 + n / 2.0 + 2 * tp.m * beta))
           for j in tcf.levels}
    w_ii = {j: 2.0 ** (q * j * (sp.gamma1 + n / 2.0))
            if q != np.inf else 2.0 ** (j * (sp.gamma1 + n / 2.0))
            for j in tcf.levels}
    for ell, t in enumerate(nodes):
        theta = -np.log2(t) / (2.0 * beta)
        base = _level_base_fields(tcf, ell, q)
        v1, cube1 = _cube_sup(
            base, w_i, lambda j0, j: j >= max(j0, theta), sp, spec, cube_levels)
        v1 *= t**tp.m
        if v1 > part1.value:
            part1 = PartResult(v1, cube1, ell)
        v2, cube2 = _cube_sup(
            base, w_ii, lambda j0, j: j0 < j < theta, sp, spec, cube_levels)
        if v2 > part2.value:
            part2 = PartResult(v2, cube2, ell)
        seam_levels[ell] = theta

    part3 = PartResult(0.0)
    part4 = PartResult(0.0)
    if q != np.inf:
        win_m = _WindowIntegrals(tcf, q, q * tp.m)
        win_mp = _WindowIntegrals(tcf, q, q * tp.m_prime)
        w_iii = {j: 2.0 ** (q * j * (sp.gamma1 + n / 2.0 + 2 * tp.m * beta))
                 for j in tcf.levels}
        w_iv = {j: 2.0 ** (q * j * (sp.gamma1 + n / 2.0 + 2 * tp.m_prime * beta))
                for j in tcf.levels}
        root = 1.0 if literal_exponent else 1.0 / q

        # part IV is cube-geometry independent in time: one field
        field_iv = {}
        for j in tcf.levels:
            total = None
            for eps in detail_types(n):
                I = win_mp.window((eps, j), -np.inf, -2.0 * j * beta * ln2)
                total = I if total is None else total + I
            field_iv[j] = _upsample(total.reshape((1 << j,) * n), spec.J)
        v4, cube4 = _cube_sup_timeint(field_iv, w_iv, lambda j0, j: True,
                                      sp, spec, cube_levels, root)
        part4 = PartResult(v4, cube4)

        # part III windows depend on the cube level through r^{2 beta}
        best3, cube3 = 0.0, None
        for j0 in cube_levels:
            log_hi = -2.0 * j0 * beta * ln2
            field = {}
            for j in tcf.levels:
                if j <= j0:
                    continue
                total = None
                for eps in detail_types(n):
                    I = win_m.window((eps, j), -2.0 * j * beta * ln2, log_hi)
                    total = I if total is None else total + I
                field[j] = _upsample(total.reshape((1 << j,) * n), spec.J)
            if not field:
                continue
            v3, c3 = _cube_sup_timeint(field, w_iii, lambda jj0, j: j > jj0,
                                       sp, spec, [j0], root)
            if v3 > best3:
                best3, cube3 = v3, c3
        part3 = PartResult(best3, cube3)

    quad_est = _quadrature_refinement_estimate(tcf, tp)
    return TentNormReport(part1, part2, part3, part4, seam_levels, quad_est)


def _cube_sup_timeint(field_by_level, level_weights, admit, sp, spec,
                      cube_levels, root) -> tuple[float, DyadicCube | None]:
    n, J, cell = spec.n, spec.J, spec.cell_volume
    best, best_cube = 0.0, None
    for j0 in cube_levels:
        levels = [j for j in field_by_level if admit(j0, j)]
        if not levels:
            continue
        agg = sum(level_weights[j] * field_by_level[j] for j in levels)
        integrand = agg**root
        sums = _block_reduce_sum(integrand**sp.p, j0, J)
        weight = 2.0 ** (-j0 * (sp.gamma2 - n / sp.p))
        vals = weight * (cell * sums) ** (1.0 / sp.p)
        flat = int(np.argmax(vals))
        v = float(vals.reshape(-1)[flat])
        if v > best:
            k = np.unravel_index(flat, vals.shape)
            best, best_cube = v, DyadicCube(j0, tuple(int(x) for x in k))
    return best, best_cube


def _quadrature_refinement_estimate(tcf: TimeCoeffField, tp: TentParams) -> float:
    """Relative change of a representative time integral when every other
    node is dropped; a proxy for the parts III/IV quadrature error."""
    q = tp.sp.q
    if q == np.inf or tcf.tg.L < 8:
        return 0.0
    key = max(tcf.detail, key=lambda k: float(np.max(np.abs(tcf.detail[k]))))
    eps, j = key
    arr = np.abs(tcf.detail[key].reshape(tcf.tg.L, -1))
    flat = int(np.argmax(np.max(arr, axis=0)))
    prof = arr[:, flat] ** q
    t = tcf.tg.nodes()
    w = tcf.tg.weights()
    mass = prof * t ** (q * tp.m_prime) * w
    full = float(np.sum(mass))
    halved = float(np.sum(mass[::2]) * 2.0)
    return abs(halved - full) / full if full > 0 else 0.0


def tent_norm_I(tcf, tp) -> float:
    return tent_norms(tcf, tp).part_i.value


def tent_norm_II(tcf, tp) -> float:
    return tent_norms(tcf, tp).part_ii.value


def tent_norm_III(tcf, tp, literal_exponent: bool = False) -> float:
    return tent_norms(tcf, tp, literal_exponent).part_iii.value


def tent_norm_IV(tcf, tp, literal_exponent: bool = False) -> float:
    return tent_norms(tcf, tp, literal_exponent).part_iv.value


# -- sup-type side norms ---------------------------------------------------------

def bloch_norm(tcf: TimeCoeffField, gamma1: float, tau: float, beta: float) -> float:
    """sup over indices of [ sup_{tau_t >= 1} (t 2^{2j b})^tau weight |a(t)|
    + sup_{tau_t <= 1} weight |a(t)| ] with weight 2^{j(n/2 + gamma1)}."""
    if tau <= 0:
        raise ParameterError(f"tau must be positive, got {tau}")
    n = tcf.spec.n
    nodes = tcf.tg.nodes()
    best = 0.0
    for (eps, j), arr in tcf.detail.items():
        taus = nodes * 2.0 ** (2.0 * beta * j)
        w = 2.0 ** (j * (n / 2.0 + gamma1))
        absb = np.abs(arr.reshape(tcf.tg.L, -1))
        hi = taus >= 1.0
        lo = taus <= 1.0
        per_k = np.zeros(absb.shape[1])
        if np.any(hi):
            per_k += np.max(absb[hi] * (taus[hi, None] ** tau), axis=0) * w
        if np.any(lo):
            per_k += np.max(absb[lo], axis=0) * w
        v = float(np.max(per_k)) if per_k.size else 0.0
        best = max(best, v)
    return best


@dataclass
class ScalingTimeField:
    """<a(t, .), Phi^0_{j,k}> per level j, sampled on a time grid."""

    tg: TimeGrid
    fields: dict[int, np.ndarray]   # j -> (L, 2^j, ...) complex


def scaling_time_field(basis, frames, tg: TimeGrid,
                       levels: Sequence[int] | None = None) -> ScalingTimeField:
    if levels is None:
        levels = range(basis.j_min, basis.j_max + 2)
    fields = {j: [] for j in levels}
    count = 0
    for frame in frames:
        for j in levels:
            fields[j].append(basis.scaling_coefficients(frame, j))
        count += 1
    if count != tg.L:
        raise ParameterError(f"expected {tg.L} frames, got {count}")
    return ScalingTimeField(tg, {j: np.stack(v) for j, v in fields.items()})


def t_linf_norm(stf: ScalingTimeField, gamma1: float, beta: float) -> float:
    """sup over t, j, k of t^{-gamma1/(2 beta)} 2^{nj/2} |<a(t,.), Phi^0_{j,k}>|."""
    nodes = stf.tg.nodes()
    best = 0.0
    for j, arr in stf.fields.items():
        n = arr.ndim - 1
        w = nodes ** (-gamma1 / (2.0 * beta)) * 2.0 ** (n * j / 2.0)
        flat = np.abs(arr.reshape(stf.tg.L, -1))
        v = float(np.max(flat * w[:, None])) if flat.size else 0.0
        best = max(best, v)
    return best


# -- embedding checks --------------------------------------------------------------

@dataclass
class EmbeddingReport:
    ratio_high: float      # regime t 2^{2j beta} >= 1, weight (t 2^{2jb})^m
    ratio_low: float       # regime t 2^{2j beta} <  1
    slope_high: float      # growth of the high-regime ratio in log tau
    flagged: bool
    combined_norm: float


def check_embeddings(tcf: TimeCoeffField, tp: TentParams,
                     report: TentNormReport | None = None,
                     slope_tolerance: float = 0.1) -> EmbeddingReport:
    """Coefficient bounds behind the tent-to-Bloch embedding, normalized by
    the combined tent norm.  A positive slope of the high-regime ratio in
    log(t 2^{2j beta}) flags profiles that violate the bound."""
    if report is None:
        report = tent_norms(tcf, tp)
    combined = report.combined
    n = tcf.spec.n
    nodes = tcf.tg.nodes()
    if combined <= 0:
        return EmbeddingReport(0.0, 0.0, 0.0, False, 0.0)
    sp, beta = tp.sp, tp.beta
    ratio_high = ratio_low = 0.0
    best_profile = None
    best_taus = None
    for (eps, j), arr in tcf.detail.items():
        taus = nodes * 2.0 ** (2.0 * beta * j)
        absb = np.abs(arr.reshape(tcf.tg.L, -1))
        w_high = 2.0 ** (-j * (sp.gamma2 - sp.gamma1 - n / 2.0))
        hi = taus >= 1.0
        lo = ~hi
        if np.any(hi):
            vals = absb[hi] * (taus[hi, None] ** tp.m) * w_high
            v = float(np.max(vals))
            if v > ratio_high:
                ratio_high = v
                kbest = int(np.argmax(np.max(vals, axis=0)))
                best_profile = absb[hi, kbest] * (taus[hi] ** tp.m) * w_high
                best_taus = taus[hi]
        if np.any(lo):
            w_low = 2.0 ** (j * (sp.gamma1 - sp.gamma2 + n / 2.0))
            ratio_low = max(ratio_low, float(np.max(absb[lo])) * w_low)
    ratio_high /= combined
    ratio_low /= combined
    slope = 0.0
    if best_profile is not None and best_profile.size > 3:
        keep = best_profile > 0
        if int(np.sum(keep)) > 3:
            slope = float(np.polyfit(
                np.log(best_taus[keep]), np.log(best_profile[keep]), 1)[0])
    flagged = slope > slope_tolerance
    if flagged:
        warnings.warn(
            f"high-regime coefficient ratio grows with t (slope {slope:.3f}); "
            "tent-to-Bloch bound violated", UserWarning, stacklevel=2)
    return EmbeddingReport(ratio_high, ratio_low, slope, flagged, combined)
