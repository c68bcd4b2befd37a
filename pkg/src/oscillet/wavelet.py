"""Periodized tensor-product orthonormal wavelet bases on the torus.

Two families:

* Meyer: built entirely in the discrete frequency domain.  The one-axis
  windows are the classical pair (scaling window, detail window with the
  half-sample phase); tensor types eps in {0,1}^n pick the window per axis.
  Detail levels run over j_min <= j <= J-2 so that the finest annulus
  (|m| <= (4/3) 2^j per axis) stays strictly below the Nyquist frequency
  2^{J-1}; the construction is then exact on the grid and the periodized
  family is orthonormal to rounding error.

* Daubechies: periodic filter-bank cascade from frozen standard filter
  coefficients (consumed, not derived).  The cascade is an exactly
  orthonormal transform of the sample vector scaled by 2^{-nJ/2}; detail
  levels run over j_min <= j <= J-1.

A coefficient field stores one dense array per (eps, j) detail block plus
the scaling block at j_min, which matches how every norm in this package
consumes coefficients.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from itertools import product
from typing import Iterator

import numpy as np

from .errors import (
    BandRangeError,
    BasisConstructionError,
    GridMismatchError,
    IndexOutOfBandError,
    ParameterError,
)
from .grid import GridFunction, GridSpec

TWO_PI = 2.0 * np.pi


# -- transition profiles -------------------------------------------------------

def polynomial_profile(x: np.ndarray) -> np.ndarray:
    """nu(x) = x^4 (35 - 84x + 70x^2 - 20x^3); C^3 matching, nu(x)+nu(1-x)=1."""
    x = np.clip(x, 0.0, 1.0)
    return x**4 * (35.0 + x * (-84.0 + x * (70.0 - 20.0 * x)))


def smooth_profile(x: np.ndarray) -> np.ndarray:
    """C-infinity profile a(x)/(a(x)+a(1-x)) with a(x) = exp(-1/x) on x > 0."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        ax = np.where(x > 0, np.exp(-1.0 / np.maximum(x, 1e-300)), 0.0)
        bx = np.where(x < 1, np.exp(-1.0 / np.maximum(1.0 - x, 1e-300)), 0.0)
    return ax / (ax + bx)


PROFILES = {"polynomial": polynomial_profile, "smooth": smooth_profile}


class MeyerWindow:
    """The one-axis window pair on the frequency line.

    psi0 is 1 on |xi| <= 2pi/3, supported in |xi| <= 4pi/3, even, in [0,1];
    omega = sqrt(psi0(xi/2)^2 - psi0(xi)^2) lives on 2pi/3 <= |xi| <= 8pi/3;
    psi1 = omega(xi) exp(-i xi / 2).
    """

    def __init__(self, profile: str = "polynomial"):
        if profile not in PROFILES:
            raise ParameterError(f"unknown profile {profile!r}")
        self.profile_name = profile
        self._nu = PROFILES[profile]

    def psi0(self, xi: np.ndarray) -> np.ndarray:
        a = np.abs(np.asarray(xi, dtype=float))
        out = np.zeros_like(a)
        out[a <= TWO_PI / 3] = 1.0
        trans = (a > TWO_PI / 3) & (a < 2 * TWO_PI / 3)
        out[trans] = np.cos(
            0.5 * np.pi * self._nu(3.0 * a[trans] / TWO_PI - 1.0)
        )
        return out

    def omega(self, xi: np.ndarray) -> np.ndarray:
        diff = self.psi0(np.asarray(xi) / 2.0) ** 2 - self.psi0(xi) ** 2
        return np.sqrt(np.maximum(diff, 0.0))

    def psi1(self, xi: np.ndarray) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        return self.omega(xi) * np.exp(-0.5j * xi)

    def axis_window(self, bit: int, xi: np.ndarray) -> np.ndarray:
        return self.psi1(xi) if bit else self.psi0(xi).astype(complex)


# -- index set and coefficient container ---------------------------------------

@dataclass(frozen=True)
class WaveletIndex:
    eps: tuple[int, ...]
    j: int
    k: tuple[int, ...]


def detail_types(n: int) -> list[tuple[int, ...]]:
    """E_n = {0,1}^n minus the all-zero type, in lexicographic order."""
    return [e for e in product((0, 1), repeat=n) if any(e)]


class CoeffField:
    """Dense-per-level wavelet coefficients: detail blocks plus one scaling block."""

    def __init__(self, spec: GridSpec, family: str, j_min: int, j_max: int):
        self.spec = spec
        self.family = family
        self.j_min = j_min
        self.j_max = j_max
        self.detail: dict[tuple[tuple[int, ...], int], np.ndarray] = {}
        for j in range(j_min, j_max + 1):
            shape = (1 << j,) * spec.n
            for eps in detail_types(spec.n):
                self.detail[(eps, j)] = np.zeros(shape, dtype=complex)
        self.scaling = np.zeros((1 << j_min,) * spec.n, dtype=complex)

    @property
    def levels(self) -> range:
        return range(self.j_min, self.j_max + 1)

    def copy(self) -> "CoeffField":
        out = CoeffField(self.spec, self.family, self.j_min, self.j_max)
        for key, arr in self.detail.items():
            out.detail[key] = arr.copy()
        out.scaling = self.scaling.copy()
        return out

    def zeros_like(self) -> "CoeffField":
        return CoeffField(self.spec, self.family, self.j_min, self.j_max)

    def scaled(self, factor: complex) -> "CoeffField":
        out = self.copy()
        for key in out.detail:
            out.detail[key] *= factor
        out.scaling *= factor
        return out

    def __add__(self, other: "CoeffField") -> "CoeffField":
        self._check(other)
        out = self.copy()
        for key in out.detail:
            out.detail[key] += other.detail[key]
        out.scaling += other.scaling
        return out

    def _check(self, other: "CoeffField"):
        if (other.spec, other.j_min, other.j_max) != (self.spec, self.j_min, self.j_max):
            raise GridMismatchError("coefficient fields on different bands")

    def get(self, idx: WaveletIndex) -> complex:
        if not any(idx.eps):
            if idx.j != self.j_min:
                raise IndexOutOfBandError(idx)
            return complex(self.scaling[idx.k])
        try:
            return complex(self.detail[(idx.eps, idx.j)][idx.k])
        except KeyError:
            raise IndexOutOfBandError(idx) from None

    def set(self, idx: WaveletIndex, value: complex) -> None:
        if not any(idx.eps):
            if idx.j != self.j_min:
                raise IndexOutOfBandError(idx)
            self.scaling[idx.k] = value
        else:
            try:
                self.detail[(idx.eps, idx.j)][idx.k] = value
            except KeyError:
                raise IndexOutOfBandError(idx) from None

    def indices(self, include_scaling: bool = True) -> Iterator[WaveletIndex]:
        if include_scaling:
            for flat in range(self.scaling.size):
                k = np.unravel_index(flat, self.scaling.shape)
                yield WaveletIndex((0,) * self.spec.n, self.j_min, tuple(map(int, k)))
        for (eps, j), arr in self.detail.items():
            for flat in range(arr.size):
                k = np.unravel_index(flat, arr.shape)
                yield WaveletIndex(eps, j, tuple(map(int, k)))

    def energy(self) -> float:
        """sum |coeff|^2 over every stored index (Parseval partner of L^2)."""
        total = float(np.sum(np.abs(self.scaling) ** 2))
        for arr in self.detail.values():
            total += float(np.sum(np.abs(arr) ** 2))
        return total

    def max_abs(self) -> float:
        vals = [np.max(np.abs(self.scaling))] if self.scaling.size else []
        vals += [np.max(np.abs(a)) for a in self.detail.values() if a.size]
        return float(max(vals)) if vals else 0.0


# -- Meyer basis ---------------------------------------------------------------

def _fold(arr: np.ndarray, L: int) -> np.ndarray:
    """Fold an FFT-ordered array onto residues mod L along every axis."""
    n = arr.ndim
    N = arr.shape[0]
    reshaped = arr.reshape(sum(((N // L, L),) * n, ()))
    return reshaped.sum(axis=tuple(range(0, 2 * n, 2)))


def _tile(arr: np.ndarray, N: int) -> np.ndarray:
    """Inverse of the fold indexing: value at FFT index i is arr[i mod L]."""
    L = arr.shape[0]
    return np.tile(arr, (N // L,) * arr.ndim)


class MeyerBasis:
    """Periodized tensor Meyer basis, realized as per-level frequency multipliers."""

    family = "meyer"

    def __init__(self, spec: GridSpec, profile: str = "polynomial"):
        if spec.J < spec.j_min + 2:
            raise BasisConstructionError(
                f"Meyer band needs J >= j_min + 2 (finest annulus below Nyquist); "
                f"got J={spec.J}, j_min={spec.j_min}"
            )
        self.spec = spec
        self.window = MeyerWindow(profile)
        self.j_min = spec.j_min
        self.j_max = spec.J - 2
        m = spec.frequencies()
        # one-axis windows per level, FFT order
        self._w0 = {
            j: self.window.axis_window(0, TWO_PI * m / (1 << j))
            for j in range(self.j_min, self.j_max + 2)
        }
        self._w1 = {
            j: self.window.axis_window(1, TWO_PI * m / (1 << j))
            for j in range(self.j_min, self.j_max + 1)
        }

    @property
    def detail_levels(self) -> range:
        return range(self.j_min, self.j_max + 1)

    def detail_type_list(self) -> list[tuple[int, ...]]:
        return detail_types(self.spec.n)

    def _tensor_window(self, eps: tuple[int, ...], j: int) -> np.ndarray:
        axes = [self._w1[j] if bit else self._w0[j] for bit in eps]
        out = axes[0]
        for w in axes[1:]:
            out = np.multiply.outer(out, w)
        return out

    def fourier(self, f: GridFunction) -> np.ndarray:
        if f.spec != self.spec:
            raise GridMismatchError("grid function does not match basis grid")
        return np.fft.fftn(f.data) / self.spec.size

    def from_fourier(self, F: np.ndarray) -> GridFunction:
        return GridFunction(self.spec, np.fft.ifftn(F) * self.spec.size)

    def _coeffs_from_fourier(self, F: np.ndarray, eps, j) -> np.ndarray:
        W = self._tensor_window(eps, j)
        folded = _fold(F * np.conj(W), 1 << j)
        return 2.0 ** (self.spec.n * j / 2.0) * np.fft.ifftn(folded)

    def _fourier_from_coeffs(self, c: np.ndarray, eps, j) -> np.ndarray:
        W = self._tensor_window(eps, j)
        C = np.fft.fftn(c)
        return 2.0 ** (-self.spec.n * j / 2.0) * W * _tile(C, self.spec.samples_per_axis)

    def analyze(self, f: GridFunction) -> CoeffField:
        F = self.fourier(f)
        out = CoeffField(self.spec, self.family, self.j_min, self.j_max)
        for j in self.detail_levels:
            for eps in self.detail_type_list():
                out.detail[(eps, j)] = self._coeffs_from_fourier(F, eps, j)
        out.scaling = self._coeffs_from_fourier(F, (0,) * self.spec.n, self.j_min)
        return out

    def synthesize(self, c: CoeffField) -> GridFunction:
        if c.spec != self.spec or c.j_min != self.j_min or c.j_max != self.j_max:
            raise IndexOutOfBandError("coefficient field does not match basis band")
        F = np.zeros(self.spec.shape, dtype=complex)
        for (eps, j), arr in c.detail.items():
            if np.any(arr):
                F += self._fourier_from_coeffs(arr, eps, j)
        if np.any(c.scaling):
            F += self._fourier_from_coeffs(c.scaling, (0,) * self.spec.n, self.j_min)
        return self.from_fourier(F)

    def scaling_coefficients(self, f: GridFunction, j: int) -> np.ndarray:
        """<f, Phi^0_{j,k}> for all k at one level (levels up to j_max + 1)."""
        if not (self.j_min <= j <= self.j_max + 1):
            raise BandRangeError(f"scaling level {j} outside [{self.j_min}, {self.j_max + 1}]")
        return self._coeffs_from_fourier(self.fourier(f), (0,) * self.spec.n, j)

    def project(self, f: GridFunction, j: int, kind: str) -> GridFunction:
        """P_j (scaling space at level j) or Q_j (detail space at level j)."""
        F = self.fourier(f)
        if kind == "P":
            if not (self.j_min <= j <= self.j_max + 1):
                raise BandRangeError(f"P level {j} outside [{self.j_min}, {self.j_max + 1}]")
            eps0 = (0,) * self.spec.n
            return self.from_fourier(
                self._fourier_from_coeffs(self._coeffs_from_fourier(F, eps0, j), eps0, j)
            )
        if kind == "Q":
            if not (self.j_min <= j <= self.j_max):
                raise BandRangeError(f"Q level {j} outside [{self.j_min}, {self.j_max}]")
            G = np.zeros_like(F)
            for eps in self.detail_type_list():
                G += self._fourier_from_coeffs(
                    self._coeffs_from_fourier(F, eps, j), eps, j
                )
            return self.from_fourier(G)
        raise ParameterError(f"kind must be 'P' or 'Q', got {kind!r}")

    def basis_function(self, idx: WaveletIndex) -> GridFunction:
        c = CoeffField(self.spec, self.family, self.j_min, self.j_max)
        c.set(idx, 1.0)
        return self.synthesize(c)

    def band_cap(self) -> int:
        """Largest |m| per axis on which the truncated ladder resolves exactly."""
        return (1 << (self.j_max + 1)) // 3

    def band_limit(self, f: GridFunction) -> GridFunction:
        """Restrict f to frequencies the basis reproduces exactly (round-trip safe)."""
        F = self.fourier(f)
        m = self.spec.frequencies()
        keep = np.abs(m) <= self.band_cap()
        mask = keep
        for _ in range(self.spec.n - 1):
            mask = np.multiply.outer(mask, keep)
        return self.from_fourier(F * mask)


# -- Daubechies basis ----------------------------------------------------------

# Standard orthonormal lowpass filters (minimal phase), sum h = sqrt(2).
DAUBECHIES_FILTERS = {
    2: [0.48296291314453414, 0.8365163037378079, 0.22414386804201338,
        -0.12940952255126038],
    3: [0.3326705529500826, 0.8068915093110926, 0.4598775021184916,
        -0.1350110200102546, -0.08544127388202666, 0.035226291885709536],
    4: [0.2303778133088965, 0.7148465705529156, 0.6308807679298589,
        -0.027983769416859854, -0.18703481171909308, 0.030841381835560764,
        0.0328830116668852, -0.010597401785069032],
    6: [0.11154074335010946, 0.4946238903984531, 0.7511339080210954,
        0.3152503517091976, -0.22626469396543982, -0.12976686756726194,
        0.09750160558732305, 0.027522865530305727, -0.03158203931748603,
        0.0005538422011614961, 0.004777257510945511, -0.0010773010853084796],
    8: [0.05441584224310401, 0.31287159091429997, 0.6756307362972898,
        0.5853546836542067, -0.015829105256349306, -0.2840155429615469,
        0.00047248457391328277, 0.12874742662047846, -0.017369301001807546,
        -0.04408825393079475, 0.013981027917398282, 0.008746094047405777,
        -0.004870352993451574, -0.0003917403733769470, 0.0006754494064505694,
        -0.00011747678412476953],
}


def _dwt_axis(a: np.ndarray, filt: np.ndarray, axis: int) -> np.ndarray:
    """Periodic convolution-decimation along one axis: out[l] = sum_m filt[m] a[2l+m]."""
    a = np.moveaxis(a, axis, 0)
    M = a.shape[0]
    idx = (2 * np.arange(M // 2)[:, None] + np.arange(len(filt))[None, :]) % M
    out = np.tensordot(filt, a[idx], axes=(0, 1))
    return np.moveaxis(out, 0, axis)


def _idwt_axis(lo: np.ndarray, hi: np.ndarray, h: np.ndarray, g: np.ndarray,
               axis: int) -> np.ndarray:
    """Adjoint of _dwt_axis: zero-stuff and filter, periodic."""
    lo = np.moveaxis(lo, axis, 0)
    hi = np.moveaxis(hi, axis, 0)
    M = 2 * lo.shape[0]
    up_lo = np.zeros((M,) + lo.shape[1:], dtype=complex)
    up_hi = np.zeros_like(up_lo)
    up_lo[0::2] = lo
    up_hi[0::2] = hi
    out = np.zeros_like(up_lo)
    for m, (hm, gm) in enumerate(zip(h, g)):
        out += hm * np.roll(up_lo, m, axis=0) + gm * np.roll(up_hi, m, axis=0)
    return np.moveaxis(out, 0, axis)


class DaubechiesBasis:
    """Periodic orthonormal Daubechies cascade; m0 vanishing moments."""

    family = "daubechies"

    def __init__(self, spec: GridSpec, m0: int = 6):
        if m0 not in DAUBECHIES_FILTERS:
            raise ParameterError(
                f"no frozen filter for m0={m0}; available: {sorted(DAUBECHIES_FILTERS)}"
            )
        self.spec = spec
        self.m0 = m0
        self.h = np.asarray(DAUBECHIES_FILTERS[m0])
        # quadrature-mirror highpass g[m] = (-1)^m h[L-1-m]
        L = len(self.h)
        self.g = ((-1.0) ** np.arange(L)) * self.h[::-1]
        self.j_min = spec.j_min
        self.j_max = spec.J - 1
        # support exponent M: filter length 2 m0 fits in [-2^M, 2^M]
        self.support_exponent = int(np.ceil(np.log2(2 * m0)))

    @property
    def detail_levels(self) -> range:
        return range(self.j_min, self.j_max + 1)

    def detail_type_list(self) -> list[tuple[int, ...]]:
        return detail_types(self.spec.n)

    def analyze(self, f: GridFunction) -> CoeffField:
        if f.spec != self.spec:
            raise GridMismatchError("grid function does not match basis grid")
        out = CoeffField(self.spec, self.family, self.j_min, self.j_max)
        approx = f.data * 2.0 ** (-self.spec.n * self.spec.J / 2.0)
        for j in range(self.j_max, self.j_min - 1, -1):
            blocks = {(): approx}
            for axis in range(self.spec.n):
                nxt = {}
                for eps_prefix, arr in blocks.items():
                    nxt[eps_prefix + (0,)] = _dwt_axis(arr, self.h, axis)
                    nxt[eps_prefix + (1,)] = _dwt_axis(arr, self.g, axis)
                blocks = nxt
            approx = blocks[(0,) * self.spec.n]
            for eps in self.detail_type_list():
                out.detail[(eps, j)] = blocks[eps]
        out.scaling = approx
        return out

    def synthesize(self, c: CoeffField) -> GridFunction:
        if c.spec != self.spec or c.j_min != self.j_min or c.j_max != self.j_max:
            raise IndexOutOfBandError("coefficient field does not match basis band")
        approx = c.scaling.astype(complex)
        for j in range(self.j_min, self.j_max + 1):
            blocks = {(0,) * self.spec.n: approx}
            for eps in self.detail_type_list():
                blocks[eps] = c.detail[(eps, j)]
            for axis in range(self.spec.n - 1, -1, -1):
                nxt = {}
                for pre in set(key[:axis] for key in blocks):
                    lo = blocks[pre + (0,)]
                    hi = blocks[pre + (1,)]
                    nxt[pre] = _idwt_axis(lo, hi, self.h, self.g, axis)
                blocks = nxt
            approx = blocks[()]
        data = approx * 2.0 ** (self.spec.n * self.spec.J / 2.0)
        return GridFunction(self.spec, data)

    def basis_function(self, idx: WaveletIndex) -> GridFunction:
        c = CoeffField(self.spec, self.family, self.j_min, self.j_max)
        c.set(idx, 1.0)
        return self.synthesize(c)

    def project(self, f: GridFunction, j: int, kind: str) -> GridFunction:
        c = self.analyze(f)
        out = c.zeros_like()
        if kind == "P":
            if not (self.j_min <= j <= self.j_max + 1):
                raise BandRangeError(f"P level {j} outside band")
            out.scaling = c.scaling.copy()
            for (eps, jj) in c.detail:
                if jj < j:
                    out.detail[(eps, jj)] = c.detail[(eps, jj)].copy()
        elif kind == "Q":
            if not (self.j_min <= j <= self.j_max):
                raise BandRangeError(f"Q level {j} outside band")
            for eps in self.detail_type_list():
                out.detail[(eps, j)] = c.detail[(eps, j)].copy()
        else:
            raise ParameterError(f"kind must be 'P' or 'Q', got {kind!r}")
        return self.synthesize(out)

    def band_limit(self, f: GridFunction) -> GridFunction:
        return GridFunction(self.spec, f.data.copy())


def build_basis(family: str, spec: GridSpec, profile: str = "polynomial",
                m0: int = 6):
    """Factory for the two supported families."""
    family = family.lower()
    if family == "meyer":
        return MeyerBasis(spec, profile=profile)
    if family == "daubechies":
        return DaubechiesBasis(spec, m0=m0)
    raise ParameterError(f"unknown wavelet family {family!r}")


# -- projections as free functions (spec operation names) ----------------------

def analyze(basis, f: GridFunction) -> CoeffField:
    return basis.analyze(f)


def synthesize(basis, c: CoeffField) -> GridFunction:
    return basis.synthesize(c)


def project(basis, f: GridFunction, j: int, kind: str) -> GridFunction:
    return basis.project(f, j, kind)


# -- paraproduct ---------------------------------------------------------------

@dataclass
class ParaproductParts:
    """The five relative-frequency blocks of a pointwise product."""

    low_high: GridFunction
    diagonal: GridFunction
    band_up: GridFunction      # 0 < j - j' <= 3
    band_down: GridFunction    # 0 < j' - j <= 3
    high_low: GridFunction

    def total(self) -> GridFunction:
        return (
            self.low_high + self.diagonal + self.band_up
            + self.band_down + self.high_low
        )

    def as_list(self) -> list[GridFunction]:
        return [self.low_high, self.diagonal, self.band_up,
                self.band_down, self.high_low]


def paraproduct(basis, u: GridFunction, v: GridFunction) -> ParaproductParts:
    """Split u*v by relative frequency position of the factors.

    The scaling block at j_min stands in for every level below the band;
    scaling x detail products ride with the low-high / high-low sums and the
    scaling x scaling product is split evenly between those two parts, which
    keeps the five-part sum equal to u*v for band-limited inputs.
    """
    if u.spec != basis.spec or v.spec != basis.spec:
        raise GridMismatchError("inputs do not match basis grid")
    j_lo, j_hi = basis.j_min, basis.j_max
    if j_hi < j_lo + 3:
        raise ParameterError(
            f"paraproduct needs at least four detail levels; band is [{j_lo}, {j_hi}]"
        )
    Qu = {j: basis.project(u, j, "Q") for j in range(j_lo, j_hi + 1)}
    Qv = {j: basis.project(v, j, "Q") for j in range(j_lo, j_hi + 1)}
    Su = basis.project(u, j_lo, "P")
    Sv = basis.project(v, j_lo, "P")

    # running P_j u built from the ladder P_{j+1} = P_j + Q_j
    Pu = {j_lo: Su}
    Pv = {j_lo: Sv}
    for j in range(j_lo, j_hi):
        Pu[j + 1] = Pu[j] + Qu[j]
        Pv[j + 1] = Pv[j] + Qv[j]

    zero = GridFunction.zeros(basis.spec)
    low_high, diagonal, band_up, band_down, high_low = (
        zero.copy(), zero.copy(), zero.copy(), zero.copy(), zero.copy(),
    )
    for j in range(j_lo, j_hi + 1):
        low_high = low_high + Pu[max(j - 3, j_lo)] * Qv[j]
        high_low = high_low + Qu[j] * Pv[max(j - 3, j_lo)]
        diagonal = diagonal + Qu[j] * Qv[j]
        for jp in range(max(j_lo, j - 3), j):
            band_up = band_up + Qu[j] * Qv[jp]
        for jp in range(j + 1, min(j_hi, j + 3) + 1):
            band_down = band_down + Qu[j] * Qv[jp]
    cross = Su * Sv
    low_high = low_high + 0.5 * cross
    high_low = high_low + 0.5 * cross
    return ParaproductParts(low_high, diagonal, band_up, band_down, high_low)


# -- serialization --------------------------------------------------------------

def coeff_field_to_json(c: CoeffField) -> str:
    records = []
    for idx in c.indices():
        val = c.get(idx)
        if val != 0:
            records.append({
                "eps": list(idx.eps), "j": idx.j, "k": list(idx.k),
                "re": val.real, "im": val.imag,
            })
    doc = {
        "family": c.family,
        "n": c.spec.n, "J": c.spec.J,
        "j_min": c.j_min, "j_max": c.j_max,
        "coefficients": records,
    }
    return json.dumps(doc, sort_keys=True)


def coeff_field_from_json(text: str) -> CoeffField:
    doc = json.loads(text)
    spec = GridSpec(n=doc["n"], J=doc["J"], j_min=doc["j_min"])
    c = CoeffField(spec, doc["family"], doc["j_min"], doc["j_max"])
    for rec in doc["coefficients"]:
        idx = WaveletIndex(tuple(rec["eps"]), rec["j"], tuple(rec["k"]))
        c.set(idx, rec["re"] + 1j * rec["im"])
    return c


def write_coeff_field(c: CoeffField, path: str) -> None:
    """Binary layout: grid header (flag byte 2) + band + per-block payloads."""
    with open(path, "wb") as fh:
        fh.write(b"OSLT")
        fh.write(struct.pack("<IIIB", 1, c.spec.n, c.spec.J, 2))
        fam = c.family.encode()
        fh.write(struct.pack("<II", c.j_min, c.j_max))
        fh.write(struct.pack("<I", len(fam)))
        fh.write(fam)
        blocks = [(((0,) * c.spec.n), c.j_min, c.scaling)]
        blocks += [(eps, j, arr) for (eps, j), arr in sorted(c.detail.items())]
        fh.write(struct.pack("<I", len(blocks)))
        for eps, j, arr in blocks:
            fh.write(struct.pack("<I", j))
            fh.write(bytes(eps))
            flat = arr.reshape(-1)
            pairs = np.empty((flat.size, 2), dtype="<f8")
            pairs[:, 0] = flat.real
            pairs[:, 1] = flat.imag
            fh.write(pairs.tobytes())


def read_coeff_field(path: str) -> CoeffField:
    with open(path, "rb") as fh:
        if fh.read(4) != b"OSLT":
            raise ParameterError("bad magic")
        _, n, J, flag = struct.unpack("<IIIB", fh.read(13))
        if flag != 2:
            raise ParameterError("not a coefficient-field file")
        j_min, j_max = struct.unpack("<II", fh.read(8))
        (flen,) = struct.unpack("<I", fh.read(4))
        family = fh.read(flen).decode()
        spec = GridSpec(n=n, J=J, j_min=j_min)
        c = CoeffField(spec, family, j_min, j_max)
        (nblocks,) = struct.unpack("<I", fh.read(4))
        for _ in range(nblocks):
            (j,) = struct.unpack("<I", fh.read(4))
            eps = tuple(fh.read(n))
            count = (1 << j) ** n
            raw = np.frombuffer(fh.read(16 * count), dtype="<f8").reshape(-1, 2)
            arr = (raw[:, 0] + 1j * raw[:, 1]).reshape((1 << j,) * n)
            if any(eps):
                c.detail[(eps, j)] = arr
            else:
                c.scaling = arr
        return c
