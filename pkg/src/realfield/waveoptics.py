"""Scalar wave optics in one transverse dimension.

A unit plane wave meets an absorbing wall with slits; the field on a
screen at distance ``L`` is the paraxial Fresnel integral

    U(x) = (i lambda L)^(-1/2) * sum_slits  int exp(i k (x - x')^2 / (2 L)) dx'

evaluated by Gauss-Legendre quadrature over each open slit.  The field is
a pure function of the geometry; sampling hits from it never modifies it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize

from .errors import AllClosedError, BadParamsError, GridTooCoarseError, ZeroFieldError
from .rng import RngStream, categorical, counter_uniform
from .states import FieldState


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ApertureMask:
    slit_centers: tuple[float, ...]
    slit_width: float
    open: tuple[bool, ...] | None = None

    def __post_init__(self):
        centers = tuple(float(c) for c in self.slit_centers)
        flags = tuple(bool(f) for f in (self.open if self.open is not None
                                        else [True] * len(centers)))
        if not centers:
            raise BadParamsError("mask needs at least one slit")
        if self.slit_width <= 0:
            raise BadParamsError("slit width must be positive")
        if len(set(centers)) != len(centers):
            raise BadParamsError("slit centers must be distinct")
        if len(flags) != len(centers):
            raise BadParamsError("one open flag per slit")
        object.__setattr__(self, "slit_centers", centers)
        object.__setattr__(self, "open", flags)

    @property
    def open_centers(self) -> tuple[float, ...]:
        return tuple(c for c, f in zip(self.slit_centers, self.open) if f)

    @property
    def separation(self) -> float | None:
        """Smallest centre-to-centre distance, ``None`` for a single slit."""
        c = sorted(self.slit_centers)
        if len(c) < 2:
            return None
        return min(b - a for a, b in zip(c, c[1:]))

    def only(self, index: int) -> "ApertureMask":
        """Same wall with every slit but ``index`` blocked."""
        flags = [i == index for i in range(len(self.slit_centers))]
        return ApertureMask(self.slit_centers, self.slit_width, tuple(flags))

    def transmitted_power(self) -> float:
        """Power passing the wall for a unit-intensity plane wave."""
        return self.slit_width * len(self.open_centers)


@dataclass(frozen=True)
class Grid:
    halfwidth: float
    n_points: int

    @property
    def positions(self) -> np.ndarray:
        return np.linspace(-self.halfwidth, self.halfwidth, self.n_points)

    @property
    def spacing(self) -> float:
        return 2 * self.halfwidth / (self.n_points - 1)


@dataclass(frozen=True)
class ScreenField:
    positions: np.ndarray
    amplitude: np.ndarray
    wavelength: float
    distance: float

    def __post_init__(self):
        object.__setattr__(self, "positions", _frozen(self.positions))
        object.__setattr__(self, "amplitude", _frozen(self.amplitude, complex))

    @property
    def intensity(self) -> np.ndarray:
        return self.amplitude.real ** 2 + self.amplitude.imag ** 2

    @property
    def spacing(self) -> float:
        return float(self.positions[1] - self.positions[0])

    def power(self) -> float:
        """Integrated intensity over the grid (trapezoidal)."""
        return float(np.trapezoid(self.intensity, self.positions))

    def to_bytes(self) -> bytes:
        head = np.array([self.wavelength, self.distance], dtype="<f8").tobytes()
        return (head + self.positions.astype("<f8").tobytes()
                + self.amplitude.astype("<c16").tobytes())


def _quadrature_order(width: float, k: float, distance: float, reach: float) -> int:
    # total quadratic-phase swing across one slit, seen from the farthest point
    swing = k * width * (reach + width) / distance
    return int(math.ceil(swing)) + 24


def shape_mode(mask: ApertureMask, wavelength: float, distance: float, grid: Grid,
               nodes: int | None = None) -> ScreenField:
    """Field on the screen produced by a unit plane wave through ``mask``."""
    if wavelength <= 0 or distance <= 0:
        raise BadParamsError("wavelength and distance must be positive")
    if grid.n_points < 2:
        raise BadParamsError("grid needs at least two points")
    centers = mask.open_centers
    if not centers:
        raise AllClosedError("every slit is closed")
    sep = mask.separation
    feature = wavelength * distance / (sep if sep is not None else mask.slit_width)
    if grid.spacing > feature / 8:
        raise GridTooCoarseError(
            f"grid spacing {grid.spacing:.3e} m exceeds 1/8 of the fringe scale {feature:.3e} m")

    k = 2 * math.pi / wavelength
    x = grid.positions
    reach = grid.halfwidth + max(abs(c) for c in centers)
    n = nodes or _quadrature_order(mask.slit_width, k, distance, reach)
    t, w = np.polynomial.legendre.leggauss(n)
    half = mask.slit_width / 2
    u = np.zeros_like(x, dtype=complex)
    for c in centers:
        xp = c + half * t
        phase = k * (x[:, None] - xp[None, :]) ** 2 / (2 * distance)
        u += (np.exp(1j * phase) @ w) * half
    u /= np.sqrt(1j * wavelength * distance)
    return ScreenField(x, u, wavelength, distance)


# --------------------------------------------------------------------------
# probability over screen bins
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ScreenPdf:
    """Probability mass per screen bin."""

    bin_edges: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "bin_edges", _frozen(self.bin_edges))
        object.__setattr__(self, "probs", _frozen(self.probs))
        if len(self.bin_edges) != len(self.probs) + 1:
            raise BadParamsError("need one more edge than bins")

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.bin_edges)


@dataclass(frozen=True)
class ScreenHistogram:
    bin_edges: np.ndarray
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def cell_edges(positions: np.ndarray) -> np.ndarray:
    """Bin edges centred on uniformly spaced grid points."""
    dx = positions[1] - positions[0]
    return np.concatenate([positions - dx / 2, [positions[-1] + dx / 2]])


def screen_pdf(screen: ScreenField) -> ScreenPdf:
    """Detection probability per grid cell, proportional to |U|^2."""
    inten = screen.intensity
    total = inten.sum()
    if not total > 0:
        raise ZeroFieldError("field vanishes everywhere on the screen")
    return ScreenPdf(cell_edges(screen.positions), inten / total)


def _hits_from_uniforms(pdf: ScreenPdf, u_bin, u_jitter) -> np.ndarray:
    idx = categorical(pdf.probs, u_bin)
    left = pdf.bin_edges[idx]
    return left + np.asarray(u_jitter) * (pdf.bin_edges[idx + 1] - left)


def sample_hits(pdf: ScreenPdf, n: int, rng: RngStream) -> np.ndarray:
    """``n`` i.i.d. screen positions: a bin drawn from ``pdf``, then a
    uniform position inside it.  Hit ``j`` uses draws ``2j`` and ``2j+1``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == 0:
        return np.empty(0)
    u = rng.uniform(2 * n)
    return _hits_from_uniforms(pdf, u[0::2], u[1::2])


def sample_hits_per_trial(pdf: ScreenPdf, trial_ids, seed: int, domain: int = 0) -> np.ndarray:
    """One hit per trial, each from its own stream (draws 0 and 1)."""
    ids = np.asarray(trial_ids)
    if ids.size == 0:
        return np.empty(0)
    return _hits_from_uniforms(pdf, counter_uniform(seed, ids, 0, domain),
                               counter_uniform(seed, ids, 1, domain))


def histogram(positions, bin_edges) -> ScreenHistogram:
    edges = np.asarray(bin_edges, dtype=float)
    idx = np.searchsorted(edges, np.asarray(positions, dtype=float), side="right") - 1
    idx = np.clip(idx, 0, len(edges) - 2)
    counts = np.bincount(idx, minlength=len(edges) - 1)
    return ScreenHistogram(edges, counts)


# --------------------------------------------------------------------------
# pattern analysis
# --------------------------------------------------------------------------

def local_maxima(values: np.ndarray) -> np.ndarray:
    """Indices of strict interior local maxima."""
    v = np.asarray(values)
    return np.flatnonzero((v[1:-1] > v[:-2]) & (v[1:-1] >= v[2:])) + 1


def local_minima(values: np.ndarray) -> np.ndarray:
    return local_maxima(-np.asarray(values))


def refine_extrema(positions: np.ndarray, values: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Parabolic interpolation of extremum positions between grid points."""
    x = np.asarray(positions)
    y = np.asarray(values)
    ym, y0, yp = y[idx - 1], y[idx], y[idx + 1]
    denom = ym - 2 * y0 + yp
    with np.errstate(divide="ignore", invalid="ignore"):
        shift = np.where(denom != 0, 0.5 * (ym - yp) / denom, 0.0)
    return x[idx] + shift * (x[1] - x[0])


def fringe_peaks(screen: ScreenField) -> np.ndarray:
    """Grid positions of intensity maxima."""
    return screen.positions[local_maxima(screen.intensity)]


def fringe_factor_peaks(mask: ApertureMask, wavelength: float, distance: float,
                        grid: Grid, screen: ScreenField | None = None) -> np.ndarray:
    """Refined maxima of the interference factor I_all / sum_i I_i.

    Dividing out the single-slit envelope removes the inward pull that
    the envelope exerts on raw intensity maxima.
    """
    if screen is None:
        screen = shape_mode(mask, wavelength, distance, grid)
    singles = sum(shape_mode(mask.only(i), wavelength, distance, grid).intensity
                  for i, f in enumerate(mask.open) if f)
    with np.errstate(divide="ignore", invalid="ignore"):
        factor = np.where(singles > 0, screen.intensity / singles, 0.0)
    idx = local_maxima(factor)
    return refine_extrema(screen.positions, factor, idx)


def fringe_spacing(positions: np.ndarray) -> float:
    """Mean distance between consecutive fringe positions."""
    p = np.sort(np.asarray(positions))
    if len(p) < 2:
        raise ValueError("need at least two fringes")
    return float((p[-1] - p[0]) / (len(p) - 1))


def total_variation(p, q) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return 0.5 * float(np.abs(p / p.sum() - q / q.sum()).sum())


def incoherent_sum_pdf(mask: ApertureMask, wavelength: float, distance: float,
                       grid: Grid) -> ScreenPdf:
    """Renormalized sum of the one-slit-at-a-time patterns."""
    inten = sum(shape_mode(mask.only(i), wavelength, distance, grid).intensity
                for i, f in enumerate(mask.open) if f)
    return ScreenPdf(cell_edges(grid.positions), inten / inten.sum())


def histogram_visibility(counts) -> float:
    c = np.asarray(counts, dtype=float)
    hi, lo = c.max(), c.min()
    if hi + lo == 0:
        return 0.0
    return float((hi - lo) / (hi + lo))


# --------------------------------------------------------------------------
# two crossing plane waves (independent sources)
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TwoBeamPattern:
    """Intensity of two plane waves crossing at a small angle.

    Beam 1 carries transverse wavenumber ``-dk/2`` and beam 2 ``+dk/2``,
    so with amplitudes ``(1, e^{i phase})/sqrt2`` the density is
    ``(1 + cos(dk x + phase)) / W`` over a window of whole fringe periods.
    """

    amp1: complex
    amp2: complex
    delta_k: float
    periods: int = 2

    @property
    def period(self) -> float:
        return 2 * math.pi / self.delta_k

    @property
    def window(self) -> tuple[float, float]:
        h = self.periods * self.period / 2
        return -h, h

    @property
    def visibility(self) -> float:
        a, b = abs(self.amp1) ** 2, abs(self.amp2) ** 2
        return 2 * abs(self.amp1 * self.amp2) / (a + b)

    @property
    def phase(self) -> float:
        return float(np.angle(self.amp2 * np.conj(self.amp1)))

    def _antiderivative(self, x):
        a, b = abs(self.amp1) ** 2, abs(self.amp2) ** 2
        c = np.conj(self.amp1) * self.amp2
        return (a + b) * x + 2 * np.real(c * np.exp(1j * self.delta_k * x) / (1j * self.delta_k))

    def __call__(self, x) -> np.ndarray:
        """Normalized probability density at ``x`` (zero outside the window)."""
        x = np.asarray(x, dtype=float)
        field_ = self.amp1 * np.exp(-0.5j * self.delta_k * x) + self.amp2 * np.exp(0.5j * self.delta_k * x)
        lo, hi = self.window
        norm = self._antiderivative(hi) - self._antiderivative(lo)
        dens = np.abs(field_) ** 2 / norm
        return np.where((x >= lo) & (x <= hi), dens, 0.0)

    def pdf(self, bins: int) -> ScreenPdf:
        """Exact probability mass of ``bins`` equal cells across the window."""
        lo, hi = self.window
        edges = np.linspace(lo, hi, bins + 1)
        mass = np.diff(self._antiderivative(edges))
        return ScreenPdf(edges, np.clip(mass, 0, None) / mass.sum())

    @classmethod
    def from_field(cls, terminal: FieldState, delta_k: float, periods: int = 2,
                   labels: Sequence = None) -> "TwoBeamPattern":
        labels = list(labels or terminal.labels)
        return cls(complex(terminal.amplitudes[labels[0]]),
                   complex(terminal.amplitudes[labels[1]]), delta_k, periods)


def delta_k(angle: float, wavelength: float) -> float:
    return 2 * math.pi * angle / wavelength


def two_beam_pattern(angle: float, wavelength: float, trial_phase: float,
                     periods: int = 2) -> TwoBeamPattern:
    """Equal-intensity beams with relative phase ``trial_phase``."""
    if not 0 < angle < 0.1:
        raise BadParamsError("angle must be small and positive")
    if wavelength <= 0:
        raise BadParamsError("wavelength must be positive")
    r = math.sqrt(0.5)
    return TwoBeamPattern(complex(r, 0.0), r * complex(math.cos(trial_phase), math.sin(trial_phase)),
                          delta_k(angle, wavelength), periods)


@dataclass(frozen=True)
class FringeFit:
    visibility: float
    phase: float
    n: int = field(default=0)


def fit_fringe(positions, delta_k: float, window: tuple[float, float]) -> FringeFit:
    """Maximum-likelihood fit of ``(1 + V cos(dk x + phase)) / W`` to hits.

    The window must span whole fringe periods so the normalization does
    not depend on ``V`` or ``phase``.
    """
    x = np.asarray(positions, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two hits to fit a fringe")
    m = np.mean(np.exp(1j * delta_k * x))
    v0 = min(2 * abs(m), 0.95)
    p0 = float(-np.angle(m))
    c = delta_k * x

    def nll(params):
        v, ph = params
        dens = 1 + v * np.cos(c + ph)
        return -np.sum(np.log(np.maximum(dens, 1e-300)))

    def grad(params):
        v, ph = params
        cos_, sin_ = np.cos(c + ph), np.sin(c + ph)
        dens = np.maximum(1 + v * cos_, 1e-300)
        return np.array([-np.sum(cos_ / dens), np.sum(v * sin_ / dens)])

    res = optimize.minimize(nll, x0=[v0, p0], jac=grad, method="L-BFGS-B",
                            bounds=[(0.0, 1.0), (None, None)])
    v, ph = res.x
    return FringeFit(float(v), float(math.remainder(ph, 2 * math.pi)), int(x.size))
