"""Textbook quantum-optics predictions used as ground truth.

Nothing here touches the circuit engine or the sampler: interferometer
probabilities are closed-form trigonometric expressions (with an
independent numpy matrix product for cross-checking), and the double
slit uses the Fraunhofer formula.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import stats

from .errors import BasisError, BinningMismatchError, ConfigError


@dataclass(frozen=True)
class OraclePrediction:
    detector_probs: Mapping[str, float] | None = None
    intensity: Callable[[np.ndarray], np.ndarray] | None = None
    notes: str = ""

    def __post_init__(self):
        if self.detector_probs is not None:
            probs = dict(self.detector_probs)
            if any(p < 0 or p > 1 for p in probs.values()):
                raise ValueError("probabilities must lie in [0, 1]")
            if abs(sum(probs.values()) - 1) > 1e-12:
                raise ValueError("probabilities must sum to 1")
            object.__setattr__(self, "detector_probs", probs)


def oracle_mz(setup: int, arm_phase: float = 0.0) -> OraclePrediction:
    """Mach-Zehnder detector probabilities.

    With the second splitter absent each detector sees one arm at
    half intensity.  With it present, P(det1) = sin^2(phi/2).
    """
    if setup == 1:
        return OraclePrediction({"det1": 0.5, "det2": 0.5}, notes="one 50:50 split")
    if setup == 2:
        p1 = math.sin(arm_phase / 2) ** 2
        return OraclePrediction({"det1": p1, "det2": 1 - p1}, notes="sin^2(phi/2) fringe")
    raise ConfigError(f"setup must be 1 or 2, got {setup!r}")


_EXPECTED_BASIS = {"H": "linear", "V": "linear", "L": "circular", "R": "circular"}


def oracle_eraser(basis: str, outcome: str, arm_phase: float = 0.0) -> OraclePrediction:
    """System-photon detector probabilities given the environment outcome."""
    if basis not in ("linear", "circular"):
        raise BasisError(f"unknown basis {basis!r}")
    if _EXPECTED_BASIS.get(outcome) != basis:
        raise BasisError(f"outcome {outcome!r} does not belong to the {basis} basis")
    if basis == "linear":
        return OraclePrediction({"det1": 0.5, "det2": 0.5}, notes="which-path known")
    s = math.sin(arm_phase / 2) ** 2
    p1 = s if outcome == "L" else 1 - s
    return OraclePrediction({"det1": p1, "det2": 1 - p1},
                            notes="fringe" if outcome == "L" else "anti-fringe")


def eraser_outcome_probability(basis: str, outcome: str) -> float:
    if _EXPECTED_BASIS.get(outcome) != basis:
        raise BasisError(f"outcome {outcome!r} does not belong to the {basis} basis")
    return 0.5


def matrix_detector_probs(arm_amplitudes: Sequence[complex], arm_phase: float) -> np.ndarray:
    """|BS . diag(1, e^{i phi}) . v|^2 with numpy, as a second route to the
    interferometer closed forms."""
    bs = np.array([[1, 1j], [1j, 1]]) / np.sqrt(2)
    ph = np.diag([1, np.exp(1j * arm_phase)])
    out = bs @ ph @ np.asarray(arm_amplitudes, dtype=complex)
    return np.abs(out) ** 2


@dataclass(frozen=True)
class DoubleSlitGeometry:
    wavelength: float
    distance: float
    separation: float
    slit_width: float
    slits_open: int = 2

    @property
    def fringe_spacing(self) -> float:
        return self.wavelength * self.distance / self.separation

    @property
    def envelope_zero(self) -> float:
        return self.wavelength * self.distance / self.slit_width


def oracle_double_slit(geometry: DoubleSlitGeometry) -> OraclePrediction:
    """Fraunhofer intensity: sinc^2 envelope times cos^2 fringes (peak 1)."""
    g = geometry

    def intensity(x):
        x = np.asarray(x, dtype=float)
        env = np.sinc(g.slit_width * x / (g.wavelength * g.distance)) ** 2
        if g.slits_open == 1:
            return env
        return env * np.cos(math.pi * g.separation * x / (g.wavelength * g.distance)) ** 2

    return OraclePrediction(intensity=intensity,
                            notes=f"fringe spacing {g.fringe_spacing:.6g} m")


def two_beam_intensity(x, delta_k: float, trial_phase: float) -> np.ndarray:
    """Unnormalized 1 + cos(dk x + phase)."""
    return 1 + np.cos(delta_k * np.asarray(x, dtype=float) + trial_phase)


def bin_probabilities(intensity: Callable, bin_edges, samples_per_bin: int = 16) -> np.ndarray:
    """Midpoint-rule probability mass of ``intensity`` in each bin."""
    edges = np.asarray(bin_edges, dtype=float)
    frac = (np.arange(samples_per_bin) + 0.5) / samples_per_bin
    pts = edges[:-1, None] + frac[None, :] * np.diff(edges)[:, None]
    mass = intensity(pts).mean(axis=1) * np.diff(edges)
    return mass / mass.sum()


# --------------------------------------------------------------------------
# goodness of fit
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Comparison:
    chi_square: float
    p_value: float
    tv_distance: float
    dof: int
    n: int
    merged_bins: int = 0
    labels: tuple = field(default=())

    def to_dict(self) -> dict:
        return {"chi_square": self.chi_square, "p_value": self.p_value,
                "tv_distance": self.tv_distance, "dof": self.dof, "n": self.n,
                "merged_bins": self.merged_bins}


def _merge_small(observed: np.ndarray, expected: np.ndarray, min_expected: float):
    """Greedily merge neighbouring bins until each expects >= min_expected."""
    obs_out, exp_out = [], []
    o_acc = e_acc = 0.0
    for o, e in zip(observed, expected):
        o_acc += o
        e_acc += e
        if e_acc >= min_expected:
            obs_out.append(o_acc)
            exp_out.append(e_acc)
            o_acc = e_acc = 0.0
    if e_acc > 0 or o_acc > 0:
        if exp_out:
            obs_out[-1] += o_acc
            exp_out[-1] += e_acc
        else:
            obs_out.append(o_acc)
            exp_out.append(e_acc)
    return np.array(obs_out), np.array(exp_out)


def compare(empirical, predicted, min_expected: float = 0.0) -> Comparison:
    """Chi-square, p-value and total-variation distance.

    ``empirical`` is a mapping detector -> count or a count array;
    ``predicted`` an :class:`OraclePrediction` with detector
    probabilities, a mapping, or a probability array on the same bins.
    Zero-probability categories with zero counts are dropped; a count in
    a zero-probability category gives an infinite statistic.  With
    ``min_expected`` > 0, neighbouring bins are merged first (only the
    chi-square uses merged bins).
    """
    if isinstance(predicted, OraclePrediction):
        if predicted.detector_probs is None:
            raise BinningMismatchError("prediction has no discrete probabilities; bin it first")
        predicted = predicted.detector_probs
    if isinstance(empirical, Mapping) or isinstance(predicted, Mapping):
        if not (isinstance(empirical, Mapping) and isinstance(predicted, Mapping)):
            raise BinningMismatchError("cannot compare keyed and unkeyed data")
        extra = set(empirical) - set(predicted)
        if extra:
            raise BinningMismatchError(f"counts for unknown categories {sorted(extra)}")
        labels = tuple(predicted)
        obs = np.array([empirical.get(k, 0) for k in labels], dtype=float)
        exp_p = np.array([predicted[k] for k in labels], dtype=float)
    else:
        obs = np.asarray(empirical, dtype=float)
        exp_p = np.asarray(predicted, dtype=float)
        labels = ()
        if obs.shape != exp_p.shape:
            raise BinningMismatchError(f"{obs.shape} counts vs {exp_p.shape} probabilities")
    if np.any(obs < 0) or np.any(exp_p < 0):
        raise ValueError("counts and probabilities must be non-negative")
    n = obs.sum()
    exp_p = exp_p / exp_p.sum()
    tv = 0.5 * float(np.abs(obs / n - exp_p).sum()) if n > 0 else 0.0

    expected = exp_p * n
    merged = 0
    if min_expected > 0:
        before = len(obs)
        obs, expected = _merge_small(obs, expected, min_expected)
        merged = before - len(obs)
    if np.any((expected == 0) & (obs > 0)):
        return Comparison(math.inf, 0.0, tv, 0, int(n), merged, labels)
    keep = expected > 0
    obs, expected = obs[keep], expected[keep]
    dof = len(obs) - 1
    chi2 = float(np.sum((obs - expected) ** 2 / expected)) if n > 0 else 0.0
    if dof <= 0:
        p = 1.0 if chi2 == 0 else 0.0
    else:
        p = float(stats.chi2.sf(chi2, dof))
    return Comparison(chi2, p, tv, dof, int(n), merged, labels)


def binomial_sigma(p: float, n: int) -> float:
    return math.sqrt(p * (1 - p) / n) if n > 0 else math.inf
