"""Complex amplitude states over labelled optical modes.

Two containers are provided: :class:`FieldState` for a single excitation
spread over a finite set of modes, and :class:`TwoPhotonState` for an
entangled system/environment pair.  Amplitudes are plain Python numbers
(``complex``) on the numeric path.  Any amplitude may instead be a
``sympy`` expression, in which case every transform below switches to
exact arithmetic so that coefficients such as ``i/sqrt(2)`` survive
without rounding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Union

from .errors import BasisError, LabelMismatchError, ZeroProbabilityError, ZeroStateError

LINEAR = ("H", "V")
CIRCULAR = ("L", "R")
NO_POLARIZATION = "none"
_POLARIZATIONS = LINEAR + CIRCULAR + (NO_POLARIZATION,)

SYSTEM = "system"
ENVIRONMENT = "environment"


@dataclass(frozen=True, order=True)
class ModeLabel:
    """A spatial path plus a polarization tag (``none`` when irrelevant)."""

    path: str
    polarization: str = NO_POLARIZATION

    def __post_init__(self):
        if self.polarization not in _POLARIZATIONS:
            raise BasisError(f"unknown polarization {self.polarization!r}")

    def __str__(self):
        if self.polarization == NO_POLARIZATION:
            return self.path
        return f"{self.path}:{self.polarization}"

    @classmethod
    def parse(cls, text: str) -> "ModeLabel":
        path, _, pol = text.partition(":")
        return cls(path, pol or NO_POLARIZATION)

    def with_polarization(self, polarization: str) -> "ModeLabel":
        return ModeLabel(self.path, polarization)


# --------------------------------------------------------------------------
# scalar helpers that work for both complex and sympy amplitudes
# --------------------------------------------------------------------------

def _sympy():
    import sympy

    return sympy


def _is_exact(values: Iterable) -> bool:
    try:
        import sympy
    except ImportError:  # pragma: no cover
        return False
    return any(isinstance(v, sympy.Basic) for v in values)


def _consts(exact: bool):
    """Return (1/sqrt(2), i) in the requested arithmetic."""
    if exact:
        sp = _sympy()
        return 1 / sp.sqrt(2), sp.I
    return math.sqrt(0.5), 1j


def _abs2(z):
    if isinstance(z, (int, float, complex)):
        z = complex(z)
        return z.real * z.real + z.imag * z.imag
    sp = _sympy()
    return sp.simplify(sp.expand(z * sp.conjugate(z)))


def _conj(z):
    if isinstance(z, (int, float, complex)):
        return complex(z).conjugate()
    return _sympy().conjugate(z)


def _tidy(z, exact: bool):
    if exact:
        sp = _sympy()
        return sp.nsimplify(sp.simplify(sp.expand(z)))
    return complex(z)


def _is_zero(z) -> bool:
    if isinstance(z, (int, float, complex)):
        return z == 0
    return _sympy().simplify(z) == 0


# --------------------------------------------------------------------------
# state containers
# --------------------------------------------------------------------------

Number = Union[complex, float, int, "object"]


@dataclass(frozen=True)
class FieldState:
    """Single-excitation field: amplitude per mode label.

    The key set is the label space; zero amplitudes are kept so that two
    states over the same circuit always share a label space.
    """

    amplitudes: Mapping[ModeLabel, Number] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "amplitudes", dict(self.amplitudes))

    @classmethod
    def basis(cls, label: ModeLabel, space: Iterable[ModeLabel]) -> "FieldState":
        """The pure state |label> embedded in ``space``."""
        amps = {lab: 0j for lab in space}
        if label not in amps:
            raise LabelMismatchError(f"{label} not in label space")
        amps[label] = 1 + 0j
        return cls(amps)

    @property
    def labels(self) -> tuple[ModeLabel, ...]:
        return tuple(self.amplitudes)

    def amplitude(self, label: ModeLabel):
        return self.amplitudes.get(label, 0j)

    def norm2(self):
        return sum((_abs2(a) for a in self.amplitudes.values()), 0.0)

    def probabilities(self) -> dict[ModeLabel, float]:
        return {lab: float(_abs2(a)) for lab, a in self.amplitudes.items()}

    @property
    def exact(self) -> bool:
        return _is_exact(self.amplitudes.values())

    def restrict(self, labels: Iterable[ModeLabel]) -> "FieldState":
        keep = set(labels)
        return FieldState({k: v for k, v in self.amplitudes.items() if k in keep})


@dataclass(frozen=True)
class TwoPhotonState:
    """Amplitudes over (system label, environment label) pairs."""

    amplitudes: Mapping[tuple[ModeLabel, ModeLabel], Number] = field(default_factory=dict)

    def __post_init__(self):
        amps = dict(self.amplitudes)
        object.__setattr__(self, "amplitudes", amps)
        sys_labels = {s for s, _ in amps}
        env_labels = {e for _, e in amps}
        if sys_labels & env_labels:
            raise LabelMismatchError("system and environment label spaces overlap")

    @property
    def system_labels(self) -> tuple[ModeLabel, ...]:
        return tuple(dict.fromkeys(s for s, _ in self.amplitudes))

    @property
    def environment_labels(self) -> tuple[ModeLabel, ...]:
        return tuple(dict.fromkeys(e for _, e in self.amplitudes))

    def amplitude(self, system: ModeLabel, environment: ModeLabel):
        return self.amplitudes.get((system, environment), 0j)

    def norm2(self):
        return sum((_abs2(a) for a in self.amplitudes.values()), 0.0)

    @property
    def exact(self) -> bool:
        return _is_exact(self.amplitudes.values())


State = Union[FieldState, TwoPhotonState]


def product_state(system: FieldState, environment: FieldState) -> TwoPhotonState:
    amps = {}
    for s, a in system.amplitudes.items():
        for e, b in environment.amplitudes.items():
            amps[(s, e)] = a * b
    return TwoPhotonState(amps)


def entangled_pair(exact: bool = False, system_path: str = "s",
                   environment_path: str = "e") -> TwoPhotonState:
    """(|H>_s|V>_e + |V>_s|H>_e)/sqrt(2), the source state of the eraser."""
    r, _ = _consts(exact)
    if not exact:
        r = complex(r)
    s = lambda p: ModeLabel(system_path, p)  # noqa: E731
    e = lambda p: ModeLabel(environment_path, p)  # noqa: E731
    zero = 0 if exact else 0j
    return TwoPhotonState({
        (s("H"), e("H")): zero,
        (s("H"), e("V")): r,
        (s("V"), e("H")): r,
        (s("V"), e("V")): zero,
    })


# --------------------------------------------------------------------------
# operations
# --------------------------------------------------------------------------

def normalize(state: State) -> State:
    """Scale ``state`` to unit norm, preserving amplitude ratios."""
    amps = state.amplitudes
    exact = _is_exact(amps.values())
    n2 = state.norm2()
    if _is_zero(n2) or not amps:
        raise ZeroStateError("cannot normalize an all-zero state")
    if exact:
        sp = _sympy()
        scale = 1 / sp.sqrt(n2)
        new = {k: _tidy(v * scale, True) for k, v in amps.items()}
    else:
        if n2 == 1.0:
            return state
        # rescale by the largest modulus first so tiny norms do not underflow
        big = max(abs(complex(v)) for v in amps.values())
        pre = {k: complex(v) / big for k, v in amps.items()}
        scale = 1.0 / math.sqrt(sum(abs(v) ** 2 for v in pre.values()))
        new = {k: v * scale for k, v in pre.items()}
    return replace(state, amplitudes=new)


def inner_product(x: FieldState, y: FieldState):
    """<x|y>, conjugate-linear in ``x``."""
    if set(x.amplitudes) != set(y.amplitudes):
        raise LabelMismatchError("states live on different label spaces")
    total = 0j
    for lab, a in x.amplitudes.items():
        total = total + _conj(a) * y.amplitudes[lab]
    if _is_exact([total]):
        return _tidy(total, True)
    return total


def same_ray(x: FieldState, y: FieldState, tol: float = 1e-10) -> bool:
    """True when ``x`` and ``y`` are proportional (same physical state).

    Uses the Cauchy-Schwarz ratio |<x|y>|^2 / (<x|x><y|y>), which is 1
    exactly for parallel vectors, so neither input has to be normalized.
    """
    nx, ny = float(abs(complex(x.norm2()))), float(abs(complex(y.norm2())))
    if nx == 0 or ny == 0:
        return nx == ny
    return abs(abs(complex(inner_product(x, y))) ** 2 / (nx * ny) - 1.0) < tol


def _expand_label(label: ModeLabel, target: tuple[str, ...], exact: bool):
    """Rewrite one polarized ket in the ``target`` basis.

    Linear to circular:  H = (R + L)/sqrt2,  V = i(L - R)/sqrt2.
    Circular to linear:  L = (H - iV)/sqrt2, R = (H + iV)/sqrt2.
    """
    pol = label.polarization
    if pol == NO_POLARIZATION or pol in target:
        return [(label, 1)]
    r, i = _consts(exact)
    w = label.with_polarization
    if target == CIRCULAR:
        if pol == "H":
            return [(w("R"), r), (w("L"), r)]
        return [(w("L"), i * r), (w("R"), -i * r)]
    if pol == "L":
        return [(w("H"), r), (w("V"), -i * r)]
    return [(w("H"), r), (w("V"), i * r)]


def _sides(photons) -> tuple[bool, bool]:
    if isinstance(photons, str):
        photons = (photons,)
    bad = set(photons) - {SYSTEM, ENVIRONMENT}
    if bad:
        raise ValueError(f"unknown photon selector {sorted(bad)}")
    return SYSTEM in photons, ENVIRONMENT in photons


def _change_basis(state: State, target: tuple[str, ...], photons) -> State:
    exact = _is_exact(state.amplitudes.values())
    zero = 0 if exact else 0j

    if isinstance(state, FieldState):
        if any(lab.polarization in target for lab in state.amplitudes):
            raise BasisError(f"state already has labels in the {target} basis")
        out: dict = {}
        for lab, amp in state.amplitudes.items():
            for new, c in _expand_label(lab, target, exact):
                out[new] = out.get(new, zero) + c * amp
        return FieldState({k: _tidy(v, exact) for k, v in out.items()})

    do_sys, do_env = _sides(photons)
    for s, e in state.amplitudes:
        if (do_sys and s.polarization in target) or (do_env and e.polarization in target):
            raise BasisError(f"state already has labels in the {target} basis")
    out = {}
    for (s, e), amp in state.amplitudes.items():
        s_terms = _expand_label(s, target, exact) if do_sys else [(s, 1)]
        e_terms = _expand_label(e, target, exact) if do_env else [(e, 1)]
        for s2, cs in s_terms:
            for e2, ce in e_terms:
                out[(s2, e2)] = out.get((s2, e2), zero) + cs * ce * amp
    return TwoPhotonState({k: _tidy(v, exact) for k, v in out.items()})


def linear_to_circular(state: State, photons=(SYSTEM, ENVIRONMENT)) -> State:
    """Re-express H/V labels in the L/R basis on the selected photons."""
    return _change_basis(state, CIRCULAR, photons)


def circular_to_linear(state: State, photons=(SYSTEM, ENVIRONMENT)) -> State:
    """Re-express L/R labels in the H/V basis on the selected photons."""
    return _change_basis(state, LINEAR, photons)


PBS_ROUTING = {"H": "b", "V": "a"}


def polarization_to_path(state: TwoPhotonState, routing: Mapping[str, str] = PBS_ROUTING
                         ) -> TwoPhotonState:
    """Replace system polarization by path: |H>_s -> |b>_s, |V>_s -> |a>_s.

    Circular system labels are first rewritten in the linear basis.  The
    environment photon is untouched.
    """
    sys_pols = {s.polarization for s, _ in state.amplitudes}
    if NO_POLARIZATION in sys_pols:
        raise BasisError("system labels already carry path information only")
    if sys_pols & set(CIRCULAR):
        state = circular_to_linear(state, SYSTEM)
    exact = state.exact
    zero = 0 if exact else 0j
    out: dict = {}
    for (s, e), amp in state.amplitudes.items():
        key = (ModeLabel(routing[s.polarization]), e)
        out[key] = out.get(key, zero) + amp
    return TwoPhotonState({k: _tidy(v, exact) for k, v in out.items()})


def condition_on_environment(state: TwoPhotonState, outcome: ModeLabel):
    """Project the environment photon on ``outcome``.

    Returns ``(probability, system_state)`` where the system state is the
    renormalized slice of amplitudes paired with ``outcome``.  If the
    outcome belongs to the other polarization basis, the environment
    factor is rewritten first.
    """
    env_pols = {e.polarization for _, e in state.amplitudes}
    if outcome.polarization in CIRCULAR and env_pols & set(LINEAR):
        state = linear_to_circular(state, ENVIRONMENT)
    elif outcome.polarization in LINEAR and env_pols & set(CIRCULAR):
        state = circular_to_linear(state, ENVIRONMENT)
    if outcome not in state.environment_labels:
        raise LabelMismatchError(f"{outcome} is not an environment label of this state")

    exact = state.exact
    zero = 0 if exact else 0j
    slice_ = {s: zero for s in state.system_labels}
    for (s, e), amp in state.amplitudes.items():
        if e == outcome:
            slice_[s] = slice_[s] + amp
    system = FieldState(slice_)
    prob = system.norm2()
    if _is_zero(prob):
        raise ZeroProbabilityError(f"outcome {outcome} has zero probability")
    if exact:
        prob = _sympy().nsimplify(prob)
    return prob, normalize(system)
