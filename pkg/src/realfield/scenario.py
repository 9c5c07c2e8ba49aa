"""Scenario files: validated JSON descriptions of the four experiments."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any

from .errors import ParseError, SchemaError

MACH_ZEHNDER = "mach_zehnder"
QUANTUM_ERASER = "quantum_eraser"
INDEPENDENT_BEAMS = "independent_beams"
DOUBLE_SLIT = "double_slit"
KINDS = (MACH_ZEHNDER, QUANTUM_ERASER, INDEPENDENT_BEAMS, DOUBLE_SLIT)

_UINT64 = 2**64


@dataclass(frozen=True)
class ScenarioConfig:
    """One experiment plus run parameters.

    Only the fields belonging to ``kind`` are meaningful; the others stay
    ``None``.  Construct through :func:`parse_scenario` or
    :func:`from_dict` so that the schema is enforced.
    """

    kind: str
    trials: int
    seed: int
    # mach_zehnder
    setup: int | None = None
    choice_step: int | None = None
    # mach_zehnder, quantum_eraser
    arm_phase: float | None = None
    # quantum_eraser
    basis: str | None = None
    phase_sweep: tuple[float, ...] | None = None
    # independent_beams
    angle: float | None = None
    photons_per_trial: int | None = None
    n_trial_groups: int | None = None
    screen_periods: int | None = None
    bins_per_period: int | None = None
    phase_sampling: str | None = None
    # independent_beams, double_slit
    wavelength: float | None = None
    # double_slit
    distance: float | None = None
    slit_centers: tuple[float, ...] | None = None
    slit_width: float | None = None
    open: tuple[bool, ...] | None = None
    grid_halfwidth: float | None = None
    grid_points: int | None = None

    @property
    def phases(self) -> tuple[float, ...]:
        """Arm phases visited by an interferometer run."""
        if self.phase_sweep:
            return self.phase_sweep
        return (self.arm_phase or 0.0,)

    def to_dict(self) -> dict[str, Any]:
        out = {"kind": self.kind}
        for key in _SCHEMAS[self.kind]:
            value = getattr(self, key)
            if value is None:
                continue
            out[key] = list(value) if isinstance(value, tuple) else value
        out["trials"] = self.trials
        out["seed"] = self.seed
        return out

    def with_run(self, trials: int | None = None, seed: int | None = None) -> "ScenarioConfig":
        d = self.to_dict()
        if trials is not None:
            d["trials"] = trials
        if seed is not None:
            d["seed"] = seed
        return from_dict(d)


# --------------------------------------------------------------------------
# field validators
# --------------------------------------------------------------------------

def _int(path, v, lo=None, hi=None):
    if isinstance(v, bool) or not isinstance(v, int):
        raise SchemaError(path, f"expected an integer, got {v!r}")
    if lo is not None and v < lo:
        raise SchemaError(path, f"must be >= {lo}")
    if hi is not None and v >= hi:
        raise SchemaError(path, f"must be < {hi}")
    return v


def _real(path, v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(path, f"expected a number, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        raise SchemaError(path, "must be finite")
    return v


def _positive(path, v):
    v = _real(path, v)
    if v <= 0:
        raise SchemaError(path, "must be positive")
    return v


def _choice(options):
    def check(path, v):
        if v not in options:
            raise SchemaError(path, f"must be one of {list(options)}, got {v!r}")
        return v
    return check


def _list_of(item):
    def check(path, v):
        if not isinstance(v, list) or not v:
            raise SchemaError(path, "expected a non-empty list")
        return tuple(item(f"{path}[{i}]", x) for i, x in enumerate(v))
    return check


def _bool(path, v):
    if not isinstance(v, bool):
        raise SchemaError(path, f"expected true/false, got {v!r}")
    return v


def _small_angle(path, v):
    v = _positive(path, v)
    if v >= 0.1:
        raise SchemaError(path, "must be a small angle (< 0.1 rad)")
    return v


_REQUIRED = object()

# key -> (validator, default); _REQUIRED marks mandatory keys, None optional.
_SCHEMAS: dict[str, dict[str, tuple]] = {
    MACH_ZEHNDER: {
        "setup": (_choice((1, 2)), _REQUIRED),
        "arm_phase": (_real, 0.0),
        "choice_step": (lambda p, v: _int(p, v), None),
    },
    QUANTUM_ERASER: {
        "basis": (_choice(("linear", "circular")), _REQUIRED),
        "arm_phase": (_real, 0.0),
        "phase_sweep": (_list_of(_real), None),
    },
    INDEPENDENT_BEAMS: {
        "angle": (_small_angle, _REQUIRED),
        "wavelength": (_positive, _REQUIRED),
        "photons_per_trial": (lambda p, v: _int(p, v, lo=1), _REQUIRED),
        "n_trial_groups": (lambda p, v: _int(p, v, lo=1), _REQUIRED),
        "screen_periods": (lambda p, v: _int(p, v, lo=1), 2),
        "bins_per_period": (lambda p, v: _int(p, v, lo=2), 8),
        "phase_sampling": (_choice(("stratified", "iid")), "stratified"),
    },
    DOUBLE_SLIT: {
        "wavelength": (_positive, _REQUIRED),
        "distance": (_positive, _REQUIRED),
        "slit_centers": (_list_of(_real), _REQUIRED),
        "slit_width": (_positive, _REQUIRED),
        "open": (_list_of(_bool), None),
        "grid_halfwidth": (_positive, _REQUIRED),
        "grid_points": (lambda p, v: _int(p, v, lo=2), _REQUIRED),
    },
}


def from_dict(data: Any) -> ScenarioConfig:
    """Validate a decoded JSON object and build a :class:`ScenarioConfig`."""
    if not isinstance(data, dict):
        raise SchemaError("$", "scenario must be a JSON object")
    if "kind" not in data:
        raise SchemaError("kind", "missing required key")
    kind = _choice(KINDS)("kind", data["kind"])
    schema = _SCHEMAS[kind]

    allowed = set(schema) | {"kind", "trials", "seed"}
    for key in data:
        if key not in allowed:
            raise SchemaError(key, f"unknown key for kind {kind!r}")

    values: dict[str, Any] = {"kind": kind}
    for key, (check, default) in schema.items():
        if key in data:
            values[key] = check(key, data[key])
        elif default is _REQUIRED:
            raise SchemaError(key, "missing required key")
        elif default is not None:
            values[key] = default

    if "seed" not in data:
        raise SchemaError("seed", "missing required key")
    values["seed"] = _int("seed", data["seed"], lo=0, hi=_UINT64)
    if "trials" in data:
        values["trials"] = _int("trials", data["trials"], lo=0)
    elif kind == INDEPENDENT_BEAMS:
        values["trials"] = values["n_trial_groups"] * values["photons_per_trial"]
    else:
        raise SchemaError("trials", "missing required key")

    if kind == DOUBLE_SLIT:
        centers = values["slit_centers"]
        if len(set(centers)) != len(centers):
            raise SchemaError("slit_centers", "slit centers must be distinct")
        flags = values.get("open") or tuple(True for _ in centers)
        if len(flags) != len(centers):
            raise SchemaError("open", "needs one flag per slit")
        values["open"] = flags
    return ScenarioConfig(**values)


def parse_scenario(text: bytes | str) -> ScenarioConfig:
    """Decode UTF-8 JSON scenario text and validate it."""
    try:
        if isinstance(text, bytes):
            text = text.decode("utf-8")
        data = json.loads(text)
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"malformed scenario JSON: {exc}") from exc
    return from_dict(data)


def serialize_scenario(config: ScenarioConfig) -> str:
    return json.dumps(config.to_dict(), indent=2)


def reference_double_slit(trials: int = 100_000, seed: int = 0) -> ScenarioConfig:
    """633 nm light, two 10 um slits 100 um apart, screen 1 m away."""
    return from_dict({
        "kind": DOUBLE_SLIT,
        "wavelength": 633e-9,
        "distance": 1.0,
        "slit_centers": [-50e-6, 50e-6],
        "slit_width": 10e-6,
        "grid_halfwidth": 25e-3,
        "grid_points": 4096,
        "trials": trials,
        "seed": seed,
    })

