"""Passive lossless optical elements and their action on field states."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import BadParamsError, LabelMismatchError
from .states import NO_POLARIZATION, FieldState, ModeLabel

BEAM_SPLITTER = "beam_splitter_5050"
PHASE_SHIFTER = "phase_shifter"
POLARIZING_BS = "polarizing_bs"
MIRROR = "mirror"
POLARIZATION_CONTROLLER = "polarization_controller"
KINDS = (BEAM_SPLITTER, PHASE_SHIFTER, POLARIZING_BS, MIRROR, POLARIZATION_CONTROLLER)

_R = math.sqrt(0.5)


@dataclass(frozen=True)
class ElementSpec:
    """A unitary acting on ``input_ports`` and writing to ``output_ports``.

    Output amplitude ``j`` is ``sum_k matrix[j, k] * input[k]``.
    """

    kind: str
    input_ports: tuple[ModeLabel, ...]
    output_ports: tuple[ModeLabel, ...]
    matrix: np.ndarray
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "params", dict(self.params))

    def unitarity_error(self) -> float:
        """max |(U^dagger U - I)_jk|."""
        u = self.matrix
        return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def _phase_factor(phi: float) -> complex:
    return complex(math.cos(phi), math.sin(phi))


def make_element(kind: str, ports: Sequence[ModeLabel], params: Mapping | None = None,
                 outputs: Sequence[ModeLabel] | None = None) -> ElementSpec:
    """Build an element of ``kind`` acting on ``ports``.

    ``outputs`` relabels the outgoing modes (defaults: same labels, except
    for the polarizing beam splitter and the polarization controller,
    which derive their outputs from the input path).

    The 50:50 splitter uses ``out1 = (in1 + i in2)/sqrt2`` and
    ``out2 = (i in1 + in2)/sqrt2``.  The polarizing splitter takes a
    single path label and routes its H component to path ``b`` and its V
    component to path ``a`` (override with ``transmit_path`` /
    ``reflect_path`` params).
    """
    params = dict(params or {})
    ports = tuple(ports)
    if len(set(ports)) != len(ports):
        raise BadParamsError(f"duplicate ports in {[str(p) for p in ports]}")
    if not ports:
        raise BadParamsError("an element needs at least one port")

    if kind == BEAM_SPLITTER:
        if len(ports) != 2:
            raise BadParamsError("a 50:50 beam splitter acts on exactly two ports")
        matrix = [[_R, 1j * _R], [1j * _R, _R]]
        inputs = ports
        default_out = ports
    elif kind == PHASE_SHIFTER:
        if "phase" not in params:
            raise BadParamsError("phase_shifter requires a 'phase' parameter")
        phi = float(params["phase"])
        if not math.isfinite(phi):
            raise BadParamsError("phase must be finite")
        matrix = np.diag([_phase_factor(phi)] * len(ports))
        inputs = ports
        default_out = ports
    elif kind == POLARIZING_BS:
        if len(ports) != 1:
            raise BadParamsError("polarizing_bs takes a single input path")
        src = ports[0]
        inputs = (src.with_polarization("H"), src.with_polarization("V"))
        default_out = (ModeLabel(params.get("transmit_path", "b"), "H"),
                       ModeLabel(params.get("reflect_path", "a"), "V"))
        matrix = np.eye(2)
    elif kind == MIRROR:
        inputs = ports
        default_out = ports
        matrix = np.eye(len(ports))
    elif kind == POLARIZATION_CONTROLLER:
        inputs = ports
        default_out = tuple(p.with_polarization(NO_POLARIZATION) for p in ports)
        matrix = np.eye(len(ports))
    else:
        raise BadParamsError(f"unknown element kind {kind!r}")

    out = tuple(outputs) if outputs is not None else tuple(default_out)
    if len(out) != len(inputs):
        raise BadParamsError("number of output ports must equal number of input ports")
    if len(set(out)) != len(out):
        raise BadParamsError("duplicate output ports")
    return ElementSpec(kind, tuple(inputs), out, np.asarray(matrix, dtype=complex), params)


def apply(element: ElementSpec, field_state: FieldState) -> FieldState:
    """Transform the amplitudes on the element's ports; leave the rest alone.

    Evaluated with plain Python complex arithmetic so that exact
    cancellations (a dark interferometer port) come out as exact zeros.
    """
    amps = field_state.amplitudes
    missing = [str(p) for p in element.input_ports if p not in amps]
    if missing:
        raise LabelMismatchError(f"element ports {missing} not in field label space")
    v_in = [complex(amps[p]) for p in element.input_ports]
    rows = element.matrix.tolist()

    new = dict(amps)
    for p in element.input_ports:
        new[p] = 0j
    inputs = set(element.input_ports)
    for out, row in zip(element.output_ports, rows):
        if out not in inputs and new.get(out, 0j) != 0:
            raise LabelMismatchError(f"output port {out} already carries amplitude")
        acc = row[0] * v_in[0]
        for c, v in zip(row[1:], v_in[1:]):
            acc = acc + c * v
        new[out] = acc
    return FieldState(new)
