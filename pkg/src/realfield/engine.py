"""Circuit construction and step-wise field propagation.

Time is a step counter; one layer of elements acts per step.  A circuit
may carry one switchable slot (the second beam splitter of the
Mach-Zehnder) whose state can be flipped by :class:`ChoiceEvent` while
the field is already inside the interferometer.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from . import elements as el
from .elements import ElementSpec, apply
from .errors import ChoiceTimingError, ConfigError, LabelMismatchError, TopologyError
from .scenario import INDEPENDENT_BEAMS, MACH_ZEHNDER, QUANTUM_ERASER, ScenarioConfig
from .states import FieldState, ModeLabel

INSERT = "insert_second_bs"
REMOVE = "remove_second_bs"

NORM_TOL = 1e-10


@dataclass(frozen=True)
class SwitchSlot:
    """An element position whose content is chosen at run time."""

    step: int
    inserted: ElementSpec
    bypass: ElementSpec
    present: bool


@dataclass(frozen=True)
class ChoiceEvent:
    time_step: int
    action: str
    applied_before_crossing: bool = True


@dataclass(frozen=True)
class CircuitGraph:
    """Layered optical circuit.

    ``split_step`` is the step of the element that creates the interior
    ``arms`` (``-1`` when the arms are independent sources).  Detector
    ports are terminal outputs.
    """

    name: str
    fixed: tuple[tuple[int, ElementSpec], ...]
    ports: tuple[ModeLabel, ...]
    detectors: Mapping[str, ModeLabel]
    entry: Mapping[ModeLabel, complex]
    split_step: int
    arms: tuple[ModeLabel, ...]
    switch: SwitchSlot | None = None
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "detectors", dict(self.detectors))
        object.__setattr__(self, "entry", dict(self.entry))
        object.__setattr__(self, "params", dict(self.params))
        self._check_topology()

    @property
    def elements(self) -> list[tuple[int, ElementSpec]]:
        """Effective (step, element) list for the static configuration."""
        items = list(self.fixed)
        if self.switch is not None:
            sw = self.switch
            items.append((sw.step, sw.inserted if sw.present else sw.bypass))
        return sorted(items, key=lambda t: t[0])

    @property
    def crossing_step(self) -> int | None:
        return None if self.switch is None else self.switch.step

    @property
    def last_step(self) -> int:
        return max(step for step, _ in self.elements)

    def input_state(self) -> FieldState:
        amps = {p: 0j for p in self.ports}
        amps.update(self.entry)
        return FieldState(amps)

    def detector_of(self, label: ModeLabel) -> str:
        for name, port in self.detectors.items():
            if port == label:
                return name
        raise TopologyError(f"{label} is not a detector port")

    def _check_topology(self):
        steps = [s for s, _ in self.elements]
        if steps != sorted(steps):
            raise TopologyError("elements are not ordered left to right")
        variants = [self.elements]
        if self.switch is not None:
            flipped = [(s, e) for s, e in self.fixed] + [
                (self.switch.step,
                 self.switch.bypass if self.switch.present else self.switch.inserted)]
            variants.append(sorted(flipped, key=lambda t: t[0]))
        for items in variants:
            for name, port in self.detectors.items():
                produced = [s for s, e in items if port in e.output_ports]
                consumed = [s for s, e in items if port in e.input_ports]
                if not produced:
                    raise TopologyError(f"detector {name} is not fed by any element")
                if consumed and max(consumed) >= min(produced):
                    raise TopologyError(f"detector {name} port is not terminal")


# --------------------------------------------------------------------------
# circuit builders
# --------------------------------------------------------------------------

IN, IN2 = ModeLabel("in"), ModeLabel("in2")
UPPER, LOWER = ModeLabel("upper"), ModeLabel("lower")
OUT1, OUT2 = ModeLabel("out1"), ModeLabel("out2")
DETECTORS = {"det1": OUT1, "det2": OUT2}


def mach_zehnder_circuit(setup: int, arm_phase: float = 0.0) -> CircuitGraph:
    """Mach-Zehnder interferometer: BS, mirrors, arm phase, crossing slot.

    ``upper`` is the transmitted arm of the first splitter and reaches
    ``det1`` when the second splitter is absent.
    """
    if setup not in (1, 2):
        raise ConfigError(f"setup must be 1 or 2, got {setup!r}")
    fixed = (
        (0, el.make_element(el.BEAM_SPLITTER, [IN, IN2], outputs=[UPPER, LOWER])),
        (1, el.make_element(el.MIRROR, [UPPER, LOWER])),
        (2, el.make_element(el.PHASE_SHIFTER, [LOWER], {"phase": arm_phase})),
    )
    slot = SwitchSlot(
        step=3,
        inserted=el.make_element(el.BEAM_SPLITTER, [UPPER, LOWER], outputs=[OUT1, OUT2]),
        bypass=el.make_element(el.MIRROR, [UPPER, LOWER], outputs=[OUT1, OUT2]),
        present=(setup == 2),
    )
    return CircuitGraph(
        name=f"mach_zehnder_setup{setup}",
        fixed=fixed,
        ports=(IN, IN2, UPPER, LOWER, OUT1, OUT2),
        detectors=DETECTORS,
        entry={IN: 1 + 0j},
        split_step=0,
        arms=(UPPER, LOWER),
        switch=slot,
        params={"setup": setup, "arm_phase": arm_phase},
    )


SYS = "s"
ARM_A_V, ARM_B_H = ModeLabel("a", "V"), ModeLabel("b", "H")
ARM_A, ARM_B = ModeLabel("a"), ModeLabel("b")


def eraser_circuit(arm_phase: float = 0.0) -> CircuitGraph:
    """System-photon path of the eraser: PBS, controllers, phase, BS.

    The entry amplitudes are placeholders; the sampler feeds the
    system state conditioned on the environment outcome.
    """
    s_h, s_v = ModeLabel(SYS, "H"), ModeLabel(SYS, "V")
    fixed = (
        (0, el.make_element(el.POLARIZING_BS, [ModeLabel(SYS)])),
        (1, el.make_element(el.POLARIZATION_CONTROLLER, [ARM_A_V])),
        (1, el.make_element(el.POLARIZATION_CONTROLLER, [ARM_B_H])),
        (2, el.make_element(el.PHASE_SHIFTER, [ARM_B], {"phase": arm_phase})),
        (3, el.make_element(el.BEAM_SPLITTER, [ARM_A, ARM_B], outputs=[OUT1, OUT2])),
    )
    return CircuitGraph(
        name="quantum_eraser",
        fixed=fixed,
        ports=(s_h, s_v, ARM_B_H, ARM_A_V, ARM_A, ARM_B, OUT1, OUT2),
        detectors=DETECTORS,
        entry={s_h: math.sqrt(0.5) + 0j, s_v: math.sqrt(0.5) + 0j},
        split_step=0,
        arms=(ARM_A_V, ARM_B_H),
        params={"arm_phase": arm_phase},
    )


LASER1, LASER2 = ModeLabel("laser1"), ModeLabel("laser2")
BEAM1, BEAM2 = ModeLabel("beam1"), ModeLabel("beam2")


def independent_beams_circuit(trial_phase: float = 0.0) -> CircuitGraph:
    """Two independent lasers sharing one photon; beam 2 lags by ``trial_phase``."""
    fixed = (
        (0, el.make_element(el.PHASE_SHIFTER, [LASER2], {"phase": trial_phase})),
        (1, el.make_element(el.MIRROR, [LASER1, LASER2], outputs=[BEAM1, BEAM2])),
    )
    r = math.sqrt(0.5) + 0j
    return CircuitGraph(
        name="independent_beams",
        fixed=fixed,
        ports=(LASER1, LASER2, BEAM1, BEAM2),
        detectors={"beam1": BEAM1, "beam2": BEAM2},
        entry={LASER1: r, LASER2: r},
        split_step=-1,
        arms=(LASER1, LASER2),
        params={"trial_phase": trial_phase},
    )


def build_circuit(scenario: ScenarioConfig, arm_phase: float | None = None) -> CircuitGraph:
    """Circuit for an interferometric scenario.

    ``arm_phase`` overrides the scenario's phase (used for sweeps).
    """
    if scenario.kind == MACH_ZEHNDER:
        phase = scenario.arm_phase if arm_phase is None else arm_phase
        return mach_zehnder_circuit(scenario.setup, phase or 0.0)
    if scenario.kind == QUANTUM_ERASER:
        phase = scenario.arm_phase if arm_phase is None else arm_phase
        return eraser_circuit(phase or 0.0)
    if scenario.kind == INDEPENDENT_BEAMS:
        return independent_beams_circuit(0.0 if arm_phase is None else arm_phase)
    raise ConfigError(f"no optical circuit for scenario kind {scenario.kind!r}")


def scenario_choices(scenario: ScenarioConfig) -> list[ChoiceEvent]:
    """Choice events requested by a Mach-Zehnder scenario's ``choice_step``.

    The event flips the configured setup: setup 1 gets the second
    splitter inserted, setup 2 gets it removed.
    """
    if scenario.kind != MACH_ZEHNDER or scenario.choice_step is None:
        return []
    action = INSERT if scenario.setup == 1 else REMOVE
    return [ChoiceEvent(scenario.choice_step, action)]


# --------------------------------------------------------------------------
# propagation
# --------------------------------------------------------------------------

def validate_choices(circuit: CircuitGraph, choices: Sequence[ChoiceEvent]):
    if not choices:
        return
    if circuit.switch is None:
        raise ChoiceTimingError(f"circuit {circuit.name} has no switchable element")
    for ev in choices:
        if ev.action not in (INSERT, REMOVE):
            raise ChoiceTimingError(f"unknown choice action {ev.action!r}")
        if not ev.applied_before_crossing or ev.time_step > circuit.switch.step:
            raise ChoiceTimingError(
                f"choice at step {ev.time_step} comes after the crossing "
                f"(step {circuit.switch.step})")
        if ev.time_step <= circuit.split_step:
            raise ChoiceTimingError(
                f"choice at step {ev.time_step} precedes the first splitter "
                f"(step {circuit.split_step})")


def valid_choice_steps(circuit: CircuitGraph) -> range:
    if circuit.switch is None:
        return range(0)
    return range(circuit.split_step + 1, circuit.switch.step + 1)


def _embed(circuit: CircuitGraph, state: FieldState) -> FieldState:
    extra = set(state.amplitudes) - set(circuit.ports)
    if extra:
        raise LabelMismatchError(f"labels {sorted(map(str, extra))} are not circuit ports")
    amps = {p: 0j for p in circuit.ports}
    amps.update(state.amplitudes)
    return FieldState(amps)


def _run(circuit: CircuitGraph, state: FieldState, choices: Sequence[ChoiceEvent],
         first: int, last: int) -> FieldState:
    present = circuit.switch.present if circuit.switch is not None else False
    # choice events before ``first`` have already been accounted for
    for ev in choices:
        if ev.time_step < first:
            present = ev.action == INSERT
    by_step: dict[int, list[ElementSpec]] = {}
    for step, element in circuit.fixed:
        by_step.setdefault(step, []).append(element)
    for t in range(first, last + 1):
        for ev in choices:
            if ev.time_step == t:
                present = ev.action == INSERT
        for element in by_step.get(t, ()):
            state = apply(element, state)
        if circuit.switch is not None and circuit.switch.step == t:
            sw = circuit.switch
            state = apply(sw.inserted if present else sw.bypass, state)
    return state


def _terminal(circuit: CircuitGraph, state: FieldState) -> FieldState:
    det_ports = set(circuit.detectors.values())
    for label, amp in state.amplitudes.items():
        if label not in det_ports and amp != 0:
            raise TopologyError(f"amplitude left on non-terminal port {label}")
    return FieldState({p: state.amplitudes[p] for p in circuit.detectors.values()})


def propagate(circuit: CircuitGraph, input_state: FieldState | None = None,
              choices: Sequence[ChoiceEvent] = ()) -> FieldState:
    """Push ``input_state`` through every layer; return the detector field.

    The second-splitter slot uses whatever state the last applied
    choice event left it in.  The result only depends on that final
    state, not on when the choice happened.
    """
    validate_choices(circuit, choices)
    state = circuit.input_state() if input_state is None else _embed(circuit, input_state)
    n2 = state.norm2()
    if abs(n2 - 1.0) > NORM_TOL:
        raise ValueError(f"input state is not normalized (norm^2 = {n2})")
    first = min(s for s, _ in circuit.elements)
    return _terminal(circuit, _run(circuit, state, choices, first, circuit.last_step))


@dataclass(frozen=True)
class ArmTrace:
    """One interior branch: its intensity right after the split and the
    detector field it would produce on its own."""

    arm: ModeLabel
    intensity: float
    terminal: FieldState


def trace_arms(circuit: CircuitGraph, input_state: FieldState | None = None,
               choices: Sequence[ChoiceEvent] = ()) -> list[ArmTrace]:
    """Follow each arm separately from the splitting element to the detectors."""
    validate_choices(circuit, choices)
    state = circuit.input_state() if input_state is None else _embed(circuit, input_state)
    first = min(s for s, _ in circuit.elements)
    if circuit.split_step >= first:
        state = _run(circuit, state, choices, first, circuit.split_step)
    traces = []
    for arm in circuit.arms:
        only = {lab: (amp if lab == arm else 0j) for lab, amp in state.amplitudes.items()}
        branch = FieldState(only)
        start = max(circuit.split_step + 1, first)
        terminal = _terminal(circuit, _run(circuit, branch, choices, start, circuit.last_step))
        traces.append(ArmTrace(arm, float(branch.norm2()), terminal))
    return traces
