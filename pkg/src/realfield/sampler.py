"""Point particles drawn from field intensity, plus seeded trial batches.

For every trial the detector is drawn first, from the squared modulus of
the terminal field.  The particle's interior path is then reconstructed
backwards: if only one arm can feed the detector, that arm is the path
(``path_known``); otherwise one consistent arm is drawn with probability
proportional to its intensity just after the splitter.  The field itself
is computed once per configuration and never touched by the draws.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

from .engine import (
    ChoiceEvent, CircuitGraph, build_circuit, independent_beams_circuit, propagate,
    scenario_choices, trace_arms,
)
from .errors import ConfigError, InsufficientDataError, TopologyError
from .rng import GROUP, RngStream, categorical, counter_uniform
from .scenario import (
    DOUBLE_SLIT, INDEPENDENT_BEAMS, MACH_ZEHNDER, QUANTUM_ERASER, ScenarioConfig,
)
from .states import (
    FieldState, ModeLabel, condition_on_environment, entangled_pair, inner_product,
    polarization_to_path,
)
from . import waveoptics as wo

DETECTOR_THEN_PATH = "detector_then_path"
SCREEN = "screen"

# Case numbering of the four eraser outcomes: (particle path, wave-packet branch) -> case
ERASER_CASES = {("a", "+"): 1, ("a", "-"): 2, ("b", "+"): 3, ("b", "-"): 4}
# cases that an environment outcome cannot tell apart
CASE_POOLS = {"L": (1, 3), "R": (2, 4), "H": (1, 2), "V": (3, 4)}

BASIS_OUTCOMES = {"linear": ("H", "V"), "circular": ("L", "R")}
ENV_PATH = "e"


@dataclass(frozen=True, slots=True)
class TrialRecord:
    trial_id: int
    detector: str
    path_history: tuple[str, ...]
    path_known: bool
    env_outcome: str | None = None
    screen_position: float | None = None
    trial_phase: float | None = None
    arm_phase: float | None = None
    group: int | None = None
    wave_branch: str | None = None
    case: int | None = None
    sampling_order: str = DETECTOR_THEN_PATH

    def to_dict(self) -> dict:
        d = asdict(self)
        d["path_history"] = list(self.path_history)
        return {k: v for k, v in d.items() if v is not None}

    @classmethod
    def from_dict(cls, d: Mapping) -> "TrialRecord":
        d = dict(d)
        d["path_history"] = tuple(d["path_history"])
        return cls(**d)


# --------------------------------------------------------------------------
# single-trial primitives
# --------------------------------------------------------------------------

def sample_detector(terminal: FieldState, rng: RngStream,
                    detectors: Mapping[str, ModeLabel] | None = None, draw: int = 0) -> str:
    """Draw a detector with probability |amplitude|^2 (draw ``draw`` of ``rng``)."""
    names, labels = _detector_table(terminal, detectors)
    probs = [terminal.probabilities()[lab] for lab in labels]
    return names[int(categorical(probs, rng.draw(draw)))]


def _detector_table(terminal: FieldState, detectors):
    if detectors is None:
        labels = list(terminal.labels)
        return [str(lab) for lab in labels], labels
    return list(detectors), list(detectors.values())


def _consistent_arms(traces, port: ModeLabel):
    return [t for t in traces if t.intensity > 0 and t.terminal.amplitudes[port] != 0]


def _history(circuit: CircuitGraph, arm: ModeLabel, port: ModeLabel) -> tuple[str, ...]:
    head = ()
    if circuit.split_step >= 0:
        head = (next(iter(circuit.entry)).path,)
    return head + (arm.path, port.path)


def assign_path_history(circuit: CircuitGraph, detector: str, rng: RngStream,
                        input_state: FieldState | None = None,
                        choices: Sequence[ChoiceEvent] = (), draw: int = 1):
    """Back-trace the particle's interior path from the clicked detector.

    Returns ``(path_history, path_known)``.
    """
    port = circuit.detectors[detector]
    consistent = _consistent_arms(trace_arms(circuit, input_state, choices), port)
    if not consistent:
        raise TopologyError(f"no arm of {circuit.name} reaches {detector}")
    if len(consistent) == 1:
        return _history(circuit, consistent[0].arm, port), True
    pick = int(categorical([t.intensity for t in consistent], rng.draw(draw)))
    return _history(circuit, consistent[pick].arm, port), False


def visibility(counts_vs_phase: Mapping[float, tuple[int, int]]) -> float:
    """(max p - min p)/(max p + min p) over detector-1 proportions p."""
    props = []
    for n1, n2 in counts_vs_phase.values():
        if n1 < 0 or n2 < 0:
            raise InsufficientDataError("counts must be non-negative")
        if n1 + n2 > 0:
            props.append(n1 / (n1 + n2))
    if len(props) < 2:
        raise InsufficientDataError("need at least two phase points with counts")
    hi, lo = max(props), min(props)
    return 0.0 if hi + lo == 0 else (hi - lo) / (hi + lo)


# --------------------------------------------------------------------------
# per-configuration plans (everything deterministic, computed once)
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class _Branching:
    """Detector distribution and, per detector, the arms that can feed it."""

    circuit: CircuitGraph
    names: tuple[str, ...]
    probs: tuple[float, ...]
    arms: tuple[tuple[tuple[ModeLabel, float], ...], ...]

    @classmethod
    def build(cls, circuit, input_state=None, choices=()):
        terminal = propagate(circuit, input_state, choices)
        traces = trace_arms(circuit, input_state, choices)
        names = tuple(circuit.detectors)
        probs = tuple(terminal.probabilities()[circuit.detectors[n]] for n in names)
        arms = tuple(tuple((t.arm, t.intensity) for t in _consistent_arms(traces, circuit.detectors[n]))
                     for n in names)
        return cls(circuit, names, probs, arms)

    def draw(self, u_det: np.ndarray, u_path: np.ndarray):
        det = categorical(self.probs, u_det)
        arm = np.zeros(len(det), dtype=int)
        for d in np.unique(det):
            options = self.arms[d]
            if not options:
                raise TopologyError(f"no arm reaches {self.names[d]}")
            sel = det == d
            arm[sel] = categorical([w for _, w in options], u_path[sel])
        return det, arm

    def history(self, d: int, a: int) -> tuple[tuple[str, ...], bool]:
        options = self.arms[d]
        port = self.circuit.detectors[self.names[d]]
        return _history(self.circuit, options[a][0], port), len(options) == 1


@lru_cache(maxsize=64)
def _mz_plan(scenario: ScenarioConfig) -> _Branching:
    return _Branching.build(build_circuit(scenario), None, scenario_choices(scenario))


def _wave_weights(path_state: FieldState) -> tuple[float, float]:
    """Weights of the (a + i b)/sqrt2 and (a - i b)/sqrt2 wave-packet phases."""
    r = math.sqrt(0.5)
    a, b = ModeLabel("a"), ModeLabel("b")
    plus = FieldState({a: r + 0j, b: 1j * r})
    minus = FieldState({a: r + 0j, b: -1j * r})
    ps = FieldState({a: path_state.amplitude(a), b: path_state.amplitude(b)})
    return abs(inner_product(plus, ps)) ** 2, abs(inner_product(minus, ps)) ** 2


@dataclass(frozen=True)
class _EraserPlan:
    outcomes: tuple[str, ...]
    outcome_probs: tuple[float, ...]
    wave: tuple[tuple[float, float], ...]
    branching: tuple[tuple[_Branching, ...], ...]  # [phase][outcome]


@lru_cache(maxsize=64)
def _eraser_plan(scenario: ScenarioConfig) -> _EraserPlan:
    source = entangled_pair()
    path_form = polarization_to_path(source)
    outcomes = BASIS_OUTCOMES[scenario.basis]
    probs, inputs, wave = [], [], []
    for pol in outcomes:
        label = ModeLabel(ENV_PATH, pol)
        p, system = condition_on_environment(source, label)
        _, path_state = condition_on_environment(path_form, label)
        probs.append(float(p))
        inputs.append(system)
        wave.append(_wave_weights(path_state))
    branching = tuple(
        tuple(_Branching.build(build_circuit(scenario, arm_phase=phi), inp) for inp in inputs)
        for phi in scenario.phases)
    return _EraserPlan(outcomes, tuple(probs), tuple(wave), branching)


def _group_phases(scenario: ScenarioConfig, n_groups: int, seed: int) -> np.ndarray:
    """Per-group relative phase, each marginally uniform on [0, 2pi).

    ``stratified`` assigns the groups to a seeded random permutation of
    equal-width phase strata; ``iid`` draws every phase independently.
    """
    g = np.arange(n_groups)
    u = counter_uniform(seed, g, 1, GROUP)
    if scenario.phase_sampling == "iid":
        frac = u
    else:
        rank = np.argsort(np.argsort(counter_uniform(seed, g, 0, GROUP), kind="stable"), kind="stable")
        frac = (rank + u) / n_groups
    return 2 * math.pi * frac


@lru_cache(maxsize=8)
def _double_slit_plan(scenario: ScenarioConfig):
    mask = wo.ApertureMask(scenario.slit_centers, scenario.slit_width, scenario.open)
    grid = wo.Grid(scenario.grid_halfwidth, scenario.grid_points)
    screen = wo.shape_mode(mask, scenario.wavelength, scenario.distance, grid)
    return mask, screen, wo.screen_pdf(screen)


def double_slit_field(scenario: ScenarioConfig) -> wo.ScreenField:
    return _double_slit_plan(scenario)[1]


# --------------------------------------------------------------------------
# batch execution
# --------------------------------------------------------------------------

def _mz_records(scenario, ids, seed):
    plan = _mz_plan(scenario)
    det, arm = plan.draw(counter_uniform(seed, ids, 0), counter_uniform(seed, ids, 1))
    phase = scenario.arm_phase
    out = []
    for i, d, a in zip(ids.tolist(), det.tolist(), arm.tolist()):
        hist, known = plan.history(d, a)
        out.append(TrialRecord(i, plan.names[d], hist, known, arm_phase=phase))
    return out


def _eraser_records(scenario, ids, seed):
    plan = _eraser_plan(scenario)
    phases = scenario.phases
    k = ids % len(phases)
    env = categorical(plan.outcome_probs, counter_uniform(seed, ids, 0))
    u_det = counter_uniform(seed, ids, 1)
    u_path = counter_uniform(seed, ids, 2)
    u_wave = counter_uniform(seed, ids, 3)
    det = np.zeros(len(ids), dtype=int)
    arm = np.zeros(len(ids), dtype=int)
    for pk in range(len(phases)):
        for o in range(len(plan.outcomes)):
            sel = (k == pk) & (env == o)
            if sel.any():
                det[sel], arm[sel] = plan.branching[pk][o].draw(u_det[sel], u_path[sel])
    out = []
    for j, i in enumerate(ids.tolist()):
        pk, o = int(k[j]), int(env[j])
        br = plan.branching[pk][o]
        hist, known = br.history(int(det[j]), int(arm[j]))
        w_plus, w_minus = plan.wave[o]
        branch = "+" if u_wave[j] * (w_plus + w_minus) < w_plus else "-"
        out.append(TrialRecord(
            i, br.names[det[j]], hist, known,
            env_outcome=plan.outcomes[o], arm_phase=phases[pk],
            wave_branch=branch, case=ERASER_CASES[(hist[1], branch)]))
    return out


FINE_BINS_PER_PERIOD = 256


def _beams_records(scenario, ids, seed, n_total):
    per = scenario.photons_per_trial
    n_groups = -(-n_total // per)
    phases = _group_phases(scenario, n_groups, seed)
    dk = wo.delta_k(scenario.angle, scenario.wavelength)
    groups = ids // per
    u0, u1, u2 = (counter_uniform(seed, ids, j) for j in range(3))
    out = []
    for g in np.unique(groups).tolist():
        theta = float(phases[g])
        circuit = independent_beams_circuit(theta)
        terminal = propagate(circuit)
        pattern = wo.TwoBeamPattern.from_field(
            terminal, dk, scenario.screen_periods,
            labels=list(circuit.detectors.values()))
        pdf = pattern.pdf(FINE_BINS_PER_PERIOD * scenario.screen_periods)
        sel = groups == g
        x = wo._hits_from_uniforms(pdf, u0[sel], u1[sel])
        traces = trace_arms(circuit)
        src = categorical([t.intensity for t in traces], u2[sel])
        for i, xi, s in zip(ids[sel].tolist(), x.tolist(), src.tolist()):
            out.append(TrialRecord(i, SCREEN, (traces[s].arm.path, SCREEN), False,
                                   screen_position=xi, trial_phase=theta, group=g))
    out.sort(key=lambda r: r.trial_id)
    return out


def _double_slit_records(scenario, ids, seed):
    mask, screen, pdf = _double_slit_plan(scenario)
    x = wo.sample_hits_per_trial(pdf, ids, seed)
    open_idx = [i for i, f in enumerate(mask.open) if f]
    # equal transmitted power per open slit; every slit reaches every screen point
    slit = categorical([1.0] * len(open_idx), counter_uniform(seed, ids, 2))
    known = len(open_idx) == 1
    return [TrialRecord(i, SCREEN, ("wall", f"slit{open_idx[s]}", SCREEN), known,
                        screen_position=xi)
            for i, xi, s in zip(ids.tolist(), x.tolist(), slit.tolist())]


def run_range(scenario: ScenarioConfig, start: int, stop: int, seed: int,
              n_total: int | None = None) -> list[TrialRecord]:
    """Records for trial ids ``start .. stop-1`` of an ``n_total``-trial run."""
    ids = np.arange(start, stop, dtype=np.int64)
    if ids.size == 0:
        return []
    kind = scenario.kind
    if kind == MACH_ZEHNDER:
        return _mz_records(scenario, ids, seed)
    if kind == QUANTUM_ERASER:
        return _eraser_records(scenario, ids, seed)
    if kind == INDEPENDENT_BEAMS:
        return _beams_records(scenario, ids, seed, stop if n_total is None else n_total)
    if kind == DOUBLE_SLIT:
        return _double_slit_records(scenario, ids, seed)
    raise ConfigError(f"unknown scenario kind {kind!r}")


def partition(n: int, chunks: int) -> list[tuple[int, int]]:
    chunks = max(1, min(chunks, n)) if n else 1
    bounds = [n * j // chunks for j in range(chunks + 1)]
    return [(a, b) for a, b in zip(bounds, bounds[1:]) if b > a]


def run_trials(scenario: ScenarioConfig, n: int | None = None, seed: int | None = None,
               workers: int = 1, chunks: Iterable[tuple[int, int]] | None = None
               ) -> list[TrialRecord]:
    """Run ``n`` trials (default: the scenario's) with master ``seed``.

    Trial ``i`` draws only from its own counter stream, so the records do
    not depend on ``workers`` or on how the id range is chunked.
    """
    n = scenario.trials if n is None else n
    seed = scenario.seed if seed is None else seed
    if n < 0:
        raise ConfigError("number of trials must be non-negative")
    if chunks is None:
        chunks = partition(n, workers if workers > 1 else 1)
    chunks = sorted(chunks)
    covered = [i for a, b in chunks for i in (a, b)]
    if chunks and (covered[0] != 0 or covered[-1] != n
                   or any(b != c for (_, b), (c, _) in zip(chunks, chunks[1:]))):
        raise ConfigError("chunks must tile the trial range exactly")
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda c: run_range(scenario, c[0], c[1], seed, n), chunks))
    else:
        parts = [run_range(scenario, a, b, seed, n) for a, b in chunks]
    records = [r for part in parts for r in part]
    records.sort(key=lambda r: r.trial_id)
    return records
