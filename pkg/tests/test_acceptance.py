"""Acceptance criteria 1-10.

Each test carries ``@pytest.mark.criterion(n)``; ``conftest.py`` folds
the outcomes into one PASS/FAIL line per criterion at the end of the run.
Tolerances are the contract values, never loosened here.
"""
import cmath
import math
import time

import numpy as np
import pytest
import sympy as sp

from realfield import oracle as qm
from realfield import waveoptics as wo
from realfield.elements import make_element, BEAM_SPLITTER, PHASE_SHIFTER, POLARIZING_BS, MIRROR, \
    POLARIZATION_CONTROLLER
from realfield.engine import (
    INSERT, ChoiceEvent, eraser_circuit, independent_beams_circuit, mach_zehnder_circuit,
    propagate, valid_choice_steps,
)
from realfield.results import dumps, records_to_json, summarize
from realfield.sampler import CASE_POOLS, ERASER_CASES, double_slit_field, run_trials
from realfield.scenario import from_dict, reference_double_slit
from realfield.states import (
    ENVIRONMENT, ModeLabel, condition_on_environment, entangled_pair, linear_to_circular,
    polarization_to_path,
)

PHASES = [0.0, math.pi / 2, math.pi]


def mz(setup, trials, seed=2024, **kw):
    return from_dict({"kind": "mach_zehnder", "setup": setup, "trials": trials, "seed": seed, **kw})


def eraser(basis, trials=30_000, seed=77):
    return from_dict({"kind": "quantum_eraser", "basis": basis, "phase_sweep": PHASES,
                      "trials": trials, "seed": seed})


BEAMS = {"kind": "independent_beams", "angle": 1e-3, "wavelength": 633e-9,
         "photons_per_trial": 200, "n_trial_groups": 100}


# --------------------------------------------------------------------------
# 1. setup 1
# --------------------------------------------------------------------------

@pytest.mark.criterion(1)
@pytest.mark.parametrize("seed", [1, 2, 3])
def test_setup1_equal_split_with_known_paths(seed):
    records = run_trials(mz(1, 10_000, seed))
    n = len(records)
    for det in ("det1", "det2"):
        freq = sum(r.detector == det for r in records) / n
        assert abs(freq - 0.5) <= 0.015
    assert all(r.path_known for r in records)
    # det1 is fed only by the upper (transmitted) arm, det2 only by the lower
    feeds = {"det1": ("upper", "out1"), "det2": ("lower", "out2")}
    for r in records:
        arm, port = feeds[r.detector]
        assert r.path_history == ("in", arm, port)


# --------------------------------------------------------------------------
# 2. setup 2
# --------------------------------------------------------------------------

@pytest.mark.criterion(2)
def test_setup2_dark_port_is_exactly_dark():
    terminal = propagate(mach_zehnder_circuit(2, 0.0))
    assert terminal.amplitudes[ModeLabel("out1")] == 0
    records = run_trials(mz(2, 10_000))
    assert sum(r.detector == "det1" for r in records) == 0
    assert sum(r.detector == "det2" for r in records) == 10_000


# --------------------------------------------------------------------------
# 3. delayed-choice invariance
# --------------------------------------------------------------------------

@pytest.mark.criterion(3)
@pytest.mark.parametrize("phase", [0.0, 0.3, math.pi / 2, 2.0])
def test_late_insertion_equals_static_setup2(phase):
    static = propagate(mach_zehnder_circuit(2, phase))
    late = mach_zehnder_circuit(1, phase)
    steps = list(valid_choice_steps(late))
    assert len(steps) >= 2
    for t in steps:
        got = propagate(late, choices=[ChoiceEvent(t, INSERT)])
        assert got.labels == static.labels
        for label in static.labels:
            a, b = got.amplitudes[label], static.amplitudes[label]
            assert (a.real, a.imag) == (b.real, b.imag)
        assert repr(got) == repr(static)


@pytest.mark.criterion(3)
def test_late_insertion_gives_identical_records():
    ref = dumps(records_to_json(run_trials(mz(2, 5_000, seed=9))))
    for t in valid_choice_steps(mach_zehnder_circuit(1)):
        got = dumps(records_to_json(run_trials(mz(1, 5_000, seed=9, choice_step=t))))
        assert got == ref


# --------------------------------------------------------------------------
# 4. exact eraser algebra
# --------------------------------------------------------------------------

@pytest.mark.criterion(4)
def test_entangled_pair_in_circular_basis_exact():
    state = linear_to_circular(entangled_pair(exact=True))
    s = lambda p: ModeLabel("s", p)  # noqa: E731
    e = lambda p: ModeLabel("e", p)  # noqa: E731
    c = sp.I / sp.sqrt(2)
    expected = {(s("L"), e("L")): c, (s("R"), e("R")): -c,
                (s("L"), e("R")): 0, (s("R"), e("L")): 0}
    assert set(state.amplitudes) == set(expected)
    for key, value in expected.items():
        assert sp.simplify(state.amplitudes[key] - value) == 0


@pytest.mark.criterion(4)
def test_path_encoded_state_exact():
    state = linear_to_circular(polarization_to_path(entangled_pair(exact=True)), ENVIRONMENT)
    a, b = ModeLabel("a"), ModeLabel("b")
    eL, eR = ModeLabel("e", "L"), ModeLabel("e", "R")
    half = sp.Rational(1, 2)
    expected = {(a, eL): half, (b, eL): half * sp.I, (a, eR): half, (b, eR): -half * sp.I}
    assert set(state.amplitudes) == set(expected)
    for key, value in expected.items():
        assert sp.simplify(state.amplitudes[key] - value) == 0
    prob, system = condition_on_environment(state, eL)
    assert prob == half
    assert sp.simplify(system.amplitudes[b] / system.amplitudes[a] - sp.I) == 0


# --------------------------------------------------------------------------
# 5. eraser statistics
# --------------------------------------------------------------------------

@pytest.fixture(scope="module")
def circular_run():
    cfg = eraser("circular")
    return cfg, run_trials(cfg)


@pytest.fixture(scope="module")
def linear_run():
    cfg = eraser("linear")
    return cfg, run_trials(cfg)


def _conditional_table(records, outcome):
    table = {}
    for p in PHASES:
        sel = [r for r in records if r.env_outcome == outcome and r.arm_phase == p]
        table[p] = (sum(r.detector == "det1" for r in sel), sum(r.detector == "det2" for r in sel))
    return table


def _vis(table):
    f = [n1 / (n1 + n2) for n1, n2 in table.values()]
    return (max(f) - min(f)) / (max(f) + min(f))


@pytest.mark.criterion(5)
@pytest.mark.parametrize("outcome", ["L", "R"])
def test_conditional_fringes_within_3_sigma(circular_run, outcome):
    _, records = circular_run
    assert len(records) == 30_000
    table = _conditional_table(records, outcome)
    for p, (n1, n2) in table.items():
        n = n1 + n2
        s2 = math.sin(p / 2) ** 2
        expect = s2 if outcome == "L" else 1 - s2
        assert expect == pytest.approx(qm.oracle_eraser("circular", outcome, p).detector_probs["det1"])
        sigma = math.sqrt(max(expect * (1 - expect), 0.25 / n) / n)
        assert abs(n1 / n - expect) <= 3 * sigma
    assert _vis(table) >= 0.98


@pytest.mark.criterion(5)
def test_anti_fringes_complement_fringes(circular_run):
    _, records = circular_run
    tl, tr = _conditional_table(records, "L"), _conditional_table(records, "R")
    # at the phase extremes one outcome's bright detector is the other's dark one
    assert tl[0.0][0] == 0 and tr[0.0][1] == 0
    assert tl[math.pi][1] == 0 and tr[math.pi][0] == 0


@pytest.mark.criterion(5)
def test_pooled_visibility_washes_out(circular_run):
    cfg, records = circular_run
    assert summarize(cfg, records)["visibility"]["pooled"] <= 0.05


@pytest.mark.criterion(5)
def test_linear_basis_which_path_correlation(linear_run):
    cfg, records = linear_run
    assert all((r.env_outcome, r.path_history[1]) in (("H", "a"), ("V", "b")) for r in records)
    assert summarize(cfg, records)["path_outcome_correlation"] == 1.0


# --------------------------------------------------------------------------
# 6. case pools
# --------------------------------------------------------------------------

@pytest.mark.criterion(6)
@pytest.mark.parametrize("basis", ["circular", "linear"])
def test_case_pools_in_every_record(basis, circular_run, linear_run):
    cfg, records = circular_run if basis == "circular" else linear_run
    seen = {}
    for r in records:
        assert r.case == ERASER_CASES[(r.path_history[1], r.wave_branch)]
        assert r.case in CASE_POOLS[r.env_outcome]
        seen.setdefault(r.env_outcome, set()).add(r.case)
    expected = {"circular": {"L": {1, 3}, "R": {2, 4}}, "linear": {"H": {1, 2}, "V": {3, 4}}}[basis]
    assert seen == expected
    assert summarize(cfg, records)["case_pools_consistent"] is True


# --------------------------------------------------------------------------
# 7. independent beams
# --------------------------------------------------------------------------

@pytest.mark.criterion(7)
@pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
def test_independent_beams(seed):
    cfg = from_dict({**BEAMS, "seed": seed})
    records = run_trials(cfg)
    assert len(records) == 100 * 200
    result = summarize(cfg, records)
    assert result["groups_visibility_ge_0p9"] >= 90
    assert result["pooled_visibility"] <= 0.1
    # fitted fringe phase follows each group's trial phase
    errs = [abs(math.remainder(g["fitted_phase"] - g["trial_phase"], 2 * math.pi))
            for g in result["groups"]]
    assert np.median(errs) < 0.2


@pytest.mark.criterion(7)
@pytest.mark.parametrize("theta", [0.5, 1.0, 2.5, -1.2])
def test_peak_shifts_with_trial_phase(theta):
    dk = wo.delta_k(1e-3, 633e-9)
    x = np.linspace(-math.pi / dk, math.pi / dk, 20001)
    peak0 = x[np.argmax(wo.two_beam_pattern(1e-3, 633e-9, 0.0)(x))]
    peak = x[np.argmax(wo.two_beam_pattern(1e-3, 633e-9, theta)(x))]
    period = 2 * math.pi / dk
    shift = math.remainder(peak - peak0, period)
    assert shift == pytest.approx(math.remainder(-theta / dk, period), abs=2 * (x[1] - x[0]))


# --------------------------------------------------------------------------
# 8. double slit
# --------------------------------------------------------------------------

TV_THRESHOLD = 0.2  # frozen after the oracle run (measured 0.3198)


@pytest.fixture(scope="module")
def double_slit_run():
    cfg = reference_double_slit(trials=100_000, seed=5)
    t0 = time.perf_counter()
    records = run_trials(cfg)
    result = summarize(cfg, records)
    return cfg, records, result, time.perf_counter() - t0


@pytest.mark.criterion(8)
def test_double_slit_chi_square(double_slit_run):
    _, records, result, elapsed = double_slit_run
    assert len(records) == 100_000
    assert result["oracle"]["comparison"]["p_value"] > 0.01
    assert elapsed <= 60


@pytest.mark.criterion(8)
def test_double_slit_fringe_spacing(double_slit_run):
    cfg = double_slit_run[0]
    mask = wo.ApertureMask(cfg.slit_centers, cfg.slit_width, cfg.open)
    grid = wo.Grid(cfg.grid_halfwidth, cfg.grid_points)
    geom = qm.DoubleSlitGeometry(cfg.wavelength, cfg.distance, mask.separation, cfg.slit_width)
    assert geom.fringe_spacing == pytest.approx(6.33e-3, rel=1e-9)
    peaks = wo.fringe_factor_peaks(mask, cfg.wavelength, cfg.distance, grid,
                                   screen=double_slit_field(cfg))
    assert abs(wo.fringe_spacing(peaks) - geom.fringe_spacing) <= grid.spacing
    # raw intensity maxima sit on the Fraunhofer maxima to within one cell
    screen = double_slit_field(cfg)
    raw = wo.fringe_peaks(screen)
    fraunhofer = qm.oracle_double_slit(geom).intensity(screen.positions)
    closed = screen.positions[wo.local_maxima(fraunhofer)]
    assert len(raw) == len(closed)
    assert np.max(np.abs(raw - closed)) <= grid.spacing


@pytest.mark.criterion(8)
def test_double_slit_is_not_sum_of_single_slits(double_slit_run):
    cfg = double_slit_run[0]
    mask = wo.ApertureMask(cfg.slit_centers, cfg.slit_width, cfg.open)
    grid = wo.Grid(cfg.grid_halfwidth, cfg.grid_points)
    both = wo.screen_pdf(double_slit_field(cfg))
    summed = wo.incoherent_sum_pdf(mask, cfg.wavelength, cfg.distance, grid)
    assert wo.total_variation(both.probs, summed.probs) > TV_THRESHOLD


@pytest.mark.criterion(8)
@pytest.mark.parametrize("open_", [(True, False), (False, True)])
def test_one_slit_has_no_interior_zeros(open_):
    base = reference_double_slit(trials=10_000, seed=3).to_dict()
    cfg = from_dict({**base, "open": list(open_)})
    intensity = double_slit_field(cfg).intensity
    assert intensity.min() > 1e-3 * intensity.max()
    assert len(wo.local_minima(intensity)) == 0
    records = run_trials(cfg)
    assert all(r.path_known for r in records)


# --------------------------------------------------------------------------
# 9. non-collapse
# --------------------------------------------------------------------------

@pytest.mark.criterion(9)
def test_screen_field_unchanged_by_sampling():
    cfg = reference_double_slit(trials=100_000, seed=8)
    screen = double_slit_field(cfg)
    before = screen.to_bytes()
    fresh = wo.shape_mode(wo.ApertureMask(cfg.slit_centers, cfg.slit_width, cfg.open),
                          cfg.wavelength, cfg.distance,
                          wo.Grid(cfg.grid_halfwidth, cfg.grid_points)).to_bytes()
    records = run_trials(cfg)
    assert len(records) == 100_000
    assert screen.to_bytes() == before
    assert double_slit_field(cfg).to_bytes() == before
    assert fresh == before


# --------------------------------------------------------------------------
# 10. universal invariants
# --------------------------------------------------------------------------

def _all_elements():
    p = [ModeLabel("x"), ModeLabel("y")]
    yield make_element(BEAM_SPLITTER, p)
    for phi in np.linspace(-7, 7, 29):
        yield make_element(PHASE_SHIFTER, p[:1], {"phase": float(phi)})
    yield make_element(POLARIZING_BS, [ModeLabel("s")])
    yield make_element(MIRROR, p)
    yield make_element(POLARIZATION_CONTROLLER, [ModeLabel("a", "V")])
    for circuit in (mach_zehnder_circuit(1), mach_zehnder_circuit(2, 1.0),
                    eraser_circuit(0.7), independent_beams_circuit(2.0)):
        for _, el in circuit.elements:
            yield el


@pytest.mark.criterion(10)
def test_unitarity_of_every_element():
    worst = max(el.unitarity_error() for el in _all_elements())
    assert worst < 1e-12


@pytest.mark.criterion(10)
@pytest.mark.parametrize("phase", np.linspace(0, 2 * math.pi, 9).tolist())
def test_end_to_end_norm(phase):
    for circuit in (mach_zehnder_circuit(1, phase), mach_zehnder_circuit(2, phase),
                    independent_beams_circuit(phase)):
        assert abs(propagate(circuit).norm2() - 1) < 1e-10
    late = mach_zehnder_circuit(1, phase)
    for t in valid_choice_steps(late):
        assert abs(propagate(late, choices=[ChoiceEvent(t, INSERT)]).norm2() - 1) < 1e-10
    pair = polarization_to_path(entangled_pair())
    for outcome in (ModeLabel("e", "L"), ModeLabel("e", "R"), ModeLabel("e", "H"), ModeLabel("e", "V")):
        _, system = condition_on_environment(pair, outcome)
        circuit = eraser_circuit(phase)
        state = circuit.input_state()
        amps = dict(state.amplitudes)
        amps[ModeLabel("s", "H")] = system.amplitudes[ModeLabel("b")]
        amps[ModeLabel("s", "V")] = system.amplitudes[ModeLabel("a")]
        out = propagate(circuit, type(state)(amps))
        assert abs(out.norm2() - 1) < 1e-10


def _all_scenarios(trials):
    yield mz(1, trials)
    yield mz(2, trials, arm_phase=0.4)
    yield mz(1, trials, choice_step=2)
    yield eraser("circular", trials)
    yield eraser("linear", trials)
    yield from_dict({**BEAMS, "n_trial_groups": 10, "photons_per_trial": trials // 10, "seed": 1})
    yield reference_double_slit(trials=trials, seed=4)


@pytest.mark.criterion(10)
def test_exactly_one_click_per_trial():
    for cfg in _all_scenarios(2_000):
        records = run_trials(cfg)
        ids = [r.trial_id for r in records]
        assert ids == list(range(len(records)))
        assert all(isinstance(r.detector, str) and r.detector for r in records)
        assert summarize(cfg, records, timestamp=False)["clicks_per_trial"] == [1]


@pytest.mark.criterion(10)
def test_zero_amplitude_ports_never_click_in_1e6_trials():
    total = 0
    # static and late-inserted dark port
    for cfg in (mz(2, 250_000, seed=11), mz(1, 250_000, seed=12, choice_step=3)):
        records = run_trials(cfg, workers=4)
        total += len(records)
        assert not any(r.detector == "det1" for r in records)
    # eraser: conditional dark detectors at phase 0 and pi
    cfg = from_dict({"kind": "quantum_eraser", "basis": "circular", "phase_sweep": [0.0, math.pi],
                     "trials": 500_000, "seed": 13})
    records = run_trials(cfg, workers=4)
    total += len(records)
    dark = {("L", 0.0): "det1", ("R", 0.0): "det2", ("L", math.pi): "det2", ("R", math.pi): "det1"}
    assert not any(r.detector == dark[(r.env_outcome, r.arm_phase)] for r in records)
    assert total >= 1_000_000


@pytest.mark.criterion(10)
def test_serial_and_parallel_runs_are_byte_identical():
    for cfg in _all_scenarios(3_000):
        serial = run_trials(cfg, workers=1)
        parallel = run_trials(cfg, workers=4)
        odd = run_trials(cfg, chunks=[(0, 7), (7, 1000), (1000, cfg.trials)])
        ref = dumps(records_to_json(serial))
        assert dumps(records_to_json(parallel)) == ref
        assert dumps(records_to_json(odd)) == ref
        assert (dumps(summarize(cfg, serial, timestamp=False))
                == dumps(summarize(cfg, parallel, timestamp=False)))


@pytest.mark.criterion(10)
def test_dark_port_amplitude_is_exact_zero_not_rounding():
    terminal = propagate(mach_zehnder_circuit(2))
    amp = terminal.amplitudes[ModeLabel("out1")]
    assert amp == 0 and not cmath.isnan(amp)
