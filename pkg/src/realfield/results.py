"""Run summaries, JSON/CSV serialization and text reports.

Every number in a :func:`summarize` result is computed from the
scenario and the trial records alone, so persisting the records is
enough to audit a report.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from collections import Counter, defaultdict
from datetime import datetime, timezone
from typing import Any, Iterable, Sequence

import numpy as np

from . import __version__
from . import oracle as qm
from . import waveoptics as wo
from .errors import InsufficientDataError
from .sampler import CASE_POOLS, TrialRecord, double_slit_field, visibility
from .scenario import DOUBLE_SLIT, INDEPENDENT_BEAMS, MACH_ZEHNDER, QUANTUM_ERASER, ScenarioConfig

TIMESTAMP_KEY = "created_utc"
HIST_COLUMNS = ("bin_left_m", "bin_right_m", "count", "pdf_value")
PHASE_COLUMNS = ("phase_rad", "det1_count", "det2_count", "visibility")
GROUP_VISIBILITY_THRESHOLD = 0.9


# --------------------------------------------------------------------------
# JSON with 17 significant digits
# --------------------------------------------------------------------------

def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    s = format(x, ".17g")
    if "e" not in s and "." not in s:
        s += ".0"
    return s


def dumps(obj: Any, indent: int = 2) -> str:
    """JSON text with every float written to 17 significant digits."""
    out: list[str] = []

    def emit(o, level):
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if isinstance(o, bool) or o is None:
            out.append(json.dumps(o))
        elif isinstance(o, (int, np.integer)):
            out.append(str(int(o)))
        elif isinstance(o, (float, np.floating)):
            out.append(_fmt_float(float(o)))
        elif isinstance(o, str):
            out.append(json.dumps(o))
        elif isinstance(o, dict):
            if not o:
                out.append("{}")
                return
            out.append("{\n")
            for i, (k, v) in enumerate(o.items()):
                out.append(f"{pad}{json.dumps(str(k))}: ")
                emit(v, level + 1)
                out.append(",\n" if i < len(o) - 1 else "\n")
            out.append(end + "}")
        elif isinstance(o, (list, tuple, np.ndarray)):
            seq = list(o)
            if not seq:
                out.append("[]")
                return
            if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in seq):
                out.append("[")
                for i, v in enumerate(seq):
                    emit(v, level + 1)
                    if i < len(seq) - 1:
                        out.append(", ")
                out.append("]")
                return
            out.append("[\n")
            for i, v in enumerate(seq):
                out.append(pad)
                emit(v, level + 1)
                out.append(",\n" if i < len(seq) - 1 else "\n")
            out.append(end + "]")
        else:
            raise TypeError(f"cannot serialize {type(o).__name__}")

    emit(obj, 0)
    return "".join(out) + "\n"


def write_atomic(path: str, text: str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# --------------------------------------------------------------------------
# summaries
# --------------------------------------------------------------------------

def _phase_key(x: float) -> str:
    return _fmt_float(x)


def _safe_visibility(table) -> float | None:
    try:
        return visibility(table)
    except InsufficientDataError:
        return None


def _interferometer_tables(records: Sequence[TrialRecord]):
    pooled: dict[float, list[int]] = defaultdict(lambda: [0, 0])
    cond: dict[str, dict[float, list[int]]] = defaultdict(lambda: defaultdict(lambda: [0, 0]))
    for r in records:
        col = 0 if r.detector == "det1" else 1
        pooled[r.arm_phase][col] += 1
        if r.env_outcome is not None:
            cond[r.env_outcome][r.arm_phase][col] += 1
    return pooled, cond


def _mz_summary(config: ScenarioConfig, records, out):
    pooled, _ = _interferometer_tables(records)
    phase = config.arm_phase
    n1, n2 = pooled[phase] if records else (0, 0)
    setup = config.setup
    if config.choice_step is not None:
        setup = 2 if config.setup == 1 else 1
    pred = qm.oracle_mz(setup, phase)
    out["effective_setup"] = setup
    out["phase_table"] = [{"phase_rad": phase, "det1": n1, "det2": n2}]
    out["visibility"] = None
    out["oracle"] = {
        "detector_probs": pred.detector_probs,
        "comparison": qm.compare({"det1": n1, "det2": n2}, pred).to_dict() if records else None,
    }


def _eraser_summary(config: ScenarioConfig, records, out):
    pooled, cond = _interferometer_tables(records)
    phases = list(config.phases)
    out["phase_table"] = [{"phase_rad": p, "det1": pooled[p][0], "det2": pooled[p][1]} for p in phases]
    vis = {"pooled": _safe_visibility({p: tuple(pooled[p]) for p in phases})}
    conditional = {}
    oracle_rows = []
    for outcome in sorted(cond):
        rows = []
        for p in phases:
            n1, n2 = cond[outcome][p]
            pred = qm.oracle_eraser(config.basis, outcome, p)
            tot = n1 + n2
            rows.append({
                "phase_rad": p, "det1": n1, "det2": n2,
                "p_det1": n1 / tot if tot else None,
                "oracle_p_det1": pred.detector_probs["det1"],
                "sigma": qm.binomial_sigma(pred.detector_probs["det1"], tot) if tot else None,
            })
            if tot:
                cmp_ = qm.compare({"det1": n1, "det2": n2}, pred).to_dict()
                oracle_rows.append({"env_outcome": outcome, "phase_rad": p, **cmp_})
        conditional[outcome] = rows
        vis[outcome] = _safe_visibility({p: tuple(cond[outcome][p]) for p in phases})
    out["conditional"] = conditional
    out["visibility"] = vis
    out["env_outcome_counts"] = dict(sorted(Counter(r.env_outcome for r in records).items()))

    pools: dict[str, Counter] = defaultdict(Counter)
    for r in records:
        pools[r.env_outcome][r.case] += 1
    out["case_pools"] = {o: {str(c): n for c, n in sorted(pools[o].items())} for o in sorted(pools)}
    out["case_pools_consistent"] = all(
        set(pools[o]) <= set(CASE_POOLS[o]) for o in pools)
    if config.basis == "linear" and records:
        hits = sum(1 for r in records
                   if (r.env_outcome, r.path_history[1]) in (("H", "a"), ("V", "b")))
        out["path_outcome_correlation"] = hits / len(records)
    out["oracle"] = {"comparisons": oracle_rows}


def beams_histogram_edges(config: ScenarioConfig) -> np.ndarray:
    period = config.wavelength / config.angle
    half = config.screen_periods * period / 2
    return np.linspace(-half, half, config.screen_periods * config.bins_per_period + 1)


def _beams_summary(config: ScenarioConfig, records, out):
    dk = wo.delta_k(config.angle, config.wavelength)
    edges = beams_histogram_edges(config)
    window = (edges[0], edges[-1])
    x = np.array([r.screen_position for r in records])
    hist = wo.histogram(x, edges)

    by_group: dict[int, list[TrialRecord]] = defaultdict(list)
    for r in records:
        by_group[r.group].append(r)
    groups = []
    expected = np.zeros(len(edges) - 1)
    for g in sorted(by_group):
        rs = by_group[g]
        theta = rs[0].trial_phase
        fit = wo.fit_fringe([r.screen_position for r in rs], dk, window) if len(rs) >= 2 else None
        groups.append({
            "group": g, "n": len(rs), "trial_phase": theta,
            "fitted_visibility": fit.visibility if fit else None,
            "fitted_phase": fit.phase if fit else None,
        })
        mass = np.diff(theta_antiderivative(edges, dk, theta))
        expected += len(rs) * mass / mass.sum()
    pdf = expected / expected.sum() if records else np.full(len(edges) - 1, 1 / (len(edges) - 1))
    good = [g for g in groups if g["fitted_visibility"] is not None
            and g["fitted_visibility"] >= GROUP_VISIBILITY_THRESHOLD]
    out["histogram"] = {"bin_edges": edges.tolist(), "counts": hist.counts.tolist(), "pdf": pdf.tolist()}
    out["pooled_visibility"] = wo.histogram_visibility(hist.counts) if records else None
    out["groups"] = groups
    out["groups_visibility_ge_0p9"] = len(good)
    out["oracle"] = {"comparison": qm.compare(hist.counts, pdf).to_dict() if records else None}


def theta_antiderivative(x, dk: float, theta: float):
    """Antiderivative of 1 + cos(dk x + theta)."""
    return x + np.sin(dk * np.asarray(x) + theta) / dk


def _double_slit_summary(config: ScenarioConfig, records, out):
    screen = double_slit_field(config)
    pdf = wo.screen_pdf(screen)
    x = np.array([r.screen_position for r in records])
    hist = wo.histogram(x, pdf.bin_edges)
    out["histogram"] = {"bin_edges": pdf.bin_edges.tolist(), "counts": hist.counts.tolist(),
                        "pdf": pdf.probs.tolist()}
    out["slit_counts"] = dict(sorted(Counter(r.path_history[1] for r in records).items()))
    mask = wo.ApertureMask(config.slit_centers, config.slit_width, config.open)
    sep = mask.separation
    open_centers = mask.open_centers
    if len(open_centers) >= 2 and sep is not None:
        out["fraunhofer_fringe_spacing_m"] = config.wavelength * config.distance / sep
    out["oracle"] = {"comparison": qm.compare(hist.counts, pdf.probs, min_expected=5).to_dict()
                     if records else None}


def summarize(config: ScenarioConfig, records: Sequence[TrialRecord],
              timestamp: bool = True) -> dict:
    """RunResult as a JSON-ready dict."""
    out: dict[str, Any] = {
        "tool": "realfield",
        "version": __version__,
        "scenario": config.to_dict(),
        "trials": len(records),
        "seed": config.seed,
    }
    if timestamp:
        out[TIMESTAMP_KEY] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    out["detector_counts"] = dict(sorted(Counter(r.detector for r in records).items()))
    clicks = Counter(r.trial_id for r in records if r.detector)
    n_ids = len({r.trial_id for r in records})
    per_trial = set(clicks.values()) | ({0} if len(clicks) < n_ids else set())
    out["clicks_per_trial"] = sorted(per_trial)
    out["path_known_fraction"] = (sum(r.path_known for r in records) / len(records)
                                  if records else None)
    kind = config.kind
    if kind == MACH_ZEHNDER:
        _mz_summary(config, records, out)
    elif kind == QUANTUM_ERASER:
        _eraser_summary(config, records, out)
    elif kind == INDEPENDENT_BEAMS:
        _beams_summary(config, records, out)
    elif kind == DOUBLE_SLIT:
        _double_slit_summary(config, records, out)
    return out


def strip_timestamp(result: dict) -> dict:
    return {k: v for k, v in result.items() if k != TIMESTAMP_KEY}


def records_to_json(records: Iterable[TrialRecord]) -> list[dict]:
    return [r.to_dict() for r in records]


def records_from_json(items: Iterable[dict]) -> list[TrialRecord]:
    return [TrialRecord.from_dict(d) for d in items]


# --------------------------------------------------------------------------
# reports
# --------------------------------------------------------------------------

def _csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else (_fmt_float(v) if isinstance(v, float) else v) for v in row])
    return buf.getvalue()


def report_csv(result: dict) -> str:
    """CSV export.

    Interferometers: ``phase_rad,det1_count,det2_count,visibility`` (the
    eraser prefixes ``env_outcome``, with ``all`` for pooled rows).
    Screen experiments: ``bin_left_m,bin_right_m,count,pdf_value`` where
    ``pdf_value`` is the predicted probability mass of the bin.
    """
    kind = result["scenario"]["kind"]
    if kind == MACH_ZEHNDER:
        vis = result.get("visibility")
        rows = [(r["phase_rad"], r["det1"], r["det2"], vis) for r in result["phase_table"]]
        return _csv_text(PHASE_COLUMNS, rows)
    if kind == QUANTUM_ERASER:
        vis = result["visibility"]
        rows = [("all", r["phase_rad"], r["det1"], r["det2"], vis.get("pooled"))
                for r in result["phase_table"]]
        for outcome, table in result["conditional"].items():
            rows += [(outcome, r["phase_rad"], r["det1"], r["det2"], vis.get(outcome)) for r in table]
        return _csv_text(("env_outcome",) + PHASE_COLUMNS, rows)
    h = result["histogram"]
    edges = h["bin_edges"]
    rows = [(float(edges[i]), float(edges[i + 1]), int(c), float(p))
            for i, (c, p) in enumerate(zip(h["counts"], h["pdf"]))]
    return _csv_text(HIST_COLUMNS, rows)


def report_table(result: dict) -> str:
    lines = []
    sc = result["scenario"]
    lines.append(f"scenario   {sc['kind']}  (trials={result['trials']}, seed={result['seed']}, "
                 f"realfield {result['version']})")
    counts = "  ".join(f"{k}={v}" for k, v in result["detector_counts"].items())
    lines.append(f"detectors  {counts}")
    if result.get("path_known_fraction") is not None:
        lines.append(f"path known {result['path_known_fraction']:.4f}")
    kind = sc["kind"]
    if kind in (MACH_ZEHNDER, QUANTUM_ERASER):
        lines.append("")
        lines.append(f"{'outcome':>8} {'phase':>10} {'det1':>8} {'det2':>8} {'p(det1)':>9} {'oracle':>8}")
        for r in result["phase_table"]:
            tot = r["det1"] + r["det2"]
            p = r["det1"] / tot if tot else float("nan")
            lines.append(f"{'all':>8} {r['phase_rad']:>10.4f} {r['det1']:>8} {r['det2']:>8} {p:>9.4f} {'':>8}")
        for outcome, rows in (result.get("conditional") or {}).items():
            for r in rows:
                p = r["p_det1"] if r["p_det1"] is not None else float("nan")
                lines.append(f"{outcome:>8} {r['phase_rad']:>10.4f} {r['det1']:>8} {r['det2']:>8} "
                             f"{p:>9.4f} {r['oracle_p_det1']:>8.4f}")
        vis = result.get("visibility")
        if isinstance(vis, dict):
            lines.append("")
            lines.append("visibility " + "  ".join(
                f"{k}={'n/a' if v is None else format(v, '.4f')}" for k, v in vis.items()))
        if "path_outcome_correlation" in result:
            lines.append(f"path/outcome correlation {result['path_outcome_correlation']:.4f}")
        if "case_pools" in result:
            lines.append("case pools " + "  ".join(
                f"{o}:{sorted(int(c) for c in cs)}" for o, cs in result["case_pools"].items()))
    else:
        if "pooled_visibility" in result:
            lines.append(f"pooled histogram visibility {result['pooled_visibility']:.4f}")
            lines.append(f"groups with fitted visibility >= 0.9: "
                         f"{result['groups_visibility_ge_0p9']}/{len(result['groups'])}")
        if "fraunhofer_fringe_spacing_m" in result:
            lines.append(f"fringe spacing (lambda L / d) {result['fraunhofer_fringe_spacing_m']:.6g} m")
    cmp_ = (result.get("oracle") or {}).get("comparison")
    if cmp_:
        lines.append(f"oracle     chi2={cmp_['chi_square']:.3f} dof={cmp_['dof']} "
                     f"p={cmp_['p_value']:.4f} tv={cmp_['tv_distance']:.4f}")
    return "\n".join(lines) + "\n"
