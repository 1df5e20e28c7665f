"""Network and profile files, and the results bundle written by the CLI.

Network file (FORMAT v1): one record per line, `#` starts a comment.

    FORMAT v1
    BASE_MVA <MVA>
    AREA <id> <contact_delay_min> <response_delay_min>
    BUS  <id> <area>
    LINE <id> <from> <to> <x_pu> <Pmax_MW> <lambda_per_y> <mu_per_h> <reclose_h> <responsible_area|->
    GEN  <id> <bus> <Pmax_MW> <priority> <lambda_per_y> <mu_per_h>
    LOAD <id> <bus> <Dmax_MW>
    PARAMS beta=<b> eta=<e> xi=<x> W=<w> sigma=<s>

PARAMS keys may be omitted individually or altogether; missing ones take
the defaults of `model.Params`.

Profile file (FORMAT v1): optional `AREAS <id> ...` line naming the
columns, then one row per hour with one demand factor in [0, 1] per area.
"""
from __future__ import annotations

import csv
import hashlib
import io as _io
import os
from dataclasses import fields
from importlib import resources
from pathlib import Path

import numpy as np

from .components import CAUSES
from .model import Bus, ControlArea, Generator, Line, Load, NetworkModel, Params, validate
from .stats import ENERGY, frequency_curve

FORMAT_LINE = "FORMAT v1"
PARAM_KEYS = {"beta": "beta", "eta": "eta", "xi": "xi", "W": "shed_weight", "sigma": "sigma"}
CAUSE_COLUMNS = ("energy_generation_inadequacy_MWh", "energy_system_splitting_MWh", "energy_operator_intervention_MWh")


class FormatError(ValueError):
    pass


def _num(tok: str, where: str) -> float:
    try:
        return float(tok)
    except ValueError:
        raise FormatError(f"{where}: expected a number, got {tok!r}") from None


def parse_network_text(text: str, source: str = "<network>") -> NetworkModel:
    areas, buses, lines, gens, loads = [], [], [], [], []
    params = {}
    base = 100.0
    seen: dict[str, set] = {k: set() for k in ("AREA", "BUS", "LINE", "GEN", "LOAD")}
    arity = {"AREA": 4, "BUS": 3, "LINE": 10, "GEN": 7, "LOAD": 4}
    for lineno, raw in enumerate(text.splitlines(), 1):
        where = f"{source}:{lineno}"
        tok = raw.split("#", 1)[0].split()
        if not tok:
            continue
        kind = tok[0].upper()
        if kind == "FORMAT":
            if tok[1:] != ["v1"]:
                raise FormatError(f"{where}: unsupported format {' '.join(tok[1:])}")
            continue
        if kind == "BASE_MVA":
            if len(tok) != 2:
                raise FormatError(f"{where}: BASE_MVA takes one value")
            base = _num(tok[1], where)
            continue
        if kind == "PARAMS":
            for item in tok[1:]:
                key, sep, val = item.partition("=")
                if not sep or key not in PARAM_KEYS:
                    raise FormatError(f"{where}: bad PARAMS entry {item!r}")
                params[PARAM_KEYS[key]] = _num(val, where)
            continue
        if kind not in arity:
            raise FormatError(f"{where}: unknown record {tok[0]!r}")
        if len(tok) != arity[kind]:
            raise FormatError(f"{where}: {kind} expects {arity[kind] - 1} fields, got {len(tok) - 1}")
        ident = tok[1]
        if ident in seen[kind]:
            raise FormatError(f"{where}: duplicate {kind.lower()} id {ident}")
        seen[kind].add(ident)
        if kind == "AREA":
            areas.append(ControlArea(ident, _num(tok[2], where), _num(tok[3], where)))
        elif kind == "BUS":
            buses.append(Bus(ident, tok[2]))
        elif kind == "LINE":
            x, pmax, lam, mu, rec = (_num(t, where) for t in tok[4:9])
            resp = None if tok[9] == "-" else tok[9]
            lines.append(Line(ident, tok[2], tok[3], x, pmax, lam, mu, rec, resp))
        elif kind == "GEN":
            pmax, prio, lam, mu = (_num(t, where) for t in tok[3:7])
            if prio != int(prio):
                raise FormatError(f"{where}: priority must be an integer")
            gens.append(Generator(ident, tok[2], pmax, int(prio), lam, mu))
        else:
            loads.append(Load(ident, tok[2], _num(tok[3], where)))
    model = NetworkModel(tuple(buses), tuple(lines), tuple(gens), tuple(loads), tuple(areas), Params(**params), base)
    problems = validate(model)
    if problems:
        raise FormatError(f"{source}: invalid network: " + "; ".join(problems))
    return model


def parse_network(path) -> NetworkModel:
    path = Path(path)
    return parse_network_text(path.read_text(), str(path))


def _g(v: float) -> str:
    v = float(v)
    return str(int(v)) if v.is_integer() and abs(v) < 1e15 else repr(v)


def serialize_network(model: NetworkModel) -> str:
    """Canonical text form; parsing it back gives an identical model."""
    out = [FORMAT_LINE, f"BASE_MVA {_g(model.base_mva)}"]
    for a in model.areas:
        out.append(f"AREA {a.id} {_g(a.contact_delay)} {_g(a.response_delay)}")
    for b in model.buses:
        out.append(f"BUS {b.id} {b.area}")
    for ln in model.lines:
        out.append(
            f"LINE {ln.id} {ln.from_bus} {ln.to_bus} {_g(ln.x)} {_g(ln.rating)} {_g(ln.failure_rate)} "
            f"{_g(ln.repair_rate)} {_g(ln.reclose_delay)} {ln.responsible_area or '-'}"
        )
    for g in model.generators:
        out.append(f"GEN {g.id} {g.bus} {_g(g.capacity)} {g.priority} {_g(g.failure_rate)} {_g(g.repair_rate)}")
    for d in model.loads:
        out.append(f"LOAD {d.id} {d.bus} {_g(d.peak_demand)}")
    inv = {v: k for k, v in PARAM_KEYS.items()}
    out.append("PARAMS " + " ".join(f"{inv[f.name]}={_g(getattr(model.params, f.name))}" for f in fields(Params)))
    return "\n".join(out) + "\n"


def model_hash(model: NetworkModel) -> str:
    return hashlib.sha256(serialize_network(model).encode()).hexdigest()[:16]


def parse_profile_text(text: str, n_areas: int, source: str = "<profile>") -> np.ndarray:
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        where = f"{source}:{lineno}"
        tok = raw.split("#", 1)[0].split()
        if not tok:
            continue
        if tok[0] == "FORMAT":
            if tok[1:] != ["v1"]:
                raise FormatError(f"{where}: unsupported format {' '.join(tok[1:])}")
            continue
        if tok[0] == "AREAS":
            if len(tok) - 1 != n_areas:
                raise FormatError(f"{where}: profile names {len(tok) - 1} areas, network has {n_areas}")
            continue
        if len(tok) != n_areas:
            raise FormatError(f"{where}: expected {n_areas} values, got {len(tok)}")
        vals = [_num(t, where) for t in tok]
        for v in vals:
            if not 0.0 <= v <= 1.0:
                raise FormatError(f"{where}: demand factor {v} outside [0, 1]")
        rows.append(vals)
    if not rows:
        raise FormatError(f"{source}: empty profile")
    return np.array(rows, dtype=float)


def parse_profile(path, n_areas: int) -> np.ndarray:
    path = Path(path)
    return parse_profile_text(path.read_text(), n_areas, str(path))


def serialize_profile(profile: np.ndarray, area_ids=None) -> str:
    buf = [FORMAT_LINE]
    if area_ids is not None:
        buf.append("AREAS " + " ".join(area_ids))
    buf += [" ".join(f"{v:.6g}" for v in row) for row in np.asarray(profile)]
    return "\n".join(buf) + "\n"


def profile_hash(profile: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(profile, dtype=float).tobytes()).hexdigest()[:16]


def bundled(name: str) -> Path:
    return Path(str(resources.files("gridmc") / "data" / name))


def load_rts96() -> tuple[NetworkModel, np.ndarray]:
    model = parse_network(bundled("rts96.net"))
    return model, parse_profile(bundled("rts96_profile.txt"), len(model.areas))


# Results bundle -------------------------------------------------------------

def fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.6g}"


def _header_lines(header: dict) -> list[str]:
    return [f"# {FORMAT_LINE}"] + [f"# {k}={v}" for k, v in header.items()]


def write_results(out_dir, header: dict, results, model: NetworkModel, metric: str = ENERGY, thresholds=None) -> dict:
    """Write events.csv, freq.csv, overloads.csv and summary.txt into `out_dir`.

    Returns the paths written. Aborted replications are excluded from the
    year count and reported in the summary.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise PermissionError(f"output directory {out} is not writable")
    good = [r for r in results if not r.aborted]
    aborted = [r for r in results if r.aborted]
    records = [rec for r in good for rec in r.records]
    n_years = len(good)
    paths = {}

    def write_csv(name, columns, rows):
        buf = _io.StringIO()
        buf.write("\n".join(_header_lines(header)) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(v) for v in row])
        p = out / name
        p.write_text(buf.getvalue())
        paths[name] = p

    write_csv(
        "events.csv",
        ["year", "start_h", "end_h", "energy_MWh", *CAUSE_COLUMNS, "max_unserved_MW", "truncated"],
        ([r.year, r.start, r.end, r.energy, *r.energy_by_cause, r.max_unserved, r.truncated] for r in records),
    )
    conf = 0.90
    tag = f"{round(conf * 100)}"
    freq_rows = []
    if n_years:
        curve = frequency_curve(records, n_years, thresholds, metric, conf)
        freq_rows = zip(curve.thresholds, [metric] * len(curve.thresholds), curve.frequency, curve.lower, curve.upper)
    write_csv("freq.csv", ["threshold", "metric", "Fc", f"lo{tag}", f"hi{tag}"], freq_rows)

    alarms = np.zeros(len(model.lines), dtype=np.int64)
    for r in good:
        alarms += r.overloads
    total_alarms = int(alarms.sum())
    write_csv(
        "overloads.csv",
        ["line", "alarms", "relative_frequency"],
        ((ln.id, int(a), a / total_alarms if total_alarms else 0.0) for ln, a in zip(model.lines, alarms)),
    )

    energy = np.zeros(len(CAUSES))
    for rec in records:
        energy += rec.energy_by_cause
    lines = _header_lines(header)
    lines.append(f"years_completed={n_years}")
    lines.append(f"years_aborted={len(aborted)}")
    for r in aborted:
        lines.append(f"aborted_year={r.year} reason={r.message}")
    for c in CAUSES:
        lines.append(f"EENS_{c.name.lower()}_MWh_per_year={fmt(energy[c.value] / n_years if n_years else 0.0)}")
    lines.append(f"EENS_total_MWh_per_year={fmt(energy.sum() / n_years if n_years else 0.0)}")
    lines.append(f"blackout_events={len(records)}")
    lines.append(f"truncated_events={sum(rec.truncated for rec in records)}")
    counts: dict[str, int] = {}
    for r in good:
        for k, v in r.counts.items():
            counts[k] = counts.get(k, 0) + v
    for k in sorted(counts):
        lines.append(f"count_{k}={counts[k]}")
    p = out / "summary.txt"
    p.write_text("\n".join(lines) + "\n")
    paths["summary.txt"] = p
    return paths


def read_summary(path) -> dict[str, str]:
    out = {}
    for raw in Path(path).read_text().splitlines():
        if raw.startswith("#") or "=" not in raw:
            continue
        k, _, v = raw.partition("=")
        out.setdefault(k, v)
    return out
