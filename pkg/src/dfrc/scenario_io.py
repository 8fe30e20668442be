"""Scenario files (JSON, degrees and dB) and report export.

A scenario file has the sections ``array``, ``radar``, ``nodes``,
``signaling``, ``design``, ``waveform`` and ``output``; only ``radar`` is
required. Unknown keys are rejected. See the bundled files under
``dfrc/scenarios`` for complete examples.
"""

from __future__ import annotations

import copy
import csv
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .array_model import AngleGrid, ArrayGeometry, DomainError, beampattern_sweep
from .link_metrics import RadarSpec, SecondaryNode, db, from_db
from .waveform_lab import CommSignalingSpec

METHODS = ("radar_guarantee", "comm_guarantee", "priority_comb", "priority_greedy", "mse", "zf")


class ScenarioError(ValueError):
    """Scenario file could not be read or failed validation."""


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ArrayConfig(_Model):
    num_elements: int = Field(10, ge=1)
    spacing_wavelengths: float = Field(0.5, gt=0)


class SectorSpan(_Model):
    center_deg: float = Field(0.0, ge=-90, le=90)
    width_beamwidths: float = Field(0.5, gt=0)
    step_beamwidths: float = Field(0.1, gt=0)


class SectorAngles(_Model):
    angles_deg: List[float] = Field(min_length=1)


class RadarConfig(_Model):
    sector: Union[SectorAngles, SectorSpan]
    pulse_len: int = Field(100, ge=1)
    worst_case_input_snr_db: float = -34.0
    required_sinr_db: Optional[float] = None


class NodeConfig(_Model):
    angle_deg: Optional[float] = Field(None, ge=-90, le=90)
    input_snr_db: float
    symbol_len: int = Field(10, ge=1)
    channel_re: Optional[List[float]] = None
    channel_im: Optional[List[float]] = None

    @model_validator(mode="after")
    def _channel_or_angle(self):
        if self.angle_deg is None and self.channel_re is None:
            raise ValueError("give either angle_deg or channel_re/channel_im")
        if self.channel_im is not None and self.channel_re is None:
            raise ValueError("channel_im needs channel_re")
        return self


class SignalingConfig(_Model):
    constellation: Literal["QPSK"] = "QPSK"
    pulse_len: int = Field(7, ge=1)
    rolloff: float = Field(0.5, gt=0, le=1)
    seed: int = 0


class DesignConfig(_Model):
    method: Literal[METHODS] = "radar_guarantee"
    compare_methods: List[Literal[METHODS]] = Field(default_factory=list)
    required_comm_sinr_db: Optional[float] = None
    bisection_tol_db: float = Field(0.1, gt=0)
    comm_floor_db: float = -20.0
    radar_floor_db: float = 0.0
    radar_rank_cap: Optional[int] = Field(None, ge=1)
    pattern_margin_beamwidths: float = Field(0.25, ge=0)
    eval_grid_points: int = Field(181, ge=2)
    target_angles_deg: List[float] = Field(default_factory=list)
    crosscorr_weight: float = Field(0.0, ge=0)


class WaveformConfig(_Model):
    chirp_duration_s: float = Field(25e-6, gt=0)
    chirp_start_hz: float = -500e3
    chirp_end_hz: float = 500e3
    sample_rate_hz: float = Field(4e6, gt=0)
    target_angle_deg: Optional[float] = Field(None, ge=-90, le=90)
    trials: int = Field(100, ge=1)
    max_delay: int = Field(100, ge=0)
    doppler_max_hz: float = Field(200e3, ge=0)
    doppler_step_hz: float = Field(2e3, gt=0)


class OutputConfig(_Model):
    grid_points: int = Field(361, ge=2)


class ScenarioConfig(_Model):
    name: str = "scenario"
    description: str = ""
    array: ArrayConfig = Field(default_factory=ArrayConfig)
    radar: RadarConfig
    nodes: List[NodeConfig] = Field(default_factory=list)
    signaling: SignalingConfig = Field(default_factory=SignalingConfig)
    design: DesignConfig = Field(default_factory=DesignConfig)
    waveform: WaveformConfig = Field(default_factory=WaveformConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)


@dataclass(frozen=True)
class DesignSettings:
    """Design parameters in linear units and radians."""

    method: str
    compare_methods: Tuple[str, ...]
    required_comm_sinr: Optional[float]
    bisection_tol_db: float
    comm_floor_db: float
    radar_floor_db: float
    radar_rank_cap: Optional[int]
    priority_variant: str
    pattern_margin_beamwidths: float
    eval_grid_points: int
    target_angles: Tuple[float, ...]
    crosscorr_weight: float


@dataclass(frozen=True)
class WaveformSettings:
    chirp_duration_s: float
    chirp_start_hz: float
    chirp_end_hz: float
    sample_rate_hz: float
    target_angle: float
    trials: int
    delays: np.ndarray
    dopplers_hz: np.ndarray


@dataclass
class Scenario:
    name: str
    geometry: ArrayGeometry
    radar: RadarSpec
    nodes: list
    signaling: CommSignalingSpec
    design: DesignSettings
    waveform: WaveformSettings
    grid_points: int
    config: dict = field(default_factory=dict)


def _format_errors(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        path = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"{path}: {e['msg']}")
    return "; ".join(lines)


def _coerce(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(raw: dict, overrides) -> dict:
    """Apply ``dotted.key=value`` strings; values are parsed as JSON when possible.

    Integer path parts index into lists, e.g. ``nodes.0.input_snr_db=-3``.
    """
    out = copy.deepcopy(raw)
    for item in overrides or ():
        if "=" not in item:
            raise ScenarioError(f"override {item!r} is not of the form key=value")
        key, value = item.split("=", 1)
        parts = key.strip().split(".")
        node = out
        for p in parts[:-1]:
            if isinstance(node, list):
                node = node[int(p)]
            else:
                node = node.setdefault(p, {})
        last = parts[-1]
        if isinstance(node, list):
            node[int(last)] = _coerce(value)
        else:
            node[last] = _coerce(value)
    return out


def _radians(deg):
    return float(np.deg2rad(deg))


def build_scenario(raw: dict) -> Scenario:
    """Validate a parsed config dictionary and build the domain objects."""
    try:
        cfg = ScenarioConfig.model_validate(raw)
    except ValidationError as err:
        raise ScenarioError(_format_errors(err)) from None
    try:
        geometry = ArrayGeometry(cfg.array.num_elements, cfg.array.spacing_wavelengths)
        sec = cfg.radar.sector
        if isinstance(sec, SectorAngles):
            sector = AngleGrid.from_degrees(sorted(sec.angles_deg))
        else:
            sector = AngleGrid.sector(geometry, _radians(sec.center_deg), sec.width_beamwidths,
                                      sec.step_beamwidths)
        req_r = cfg.radar.required_sinr_db
        radar = RadarSpec(sector, cfg.radar.pulse_len,
                          float(from_db(cfg.radar.worst_case_input_snr_db)),
                          None if req_r is None else float(from_db(req_r)))
        nodes = []
        for i, n in enumerate(cfg.nodes):
            snr = float(from_db(n.input_snr_db))
            if n.channel_re is not None:
                re = np.asarray(n.channel_re, dtype=float)
                im = np.zeros_like(re) if n.channel_im is None else np.asarray(n.channel_im)
                if re.size != geometry.num_elements or im.size != re.size:
                    raise DomainError(f"nodes.{i}: channel needs {geometry.num_elements} entries")
                h = re + 1j * im
                # channels are given unit-scaled; input SNR sets the magnitude
                g = np.sqrt(snr) * h / np.linalg.norm(h) * np.sqrt(geometry.num_elements)
                nodes.append(SecondaryNode(g, snr, n.symbol_len,
                                           None if n.angle_deg is None else _radians(n.angle_deg)))
            else:
                nodes.append(SecondaryNode.line_of_sight(geometry, _radians(n.angle_deg), snr,
                                                         n.symbol_len))
        sig = cfg.signaling
        signaling = CommSignalingSpec(sig.constellation, sig.pulse_len, sig.rolloff, sig.seed)
        d = cfg.design
        variant = "greedy" if d.method == "priority_greedy" else "combinatorial"
        design = DesignSettings(
            method=d.method, compare_methods=tuple(d.compare_methods),
            required_comm_sinr=None if d.required_comm_sinr_db is None
            else float(from_db(d.required_comm_sinr_db)),
            bisection_tol_db=d.bisection_tol_db, comm_floor_db=d.comm_floor_db,
            radar_floor_db=d.radar_floor_db, radar_rank_cap=d.radar_rank_cap,
            priority_variant=variant, pattern_margin_beamwidths=d.pattern_margin_beamwidths,
            eval_grid_points=d.eval_grid_points,
            target_angles=tuple(_radians(a) for a in d.target_angles_deg),
            crosscorr_weight=d.crosscorr_weight)
        w = cfg.waveform
        target = sector.as_array()[0] if w.target_angle_deg is None else _radians(w.target_angle_deg)
        nd = int(round(w.doppler_max_hz / w.doppler_step_hz))
        waveform = WaveformSettings(
            w.chirp_duration_s, w.chirp_start_hz, w.chirp_end_hz, w.sample_rate_hz,
            float(target), w.trials, np.arange(-w.max_delay, w.max_delay + 1),
            np.arange(-nd, nd + 1) * w.doppler_step_hz)
    except DomainError as err:
        raise ScenarioError(str(err)) from None
    return Scenario(cfg.name, geometry, radar, nodes, signaling, design, waveform,
                    cfg.output.grid_points, cfg.model_dump(mode="json"))


def read_config(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ScenarioError(f"{path}: {err.strerror or err}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as err:
        raise ScenarioError(f"{path}: invalid JSON ({err})") from None


def bundled_path(name: str) -> Path:
    """Path of a bundled scenario such as ``"fig2"``."""
    stem = name[:-5] if name.endswith(".json") else name
    p = Path(str(resources.files("dfrc") / "scenarios" / f"{stem}.json"))
    if not p.exists():
        raise ScenarioError(f"no bundled scenario named {name!r}")
    return p


def bundled_names() -> list:
    root = Path(str(resources.files("dfrc") / "scenarios"))
    return sorted(p.stem for p in root.glob("*.json"))


def resolve_path(name_or_path) -> Path:
    p = Path(name_or_path)
    if p.exists():
        return p
    return bundled_path(str(name_or_path))


def load_scenario(path, overrides=None) -> Scenario:
    """Load, override and validate a scenario file.

    ``path`` may also name a bundled scenario (``"fig2"``).
    """
    raw = read_config(resolve_path(path))
    try:
        raw = apply_overrides(raw, overrides)
    except (KeyError, IndexError, ValueError, TypeError) as err:
        if isinstance(err, ScenarioError):
            raise
        raise ScenarioError(f"bad override: {err}") from None
    return build_scenario(raw)


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    return repr(float(x))


def _db_or_none(x):
    v = float(db(float(x)))
    return v if math.isfinite(v) else None


def _write_csv(path: Path, header, rows):
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
    except OSError as err:
        raise OSError(f"{path}: {err.strerror or err}") from err


def report_summary(report, scenario: Scenario) -> dict:
    """Scalar metrics of a report, dB values rounded-trip safe (plain floats)."""
    summary = {
        "scenario": scenario.name,
        "method": report.method,
        "status": report.status,
        "served": [int(k) for k in report.served],
        "diagnostics": _jsonable(report.diagnostics),
    }
    if not report.feasible:
        return summary
    summary.update({
        "comm_sinr_db": [_db_or_none(v) for v in report.achieved_comm_sinr],
        "radar_sinr_db": [_db_or_none(v) for v in report.achieved_radar_sinr],
        "radar_sinr_min_db": _db_or_none(report.achieved_radar_sinr_min),
        "radar_power_fraction": float(report.power_split[0]),
        "comm_power_fraction": float(report.power_split[1]),
        "threshold_db": None if report.threshold_db is None else float(report.threshold_db),
        "bracket_db": None if report.bracket_db is None else [float(b) for b in report.bracket_db],
        "guarantee_met": report.guarantee_met,
        "num_radar_waveforms": int(report.precoder.W_r.shape[1]),
    })
    if report.pre_reduction is not None:
        pre = report.pre_reduction
        summary["pre_reduction"] = {
            "comm_sinr_db": [_db_or_none(v) for v in pre["comm_sinr"]],
            "radar_sinr_min_db": _db_or_none(pre["radar_sinr_min"]),
            "radar_power_fraction": float(pre["power_split"][0]),
            "comm_power_fraction": float(pre["power_split"][1]),
        }
    return summary


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer, int)) and not isinstance(obj, bool):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def export_report(report, scenario: Scenario, out_dir) -> dict:
    """Write CSVs and ``manifest.json`` for one design; returns the manifest.

    Infeasible reports produce the manifest only.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise OSError(f"{out}: {err.strerror or err}") from err
    manifest = report_summary(report, scenario)
    files = []
    if report.feasible:
        W = report.precoder
        grid = AngleGrid.sine_uniform(scenario.grid_points)
        table = beampattern_sweep(scenario.geometry, W.W_c, W.W_r, grid)
        _write_csv(out / "beampattern.csv", table.header(),
                   [[_fmt(v) for v in row] for row in table.rows()])
        _write_csv(out / "power_split.csv", ["subsystem", "fraction"],
                   [["radar", _fmt(W.power_split()[0])], ["comm", _fmt(W.power_split()[1])]])
        rows = []
        for k, node in enumerate(scenario.nodes):
            ang = "" if node.los_angle is None else _fmt(np.rad2deg(node.los_angle))
            s = report.achieved_comm_sinr[k]
            rows.append([k, ang, _fmt(s), _fmt(db(s)) if s > 0 else "-inf",
                         int(k in report.served)])
        _write_csv(out / "node_sinr.csv", ["node", "angle_deg", "sinr", "sinr_db", "served"], rows)
        eig = np.asarray(report.radar_eigenvalues, dtype=float)
        tot = eig.sum()
        _write_csv(out / "radar_eigenspectrum.csv", ["index", "eigenvalue", "fraction"],
                   [[i, _fmt(v), _fmt(v / tot if tot > 0 else 0.0)] for i, v in enumerate(eig)])
        _write_csv(out / "bisection_trace.csv", ["threshold_db", "status"],
                   [[_fmt(x), st] for x, st in report.bisection_trace])
        files = ["beampattern.csv", "power_split.csv", "node_sinr.csv",
                 "radar_eigenspectrum.csv", "bisection_trace.csv"]
    manifest["files"] = files
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")
    return manifest


def load_manifest(path) -> dict:
    p = Path(path)
    if p.is_dir():
        p = p / "manifest.json"
    with open(p) as fh:
        return json.load(fh)
