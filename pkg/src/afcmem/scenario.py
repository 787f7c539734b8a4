"""Scenario files: YAML, schema version 1, unknown keys rejected.

Every physical quantity carries its unit in the key name.  A scenario holds
up to four independent sections (``simulate``, ``timebin``, ``bound``,
``timeline``); each CLI subcommand reads the one it needs.  Validation errors
point at the offending line of the file.
"""

from __future__ import annotations

import copy
from importlib import resources
from pathlib import Path
from typing import Annotated, Literal, Optional

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .bench import DetectionModel, TimebinSetup, default_timebin_setup
from .comb import CombParams, calibrate_depth
from .errors import InvalidParameterError
from .pulses import InputPulse, TimeGrid
from .stark import ElectricPulse, StarkConfig, StarkSchedule, design_retrieval_schedule

SCHEMA_VERSION = 1
U64_MAX = 2**64 - 1


PositiveMu = Annotated[float, Field(gt=0)]


class ScenarioError(InvalidParameterError):
    """Parse or validation failure; ``line`` is 1-based when known."""

    def __init__(self, message, source="<scenario>", line=None):
        self.source, self.line = source, line
        where = f"{source}:{line}" if line else source
        super().__init__(f"{where}: {message}")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class CombSection(_Strict):
    delta_MHz: float = Field(gt=0)
    finesse: float = Field(gt=1)
    bandwidth_MHz: float = Field(gt=0)
    tooth_depth: Optional[float] = Field(default=None, ge=0)
    background_d0: float = Field(default=0.0, ge=0)
    center_MHz: float = 0.0
    shape: Literal["gaussian", "square"] = "gaussian"
    # alternative to tooth_depth: solve for the depth giving this efficiency
    calibrate_efficiency: Optional[float] = Field(default=None, gt=0, lt=1)
    calibrate_time_ns: Optional[float] = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _depth_source(self):
        cal = (self.calibrate_efficiency, self.calibrate_time_ns)
        if self.tooth_depth is None and None in cal:
            raise ValueError("give tooth_depth or both calibrate_efficiency and calibrate_time_ns")
        if self.tooth_depth is not None and cal != (None, None):
            raise ValueError("tooth_depth and calibrate_* are mutually exclusive")
        return self

    def params(self) -> CombParams:
        delta = self.delta_MHz * 1e6
        d = self.tooth_depth
        if d is None:
            d = calibrate_depth(self.calibrate_efficiency, self.calibrate_time_ns * 1e-9,
                                delta / self.finesse, self.finesse, self.background_d0)
        return CombParams(delta, self.finesse, self.bandwidth_MHz * 1e6, d, self.background_d0,
                          self.center_MHz * 1e6, self.shape)


class StarkPulseSection(_Strict):
    start_ns: float
    duration_ns: float = Field(gt=0)
    field_V_per_cm: float


class StarkSection(_Strict):
    coefficient_kHz_per_V_cm: float = Field(default=11.68, gt=0)
    inhomogeneity: float = Field(default=0.0, ge=0)
    # either explicit pulses or a target order (1 means no pulses)
    pulses: Optional[list[StarkPulseSection]] = None
    n_target: Optional[int] = Field(default=None, ge=1)
    t_p_ns: float = Field(default=18.0, gt=0)

    @model_validator(mode="after")
    def _one_source(self):
        if (self.pulses is None) == (self.n_target is None):
            raise ValueError("give exactly one of pulses or n_target")
        return self

    def config(self) -> StarkConfig:
        return StarkConfig(self.coefficient_kHz_per_V_cm * 1e3, inhomogeneity=self.inhomogeneity)

    def schedule(self, delta: float) -> StarkSchedule | None:
        cfg = self.config()
        if self.pulses is not None:
            return StarkSchedule(cfg, tuple(ElectricPulse(p.start_ns * 1e-9, p.duration_ns * 1e-9,
                                                          p.field_V_per_cm) for p in self.pulses))
        if self.n_target == 1:
            return None
        return design_retrieval_schedule(delta, self.n_target, cfg, self.t_p_ns * 1e-9)


class PulseSection(_Strict):
    center_ns: float = 0.0
    fwhm_ns: float = Field(default=15.0, gt=0)
    carrier_MHz: float = 0.0

    def pulse(self) -> InputPulse:
        return InputPulse(self.center_ns * 1e-9, self.fwhm_ns * 1e-9,
                          carrier_detuning=self.carrier_MHz * 1e6)


class TimeGridSection(_Strict):
    start_ns: float = -60.0
    stop_ns: Optional[float] = None  # default: half a period past the last order
    step_ns: float = Field(default=0.25, gt=0)


class InitializationSection(_Strict):
    prep_MHz: float = -10.0
    repetitions: int = Field(default=1500, ge=1)
    pump_rate_per_s: float = Field(default=40.0, gt=0)


class SimulateSection(_Strict):
    comb: CombSection
    stark: Optional[StarkSection] = None
    pulse: PulseSection = PulseSection()
    time_grid: TimeGridSection = TimeGridSection()
    orders: list[int] = Field(default_factory=lambda: list(range(1, 7)), min_length=1)
    window_ns: Optional[float] = Field(default=None, gt=0)  # default: one period
    method: Literal["propagate", "born"] = "propagate"
    initialization: Optional[InitializationSection] = None

    @model_validator(mode="after")
    def _orders(self):
        if any(n < 1 for n in self.orders):
            raise ValueError("echo orders must be >= 1")
        return self

    def time_grid_for(self, delta: float) -> TimeGrid:
        tg = self.time_grid
        stop = tg.stop_ns * 1e-9 if tg.stop_ns is not None else (max(self.orders) + 0.5) / delta
        return TimeGrid.spanning(tg.start_ns * 1e-9, stop, tg.step_ns * 1e-9)


class DetectionSection(_Strict):
    detector_efficiency: float = Field(default=1.0, ge=0, le=1)
    system_transmission: float = Field(default=1.0, ge=0, le=1)
    noise_per_window: float = Field(default=2.4e-4, ge=0, le=1)
    window_ns: float = Field(default=20.0, gt=0)
    trials: int = Field(default=5000, ge=1)

    def model(self, seed: int) -> DetectionModel:
        return DetectionModel(self.detector_efficiency, self.system_transmission,
                              self.noise_per_window, self.window_ns * 1e-9, self.trials, seed)


class TimebinSection(_Strict):
    mu: list[PositiveMu] = Field(default_factory=lambda: [0.2, 0.4, 0.8, 1.6, 3.2], min_length=1)
    storage_a_ns: float = Field(default=160.0, gt=0)
    storage_b_ns: float = Field(default=180.0, gt=0)
    finesse: float = Field(default=7.8, gt=1)
    bandwidth_MHz: float = Field(default=160.0, gt=0)
    basis_efficiency: float = Field(default=0.069, gt=0, lt=1)
    background_d0: float = Field(default=0.2, ge=0)
    weight_a: float = Field(default=0.85, ge=0)
    delta_beta_error_rad: float = 0.12
    order: int = Field(default=2, ge=2)
    separation_ns: float = Field(default=40.0, gt=0)
    pulse_fwhm_ns: float = Field(default=12.0, gt=0)
    t_p_ns: float = Field(default=18.0, gt=0)
    window_ns: float = Field(default=20.0, gt=0)
    step_ns: float = Field(default=0.5, gt=0)
    phases_rad: list[float] = Field(default_factory=lambda: [float(np.pi / 2), float(3 * np.pi / 4)],
                                    min_length=2, max_length=2)
    memory_efficiency: Optional[float] = Field(default=None, gt=0, le=1)
    stark_kHz_per_V_cm: float = Field(default=11.68, gt=0)

    @model_validator(mode="after")
    def _checks(self):
        if self.storage_b_ns <= self.storage_a_ns:
            raise ValueError("storage_b_ns must exceed storage_a_ns")
        return self

    def setup(self) -> TimebinSetup:
        return default_timebin_setup(
            self.background_d0, self.basis_efficiency, self.finesse, self.bandwidth_MHz * 1e6,
            self.weight_a, self.delta_beta_error_rad, self.storage_a_ns * 1e-9,
            self.storage_b_ns * 1e-9, pulse_fwhm=self.pulse_fwhm_ns * 1e-9,
            separation=self.separation_ns * 1e-9, order=self.order, window=self.window_ns * 1e-9,
            stark=StarkConfig(self.stark_kHz_per_V_cm * 1e3), T_p=self.t_p_ns * 1e-9,
            phases=tuple(self.phases_rad), dt=self.step_ns * 1e-9,
            memory_efficiency=self.memory_efficiency or self.basis_efficiency)


class BoundSection(_Strict):
    mu: list[PositiveMu] = Field(default_factory=lambda: [0.2, 0.4, 0.8, 1.6, 3.2], min_length=1)
    memory_efficiency: float = Field(default=0.069, gt=0, le=1)
    n_max: Optional[int] = Field(default=None, ge=1)


class TimelineSection(_Strict):
    kind: Literal["single_afc", "double_afc"] = "single_afc"
    repetitions: dict[Literal["initialization", "afc_preparation", "wait", "storage_trials"],
                      int] = Field(default_factory=dict)


class OutputSection(_Strict):
    format: Literal["csv", "json"] = "csv"


class Scenario(_Strict):
    schema_version: Literal[1]
    name: str = Field(min_length=1)
    seed: int = Field(default=0, ge=0, le=U64_MAX)
    detection: DetectionSection = DetectionSection()
    simulate: Optional[SimulateSection] = None
    timebin: Optional[TimebinSection] = None
    bound: Optional[BoundSection] = None
    timeline: Optional[TimelineSection] = None
    output: OutputSection = OutputSection()

    def canonical(self) -> dict:
        return self.model_dump(mode="json", exclude_none=True)

    def dump(self) -> str:
        return yaml.safe_dump(self.canonical(), sort_keys=True, default_flow_style=False)

    def section(self, name: str):
        sec = getattr(self, name)
        if sec is None:
            raise ScenarioError(f"scenario {self.name!r} has no {name!r} section")
        return sec


# ---- parsing ------------------------------------------------------------------

def _line_index(node, path=(), out=None):
    """Map key paths to 1-based line numbers in the YAML source."""
    out = {} if out is None else out
    out.setdefault(path, node.start_mark.line + 1)
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            key = path + (k.value,)
            out[key] = k.start_mark.line + 1
            _line_index(v, key, out)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            _line_index(v, path + (i,), out)
    return out


def _locate(lines, loc):
    loc = tuple(p for p in loc if not (isinstance(p, str) and p.startswith("function-")))
    while loc:
        # pydantic reports str keys; YAML indices are ints
        key = tuple(int(p) if isinstance(p, str) and p.isdigit() else p for p in loc)
        if key in lines:
            return lines[key]
        loc = loc[:-1]
    return lines.get((), None)


def parse_text(text: str, source: str = "<scenario>") -> Scenario:
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ScenarioError(f"YAML syntax error: {getattr(exc, 'problem', exc)}", source,
                            mark.line + 1 if mark else None) from None
    if not isinstance(data, dict):
        raise ScenarioError("scenario must be a mapping", source, 1)
    lines = _line_index(node)
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ScenarioError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})",
                            source, lines.get(("schema_version",), 1))
    try:
        return Scenario.model_validate(data)
    except ValidationError as exc:
        # typos first: a misspelt key usually also shows up as a missing one
        errs = sorted(exc.errors(), key=lambda e: e["type"] != "extra_forbidden")
        err = errs[0]
        loc = ".".join(str(p) for p in err["loc"])
        msg = "unknown key" if err["type"] == "extra_forbidden" else err["msg"]
        if len(errs) > 1:
            msg += f" (and {len(errs) - 1} more)"
        raise ScenarioError(f"{loc}: {msg}", source, _locate(lines, err["loc"])) from None


BUNDLED = ("echo_train", "timebin_qubits")


def load_scenario(ref: str | Path) -> Scenario:
    """Load a scenario from a path or by bundled name."""
    p = Path(ref)
    if p.is_file():
        return parse_text(p.read_text(), str(p))
    name = str(ref)
    if name in BUNDLED:
        text = resources.files("afcmem").joinpath("scenarios", f"{name}.yaml").read_text()
        return parse_text(text, f"{name}.yaml")
    raise ScenarioError(f"no scenario file or bundled scenario named {name!r}", name)


def with_override(scenario: Scenario, path: str, value) -> Scenario:
    """Copy of ``scenario`` with the dotted ``path`` set to ``value``."""
    data = copy.deepcopy(scenario.canonical())
    keys = path.split(".")
    node, model = data, Scenario
    for k in keys[:-1]:
        field = model.model_fields.get(k) if model else None
        if field is None:
            raise ScenarioError(f"unknown parameter path {path!r}")
        model = _submodel(field.annotation)
        node = node.setdefault(k, {})
        if not isinstance(node, dict):
            raise ScenarioError(f"unknown parameter path {path!r}")
    if model is None or keys[-1] not in model.model_fields:
        raise ScenarioError(f"unknown parameter path {path!r}")
    node[keys[-1]] = value
    try:
        return Scenario.model_validate(data)
    except ValidationError as exc:
        err = exc.errors()[0]
        raise ScenarioError(f"{'.'.join(map(str, err['loc']))}: {err['msg']}") from None


def _submodel(annotation):
    if isinstance(annotation, type) and issubclass(annotation, BaseModel):
        return annotation
    for arg in getattr(annotation, "__args__", ()):
        if isinstance(arg, type) and issubclass(arg, BaseModel):
            return arg
    return None
