"""Linear Stark control of the two crystallographic subclasses.

A field E shifts subclass A by +kappa*E and subclass B by -kappa*E, so the two
accumulate opposite phases.  A pulse with Omega*T_p = 1/4 leaves a relative
phase of pi, which silences the echo; an equal and opposite pulse undoes it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError, SchedulingError

KAPPA_ER_YSO = 11.68e3  # Hz per V/cm, b axis
FIELD_PER_VOLT = 1200.0 / 4.825  # V/cm per V for the strip electrodes


@dataclass(frozen=True)
class StarkConfig:
    coefficient: float = KAPPA_ER_YSO  # Hz / (V/cm)
    field_scale: float = FIELD_PER_VOLT  # (V/cm) / V
    inhomogeneity: float = 0.0  # fractional rms spread of kappa*E over the ensemble

    def __post_init__(self):
        if not (np.isfinite(self.coefficient) and self.coefficient > 0):
            raise InvalidParameterError("Stark coefficient must be > 0")
        if not (np.isfinite(self.inhomogeneity) and self.inhomogeneity >= 0):
            raise InvalidParameterError("field inhomogeneity must be >= 0")

    def field_from_voltage(self, volts: float) -> float:
        return volts * self.field_scale


@dataclass(frozen=True)
class ElectricPulse:
    start: float  # s
    duration: float  # s
    field: float  # V/cm, signed

    def __post_init__(self):
        if not (np.isfinite(self.start) and np.isfinite(self.duration) and np.isfinite(self.field)):
            raise InvalidParameterError("pulse parameters must be finite")
        if self.duration <= 0:
            raise InvalidParameterError("pulse duration must be > 0")

    @property
    def end(self) -> float:
        return self.start + self.duration


@dataclass(frozen=True)
class StarkSchedule:
    config: StarkConfig = field(default_factory=StarkConfig)
    pulses: tuple = ()

    def __post_init__(self):
        pulses = tuple(self.pulses)
        object.__setattr__(self, "pulses", pulses)
        for a, b in zip(pulses, pulses[1:]):
            if b.start < a.start:
                raise SchedulingError("pulses must be time-ordered")
            if b.start < a.end - 1e-15:
                raise SchedulingError(
                    f"pulses overlap: [{a.start:g}, {a.end:g}] and [{b.start:g}, {b.end:g}]")


def omega_from_field(config: StarkConfig, field_v_per_cm: float) -> float:
    """Magnitude of the frequency shift, kappa*|E| (Hz)."""
    if not np.isfinite(field_v_per_cm):
        raise InvalidParameterError("field must be finite")
    return config.coefficient * abs(field_v_per_cm)


def subclass_phase(schedule: StarkSchedule, t, subclass: str = "A"):
    """Accumulated Stark phase 2*pi*int_0^t (+-kappa E) dt' in radians.

    ``subclass`` is "A" (+) or "B" (-).  Vectorised over ``t``; piecewise linear.
    """
    if subclass not in ("A", "B"):
        raise InvalidParameterError("subclass must be 'A' or 'B'")
    t = np.asarray(t, dtype=float)
    phi = np.zeros_like(t)
    for p in schedule.pulses:
        # portion of the pulse inside [0, t]
        lo = np.clip(p.start, 0.0, None)
        overlap = np.clip(np.minimum(t, p.end) - lo, 0.0, None)
        phi = phi + 2 * np.pi * schedule.config.coefficient * p.field * overlap
    if subclass == "B":
        phi = -phi
    return float(phi) if phi.ndim == 0 else phi


def relative_phase(schedule: StarkSchedule, t):
    return subclass_phase(schedule, t, "A") - subclass_phase(schedule, t, "B")


def required_field(T_p: float, config: StarkConfig, omega_tp: float = 0.25) -> float:
    """Field magnitude giving Omega*T_p = ``omega_tp``."""
    return omega_tp / (config.coefficient * T_p)


def design_retrieval_schedule(delta: float, n_target: int, config: StarkConfig | None = None,
                              T_p: float = 18e-9, field_v_per_cm: float | None = None,
                              position: float = 0.5) -> StarkSchedule:
    """Two-pulse schedule that silences echoes 1..n_target-1 and reads out at n_target/delta.

    Pulse 1 sits inside (0, 1/delta) and pulse 2, of opposite sign, inside
    ((n-1)/delta, n/delta).  ``position`` in [0, 1] places each pulse within its
    window (0.5 centres it).  By default the field is chosen for
    Omega*T_p = 1/4; pass ``field_v_per_cm`` to use a fixed lab value instead.
    """
    config = config or StarkConfig()
    if n_target < 2 or int(n_target) != n_target:
        raise SchedulingError("n_target must be an integer >= 2")
    period = 1.0 / delta
    if not 0 < T_p < period:
        raise SchedulingError(
            f"pulse length {T_p * 1e9:.3g} ns does not fit the {period * 1e9:.3g} ns window")
    if not 0 <= position <= 1:
        raise SchedulingError("position must lie in [0, 1]")
    E = required_field(T_p, config) if field_v_per_cm is None else abs(field_v_per_cm)
    slack = period - T_p
    p1 = ElectricPulse(position * slack, T_p, +E)
    p2 = ElectricPulse((n_target - 1) * period + position * slack, T_p, -E)
    return StarkSchedule(config, (p1, p2))


@dataclass
class ScheduleReport:
    omega_tp: list  # per pulse
    windows: list  # per pulse: k such that the pulse lies inside (k/delta, (k+1)/delta), else None
    relative_phase: dict  # n -> relative phase at n/delta, wrapped to (-pi, pi]
    amplitude: dict  # n -> |cos(relative_phase/2)|, echo amplitude factor
    silenced: list
    recovered: list
    summary: str
    warnings: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.warnings


def _wrap(x):
    return float(np.angle(np.exp(1j * x)))


def validate_schedule(schedule: StarkSchedule, delta: float, n_max: int = 10,
                      threshold: float = 1e-2) -> ScheduleReport:
    """Classify each echo order 1..n_max as silenced or emitted.

    An order counts as silenced when the echo intensity factor
    cos^2(relative_phase/2) is below ``threshold``.
    """
    period = 1.0 / delta
    warnings = []
    omega_tp, windows = [], []
    for p in schedule.pulses:
        omega_tp.append(omega_from_field(schedule.config, p.field) * p.duration)
        k = int(np.floor(p.start / period + 1e-12))
        inside = p.start >= k * period - 1e-15 and p.end <= (k + 1) * period + 1e-15
        windows.append(k if inside else None)
        if not inside:
            warnings.append(f"pulse at {p.start * 1e9:.3g} ns straddles an echo time")
        if p.start < 0:
            warnings.append("pulse starts before the input pulse at t=0")

    rel, amp = {}, {}
    for n in range(1, n_max + 1):
        r = relative_phase(schedule, n * period)
        rel[n] = _wrap(r)
        amp[n] = abs(np.cos(r / 2))
    silenced = [n for n in rel if amp[n] ** 2 < threshold]
    emitted = [n for n in rel if amp[n] ** 2 >= threshold]

    if not schedule.pulses:
        summary = "ordinary AFC, emission at every n/Delta"
    elif not emitted:
        summary = "silenced indefinitely"
    elif not silenced:
        summary = "no silencing, emission at every n/Delta"
    else:
        first = emitted[0]
        if silenced == list(range(1, first)) and all(n in emitted for n in range(first, n_max + 1)):
            summary = (f"silenced at n=1..{first - 1}, recovered at n={first}"
                       if first > 2 else f"silenced at n=1, recovered at n={first}")
        else:
            summary = f"irregular: silenced at {silenced}, emitted at {emitted}"
            warnings.append("schedule does not give a single clean recovery")
    return ScheduleReport(omega_tp, windows, rel, amp, silenced, emitted, summary, warnings)


def design_timebin_schedule(delta_fast: float, delta_slow: float, separation: float,
                            order: int = 2, config: StarkConfig | None = None,
                            T_p: float = 18e-9, clearance: float = 15e-9) -> StarkSchedule:
    """Schedule for a time-bin qubit in a double comb read out at ``order``.

    Pulse 1 must follow the late input bin and precede the first fast-comb
    echo; pulse 2 must follow every lower-order echo of the late bin through
    the slow comb and precede the order-``order`` fast-comb echo.  Each pulse
    is centred in its allowed interval, ``clearance`` being kept from the
    optical pulses on either side.
    """
    config = config or StarkConfig()
    if order < 2 or int(order) != order:
        raise SchedulingError("readout order must be an integer >= 2")
    if delta_slow >= delta_fast:
        raise SchedulingError("delta_fast must exceed delta_slow")
    E = required_field(T_p, config)
    w1 = (separation + clearance, 1.0 / delta_fast - clearance)
    w2 = (separation + (order - 1) / delta_slow + clearance, order / delta_fast - clearance)
    pulses = []
    for sign, (lo, hi) in zip((+1, -1), (w1, w2)):
        if hi - lo < T_p:
            raise SchedulingError(
                f"no room for a {T_p * 1e9:.3g} ns pulse in ({lo * 1e9:.4g}, {hi * 1e9:.4g}) ns")
        pulses.append(ElectricPulse(0.5 * (lo + hi - T_p), T_p, sign * E))
    return StarkSchedule(config, tuple(pulses))
