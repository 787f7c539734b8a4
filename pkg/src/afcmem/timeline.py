"""Experimental time sequence: pumping, comb preparation, wait, storage trials."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InvalidParameterError, SchedulingError

PHASE_ORDER = ("initialization", "afc_preparation", "wait", "storage_trials")


@dataclass(frozen=True)
class Phase:
    name: str
    unit_duration: float  # s, one repetition
    repetitions: int
    start: float = 0.0

    @property
    def duration(self) -> float:
        return self.unit_duration * self.repetitions

    @property
    def end(self) -> float:
        return self.start + self.duration


@dataclass(frozen=True)
class Timeline:
    kind: str
    phases: tuple

    def __post_init__(self):
        t = 0.0
        for p in self.phases:
            if p.unit_duration <= 0 or p.repetitions < 1:
                raise SchedulingError(f"phase {p.name!r} must have positive duration")
            if abs(p.start - t) > 1e-12:
                raise SchedulingError(f"phase {p.name!r} does not start where the previous ends")
            t = p.end
        names = [p.name for p in self.phases]
        if names != [n for n in PHASE_ORDER if n in names]:
            raise SchedulingError(f"phases out of order: {names}")

    @property
    def total_duration(self) -> float:
        return self.phases[-1].end if self.phases else 0.0

    def phase(self, name: str) -> Phase:
        for p in self.phases:
            if p.name == name:
                return p
        raise KeyError(name)

    def rows(self):
        return [{"phase": p.name, "start_ms": p.start * 1e3, "unit_ms": p.unit_duration * 1e3,
                 "repetitions": p.repetitions, "duration_ms": p.duration * 1e3}
                for p in self.phases]


# (unit duration s, repetitions) per phase
DEFAULTS = {
    "single_afc": {
        "initialization": (1e-3, 1500),
        "afc_preparation": (5e-3, 250),
        "wait": (200e-3, 1),
        "storage_trials": (50e-6, 5000),
    },
    "double_afc": {
        "initialization": (1e-3, 1500),
        # 30 pits, each burned with 300 pulses of 50 us
        "afc_preparation": (50e-6, 30 * 300),
        "wait": (200e-3, 1),
        "storage_trials": (50e-6, 5000),
    },
}


def build_timeline(kind: str = "single_afc", repetitions: dict | None = None) -> Timeline:
    """Sequence for one measurement cycle.

    ``repetitions`` overrides counts per phase; a phase set to 0 is dropped.
    """
    if kind not in DEFAULTS:
        raise InvalidParameterError(f"unknown timeline kind {kind!r}; use one of {sorted(DEFAULTS)}")
    overrides = dict(repetitions or {})
    unknown = set(overrides) - set(PHASE_ORDER)
    if unknown:
        raise InvalidParameterError(f"unknown phase(s) {sorted(unknown)}")
    phases, t = [], 0.0
    for name in PHASE_ORDER:
        unit, reps = DEFAULTS[kind][name]
        reps = overrides.get(name, reps)
        if int(reps) != reps or reps < 0:
            raise InvalidParameterError(f"repetitions for {name!r} must be a non-negative integer")
        if reps == 0:
            continue
        p = Phase(name, unit, int(reps), t)
        phases.append(p)
        t = p.end
    return Timeline(kind, tuple(phases))
