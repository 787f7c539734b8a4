"""Time axis and input light: single Gaussian pulses and time-bin qubits."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError


@dataclass(frozen=True)
class TimeGrid:
    start: float  # s
    step: float  # s
    count: int

    def __post_init__(self):
        if not (np.isfinite(self.start) and np.isfinite(self.step)) or self.step <= 0:
            raise InvalidParameterError("time grid needs finite start and step > 0")
        if int(self.count) != self.count or self.count < 2:
            raise InvalidParameterError("time grid needs count >= 2")

    @classmethod
    def spanning(cls, t0: float, t1: float, step: float) -> "TimeGrid":
        return cls(float(t0), float(step), int(np.floor((t1 - t0) / step + 1e-9)) + 1)

    @property
    def values(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.count)

    @property
    def stop(self) -> float:
        return self.start + self.step * (self.count - 1)

    @property
    def span(self) -> float:
        return self.step * self.count


def gaussian_envelope(t, center, fwhm):
    """Field envelope whose *intensity* has the given FWHM, normalised to unit energy."""
    if fwhm <= 0:
        raise InvalidParameterError("pulse FWHM must be > 0")
    sigma_i = fwhm / np.sqrt(8 * np.log(2))  # intensity sigma
    env = np.exp(-((t - center) ** 2) / (4 * sigma_i**2))
    return env / np.sqrt(np.sqrt(2 * np.pi) * sigma_i)


@dataclass(frozen=True, eq=False)
class InputPulse:
    """Gaussian pulse (``center``, ``fwhm`` of intensity, ``amplitude``) or an
    explicit complex envelope sampled on the simulation grid.

    The Gaussian is scaled so that ``amplitude=1`` carries unit energy.
    """

    center: float = 0.0
    fwhm: float = 15e-9
    amplitude: complex = 1.0
    carrier_detuning: float = 0.0  # Hz, relative to the spectrum's origin
    samples: np.ndarray | None = None

    def __post_init__(self):
        if self.samples is None and not (self.fwhm > 0 and np.isfinite(self.fwhm)):
            raise InvalidParameterError("pulse FWHM must be > 0")
        if not np.isfinite(self.carrier_detuning):
            raise InvalidParameterError("carrier detuning must be finite")

    def envelope(self, grid: TimeGrid) -> np.ndarray:
        t = grid.values
        if self.samples is not None:
            s = np.asarray(self.samples, dtype=complex)
            if s.shape != (grid.count,):
                raise InvalidParameterError("sampled envelope does not match the time grid")
            env = self.amplitude * s
        else:
            env = self.amplitude * gaussian_envelope(t, self.center, self.fwhm).astype(complex)
        if not np.all(np.isfinite(env)):
            raise InvalidParameterError("input envelope is not finite")
        # a component at detuning f is exp(+2 pi i f t)
        return env * np.exp(2j * np.pi * self.carrier_detuning * t)


@dataclass(frozen=True)
class TimeBinQubit:
    """|e> + exp(i delta_alpha) |l>, or one of the basis states.

    ``kind`` is "superposition", "e" or "l".  The early bin is centred at t=0.
    """

    delta_alpha: float = 0.0
    pulse_fwhm: float = 12e-9
    separation: float = 40e-9
    mu: float = 1.0
    kind: str = "superposition"

    def __post_init__(self):
        if self.mu < 0 or not np.isfinite(self.mu):
            raise InvalidParameterError(f"mean photon number must be >= 0, got {self.mu}")
        if self.separation <= self.pulse_fwhm:
            raise InvalidParameterError("time-bin separation must exceed the pulse width")
        if self.kind not in ("superposition", "e", "l"):
            raise InvalidParameterError(f"unknown qubit kind {self.kind!r}")

    def envelope(self, grid: TimeGrid) -> np.ndarray:
        """Unit-energy envelope (one photon); scale by sqrt(mu) for mean photon number."""
        t = grid.values
        early = gaussian_envelope(t, 0.0, self.pulse_fwhm).astype(complex)
        late = gaussian_envelope(t, self.separation, self.pulse_fwhm).astype(complex)
        if self.kind == "e":
            return early
        if self.kind == "l":
            return late
        # the two bins overlap slightly; keep exactly one photon
        sigma_i = self.pulse_fwhm / np.sqrt(8 * np.log(2))
        overlap = np.exp(-self.separation**2 / (8 * sigma_i**2))
        norm = np.sqrt(2 * (1 + np.cos(self.delta_alpha) * overlap))
        return (early + np.exp(1j * self.delta_alpha) * late) / norm
