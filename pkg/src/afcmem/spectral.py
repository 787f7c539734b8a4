"""Inhomogeneous absorption line of 167Er:YSO and the spectral-initialization pump model.

The Delta m_I = 0 band is a superposition of eight Gaussian sub-lines, one per
ground hyperfine level m_I = -7/2 ... +7/2.  Optionally each level also carries
weaker Delta m_I = +-1 satellite lines, which gives the three partially
overlapping bands seen at 1 T.

Optical pumping is a chirp-averaged rate model.  The ensemble is split into
inhomogeneous frequency classes; every class has its own 8-level population
vector, so a sweep burns a spectral pit rather than emptying whole levels.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidParameterError, NumericalStepError, RangeError

FWHM_TO_SIGMA = 1.0 / np.sqrt(8.0 * np.log(2.0))
M_I = np.arange(-3.5, 4.0, 1.0)  # -7/2 ... +7/2


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform detuning axis in Hz."""

    start: float
    step: float
    count: int

    def __post_init__(self):
        if not (np.isfinite(self.start) and np.isfinite(self.step)):
            raise InvalidParameterError("frequency grid start/step must be finite")
        if self.step <= 0:
            raise InvalidParameterError(f"frequency grid step must be > 0, got {self.step}")
        if int(self.count) != self.count or self.count < 2:
            raise InvalidParameterError(f"frequency grid needs count >= 2, got {self.count}")

    @classmethod
    def spanning(cls, lo: float, hi: float, step: float) -> "FrequencyGrid":
        count = int(np.floor((hi - lo) / step + 1e-9)) + 1
        return cls(float(lo), float(step), max(count, 2))

    @property
    def values(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.count)

    @property
    def stop(self) -> float:
        return self.start + self.step * (self.count - 1)

    def contains(self, f) -> bool:
        f = np.asarray(f, dtype=float)
        tol = 1e-9 * self.step
        return bool(np.all((f >= self.start - tol) & (f <= self.stop + tol)))


@dataclass(frozen=True)
class HyperfineLevel:
    m_I: float
    center_offset: float  # Hz, centre of this level's Delta m_I = 0 sub-line
    population: float


@dataclass(frozen=True, eq=False)
class AbsorptionSpectrum:
    """Optical depth d(f) on a uniform grid.

    ``optical_depth`` is the total depth, background included;
    ``background_d0`` records the flat part separately because the echo
    efficiency treats it differently from the structured part.
    """

    grid: FrequencyGrid
    optical_depth: np.ndarray
    background_d0: float = 0.0

    def __post_init__(self):
        d = np.asarray(self.optical_depth, dtype=float)
        if d.shape != (self.grid.count,):
            raise InvalidParameterError(
                f"optical_depth has shape {d.shape}, grid expects ({self.grid.count},)")
        if not np.all(np.isfinite(d)):
            raise InvalidParameterError("optical depth must be finite")
        if np.any(d < -1e-9):
            raise InvalidParameterError(f"negative optical depth {d.min():.3g}")
        if not np.isfinite(self.background_d0) or self.background_d0 < 0:
            raise InvalidParameterError("background_d0 must be finite and >= 0")
        d = np.clip(d, 0.0, None)
        d.setflags(write=False)
        object.__setattr__(self, "optical_depth", d)

    @property
    def frequencies(self) -> np.ndarray:
        return self.grid.values

    @property
    def structured_depth(self) -> np.ndarray:
        """Depth with the flat background removed (never negative)."""
        return np.clip(self.optical_depth - self.background_d0, 0.0, None)

    def __eq__(self, other):
        if not isinstance(other, AbsorptionSpectrum):
            return NotImplemented
        return (self.grid == other.grid and self.background_d0 == other.background_d0
                and np.array_equal(self.optical_depth, other.optical_depth))


@dataclass(frozen=True)
class PumpSweep:
    center_offset: float  # Hz
    bandwidth: float  # Hz
    duration: float  # s per chirp
    repetitions: int
    pump_rate: float  # 1/s, chirp-averaged rate for a line inside the band

    def __post_init__(self):
        for name in ("center_offset", "bandwidth", "duration", "pump_rate"):
            if not np.isfinite(getattr(self, name)):
                raise InvalidParameterError(f"{name} must be finite")
        if self.bandwidth <= 0:
            raise InvalidParameterError("sweep bandwidth must be > 0")
        if self.duration <= 0:
            raise InvalidParameterError("chirp duration must be > 0")
        if self.repetitions < 0 or int(self.repetitions) != self.repetitions:
            raise InvalidParameterError("repetitions must be a non-negative integer")
        if self.pump_rate < 0:
            raise InvalidParameterError("pump_rate must be >= 0")

    @property
    def band(self) -> tuple[float, float]:
        return (self.center_offset - self.bandwidth / 2, self.center_offset + self.bandwidth / 2)


def gaussian(f, center, fwhm):
    """Unit-peak Gaussian with the given FWHM."""
    return np.exp(-4.0 * np.log(2.0) * (np.asarray(f) - center) ** 2 / fwhm**2)


def _check_finite(**kw):
    for k, v in kw.items():
        if not np.all(np.isfinite(np.asarray(v, dtype=float))):
            raise InvalidParameterError(f"{k} must be finite")


def build_initial_spectrum(levels, sub_linewidth: float, peak_d: float,
                           grid: FrequencyGrid, background_d0: float = 0.0) -> AbsorptionSpectrum:
    """Sum of Gaussian sub-lines (FWHM ``sub_linewidth``), each scaled by
    ``peak_d`` times the level population."""
    _check_finite(sub_linewidth=sub_linewidth, peak_d=peak_d, background_d0=background_d0)
    if sub_linewidth <= 0:
        raise InvalidParameterError("sub_linewidth must be > 0")
    if peak_d < 0:
        raise InvalidParameterError("peak_d must be >= 0")
    f = grid.values
    d = np.zeros_like(f)
    for lvl in levels:
        _check_finite(center_offset=lvl.center_offset, population=lvl.population)
        if lvl.population < 0:
            raise InvalidParameterError(f"negative population for m_I={lvl.m_I}")
        d += peak_d * lvl.population * gaussian(f, lvl.center_offset, sub_linewidth)
    return AbsorptionSpectrum(grid, d + background_d0, background_d0)


def optical_depth_at(spectrum: AbsorptionSpectrum, detuning):
    """Linear interpolation of the optical depth; raises outside the grid."""
    if not spectrum.grid.contains(detuning):
        raise RangeError(
            f"detuning outside grid [{spectrum.grid.start:g}, {spectrum.grid.stop:g}] Hz")
    out = np.interp(detuning, spectrum.frequencies, spectrum.optical_depth)
    return float(out) if np.ndim(out) == 0 else out


def equal_levels(spacing: float = 80e6, center: float = 0.0) -> list[HyperfineLevel]:
    """Eight equally populated levels with equally spaced Delta m_I = 0 lines,
    higher m_I on the blue side."""
    return [HyperfineLevel(float(m), center + m * spacing, 1.0 / 8) for m in M_I]


def nearest_neighbour_branching(stay: float = 0.5, hop: float = 0.2, decay: float = 0.25) -> np.ndarray:
    """8x8 decay matrix from excited level j (row) to ground level i (column).

    Weight ``stay`` on i = j, ``hop`` on |i-j| = 1 and ``hop * decay**(k-1)`` on
    |i-j| = k; every row is then normalised to 1.
    """
    k = np.abs(np.subtract.outer(np.arange(8), np.arange(8)))
    w = np.where(k == 0, stay, hop * decay ** np.maximum(k - 1, 0))
    return w / w.sum(axis=1, keepdims=True)


@dataclass(frozen=True)
class LineModel:
    """Where each level absorbs.

    ``transitions`` maps a change in m_I (0, +1, -1) to (frequency offset of that
    band relative to the Delta m_I = 0 line, relative strength).
    """

    centers: np.ndarray  # Hz, Delta m_I = 0 line of each ground level
    sub_linewidth: float  # Hz, inhomogeneous FWHM of every sub-line
    peak_d: float
    transitions: tuple = ((0, 0.0, 1.0),)

    @classmethod
    def three_band(cls, spacing=140e6, sub_linewidth=200e6, peak_d=1.0,
                   satellite_offset=None, satellite_strength=0.35, center=-500e6):
        """Default geometry: the Delta m_I = +1 line of m_I = -7/2 coincides with
        the Delta m_I = 0 line of m_I = +7/2 (offset 7 x spacing).  With the
        Delta m_I = 0 band centred 500 MHz red of the origin, the origin lands
        on the maximum of the overall profile."""
        if satellite_offset is None:
            satellite_offset = 7 * spacing
        centers = center + M_I * spacing
        trans = ((0, 0.0, 1.0), (+1, satellite_offset, satellite_strength),
                 (-1, -satellite_offset, satellite_strength))
        return cls(np.asarray(centers, dtype=float), float(sub_linewidth), float(peak_d), trans)


@dataclass(frozen=True, eq=False)
class EnsembleState:
    """Per-class hyperfine populations.

    ``populations[c, i]`` is the fraction of class ``c`` in level ``i``
    (ordered m_I = -7/2 ... +7/2).  Class ``c`` sits at inhomogeneous offset
    ``grid.values[c] - grid.values.mean()`` with Gaussian weight of FWHM
    ``lines.sub_linewidth``.
    """

    grid: FrequencyGrid
    lines: LineModel
    populations: np.ndarray
    background_d0: float = 0.0

    @classmethod
    def thermal(cls, grid: FrequencyGrid, lines: LineModel, background_d0=0.0):
        pops = np.full((grid.count, 8), 1.0 / 8)
        return cls(grid, lines, pops, background_d0)

    @property
    def class_offsets(self) -> np.ndarray:
        return (np.arange(self.grid.count) - (self.grid.count - 1) / 2) * self.grid.step

    @property
    def class_weights(self) -> np.ndarray:
        w = gaussian(self.class_offsets, 0.0, self.lines.sub_linewidth)
        return w / w.sum()

    def levels(self) -> list[HyperfineLevel]:
        avg = self.class_weights @ self.populations
        return [HyperfineLevel(float(m), float(c), float(p))
                for m, c, p in zip(M_I, self.lines.centers, avg)]

    def resonances(self) -> dict:
        """Absolute line frequency of every (class, level) for each transition."""
        base = self.class_offsets[:, None] + self.lines.centers[None, :]
        return {dm: base + off for dm, off, _ in self.lines.transitions}

    def spectrum(self) -> AbsorptionSpectrum:
        f = self.grid.values
        g = gaussian(self.class_offsets, 0.0, self.lines.sub_linewidth)
        d = np.zeros_like(f)
        for dm, off, strength in self.lines.transitions:
            for i in range(8):
                if not 0 <= i + dm < 8:
                    continue
                dens = g * self.populations[:, i]
                shift = self.lines.centers[i] + off
                d += self.lines.peak_d * strength * np.interp(
                    f - shift, self.class_offsets, dens, left=0.0, right=0.0)
        return AbsorptionSpectrum(self.grid, d + self.background_d0, self.background_d0)


def apply_pump_sweep(state: EnsembleState, sweep: PumpSweep, branching=None,
                     dt: float | None = None) -> tuple[EnsembleState, AbsorptionSpectrum]:
    """Evolve the populations under ``sweep.repetitions`` chirps.

    Every line resonant inside the swept band is pumped at ``sweep.pump_rate``
    times its relative strength.  Excited ions return at once to the ground
    levels according to ``branching[j, i]`` (excited j -> ground i).  Forward
    Euler with step ``dt`` (default: chirp duration / 4).
    """
    if branching is None:
        branching = nearest_neighbour_branching()
    B = np.asarray(branching, dtype=float)
    if B.shape != (8, 8) or np.any(B < 0) or not np.allclose(B.sum(axis=1), 1.0, atol=1e-9):
        raise InvalidParameterError("branching must be 8x8, non-negative, rows summing to 1")
    dt = sweep.duration / 4 if dt is None else float(dt)
    if not dt > 0:
        raise InvalidParameterError("dt must be > 0")

    total = sweep.repetitions * sweep.duration
    if total == 0 or sweep.pump_rate == 0:
        return state, state.spectrum()

    lo, hi = sweep.band
    # resonances are sums of grid offsets; absorb rounding at the band edges
    tol = 1e-6 * state.grid.step
    lo, hi = lo - tol, hi + tol
    rates = []  # (dm, rate array [class, level])
    for dm, res in state.resonances().items():
        strength = next(s for d, _, s in state.lines.transitions if d == dm)
        inside = (res >= lo) & (res <= hi)
        r = sweep.pump_rate * strength * inside.astype(float)
        if dm != 0:
            idx = np.arange(8) + dm
            r[:, (idx < 0) | (idx >= 8)] = 0.0
        rates.append((dm, r))

    p = state.populations.copy()
    nsteps = int(np.ceil(total / dt - 1e-9))
    h = total / nsteps
    for _ in range(nsteps):
        dp = np.zeros_like(p)
        for dm, r in rates:
            flux = r * p
            dp -= flux
            # excited level j = i + dm decays with branching row j
            excited = np.zeros_like(p)
            if dm >= 0:
                excited[:, dm:] += flux[:, :8 - dm]
            else:
                excited[:, :8 + dm] += flux[:, -dm:]
            dp += excited @ B
        p = p + h * dp
        if p.min() < -1e-9:
            raise NumericalStepError(
                f"population went negative ({p.min():.3g}); use a smaller dt than {h:g} s")
    p = np.clip(p, 0.0, None)
    new = replace(state, populations=p)
    return new, new.spectrum()


@dataclass
class InitializationResult:
    before: AbsorptionSpectrum
    after: AbsorptionSpectrum
    state: EnsembleState
    prep_frequency: float
    enhancement: float
    population_drift: float = field(default=0.0)


def default_initialization(prep_frequency: float = -10e6, repetitions: int = 1500,
                           pump_rate: float = 40.0, dt: float | None = None,
                           lines: LineModel | None = None) -> InitializationResult:
    """Three-band line, 800 MHz chirp red-shifted 500 MHz from the absorption
    maximum, 1500 x 1 ms repetitions.  ``prep_frequency`` defaults to the
    m_I = +7/2 line, where the AFC is later carved."""
    grid = FrequencyGrid.spanning(-2.6e9, 1.6e9, 5e6)
    state0 = EnsembleState.thermal(grid, lines or LineModel.three_band())
    sweep = PumpSweep(-500e6, 800e6, 1e-3, repetitions, pump_rate)
    state1, after = apply_pump_sweep(state0, sweep, dt=dt)
    before = state0.spectrum()
    ratio = optical_depth_at(after, prep_frequency) / optical_depth_at(before, prep_frequency)
    w = state1.class_weights
    drift = float(np.max(np.abs(state1.populations.sum(axis=1) - 1.0)))
    drift = max(drift, abs(float(w @ state1.populations.sum(axis=1)) - 1.0))
    return InitializationResult(before, after, state1, prep_frequency, float(ratio), drift)
