"""Atomic frequency combs: carving, superposition, fitting and the analytic
efficiency law.

Finesse follows F = Delta / gamma (tooth spacing over tooth FWHM).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import optimize, signal

from .errors import FitDegeneracyError, InvalidParameterError, ResolutionError
from .spectral import AbsorptionSpectrum, FrequencyGrid, gaussian

GAUSS_AREA = np.sqrt(np.pi / (4.0 * np.log(2.0)))  # integral of unit-peak Gaussian / FWHM
SIGMA_PER_FWHM = 1.0 / np.sqrt(8.0 * np.log(2.0))


@dataclass(frozen=True)
class CombParams:
    delta: float  # Hz, tooth spacing
    finesse: float
    bandwidth: float  # Hz
    tooth_depth: float
    background_d0: float = 0.0
    center_offset: float = 0.0
    tooth_shape: str = "gaussian"

    def __post_init__(self):
        vals = (self.delta, self.finesse, self.bandwidth, self.tooth_depth,
                self.background_d0, self.center_offset)
        if not all(np.isfinite(v) for v in vals):
            raise InvalidParameterError("comb parameters must be finite")
        if self.delta <= 0:
            raise InvalidParameterError("tooth spacing must be > 0")
        if self.finesse <= 1:
            raise InvalidParameterError(f"finesse must exceed 1, got {self.finesse}")
        if self.bandwidth < self.delta:
            raise InvalidParameterError("bandwidth must be >= tooth spacing")
        if self.tooth_depth < 0 or self.background_d0 < 0:
            raise InvalidParameterError("depths must be >= 0")
        if self.tooth_shape not in ("gaussian", "square"):
            raise InvalidParameterError(f"unknown tooth shape {self.tooth_shape!r}")

    @property
    def gamma(self) -> float:
        """Tooth FWHM in Hz."""
        return self.delta / self.finesse

    @property
    def n_teeth(self) -> int:
        return int(np.floor(self.bandwidth / self.delta + 1e-9)) + 1

    @property
    def storage_time(self) -> float:
        return 1.0 / self.delta

    @property
    def tooth_centers(self) -> np.ndarray:
        n = self.n_teeth
        return self.center_offset + (np.arange(n) - (n - 1) / 2) * self.delta

    @property
    def effective_depth(self) -> float:
        return effective_depth(self.tooth_depth, self.finesse)


@dataclass(frozen=True)
class DoubleCombParams:
    comb_a: CombParams
    comb_b: CombParams
    delta_f: float = 0.0  # Hz, shift applied to comb_a
    weight_a: float = 1.0
    weight_b: float = 1.0
    max_depth: float | None = None  # clip level; None -> larger single-comb peak

    def __post_init__(self):
        if not np.isfinite(self.delta_f):
            raise InvalidParameterError("delta_f must be finite")
        if self.weight_a < 0 or self.weight_b < 0:
            raise InvalidParameterError("comb weights must be >= 0")

    @property
    def clip_depth(self) -> float:
        if self.max_depth is not None:
            return self.max_depth
        return max(self.comb_a.tooth_depth, self.comb_b.tooth_depth)


def effective_depth(d, finesse):
    """Mean optical depth of a Gaussian comb, (d/F) sqrt(pi / (4 ln 2))."""
    return np.asarray(d) / np.asarray(finesse) * GAUSS_AREA


def analytic_efficiency(d, finesse, d0, gamma, t):
    """Forward echo efficiency of a Gaussian comb read out at time ``t``.

    eta = dt^2 exp(-dt) exp(-gt^2 t^2) exp(-d0), with dt the effective depth
    and gt = 2 pi gamma / sqrt(8 ln 2).  Broadcasts over all arguments.
    """
    d, finesse, d0, gamma, t = np.broadcast_arrays(*(np.asarray(x, dtype=float)
                                                     for x in (d, finesse, d0, gamma, t)))
    if np.any(d < 0) or np.any(d0 < 0) or np.any(gamma < 0) or np.any(t < 0):
        raise InvalidParameterError("d, d0, gamma and t must be >= 0")
    if np.any(finesse <= 1):
        raise InvalidParameterError("finesse must exceed 1")
    dt = effective_depth(d, finesse)
    gt = 2 * np.pi * gamma * SIGMA_PER_FWHM
    eta = dt**2 * np.exp(-dt) * np.exp(-(gt * t) ** 2) * np.exp(-d0)
    return float(eta) if eta.ndim == 0 else eta


def dephasing_factor(gamma, t):
    gt = 2 * np.pi * np.asarray(gamma) * SIGMA_PER_FWHM
    return np.exp(-(gt * np.asarray(t)) ** 2)


def calibrate_depth(eta_target: float, t: float, gamma: float, finesse: float,
                    d0: float = 0.0) -> float:
    """Tooth depth d giving ``eta_target`` at readout time ``t``.

    Takes the low-depth branch (effective depth <= 2) of dt^2 exp(-dt).
    """
    need = eta_target / (float(dephasing_factor(gamma, t)) * np.exp(-d0))
    peak = 4 * np.exp(-2)
    if not 0 < need <= peak:
        raise InvalidParameterError(
            f"efficiency {eta_target:g} unreachable at t={t:g}s with d0={d0:g}")
    dt = optimize.brentq(lambda x: x * x * np.exp(-x) - need, 0.0, 2.0)
    return float(dt * finesse / GAUSS_AREA)


def _tooth_profile(f, centers, fwhm, shape):
    out = np.zeros_like(f)
    for c in centers:
        if shape == "gaussian":
            out += gaussian(f, c, fwhm)
        else:
            out += (np.abs(f - c) <= fwhm / 2).astype(float)
    return out


def _check_grid(params: CombParams, grid: FrequencyGrid, shift: float = 0.0):
    if grid.step > params.gamma / 10:
        raise ResolutionError(
            f"grid step {grid.step:g} Hz too coarse for tooth width {params.gamma:g} Hz "
            "(need >= 10 points per tooth)")
    lo = params.center_offset + shift - params.bandwidth / 2
    hi = params.center_offset + shift + params.bandwidth / 2
    if lo < grid.start or hi > grid.stop:
        raise ResolutionError(
            f"grid [{grid.start:g}, {grid.stop:g}] Hz does not span comb band [{lo:g}, {hi:g}] Hz")


def comb_teeth(params: CombParams, grid: FrequencyGrid, shift: float = 0.0) -> np.ndarray:
    """Tooth depth profile without background."""
    _check_grid(params, grid, shift)
    return params.tooth_depth * _tooth_profile(
        grid.values, params.tooth_centers + shift, params.gamma, params.tooth_shape)


def carve_comb(params: CombParams, grid: FrequencyGrid) -> AbsorptionSpectrum:
    teeth = comb_teeth(params, grid)
    return AbsorptionSpectrum(grid, teeth + params.background_d0, params.background_d0)


def superimpose(params: DoubleCombParams, grid: FrequencyGrid) -> AbsorptionSpectrum:
    """Two combs summed pointwise (comb_a shifted by ``delta_f``), teeth clipped
    at ``params.clip_depth``.  The shared background is the larger of the two."""
    a = params.weight_a * comb_teeth(params.comb_a, grid, params.delta_f)
    b = params.weight_b * comb_teeth(params.comb_b, grid)
    teeth = np.minimum(a + b, params.clip_depth)
    d0 = max(params.comb_a.background_d0, params.comb_b.background_d0)
    return AbsorptionSpectrum(grid, teeth + d0, d0)


@dataclass(frozen=True)
class CombFit:
    params: CombParams
    gamma: float
    residual: float  # rms of fit residual, in optical depth
    n_peaks: int


def _model(f, n, delta, gamma, d, d0, center):
    centers = center + (np.arange(n) - (n - 1) / 2) * delta
    return d0 + d * np.exp(-4 * np.log(2) * (f[:, None] - centers[None, :]) ** 2 / gamma**2).sum(axis=1)


def fit_comb(measured: AbsorptionSpectrum, min_prominence: float = 0.2) -> CombFit:
    """Least-squares fit of a Gaussian comb (spacing, tooth width, depth,
    background, centre) to a measured spectrum.

    Peaks are located first with ``scipy.signal.find_peaks``; at least three
    are needed to pin the spacing.
    """
    f = measured.frequencies
    d = np.asarray(measured.optical_depth)
    base = float(np.percentile(d, 5))
    span = float(d.max() - base)
    if span <= 0:
        raise FitDegeneracyError("spectrum is flat; no comb teeth found")
    peaks, props = signal.find_peaks(d, prominence=min_prominence * span)
    if len(peaks) < 3:
        raise FitDegeneracyError(f"found {len(peaks)} teeth above background, need >= 3")

    pf = f[peaks]
    delta0 = float(np.median(np.diff(pf)))
    widths = signal.peak_widths(d, peaks, rel_height=0.5)[0] * measured.grid.step
    gamma0 = float(np.median(widths))
    d_0 = float(np.median(d[peaks]) - base)
    center0 = float(pf.mean())
    n = len(peaks)

    def resid(p):
        return _model(f, n, *p) - d

    x0 = [delta0, gamma0, d_0, base, center0]
    lo = [0.5 * delta0, 0.1 * gamma0, 0.0, 0.0, center0 - delta0 / 2]
    hi = [1.5 * delta0, min(10 * gamma0, delta0), 10 * max(d_0, 1e-12) + 1, max(d.max(), 1e-12), center0 + delta0 / 2]
    sol = optimize.least_squares(resid, x0, bounds=(lo, hi), x_scale="jac")
    delta, gamma, depth, d0, center = sol.x
    if not sol.success or gamma <= 0 or delta <= gamma:
        raise FitDegeneracyError("comb fit did not converge")
    params = CombParams(delta=float(delta), finesse=float(delta / gamma),
                        bandwidth=float((n - 1) * delta), tooth_depth=float(depth),
                        background_d0=float(d0), center_offset=float(center))
    rms = float(np.sqrt(np.mean(sol.fun**2)))
    return CombFit(params, float(gamma), rms, n)


def shifted(params: CombParams, df: float) -> CombParams:
    return replace(params, center_offset=params.center_offset + df)
