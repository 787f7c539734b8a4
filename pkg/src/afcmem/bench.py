"""Photon counting and qubit-fidelity statistics.

Counting model: for every trial and every histogram bin the number of photons
is Poisson with mean mu * (trace energy in the bin) * transmission * detector
efficiency, plus flat noise.  The detector is a threshold device, so a bin
records at most one click per trial.  Trials are drawn in fixed chunks; chunk
``i`` of stream ``s`` always uses ``SeedSequence(seed, spawn_key=(*s, i))``, so
the histogram does not depend on how many workers process the chunks.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize, stats

from .comb import CombParams, DoubleCombParams, analytic_efficiency, calibrate_depth, carve_comb
from .echo import comb_frequency_grid, default_frequency_grid, simulate_timebin, simulate_trace
from .errors import (InfeasibleError, InvalidParameterError, NormalizationError, RangeError,
                     UndefinedFidelityError)

from .pulses import TimeBinQubit, TimeGrid
from .stark import StarkConfig, design_retrieval_schedule, design_timebin_schedule

CHUNK = 1000


@dataclass(frozen=True)
class DetectionModel:
    detector_efficiency: float = 1.0
    system_transmission: float = 1.0
    noise_prob_per_window: float = 2.4e-4
    integration_window: float = 20e-9  # s
    trials: int = 5000
    rng_seed: int = 0

    def __post_init__(self):
        for name in ("detector_efficiency", "system_transmission", "noise_prob_per_window"):
            v = getattr(self, name)
            if not (np.isfinite(v) and 0 <= v <= 1):
                raise InvalidParameterError(f"{name} must lie in [0, 1], got {v}")
        if not self.integration_window > 0:
            raise InvalidParameterError("integration window must be > 0")
        if int(self.trials) != self.trials or self.trials < 1:
            raise InvalidParameterError("trials must be a positive integer")
        if int(self.rng_seed) != self.rng_seed or self.rng_seed < 0:
            raise InvalidParameterError("rng_seed must be a non-negative integer")

    @property
    def chain(self) -> float:
        return self.detector_efficiency * self.system_transmission


@dataclass(frozen=True, eq=False)
class CountsHistogram:
    """Clicks per time bin summed over ``trials``.

    A bin holds at most one click per trial, so ``counts <= trials`` bin-wise;
    a 20 ns window spanning k bins can in principle collect up to k clicks per
    trial, though at single-photon levels multi-click trials are negligible.
    """

    bin_edges: np.ndarray
    counts: np.ndarray
    trials: int
    meta: dict = field(default_factory=dict)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    def window_counts(self, window) -> int:
        lo, hi = window
        if hi <= lo:
            raise RangeError("empty counting window")
        c = self.centers
        if lo < self.bin_edges[0] - 1e-15 or hi > self.bin_edges[-1] + 1e-15:
            raise RangeError(f"window ({lo:g}, {hi:g}) outside histogram")
        return int(self.counts[(c >= lo) & (c < hi)].sum())


def expected_window_mean(trace, window, mu, model: DetectionModel) -> float:
    """Mean detected photons per trial in ``window`` (signal plus noise)."""
    frac = trace.window_energy(window) / trace.input_energy
    noise = model.noise_prob_per_window * (window[1] - window[0]) / model.integration_window
    return mu * frac * model.chain + noise


def _bin_means(trace, mu, model, bin_width):
    g = trace.grid
    per = max(1, int(round(bin_width / g.step)))
    n_bins = g.count // per
    inten = trace.intensity[: n_bins * per].reshape(n_bins, per).sum(axis=1) * g.step
    edges = g.start - g.step / 2 + per * g.step * np.arange(n_bins + 1)
    width = per * g.step
    lam = mu * inten / trace.input_energy * model.chain
    lam = lam + model.noise_prob_per_window * width / model.integration_window
    return edges, lam


def _chunk_counts(seed, key, n, p):
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))
    return rng.binomial(n, p)


def monte_carlo_counts(trace, mu: float, model: DetectionModel, bin_width: float = 1e-9,
                       workers: int = 1, stream: tuple = ()) -> CountsHistogram:
    """Histogram of threshold-detector clicks for ``model.trials`` repetitions.

    ``trace`` must describe one photon (input energy 1); ``mu`` scales it.
    ``stream`` namespaces the random numbers so that independent runs sharing
    one seed (different states, different mu) do not reuse draws.
    """
    if not np.isfinite(mu) or mu < 0:
        raise InvalidParameterError("mu must be >= 0")
    if abs(trace.input_energy - 1.0) > 1e-6:
        raise NormalizationError(
            f"trace must be normalised to one input photon (input energy {trace.input_energy:g})")
    edges, lam = _bin_means(trace, mu, model, bin_width)
    p = -np.expm1(-lam)
    n_chunks = -(-model.trials // CHUNK)
    sizes = [min(CHUNK, model.trials - i * CHUNK) for i in range(n_chunks)]

    def job(i):
        return _chunk_counts(model.rng_seed, (*stream, i), sizes[i], p)

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(job, range(n_chunks)))
    else:
        parts = [job(i) for i in range(n_chunks)]
    counts = np.zeros_like(p, dtype=np.int64)
    for part in parts:  # fixed order
        counts += part
    meta = {"mu": mu, "seed": model.rng_seed, "stream": list(stream)}
    return CountsHistogram(edges, counts, model.trials, meta)


# ---- fidelity algebra -------------------------------------------------------

def fidelity_basis(signal_counts, noise_counts):
    """(S + N) / (S + 2N), S the noise-subtracted signal, N the noise counts."""
    S, N = signal_counts, noise_counts
    if np.any(np.asarray(N) < 0):
        raise InvalidParameterError("noise counts must be >= 0")
    den = S + 2 * N
    if np.any(np.asarray(den) <= 0):
        raise UndefinedFidelityError("S + 2N must be > 0")
    return (S + N) / den


def basis_fidelity_from_windows(correct: float, wrong: float):
    """Fidelity from raw counts in the expected and the other time bin."""
    return fidelity_basis(correct - wrong, wrong)


def basis_fidelity_error(correct: float, wrong: float) -> float:
    tot = correct + wrong
    if tot <= 0:
        return 0.0
    return float(np.sqrt(correct * wrong / tot**3))


def visibility(max_counts, min_counts):
    M, m = np.asarray(max_counts, dtype=float), np.asarray(min_counts, dtype=float)
    if np.any(m < 0) or np.any(M < m):
        raise InvalidParameterError("need max >= min >= 0")
    if np.any(M + m == 0):
        raise UndefinedFidelityError("visibility undefined for max = min = 0")
    V = (M - m) / (M + m)
    return float(V) if V.ndim == 0 else V


def visibility_error(max_counts, min_counts) -> float:
    s = max_counts + min_counts
    if s <= 0:
        return 0.0
    return float(np.sqrt(4 * max_counts * min_counts / s**3))


def fidelity_superposition(V):
    return (1 + np.asarray(V)) / 2 if np.ndim(V) else (1 + V) / 2


def total_fidelity(F_e, F_l, F_plus, F_minus):
    """F_T = F_el / 3 + 2 F_+- / 3 with F_el, F_+- the pair averages."""
    for v in (F_e, F_l, F_plus, F_minus):
        if np.any(np.asarray(v) < 0) or np.any(np.asarray(v) > 1):
            raise InvalidParameterError("fidelities must lie in [0, 1]")
    return (F_e + F_l) / 6 + (F_plus + F_minus) / 3


def total_fidelity_error(s_e, s_l, s_plus, s_minus) -> float:
    return float(np.sqrt((s_e**2 + s_l**2) / 36 + (s_plus**2 + s_minus**2) / 9))


# ---- classical measure-and-prepare bound ------------------------------------

def _poisson_table(mu, n_max, tail_tol=1e-9):
    if not mu > 0:
        raise InvalidParameterError("mu must be > 0")
    if n_max is None:
        n_max = int(stats.poisson.isf(tail_tol, mu)) + 2
    tail = stats.poisson.sf(n_max, mu)
    if tail >= tail_tol:
        raise InvalidParameterError(f"n_max={n_max} leaves Poisson tail {tail:.2g} >= {tail_tol:g}")
    N = np.arange(n_max + 1)
    return N, stats.poisson.pmf(N, mu)


def output_budget(P, eta_mem):
    """Probability with which the classical device must emit: eta * P(N >= 1).

    P(N >= 1) is taken over the table as given, so a truncated distribution
    stays feasible up to eta = 1.
    """
    if not 0 < eta_mem <= 1:
        raise InfeasibleError(f"memory efficiency {eta_mem} outside (0, 1]")
    return eta_mem * float(np.sum(P[1:]))


def classical_bound_from_distribution(P, eta_mem: float) -> float:
    """Greedy optimum: answer only on the largest photon numbers.

    A strategy that measures N photons reaches (N+1)/(N+2); it emits with
    probability q_N and must match the memory's output rate
    sum_N P(N) q_N = eta * P(N >= 1).  Filling q from the top is optimal
    because (N+1)/(N+2) increases with N.
    """
    P = np.asarray(P, dtype=float)
    N = np.arange(len(P))
    F = (N + 1) / (N + 2)
    budget = output_budget(P, eta_mem)
    if budget > P[1:].sum() * (1 + 1e-12):
        raise InfeasibleError("output budget exceeds the non-vacuum probability")
    rem, num = budget, 0.0
    for n in range(len(P) - 1, 0, -1):
        if rem <= 0:
            break
        take = min(P[n], rem)
        num += take * F[n]
        rem -= take
    return float(num / budget)


def classical_bound(mu: float, eta_mem: float, n_max: int | None = None) -> float:
    """Best fidelity of a measure-and-prepare device with efficiency ``eta_mem``
    facing a coherent state of mean photon number ``mu``."""
    N, P = _poisson_table(mu, n_max)
    return classical_bound_from_distribution(P, eta_mem)


def classical_bound_lp(mu: float, eta_mem: float, n_max: int) -> float:
    """Same optimum by linear programming; an oracle for the greedy fill.

    Variables are the shares x_N = P(N) q_N / budget of the emitted output, so
    sum x_N = 1 with 0 <= x_N <= P(N) / budget.  Uses the truncated
    distribution as given, without the tail check.
    """
    N = np.arange(n_max + 1)
    P = stats.poisson.pmf(N, mu)
    budget = output_budget(P, eta_mem)
    F = (N + 1) / (N + 2)
    bounds = [(0.0, p / budget) for p in P[1:]]
    res = optimize.linprog(-F[1:], A_eq=np.ones((1, n_max)), b_eq=[1.0], bounds=bounds,
                           method="highs")
    if res.status != 0:
        raise InfeasibleError(res.message)
    return float(-res.fun)


def classical_bound_greedy_truncated(mu: float, eta_mem: float, n_max: int) -> float:
    N = np.arange(n_max + 1)
    return classical_bound_from_distribution(stats.poisson.pmf(N, mu), eta_mem)


# ---- time-bin benchmark -------------------------------------------------------

@dataclass(frozen=True)
class TimebinSetup:
    """Everything the fidelity sweep needs besides the detector.

    Basis states are stored in ``single`` and read out at ``order``/Delta;
    superposition states go through ``double``, whose comb_a must be the
    faster one.  Measurement imperfections enter as the comb weights of
    ``double`` (unequal path efficiencies) and ``delta_beta_error`` (rad), an
    offset on every interferometer phase setting.
    """

    single: CombParams
    double: DoubleCombParams
    pulse_fwhm: float = 12e-9
    separation: float = 40e-9
    order: int = 2
    window: float = 20e-9
    stark: StarkConfig = field(default_factory=StarkConfig)
    T_p: float = 18e-9
    delta_beta_error: float = 0.0
    phases: tuple = (np.pi / 2, 3 * np.pi / 4)  # delta_alpha of the "+" and "-" inputs
    memory_efficiency: float | None = None  # for the bound; None -> analytic value
    dt: float = 0.5e-9

    def __post_init__(self):
        if self.double.comb_a.delta <= self.double.comb_b.delta:
            raise InvalidParameterError("comb_a must have the larger tooth spacing")
        if len(self.phases) != 2:
            raise InvalidParameterError("phases holds the two superposition inputs")

    @property
    def storage_time(self) -> float:
        return self.order / self.single.delta

    @property
    def bound_efficiency(self) -> float:
        if self.memory_efficiency is not None:
            return self.memory_efficiency
        s = self.single
        return float(analytic_efficiency(s.tooth_depth, s.finesse, s.background_d0, s.gamma,
                                         self.storage_time))

    def delta_f_for(self, delta_beta: float) -> float:
        """Shift of comb_a that sets the interferometer phase to ``delta_beta``."""
        T = self.order / self.double.comb_a.delta
        return (delta_beta + self.delta_beta_error) / (2 * np.pi * T)

    def time_grid(self) -> TimeGrid:
        slow = self.order / self.double.comb_b.delta
        end = slow + self.separation + self.window + 3 * self.pulse_fwhm
        return TimeGrid.spanning(-3 * self.pulse_fwhm, end, self.dt)


@dataclass(frozen=True, eq=False)
class Measurement:
    trace: object
    signal: tuple  # window expected to light up
    reference: tuple  # wrong bin (basis) or destructive setting (superposition)


def timebin_measurements(setup: TimebinSetup) -> dict:
    """One-photon traces and counting windows for the six measurement settings.

    "e"/"l": basis states in the single comb, correct and wrong time bins.
    "+max", "+min", "-max", "-min": superposition inputs in the double comb with
    the interferometer set for constructive or destructive interference; the
    interference window is used in every case.
    """
    tg = setup.time_grid()
    single = setup.single
    fg = comb_frequency_grid(single, tg)
    spec = carve_comb(single, fg)
    sched = design_retrieval_schedule(single.delta, setup.order, setup.stark, setup.T_p)
    t_e = setup.storage_time
    half = setup.window / 2
    w_e = (t_e - half, t_e + half)
    w_l = (t_e + setup.separation - half, t_e + setup.separation + half)
    out = {}
    for kind, right, wrong in (("e", w_e, w_l), ("l", w_l, w_e)):
        q = TimeBinQubit(pulse_fwhm=setup.pulse_fwhm, separation=setup.separation, kind=kind)
        tr = simulate_trace(spec, q.envelope(tg), sched, tg)
        out[kind] = Measurement(tr, right, wrong)

    dbl = setup.double
    sched2 = design_timebin_schedule(dbl.comb_a.delta, dbl.comb_b.delta, setup.separation,
                                     setup.order, setup.stark, setup.T_p)
    fg2 = default_frequency_grid(replace(dbl, delta_f=0.0), tg, margin=20e6 + 1e6)
    for label, alpha in zip("+-", setup.phases):
        q = TimeBinQubit(alpha, setup.pulse_fwhm, setup.separation)
        tr = {}
        for which, beta in (("max", -alpha), ("min", np.pi - alpha)):
            d = replace(dbl, delta_f=setup.delta_f_for(beta))
            tr[which] = simulate_timebin(d, q, sched2, tg, setup.order, fg2, setup.window)
        w = tr["max"].windows["interference"]
        out[label + "max"] = Measurement(tr["max"], w, w)
        out[label + "min"] = Measurement(tr["min"], w, w)
    return out


@dataclass(frozen=True)
class FidelityRow:
    mu: float
    F_e: float
    F_l: float
    F_plus: float
    F_minus: float
    F_T: float
    err_e: float
    err_l: float
    err_plus: float
    err_minus: float
    err_T: float
    bound: float

    @property
    def sigma_above_bound(self) -> float:
        return (self.F_T - self.bound) / self.err_T if self.err_T > 0 else float("inf")


@dataclass(frozen=True)
class FidelityTable:
    rows: tuple
    trials: int
    seed: int
    memory_efficiency: float
    histograms: dict | None = field(default=None, compare=False, repr=False)  # (mu, setting) -> hist

    def to_dict(self) -> dict:
        rows = []
        for r in self.rows:
            d = {k: getattr(r, k) for k in r.__dataclass_fields__}
            d["sigma_above_bound"] = r.sigma_above_bound
            rows.append(d)
        return {"trials": self.trials, "seed": self.seed,
                "memory_efficiency": self.memory_efficiency, "rows": rows}

    def to_text(self) -> str:
        head = ["mu", "F_e", "F_l", "F_+", "F_-", "F_T", "bound", "sigma"]
        lines = ["  ".join(f"{h:>15}" if i else f"{h:>5}" for i, h in enumerate(head))]

        def pm(v, e):
            return f"{100 * v:6.2f}+-{100 * e:5.2f}%"

        for r in self.rows:
            cells = [f"{r.mu:5.2f}", pm(r.F_e, r.err_e), pm(r.F_l, r.err_l),
                     pm(r.F_plus, r.err_plus), pm(r.F_minus, r.err_minus), pm(r.F_T, r.err_T),
                     f"{100 * r.bound:14.2f}%", f"{r.sigma_above_bound:15.1f}"]
            lines.append("  ".join(cells))
        return "\n".join(lines)


def _row(mu, hists, meas, bound):
    def counts(name, w):
        return hists[name].window_counts(w)

    basis = {}
    for k in "el":
        m = meas[k]
        C, W = counts(k, m.signal), counts(k, m.reference)
        basis[k] = (float(basis_fidelity_from_windows(C, W)), basis_fidelity_error(C, W))
    sup = {}
    for k in "+-":
        M = counts(k + "max", meas[k + "max"].signal)
        m = counts(k + "min", meas[k + "min"].signal)
        V = visibility(M, m)
        sup[k] = (float(fidelity_superposition(V)), visibility_error(M, m) / 2)
    F_T = float(total_fidelity(basis["e"][0], basis["l"][0], sup["+"][0], sup["-"][0]))
    err = total_fidelity_error(basis["e"][1], basis["l"][1], sup["+"][1], sup["-"][1])
    return FidelityRow(mu, basis["e"][0], basis["l"][0], sup["+"][0], sup["-"][0], F_T,
                       basis["e"][1], basis["l"][1], sup["+"][1], sup["-"][1], err, bound)


SETTINGS = ("e", "l", "+max", "+min", "-max", "-min")


def fidelity_vs_mu_sweep(mus, setup: TimebinSetup, detection: DetectionModel,
                         workers: int = 1, measurements: dict | None = None) -> FidelityTable:
    """Fidelities of the four probe states for each mean photon number.

    Traces are computed once (they are linear in the input) and each
    (mu, setting) pair draws from its own random stream.  Errors are
    counting-statistics standard errors.
    """
    meas = measurements if measurements is not None else timebin_measurements(setup)
    eta = setup.bound_efficiency
    rows, kept = [], {}
    for i, mu in enumerate(mus):
        hists = {s: monte_carlo_counts(meas[s].trace, mu, detection, workers=workers,
                                       stream=(i, j))
                 for j, s in enumerate(SETTINGS)}
        rows.append(_row(float(mu), hists, meas, classical_bound(mu, eta)))
        kept.update({(float(mu), s): h for s, h in hists.items()})
    return FidelityTable(tuple(rows), detection.trials, detection.rng_seed, eta, kept)


def default_timebin_setup(d0: float = 0.2, eta_basis: float = 0.069,
                          finesse: float = 7.8, bandwidth: float = 160e6,
                          weight_a: float = 0.85, delta_beta_error: float = 0.12,
                          storage_a: float = 160e-9, storage_b: float = 180e-9,
                          **kw) -> TimebinSetup:
    """Combs with 1/Delta = ``storage_a`` and ``storage_b`` read out at second order.

    The single comb (spacing 1/storage_a) gets the depth for which the
    analytic efficiency at the readout time equals ``eta_basis``; both combs
    of the double structure reuse that depth and the tooth width.
    ``weight_a`` and ``delta_beta_error`` are the measurement-imbalance knobs.
    Remaining keywords go to :class:`TimebinSetup`.
    """
    order = kw.get("order", 2)
    da, db = 1 / storage_a, 1 / storage_b
    gamma = da / finesse
    d = calibrate_depth(eta_basis, order / da, gamma, finesse, d0)
    single = CombParams(da, finesse, bandwidth, d, d0)
    dbl = DoubleCombParams(single, CombParams(db, db / gamma, bandwidth, d, d0), weight_a=weight_a)
    kw.setdefault("memory_efficiency", eta_basis)
    return TimebinSetup(single, dbl, delta_beta_error=delta_beta_error, **kw)
