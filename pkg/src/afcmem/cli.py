"""Command-line front end.

    afcmem simulate --scenario echo_train
    afcmem timebin  --scenario timebin_qubits --seed 7 --format json
    afcmem bound    --mu 0.8 --eta 0.069
    afcmem sweep    --scenario echo_train --param simulate.stark.n_target --values 2,3,4
    afcmem timeline --kind double_afc
    afcmem validate --scenario my.yaml

Outputs go to ``--out`` or, failing that, ``$AFCMEM_OUT_DIR`` or ``./afcmem_out``.
Exit status: 0 ok, 2 configuration error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .bench import classical_bound, classical_bound_lp, fidelity_vs_mu_sweep, timebin_measurements
from .comb import analytic_efficiency, carve_comb
from .echo import comb_frequency_grid, echo_efficiency, simulate_trace
from .errors import ConfigError, NumericalError
from .io import atomic_write, histogram_csv, spectrum_csv, spectrum_header, table_csv, to_json, trace_csv
from .scenario import Scenario, ScenarioError, load_scenario, with_override
from .spectral import default_initialization
from .stark import validate_schedule
from .timeline import build_timeline

OUT_ENV = "AFCMEM_OUT_DIR"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


class Outputs(dict):
    """Relative file name -> text; written only once the whole run succeeded."""

    def table(self, stem, rows, fmt):
        if fmt == "json":
            self[f"{stem}.json"] = to_json(rows)
        else:
            self[f"{stem}.csv"] = table_csv(rows)

    def flush(self, out_dir: Path) -> list[Path]:
        return [atomic_write(out_dir / name, text) for name, text in sorted(self.items())]


# ---- runners ------------------------------------------------------------------

def run_simulate(sc: Scenario, fmt: str) -> tuple[Outputs, dict]:
    cfg = sc.section("simulate")
    comb = cfg.comb.params()
    tg = cfg.time_grid_for(comb.delta)
    spec = carve_comb(comb, comb_frequency_grid(comb, tg))
    sched = cfg.stark.schedule(comb.delta) if cfg.stark else None
    trace = simulate_trace(spec, cfg.pulse.pulse(), sched, tg, method=cfg.method,
                           prompt_gate=0.5 / comb.delta)
    width = cfg.window_ns * 1e-9 if cfg.window_ns else 1.0 / comb.delta
    rows = []
    for n in cfg.orders:
        t = n / comb.delta
        lo, hi = max(t - width / 2, tg.start), min(t + width / 2, tg.stop)
        rows.append({"order": n, "time_ns": t * 1e9,
                     "efficiency": echo_efficiency(trace, (lo, hi)),
                     "analytic_efficiency": analytic_efficiency(
                         comb.tooth_depth, comb.finesse, comb.background_d0, comb.gamma, t)})
    out = Outputs()
    out["trace.csv"] = trace_csv(trace)
    out["trace.json"] = to_json({**trace.meta, "input_energy": trace.input_energy,
                                 "output_energy": trace.energy, "window_ns": width * 1e9})
    out["spectrum.csv"] = spectrum_csv(spec)
    out["spectrum.json"] = to_json(spectrum_header(spec))
    out.table("efficiency", rows, fmt)
    summary = {"comb": {"delta_Hz": comb.delta, "finesse": comb.finesse, "gamma_Hz": comb.gamma,
                        "tooth_depth": comb.tooth_depth, "background_d0": comb.background_d0},
               "efficiencies": rows, "output_energy": trace.energy}
    if sched is not None:
        rep = validate_schedule(sched, comb.delta, n_max=max(cfg.orders))
        summary["stark"] = {"summary": rep.summary, "omega_tp": rep.omega_tp,
                            "warnings": rep.warnings,
                            "pulses": [{"start_ns": p.start * 1e9, "duration_ns": p.duration * 1e9,
                                        "field_V_per_cm": p.field} for p in sched.pulses]}
    if cfg.initialization is not None:
        ini = cfg.initialization
        res = default_initialization(ini.prep_MHz * 1e6, ini.repetitions, ini.pump_rate_per_s)
        out["initialization_before.csv"] = spectrum_csv(res.before)
        out["initialization_after.csv"] = spectrum_csv(res.after)
        summary["initialization"] = {"enhancement": res.enhancement,
                                     "population_drift": res.population_drift}
    return out, summary


def run_timebin(sc: Scenario, fmt: str, workers: int = 1) -> tuple[Outputs, dict]:
    cfg = sc.section("timebin")
    setup = cfg.setup()
    meas = timebin_measurements(setup)
    table = fidelity_vs_mu_sweep(cfg.mu, setup, sc.detection.model(sc.seed), workers, meas)
    out = Outputs()
    d = table.to_dict()
    out.table("fidelity", d["rows"], fmt)
    out["fidelity.txt"] = table.to_text() + "\n"
    for name, m in meas.items():
        out[f"traces/{_safe(name)}.csv"] = trace_csv(m.trace)
    for (mu, name), h in table.histograms.items():
        out[f"histograms/mu{mu:g}_{_safe(name)}.csv"] = histogram_csv(h)
    eff = {name: {"signal": m.trace.window_energy(m.signal),
                  "reference": m.trace.window_energy(m.reference)} for name, m in meas.items()}
    return out, {"fidelity": d, "window_efficiencies": eff}


def _safe(name: str) -> str:
    return name.replace("+", "plus_").replace("-", "minus_")


def run_bound(mus, eta, n_max, fmt) -> tuple[Outputs, dict]:
    rows = []
    for mu in mus:
        b = classical_bound(mu, eta, n_max)
        nm = n_max or _auto_nmax(mu)
        rows.append({"mu": float(mu), "memory_efficiency": float(eta), "bound": b,
                     "bound_lp": classical_bound_lp(mu, eta, nm), "n_max": nm})
    out = Outputs()
    out.table("bound", rows, fmt)
    return out, {"bounds": rows}


def _auto_nmax(mu):
    from scipy import stats
    return int(stats.poisson.isf(1e-9, mu)) + 2


def run_timeline(kind, repetitions, fmt) -> tuple[Outputs, dict]:
    tl = build_timeline(kind, repetitions)
    out = Outputs()
    out.table("timeline", tl.rows(), fmt)
    return out, {"timeline": {"kind": tl.kind, "total_ms": tl.total_duration * 1e3,
                              "phases": tl.rows()}}


def _sub_seed(seed: int, i: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(i,)).generate_state(1, np.uint64)[0])


def run_sweep(sc: Scenario, param: str, values, command: str, fmt: str, workers: int):
    points = [with_override(sc, param, v).model_copy(update={"seed": _sub_seed(sc.seed, i)})
              for i, v in enumerate(values)]

    def one(p):
        if command == "simulate":
            return run_simulate(p, fmt)
        return run_timebin(p, fmt)

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(one, points))
    else:
        results = [one(p) for p in points]
    out, rows = Outputs(), []
    for i, (v, p, (o, summ)) in enumerate(zip(values, points, results)):
        for name, text in o.items():
            out[f"point_{i:03d}/{name}"] = text
        for r in _flatten(command, summ):
            rows.append({"point": i, param: v, "seed": p.seed, **r})
    out.table("sweep", rows, fmt)
    return out, {"parameter": param, "values": list(values), "rows": rows}


def _flatten(command, summ):
    if command == "simulate":
        return summ["efficiencies"]
    return summ["fidelity"]["rows"]


# ---- argument handling --------------------------------------------------------

def _parse_values(text: str):
    return [yaml.safe_load(v) for v in text.split(",") if v.strip()]


def _floats(text: str):
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", help="scenario YAML file or bundled name")
    common.add_argument("--seed", type=int, help="override the scenario seed (u64)")
    common.add_argument("--out", type=Path, help=f"output directory (default ${OUT_ENV} or ./afcmem_out)")
    common.add_argument("--format", choices=("csv", "json"), help="format of tabular outputs")
    common.add_argument("--workers", type=int, default=1, help="parallel workers")

    ap = argparse.ArgumentParser(prog="afcmem", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=f"afcmem {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="echo train of a single comb")
    sub.add_parser("timebin", parents=[common], help="time-bin fidelity sweep over mu")
    b = sub.add_parser("bound", parents=[common], help="classical measure-and-prepare bound")
    b.add_argument("--mu", type=_floats, help="comma-separated mean photon numbers")
    b.add_argument("--eta", type=float, help="memory efficiency")
    b.add_argument("--n-max", type=int, help="photon-number truncation")
    s = sub.add_parser("sweep", parents=[common], help="repeat a run over one parameter")
    s.add_argument("--param", required=True, help="dotted scenario path, e.g. simulate.comb.finesse")
    s.add_argument("--values", required=True, type=_parse_values, help="comma-separated values")
    s.add_argument("--run", choices=("simulate", "timebin"), help="which pipeline to sweep")
    t = sub.add_parser("timeline", parents=[common], help="experimental time sequence")
    t.add_argument("--kind", choices=("single_afc", "double_afc"))
    sub.add_parser("validate", parents=[common], help="check a scenario, print its canonical form")
    return ap


def _out_dir(args) -> Path:
    return args.out or Path(os.environ.get(OUT_ENV) or "afcmem_out")


def _scenario(args, required=True) -> Scenario | None:
    if args.scenario is None:
        if required:
            raise ScenarioError("--scenario is required for this command")
        return None
    sc = load_scenario(args.scenario)
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ScenarioError(f"seed {args.seed} outside the u64 range")
        sc = sc.model_copy(update={"seed": args.seed})
    return sc


def dispatch(args) -> tuple[Outputs, dict] | None:
    cmd = args.command
    sc = _scenario(args, required=cmd in ("simulate", "timebin", "sweep", "validate"))
    fmt = args.format or (sc.output.format if sc else "csv")
    if args.workers < 1:
        raise ScenarioError("--workers must be >= 1")
    if cmd == "validate":
        sys.stdout.write(sc.dump())
        return None
    if cmd == "simulate":
        return run_simulate(sc, fmt)
    if cmd == "timebin":
        return run_timebin(sc, fmt, args.workers)
    if cmd == "bound":
        sec = sc.bound if sc else None
        mus = args.mu or (sec.mu if sec else None)
        eta = args.eta if args.eta is not None else (sec.memory_efficiency if sec else None)
        if not mus or eta is None:
            raise ScenarioError("bound needs --mu and --eta or a scenario with a bound section")
        if any(m <= 0 for m in mus):
            raise ScenarioError("mean photon numbers must be > 0")
        return run_bound(mus, eta, args.n_max or (sec.n_max if sec else None), fmt)
    if cmd == "timeline":
        sec = sc.timeline if sc else None
        kind = args.kind or (sec.kind if sec else "single_afc")
        reps = dict(sec.repetitions) if sec and sec.kind == kind else {}
        return run_timeline(kind, reps, fmt)
    if cmd == "sweep":
        run = args.run or ("simulate" if sc.simulate is not None else "timebin")
        sc.section(run)
        return run_sweep(sc, args.param, args.values, run, fmt, args.workers)
    raise ScenarioError(f"unknown command {cmd!r}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        res = dispatch(args)
        if res is None:
            return EXIT_OK
        out, summary = res
        sc_name = args.scenario
        summary = {"command": args.command, "scenario": sc_name, "version": __version__,
                   "seed": _effective_seed(args), **summary}
        out["summary.json"] = to_json(summary)
        out_dir = _out_dir(args)
        written = out.flush(out_dir)
        print(f"wrote {len(written)} files to {out_dir}")
        if "fidelity.txt" in out:
            print(out["fidelity.txt"], end="")
        return EXIT_OK
    except ConfigError as exc:
        print(f"afcmem: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"afcmem: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def _effective_seed(args):
    if args.seed is not None:
        return args.seed
    if args.scenario:
        return load_scenario(args.scenario).seed
    return None


if __name__ == "__main__":
    sys.exit(main())
