"""Command-line scenario runner.

Each subcommand reads a config file (see ``docs/config.md``), applies the
override flags, runs the study and writes one CSV. Floats are written with
17 significant digits so identical inputs give byte-identical files.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 I/O error.
"""
from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .analysis import (AnalysisError, analytic_eigen, analytic_static_sine, compute_spectrum,
                       convergence_rate, l2_error_field, l2_error_mode, standing_wave_velocity,
                       static_solution)
from .assembly import AssemblyError, build_system, field_eval
from .config import (ConfigError, MeshSpec, Scenario, STUDIES, apply_overrides, parse_config,
                     parse_config_text, scenario_to_text)
from .dynamics import Integrator, InstabilityError, critical_time_step, run_transient
from .lumping import NonPositiveMassError
from .results import ConvergenceTable
from .signals import Signal, SignalError, read_signal_csv, synthetic_burst, write_signal_csv
from .splines import SplineError, SplineSpace, eval_nurbs, mesh_preset, sample_points, weighted_preset

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4
NUMERICAL_ERRORS = (np.linalg.LinAlgError, InstabilityError, NonPositiveMassError, AnalysisError,
                    FloatingPointError)
SYNTHETIC = "synthetic"


def fmt(x) -> str:
    return f"{float(x):.17g}"


@dataclass
class CsvTable:
    """Rows of one study output with its metadata and trailing comments."""

    meta: dict
    header: list[str]
    rows: list[list[float]] = field(default_factory=list)
    trailer: list[str] = field(default_factory=list)

    def render(self) -> str:
        meta = ", ".join(f"{k}={v}" for k, v in self.meta.items())
        lines = [f"# {meta}", ",".join(self.header)]
        lines += [",".join(fmt(x) for x in row) for row in self.rows]
        lines += [f"# {t}" for t in self.trailer]
        return "\n".join(lines) + "\n"


def build_space(mesh: MeshSpec, length: float, m: int | None = None) -> SplineSpace:
    m = mesh.m if m is None else m
    if mesh.preset == "weighted":
        if mesh.weights is None:
            return weighted_preset(mesh.p, m, length)
        return weighted_preset(mesh.p, m, length, mesh.weights)
    return mesh_preset(mesh.preset, mesh.p, m, length, mesh.breakpoints)


def _meta(s: Scenario, dt=None) -> dict:
    return {"study": s.study, "scheme": s.scheme.label, "p": s.mesh.p,
            "q": "-" if s.scheme.q is None else s.scheme.q,
            "elements": s.mesh.n_elements, "dt": "-" if dt is None else fmt(dt)}


def _static(s: Scenario) -> CsvTable:
    model = s.model
    space = build_space(s.mesh, model.L)
    coeffs = static_solution(model, space, s.scheme)
    xis = sample_points(space)
    table = CsvTable(_meta(s), ["x", "u_h", "u_ref", "F_N_h", "F_N_ref"])
    for xi in xis:
        u, _, N = field_eval(space, coeffs, xi, model.EA)
        x = eval_nurbs(space, xi).x
        if model.load.kind == "sine" and model.bc == ("fixed", "fixed") and not model.load.point_load:
            u_ref, N_ref = analytic_static_sine(model, x)
        elif model.load.kind == "none" and not model.load.point_load:
            u_ref, N_ref = 0.0, 0.0
        else:
            u_ref, N_ref = np.nan, np.nan
        table.rows.append([x, u, u_ref, N, N_ref])
    return table


def _spectrum(s: Scenario) -> CsvTable:
    space = build_space(s.mesh, s.model.L)
    spec = compute_spectrum(s.model, space, s.scheme)
    table = CsvTable(_meta(s), ["n", "omega_h", "omega_ref", "ratio", "outlier_flag"])
    for n, (w, w_ref, r, flag) in enumerate(zip(spec.omega_h, spec.omega_ref, spec.ratios,
                                                spec.outlier_mask), start=1):
        table.rows.append([n, w, w_ref, r, int(flag)])
    return table


def _slope_line(tab: ConvergenceTable) -> list[str]:
    return [f"slope={fmt(convergence_rate(tab))}"] if len(tab) >= 3 else []


def _modeshape(s: Scenario) -> CsvTable:
    ref_fn = analytic_eigen(s.model, s.mode)[1]
    tab = ConvergenceTable()
    for m in s.levels:
        space = build_space(s.mesh, s.model.L, m * s.mesh.m)
        spec = compute_spectrum(s.model, space, s.scheme, with_modes=True)
        if s.mode > spec.modes.shape[1]:
            raise AnalysisError(f"mode {s.mode} not available with {space.n_elements} elements")
        err = l2_error_mode(space, spec.modes[:, s.mode - 1], ref_fn)
        tab.add(space.n_elements, space.element_sizes().max(), err)
    table = CsvTable({**_meta(s), "mode": s.mode}, ["n_el", "h_max", "l2_error"])
    table.rows = [list(r) for r in zip(tab.n_el, tab.h_max, tab.error)]
    table.trailer = _slope_line(tab)
    return table


def _convergence(s: Scenario) -> CsvTable:
    model = s.model
    pick = 0 if s.quantity == "displacement" else 1

    def ref_fn(x):
        return analytic_static_sine(model, x)[pick]

    tab = ConvergenceTable()
    for m in s.levels:
        space = build_space(s.mesh, model.L, m * s.mesh.m)
        coeffs = static_solution(model, space, s.scheme)
        err = l2_error_field(space, coeffs, ref_fn, s.quantity, model.EA)
        tab.add(space.n_elements, space.element_sizes().max(), err)
    table = CsvTable({**_meta(s), "quantity": s.quantity}, ["n_el", "h_max", "error"])
    table.rows = [list(r) for r in zip(tab.n_el, tab.h_max, tab.error)]
    table.trailer = _slope_line(tab)
    return table


def load_signal(name: str, base: Path | None = None) -> Signal:
    """``synthetic`` gives the built-in burst; anything else is a CSV path."""
    if name == SYNTHETIC:
        return synthetic_burst()
    path = Path(name)
    if base is not None and not path.is_absolute():
        path = base / path
    return read_signal_csv(path)


def default_probes(s: Scenario) -> tuple[float, ...]:
    """The free right end, else a quarter of the length."""
    L = s.model.L
    return (L,) if s.model.bc[1] == "free" else (0.25 * L,)


def _transient(s: Scenario, base: Path | None = None) -> CsvTable:
    t = s.transient
    model = s.model
    space = build_space(s.mesh, model.L)
    sys_ = build_system(model, space, s.scheme)
    if t.dt_rule == "critical":
        dt_crit = critical_time_step(sys_.K, sys_.mass_matrix)
        integ = Integrator(t.method, "fixed", t.critical_fraction * dt_crit, t.T_end, t.stride)
    else:
        integ = Integrator(t.method, t.dt_rule, t.dt, t.T_end, t.stride)
    v0 = None
    if t.initial == "standing_wave":
        def v0(x):
            return standing_wave_velocity(x, model.L)
    signal = load_signal(t.signal, base) if t.forcing == "ground" else None
    probes = t.probes or default_probes(s)
    hist = run_transient(model, space, s.scheme, integ, probes, v0=v0, signal=signal,
                         ground_mass=t.ground_mass, sys=sys_)
    header = ["t"]
    for x in probes:
        header += [f"u@{x:g}", f"v@{x:g}", f"a@{x:g}"]
    table = CsvTable({**_meta(s, hist.dt), "method": t.method}, header)
    for k, time_k in enumerate(hist.times):
        row = [time_k]
        for j in range(len(probes)):
            row += [hist.u[k, j], hist.v[k, j], hist.a[k, j]]
        table.rows.append(row)
    return table


def run_study(s: Scenario, base: Path | None = None) -> CsvTable:
    """Execute the scenario's study and return its output table."""
    if s.study == "static":
        return _static(s)
    if s.study == "spectrum":
        return _spectrum(s)
    if s.study == "modeshape":
        return _modeshape(s)
    if s.study == "convergence":
        return _convergence(s)
    return _transient(s, base)


def run_scenario(s: Scenario, out=None, base: Path | None = None) -> Path:
    """Run the study and write its CSV; returns the output path."""
    path = Path(out or s.output)
    if base is not None and not path.is_absolute() and out is None:
        path = base / path
    text = run_study(s, base).render()
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="\n")
    return path


def _revalidate(s: Scenario) -> Scenario:
    return parse_config_text(scenario_to_text(s), "<overrides>")


def _context(s: Scenario | None) -> str:
    if s is None:
        return ""
    return f"[{s.study}, {s.scheme.label}, p={s.mesh.p}, {s.mesh.n_elements} elements] "


def _run_one(cfg: str, study: str | None, overrides: dict) -> tuple[int, str]:
    """Load, override, run; returns (exit code, message)."""
    s = None
    try:
        path = Path(cfg)
        s = parse_config(path)
        if study is not None and study != s.study:
            s = _revalidate(replace(s, study=study))
        s = _revalidate(apply_overrides(s, **overrides))
        start = time.perf_counter()
        out = run_scenario(s, overrides.get("out"), base=path.parent)
        return EXIT_OK, f"wrote {out} in {time.perf_counter() - start:.3f} s wall-clock"
    except (ConfigError, AssemblyError, SplineError) as exc:
        return EXIT_CONFIG, f"config error: {_context(s)}{exc}"
    except NUMERICAL_ERRORS as exc:
        return EXIT_NUMERIC, f"numerical failure: {_context(s)}{exc}"
    except (OSError, SignalError) as exc:
        return EXIT_IO, f"i/o error: {_context(s)}{exc}"


def _add_overrides(sp: argparse.ArgumentParser, transient: bool) -> None:
    sp.add_argument("--config", required=True, help="scenario config file")
    sp.add_argument("--p", type=int, help="spline degree")
    sp.add_argument("--q", help="AD reproduction degree (integer, min or max)")
    sp.add_argument("--scheme", help="nurbs, ig or ad, optionally with +rowsum")
    sp.add_argument("--elements", type=int, help="number of elements (multiple of the preset spans)")
    sp.add_argument("--out", help="output CSV path")
    if transient:
        sp.add_argument("--dt", type=float, help="fixed time step (same for every scheme)")
        sp.add_argument("--ground-mass", choices=("scheme", "consistent"),
                        help="mass used to form the ground-acceleration load")
        sp.add_argument("--signal", help=f"ground-acceleration CSV or '{SYNTHETIC}'")


def _overrides(args) -> dict:
    out = {"p": args.p, "q": args.q, "scheme": args.scheme, "elements": args.elements, "out": args.out}
    for key in ("dt", "ground_mass", "signal"):
        out[key] = getattr(args, key, None)
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dualiga", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for study in STUDIES:
        _add_overrides(sub.add_parser(study, help=f"run a {study} study"), study == "transient")
    sw = sub.add_parser("sweep", help="run several configs, optionally in parallel")
    sw.add_argument("configs", nargs="+", help="config files (distinct output paths)")
    sw.add_argument("--jobs", type=int, default=1, help="worker processes")
    sig = sub.add_parser("signal", help="write the synthetic ground-acceleration burst")
    sig.add_argument("--out", required=True, help="output CSV path")
    return parser


def _sweep(configs, jobs: int) -> int:
    outputs = {}
    for cfg in configs:
        try:
            s = parse_config(cfg)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        except OSError as exc:
            print(f"i/o error: {exc}", file=sys.stderr)
            return EXIT_IO
        target = (Path(cfg).parent / s.output).resolve()
        if target in outputs:
            print(f"config error: output.path: {cfg} and {outputs[target]} both write {target}",
                  file=sys.stderr)
            return EXIT_CONFIG
        outputs[target] = cfg
    empty = dict.fromkeys(("p", "q", "scheme", "elements", "out", "dt", "ground_mass", "signal"))
    if jobs <= 1:
        results = [_run_one(cfg, None, empty) for cfg in configs]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, configs, [None] * len(configs), [empty] * len(configs)))
    code = EXIT_OK
    for cfg, (rc, msg) in zip(configs, results):
        print(f"{cfg}: {msg}", file=sys.stderr)
        code = max(code, rc)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "sweep":
        if args.jobs < 1:
            print("config error: --jobs: must be >= 1", file=sys.stderr)
            return EXIT_CONFIG
        return _sweep(args.configs, args.jobs)
    if args.command == "signal":
        try:
            write_signal_csv(synthetic_burst(), args.out)
        except OSError as exc:
            print(f"i/o error: {exc}", file=sys.stderr)
            return EXIT_IO
        return EXIT_OK
    rc, msg = _run_one(args.config, args.command, _overrides(args))
    print(msg, file=sys.stderr)
    return rc


if __name__ == "__main__":
    sys.exit(main())
