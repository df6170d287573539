"""Scenario configuration: INI-style files with flat sections.

The schema is documented in ``docs/config.md``. Every key is validated; an
unknown section or key, a missing required key, a type mismatch or a
violated constraint raises :class:`ConfigError` whose message starts with
the offending ``section.key``.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from .assembly import BC_MODES, LUMPINGS, TEST_FUNCTIONS, LoadSpec, Scheme, TrussModel
from .splines import MAX_DEGREE, MESH_BREAKPOINTS, WEIGHTED_WEIGHTS

STUDIES = ("static", "spectrum", "modeshape", "transient", "convergence")
PRESETS = ("A", "B", "C", "weighted")
BCS = {"fixed-fixed": ("fixed", "fixed"), "fixed-free": ("fixed", "free"),
       "free-fixed": ("free", "fixed"), "free-free": ("free", "free")}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class MeshSpec:
    preset: str = "A"
    p: int = 2
    m: int = 1
    breakpoints: tuple[float, ...] | None = None
    weights: tuple[float, ...] | None = None

    @property
    def initial_spans(self) -> int:
        if self.preset == "weighted":
            return 4
        bp = self.breakpoints or MESH_BREAKPOINTS[self.preset]
        return len(bp) - 1

    @property
    def n_elements(self) -> int:
        return self.initial_spans * self.m


@dataclass(frozen=True)
class TransientSpec:
    method: str = "cdm"
    dt_rule: str = "h_over_10"
    dt: float | None = None
    critical_fraction: float = 0.9
    T_end: float = 1.0
    initial: str = "rest"
    forcing: str = "none"
    signal: str | None = None
    ground_mass: str = "scheme"
    probes: tuple[float, ...] | None = None
    stride: int = 1


@dataclass(frozen=True)
class Scenario:
    study: str
    model: TrussModel
    mesh: MeshSpec
    scheme: Scheme = field(default_factory=Scheme)
    transient: TransientSpec | None = None
    levels: tuple[int, ...] = (1, 2, 4, 8)
    mode: int = 10
    quantity: str = "displacement"
    output: str = "out.csv"


# schema: section -> key -> (type, default); REQUIRED marks mandatory keys
REQUIRED = object()
SCHEMA = {
    "study": {"type": (str, REQUIRED), "levels": ("intlist", (1, 2, 4, 8)), "mode": (int, 10),
              "quantity": (str, "displacement")},
    "model": {"L": (float, 1.0), "EA": (float, None), "E": (float, None), "A": (float, None),
              "mu": (float, None), "rho": (float, None), "bc": (str, "fixed-fixed"),
              "load": (str, "none"), "P0": (float, 0.0), "point_load": (float, 0.0),
              "point_end": (str, "right")},
    "mesh": {"preset": (str, "A"), "p": (int, REQUIRED), "m": (int, None), "elements": (int, None),
             "breakpoints": ("floatlist", None), "weights": ("floatlist", None)},
    "scheme": {"test_fn": (str, "nurbs"), "q": (str, None), "lumping": (str, "none"),
               "bc_mode": (str, "schur")},
    "integrator": {"method": (str, "cdm"), "dt_rule": (str, "h_over_10"), "dt": (float, None),
                   "critical_fraction": (float, 0.9), "T_end": (float, REQUIRED),
                   "initial": (str, "rest"), "forcing": (str, "none"), "signal": (str, None),
                   "ground_mass": (str, "scheme"), "probes": ("floatlist", None), "stride": (int, 1)},
    "output": {"path": (str, "out.csv")},
}


def _convert(section: str, key: str, kind, raw: str):
    name = f"{section}.{key}"
    try:
        if kind is str:
            return raw.strip()
        if kind is int:
            return int(raw)
        if kind is float:
            value = float(raw)
            if not math.isfinite(value):
                raise ValueError
            return value
        parts = [s.strip() for s in raw.split(",") if s.strip()]
        if kind == "intlist":
            return tuple(int(s) for s in parts)
        return tuple(float(s) for s in parts)
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {raw!r} as {getattr(kind, '__name__', kind)}") from None


def _read_sections(text: str, source: str) -> dict[str, dict]:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    parser.optionxform = str  # keys are case sensitive (EA, L, T_end)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: malformed config ({exc.__class__.__name__})") from None
    values: dict[str, dict] = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"[{section}]: unknown section")
        values[section] = {}
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"{section}.{key}: unknown key")
            values[section][key] = _convert(section, key, SCHEMA[section][key][0], raw)
    return values


def _get(values, section, key):
    default = SCHEMA[section][key][1]
    if key in values.get(section, {}):
        return values[section][key]
    if default is REQUIRED:
        raise ConfigError(f"{section}.{key}: missing required key")
    return default


def _positive(name, value):
    if value is not None and not value > 0:
        raise ConfigError(f"{name}: must be positive, got {value}")
    return value


def _choice(name, value, options):
    if value not in options:
        raise ConfigError(f"{name}: must be one of {', '.join(options)}, got {value!r}")
    return value


def _build_model(v) -> TrussModel:
    L = _positive("model.L", _get(v, "model", "L"))
    EA, E, A = (_get(v, "model", k) for k in ("EA", "E", "A"))
    mu, rho = _get(v, "model", "mu"), _get(v, "model", "rho")
    if EA is not None and (E is not None):
        raise ConfigError("model.EA: give either EA or E (with A), not both")
    if EA is None:
        if E is None:
            EA = 1.0
        else:
            if A is None:
                raise ConfigError("model.A: required together with model.E")
            EA = _positive("model.E", E) * _positive("model.A", A)
    if mu is not None and rho is not None:
        raise ConfigError("model.mu: give either mu or rho (with A), not both")
    if mu is None:
        if rho is None:
            mu = 1.0
        else:
            if A is None:
                raise ConfigError("model.A: required together with model.rho")
            mu = _positive("model.rho", rho) * A
    _positive("model.EA", EA)
    _positive("model.mu", mu)
    bc = BCS[_choice("model.bc", _get(v, "model", "bc"), tuple(BCS))]
    kind = _choice("model.load", _get(v, "model", "load"), ("none", "sine"))
    P0 = _get(v, "model", "P0")
    if kind == "none" and P0:
        raise ConfigError("model.P0: only meaningful with load = sine")
    end = _choice("model.point_end", _get(v, "model", "point_end"), ("left", "right"))
    point = _get(v, "model", "point_load")
    if point and bc[0 if end == "left" else 1] == "fixed":
        raise ConfigError("model.point_load: applied at a fixed end")
    load = LoadSpec(kind, P0, None, point, end)
    return TrussModel(L, EA, mu, bc, load)


def _build_mesh(v) -> MeshSpec:
    preset = _get(v, "mesh", "preset")
    preset = preset.upper() if preset.upper() in ("A", "B", "C") else preset
    _choice("mesh.preset", preset, PRESETS)
    p = _get(v, "mesh", "p")
    if not 1 <= p <= MAX_DEGREE:
        raise ConfigError(f"mesh.p: must be in [1, {MAX_DEGREE}], got {p}")
    bp = _get(v, "mesh", "breakpoints")
    weights = _get(v, "mesh", "weights")
    if bp is not None:
        if preset == "weighted":
            raise ConfigError("mesh.breakpoints: not allowed with preset = weighted")
        if len(bp) < 2 or any(b >= c for b, c in zip(bp, bp[1:])):
            raise ConfigError("mesh.breakpoints: need >= 2 strictly increasing values")
    if weights is not None:
        if preset != "weighted":
            raise ConfigError("mesh.weights: only allowed with preset = weighted")
        if len(weights) != len(WEIGHTED_WEIGHTS) or min(weights) <= 0:
            raise ConfigError(f"mesh.weights: need {len(WEIGHTED_WEIGHTS)} positive values")
    if preset == "weighted" and p < 2:
        raise ConfigError("mesh.p: the weighted patch needs p >= 2")
    spec = MeshSpec(preset, p, 1, bp, weights)
    m, elements = _get(v, "mesh", "m"), _get(v, "mesh", "elements")
    if m is not None and elements is not None:
        raise ConfigError("mesh.elements: give either m or elements, not both")
    if elements is not None:
        m = _elements_to_m(spec, elements, "mesh.elements")
    m = 1 if m is None else m
    if m < 1:
        raise ConfigError(f"mesh.m: must be >= 1, got {m}")
    return replace(spec, m=m)


def _elements_to_m(spec: MeshSpec, elements: int, name: str) -> int:
    if elements < 1 or elements % spec.initial_spans:
        raise ConfigError(f"{name}: must be a positive multiple of {spec.initial_spans} "
                          f"(initial spans of the mesh), got {elements}")
    return elements // spec.initial_spans


def _parse_q(raw, p: int, test_fn: str) -> int | None:
    if raw is None:
        if test_fn == "ad":
            raise ConfigError("scheme.q: required with test_fn = ad (integer, 'min' or 'max')")
        return None
    if test_fn != "ad":
        raise ConfigError(f"scheme.q: only allowed with test_fn = ad (conflicts with scheme.test_fn = {test_fn})")
    if raw == "min":
        return 1
    if raw == "max":
        return p
    try:
        q = int(raw)
    except ValueError:
        raise ConfigError(f"scheme.q: cannot parse {raw!r} as int, 'min' or 'max'") from None
    if not 0 <= q <= p:
        raise ConfigError(f"scheme.q: must satisfy 0 <= q <= p = {p}, got {q}")
    return q


def _build_scheme(v, p: int) -> Scheme:
    test_fn = _choice("scheme.test_fn", _get(v, "scheme", "test_fn"), TEST_FUNCTIONS)
    q = _parse_q(_get(v, "scheme", "q"), p, test_fn)
    lumping = _choice("scheme.lumping", _get(v, "scheme", "lumping"), LUMPINGS)
    bc_mode = _choice("scheme.bc_mode", _get(v, "scheme", "bc_mode"), BC_MODES)
    return Scheme(test_fn, q, lumping, bc_mode)


def _build_transient(v) -> TransientSpec:
    g = lambda k: _get(v, "integrator", k)  # noqa: E731
    spec = TransientSpec(
        method=_choice("integrator.method", g("method"), ("cdm", "rk4")),
        dt_rule=_choice("integrator.dt_rule", g("dt_rule"), ("fixed", "h_over_10", "adapted", "critical")),
        dt=_positive("integrator.dt", g("dt")),
        critical_fraction=_positive("integrator.critical_fraction", g("critical_fraction")),
        T_end=_positive("integrator.T_end", g("T_end")),
        initial=_choice("integrator.initial", g("initial"), ("rest", "standing_wave")),
        forcing=_choice("integrator.forcing", g("forcing"), ("none", "ground")),
        signal=g("signal"),
        ground_mass=_choice("integrator.ground_mass", g("ground_mass"), ("scheme", "consistent")),
        probes=g("probes"),
        stride=g("stride"),
    )
    if spec.dt_rule == "fixed" and spec.dt is None:
        raise ConfigError("integrator.dt: required with dt_rule = fixed")
    if spec.dt_rule != "fixed" and spec.dt is not None:
        raise ConfigError(f"integrator.dt: only allowed with dt_rule = fixed (got dt_rule = {spec.dt_rule})")
    if spec.critical_fraction >= 1.0 and spec.method == "cdm" and spec.dt_rule == "critical":
        raise ConfigError("integrator.critical_fraction: must be < 1 for CDM")
    if spec.forcing == "ground" and not spec.signal:
        raise ConfigError("integrator.signal: required with forcing = ground")
    if spec.forcing == "none" and spec.signal:
        raise ConfigError("integrator.signal: only allowed with forcing = ground")
    if spec.stride < 1:
        raise ConfigError(f"integrator.stride: must be >= 1, got {spec.stride}")
    return spec


def scenario_from_values(v: dict) -> Scenario:
    study = _choice("study.type", _get(v, "study", "type"), STUDIES)
    model = _build_model(v)
    mesh = _build_mesh(v)
    scheme = _build_scheme(v, mesh.p)
    transient = None
    if study == "transient":
        if "integrator" not in v:
            raise ConfigError("integrator.T_end: missing required key ([integrator] section needed)")
        transient = _build_transient(v)
    elif "integrator" in v:
        raise ConfigError(f"[integrator]: only allowed with study.type = transient (got {study})")
    levels = _get(v, "study", "levels")
    if not levels or any(b <= a for a, b in zip(levels, levels[1:])) or levels[0] < 1:
        raise ConfigError("study.levels: need strictly increasing refinement factors >= 1")
    if study in ("convergence", "modeshape") and len(levels) < 3:
        raise ConfigError("study.levels: need at least three refinement levels")
    mode = _get(v, "study", "mode")
    if mode < 1:
        raise ConfigError(f"study.mode: must be >= 1, got {mode}")
    quantity = _choice("study.quantity", _get(v, "study", "quantity"), ("displacement", "normal_force"))
    if study == "convergence" and model.load.kind != "sine":
        raise ConfigError("model.load: convergence study needs load = sine (closed-form reference)")
    if study == "convergence" and model.bc != ("fixed", "fixed"):
        raise ConfigError("model.bc: convergence study needs fixed-fixed supports")
    if study in ("spectrum", "modeshape") and model.bc not in (("fixed", "free"), ("fixed", "fixed")):
        raise ConfigError("model.bc: spectra need fixed-free or fixed-fixed supports")
    if study == "static" and "fixed" not in model.bc:
        raise ConfigError("model.bc: static study needs at least one fixed end")
    return Scenario(study, model, mesh, scheme, transient, tuple(levels), mode, quantity,
                    _get(v, "output", "path"))


def parse_config_text(text: str, source: str = "<config>") -> Scenario:
    return scenario_from_values(_read_sections(text, source))


def parse_config(path) -> Scenario:
    path = Path(path)
    return parse_config_text(path.read_text(encoding="utf-8"), str(path))


def scenario_to_text(s: Scenario) -> str:
    """Serialize a scenario back to config text (parse -> dump -> parse is stable)."""
    m = s.model
    bc = next(k for k, v in BCS.items() if v == tuple(m.bc))
    lines = ["[study]", f"type = {s.study}", "levels = " + ",".join(map(str, s.levels)),
             f"mode = {s.mode}", f"quantity = {s.quantity}", "",
             "[model]", f"L = {m.L!r}", f"EA = {m.EA!r}", f"mu = {m.mu!r}", f"bc = {bc}",
             f"load = {m.load.kind}"]
    if m.load.kind == "sine":
        lines.append(f"P0 = {m.load.P0!r}")
    if m.load.point_load:
        lines += [f"point_load = {m.load.point_load!r}", f"point_end = {m.load.point_end}"]
    me = s.mesh
    lines += ["", "[mesh]", f"preset = {me.preset}", f"p = {me.p}", f"m = {me.m}"]
    if me.breakpoints is not None:
        lines.append("breakpoints = " + ",".join(repr(b) for b in me.breakpoints))
    if me.weights is not None:
        lines.append("weights = " + ",".join(repr(w) for w in me.weights))
    sc = s.scheme
    lines += ["", "[scheme]", f"test_fn = {sc.test_fn}", f"lumping = {sc.lumping}", f"bc_mode = {sc.bc_mode}"]
    if sc.q is not None:
        lines.append(f"q = {sc.q}")
    if s.transient is not None:
        t = s.transient
        lines += ["", "[integrator]", f"method = {t.method}", f"dt_rule = {t.dt_rule}",
                  f"critical_fraction = {t.critical_fraction!r}", f"T_end = {t.T_end!r}",
                  f"initial = {t.initial}", f"forcing = {t.forcing}",
                  f"ground_mass = {t.ground_mass}", f"stride = {t.stride}"]
        if t.dt is not None:
            lines.append(f"dt = {t.dt!r}")
        if t.signal:
            lines.append(f"signal = {t.signal}")
        if t.probes is not None:
            lines.append("probes = " + ",".join(repr(x) for x in t.probes))
    lines += ["", "[output]", f"path = {s.output}", ""]
    return "\n".join(lines)


def apply_overrides(s: Scenario, p=None, q=None, scheme=None, elements=None, out=None,
                    dt=None, ground_mass=None, signal=None) -> Scenario:
    """Command-line overrides, re-validated like config values."""
    mesh, sch, tr = s.mesh, s.scheme, s.transient
    if p is not None:
        if not 1 <= p <= MAX_DEGREE:
            raise ConfigError(f"--p: must be in [1, {MAX_DEGREE}], got {p}")
        mesh = replace(mesh, p=p)
    test_fn, lumping, q_raw = sch.test_fn, sch.lumping, None if sch.q is None else str(sch.q)
    if p is not None and q is None and sch.q is not None and sch.q > p:
        q_raw = str(p)
    if scheme is not None:
        name, _, lump = scheme.partition("+")
        test_fn = _choice("--scheme", name, TEST_FUNCTIONS)
        lumping = {"": "none", "rowsum": "rowsum"}.get(lump)
        if lumping is None:
            raise ConfigError(f"--scheme: lumping suffix must be '+rowsum', got {scheme!r}")
        if test_fn != "ad":
            q_raw = None
        elif q_raw is None and q is None:
            raise ConfigError("--q: required when switching to AD test functions")
    if q is not None:
        q_raw = str(q)
    try:
        sch = Scheme(test_fn, _parse_q(q_raw, mesh.p, test_fn), lumping, sch.bc_mode)
    except ConfigError as exc:
        raise ConfigError(str(exc).replace("scheme.q", "--q")) from None
    if elements is not None:
        mesh = replace(mesh, m=_elements_to_m(mesh, elements, "--elements"))
    if any(x is not None for x in (dt, ground_mass, signal)) and tr is None:
        raise ConfigError("--dt/--ground-mass/--signal: only valid for transient studies")
    if dt is not None:
        tr = replace(tr, dt_rule="fixed", dt=_positive("--dt", dt))
    if ground_mass is not None:
        tr = replace(tr, ground_mass=_choice("--ground-mass", ground_mass, ("scheme", "consistent")))
    if signal is not None:
        tr = replace(tr, signal=signal, forcing="ground")
    return replace(s, mesh=mesh, scheme=sch, transient=tr, output=out or s.output)
