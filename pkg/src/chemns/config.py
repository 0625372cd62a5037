"""Run configuration: a flat, line-oriented text format.

Grammar::

    document := { line }
    line     := blank | comment | "[" section "]" | key "=" value
    comment  := "#" anything         (also allowed after a value)

Sections and their keys (defaults in parentheses, ``*`` = required)::

    [grid]         dim (3), n*  (int or one per axis), l (2 pi, scalar or per axis)
    [model]        alpha*, chi ("constant 1"), f ("linear 1"),
                   grad_phi (0, one component per axis), kappa_n (1), kappa_c (1)
    [initial]      preset*  gaussian-blob | taylor-green | random-bandlimited | snapshot
                   gaussian-blob:      n_amplitude (1), c_amplitude (1), width (1),
                                       center (box middle), c_center (= center)
                   taylor-green:       epsilon (1), n_level (1), c_level (1)
                   random-bandlimited: seed (0), k_max (4), amplitude (1)
                   snapshot:           path*
    [stepper]      dt_init (1e-3), t_end (1), cfl (0.4), scheme (if-rk2),
                   max_dt_halvings (10), eps_pos (1e-8), div_tol (1e-10)
    [diagnostics]  norms (comma list of field:L<p> or field:H<s>), cadence (1),
                   ps, bv (p1,q1,p2,q2; inf allowed), gradc_variant (false),
                   fits (comma list of selector@t_a:t_b)
    [picard]       t0 (0.1), n_time_nodes (33), max_iters (30), tol (1e-9), bisect (false)
    [output]       dir (out), snapshot_every (0 = final only), summary (true)

Function specs for ``chi`` and ``f`` are ``linear A``, ``saturating A``,
``constant A``, ``poly a0,a1,...`` or ``table x:y,...``.
"""

import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .diagnostics import CriterionSpec, DiagnosticsConfig, NormSpec, check_pairs
from .errors import ChemNSError, ConfigurationError
from .initial import PRESETS
from .io import read_snapshot
from .model import ModelParams, parse_response
from .spectral import SpectralGrid
from .timestep import StepperConfig

__all__ = [
    "GridSection",
    "ModelSection",
    "InitialSection",
    "DiagnosticsSection",
    "PicardSection",
    "OutputSection",
    "RunConfig",
    "parse_config",
    "format_config",
    "load_config",
]


# -- value codecs -------------------------------------------------------------


def _float(text):
    v = text.strip().lower()
    if v in ("inf", "+inf", "infinity"):
        return math.inf
    return float(v)


def _int(text):
    return int(text.strip())


def _bool(text):
    v = text.strip().lower()
    if v in ("true", "yes", "1", "on"):
        return True
    if v in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"expected true/false, got {text!r}")


def _floats(text):
    return tuple(_float(x) for x in text.split(","))


def _ints(text):
    return tuple(_int(x) for x in text.split(","))


def _str(text):
    return text.strip()


def _strs(text):
    return tuple(x.strip() for x in text.split(",") if x.strip())


def _fmt_float(x):
    return "inf" if math.isinf(x) else repr(float(x))


def _fmt_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return _fmt_float(v)
    if isinstance(v, tuple):
        return ", ".join(_fmt_value(x) for x in v)
    return str(v)


# -- sections -----------------------------------------------------------------


@dataclass(frozen=True)
class GridSection:
    dim: int = 3
    n: tuple = ()
    l: tuple = ()

    def build(self):
        return SpectralGrid(self.n, self.l)


@dataclass(frozen=True)
class ModelSection:
    alpha: float = None
    chi: str = "constant 1.0"
    f: str = "linear 1.0"
    grad_phi: tuple = ()
    kappa_n: float = 1.0
    kappa_c: float = 1.0

    def build(self, grid):
        grad_phi = np.stack([np.full(grid.shape, g) for g in self.grad_phi])
        return ModelParams(
            self.alpha,
            parse_response(self.chi),
            parse_response(self.f),
            grad_phi,
            self.kappa_n,
            self.kappa_c,
        )


_INITIAL_KEYS = {
    "gaussian-blob": {
        "n_amplitude": _float,
        "c_amplitude": _float,
        "width": _float,
        "center": _floats,
        "c_center": _floats,
    },
    "taylor-green": {"epsilon": _float, "n_level": _float, "c_level": _float},
    "random-bandlimited": {"seed": _int, "k_max": _int, "amplitude": _float},
    "snapshot": {"path": _str},
}


@dataclass(frozen=True)
class InitialSection:
    preset: str = None
    params: tuple = ()  # sorted (key, value) pairs

    def build(self, grid, base_dir=None):
        kw = dict(self.params)
        if self.preset == "snapshot":
            path = Path(kw["path"])
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            state, _ = read_snapshot(path)
            if state.grid != grid:
                raise ConfigurationError(f"snapshot grid {state.grid} does not match [grid]")
            return state
        return PRESETS[self.preset](grid, **kw)


@dataclass(frozen=True)
class DiagnosticsSection:
    norms: tuple = ()
    cadence: int = 1
    ps: tuple = None
    bv: tuple = None
    gradc_variant: bool = False
    fits: tuple = ()

    def build(self, alpha):
        def crit(kind, pairs):
            if pairs is None:
                return None
            return CriterionSpec(kind, ((pairs[0], pairs[1]), (pairs[2], pairs[3])), alpha)

        return DiagnosticsConfig(
            norms=self.norms,
            ps=crit("ps", self.ps),
            bv=crit("bv", self.bv),
            cadence=self.cadence,
            gradc_variant=self.gradc_variant,
        )

    def parsed_fits(self):
        """``[(selector, (t_a, t_b)), ...]``."""
        out = []
        for item in self.fits:
            sel, win = item.split("@")
            a, b = win.split(":")
            out.append((NormSpec.parse(sel).name, (_float(a), _float(b))))
        return out


@dataclass(frozen=True)
class PicardSection:
    t0: float = 0.1
    n_time_nodes: int = 33
    max_iters: int = 30
    tol: float = 1e-9
    bisect: bool = False


@dataclass(frozen=True)
class OutputSection:
    dir: str = "out"
    snapshot_every: int = 0
    summary: bool = True


@dataclass(frozen=True)
class RunConfig:
    grid: GridSection
    model: ModelSection
    initial: InitialSection
    stepper: StepperConfig
    diagnostics: DiagnosticsSection = field(default_factory=DiagnosticsSection)
    picard: PicardSection = field(default_factory=PicardSection)
    output: OutputSection = field(default_factory=OutputSection)


_SCHEMA = {
    "grid": {"dim": _int, "n": _ints, "l": _floats},
    "model": {
        "alpha": _float,
        "chi": _str,
        "f": _str,
        "grad_phi": _floats,
        "kappa_n": _float,
        "kappa_c": _float,
    },
    "initial": {"preset": _str, **{k: v for keys in _INITIAL_KEYS.values() for k, v in keys.items()}},
    "stepper": {
        "dt_init": _float,
        "t_end": _float,
        "cfl": _float,
        "scheme": _str,
        "max_dt_halvings": _int,
        "eps_pos": _float,
        "div_tol": _float,
    },
    "diagnostics": {
        "norms": _strs,
        "cadence": _int,
        "ps": _floats,
        "bv": _floats,
        "gradc_variant": _bool,
        "fits": _strs,
    },
    "picard": {
        "t0": _float,
        "n_time_nodes": _int,
        "max_iters": _int,
        "tol": _float,
        "bisect": _bool,
    },
    "output": {"dir": _str, "snapshot_every": _int, "summary": _bool},
}

_STEPPER_DEFAULTS = {"dt_init": 1e-3, "t_end": 1.0}


# -- parsing ------------------------------------------------------------------


def _tokenize(text):
    """``{section: {key: (raw_value, line)}}``; syntax errors carry line numbers."""
    out = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigurationError(f"malformed section header {raw.strip()!r}", lineno)
            section = line[1:-1].strip().lower()
            if section not in _SCHEMA:
                raise ConfigurationError(f"unknown section [{section}]", lineno)
            if section in out:
                raise ConfigurationError(f"duplicate section [{section}]", lineno)
            out[section] = {}
            continue
        if "=" not in line:
            raise ConfigurationError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        if section is None:
            raise ConfigurationError("key outside of any section", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lower()
        if key not in _SCHEMA[section]:
            raise ConfigurationError(f"unknown key {key!r} in [{section}]", lineno)
        if key in out[section]:
            raise ConfigurationError(f"duplicate key {key!r} in [{section}]", lineno)
        out[section][key] = (value, lineno)
    return out


def _decode(tokens):
    """Apply the value codecs; returns ``({section: {key: value}}, {(section, key): line})``."""
    values, lines = {}, {}
    for section, entries in tokens.items():
        values[section] = {}
        for key, (raw, lineno) in entries.items():
            lines[(section, key)] = lineno
            try:
                values[section][key] = _SCHEMA[section][key](raw)
            except ValueError as exc:
                raise ConfigurationError(f"bad value for {section}.{key}: {exc}", lineno) from None
    return values, lines


def parse_config(text):
    """Parse and fully validate a configuration document.

    Raises :class:`ConfigurationError` on the first problem, with the line
    number of the offending key when there is one.
    """
    values, lines = _decode(_tokenize(text))

    def sec(name):
        return values.get(name, {})

    def require(section, key):
        if key not in sec(section):
            raise ConfigurationError(f"missing required key [{section}] {key}")
        return sec(section)[key]

    def fail(section, key, msg):
        raise ConfigurationError(msg, lines.get((section, key)))

    # grid
    g = sec("grid")
    dim = g.get("dim", 3)
    if dim not in (2, 3):
        fail("grid", "dim", f"dim must be 2 or 3, got {dim}")
    n = require("grid", "n")
    n = n * dim if len(n) == 1 else n
    if len(n) != dim:
        fail("grid", "n", f"n needs 1 or {dim} entries, got {len(n)}")
    for ni in n:
        if ni < 8 or ni % 2:
            fail("grid", "n", f"grid sizes must be even and >= 8, got {ni}")
    length = g.get("l", (2 * math.pi,))
    length = length * dim if len(length) == 1 else length
    if len(length) != dim:
        fail("grid", "l", f"l needs 1 or {dim} entries, got {len(length)}")
    if not all(L > 0 and math.isfinite(L) for L in length):
        fail("grid", "l", "box lengths must be positive and finite")
    grid = GridSection(dim, tuple(n), tuple(float(L) for L in length))

    # model
    m = sec("model")
    alpha = require("model", "alpha")
    if not alpha > 0.5:
        fail(
            "model",
            "alpha",
            f"alpha = {alpha} is out of range: local well-posedness needs alpha > 1/2",
        )
    for key in ("chi", "f"):
        if key in m:
            try:
                resp = parse_response(m[key])
            except ChemNSError as exc:
                fail("model", key, str(exc))
            m[key] = resp.spec
    f_spec = m.get("f", ModelSection.f)
    try:
        f0 = float(parse_response(f_spec)(np.array([0.0]))[0])
    except ChemNSError as exc:
        fail("model", "f", f"cannot evaluate f(0): {exc}")
    if f0 != 0.0:
        fail(
            "model",
            "f",
            f"f(0) = {f0!r}: the consumption rate must vanish at zero concentration (f(0) = 0)",
        )
    grad_phi = m.get("grad_phi", (0.0,) * dim)
    grad_phi = grad_phi * dim if len(grad_phi) == 1 else grad_phi
    if len(grad_phi) != dim:
        fail("model", "grad_phi", f"grad_phi needs 1 or {dim} components")
    if not all(math.isfinite(x) for x in grad_phi):
        fail("model", "grad_phi", "grad_phi must be finite")
    for key in ("kappa_n", "kappa_c"):
        if key in m and not m[key] > 0:
            fail("model", key, f"{key} must be > 0")
    model = ModelSection(
        alpha,
        m.get("chi", ModelSection.chi),
        f_spec,
        tuple(float(x) for x in grad_phi),
        m.get("kappa_n", 1.0),
        m.get("kappa_c", 1.0),
    )

    # initial data
    ini = dict(sec("initial"))
    preset = require("initial", "preset")
    if preset not in _INITIAL_KEYS:
        fail("initial", "preset", f"unknown preset {preset!r}; choose from {', '.join(_INITIAL_KEYS)}")
    ini.pop("preset")
    for key in ini:
        if key not in _INITIAL_KEYS[preset]:
            fail("initial", key, f"key {key!r} does not apply to preset {preset!r}")
    if preset == "snapshot" and "path" not in ini:
        raise ConfigurationError("missing required key [initial] path for preset 'snapshot'")
    for key in ("center", "c_center"):
        if key in ini and len(ini[key]) != dim:
            fail("initial", key, f"{key} needs {dim} coordinates")
    for key in ("n_amplitude", "c_amplitude", "amplitude", "n_level", "c_level"):
        if key in ini and not ini[key] >= 0:
            fail("initial", key, f"{key} must be >= 0")
    if "width" in ini and not ini["width"] > 0:
        fail("initial", "width", "width must be > 0")
    if "k_max" in ini and ini["k_max"] < 1:
        fail("initial", "k_max", "k_max must be >= 1")
    initial = InitialSection(preset, tuple(sorted(ini.items())))

    # stepper
    st = {**_STEPPER_DEFAULTS, **sec("stepper")}
    try:
        stepper = StepperConfig(**st)
    except ConfigurationError as exc:
        bad = next((k for k in st if k in str(exc)), None)
        raise ConfigurationError(str(exc), lines.get(("stepper", bad))) from None

    # diagnostics
    d = dict(sec("diagnostics"))
    norms = d.get("norms", ())
    canon = []
    for item in norms:
        try:
            canon.append(NormSpec.parse(item).name)
        except ConfigurationError as exc:
            fail("diagnostics", "norms", str(exc))
    d["norms"] = tuple(canon)
    if d.get("cadence", 1) < 1:
        fail("diagnostics", "cadence", "cadence must be >= 1")
    for kind in ("ps", "bv"):
        if kind in d:
            pairs = d[kind]
            if len(pairs) != 4:
                fail("diagnostics", kind, f"{kind} needs p1,q1,p2,q2")
            spec = CriterionSpec(kind, ((pairs[0], pairs[1]), (pairs[2], pairs[3])), alpha)
            try:
                verdicts = check_pairs(spec)
            except ChemNSError as exc:
                fail("diagnostics", kind, str(exc))
            bad = [v.violated for v in verdicts if not v.admissible]
            if bad:
                fail("diagnostics", kind, f"inadmissible {kind} pairs: {'; '.join(bad)}")
    diagnostics = DiagnosticsSection(**d)
    try:
        diagnostics.parsed_fits()
    except (ValueError, ChemNSError) as exc:
        fail("diagnostics", "fits", f"bad fit spec (expected selector@t_a:t_b): {exc}")

    # picard
    p = sec("picard")
    picard = PicardSection(**p)
    if not picard.t0 > 0:
        fail("picard", "t0", "t0 must be > 0")
    if picard.n_time_nodes < 16:
        fail("picard", "n_time_nodes", "n_time_nodes must be >= 16")
    if picard.max_iters < 1:
        fail("picard", "max_iters", "max_iters must be >= 1")
    if not picard.tol > 0:
        fail("picard", "tol", "tol must be > 0")

    output = OutputSection(**sec("output"))
    if output.snapshot_every < 0:
        fail("output", "snapshot_every", "snapshot_every must be >= 0")
    return RunConfig(grid, model, initial, stepper, diagnostics, picard, output)


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def format_config(cfg):
    """Canonical text form; ``parse_config(format_config(cfg)) == cfg``."""
    lines = []

    def section(name, items):
        lines.append(f"[{name}]")
        for key, value in items:
            if value is None or value == ():
                continue
            lines.append(f"{key} = {_fmt_value(value)}")
        lines.append("")

    def items(obj):
        return [(f.name, getattr(obj, f.name)) for f in fields(obj)]

    section("grid", items(cfg.grid))
    section("model", items(cfg.model))
    section("initial", [("preset", cfg.initial.preset), *cfg.initial.params])
    section("stepper", [kv for kv in items(cfg.stepper) if kv[0] in _SCHEMA["stepper"]])
    section("diagnostics", items(cfg.diagnostics))
    section("picard", items(cfg.picard))
    section("output", items(cfg.output))
    return "\n".join(lines)
