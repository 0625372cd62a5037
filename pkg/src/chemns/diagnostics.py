"""Monitored quantities: blow-up criterion accumulators, energies, the
bootstrap quantity, energy/maximum-principle monitors and decay fits.

Nothing here asserts a theorem.  Constants that are only known to exist are
never hardcoded; the monitors check unconditional identities and
monotonicities and report everything else as measured numbers.
"""

from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError, DomainError, TheoremOutOfRange
from .spectral import hs_norm, lp_norm

__all__ = [
    "PRODI_SERRIN",
    "BEIRAO_DA_VEIGA",
    "CriterionSpec",
    "PairVerdict",
    "check_pairs",
    "NormSpec",
    "DiagnosticsConfig",
    "DiagnosticsRecord",
    "initial_record",
    "accumulate",
    "bootstrap_exponent",
    "bootstrap_quantity",
    "EnergyMonitor",
    "MonitorVerdict",
    "DecayFit",
    "fit_decay",
    "reference_exponent",
]

PRODI_SERRIN = "ProdiSerrin"
BEIRAO_DA_VEIGA = "BeiraoDaVeiga"
_KIND_ALIASES = {
    "ps": PRODI_SERRIN,
    "prodiserrin": PRODI_SERRIN,
    "bv": BEIRAO_DA_VEIGA,
    "beiraodaveiga": BEIRAO_DA_VEIGA,
}


def _kind(kind):
    try:
        return _KIND_ALIASES[kind.replace("-", "").replace("_", "").lower()]
    except KeyError:
        raise ConfigurationError(f"unknown criterion kind {kind!r}") from None


# -- criterion admissibility ------------------------------------------------


@dataclass(frozen=True)
class CriterionSpec:
    """Exponent pairs ``((p1, q1), (p2, q2))`` of a blow-up criterion.

    For ProdiSerrin the pairs weight ``||n||_{q1}^{p1}`` and ``||u||_{q2}^{p2}``;
    for BeiraoDaVeiga ``||grad c||_{q1}^{p1}`` and ``||grad u||_{q2}^{p2}``.
    """

    kind: str
    pairs: tuple
    alpha: float

    def __post_init__(self):
        object.__setattr__(self, "kind", _kind(self.kind))
        pairs = tuple(tuple(float(x) for x in pq) for pq in self.pairs)
        if len(pairs) != 2 or any(len(pq) != 2 for pq in pairs):
            raise ConfigurationError("a criterion needs exactly two (p, q) pairs")
        object.__setattr__(self, "pairs", pairs)


@dataclass(frozen=True)
class PairVerdict:
    index: int
    p: float
    q: float
    admissible: bool
    violated: str = None


@lru_cache(maxsize=4096)
def _exact(x):
    return None if np.isinf(x) else Fraction(x)


@lru_cache(maxsize=4096)
def _inv(x):
    x = _exact(x)
    return Fraction(0) if x is None else 1 / x


def _fmt(fr):
    return str(fr.numerator) if fr.denominator == 1 else f"{float(fr):.6g}"


@lru_cache(maxsize=64)
def _second_pair_bounds(kind, alpha):
    a = Fraction(alpha)
    if kind == PRODI_SERRIN:
        qmin = max(Fraction(3, 2), 3 / (2 * a - 1))
        return qmin, f"q2 > max{{3/2, 3/(2alpha-1)}} = {_fmt(qmin)}", 2 * a - 1, "2alpha/p2 + 3/q2 <= 2alpha - 1"
    qmin = max(Fraction(1), 3 / (2 * a))
    return qmin, f"q2 > max{{1, 3/(2alpha)}} = {_fmt(qmin)}", 2 * a, "2alpha/p2 + 3/q2 <= 2alpha"


def check_pairs(spec):
    """Classify each pair as admissible or name the first violated constraint.

    The range constraint on ``q`` is tested before the scaling inequality.
    Arithmetic is exact on the binary values of the inputs, so boundary
    cases such as ``2/p + 3/q == 1`` are decided without rounding.
    """
    a = Fraction(spec.alpha)
    if spec.kind == PRODI_SERRIN and not a > Fraction(3, 4):
        raise TheoremOutOfRange(f"ProdiSerrin criterion needs alpha > 3/4, got {spec.alpha}")
    if spec.kind == BEIRAO_DA_VEIGA and not a > Fraction(1, 2):
        raise TheoremOutOfRange(f"BeiraoDaVeiga criterion needs alpha > 1/2, got {spec.alpha}")
    for p, q in spec.pairs:
        if not (p > 0 and q > 0):
            raise DomainError(f"exponents must lie in (0, inf], got ({p}, {q})")

    verdicts = []
    (p1, q1), (p2, q2) = spec.pairs

    violated = None
    if not (_exact(q1) is None or _exact(q1) > 3):
        violated = "q1 > 3"
    elif not 2 * _inv(p1) + 3 * _inv(q1) <= 1:
        violated = "2/p1 + 3/q1 <= 1"
    verdicts.append(PairVerdict(1, p1, q1, violated is None, violated))

    qmin, range_name, bound, bound_name = _second_pair_bounds(spec.kind, spec.alpha)
    violated = None
    if not (_exact(q2) is None or _exact(q2) > qmin):
        violated = range_name
    elif not 2 * a * _inv(p2) + 3 * _inv(q2) <= bound:
        violated = bound_name
    verdicts.append(PairVerdict(2, p2, q2, violated is None, violated))
    return verdicts


# -- norm table ---------------------------------------------------------------

_FIELDS = ("n", "c", "u", "grad_n", "grad_c", "grad_u", "lambda_alpha_u")


@dataclass(frozen=True)
class NormSpec:
    """One column of the norm table, written ``field:L<p>`` or ``field:H<s>``.

    ``L`` is the quadrature Lebesgue norm (``Linf`` is the grid maximum),
    ``H`` the homogeneous Sobolev norm.
    """

    field: str
    kind: str
    order: float

    @classmethod
    def parse(cls, text):
        try:
            fld, norm = text.strip().split(":")
            kind, order = norm[0].upper(), norm[1:]
            order = np.inf if order.lower() == "inf" else float(order)
        except (ValueError, IndexError):
            raise ConfigurationError(f"bad norm spec {text!r}, expected e.g. 'c:L2'") from None
        if fld not in _FIELDS or kind not in ("L", "H"):
            raise ConfigurationError(f"bad norm spec {text!r}")
        if kind == "L" and not order >= 1:
            raise ConfigurationError(f"bad norm spec {text!r}: p must be >= 1")
        return cls(fld, kind, order)

    @property
    def name(self):
        if np.isinf(self.order):
            o = "inf"
        elif float(self.order).is_integer():
            o = str(int(self.order))
        else:
            o = repr(float(self.order))
        return f"{self.field}:{self.kind}{o}"


class _Fields:
    """Lazy per-state cache of derived fields."""

    def __init__(self, state, params):
        self.state = state
        self.params = params
        self._cache = {}

    def __getitem__(self, name):
        if name not in self._cache:
            self._cache[name] = self._compute(name)
        return self._cache[name]

    def _compute(self, name):
        s, g = self.state, self.state.grid
        if name in ("n", "c", "u"):
            return getattr(s, name)
        if name == "grad_n":
            return _grad(g, s.n)
        if name == "grad_c":
            return _grad(g, s.c)
        if name == "grad_u":
            return np.stack([_grad(g, ui) for ui in s.u])
        if name == "lambda_alpha_u":
            mult = g.frac_multiplier(self.params.alpha / 2)
            return np.stack([g.inverse(mult * g.forward(ui)) for ui in s.u])
        raise KeyError(name)

    def norm(self, spec):
        f = self[spec.field]
        if spec.kind == "L":
            return lp_norm(self.state.grid, f, spec.order)
        return hs_norm(self.state.grid, f, spec.order)


def _grad(grid, f):
    fh = grid.forward(f)
    return np.stack([grid.inverse(1j * kd * fh) for kd in grid.k_deriv])


# -- records and accumulators ---------------------------------------------------


@dataclass(frozen=True)
class DiagnosticsConfig:
    """What to record.

    ``gradc_variant`` adds an accumulator with ``||n||_{q1}^{p1}`` replaced by
    ``||grad c||_{q1}^{p1}`` in the ProdiSerrin sum; it is reported without
    any claim about the range of ``alpha`` where that variant is meaningful.
    """

    norms: tuple = ()
    ps: CriterionSpec = None
    bv: CriterionSpec = None
    cadence: int = 1
    gradc_variant: bool = False

    def __post_init__(self):
        norms = tuple(NormSpec.parse(n) if isinstance(n, str) else n for n in self.norms)
        object.__setattr__(self, "norms", norms)
        if self.cadence < 1:
            raise ConfigurationError("diagnostics cadence must be >= 1")


ENERGY_COLUMNS = ("n_L2sq", "c_L2sq", "u_L2sq", "grad_c_L2sq", "lambda_alpha_u_L2sq")
EXTREMA_COLUMNS = ("n_min", "n_max", "c_min", "c_max", "mass_n", "mass_c")


@dataclass(frozen=True)
class DiagnosticsRecord:
    """Diagnostics of one accepted state.

    ``integrands`` holds the instantaneous value of each accumulator term and
    ``accum`` its running time integral (trapezoid rule), or its running
    supremum for keys listed in ``sup_keys`` (terms with ``p = inf``).
    """

    t: float
    norms: dict
    energies: dict
    extrema: dict
    integrands: dict
    accum: dict
    sup_keys: frozenset
    s_fchi: float
    bootstrap: float = None

    def _sum(self, prefix, sup):
        return sum(
            v for k, v in self.accum.items() if k.startswith(prefix) and ((k in self.sup_keys) == sup)
        )

    @property
    def B1(self):
        return self._sum("B1.", False)

    @property
    def B2(self):
        return self._sum("B2.", False)

    @property
    def B1_sup(self):
        return self._sum("B1.", True)

    @property
    def B2_sup(self):
        return self._sum("B2.", True)

    @property
    def bootstrap_integral(self):
        return self.accum.get("boot", 0.0)

    def columns(self):
        cols = ["t", *self.norms]
        for b in ("B1", "B2"):
            if any(k.startswith(b + ".") and k not in self.sup_keys for k in self.accum):
                cols.append(b)
            if any(k.startswith(b + ".") and k in self.sup_keys for k in self.accum):
                cols.append(b + "_sup")
        if "B1g.gradc" in self.accum:
            cols.append("B1_gradc")
        if self.bootstrap is not None:
            cols.append("bootstrap")
        cols += list(ENERGY_COLUMNS) + list(EXTREMA_COLUMNS)
        return cols

    def row(self):
        out = {"t": self.t, **self.norms}
        for b in ("B1", "B2"):
            out[b] = getattr(self, b)
            out[b + "_sup"] = getattr(self, b + "_sup")
        if "B1g.gradc" in self.accum:
            out["B1_gradc"] = self.accum["B1g.gradc"] + self.accum.get("B1.u", 0.0)
        out["bootstrap"] = self.bootstrap
        out.update(self.energies)
        out.update(self.extrema)
        return {c: out[c] for c in self.columns()}


def bootstrap_exponent(alpha):
    """Time exponent ``4 alpha / (4 alpha - 3)`` of ``||grad u||_2``; needs alpha > 3/4."""
    if not alpha > 0.75:
        raise TheoremOutOfRange(f"bootstrap quantity needs alpha > 3/4, got {alpha}")
    return 4 * alpha / (4 * alpha - 3)


def _integrands(fields, config, params):
    out, sup = {}, set()

    def term(key, name, p, q):
        val = lp_norm(fields.state.grid, fields[name], q)
        if np.isinf(p):
            out[key] = val
            sup.add(key)
        else:
            out[key] = val**p

    if config.ps is not None:
        (p1, q1), (p2, q2) = config.ps.pairs
        term("B1.n", "n", p1, q1)
        term("B1.u", "u", p2, q2)
        if config.gradc_variant:
            term("B1g.gradc", "grad_c", p1, q1)
    if config.bv is not None:
        (p1, q1), (p2, q2) = config.bv.pairs
        term("B2.grad_c", "grad_c", p1, q1)
        term("B2.grad_u", "grad_u", p2, q2)
    if params.alpha > 0.75:
        grad_u_l2 = lp_norm(fields.state.grid, fields["grad_u"], 2)
        out["boot"] = grad_u_l2 ** bootstrap_exponent(params.alpha)
    return out, frozenset(sup)


def _snapshot(state, params, config, integrands, accum, sup, s_fchi):
    g = state.grid
    fields = _Fields(state, params)
    norms = {spec.name: fields.norm(spec) for spec in config.norms}
    energies = {
        "n_L2sq": lp_norm(g, state.n, 2) ** 2,
        "c_L2sq": lp_norm(g, state.c, 2) ** 2,
        "u_L2sq": lp_norm(g, state.u, 2) ** 2,
        "grad_c_L2sq": lp_norm(g, fields["grad_c"], 2) ** 2,
        "lambda_alpha_u_L2sq": hs_norm(g, state.u, params.alpha) ** 2,
    }
    extrema = {
        "n_min": float(state.n.min()),
        "n_max": float(state.n.max()),
        "c_min": float(state.c.min()),
        "c_max": float(state.c.max()),
        "mass_n": float(state.n.sum() * g.cell_volume),
        "mass_c": float(state.c.sum() * g.cell_volume),
    }
    rec = DiagnosticsRecord(
        t=float(state.t),
        norms=norms,
        energies=energies,
        extrema=extrema,
        integrands=integrands,
        accum=accum,
        sup_keys=sup,
        s_fchi=s_fchi,
    )
    if params.alpha > 0.75:
        rec = _with_bootstrap(rec, state, params, fields)
    return rec


def _with_bootstrap(rec, state, params, fields):
    return replace(rec, bootstrap=bootstrap_quantity(state, params, rec, fields))


def initial_record(state, config, params, c_max=None):
    """Record at the start of a run; all integrals vanish.

    ``s_fchi`` is sampled on ``[0, c_max]`` with ``c_max`` defaulting to
    ``max c`` of this state.
    """
    c_max = float(np.max(state.c)) if c_max is None else c_max
    s_fchi = params.s_fchi(max(c_max, 0.0))
    fields = _Fields(state, params)
    integ, sup = _integrands(fields, config, params)
    accum = {k: (v if k in sup else 0.0) for k, v in integ.items()}
    return _snapshot(state, params, config, integ, accum, sup, s_fchi)


def accumulate(prev, state, config, params):
    """Advance every accumulator from ``prev.t`` to ``state.t``.

    Integrals use the trapezoid rule between consecutive records (exact for
    piecewise-linear integrands); ``p = inf`` terms keep a running maximum.
    """
    dt = float(state.t) - prev.t
    if dt < 0:
        raise DomainError("records must be accumulated forward in time")
    fields = _Fields(state, params)
    integ, sup = _integrands(fields, config, params)
    accum = {}
    for k, v in integ.items():
        if k in sup:
            accum[k] = max(prev.accum.get(k, v), v)
        else:
            accum[k] = prev.accum.get(k, 0.0) + 0.5 * dt * (prev.integrands.get(k, v) + v)
    return _snapshot(state, params, config, integ, accum, sup, prev.s_fchi)


def bootstrap_quantity(state, params, record, fields=None):
    """``S^2 ||grad c||_3^2 + ||u||_3^2 + int_0^t ||grad u||_2^{4a/(4a-3)}``.

    ``S`` and the time integral are taken from ``record``.
    """
    bootstrap_exponent(params.alpha)
    fields = fields or _Fields(state, params)
    g = state.grid
    gc = lp_norm(g, fields["grad_c"], 3)
    u3 = lp_norm(g, state.u, 3)
    return record.s_fchi**2 * gc**2 + u3**2 + record.bootstrap_integral


# -- energy / maximum principle monitors ----------------------------------------


@dataclass(frozen=True)
class MonitorVerdict:
    name: str
    passed: bool
    magnitude: float
    detail: str = ""
    advisory: bool = False


class EnergyMonitor:
    """Discrete versions of the Lyapunov statements, checked between
    consecutive states.

    * ``ccL2``   - ``||c||_2`` nonincreasing
    * ``cinfty`` - ``||c||_inf`` nonincreasing and ``c >= 0``
    * ``ncL1``   - ``int n`` constant
    * ``n_pos``  - ``n >= 0``
    * ``nL2``    - advisory: the unconditional budget
      ``d/dt ||n||^2 <= -2||grad n||^2 + 2 S ||grad c||_3 ||n||_6 ||grad n||_2``;
      its magnitude is the proxy ``S ||grad c||_3``.

    Slacks are relative: ``rel_slack`` per check for the monotone norms,
    ``mass_tol`` for the mass and ``eps_pos`` (times the initial maximum)
    for positivity.
    """

    def __init__(self, state0, params, rel_slack=1e-10, mass_tol=1e-11, eps_pos=1e-8):
        g = state0.grid
        self.params = params
        self.rel_slack = rel_slack
        self.mass_tol = mass_tol
        self.eps_pos = eps_pos
        self.mass0 = float(state0.n.sum() * g.cell_volume)
        self.n_scale = float(np.abs(state0.n).max())
        self.c_scale = float(np.abs(state0.c).max())
        self.s_fchi = params.s_fchi(max(float(state0.c.max()), 0.0))
        self._prev = self._measure(state0)

    def _measure(self, state):
        g = state.grid
        gn = _grad(g, state.n)
        gc = _grad(g, state.c)
        gn2 = lp_norm(g, gn, 2)
        budget = -2 * gn2**2 + 2 * self.s_fchi * lp_norm(g, gc, 3) * lp_norm(g, state.n, 6) * gn2
        return {
            "t": float(state.t),
            "c2": lp_norm(g, state.c, 2),
            "cinf": float(np.abs(state.c).max()),
            "n2sq": lp_norm(g, state.n, 2) ** 2,
            "budget": budget,
            "proxy": self.s_fchi * lp_norm(g, gc, 3),
        }

    def check(self, state):
        cur = self._measure(state)
        prev, self._prev = self._prev, cur
        g = state.grid
        slack = self.rel_slack
        out = []

        grow = cur["c2"] - prev["c2"]
        out.append(
            MonitorVerdict(
                "ccL2",
                grow <= slack * max(prev["c2"], 1e-300),
                grow,
                f"||c||_2 {prev['c2']:.17g} -> {cur['c2']:.17g}",
            )
        )

        cmin = float(state.c.min())
        grow = cur["cinf"] - prev["cinf"]
        floor = -self.eps_pos * self.c_scale
        ok_mono = grow <= slack * max(prev["cinf"], 1e-300)
        ok_pos = cmin >= floor
        detail = f"min c = {cmin:.6g}, ||c||_inf {prev['cinf']:.17g} -> {cur['cinf']:.17g}"
        out.append(MonitorVerdict("cinfty", ok_mono and ok_pos, cmin if not ok_pos else grow, detail))

        mass = float(state.n.sum() * g.cell_volume)
        drift = abs(mass - self.mass0)
        out.append(
            MonitorVerdict(
                "ncL1",
                drift <= self.mass_tol * max(abs(self.mass0), 1e-300),
                drift / max(abs(self.mass0), 1e-300),
                f"int n = {mass:.17g} (initial {self.mass0:.17g})",
            )
        )

        nmin = float(state.n.min())
        out.append(
            MonitorVerdict("n_pos", nmin >= -self.eps_pos * self.n_scale, nmin, f"min n = {nmin:.6g}")
        )

        dt = cur["t"] - prev["t"]
        if dt > 0:
            lhs = (cur["n2sq"] - prev["n2sq"]) / dt
            rhs = 0.5 * (cur["budget"] + prev["budget"])
            tol = 1e-6 * (abs(lhs) + abs(rhs)) + 1e-14
            ok = lhs <= rhs + tol
        else:
            ok = True
        out.append(
            MonitorVerdict("nL2", ok, cur["proxy"], "S ||grad c||_3 proxy", advisory=True)
        )
        return out


# -- decay fits -------------------------------------------------------------------


def reference_exponent(selector, alpha=1.0, dim=3):
    """Whole-space decay exponent for a norm selector, or None.

    ``n``/``c`` in ``L^p`` (1 < p < inf): ``-(d/2)(1 - 1/p)``;
    ``grad_n``/``grad_c`` in ``L^2``: ``-(d/4 + 1/2)``;
    ``u`` in ``L^p`` (p > 2): ``-(d/(2 alpha))(1/2 - 1/p)``;
    ``lambda_alpha_u`` in ``L^2``: ``-1/2``.  At d = 3 these are the
    rates for small-energy global solutions.
    """
    spec = NormSpec.parse(selector) if isinstance(selector, str) else selector
    if spec.kind != "L":
        return None
    p = spec.order
    inv_p = 0.0 if np.isinf(p) else 1.0 / p
    if spec.field in ("n", "c") and 1 < p < np.inf:
        return -(dim / 2) * (1 - inv_p)
    if spec.field in ("grad_n", "grad_c") and p == 2:
        return -(dim / 4 + 0.5)
    if spec.field == "u" and 2 < p < np.inf:
        return -(dim / (2 * alpha)) * (0.5 - inv_p)
    if spec.field == "lambda_alpha_u" and p == 2:
        return -0.5
    return None


@dataclass(frozen=True)
class DecayFit:
    selector: str
    window: tuple
    exponent: float
    residual: float
    reference: float = None
    intercept: float = 0.0
    samples: int = 0

    @property
    def relative_error(self):
        if self.reference in (None, 0):
            return None
        return abs(self.exponent - self.reference) / abs(self.reference)


def fit_decay(t, values, window, selector=None, alpha=1.0, dim=3, min_samples=8):
    """Least-squares slope of ``log(value)`` against ``log(1 + t)`` on ``window``.

    The residual is the RMS misfit in log space.
    """
    t = np.asarray(t, dtype=float)
    v = np.asarray(values, dtype=float)
    ta, tb = (float(w) for w in window)
    if not ta < tb:
        raise DomainError(f"decay window needs t_a < t_b, got {window}")
    sel = (t >= ta) & (t <= tb)
    if sel.sum() < min_samples:
        raise DomainError(f"decay fit needs >= {min_samples} samples in {window}, got {int(sel.sum())}")
    tw, vw = t[sel], v[sel]
    if np.any(~(vw > 0)):
        raise DomainError("decay fit needs positive values in the window")
    x, y = np.log1p(tw), np.log(vw)
    A = np.column_stack([x, np.ones_like(x)])
    (slope, icept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.sqrt(np.mean((A @ [slope, icept] - y) ** 2)))
    ref = None
    name = None
    if selector is not None:
        spec = NormSpec.parse(selector) if isinstance(selector, str) else selector
        name = spec.name
        ref = reference_exponent(spec, alpha, dim)
    return DecayFit(name, (ta, tb), float(slope), resid, ref, float(icept), int(sel.sum()))
