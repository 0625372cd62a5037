"""``chemns`` command line.

Exit codes: 0 ok, 2 configuration error, 3 suspected singularity,
4 monitor failure under ``--strict`` (and failed ``validate`` checks).
"""

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import load_config
from .diagnostics import CriterionSpec, check_pairs, fit_decay
from .errors import ChemNSError, ConfigurationError, SuspectedSingularity
from .io import emit_timeseries, read_timeseries, write_snapshot
from .model import ModelParams, State, constant
from .oracle import DenseSpectralOracle, exact_heat, fd_derivative, first_offending_mode
from .picard import PicardConfig, bisect_window, picard_solve
from .spectral import SpectralGrid, frac_laplacian, gradient
from .timestep import Stepper, StepperConfig, run

__all__ = ["main", "EXIT_OK", "EXIT_CONFIG", "EXIT_SINGULAR", "EXIT_MONITOR"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SINGULAR = 3
EXIT_MONITOR = 4

log = logging.getLogger("chemns")


def _num(x):
    """JSON-safe float (inf and nan become strings)."""
    if x is None:
        return None
    x = float(x)
    return x if np.isfinite(x) else repr(x)


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _setup(cfg, config_path):
    grid = cfg.grid.build()
    params = cfg.model.build(grid)
    state0 = cfg.initial.build(grid, base_dir=Path(config_path).parent)
    params.validate(max(float(state0.c.max()), 0.0))
    return grid, params, state0


def _outdir(cfg, config_path, override):
    out = Path(override) if override else Path(cfg.output.dir)
    if not out.is_absolute() and not override:
        out = Path(config_path).parent / out
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- subcommands -------------------------------------------------------------------


def cmd_run(args):
    cfg = load_config(args.config)
    grid, params, state0 = _setup(cfg, args.config)
    out = _outdir(cfg, args.config, args.out)
    diag = cfg.diagnostics.build(cfg.model.alpha)
    alpha = cfg.model.alpha

    records = []
    step = [0]
    every = cfg.output.snapshot_every

    def hook(state, rec):
        if rec is not None:
            records.append(rec)
        if every and step[0] % every == 0:
            write_snapshot(state, out / f"snapshot_{step[0]:06d}.cnsf", alpha)
        step[0] += 1

    status, message, result = EXIT_OK, "ok", None
    try:
        result = run(state0, params, cfg.stepper, diagnostics=diag, hooks=(hook,))
        final = result.final_state
    except SuspectedSingularity as exc:
        status, message = EXIT_SINGULAR, str(exc)
        final = exc.state
        print(message, file=sys.stderr)

    (out / "timeseries.csv").write_text(emit_timeseries(records))
    if final is not None:
        write_snapshot(final, out / "final.cnsf", alpha)

    failures = []
    if result is not None:
        failures = [(t, v) for t, v in result.failures if not v.advisory]
    if failures and args.strict and status == EXIT_OK:
        status, message = EXIT_MONITOR, f"{len(failures)} monitor failure(s)"
    for t, v in failures[:10]:
        print(f"monitor {v.name} failed at t={t:.6g}: {v.detail}", file=sys.stderr)

    fits = []
    if records:
        t = np.array([r.t for r in records])
        for selector, window in cfg.diagnostics.parsed_fits():
            if selector not in records[0].norms:
                fits.append({"selector": selector, "error": "selector not among recorded norms"})
                continue
            vals = np.array([r.norms[selector] for r in records])
            try:
                fit = fit_decay(t, vals, window, selector, alpha=alpha, dim=grid.dim)
            except ChemNSError as exc:
                fits.append({"selector": selector, "error": str(exc)})
                continue
            fits.append(
                {
                    "selector": selector,
                    "window": list(window),
                    "exponent": _num(fit.exponent),
                    "residual": _num(fit.residual),
                    "reference": _num(fit.reference),
                    "relative_error": _num(fit.relative_error),
                }
            )
            print(f"fit {selector} on {window}: exponent {fit.exponent:.6g}")

    if cfg.output.summary:
        summary = {
            "status": status,
            "message": message,
            "t_final": _num(final.t) if final is not None else None,
            "accepted_steps": result.accepted if result else None,
            "rejected_steps": result.rejected if result else None,
            "records": len(records),
            "monitor_failures": [
                {"t": _num(t), "name": v.name, "detail": v.detail} for t, v in failures
            ],
            "fits": fits,
        }
        _write_json(out / "summary.json", summary)
    return status


def cmd_picard(args):
    cfg = load_config(args.config)
    grid, params, state0 = _setup(cfg, args.config)
    out = _outdir(cfg, args.config, args.out)
    p = cfg.picard
    pcfg = PicardConfig(p.t0, p.n_time_nodes, p.max_iters, p.tol)
    if p.bisect:
        try:
            T0, traj, rep = bisect_window(state0, params, pcfg)
        except RuntimeError as exc:
            print(str(exc), file=sys.stderr)
            return EXIT_MONITOR if args.strict else EXIT_OK
    else:
        traj, rep = picard_solve(state0, params, pcfg)
        T0 = p.t0
    lines = ["iteration,sup_W,ratio"]
    for j, w in enumerate(rep.W_history, start=1):
        ratio = rep.contraction_ratios[j - 2] if j >= 2 and j - 2 < len(rep.contraction_ratios) else None
        lines.append(f"{j},{w:.17g},{'' if ratio is None else format(ratio, '.17g')}")
    (out / "picard.csv").write_text("\n".join(lines) + "\n")
    write_snapshot(traj[-1], out / "picard_final.cnsf", cfg.model.alpha)
    contracts = rep.contracts()
    print(
        f"T0 = {T0:.6g}: {rep.iters} iterations, converged = {rep.converged}, "
        f"ratios <= 1/2 from j = 2: {contracts}"
    )
    if cfg.output.summary:
        _write_json(
            out / "picard_summary.json",
            {
                "T0": _num(T0),
                "iterations": rep.iters,
                "converged": rep.converged,
                "contracts": contracts,
                "sup_W": [_num(w) for w in rep.W_history],
                "ratios": [_num(r) for r in rep.contraction_ratios],
            },
        )
    if args.strict and not (rep.converged and contracts):
        return EXIT_MONITOR
    return EXIT_OK


def _parse_pairs(text):
    vals = [float(x) for x in text.split(",")]
    if len(vals) != 4:
        raise ConfigurationError("--pairs needs p1,q1,p2,q2")
    return ((vals[0], vals[1]), (vals[2], vals[3]))


def cmd_check_criteria(args):
    spec = CriterionSpec(args.kind, _parse_pairs(args.pairs), args.alpha)
    verdicts = check_pairs(spec)
    for v in verdicts:
        state = "admissible" if v.admissible else f"inadmissible: {v.violated}"
        print(f"pair {v.index}: (p, q) = ({v.p:g}, {v.q:g}) {state}")
    if args.strict and not all(v.admissible for v in verdicts):
        return EXIT_MONITOR
    return EXIT_OK


def cmd_fit_decay(args):
    data = read_timeseries(Path(args.csv))
    if args.column not in data:
        raise ConfigurationError(f"column {args.column!r} not in {sorted(data)}")
    window = tuple(float(x) for x in args.window.split(","))
    if len(window) != 2:
        raise ConfigurationError("--window needs a,b")
    selector = args.column if ":" in args.column else None
    fit = fit_decay(data["t"], data[args.column], window, selector, alpha=args.alpha, dim=args.dim)
    print(f"exponent {fit.exponent:.10g}")
    print(f"residual {fit.residual:.3g} over {fit.samples} samples")
    if fit.reference is not None:
        print(f"reference {fit.reference:.10g} (relative error {fit.relative_error:.3g})")
    if args.strict:
        if fit.reference is None:
            raise ConfigurationError(f"--strict needs a column with a reference exponent, got {args.column!r}")
        if fit.relative_error > args.tol:
            return EXIT_MONITOR
    return EXIT_OK


def _validation_checks(n):
    """Yield ``(name, passed, detail)`` for the oracle cross-checks on an n^3 grid."""
    grid = SpectralGrid((n, n, n))
    oracle = DenseSpectralOracle.for_grid(grid)
    err = oracle.unitarity_error()
    yield "dense DFT unitary", err <= 1e-12, f"max |F*F - I| = {err:.2e}"

    rng = np.random.Generator(np.random.Philox(key=2024))
    for s in (0.6, 0.75, 1.0, 1.25):
        worst, mode = 0.0, None
        for _ in range(10):
            f = rng.standard_normal(grid.shape)
            fast = frac_laplacian(grid, f, s)
            ref = oracle.frac_laplacian(f, s)
            dev = np.abs(fast - ref).max() / np.abs(ref).max()
            if dev > worst:
                worst, mode = dev, first_offending_mode(grid, fast, ref, 1e-12)
        detail = f"max relative deviation {worst:.2e}"
        if mode is not None:
            detail += f", first offending mode {mode}"
        yield f"frac_laplacian s={s}", worst <= 1e-12, detail

    errs = []
    for m in (32, 64):
        g2 = SpectralGrid((m, m))
        x = g2.coords()
        f = np.exp(np.sin(x[0])) * np.cos(2 * x[1])
        spec = gradient(g2, f)
        errs.append(max(np.abs(fd_derivative(g2, f, a) - spec[a]).max() for a in range(2)))
    order = np.log2(errs[0] / errs[1])
    yield "finite-difference order vs spectral gradient", order >= 3.7, f"observed order {order:.3f}"

    # the velocity slot carries (-Lap)^alpha; a shear mode u = (0, 0, cos(x + 2y))
    # is divergence-free and has u.grad u = 0, so the step is pure semigroup
    desc = {"mode": (1, 2, 0), "amplitude": 1.0}
    dt, steps = 0.01, 100
    for s in (0.75, 1.0, 1.25):
        params = ModelParams(s, constant(0.0), constant(0.0), grid.vector_zeros())
        st = Stepper(grid, params, StepperConfig(dt, steps * dt, cfl=1.0, check_invariants=False))
        u = grid.vector_zeros()
        u[2] = exact_heat(grid, desc, s, 0.0)
        state = State(grid, grid.zeros(), grid.zeros(), u)
        for _ in range(steps):
            state = st.advance(state, dt)
        ref = exact_heat(grid, desc, s, steps * dt)
        dev = np.abs(state.u[2] - ref).max() / np.abs(ref).max()
        yield f"heat semigroup s={s}", dev <= 1e-12, f"relative deviation {dev:.2e}"


def cmd_validate(args):
    n = args.grid
    if n > 16:
        raise ConfigurationError("validate uses dense oracles: --grid must be <= 16")
    ok = True
    for name, passed, detail in _validation_checks(n):
        ok &= bool(passed)
        print(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
    return EXIT_OK if ok else EXIT_MONITOR


# -- entry point ----------------------------------------------------------------------


def build_parser():
    ap = argparse.ArgumentParser(prog="chemns", description="Chemotaxis-Navier-Stokes simulator")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="time-step a configured run")
    r.add_argument("config")
    r.add_argument("--strict", action="store_true", help="exit 4 on monitor failures")
    r.add_argument("--out", help="output directory (overrides [output] dir)")
    r.set_defaults(func=cmd_run)

    p = sub.add_parser("picard", help="Picard iteration on [0, T0]")
    p.add_argument("config")
    p.add_argument("--strict", action="store_true", help="exit 4 unless contractive and converged")
    p.add_argument("--out")
    p.set_defaults(func=cmd_picard)

    c = sub.add_parser("check-criteria", help="admissibility of regularity-criterion exponents")
    c.add_argument("--alpha", type=float, required=True)
    c.add_argument("--kind", choices=("ps", "bv"), required=True)
    c.add_argument("--pairs", required=True, help="p1,q1,p2,q2 (inf allowed)")
    c.add_argument("--strict", action="store_true", help="exit 4 if any pair is inadmissible")
    c.set_defaults(func=cmd_check_criteria)

    f = sub.add_parser("fit-decay", help="power-law fit of a time-series column")
    f.add_argument("csv")
    f.add_argument("--column", required=True)
    f.add_argument("--window", required=True, help="t_a,t_b")
    f.add_argument("--alpha", type=float, default=1.0)
    f.add_argument("--dim", type=int, default=3)
    f.add_argument("--strict", action="store_true", help="exit 4 if off the reference by more than --tol")
    f.add_argument("--tol", type=float, default=0.15, help="relative tolerance for --strict")
    f.set_defaults(func=cmd_fit_decay)

    v = sub.add_parser("validate", help="cross-check fast operators against brute-force oracles")
    v.add_argument("--grid", type=int, default=8)
    v.set_defaults(func=cmd_validate)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (ChemNSError, ValueError, OSError) as exc:
        if isinstance(exc, SuspectedSingularity):
            print(str(exc), file=sys.stderr)
            return EXIT_SINGULAR
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
