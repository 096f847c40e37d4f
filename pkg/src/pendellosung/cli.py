"""Command-line front end.

Commands: plan, simulate, fit, budget, radius, mc, synth. Global flags
``--config`` (INI file, schema below), ``--seed`` and ``--out``. All
outputs are deterministic for a given (config, seed): CSV numbers carry
six significant digits, row order is fixed by increasing momentum
transfer. Exit codes: 0 success, 2 configuration error, 3 data error.

Config schema (all sections and keys optional)::

    [crystal]
    name = Si                ; Si or Ge, or give all constants inline:
    a0 = 5.43072             ; angstrom
    Z = 14
    b_nuclear = 4.1507       ; fm
    sigma_b_nuclear = 0.0002
    B = 0.4613               ; angstrom^2
    sigma_B = 0.0027

    [spectrum]
    lambda_min = 0.8         ; angstrom
    lambda_max = 2.5
    lambda_peak = 1.2
    two_theta_min = 15       ; degrees
    two_theta_max = 110

    [blade]
    thickness_cm = 1.0

    [model]
    reference = argonne      ; argonne | dubna | theory, or:
    b_ne = -1.31e-3          ; fm
    B = 0.4613               ; override for the simulation model

    [fit]
    include_forward = true
    free_intercept = true

    [run]
    seed = 0
    out = out
"""

from __future__ import annotations

import argparse
import configparser
import csv
import math
import sys
from dataclasses import dataclass, replace
from pathlib import Path

from . import fringes, inference, lattice, planner
from .constants import CODATA
from .errors import ConfigError, FormFactorRangeError, PendellosungError
from .formfactor import BUILTIN_TABLES, FormFactorTable, table_from_csv
from .lattice import CrystalSpec, Reflection, ScatteringModel

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3

_REFERENCE_BNE = {
    "argonne": CODATA.b_ne_argonne_fm,
    "dubna": CODATA.b_ne_dubna_fm,
    "theory": CODATA.b_ne_theory_fm,
}


@dataclass(frozen=True)
class RunConfig:
    crystal: CrystalSpec
    window: planner.SpectrumWindow
    blade: fringes.BladeGeometry
    table: FormFactorTable
    b_ne: float
    model_B: float
    include_forward: bool
    free_intercept: bool
    seed: int
    out_dir: Path

    def model(self) -> ScatteringModel:
        return ScatteringModel(
            b_nuclear=self.crystal.b_nuclear, b_ne=self.b_ne,
            Z=self.crystal.Z, B=self.model_B, form_factor=self.table,
        )


_SCHEMA = {
    "crystal": {"name", "a0", "z", "b_nuclear", "sigma_b_nuclear", "b", "sigma_b",
                "form_factor_csv"},
    "spectrum": {"lambda_min", "lambda_max", "lambda_peak",
                 "two_theta_min", "two_theta_max"},
    "blade": {"thickness_cm"},
    "model": {"reference", "b_ne", "b"},
    "fit": {"include_forward", "free_intercept"},
    "run": {"seed", "out"},
}


def load_config(path: str | None) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    if path is not None:
        try:
            with open(path) as fh:
                cp.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except configparser.Error as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from exc

    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key in cp[section]:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")

    def get(section, key, cast, default):
        try:
            raw = cp.get(section, key, fallback=None)
            return default if raw is None else cast(raw)
        except (ValueError, configparser.Error) as exc:
            raise ConfigError(f"bad value for [{section}] {key}") from exc

    def get_bool(section, key, default):
        try:
            v = cp.getboolean(section, key, fallback=default)
        except (ValueError, configparser.Error) as exc:
            raise ConfigError(f"bad value for [{section}] {key}") from exc
        return v

    name = get("crystal", "name", str, "Si")
    base = lattice.BUILTIN_CRYSTALS.get(name)
    if base is None and not cp.has_option("crystal", "a0"):
        raise ConfigError(f"unknown crystal {name!r} and no inline constants given")
    try:
        crystal = CrystalSpec(
            name=name,
            a0=get("crystal", "a0", float, base.a0 if base else 0.0),
            Z=get("crystal", "z", int, base.Z if base else 0),
            b_nuclear=get("crystal", "b_nuclear", float, base.b_nuclear if base else 0.0),
            sigma_b_nuclear=get("crystal", "sigma_b_nuclear", float,
                                base.sigma_b_nuclear if base else 0.0),
            B=get("crystal", "b", float, base.B if base else 0.0),
            sigma_B=get("crystal", "sigma_b", float, base.sigma_B if base else 0.0),
        )
        window = planner.SpectrumWindow(
            lambda_min=get("spectrum", "lambda_min", float, 0.8),
            lambda_max=get("spectrum", "lambda_max", float, 2.5),
            lambda_peak=get("spectrum", "lambda_peak", float, 1.2),
            two_theta_min=get("spectrum", "two_theta_min", float, 15.0),
            two_theta_max=get("spectrum", "two_theta_max", float, 110.0),
        )
        blade = fringes.BladeGeometry(thickness_cm=get("blade", "thickness_cm", float, 1.0))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    table_path = cp.get("crystal", "form_factor_csv", fallback=None)
    if table_path is not None:
        try:
            table = table_from_csv(table_path, element=crystal.name)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"form-factor table: {exc}") from exc
    else:
        table = BUILTIN_TABLES.get(crystal.name)
        if table is None:
            raise ConfigError(f"no built-in form factors for {crystal.name!r}; "
                              "set [crystal] form_factor_csv")

    reference = get("model", "reference", str, "argonne")
    if reference not in _REFERENCE_BNE:
        raise ConfigError(f"unknown model reference {reference!r}")
    b_ne = get("model", "b_ne", float, _REFERENCE_BNE[reference])

    return RunConfig(
        crystal=crystal, window=window, blade=blade, table=table,
        b_ne=b_ne, model_B=get("model", "b", float, crystal.B),
        include_forward=get_bool("fit", "include_forward", True),
        free_intercept=get_bool("fit", "free_intercept", True),
        seed=get("run", "seed", int, 0),
        out_dir=Path(get("run", "out", str, "out")),
    )


# --- small formatting helpers -------------------------------------------


def _fmt(x) -> str:
    return f"{x:.6g}"


def _parse_hkl(text: str) -> Reflection:
    s = text.strip().strip("()")
    try:
        if "," in s:
            h, k, l = (int(p) for p in s.split(","))
        elif len(s) == 3:
            h, k, l = (int(c) for c in s)
        else:
            raise ValueError
    except ValueError:
        raise ConfigError(f"cannot parse reflection {text!r}; use e.g. 422 or 4,2,2")
    return Reflection(h, k, l)


def _write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def read_measurements_csv(path) -> list:
    """Read a measurement file with header h,k,l,b_meas_fm,sigma_fm."""
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [c.strip() for c in header] != ["h", "k", "l", "b_meas_fm", "sigma_fm"]:
                raise PendellosungError(f"{path}: expected header h,k,l,b_meas_fm,sigma_fm")
            out = []
            for row in reader:
                if not row:
                    continue
                out.append(inference.Measurement(
                    reflection=Reflection(int(row[0]), int(row[1]), int(row[2])),
                    b_meas=float(row[3]), sigma=float(row[4]),
                ))
    except OSError as exc:
        raise PendellosungError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise PendellosungError(f"{path}: bad measurement row: {exc}") from exc
    return out


def _write_measurements_csv(path: Path, ms) -> None:
    _write_csv(path, ["h", "k", "l", "b_meas_fm", "sigma_fm"],
               [[m.reflection.h, m.reflection.k, m.reflection.l,
                 _fmt(m.b_meas), _fmt(m.sigma)] for m in ms])


# --- commands ------------------------------------------------------------


def cmd_plan(cfg: RunConfig, args) -> int:
    result = planner.survey(cfg.crystal, cfg.window, strict=args.strict)
    model = cfg.model()
    plans = result.plans if args.all else result.pure
    rows = []
    for p in plans:
        try:
            f_val = _fmt(cfg.table.f_at(p.q))
            f2 = _fmt(lattice.structure_factor_magnitude(cfg.crystal, model, p.reflection) ** 2)
        except FormFactorRangeError:
            # Table does not reach this reflection; kinematics still apply.
            f_val, f2 = "", ""
        rows.append([
            p.reflection.label(), str(p.reflection_class), f_val,
            _fmt(p.lambda_window[0]), _fmt(p.lambda_window[1]),
            _fmt(p.two_theta_window[0]), _fmt(p.two_theta_window[1]),
            f2, "true" if p.pure else "false",
        ])
    out = cfg.out_dir / "plan.csv"
    _write_csv(out, ["hkl", "class", "f", "lambda_min", "lambda_max",
                     "two_theta_min", "two_theta_max", "F2_fm2", "pure"], rows)
    print(f"candidates={len(result.plans)} contaminated={len(result.contaminated)} "
          f"pure={len(result.pure)}")
    for p in result.plans:
        if p.note:
            print(f"note ({p.reflection.label()}): {p.note}")
    print(f"wrote {out} ({len(rows)} rows)")
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, args) -> int:
    r = _parse_hkl(args.hkl)
    model = cfg.model()
    spectrum = fringes.BeamSpectrum(shape=args.spectrum, window=cfg.window)
    profile = fringes.intensity_profile(spectrum, cfg.crystal, model, r,
                                        cfg.blade, n_samples=args.samples)
    counts = fringes.fringe_count(cfg.crystal, model, r, cfg.blade, cfg.window)
    out = cfg.out_dir / f"fringes_{r.canonical().label()}.csv"
    _write_csv(out, ["lambda_A", "two_theta_deg", "argument_rad", "intensity_norm"],
               [[_fmt(l), _fmt(t), _fmt(a), _fmt(i)]
                for l, t, a, i in zip(profile.lam, profile.two_theta_deg,
                                      profile.argument, profile.intensity)])
    print(f"({r.canonical().label()}) t={_fmt(cfg.blade.thickness_cm)} cm: "
          f"delta_argument={_fmt(counts.delta_argument)} rad, "
          f"periods={counts.period_count}, antinodes={counts.antinode_count}")
    print(f"wrote {out} ({len(profile.lam)} rows)")
    return EXIT_OK


def cmd_fit(cfg: RunConfig, args) -> int:
    ms = read_measurements_csv(args.measurements)
    crystal = cfg.crystal
    rows = []
    mode = args.mode
    if mode == "auto":
        mode = "joint" if len(ms) >= 2 else "bne"
    if mode == "joint":
        fit = inference.joint_fit(ms, crystal, cfg.table,
                                  include_forward=cfg.include_forward,
                                  free_intercept=cfg.free_intercept)
        big_b, bne = fit.value("B"), fit.value("b_ne")
        s_b, s_bne = fit.sigma("B"), fit.sigma("b_ne")
        print(f"joint fit over {len(ms)} reflections "
              f"(forward point {'in' if cfg.include_forward else 'out'}):")
        print(f"  B    = {big_b:.6g} +- {s_b:.2g} A^2")
        print(f"  b_ne = {bne:.6g} +- {s_bne:.2g} fm")
        print(f"  chi2/dof = {fit.chi2:.4g}/{fit.dof}")
        for i, ni in enumerate(fit.param_names):
            rows.append(["param", ni, "", _fmt(fit.values[i])])
            rows.append(["sigma", ni, "", _fmt(math.sqrt(fit.covariance[i, i]))])
        for i, ni in enumerate(fit.param_names):
            for j, nj in enumerate(fit.param_names):
                if j > i:
                    rows.append(["cov", ni, nj, _fmt(fit.covariance[i, j])])
        r2, s_r2 = inference.charge_radius_from_bne(CODATA, bne, s_bne)
    elif mode == "B":
        big_b, s_b = inference.fit_temperature_factor(
            ms, crystal, include_forward=cfg.include_forward,
            free_intercept=cfg.free_intercept)
        print(f"temperature factor from {len(ms)} reflections:")
        print(f"  B = {big_b:.6g} +- {s_b:.2g} A^2")
        rows += [["param", "B", "", _fmt(big_b)], ["sigma", "B", "", _fmt(s_b)]]
        r2 = None
    else:
        bne, s_bne = inference.fit_bne(ms, crystal, cfg.table,
                                       include_forward=cfg.include_forward)
        anchor = " plus the forward value" if cfg.include_forward else ""
        print(f"b_ne from {len(ms)} reflection(s){anchor}:")
        print(f"  b_ne = {bne:.6g} +- {s_bne:.2g} fm")
        rows += [["param", "b_ne", "", _fmt(bne)], ["sigma", "b_ne", "", _fmt(s_bne)]]
        r2, s_r2 = inference.charge_radius_from_bne(CODATA, bne, s_bne)
    if r2 is not None:
        print(f"  <r_n^2> = {r2:.6g} +- {s_r2:.2g} fm^2")
        rows += [["param", "r2", "", _fmt(r2)], ["sigma", "r2", "", _fmt(s_r2)]]
    out = cfg.out_dir / "fit_report.csv"
    _write_csv(out, ["row", "name_a", "name_b", "value"], rows)
    print(f"wrote {out}")
    return EXIT_OK


def _budget_sets(cfg: RunConfig, args):
    if args.hkl:
        return [("custom", [_parse_hkl(h) for h in args.hkl])]
    pure = planner.enumerate_pure(cfg.crystal, cfg.window)
    strong = [p.reflection for p in pure
              if p.reflection_class is lattice.ReflectionClass.STRONG]
    new = [p.reflection for p in pure if p.reflection != Reflection(1, 1, 1)]
    return [("strong", strong), ("new", new)]


def cmd_budget(cfg: RunConfig, args) -> int:
    model = cfg.model()
    rows = []
    print("projected slope precisions (sigma_b_meas = "
          f"{_fmt(args.sigma)} fm):")
    configs = [(cfg.include_forward, True)]
    if not args.primary_only:
        configs += [(f, p) for f in (True, False) for p in (True, False)
                    if (f, p) != configs[0]]
    for set_name, refls in _budget_sets(cfg, args):
        for fwd, prop in configs:
            primary = (fwd, prop) == configs[0]
            try:
                b = inference.error_budget(model, cfg.crystal, refls,
                                           sigma_b_meas=args.sigma,
                                           include_forward=fwd,
                                           propagate_sigma_B=prop)
            except PendellosungError:
                if primary:
                    raise
                continue
            rows.append([set_name, b.n_reflections, str(fwd).lower(),
                         str(prop).lower(), _fmt(b.sigma_B), _fmt(b.sigma_bne)])
            if primary:
                print(f"  {set_name} ({b.n_reflections} refl): "
                      f"sigma_B = {b.sigma_B:.3g} A^2, "
                      f"sigma_bne = {b.sigma_bne:.3g} fm")
    out = cfg.out_dir / "budget.csv"
    _write_csv(out, ["set", "n", "include_forward", "propagate_sigma_B",
                     "sigma_B_A2", "sigma_bne_fm"], rows)
    print(f"wrote {out} ({len(rows)} rows)")
    return EXIT_OK


def cmd_radius(cfg: RunConfig, args) -> int:
    r2, s = inference.charge_radius_from_bne(CODATA, args.bne, args.sigma)
    print(f"b_ne = {args.bne:.6g} fm -> <r_n^2> = {r2:.6g} +- {s:.2g} fm^2")
    print("reference values:")
    for label, bne, sig in [
        ("theory (Foldy)", CODATA.b_ne_theory_fm, CODATA.sigma_b_ne_theory_fm),
        ("argonne", CODATA.b_ne_argonne_fm, CODATA.sigma_b_ne_argonne_fm),
        ("dubna", CODATA.b_ne_dubna_fm, CODATA.sigma_b_ne_dubna_fm),
    ]:
        rr, ss = inference.charge_radius_from_bne(CODATA, bne, sig)
        print(f"  {label:15s} b_ne = {bne:.6g} fm  <r_n^2> = {rr:.6g} +- {ss:.2g} fm^2")
    return EXIT_OK


def cmd_synth(cfg: RunConfig, args) -> int:
    model = cfg.model()
    pure = planner.enumerate_pure(cfg.crystal, cfg.window)
    refls = [p.reflection for p in pure]
    if not args.all_pure:
        refls = [r for r in refls if r != Reflection(1, 1, 1)]
    if args.error_model == "temperature-factor":
        sigma = inference.temperature_factor_sigmas(model, cfg.crystal, refls)
    else:
        sigma = args.sigma
    ms = inference.synth_measurements(model, cfg.crystal, refls,
                                      sigma=sigma, seed=cfg.seed)
    out = cfg.out_dir / "measurements.csv"
    _write_measurements_csv(out, ms)
    print(f"wrote {out} ({len(ms)} rows, seed={cfg.seed})")
    return EXIT_OK


def cmd_mc(cfg: RunConfig, args) -> int:
    model = cfg.model()
    pure = planner.enumerate_pure(cfg.crystal, cfg.window)
    refls = [p.reflection for p in pure if p.reflection != Reflection(1, 1, 1)]
    res = inference.monte_carlo_validate(model, cfg.crystal, refls,
                                         sigma=args.sigma, n_trials=args.trials,
                                         seed=cfg.seed,
                                         include_forward=cfg.include_forward)
    print(f"monte carlo over {res.n_trials} trials ({len(refls)} reflections):")
    for i, name in enumerate(res.param_names):
        ana = math.sqrt(res.analytic_cov[i, i])
        emp = math.sqrt(res.empirical_cov[i, i])
        print(f"  sigma({name}): analytic {ana:.4g}, empirical {emp:.4g}, "
              f"ratio {emp / ana:.4f}")
    return EXIT_OK


# --- argument parsing ----------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    # Global flags are accepted both before and after the subcommand.
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="INI config file")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="override [run] seed")
    common.add_argument("--out", default=argparse.SUPPRESS,
                        help="override [run] out directory")

    p = argparse.ArgumentParser(
        prog="pendellosung",
        description="Plan, simulate and fit Bragg-amplitude interferometry "
                    "on diamond-structure crystals.",
        parents=[common],
    )
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("plan", help="enumerate measurable reflections", parents=[common])
    sp.add_argument("--all", action="store_true",
                    help="emit every candidate, not only the clean ones")
    sp.add_argument("--strict", action="store_true",
                    help="purely geometric purity verdicts (no survey amendments)")

    sp = sub.add_parser("simulate", help="fringe profile for one reflection", parents=[common])
    sp.add_argument("hkl", help="Miller indices, e.g. 711 or 7,1,1")
    sp.add_argument("--samples", type=int, default=2000)
    sp.add_argument("--spectrum", choices=("flat", "maxwellian"), default="flat")

    sp = sub.add_parser("fit", help="fit B and b_ne to a measurement CSV", parents=[common])
    sp.add_argument("measurements", help="CSV with header h,k,l,b_meas_fm,sigma_fm")
    sp.add_argument("--mode", choices=("auto", "joint", "bne", "B"), default="auto")

    sp = sub.add_parser("budget", help="projected uncertainties for reflection sets", parents=[common])
    sp.add_argument("--sigma", type=float, default=inference.DEFAULT_SIGMA_B_MEAS,
                    help="assumed per-reflection amplitude error, fm")
    sp.add_argument("--hkl", nargs="*", default=None,
                    help="custom reflection set, e.g. --hkl 422 620 642")
    sp.add_argument("--primary-only", action="store_true",
                    help="only the forward+propagated configuration")

    sp = sub.add_parser("radius", help="convert b_ne to the mean-square charge radius", parents=[common])
    sp.add_argument("bne", type=float, help="b_ne in fm")
    sp.add_argument("--sigma", type=float, default=0.0)

    sp = sub.add_parser("synth", help="synthetic measurement CSV", parents=[common])
    sp.add_argument("--sigma", type=float, default=inference.DEFAULT_SIGMA_B_MEAS)
    sp.add_argument("--error-model", choices=("flat", "temperature-factor"),
                    default="flat")
    sp.add_argument("--all-pure", action="store_true",
                    help="include the reference (111) reflection")

    sp = sub.add_parser("mc", help="Monte-Carlo check of the fit covariance", parents=[common])
    sp.add_argument("--trials", type=int, default=10_000)
    sp.add_argument("--sigma", type=float, default=inference.DEFAULT_SIGMA_B_MEAS)

    return p


_COMMANDS = {
    "plan": cmd_plan,
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "budget": cmd_budget,
    "radius": cmd_radius,
    "synth": cmd_synth,
    "mc": cmd_mc,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(getattr(args, "config", None))
        if getattr(args, "seed", None) is not None:
            cfg = replace(cfg, seed=args.seed)
        if getattr(args, "out", None) is not None:
            cfg = replace(cfg, out_dir=Path(args.out))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return _COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PendellosungError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    raise SystemExit(main())
