"""Command-line front end.

Commands: psi, dims, exponent, criteria, shoot, barrier, verify, reproduce.
Exit codes: 0 success, 1 verdict mismatch (reproduce), 2 input error.
"""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import catalog as catalog_mod
from .criteria import (coro1_criterion, critical_case_classify, exist_criterion,
                       exponent_bounds, mutual_exclusion_check, nonexist_criterion)
from .envelopes import radial_envelopes
from .errors import AssumptionViolated, ConfigError, CritexError
from .fields import empirical_ellipticity, load_field_config
from .growth import dimension_estimates, growth_summary, restricted_g_search
from .profiles import RadialProfile
from .report import build_report, render_json, write_trajectory_csv
from .shooting import barrier_construct, find_lambda0
from .verify import residual_check


def _common_flags(sub):
    sub.add_argument("--config", required=True, help="coefficient-field config file")
    sub.add_argument("--out", default=None, help="write the JSON report here (default stdout)")
    sub.add_argument("--format", choices=("json", "csv"), default="json")
    sub.add_argument("--tol-abs", type=float, default=1e-8)
    sub.add_argument("--tol-rel", type=float, default=1e-6)
    sub.add_argument("--jobs", type=int, default=1)


def _field(args):
    return load_field_config(args.config)


def _emit(args, report, trajectory=None):
    text = render_json(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        if trajectory is not None and args.format == "csv":
            write_trajectory_csv(trajectory, args.out + ".csv")
    else:
        sys.stdout.write(text)
    return 0


def _phi_profile(env, lower=False):
    prof = env.lower if lower else env.upper
    log_eval = (lambda ell: prof.at_logr(ell) - 1.0) if prof.deep_evaluable else None
    return RadialProfile.from_callable(lambda r: prof(r) - 1.0, prof.domain_radius,
                                       log_evaluator=log_eval, label="EnvPsi-1")


def cmd_psi(args):
    field = _field(args)
    env = radial_envelopes(field, "psi")
    env_theta = radial_envelopes(field, "theta")
    shells = [field.radius * 2.0 ** (-k) for k in (1, 4, 8, 16, 24, 32)]
    section = {
        "ellipticity": empirical_ellipticity(field),
        "envelope_source": env.source,
        "psi_shells": [{"r": r, "env_upper": env.upper(r), "env_lower": env.lower(r)}
                       for r in shells],
        "theta_shells": [{"r": r, "env_upper": env_theta.upper(r),
                          "env_lower": env_theta.lower(r)} for r in shells],
    }
    return _emit(args, build_report("psi", field.config_echo, {"psi": section}))


def cmd_dims(args):
    field = _field(args)
    env = radial_envelopes(field, "psi")
    est = dimension_estimates(env, field.radius, levels=args.levels)
    section = {
        "dim_upper": est.dim_upper, "dim_lower": est.dim_lower,
        "unc_upper": est.unc_upper, "unc_lower": est.unc_lower,
        "levels": est.levels, "method_upper": est.method_upper,
        "method_lower": est.method_lower,
        "tail_inf_env_upper": est.tail_inf_env_upper,
    }
    if args.g_search != "off":
        g = restricted_g_search(field, mode=args.g_search)
        section["g_search"] = {"diag": list(g.diag), "dim_upper": g.dim_upper,
                               "dim_lower": g.dim_lower, "mode": g.mode,
                               "evaluations": g.evaluations, "improved": g.improved}
    return _emit(args, build_report("dims", field.config_echo, {"dims": section}))


def cmd_exponent(args):
    field = _field(args)
    bounds = exponent_bounds(field)
    return _emit(args, build_report("exponent", field.config_echo,
                                    {"exponent_bounds": bounds.to_dict()}))


def cmd_criteria(args):
    field = _field(args)
    summary = growth_summary(field)
    ex = exist_criterion(summary, summary.env_theta.upper, args.p)
    nx = nonexist_criterion(summary, summary.env_theta.lower, args.p)
    section = {"p": args.p, "exist": ex.to_dict(), "nonexist": nx.to_dict(),
               "mutually_consistent": not (ex.converges and nx.diverges)}
    try:
        section["coro1"] = coro1_criterion(summary, summary.env_theta.upper, args.p).to_dict()
    except AssumptionViolated as exc:
        section["coro1"] = {"unavailable": str(exc)}
    if args.critical_A is not None:
        res = critical_case_classify(field, A=args.critical_A, summary=summary)
        section["critical_case"] = res.to_dict()
    return _emit(args, build_report("criteria", field.config_echo, {"criteria": section}))


def cmd_shoot(args):
    field = _field(args)
    summary = growth_summary(field)
    phi = _phi_profile(summary.env_psi)
    res = find_lambda0(phi, summary.env_theta.upper, args.p, field.radius, args.M,
                       r_min=args.rmin)
    report = build_report("shoot", field.config_echo,
                          {"shooting": res.to_dict()},
                          tolerances={"bracket_rel": 1e-10})
    return _emit(args, report, trajectory=res.trajectory)


def cmd_barrier(args):
    field = _field(args)
    summary = growth_summary(field)
    res = barrier_construct((_phi_profile(summary.env_psi),
                             _phi_profile(summary.env_psi, lower=True)),
                            summary.env_theta.lower, args.p, field.radius, args.M)
    return _emit(args, build_report("barrier", field.config_echo,
                                    {"barrier": res.to_dict()}))


def cmd_verify(args):
    field = _field(args)
    summary = growth_summary(field)
    phi = _phi_profile(summary.env_psi)
    res = find_lambda0(phi, summary.env_theta.upper, args.p, field.radius, args.M,
                       r_min=args.rmin)
    section = {"shooting": res.to_dict()}
    if res.trajectory is not None and res.outcome.kind == "singular":
        rep = residual_check(field, res.trajectory, args.p, tol_abs=args.tol_abs)
        section["residual"] = rep.to_dict()
    return _emit(args, build_report("verify", field.config_echo, section,
                                    tolerances={"tol_abs": args.tol_abs}))


def cmd_reproduce(args):
    if args.all:
        names = catalog_mod.scenario_names()
    elif args.name:
        names = [args.name]
    else:
        raise ConfigError("reproduce needs --all or --name")
    scenarios = [catalog_mod.get_scenario(n) for n in names]
    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(catalog_mod.run_scenario, scenarios))
    else:
        results = [catalog_mod.run_scenario(s) for s in scenarios]
    n_bad = sum(0 if r["ok"] else 1 for r in results)
    report = build_report("reproduce", {"scenarios": names},
                          {"results": results,
                           "summary": {"total": len(results), "mismatched": n_bad}})
    code = _emit(args, report)
    return 1 if n_bad else code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="critex",
        description="critical exponents and singular radial solutions for "
                    "second-order elliptic inequalities on punctured balls")
    subs = parser.add_subparsers(dest="command", required=True)

    sp = subs.add_parser("psi", help="pointwise effective dimension and weight ratio summary")
    _common_flags(sp)
    sp.set_defaults(fn=cmd_psi)

    sp = subs.add_parser("dims", help="upper/lower dimension estimates")
    _common_flags(sp)
    sp.add_argument("--levels", type=int, default=None)
    sp.add_argument("--g-search", choices=("off", "identity", "diagonal"), default="off")
    sp.set_defaults(fn=cmd_dims)

    sp = subs.add_parser("exponent", help="critical exponent bounds")
    _common_flags(sp)
    sp.set_defaults(fn=cmd_exponent)

    sp = subs.add_parser("criteria", help="existence / non-existence integral verdicts at p")
    _common_flags(sp)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--sigma", type=float, default=None)
    sp.add_argument("--critical-A", type=float, default=None)
    sp.set_defaults(fn=cmd_criteria)

    sp = subs.add_parser("shoot", help="locate the critical shooting slope")
    _common_flags(sp)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--M", type=float, default=1.0)
    sp.add_argument("--rmin", type=float, default=None)
    sp.set_defaults(fn=cmd_shoot)

    sp = subs.add_parser("barrier", help="search for a non-existence barrier")
    _common_flags(sp)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--M", type=float, default=1.0)
    sp.set_defaults(fn=cmd_barrier)

    sp = subs.add_parser("verify", help="shoot and residual-check the singular candidate")
    _common_flags(sp)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--M", type=float, default=1.0)
    sp.add_argument("--rmin", type=float, default=None)
    sp.set_defaults(fn=cmd_verify)

    sp = subs.add_parser("reproduce", help="run catalog scenarios and diff against claims")
    sp.add_argument("--all", action="store_true")
    sp.add_argument("--name", default=None)
    sp.add_argument("--out", default=None)
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    sp.add_argument("--jobs", type=int, default=1)
    sp.set_defaults(fn=cmd_reproduce)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except CritexError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
