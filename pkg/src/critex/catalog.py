"""Named regression scenarios with machine-checkable expected verdicts.

Each scenario wraps a coefficient-field config file from ``catalog_data/``
plus a list of claims; every claim carries a stable tag so report diffs
identify exactly which expectation moved.  Existence claims are made a
fixed offset away from the critical exponent; at the critical exponent
itself only scenarios with a resolved critical case carry a verdict claim.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from importlib import resources
from typing import Optional

from .criteria import (critical_case_classify, exist_criterion, exponent_bounds,
                       nonexist_criterion)
from .fields import CoefficientField, load_field_config
from .growth import growth_summary
from .shooting import barrier_construct, find_lambda0

__all__ = ["Scenario", "Claim", "CATALOG", "scenario_names", "get_scenario",
           "run_scenario", "config_path"]


@dataclass(frozen=True)
class Claim:
    tag: str
    kind: str            # p_star | dims | critical | exists_below | not_exists_above | psi_range | shoot_singular | barrier
    expected: object = None
    tol: float = 0.0
    params: dict = dc_field(default_factory=dict)


@dataclass(frozen=True)
class Scenario:
    name: str
    config: str          # file name under catalog_data/
    claims: tuple
    dims_levels: Optional[int] = None
    criteria_levels: tuple = (48, 256)
    notes: str = ""


def config_path(config_name: str):
    return resources.files("critex.catalog_data").joinpath(config_name)


def load_catalog_field(config_name: str) -> CoefficientField:
    with resources.as_file(config_path(config_name)) as path:
        return load_field_config(path)


_load = load_catalog_field


def _laplacian_scenarios():
    out = []
    for n in (3, 4, 5, 6):
        p_star = n / (n - 2.0)
        claims = [
            Claim(f"laplacian{n}:p-star", "p_star", expected=p_star, tol=1e-6),
            Claim(f"laplacian{n}:exists-below", "exists_below", params={"p": p_star - 0.2}),
            Claim(f"laplacian{n}:none-above", "not_exists_above", params={"p": p_star + 0.2}),
            Claim(f"laplacian{n}:critical", "critical", expected="NoSingular",
                  params={"A": float(n)}),
        ]
        if n == 3:
            claims += [
                Claim("laplacian3:shoot-singular", "shoot_singular", params={"p": 2.0}),
                Claim("laplacian3:barrier", "barrier", params={"p": 4.0}),
            ]
        out.append(Scenario(f"laplacian{n}", f"laplacian{n}.cfg", tuple(claims)))
    return out


def _pert_scenarios():
    out = []
    for b, cfg in ((-2.0, "pert_m2.cfg"), (-1.0, "pert_m1.cfg"), (0.0, "pert_0.cfg"),
                   (1.0, "pert_1.cfg"), (3.0, "pert_3.cfg")):
        name = f"pert_beta{b:g}"
        if b > -1.0:
            expected = (3.0 + b) / (1.0 + b)
            claims = [
                Claim(f"{name}:p-star", "p_star", expected=expected, tol=1e-6),
                Claim(f"{name}:exists-below", "exists_below", params={"p": expected - 0.2}),
                Claim(f"{name}:none-above", "not_exists_above", params={"p": expected + 0.2}),
            ]
        else:
            claims = [
                Claim(f"{name}:p-star-infinite", "p_star", expected=math.inf),
                Claim(f"{name}:exists-large-p", "exists_below", params={"p": 5.0}),
            ]
        out.append(Scenario(name, cfg, tuple(claims)))
    return out


def _exs2_scenarios():
    table = (("05", 0.5, "Singular"), ("10", 1.0, "Singular"), ("15", 1.5, "NoSingular"))
    out = []
    for suffix, m, verdict in table:
        name = f"exs2_m{suffix}"
        tol = 0.2 if m <= 0.5 else 0.05
        out.append(Scenario(
            name, f"exs2_{suffix}.cfg",
            (
                Claim(f"{name}:p-star", "p_star", expected=3.0, tol=tol),
                Claim(f"{name}:critical", "critical", expected=verdict, params={"A": 3.0}),
            )))
    return out


def _exs3_scenarios():
    table = (("05", 0.5, "NoSingular"), ("10", 1.0, "NoSingular"), ("20", 2.0, "Singular"))
    out = []
    for suffix, kappa, verdict in table:
        name = f"exs3_k{suffix}"
        out.append(Scenario(
            name, f"exs3_{suffix}.cfg",
            (
                Claim(f"{name}:p-star", "p_star", expected=2.0, tol=0.05),
                Claim(f"{name}:critical", "critical", expected=verdict, params={"A": 4.0}),
                Claim(f"{name}:exists-below", "exists_below", params={"p": 1.8}),
                Claim(f"{name}:none-above", "not_exists_above", params={"p": 2.2}),
            )))
    return out


def _unstable_scenarios():
    out = []
    for suffix, alpha in (("25", 2.5), ("30", 3.0), ("40", 4.0)):
        name = f"unstable_sin_a{suffix}"
        p_star = 1.0 + 2.0 / (alpha - 2.0)
        out.append(Scenario(
            name, f"unstable_sin_{suffix}.cfg",
            (
                Claim(f"{name}:dims", "dims", expected=alpha, tol=1e-3),
                Claim(f"{name}:p-star", "p_star", expected=p_star, tol=1e-3),
                Claim(f"{name}:growth-band", "growth_band",
                      params={"alpha": alpha, "band": 0.5}),
            )))
    out.append(Scenario(
        "unstable_square_a22", "unstable_square_22.cfg",
        (
            Claim("unstable_square_a22:psi-range", "psi_range"),
            Claim("unstable_square_a22:dims", "dims", expected=2.2, tol=5e-3),
            Claim("unstable_square_a22:p-star", "p_star", expected=11.0, tol=0.15),
        )))
    return out


CATALOG = tuple(
    _laplacian_scenarios()
    + _pert_scenarios()
    + [
        Scenario("exa1_k1", "exa1.cfg",
                 (
                     Claim("exa1:p-star", "p_star", expected=3.0, tol=0.02),
                     Claim("exa1:critical", "critical", expected="NoSingular",
                           params={"A": 3.0}),
                 ),
                 dims_levels=64, criteria_levels=(32, 64)),
        Scenario("ser1_power", "ser1_power.cfg",
                 (
                     Claim("ser1_power:p-star", "p_star", expected=2.0, tol=0.02),
                     Claim("ser1_power:critical", "critical", expected="NoSingular",
                           params={"A": 3.0}),
                 )),
        Scenario("peb", "peb.cfg",
                 (
                     Claim("peb:p-star", "p_star", expected=5.0 / 3.0, tol=0.02),
                     Claim("peb:critical", "critical", expected="NoSingular",
                           params={"A": 5.0}),
                 )),
    ]
    + _exs2_scenarios()
    + _exs3_scenarios()
    + _unstable_scenarios()
)

_BY_NAME = {s.name: s for s in CATALOG}


def scenario_names():
    return [s.name for s in CATALOG]


def get_scenario(name: str) -> Scenario:
    try:
        return _BY_NAME[name]
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; known: {', '.join(scenario_names())}")


def _check_p_star(claim, bounds):
    expected = claim.expected
    computed = bounds.p_star_exact if bounds.p_star_exact is not None else bounds.p_star_estimate
    if expected == math.inf:
        ok = computed == math.inf or bounds.p_upper == math.inf
        return ok, computed
    if computed is None or computed == math.inf:
        return False, computed
    return abs(computed - expected) <= claim.tol, computed


def run_scenario(scenario: Scenario, field: Optional[CoefficientField] = None) -> dict:
    """Execute every claim; returns a diff-style report dict with one entry
    per claim (tag, expected, computed, ok) and an overall flag."""
    if field is None:
        field = _load(scenario.config)
    summary = growth_summary(field, levels=scenario.dims_levels)
    lv, mlv = scenario.criteria_levels
    bounds = exponent_bounds(field, summary=summary)
    checks = []

    def record(claim, ok, computed):
        checks.append({"tag": claim.tag, "kind": claim.kind,
                       "expected": _enc(claim.expected), "computed": _enc(computed),
                       "ok": bool(ok)})

    for claim in scenario.claims:
        if claim.kind == "p_star":
            ok, computed = _check_p_star(claim, bounds)
            record(claim, ok, computed)
        elif claim.kind == "dims":
            d = summary.dims
            ok = (abs(d.dim_upper - claim.expected) <= claim.tol
                  and abs(d.dim_lower - claim.expected) <= claim.tol)
            record(claim, ok, {"upper": d.dim_upper, "lower": d.dim_lower})
        elif claim.kind == "critical":
            res = critical_case_classify(field, A=claim.params["A"], summary=summary,
                                         levels=lv, max_levels=mlv)
            record(claim, res.verdict == claim.expected, res.verdict)
        elif claim.kind == "exists_below":
            v = exist_criterion(summary, summary.env_theta.upper, claim.params["p"],
                                levels=lv, max_levels=mlv)
            record(claim, v.converges, v.kind)
        elif claim.kind == "not_exists_above":
            v = nonexist_criterion(summary, summary.env_theta.lower, claim.params["p"],
                                   levels=lv, max_levels=mlv)
            record(claim, v.diverges, v.kind)
        elif claim.kind == "psi_range":
            ok = summary.psi_lower_simple < 2.0 <= summary.psi_upper_simple
            record(claim, ok, {"lower": summary.psi_lower_simple,
                               "upper": summary.psi_upper_simple})
        elif claim.kind == "growth_band":
            alpha, band = claim.params["alpha"], claim.params["band"]
            lo, hi = math.exp(-band), math.exp(band)
            worst = 1.0
            ok = True
            for k in range(1, 41):
                r = field.radius * 2.0 ** (-k)
                scaled = r ** alpha * summary.bigM(r)
                worst = max(worst, scaled / hi, lo / scaled)
                ok = ok and (lo <= scaled <= hi)
            record(claim, ok, {"max_band_excess": worst})
        elif claim.kind == "shoot_singular":
            phi = _phi_from_summary(summary)
            res = find_lambda0(phi, summary.env_theta.upper, claim.params["p"],
                               field.radius, 1.0)
            ok = (res.outcome.kind == "singular"
                  and res.outcome.growth_a is not None
                  and -2.0 - 1e-3 <= res.outcome.growth_a < 0.0)
            record(claim, ok, res.outcome.kind)
        elif claim.kind == "barrier":
            phi_up = _phi_from_summary(summary)
            phi_lo = _phi_from_summary(summary, lower=True)
            res = barrier_construct((phi_up, phi_lo), summary.env_theta.lower,
                                    claim.params["p"], field.radius, 1.0)
            record(claim, res.found, res.found)
        else:
            record(claim, False, f"unknown claim kind {claim.kind!r}")
    return {"scenario": scenario.name, "config": scenario.config,
            "checks": checks, "ok": all(c["ok"] for c in checks)}


def _phi_from_summary(summary, lower=False):
    from .profiles import RadialProfile

    env = summary.env_psi.lower if lower else summary.env_psi.upper
    log_eval = (lambda ell: env.at_logr(ell) - 1.0) if env.deep_evaluable else None
    return RadialProfile.from_callable(lambda r: env(r) - 1.0, env.domain_radius,
                                       log_evaluator=log_eval, label="EnvPsi-1")


def _enc(v):
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v
