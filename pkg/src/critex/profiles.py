"""Radial profiles: evaluable scalar functions of the radius.

A :class:`RadialProfile` is the universal coefficient carrier.  Besides the
plain evaluator ``f(r)`` a profile may carry ``log_evaluator(ell)`` giving
``f`` at ``ell = ln(1/r)``; integrators use it to reach radii far below the
floating-point range of ``r`` itself (log-periodic coefficients stay exactly
evaluable arbitrarily deep).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

from .errors import DomainError, DomainMismatch
from .exprs import ProfileExpr, eval_profile, parse_profile

__all__ = ["RadialProfile", "profile_combine"]

# ln(1/r) beyond which r itself underflows and a log_evaluator is required
_MAX_PLAIN_LOGR = 700.0


@dataclass(frozen=True)
class RadialProfile:
    """An evaluable function of radius on ``(0, domain_radius]``.

    ``upper_env``/``lower_env`` are optional analytic envelopes,
    ``asymptotic_hint`` an optional ``(exponent, log_power)`` pair describing
    ``f(r) ~ c * r**a * |ln r|**b`` near zero.
    """

    evaluator: Callable[[float], float]
    domain_radius: float
    upper_env: Optional["RadialProfile"] = None
    lower_env: Optional["RadialProfile"] = None
    asymptotic_hint: Optional[tuple] = None
    continuity_flag: bool = True
    log_evaluator: Optional[Callable[[float], float]] = None
    label: str = ""

    def __call__(self, r: float) -> float:
        return self.evaluator(r)

    def at_logr(self, ell: float) -> float:
        """Value at ``r = exp(-ell)`` (``ell = ln(1/r)``)."""
        if self.log_evaluator is not None:
            return self.log_evaluator(ell)
        if ell > _MAX_PLAIN_LOGR:
            raise DomainError(f"radius underflow: ln(1/r)={ell:.3g} needs a log_evaluator")
        return self.evaluator(math.exp(-ell))

    @property
    def deep_evaluable(self) -> bool:
        return self.log_evaluator is not None

    # -- constructors -------------------------------------------------------

    @staticmethod
    def from_expr(expr, domain_radius: float, **kw) -> "RadialProfile":
        if isinstance(expr, str):
            expr = parse_profile(expr)
        if not isinstance(expr, ProfileExpr):
            expr = ProfileExpr(expr)
        return RadialProfile(
            evaluator=lambda r, _e=expr: eval_profile(_e, r),
            domain_radius=domain_radius,
            label=expr.source or str(expr),
            **kw,
        )

    @staticmethod
    def constant(c: float, domain_radius: float) -> "RadialProfile":
        c = float(c)
        return RadialProfile(
            evaluator=lambda r: c,
            domain_radius=domain_radius,
            log_evaluator=lambda ell: c,
            label=f"{c:g}",
        )

    @staticmethod
    def from_callable(f, domain_radius: float, log_evaluator=None, label="", **kw) -> "RadialProfile":
        return RadialProfile(evaluator=f, domain_radius=domain_radius,
                             log_evaluator=log_evaluator, label=label, **kw)

    def with_envelopes(self, upper=None, lower=None) -> "RadialProfile":
        return replace(self, upper_env=upper, lower_env=lower)


def _same_radius(a: RadialProfile, b: RadialProfile):
    if not math.isclose(a.domain_radius, b.domain_radius, rel_tol=1e-12):
        raise DomainMismatch(f"domain radii differ: {a.domain_radius} vs {b.domain_radius}")


def _lift(op, a: RadialProfile, b: RadialProfile, label):
    log_eval = None
    if a.log_evaluator is not None and b.log_evaluator is not None:
        log_eval = lambda ell: op(a.at_logr(ell), b.at_logr(ell))
    return RadialProfile(
        evaluator=lambda r: op(a(r), b(r)),
        domain_radius=a.domain_radius,
        log_evaluator=log_eval,
        continuity_flag=a.continuity_flag and b.continuity_flag,
        label=label,
    )


def _nonnegative_on_probe(p: RadialProfile) -> bool:
    R = p.domain_radius
    try:
        return all(p(R * 2.0 ** (-k)) >= 0.0 for k in range(0, 24, 3))
    except Exception:
        return False


def profile_combine(op: str, a: RadialProfile, b: RadialProfile) -> RadialProfile:
    """Pointwise combination ``op in {add, mul, div, compose_with_log}``.

    Envelopes propagate only where the operation is monotone in each
    argument (always for ``add``; for ``mul`` when both factors are
    nonnegative on a probe grid); otherwise they are dropped.

    ``compose_with_log`` treats ``a`` as a function of ``t`` and returns
    ``r -> a(ln(1/r))`` on the domain of ``b``.
    """
    if op == "compose_with_log":
        R = b.domain_radius
        return RadialProfile(
            evaluator=lambda r: a.evaluator(math.log(1.0 / r)),
            domain_radius=R,
            log_evaluator=lambda ell: a.evaluator(ell),
            continuity_flag=a.continuity_flag,
            label=f"{a.label or 'f'}(ln(1/r))",
        )
    _same_radius(a, b)
    if op == "add":
        out = _lift(lambda x, y: x + y, a, b, f"({a.label})+({b.label})")
        if a.upper_env and b.upper_env and a.lower_env and b.lower_env:
            out = out.with_envelopes(
                upper=profile_combine("add", a.upper_env, b.upper_env),
                lower=profile_combine("add", a.lower_env, b.lower_env),
            )
        return out
    if op == "mul":
        out = _lift(lambda x, y: x * y, a, b, f"({a.label})*({b.label})")
        envs_ok = (a.upper_env and b.upper_env and a.lower_env and b.lower_env
                   and _nonnegative_on_probe(a.lower_env) and _nonnegative_on_probe(b.lower_env))
        if envs_ok:
            out = out.with_envelopes(
                upper=profile_combine("mul", a.upper_env, b.upper_env),
                lower=profile_combine("mul", a.lower_env, b.lower_env),
            )
        return out
    if op == "div":
        def div(x, y):
            if y == 0.0:
                raise DomainError("division by zero in profile combination")
            return x / y
        return _lift(div, a, b, f"({a.label})/({b.label})")
    raise ValueError(f"unknown combination {op!r}")
