"""Emden-Fowler shooting: final value problem

    v'' + (phi(r)/r) v' = theta(r) |v|^{p-1} v   on (0, R),
    v(R) = M,  v'(R) = lambda,

integrated backward toward the singular endpoint in s = ln(R/r), where the
problem reads v_ss = (phi - 1) v_s + r^2 theta |v|^{p-1} v and r = 0 becomes
the horizon s = +inf.  Blow-up versus extension separates at the critical
slope lambda_0 = inf of the bounded-continuation set; the trajectory at
lambda_0 is the singular solution candidate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (NonMonotoneClassification, SearchBudgetExceeded,
                     StiffnessFailure)
from .fields import CoefficientField
from .growth import gamma_and_t
from .profiles import RadialProfile

__all__ = [
    "FVPSpec", "Trajectory", "ShootingResult", "BarrierResult", "CeilingRule",
    "keller_ceiling", "solve_fvp", "find_lambda0", "barrier_construct",
    "subsolution_power",
]

_V_EXPLODE = 1e30
_DEFAULT_DEPTH = 40          # r_min = R * 2^-40
_RTOL, _ATOL = 1e-9, 1e-12


@dataclass(frozen=True)
class FVPSpec:
    phi: RadialProfile
    theta: RadialProfile
    p: float
    R: float
    M_end: float
    lam: float

    def __post_init__(self):
        for r in (self.R, self.R * 0.1, self.R * 1e-3):
            if self.theta(r) <= 0:
                raise ValueError(f"theta must be positive, got {self.theta(r):g} at r={r:g}")


@dataclass(frozen=True)
class Termination:
    kind: str                     # "reached_rmin" | "blowup" | "turned_negative"
    r_prime: Optional[float] = None


@dataclass
class Trajectory:
    r: np.ndarray
    v: np.ndarray
    dv_dr: np.ndarray
    termination: Termination
    spec: FVPSpec
    ceiling_constant: Optional[float] = None
    ceiling_crossed_at: Optional[float] = None
    dense: Optional[Callable] = None   # s -> (v, v_s); s = ln(R/r)

    @property
    def extends(self) -> bool:
        return self.termination.kind == "reached_rmin"


@dataclass(frozen=True)
class CeilingRule:
    """Blow-up ceiling v <= C * r^{2/(1-p)} with C calibrated per run."""
    exponent: float
    safety: float

    def calibrate(self, r: np.ndarray, v: np.ndarray) -> float:
        scale = np.max(v * np.power(r, -self.exponent))
        return float(self.safety * max(scale, 1e-12))


def keller_ceiling(p: float, safety: float = 4.0) -> CeilingRule:
    """Universal growth ceiling with exponent 2/(1-p); the constant is
    calibrated as safety x max over the first decade of v(r) r^{-2/(1-p)}."""
    if p <= 1:
        raise ValueError("keller ceiling requires p > 1")
    return CeilingRule(exponent=2.0 / (1.0 - p), safety=safety)


def _rhs(spec: FVPSpec):
    phi, theta, p, R = spec.phi, spec.theta, spec.p, spec.R
    ell0 = math.log(1.0 / R)

    def rhs(s, y):
        v, w = y
        r2 = R * R * math.exp(-2.0 * s)
        ph = phi.at_logr(s + ell0)
        th = theta.at_logr(s + ell0)
        f = abs(v) ** (p - 1.0) * v if p != 1.0 else v
        return (w, (ph - 1.0) * w + r2 * th * f)

    return rhs


def solve_fvp(spec: FVPSpec, r_min: Optional[float] = None,
              ceiling: Optional[CeilingRule] = "keller",
              n_per_decade: int = 64, rtol: float = _RTOL,
              atol: float = _ATOL) -> Trajectory:
    """Integrate the final value problem from R down to r_min.

    Blow-up is declared when the explosion guard (v >= 1e30) fires, when the
    calibrated ceiling is exceeded a thousandfold, when it is exceeded for a
    full decade with v still growing, or when the step controller fails while
    v grows steeply in s; a bare step failure raises
    :class:`StiffnessFailure` instead of misclassifying.
    """
    R, p = spec.R, spec.p
    if r_min is None:
        r_min = R * 2.0 ** (-_DEFAULT_DEPTH)
    s_max = math.log(R / r_min)
    rule = keller_ceiling(p) if (ceiling == "keller" and p > 1) else (
        None if ceiling == "keller" else ceiling)
    rhs = _rhs(spec)
    y0 = (spec.M_end, -R * spec.lam)     # w = dv/ds = -r v'

    def ev_explode(s, y):
        return y[0] - _V_EXPLODE
    ev_explode.terminal = True
    ev_explode.direction = 1.0

    def ev_zero(s, y):
        return y[0]
    ev_zero.terminal = True
    ev_zero.direction = -1.0

    def settle(sol):
        """Terminal-event / failure classification."""
        if sol.t_events[0].size:
            return Termination("blowup", float(R * math.exp(-sol.t_events[0][0])))
        if sol.t_events[1].size:
            return Termination("turned_negative", float(R * math.exp(-sol.t_events[1][0])))
        if not sol.success:
            yb = sol.y[:, -1]
            # a step-size underflow while v grows steeply is the finite-s
            # blow-up horizon (for large p the profile (s*-s)^{-2/(p-1)} is
            # too shallow to reach the absolute explosion guard)
            if yb[0] > max(1e8, 1e3 * abs(spec.M_end)) and yb[1] > 0:
                return Termination("blowup", float(R * math.exp(-sol.t[-1])))
            raise StiffnessFailure(f"step failure at s={sol.t[-1]:.4g}: {sol.message}")
        return None

    # coarse pre-run over the first decade calibrates the ceiling constant
    ceiling_c = None
    if rule is not None:
        s_split = min(math.log(10.0), s_max)
        pre = solve_ivp(rhs, (0.0, s_split), y0, method="DOP853", rtol=1e-6,
                        atol=1e-9, dense_output=True, events=[ev_explode, ev_zero])
        s_top = pre.t[-1]
        ss = np.linspace(0.0, s_top, 64)
        va = pre.sol(ss)[0] if s_top > 0 else np.array([spec.M_end])
        rr = R * np.exp(-ss[: len(np.atleast_1d(va))])
        ceiling_c = rule.calibrate(rr, np.maximum(np.atleast_1d(va), 0.0))

    events = [ev_explode, ev_zero]
    if rule is not None:
        # plain ceiling crossings are tracked; exceeding the ceiling a
        # thousandfold is a definite blow-up (power-law extensions cannot,
        # interior divergence must)
        def ev_ceiling(s, y, _c=ceiling_c, _e=rule.exponent):
            return y[0] - _c * (R * math.exp(-s)) ** _e
        ev_ceiling.terminal = False
        ev_ceiling.direction = 0.0

        def ev_ceiling_hard(s, y, _c=1e3 * ceiling_c, _e=rule.exponent):
            return y[0] - _c * (R * math.exp(-s)) ** _e
        ev_ceiling_hard.terminal = True
        ev_ceiling_hard.direction = 1.0
        events += [ev_ceiling, ev_ceiling_hard]

    sol = solve_ivp(rhs, (0.0, s_max), y0, method="DOP853", rtol=rtol,
                    atol=atol, dense_output=True, events=events)
    termination = settle(sol)
    crossed_at = None
    if rule is not None and sol.t_events[2].size:
        crossed_at = float(R * math.exp(-float(sol.t_events[2][0])))
    if termination is None and rule is not None and sol.t_events[3].size:
        termination = Termination(
            "blowup", crossed_at or float(R * math.exp(-float(sol.t_events[3][0]))))
    if termination is None and rule is not None and sol.t_events[2].size:
        s_up = float(sol.t_events[2][-1])
        s_end = sol.t[-1]
        above = sol.sol(s_end)[0] - ceiling_c * (R * math.exp(-s_end)) ** rule.exponent
        sustained = (s_end - s_up) >= math.log(10.0)
        growing = sol.sol(s_end)[0] > sol.sol(s_up)[0]
        if above > 0 and sustained and growing:
            termination = Termination("blowup", float(R * math.exp(-s_up)))
    if termination is None:
        termination = Termination("reached_rmin")

    s_stop = sol.t[-1]

    def dense(s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        return sol.sol(np.clip(s, 0.0, s_stop))

    n = max(2, int(n_per_decade * (s_stop / math.log(10.0))) + 1)
    s_grid = np.linspace(0.0, s_stop, n)
    vals = dense(s_grid)
    r_grid = R * np.exp(-s_grid)
    v_grid = vals[0]
    dv_grid = -vals[1] / r_grid
    return Trajectory(r=r_grid, v=v_grid, dv_dr=dv_grid, termination=termination,
                      spec=spec, ceiling_constant=ceiling_c,
                      ceiling_crossed_at=crossed_at, dense=dense)


# ---------------------------------------------------------------------------
# critical slope

@dataclass(frozen=True)
class Outcome:
    kind: str                     # "singular" | "bounded" | "undetermined"
    growth_a: Optional[float] = None
    growth_b: Optional[float] = None
    v_limit: Optional[float] = None


@dataclass
class ShootingResult:
    lambda0: Optional[float]
    bracket_width: Optional[float]
    outcome: Outcome
    evidence: tuple                # ((lambda, termination kind), ...) sorted by lambda
    trajectory: Optional[Trajectory] = None
    diagnostics: dict = dc_field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"lambda0": self.lambda0, "bracket_width": self.bracket_width,
                "outcome": {"kind": self.outcome.kind, "growth_a": self.outcome.growth_a,
                            "growth_b": self.outcome.growth_b, "v_limit": self.outcome.v_limit},
                "evidence": [[lam, kind] for lam, kind in self.evidence],
                "diagnostics": self.diagnostics}


def _growth_fit(traj: Trajectory):
    """Fit v ~ c r^a |ln r|^b on the deepest slope-stable two decades."""
    r, v = traj.r, traj.v
    good = (v > 0) & (r < traj.spec.R * 1e-2) & (r < 1.0 / math.e)
    if good.sum() < 24:
        return None
    lr = np.log(r[good])
    lv = np.log(v[good])
    llr = np.log(-lr)
    # rolling local slope over ~half-decade windows, deepest stable stretch
    order = np.argsort(lr)                     # ascending ln r (deep first)
    lr, lv, llr = lr[order], lv[order], llr[order]
    span = math.log(10.0) * 2.0
    best = None
    i = 0
    while i < len(lr) and lr[i] + span <= lr[-1] + 1e-9:
        j = np.searchsorted(lr, lr[i] + span)
        seg = slice(i, min(j + 1, len(lr)))
        if seg.stop - seg.start >= 16:
            mid = (seg.start + seg.stop) // 2
            s1 = np.polyfit(lr[seg.start:mid], lv[seg.start:mid], 1)[0]
            s2 = np.polyfit(lr[mid:seg.stop], lv[mid:seg.stop], 1)[0]
            drift = abs(s1 - s2)
            if best is None or drift < best[0]:
                best = (drift, seg)
        i += max(1, (seg.stop - seg.start) // 4)
    if best is None:
        return None
    drift, seg = best
    X = np.column_stack([np.ones(seg.stop - seg.start), lr[seg], llr[seg]])
    coef, *_ = np.linalg.lstsq(X, lv[seg], rcond=None)
    return {"a": float(coef[1]), "b": float(coef[2]), "slope_drift": float(drift),
            "r_window": (float(np.exp(lr[seg.start])), float(np.exp(lr[seg.stop - 1])))}


def find_lambda0(phi: RadialProfile, theta: RadialProfile, p: float, R: float,
                 M_end: float, lambda_lo: Optional[float] = None,
                 lambda_hi: float = 0.0, bracket_rel: float = 1e-10,
                 r_min: Optional[float] = None,
                 n_per_decade: int = 48) -> ShootingResult:
    """Bisect the critical slope separating bounded extension from blow-up.

    Classifications must respect the comparison ordering (blow-up below,
    extension above); a flip raises :class:`NonMonotoneClassification`.
    The outcome is fitted on a rerun at the extension-side bracket endpoint
    with r_min lowered tenfold (the singular solution is the limit of the
    bounded continuations from above).
    """
    if r_min is None:
        r_min = R * 2.0 ** (-_DEFAULT_DEPTH)
    evidence_by_depth = {}

    def classify(lam: float, depth_r_min: float) -> str:
        spec = FVPSpec(phi=phi, theta=theta, p=p, R=R, M_end=M_end, lam=lam)
        traj = solve_fvp(spec, r_min=depth_r_min, n_per_decade=n_per_decade)
        kind = traj.termination.kind
        evidence_by_depth.setdefault(depth_r_min, {})[lam] = kind
        return kind

    def check_monotone():
        # the ordering must hold within each classifier depth separately (a
        # deeper horizon legitimately reclassifies near-critical slopes)
        for depth, ev in evidence_by_depth.items():
            lams = sorted(ev)
            last_blow = max((l for l in lams if ev[l] == "blowup"), default=None)
            first_ext = min((l for l in lams if ev[l] == "reached_rmin"), default=None)
            if last_blow is not None and first_ext is not None and last_blow > first_ext:
                raise NonMonotoneClassification(
                    f"blow-up at lambda={last_blow:g} above extension at {first_ext:g} "
                    f"(horizon r_min={depth:.3g})")

    def final_evidence():
        # report the deepest classifier's labels only: mixing horizons would
        # break the monotone ordering by construction
        deepest = min(evidence_by_depth)
        return tuple(sorted(evidence_by_depth[deepest].items()))

    def bisect(lo, hi, depth_r_min):
        while (hi - lo) > bracket_rel * (1.0 + abs(lo)):
            mid = 0.5 * (lo + hi)
            if classify(mid, depth_r_min) == "blowup":
                lo = mid
            else:
                hi = mid
        return lo, hi

    hi_kind = classify(lambda_hi, r_min)
    if hi_kind != "reached_rmin":
        return ShootingResult(lambda0=None, bracket_width=None,
                              outcome=Outcome("undetermined"),
                              evidence=final_evidence(),
                              diagnostics={"note": "no bounded continuation at lambda = 0"})
    if lambda_lo is None:
        _, tmap = gamma_and_t(phi, R)
        S = max(tmap(R * 0.5), 1e-6)
        lambda_lo = -max(1.0, S ** (-(p + 1.0) / (p - 1.0)))
    expansions = 0
    while classify(lambda_lo, r_min) == "reached_rmin":
        lambda_lo *= 2.0
        expansions += 1
        if expansions > 40:
            raise SearchBudgetExceeded("no blow-up found while doubling lambda_lo to 2^40")
    lo, hi = bisect(lambda_lo, lambda_hi, r_min)

    # refine at a tenfold deeper horizon: the deeper classifier sees blow-up
    # closer to the true separatrix, so walk the extension endpoint back up
    # if it flips, then re-tighten
    deep_r_min = r_min / 10.0
    step = max(hi - lo, bracket_rel)
    while classify(hi, deep_r_min) == "blowup" and hi + step <= lambda_hi:
        lo = hi
        hi = min(hi + step, lambda_hi)
        step *= 2.0
    if evidence_by_depth[deep_r_min].get(hi) == "reached_rmin" or \
            classify(hi, deep_r_min) == "reached_rmin":
        lo, hi = bisect(lo, hi, deep_r_min)
    check_monotone()
    lambda0 = 0.5 * (lo + hi)

    # outcome fit: extension-side endpoint at the deeper horizon, at
    # residual-grade accuracy; the tighter integration can shift the
    # effective separatrix by a few bracket widths, so walk up until the
    # accurate run extends
    lam_fit = hi
    step_fit = max(hi - lo, bracket_rel * (1.0 + abs(hi)))
    traj = None
    for _ in range(60):
        spec_fit = FVPSpec(phi=phi, theta=theta, p=p, R=R, M_end=M_end, lam=lam_fit)
        traj = solve_fvp(spec_fit, r_min=deep_r_min, n_per_decade=max(n_per_decade, 96),
                         rtol=1e-12, atol=1e-14)
        if traj.extends or lam_fit + step_fit > lambda_hi:
            break
        lam_fit = min(lam_fit + step_fit, lambda_hi)
        step_fit *= 2.0
    n_classified = sum(len(ev) for ev in evidence_by_depth.values())
    diagnostics = {"expansions": expansions, "n_classified": n_classified}
    outcome = Outcome("undetermined")
    if traj.extends:
        fit = _growth_fit(traj)
        head = traj.v[0]
        tail = traj.v[-1]
        if fit is not None and fit["a"] < -0.02 and tail > 10.0 * max(head, 1e-300):
            outcome = Outcome("singular", growth_a=fit["a"], growth_b=fit["b"])
            diagnostics["growth_fit"] = fit
            # ceiling and Harnack diagnostics over the tracked region (the
            # fit window and shallower); below it the bracket uncertainty
            # dominates and the trajectory no longer represents the
            # singular candidate
            tracked = (traj.v > 0) & (traj.r >= fit["r_window"][0])
            rt, vt = traj.r[tracked], traj.v[tracked]
            diagnostics["keller_max"] = float(np.max(vt * np.power(rt, 2.0 / (p - 1.0))))
            diagnostics["keller_constant"] = traj.ceiling_constant
            pos = traj.v > 0
            diagnostics["keller_max_full"] = float(np.max(
                traj.v[pos] * np.power(traj.r[pos], 2.0 / (p - 1.0))))
            lsr = -np.log(rt)      # ascending
            half = np.searchsorted(lsr, lsr + math.log(2.0))
            ratios = [vt[j] / vt[i] for i, j in enumerate(half) if j < len(rt)]
            if ratios:
                diagnostics["harnack_ratio_max"] = float(np.max(ratios))
        elif fit is not None and abs(fit["a"]) <= 0.02:
            outcome = Outcome("bounded", v_limit=float(tail))
        elif tail <= 10.0 * max(head, 1e-300):
            outcome = Outcome("bounded", v_limit=float(tail))
    return ShootingResult(lambda0=lambda0, bracket_width=hi - lo, outcome=outcome,
                          evidence=final_evidence(), trajectory=traj,
                          diagnostics=diagnostics)


# ---------------------------------------------------------------------------
# barrier construction (non-existence side)

@dataclass(frozen=True)
class BarrierResult:
    found: bool
    lam: Optional[float] = None
    r_turn: Optional[float] = None
    r_blowup: Optional[float] = None
    evidence: tuple = ()

    def to_dict(self) -> dict:
        return {"found": self.found, "lambda": self.lam, "r_turn": self.r_turn,
                "r_blowup": self.r_blowup,
                "evidence": [[lam, note] for lam, note in self.evidence]}


def barrier_construct(phi_pair, theta_lower: RadialProfile, p: float, R: float,
                      M_end: float = 1.0, lambda_seed: Optional[float] = None,
                      budget: int = 14) -> BarrierResult:
    """Search increasing lambda > 0 for a radial barrier: the trajectory
    falls inward from (M, lambda), turns at some R0 (v' = 0 with v > 0, the
    upper-envelope coefficients driving the monotone stretch), and the
    continuation below the turning radius blows up before reaching zero.

    A hit is numerical evidence against singular solutions at this p; the
    coefficient side switches exactly at the detected turning event.
    """
    phi_up, phi_low = phi_pair
    if lambda_seed is None:
        lambda_seed = 0.01 * max(M_end, 1e-6) / R
    ell0 = math.log(1.0 / R)
    evidence = []

    def rhs_up(s, y):
        v, w = y
        r2 = R * R * math.exp(-2.0 * s)
        ph = phi_up.at_logr(s + ell0)
        th = theta_lower.at_logr(s + ell0)
        return (w, (ph - 1.0) * w + r2 * th * abs(v) ** (p - 1.0) * v)

    def ev_turn(s, y):
        return y[1]            # w = -r v' crosses zero at the turning radius
    ev_turn.terminal = True
    ev_turn.direction = 1.0

    def ev_zero(s, y):
        return y[0]
    ev_zero.terminal = True
    ev_zero.direction = -1.0

    s_max = _DEFAULT_DEPTH * math.log(2.0)
    for j in range(budget):
        lam = lambda_seed * 2.0 ** j
        sol = solve_ivp(rhs_up, (0.0, s_max), (M_end, -R * lam), method="DOP853",
                        rtol=_RTOL, atol=_ATOL, events=[ev_turn, ev_zero])
        if sol.t_events[1].size:
            evidence.append((lam, "overshoot: v reached zero before turning"))
            continue
        if not sol.t_events[0].size:
            evidence.append((lam, "no turning point before r_min"))
            continue
        s0 = float(sol.t_events[0][0])
        v0 = float(sol.y_events[0][0][0])
        r0 = R * math.exp(-s0)
        if v0 <= 0:
            evidence.append((lam, "turning with nonpositive value"))
            continue
        spec2 = FVPSpec(phi=phi_low, theta=theta_lower, p=p, R=r0, M_end=v0, lam=0.0)
        try:
            traj2 = solve_fvp(spec2, r_min=r0 * 2.0 ** (-_DEFAULT_DEPTH))
        except StiffnessFailure:
            evidence.append((lam, "stiffness failure past the turning point"))
            continue
        if traj2.termination.kind == "blowup":
            evidence.append((lam, f"barrier: turn at {r0:.4g}, blow-up at {traj2.termination.r_prime:.4g}"))
            return BarrierResult(found=True, lam=lam, r_turn=r0,
                                 r_blowup=traj2.termination.r_prime,
                                 evidence=tuple(evidence))
        evidence.append((lam, "continuation extends below the turning point"))
    return BarrierResult(found=False, evidence=tuple(evidence))


# ---------------------------------------------------------------------------
# sublinear subsolutions

def subsolution_power(f: CoefficientField, p: float, sigma: Optional[float] = None,
                      n_grid: int = 48):
    """Witness (m, alpha) with u = m r^{-alpha} solving the inequality for
    p < 1, certifying that the sublinear critical exponent is -infinity.

    alpha satisfies alpha + 2 >= alpha p + sigma and exceeds
    sup Env Psi - 2; the returned m is twice the minimal admissible value
    (the constraint scales like m^{1-p} >= sup_r c r^e / (alpha (2 + alpha
    - Env Psi(r)))).
    """
    from .envelopes import radial_envelopes

    if p >= 1:
        raise ValueError("subsolution construction applies to p < 1")
    if sigma is None:
        sigma = f.sigma
    R = f.radius
    env_psi = radial_envelopes(f, "psi").upper
    env_theta = radial_envelopes(f, "theta").upper
    rs = R * 2.0 ** (-np.arange(n_grid, dtype=float))
    psi_vals = np.array([env_psi(r) for r in rs])
    c_sigma = float(np.max([env_theta(r) * r ** sigma for r in rs]))
    alpha = max(0.0, (sigma - 2.0) / (1.0 - p), float(psi_vals.max()) - 2.0) + 1.0
    e = alpha + 2.0 - alpha * p - sigma          # >= 1 by construction
    bound = np.max(c_sigma * rs ** e / (alpha * (2.0 + alpha - psi_vals)))
    m = 2.0 * float(bound) ** (1.0 / (1.0 - p))
    return m, alpha
