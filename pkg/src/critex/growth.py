"""Growth functions M(r), m(r), the maps Gamma(r), t(r), and the
upper/lower dimensions (Cesaro limits of the log-averaged envelopes).

All integrals run in u = ln(R/r).  Dimension estimates use iterative
deepening with Aitken extrapolation on monotone tails and window extrema on
oscillatory ones; the reported uncertainty half-width is never dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .envelopes import EnvelopePair, radial_envelopes, sampled_envelope_profiles
from .errors import NonConvergent, SearchBudgetExceeded
from .fields import CoefficientField, GilbargSerrin, DiagonalPower, GeneralMatrix, psi_pointwise
from .profiles import RadialProfile
from .quadlog import LN2, Cumulative, CumulativeExp

__all__ = [
    "GrowthIntegrals", "DimensionEstimate", "GrowthSummary", "GSearchResult",
    "growth_integrals", "gamma_and_t", "dimension_estimates",
    "restricted_g_search", "growth_summary",
]

_MAX_PLAIN_LOGR = 700.0
_LEVELS_DEEP = 2048
_LEVELS_PLAIN = 512
_LEVELS_SAMPLED = 64
_WINDOW = 8


def _logr_fn(profile: RadialProfile, R: float) -> Callable[[float], float]:
    ell0 = math.log(1.0 / R)
    return lambda u: profile.at_logr(u + ell0)


@dataclass
class GrowthIntegrals:
    """Cumulative log-integrals of the Psi envelopes.

    log M(r) = I_Env(ln(R/r)), log m(r) = I_env(ln(R/r)); M(R) = m(R) = 1.
    """

    R: float
    cum_upper: Cumulative
    cum_lower: Cumulative
    bigM: RadialProfile
    smallm: RadialProfile

    def log_bigM(self, u: float) -> float:
        return self.cum_upper.value_fast(u)

    def log_smallm(self, u: float) -> float:
        return self.cum_lower.value_fast(u)


def growth_integrals(env: EnvelopePair, R: float) -> GrowthIntegrals:
    """M(r) = exp int_r^R EnvPsi dtau/tau and the analogous m(r)."""
    cum_up = Cumulative(_logr_fn(env.upper, R))
    cum_lo = Cumulative(_logr_fn(env.lower, R))

    def make_profile(cum, label):
        def evaluator(r: float) -> float:
            return math.exp(cum.value_fast(math.log(R / r)))
        return RadialProfile.from_callable(
            evaluator, R, log_evaluator=lambda ell: math.exp(cum.value_fast(ell - math.log(1.0 / R))),
            label=label)

    return GrowthIntegrals(R=R, cum_upper=cum_up, cum_lower=cum_lo,
                           bigM=make_profile(cum_up, "M"), smallm=make_profile(cum_lo, "m"))


def gamma_and_t(phi: RadialProfile, R: float):
    """Gamma(r) = exp{-int_r^R phi dtau/tau} and t(r) = int_r^R drho/Gamma(rho).

    With phi = EnvPsi - 1 one has Gamma(r) = R / (r M(r)) identically.
    """
    cum_phi = Cumulative(_logr_fn(phi, R))
    gamma_prof = RadialProfile.from_callable(
        lambda r: math.exp(-cum_phi.value_fast(math.log(R / r))), R, label="Gamma")
    # t(r) = int_0^U R e^{-u} exp(I_phi(u)) du, kept in log form for safety
    log_t = CumulativeExp(lambda u: math.log(R) - u + cum_phi.value_fast(u))
    t_prof = RadialProfile.from_callable(
        lambda r: math.exp(log_t.log_value(math.log(R / r))), R, label="t")
    return gamma_prof, t_prof


# ---------------------------------------------------------------------------
# dimension estimates

@dataclass(frozen=True)
class DimensionEstimate:
    dim_upper: float
    dim_lower: float
    unc_upper: float
    unc_lower: float
    levels: int
    tail_inf_env_upper: float  # running infimum of Env Psi over the deep tail
    method_upper: str
    method_lower: str


def _aitken(d1: float, d2: float, d3: float):
    """Limit of a sequence with geometric correction ratios, or None."""
    e1, e2 = d2 - d1, d3 - d2
    if e1 == 0.0 or e2 == 0.0:
        return d3, 0.0
    rho = e2 / e1
    if not (0.0 < rho < 0.98):
        return None
    corr = e2 * rho / (1.0 - rho)
    return d3 + corr, abs(corr)


def _tail_estimate(D: np.ndarray, side: int):
    """(value, uncertainty, method) for limsup (side=+1) / liminf (side=-1)."""
    K = len(D)
    window = D[-_WINDOW:]
    raw = float(window.max() if side > 0 else window.min())
    tail = D[-min(16, K // 2):]
    diffs = np.diff(tail)
    scale = max(1.0, float(np.max(np.abs(D))))
    monotone = np.all(diffs >= -1e-13 * scale) or np.all(diffs <= 1e-13 * scale)
    half_gap = abs(float(D[-1] - D[K // 2 - 1]))
    if monotone and K >= 16:
        a1 = _aitken(D[K // 4 - 1], D[K // 2 - 1], D[K - 1])
        a2 = _aitken(D[K // 8 - 1], D[K // 4 - 1], D[K // 2 - 1])
        if a1 is not None and a2 is not None:
            est1, corr1 = a1
            est2, _ = a2
            if abs(est1 - est2) <= 0.5 * (abs(corr1) + 1e-12) + 1e-9:
                unc = max(abs(est1 - est2) * 2.0, 1e-12)
                return est1, unc, "aitken"
        return raw, max(half_gap * 2.0, 1e-12), "window-monotone"
    spread = float(window.max() - window.min())
    return raw, max(spread, half_gap, 1e-12), "window"


def dimension_estimates(env: EnvelopePair, R: float, levels: Optional[int] = None,
                        target: float = 5e-4) -> DimensionEstimate:
    """Upper/lower dimensions from D(r) = (1/|ln r|) int_r^R EnvPsi dtau/tau.

    Evaluates D on the dyadic grid r_k = R 2^{-k}, deepening the grid until
    the estimate stabilizes below ``target`` (or the radius representation
    caps the depth), then extrapolates monotone tails and takes window
    extrema over the 8 deepest shells otherwise.  Raises
    :class:`NonConvergent` when the spread stays above 0.5 and no
    asymptotic hint is available.
    """
    ell0 = math.log(1.0 / R)
    deep = env.upper.deep_evaluable and env.lower.deep_evaluable
    if levels is None:
        if env.source == "shell_sampled":
            levels = _LEVELS_SAMPLED
        else:
            levels = _LEVELS_DEEP if deep else _LEVELS_PLAIN
    if not deep:
        cap = int((_MAX_PLAIN_LOGR - max(ell0, 0.0)) / LN2) - 2
        levels = min(levels, cap)
    cum_up = Cumulative(_logr_fn(env.upper, R))
    cum_lo = Cumulative(_logr_fn(env.lower, R))

    steps = [k for k in (64, 256, 1024, _LEVELS_DEEP) if k < levels] + [levels]
    steps = sorted({min(s, levels) for s in steps})
    result = None
    for K in steps:
        ks = np.arange(1, K + 1)
        ells = ks * LN2 + ell0
        valid = ells > 0.5
        ks, ells = ks[valid], ells[valid]
        I_up = np.array([cum_up(k * LN2) for k in ks])
        I_lo = np.array([cum_lo(k * LN2) for k in ks])
        D_up = I_up / ells
        D_lo = I_lo / ells
        up, unc_up, meth_up = _tail_estimate(D_up, +1)
        lo, unc_lo, meth_lo = _tail_estimate(D_lo, -1)
        tail_part = max(1, len(ks) // 2)
        tail_inf = min(env.upper.at_logr(ell) for ell in ells[-tail_part::max(1, tail_part // 32)])
        result = DimensionEstimate(up, lo, unc_up, unc_lo, int(ks[-1]), float(tail_inf),
                                   meth_up, meth_lo)
        if max(unc_up, unc_lo) <= target:
            break
    hinted = env.upper.asymptotic_hint is not None or env.lower.asymptotic_hint is not None
    if max(result.unc_upper, result.unc_lower) > 0.5 and not hinted:
        raise NonConvergent(
            f"dimension tail spread {max(result.unc_upper, result.unc_lower):.3g} exceeds 0.5")
    return result


# ---------------------------------------------------------------------------
# restricted search over changes of variable g

@dataclass(frozen=True)
class GSearchResult:
    diag: tuple  # diagonal of the best g
    dim_upper: float
    dim_lower: float
    mode: str
    evaluations: int
    improved: bool


def _psi_g_directional(field: CoefficientField, d: np.ndarray, r: float,
                       dirs: np.ndarray) -> np.ndarray:
    """Psi_g over directions for diagonal g = diag(d): a_g(x) = g a(g^{-1}x) g."""
    x = r * dirs                      # (n, N)
    y = x / d                         # g^{-1} x, so g y = x
    rr = r * r
    if isinstance(field.kind, GilbargSerrin):
        ny2 = (y ** 2).sum(axis=1)
        ry = np.sqrt(ny2)
        g = np.array([field.kind.gamma(v) for v in ry])
        b = np.array([field.kind.beta(v) for v in ry])
        d2 = d ** 2
        # a_g = g g^T + gamma (g yhat)(g yhat)^T with g yhat = x/|y|
        tr = d2.sum() + g * rr / ny2
        quad = (d2 * x ** 2).sum(axis=1) + g * rr * rr / ny2
        drift = b * rr / ny2
        return (tr + drift) / (quad / rr)
    if isinstance(field.kind, DiagonalPower):
        ai = (1.0 + y ** 2) ** field.kind.k   # a(y) diagonal
        d2 = d ** 2
        tr = (d2 * ai).sum(axis=1)
        quad = (d2 * ai * dirs ** 2).sum(axis=1) * rr
        return tr / (quad / rr)
    out = np.empty(len(dirs))
    G = np.diag(d)
    for i, xi in enumerate(x):
        a, b = field.matrix_at(xi / d)
        ag = G @ a @ G
        bg = G @ b
        out[i] = (np.trace(ag) + bg @ xi) / ((xi @ ag @ xi) / rr)
    return out


def _dims_for_diag(field, d, levels, n_dirs):
    fn = lambda r, dirs: _psi_g_directional(field, d, r, dirs)
    upper, lower = sampled_envelope_profiles(fn, field.radius, field.dimension,
                                             n_dirs_fixed=n_dirs)
    env = EnvelopePair(upper=upper, lower=lower, source="shell_sampled")
    est = dimension_estimates(env, field.radius, levels=levels)
    return est


def restricted_g_search(field: CoefficientField, mode: str = "diagonal",
                        levels: int = 32, n_dirs: int = 128,
                        budget: int = 48) -> GSearchResult:
    """Search g in {identity} or {positive diagonal} minimizing the upper
    dimension (coordinate-wise multiplicative line search).

    A non-identity g is accepted only when it improves the upper dimension
    by more than 1e-3, so isotropically optimal families (in particular
    every Gilbarg-Serrin field) return the identity.
    """
    N = field.dimension
    identity = np.ones(N)
    if mode == "identity" or isinstance(field.kind, GilbargSerrin):
        env = radial_envelopes(field, "psi")
        est = dimension_estimates(env, field.radius)
        return GSearchResult(tuple(identity), est.dim_upper, est.dim_lower,
                             mode="identity", evaluations=1, improved=False)
    if mode != "diagonal":
        raise ValueError("mode must be 'identity' or 'diagonal'")

    evaluations = 0
    cache = {}

    def score(d):
        nonlocal evaluations
        key = tuple(np.round(d, 12))
        if key not in cache:
            if evaluations >= budget:
                raise SearchBudgetExceeded(f"g-search exceeded {budget} dimension evaluations")
            evaluations += 1
            cache[key] = _dims_for_diag(field, np.asarray(d, dtype=float), levels, n_dirs)
        return cache[key]

    best_d = identity.copy()
    best = score(best_d)
    for _pass in range(2):
        moved = False
        for i in range(N):
            for factor in (0.5, 2.0):
                trial = best_d.copy()
                trial[i] *= factor
                est = score(trial)
                if est.dim_upper < best.dim_upper - 1e-3:
                    best_d, best, moved = trial, est, True
        if not moved:
            break
    improved = bool(np.any(best_d != identity))
    return GSearchResult(tuple(best_d), best.dim_upper, best.dim_lower,
                         mode="diagonal", evaluations=evaluations, improved=improved)


# ---------------------------------------------------------------------------
# one-stop summary

@dataclass
class GrowthSummary:
    field: CoefficientField
    env_psi: EnvelopePair
    env_theta: EnvelopePair
    integrals: GrowthIntegrals
    Gamma: RadialProfile
    tmap: RadialProfile
    dims: DimensionEstimate
    psi_upper_simple: float
    psi_lower_simple: float

    @property
    def bigM(self) -> RadialProfile:
        return self.integrals.bigM

    @property
    def smallm(self) -> RadialProfile:
        return self.integrals.smallm

    @property
    def dim_upper(self) -> float:
        return self.dims.dim_upper

    @property
    def dim_lower(self) -> float:
        return self.dims.dim_lower

    def log_bigM(self, u: float) -> float:
        return self.integrals.log_bigM(u)

    def log_smallm(self, u: float) -> float:
        return self.integrals.log_smallm(u)


def growth_summary(field: CoefficientField, levels: Optional[int] = None) -> GrowthSummary:
    env_psi = radial_envelopes(field, "psi")
    env_theta = radial_envelopes(field, "theta")
    integrals = growth_integrals(env_psi, field.radius)
    phi = RadialProfile.from_callable(
        lambda r: env_psi.upper(r) - 1.0, field.radius,
        log_evaluator=(lambda ell: env_psi.upper.at_logr(ell) - 1.0)
        if env_psi.upper.deep_evaluable else None,
        label="EnvPsi-1")
    Gamma, tmap = gamma_and_t(phi, field.radius)
    dims = dimension_estimates(env_psi, field.radius, levels=levels)
    ell0 = math.log(1.0 / field.radius)
    tail = [dims.levels * LN2 * f + ell0 for f in (0.5, 0.65, 0.8, 0.9, 1.0)]
    psi_hi = max(env_psi.upper.at_logr(ell) for ell in tail)
    psi_lo = min(env_psi.lower.at_logr(ell) for ell in tail)
    return GrowthSummary(field=field, env_psi=env_psi, env_theta=env_theta,
                         integrals=integrals, Gamma=Gamma, tmap=tmap, dims=dims,
                         psi_upper_simple=float(psi_hi), psi_lower_simple=float(psi_lo))
