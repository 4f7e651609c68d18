"""Operator data: diffusion matrix a, drift b, potential K.

A field evaluates the pointwise effective dimension

    Psi(x) = (Tr a(x) + b(x).x) / ((a(x) x, x) / |x|^2)

and the weight ratio Theta(x) = K(x) / ((a(x) x, x) / |x|^2).  Psi equals the
space dimension N for the Laplacian and controls critical exponents the way
N does in the classical setting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional, Union

import numpy as np

from .errors import (ConfigError, DegenerateDenominator, EllipticityViolation)
from .profiles import RadialProfile
from .sampling import unit_directions

__all__ = [
    "GilbargSerrin", "DiagonalPower", "GeneralMatrix", "PowerLaw", "Bounded",
    "CoefficientField", "PointwiseRatios", "psi_pointwise", "theta_pointwise",
    "gs_psi_closed_form", "builtin_pert", "builtin_unstable", "load_field_config",
    "parse_config_text", "field_from_config", "empirical_ellipticity",
]


@dataclass(frozen=True)
class GilbargSerrin:
    """a = I + gamma(|x|) x (x) x / |x|^2,  b = beta(|x|) x / |x|^2."""
    gamma: RadialProfile
    beta: RadialProfile


@dataclass(frozen=True)
class DiagonalPower:
    """a_ii = (1 + x_i^2)^k, zero drift."""
    k: float


@dataclass(frozen=True)
class GeneralMatrix:
    """Pointwise callbacks: a_eval(x) -> (N,N) symmetric, b_eval(x) -> (N,)."""
    a_eval: Callable[[np.ndarray], np.ndarray]
    b_eval: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class PowerLaw:
    """K(x) = prefactor(|x|) * |x|^(-sigma), sigma >= 0."""
    sigma: float
    prefactor: RadialProfile


@dataclass(frozen=True)
class Bounded:
    """K(x) = profile(|x|), bounded with positive essential infimum."""
    profile: RadialProfile


Kind = Union[GilbargSerrin, DiagonalPower, GeneralMatrix]
Potential = Union[PowerLaw, Bounded]


@dataclass(frozen=True)
class PointwiseRatios:
    psi: float
    theta: float


@dataclass(frozen=True)
class CoefficientField:
    dimension: int
    radius: float
    kind: Kind
    potential: Potential
    name: str = ""
    config_echo: dict = dc_field(default_factory=dict)

    @property
    def sigma(self) -> float:
        return self.potential.sigma if isinstance(self.potential, PowerLaw) else 0.0

    @property
    def is_radial(self) -> bool:
        """Psi and Theta depend on |x| only."""
        if isinstance(self.kind, GilbargSerrin):
            return True
        if isinstance(self.kind, DiagonalPower):
            return self.kind.k == 0.0
        return False

    @property
    def potential_bounded(self) -> bool:
        return isinstance(self.potential, Bounded)

    def matrix_at(self, x: np.ndarray):
        """(a(x), b(x)) as dense arrays."""
        x = np.asarray(x, dtype=float)
        n = self.dimension
        rr = float(np.dot(x, x))
        if rr == 0.0:
            raise DegenerateDenominator("matrix requested at the origin")
        if isinstance(self.kind, GilbargSerrin):
            r = math.sqrt(rr)
            g = self.kind.gamma(r)
            b0 = self.kind.beta(r)
            a = np.eye(n) + g * np.outer(x, x) / rr
            b = b0 * x / rr
            return a, b
        if isinstance(self.kind, DiagonalPower):
            a = np.diag((1.0 + x ** 2) ** self.kind.k)
            return a, np.zeros(n)
        a = np.asarray(self.kind.a_eval(x), dtype=float)
        b = np.asarray(self.kind.b_eval(x), dtype=float)
        return a, b

    def potential_value(self, r: float) -> float:
        if isinstance(self.potential, PowerLaw):
            return self.potential.prefactor(r) * r ** (-self.potential.sigma)
        return self.potential.profile(r)

    def log_potential_at_logr(self, ell: float) -> float:
        """ln K at ln(1/r) = ell."""
        if isinstance(self.potential, PowerLaw):
            pref = self.potential.prefactor.at_logr(ell)
            if pref <= 0:
                raise DegenerateDenominator("potential prefactor must stay positive")
            return math.log(pref) + self.potential.sigma * ell
        v = self.potential.profile.at_logr(ell)
        if v <= 0:
            raise DegenerateDenominator("bounded potential must stay positive")
        return math.log(v)


def _quadratic_ratio(a: np.ndarray, x: np.ndarray) -> float:
    rr = float(np.dot(x, x))
    q = float(x @ a @ x) / rr
    if q <= 0.0:
        raise DegenerateDenominator(f"(a x, x)/|x|^2 = {q:.3g} <= 0")
    return q


def psi_pointwise(f: CoefficientField, x) -> float:
    """Effective dimension at ``x != 0``."""
    x = np.asarray(x, dtype=float)
    a, b = f.matrix_at(x)
    q = _quadratic_ratio(a, x)
    return (float(np.trace(a)) + float(np.dot(b, x))) / q


def theta_pointwise(f: CoefficientField, x) -> float:
    x = np.asarray(x, dtype=float)
    a, _ = f.matrix_at(x)
    q = _quadratic_ratio(a, x)
    return f.potential_value(float(np.linalg.norm(x))) / q


def gs_psi_closed_form(f: CoefficientField, r: float) -> float:
    """Psi = 1 + (N - 1 + beta(r)) / (1 + gamma(r)) for a Gilbarg-Serrin field."""
    if not isinstance(f.kind, GilbargSerrin):
        raise TypeError("closed form applies to Gilbarg-Serrin fields only")
    return 1.0 + (f.dimension - 1.0 + f.kind.beta(r)) / (1.0 + f.kind.gamma(r))


def psi_directional(f: CoefficientField, r: float, dirs: np.ndarray) -> np.ndarray:
    """Vectorized Psi over unit directions at radius ``r``."""
    if isinstance(f.kind, GilbargSerrin):
        return np.full(len(dirs), gs_psi_closed_form(f, r))
    if isinstance(f.kind, DiagonalPower):
        x = r * dirs
        ai = (1.0 + x ** 2) ** f.kind.k
        num = ai.sum(axis=1)
        den = (dirs ** 2 * ai).sum(axis=1)
        if np.any(den <= 0):
            raise DegenerateDenominator("directional denominator <= 0")
        return num / den
    out = np.empty(len(dirs))
    for i, d in enumerate(dirs):
        out[i] = psi_pointwise(f, r * d)
    return out


def theta_directional(f: CoefficientField, r: float, dirs: np.ndarray) -> np.ndarray:
    K = f.potential_value(r)
    if isinstance(f.kind, GilbargSerrin):
        den = 1.0 + f.kind.gamma(r)
        if den <= 0:
            raise DegenerateDenominator("1 + gamma <= 0")
        return np.full(len(dirs), K / den)
    if isinstance(f.kind, DiagonalPower):
        x = r * dirs
        ai = (1.0 + x ** 2) ** f.kind.k
        den = (dirs ** 2 * ai).sum(axis=1)
        if np.any(den <= 0):
            raise DegenerateDenominator("directional denominator <= 0")
        return K / den
    out = np.empty(len(dirs))
    for i, d in enumerate(dirs):
        out[i] = theta_pointwise(f, r * d)
    return out


# ---------------------------------------------------------------------------
# builtin families

def builtin_pert(N: int, beta0: float, radius: float = 1.0) -> CoefficientField:
    """Laplacian plus radial drift beta0 * x/|x|^2; Psi is identically N + beta0."""
    return CoefficientField(
        dimension=N, radius=radius,
        kind=GilbargSerrin(RadialProfile.constant(0.0, radius),
                           RadialProfile.constant(beta0, radius)),
        potential=Bounded(RadialProfile.constant(1.0, radius)),
        name=f"pert(N={N}, beta0={beta0:g})",
        config_echo={"family": "gilbarg_serrin", "N": N, "beta": beta0},
    )


def builtin_unstable(alpha: float, phi: RadialProfile, N: int = 3,
                     radius: float = 1.0, mean_tol: float = 1e-8) -> CoefficientField:
    """Log-periodic family with Psi(x) = 1 + phi(ln(1/|x|)).

    ``phi`` must be bounded, 1-periodic in its argument with unit-interval
    mean ``alpha - 1``.  gamma(r) = -1 + (N-1)/phi(ln(1/r)), zero drift.
    """
    from scipy.integrate import quad

    ts = np.linspace(0.0, 1.0, 4097)
    vals = np.array([phi.evaluator(t) for t in ts])
    if vals.min() <= 0.0:
        raise EllipticityViolation(f"inf phi = {vals.min():.3g} <= 0 breaks uniform ellipticity")
    mean, _ = quad(phi.evaluator, 0.0, 1.0, limit=200)
    if abs(mean - (alpha - 1.0)) > max(mean_tol, 1e-6 * abs(alpha - 1.0) + 1e-9):
        raise ValueError(f"unit-interval mean of phi is {mean:.9g}, expected {alpha - 1.0:.9g}")

    def gamma_log(ell, _p=phi):
        return -1.0 + (N - 1.0) / _p.evaluator(ell)

    gamma = RadialProfile.from_callable(
        lambda r: gamma_log(math.log(1.0 / r)), radius,
        log_evaluator=gamma_log, label=f"-1+{N - 1}/phi(ln(1/r))",
    )
    return CoefficientField(
        dimension=N, radius=radius,
        kind=GilbargSerrin(gamma, RadialProfile.constant(0.0, radius)),
        potential=Bounded(RadialProfile.constant(1.0, radius)),
        name=f"unstable(alpha={alpha:g})",
        config_echo={"family": "unstable", "alpha": alpha, "N": N},
    )


# ---------------------------------------------------------------------------
# sampled structural checks

def empirical_ellipticity(f: CoefficientField, n_shells: int = 12, n_dirs: int = 64,
                          seed: int | None = None) -> dict:
    """Sampled ellipticity constant, drift bound and potential infimum.

    Reports an empirical nu with  nu^-1 |xi|^2 <= (a xi, xi) <= nu |xi|^2
    over the sample; raises :class:`EllipticityViolation` if a sampled form
    is non-positive.
    """
    N, R = f.dimension, f.radius
    dirs = unit_directions(n_dirs, N, seed)
    xis = unit_directions(n_dirs, N, (seed or 0) + 1)
    qmin, qmax = math.inf, -math.inf
    drift_c = 0.0
    k_inf = math.inf
    for k in range(n_shells):
        r = R * 2.0 ** (-3.0 * k / max(1, n_shells - 1) * 8)
        for d in dirs[: max(4, n_dirs // 4)]:
            x = r * d
            a, b = f.matrix_at(x)
            for xi in xis[: max(4, n_dirs // 8)]:
                q = float(xi @ a @ xi)
                if q <= 0.0:
                    raise EllipticityViolation(f"(a xi, xi) = {q:.3g} <= 0 at |x|={r:.3g}")
                qmin, qmax = min(qmin, q), max(qmax, q)
            drift_c = max(drift_c, float(np.max(np.abs(b))) * r)
        k_inf = min(k_inf, f.potential_value(r))
    nu = max(qmax, 1.0 / qmin)
    return {"nu": nu, "form_min": qmin, "form_max": qmax,
            "drift_bound": drift_c, "potential_inf": k_inf}


# ---------------------------------------------------------------------------
# config files: human-readable `key = value` lines, '#' comments

_KNOWN_KEYS = {"N", "R", "family", "gamma", "beta", "k", "sigma", "K", "alpha", "wave", "name"}
_FAMILIES = {"gilbarg_serrin", "diagonal_power", "general", "unstable"}


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=lineno, column=1)
        key, _, value = line.partition("=")
        col = len(key) - len(key.lstrip()) + 1
        key = key.strip()
        value = value.strip()
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"unknown config key {key!r}", line=lineno, column=col)
        if key in out:
            raise ConfigError(f"duplicate key {key!r}", line=lineno, column=col)
        if value.startswith('"') and value.endswith('"') and len(value) >= 2:
            out[key] = value[1:-1]
        else:
            out[key] = value
    return out


def _cfg_float(cfg, key, default=None):
    if key not in cfg:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    try:
        return float(cfg[key])
    except ValueError:
        raise ConfigError(f"key {key!r} must be a number, got {cfg[key]!r}")


def field_from_config(cfg: dict, name: str = "") -> CoefficientField:
    family = cfg.get("family")
    if family is None:
        raise ConfigError("missing required key 'family'")
    if family not in _FAMILIES:
        raise ConfigError(f"unknown family {family!r} (expected one of {sorted(_FAMILIES)})")
    N = int(_cfg_float(cfg, "N"))
    if N < 1:
        raise ConfigError("N must be a positive integer")
    R = _cfg_float(cfg, "R", 1.0)
    sigma = _cfg_float(cfg, "sigma", 0.0)
    if sigma < 0:
        raise ConfigError("sigma must be >= 0")
    pref = RadialProfile.from_expr(cfg.get("K", "1"), R)
    potential = PowerLaw(sigma, pref) if sigma > 0 else Bounded(pref)

    if family == "gilbarg_serrin":
        gamma = RadialProfile.from_expr(cfg.get("gamma", "0"), R)
        beta = RadialProfile.from_expr(cfg.get("beta", "0"), R)
        kind = GilbargSerrin(gamma, beta)
    elif family == "diagonal_power":
        kind = DiagonalPower(_cfg_float(cfg, "k"))
    elif family == "unstable":
        alpha = _cfg_float(cfg, "alpha")
        wave = cfg.get("wave", "sin")
        phi = unstable_wave(alpha, wave)
        return builtin_unstable(alpha, phi, N=N, radius=R)
    else:
        raise ConfigError("family 'general' takes pointwise callbacks and is available through the API only")
    field = CoefficientField(dimension=N, radius=R, kind=kind, potential=potential,
                             name=name or cfg.get("name", family), config_echo=dict(cfg))
    _check_gs_ellipticity(field)
    return field


def unstable_wave(alpha: float, wave: str) -> RadialProfile:
    """1-periodic waveforms with unit-interval mean alpha - 1."""
    if wave == "sin":
        f = lambda t: alpha - 1.0 + 0.5 * math.sin(2.0 * math.pi * t)
    elif wave == "square":
        f = lambda t: alpha - 1.5 if (t % 1.0) < 0.5 else alpha - 0.5
    else:
        raise ConfigError(f"unknown wave {wave!r} (expected sin or square)")
    return RadialProfile.from_callable(f, 1.0, label=f"{wave} wave")


def _check_gs_ellipticity(f: CoefficientField, n: int = 64):
    if not isinstance(f.kind, GilbargSerrin):
        return
    R = f.radius
    worst = math.inf
    for k in range(n):
        r = R * 2.0 ** (-k)
        worst = min(worst, 1.0 + f.kind.gamma(r))
    if worst <= 0.0:
        raise EllipticityViolation(f"inf(1 + gamma) = {worst:.3g} <= 0 on the sampled grid")


def load_field_config(path) -> CoefficientField:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    cfg = parse_config_text(text)
    return field_from_config(cfg, name=str(path))
