import math

import numpy as np
import pytest

from critex.envelopes import (appendix_remainder, avg_s, radial_envelopes,
                              sampled_envelope_profiles)
from critex.fields import (Bounded, CoefficientField, DiagonalPower,
                           psi_directional)
from critex.profiles import RadialProfile
from critex.quadlog import _panel_quad
from critex.sampling import unit_directions


def diag_field(k=1.0, N=3):
    return CoefficientField(N, 1.0, DiagonalPower(k),
                            Bounded(RadialProfile.constant(1.0, 1.0)))


def test_laplacian_envelopes(lap3):
    env = radial_envelopes(lap3, "psi")
    assert env.source == "analytic"
    for r in (0.9, 0.1, 1e-6):
        assert env.upper(r) == 3.0 == env.lower(r)


def test_gs_envelope_formula():
    # gamma = 1/ln(1/r): Env Psi(r) = N - (N-1) gamma/(1+gamma)
    from critex.fields import GilbargSerrin
    R = math.exp(-1.0)
    gamma = RadialProfile.from_expr("ln(1/r)^(-1)", R)
    f = CoefficientField(3, R, GilbargSerrin(gamma, RadialProfile.constant(0.0, R)),
                         Bounded(RadialProfile.constant(1.0, R)))
    env = radial_envelopes(f, "psi")
    for r in (R / 2, R / 100, R * 2.0 ** (-30)):
        g = gamma(r)
        assert env.upper(r) == pytest.approx(3.0 - 2.0 * g / (1.0 + g), rel=1e-12)
        assert env.lower(r) == env.upper(r)


def test_sampled_envelopes_against_bruteforce():
    f = diag_field(k=1.0)
    env = radial_envelopes(f, "psi")
    assert env.source == "shell_sampled"
    rng = np.random.default_rng(3)
    for r in (0.5, 0.1, 0.01):
        dirs = rng.normal(size=(20000, 3))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        vals = psi_directional(f, r, dirs)
        lo, hi = vals.min(), vals.max()
        spread = max(hi - lo, 1e-9)
        assert env.upper(r) >= hi - 0.05 * spread
        assert env.upper(r) <= hi + 0.05 * spread + 1e-9
        assert env.lower(r) <= lo + 0.05 * spread
        assert env.lower(r) >= lo - 0.05 * spread - 1e-9
        assert env.lower(r) <= env.upper(r)


def test_sampled_envelope_shrinks_near_zero():
    env = radial_envelopes(diag_field(k=1.0), "psi")
    spreads = [env.spread(r) for r in (0.5, 0.05, 0.005)]
    assert spreads[0] > spreads[1] > spreads[2]
    assert spreads[2] < 1e-3


def test_envelope_idempotence_on_radial_data():
    # a direction-independent shell function must come back unchanged
    f = lambda r, dirs: np.full(len(dirs), 2.0 + math.sin(math.log(1.0 / r)))
    upper, lower = sampled_envelope_profiles(f, 1.0, 3)
    for r in (0.5, 0.03, 1e-4):
        want = 2.0 + math.sin(math.log(1.0 / r))
        assert upper(r) == pytest.approx(want, abs=2e-3)
        assert lower(r) == pytest.approx(want, abs=2e-3)
        assert lower(r) <= upper(r)


def test_avg_constant():
    c = RadialProfile.constant(3.0, 1.0)
    pos = avg_s(c, 1.0)
    for r in (0.9, 0.1, 1e-5):
        assert pos(r) == pytest.approx(3.0, rel=1e-9)
    neg = avg_s(c, -1.0)
    # boundary term O(r^{|s|}) vanishes near zero
    assert neg(1e-6) == pytest.approx(3.0, rel=1e-5)
    assert abs(neg(0.5) - 3.0) == pytest.approx(3.0 * 0.5, rel=1e-6)


def test_avg_linear_profile():
    f = RadialProfile.from_expr("r", 1.0)
    a1 = avg_s(f, 1.0)
    for r in (0.8, 0.2, 0.01):
        assert a1(r) == pytest.approx(r / 2.0, rel=1e-9)


def test_avg_linearity_and_positivity(rng):
    f = RadialProfile.from_expr("2+sin(1/r)", 1.0)
    g = RadialProfile.from_expr("r", 1.0)
    fg = RadialProfile.from_callable(lambda r: f(r) + 2.5 * g(r), 1.0)
    af, ag, afg = avg_s(f, -2.0), avg_s(g, -2.0), avg_s(fg, -2.0)
    for r in (0.7, 0.09, 0.003):
        assert afg(r) == pytest.approx(af(r) + 2.5 * ag(r), rel=1e-8)
        assert af(r) >= 0.0  # f >= 1 > 0


def test_appendix_identity_s_negative():
    R = math.exp(-1.0)
    f = RadialProfile.from_expr("2+sin(ln(ln(1/r)))", R)
    grid = R * 2.0 ** (-np.linspace(1, 20, 12))
    rep = appendix_remainder(f, -1.0, grid)
    scale = max(1.0, rep["analytic_bound"])
    assert rep["max_mismatch"] <= 1e-6 * scale
    assert rep["max_abs_remainder"] <= rep["analytic_bound"] * (1.0 + 1e-6)


def test_appendix_identity_s_positive():
    R = math.exp(-1.0)
    f = RadialProfile.from_expr("2+sin(ln(ln(1/r)))", R)
    grid = R * 2.0 ** (-np.linspace(1, 20, 10))
    rep = appendix_remainder(f, 1.0, grid)
    scale = max(1.0, rep["analytic_bound"])
    assert rep["max_mismatch"] <= 1e-6 * scale
