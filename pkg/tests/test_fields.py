import math

import numpy as np
import pytest

from critex.errors import (ConfigError, DegenerateDenominator,
                           EllipticityViolation)
from critex.fields import (Bounded, CoefficientField, DiagonalPower,
                           GeneralMatrix, GilbargSerrin, PowerLaw,
                           builtin_pert, builtin_unstable, empirical_ellipticity,
                           field_from_config, gs_psi_closed_form,
                           parse_config_text, psi_pointwise, theta_pointwise)
from critex.fields import unstable_wave
from critex.profiles import RadialProfile


def gs_field(N, gamma, beta, R=1.0, sigma=0.0, K="1"):
    pref = RadialProfile.from_expr(K, R)
    potential = PowerLaw(sigma, pref) if sigma > 0 else Bounded(pref)
    return CoefficientField(
        dimension=N, radius=R,
        kind=GilbargSerrin(RadialProfile.from_expr(gamma, R),
                           RadialProfile.from_expr(beta, R)),
        potential=potential)


def test_psi_laplacian(lap3):
    assert psi_pointwise(lap3, [0.1, 0.2, 0.05]) == pytest.approx(3.0, abs=1e-12)


def test_psi_gs_closed_form_example():
    f = gs_field(3, "1", "0")
    assert psi_pointwise(f, [0.3, 0.0, 0.0]) == pytest.approx(2.0, abs=1e-12)


def test_psi_diagonal_power_axis():
    f = CoefficientField(3, 1.0, DiagonalPower(1.0),
                         Bounded(RadialProfile.constant(1.0, 1.0)))
    for r in (0.1, 0.5):
        expected = 1.0 + 2.0 * (1.0 + r * r) ** (-1.0)
        assert psi_pointwise(f, [r, 0.0, 0.0]) == pytest.approx(expected, rel=1e-13)

    # cross-check against the same matrix provided through callbacks
    g = CoefficientField(
        3, 1.0,
        GeneralMatrix(a_eval=lambda x: np.diag((1.0 + x ** 2) ** 1.0),
                      b_eval=lambda x: np.zeros(3)),
        Bounded(RadialProfile.constant(1.0, 1.0)))
    rng = np.random.default_rng(7)
    for _ in range(32):
        x = rng.normal(size=3) * 0.3
        assert psi_pointwise(f, x) == pytest.approx(psi_pointwise(g, x), rel=1e-12)


def test_theta_examples(lap3):
    assert theta_pointwise(lap3, [0.2, 0.1, 0.0]) == pytest.approx(1.0, abs=1e-12)
    f = gs_field(3, "1", "0")
    assert theta_pointwise(f, [0.0, 0.5, 0.0]) == pytest.approx(0.5, abs=1e-12)
    fk = gs_field(3, "0", "0", sigma=1.0)
    assert theta_pointwise(fk, [0.25, 0.0, 0.0]) == pytest.approx(4.0, rel=1e-12)


def test_closed_form_fuzz(rng):
    for _ in range(1000):
        N = int(rng.integers(2, 7))
        g0 = rng.uniform(-0.9, 3.0)
        b0 = rng.uniform(-3.0, 3.0)
        f = CoefficientField(
            N, 1.0,
            GilbargSerrin(RadialProfile.constant(g0, 1.0),
                          RadialProfile.constant(b0, 1.0)),
            Bounded(RadialProfile.constant(1.0, 1.0)))
        x = rng.normal(size=N)
        x *= rng.uniform(0.05, 1.0) / np.linalg.norm(x)
        closed = gs_psi_closed_form(f, float(np.linalg.norm(x)))
        assert abs(psi_pointwise(f, x) - closed) <= 1e-12 * max(1.0, abs(closed))


def test_rotation_invariance(rng, lap3):
    f = gs_field(3, "0.5", "1")
    for _ in range(16):
        x = rng.normal(size=3)
        x *= 0.3 / np.linalg.norm(x)
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        assert psi_pointwise(f, q @ x) == pytest.approx(psi_pointwise(f, x), rel=1e-12)
        assert psi_pointwise(lap3, q @ x) == pytest.approx(3.0, abs=1e-12)


def test_kantorovich_bound(rng):
    for _ in range(200):
        n = int(rng.integers(2, 5))
        g = rng.normal(size=(n, n))
        if abs(np.linalg.det(g)) < 1e-3:
            continue
        x = rng.normal(size=n)
        x /= np.linalg.norm(x)
        ratio = (np.linalg.norm(g.T @ x) ** 2 * np.linalg.norm(np.linalg.inv(g) @ x) ** 2)
        smin, smax = np.linalg.svd(g, compute_uv=False)[[-1, 0]]
        sigma_g = 0.25 * (smax / smin + smin / smax) ** 2
        assert 1.0 - 1e-9 <= ratio <= sigma_g * (1.0 + 1e-9)


def test_builtin_pert_values():
    assert psi_pointwise(builtin_pert(3, 0.0), [0.1, 0.1, 0.1]) == pytest.approx(3.0, abs=1e-12)
    assert psi_pointwise(builtin_pert(3, -1.0), [0.1, 0.1, 0.1]) == pytest.approx(2.0, abs=1e-12)
    assert psi_pointwise(builtin_pert(4, 1.0), [0.1, 0.0, 0.1, 0.2]) == pytest.approx(5.0, abs=1e-12)


def test_builtin_unstable_constant_wave():
    alpha = 2.5
    phi = RadialProfile.from_callable(lambda t: alpha - 1.0, 1.0)
    f = builtin_unstable(alpha, phi)
    for x in ([0.1, 0.0, 0.0], [0.01, 0.02, 0.0]):
        assert psi_pointwise(f, x) == pytest.approx(alpha, rel=1e-12)


def test_builtin_unstable_sin_range():
    alpha = 3.0
    f = builtin_unstable(alpha, unstable_wave(alpha, "sin"))
    vals = [psi_pointwise(f, [r, 0.0, 0.0]) for r in np.geomspace(0.9, 1e-8, 200)]
    assert min(vals) >= alpha - 0.5 - 1e-9
    assert max(vals) <= alpha + 0.5 + 1e-9
    assert max(vals) - min(vals) > 0.8  # genuinely oscillates


def test_builtin_unstable_square_wave_straddles_2():
    f = builtin_unstable(2.2, unstable_wave(2.2, "square"))
    vals = [psi_pointwise(f, [r, 0.0, 0.0]) for r in np.geomspace(0.9, 1e-8, 400)]
    assert min(vals) < 2.0 <= max(vals)


def test_builtin_unstable_rejects_nonelliptic():
    phi = RadialProfile.from_callable(lambda t: math.sin(2 * math.pi * t), 1.0)
    with pytest.raises(EllipticityViolation):
        builtin_unstable(1.0, phi)


def test_builtin_unstable_rejects_wrong_mean():
    phi = RadialProfile.from_callable(lambda t: 1.0, 1.0)
    with pytest.raises(ValueError):
        builtin_unstable(2.5, phi)  # mean must be 1.5


def test_degenerate_denominator():
    f = CoefficientField(
        2, 1.0,
        GeneralMatrix(a_eval=lambda x: -np.eye(2), b_eval=lambda x: np.zeros(2)),
        Bounded(RadialProfile.constant(1.0, 1.0)))
    with pytest.raises(DegenerateDenominator):
        psi_pointwise(f, [0.1, 0.0])


def test_empirical_ellipticity(lap3):
    rep = empirical_ellipticity(lap3)
    assert rep["nu"] == pytest.approx(1.0, abs=1e-9)
    assert rep["drift_bound"] == pytest.approx(0.0, abs=1e-12)
    assert rep["potential_inf"] > 0


def test_config_roundtrip():
    cfg = parse_config_text('N = 3\nR = 1.0\nfamily = gilbarg_serrin\n'
                            'gamma = "r^0.5"\nbeta = "0"\nsigma = 1.0\nK = "1"\n')
    f = field_from_config(cfg)
    assert f.dimension == 3 and f.sigma == 1.0
    assert isinstance(f.kind, GilbargSerrin)
    assert f.kind.gamma(0.25) == pytest.approx(0.5)


def test_config_errors():
    with pytest.raises(ConfigError) as exc:
        parse_config_text("N = 3\nbogus_key = 1\n")
    assert exc.value.line == 2
    with pytest.raises(ConfigError):
        field_from_config({"family": "gilbarg_serrin"})  # missing N
    with pytest.raises(ConfigError):
        field_from_config({"family": "nope", "N": "3"})
    with pytest.raises(ConfigError):
        field_from_config({"family": "general", "N": "3"})
    with pytest.raises(ConfigError):
        parse_config_text("N = 3\nN = 4\n")


def test_config_gs_ellipticity_guard():
    with pytest.raises(EllipticityViolation):
        field_from_config({"family": "gilbarg_serrin", "N": "3", "gamma": "-2"})
