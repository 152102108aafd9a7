import numpy as np
import pytest
from hypothesis import given, strategies as st

from waylab import position as P

LAMBDAS = (1.0, 2.0, 3.0)


def box(lam, n=4096, ell=1.0):
    return P.PositionModelConfig(lam, ell, "box", None, n)


def test_config_validation():
    for bad in (dict(lam=0.0), dict(lam=-1.0), dict(lam=1.0, ell=0.0),
                dict(lam=1.0, profile="gauss"), dict(lam=1.0, grid_n=16)):
        with pytest.raises(ValueError):
            P.PositionModelConfig(**bad)


def test_box_at_log2_is_uniform():
    d = P.density_e(box(np.log(2.0)))
    x = d.grid.points
    inside = np.abs(x) < 1 - d.grid.h
    assert np.allclose(d.values[inside], 0.5)
    assert np.all(d.values[np.abs(x) > 1 + d.grid.h] == 0)


@pytest.mark.parametrize("lam", LAMBDAS)
@pytest.mark.parametrize("profile", P.PROFILES)
def test_density_normalized(lam, profile):
    d = P.density_e(box(lam).with_profile(profile))
    assert abs(d.integral() - 1) <= 1e-6


@pytest.mark.parametrize("lam", LAMBDAS)
def test_support_half_width_is_delta(lam):
    cfg = box(lam)
    d = P.density_e(cfg)
    assert abs(d.support_half_width() - cfg.delta) <= d.grid.h


def test_too_coarse_grid_raises():
    cfg = P.PositionModelConfig(3.0, 1.0, "box", grid_extent=50.0, grid_n=512)
    with pytest.raises(P.GridResolutionError):
        P.density_e(cfg)


def test_pointer_map_limits():
    cfg = box(2.0)
    q = np.linspace(-1, 1, 5)
    assert np.array_equal(P.pointer_map_sample(cfg, q, 0.0), q)
    far = box(40.0)
    assert np.allclose(P.pointer_map_sample(far, q, 0.7), q, atol=1e-15)


def test_monte_carlo_matches_density():
    cfg = box(1.5).with_profile("raised_cosine")
    d = P.density_e(cfg)
    rng = np.random.default_rng(0)
    y = P.sample_apparatus(cfg, rng, 200_000)
    shift = P.pointer_map_sample(cfg, 0.0, y)        # z - q, distributed as e(-v)
    edges = np.linspace(-cfg.delta, cfg.delta, 21)
    counts, _ = np.histogram(shift, edges)
    F = d.cdf_at_edges()
    cdf = lambda v: np.interp(v, d.grid.edges, F)
    probs = cdf(-edges[:-1]) - cdf(-edges[1:])
    n = y.size
    sigma = np.sqrt(n * probs * (1 - probs)) + 1
    assert np.all(np.abs(counts - n * probs) <= 3 * sigma)


@pytest.mark.parametrize("lam", LAMBDAS)
def test_alpha_beta_formulas(lam):
    cfg = box(lam)
    h = P.density_e(cfg).grid.h
    assert abs(P.calibration_error(cfg) - np.exp(-lam)) <= h
    assert abs(P.repeatability_error(cfg) - 1 / np.expm1(lam)) <= h
    assert P.calibration_error(cfg, mirrored=True) == pytest.approx(P.calibration_error(cfg), abs=h)
    assert P.repeatability_error(cfg, negative=True) == pytest.approx(P.repeatability_error(cfg), abs=h)
    assert abs(P.repeatability_error(cfg) - cfg.delta) <= h


def test_alpha_beta_at_lambda_two():
    cfg = box(2.0)
    assert P.calibration_error(cfg) == pytest.approx(0.1353, abs=1e-4)
    assert P.repeatability_error(cfg) == pytest.approx(0.1565, abs=1e-4)


def test_alpha_beta_decrease():
    lams = [0.5, 1, 2, 4, 8, 16]
    a = [P.calibration_error(box(l)) for l in lams]
    b = [P.repeatability_error(box(l)) for l in lams]
    assert all(x > y for x, y in zip(a, a[1:])) and a[-1] < 1e-6
    assert all(x > y for x, y in zip(b, b[1:])) and b[-1] < 1e-6


@given(st.floats(0.3, 6.0), st.floats(0.2, 3.0))
def test_scaling_laws(lam, ell):
    cfg = box(lam, n=2048, ell=ell)
    h = P.density_e(cfg).grid.h
    assert abs(P.calibration_error(cfg) * np.exp(lam) - ell) <= h * np.exp(lam)
    assert abs(P.repeatability_error(cfg) * np.expm1(lam) - ell) <= h * np.expm1(lam)


@pytest.mark.parametrize("lam", LAMBDAS)
def test_grid_convergence(lam):
    coarse, fine = box(lam, n=2048), box(lam, n=4096)
    h = P.density_e(coarse).grid.h
    assert abs(P.calibration_error(coarse) - P.calibration_error(fine)) < h
    assert abs(P.repeatability_error(coarse) - P.repeatability_error(fine)) < h


@given(st.integers(0, 2 ** 32 - 1))
def test_partition_sums_to_one(seed):
    cfg = box(1.0).with_profile("raised_cosine")
    d = P.density_e(cfg)
    r = np.random.default_rng(seed)
    cuts = np.sort(r.uniform(-2, 2, size=4))
    bounds = np.concatenate([[-np.inf], cuts, [np.inf]])
    q = r.uniform(-3, 3, size=50)
    total = sum(P.smeared_effect(cfg, d, q, lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:]))
    assert np.max(np.abs(total - 1)) <= 1e-6


def test_probability_reproducibility_by_sampling():
    cfg = box(1.0).with_profile("raised_cosine")
    d = P.density_e(cfg)
    grid = P.Grid.symmetric(4.0, 2048)
    rng = np.random.default_rng(7)
    n = 20_000
    for psi in P.random_system_states(rng, 20, grid):
        w = np.abs(psi.values) ** 2 * grid.h
        w /= w.sum()
        exact = float(np.sum(w * P.smeared_effect(cfg, d, grid.points, 0.0, np.inf)))
        q = rng.choice(grid.points, size=n, p=w) + rng.uniform(-grid.h / 2, grid.h / 2, size=n)
        z = P.pointer_map_sample(cfg, q, P.sample_apparatus(cfg, rng, n))
        est = np.mean(z >= 0)
        assert abs(est - exact) <= 4 * np.sqrt(exact * (1 - exact) / n) + 2e-3


def test_raised_cosine_moments_closed_form():
    cfg = box(1.0).with_profile("raised_cosine")
    mo = P.moments(P.apparatus_state(cfg))
    assert mo["second_q"] == pytest.approx(1 / 3 - 2 / np.pi ** 2, rel=1e-10)
    # FFT derivative of the kinked profile converges slowly; 1e-3 relative suffices
    assert mo["var_p"] == pytest.approx(np.pi ** 2 / 4, rel=1e-3)


@pytest.mark.parametrize("lam", LAMBDAS)
def test_ozawa_check(lam):
    cfg = box(lam).with_profile("raised_cosine")
    rep = P.position_ozawa_check(cfg, n_states=100, seed=0)
    k = cfg.kappa
    assert rep.epsilon_sq == pytest.approx(k * k * (1 / 3 - 2 / np.pi ** 2), rel=1e-10)
    assert rep.bound == pytest.approx(1 / np.pi ** 2, rel=1e-3)
    assert rep.commutator_expectation == pytest.approx(k, rel=1e-6)
    assert rep.universal_min_slack >= -1e-6
    assert rep.yanase_condition is False


def test_ozawa_rejects_box():
    with pytest.raises(ValueError):
        P.position_ozawa_check(box(1.0))


def test_epsilon_vanishes_and_bound_scales():
    eps = [P.position_ozawa_check(box(l).with_profile("raised_cosine"), 0).epsilon_sq
           for l in (1, 4, 16)]
    assert eps[0] > eps[1] > eps[2] and eps[2] < 1e-12
    wide = P.position_ozawa_check(P.PositionModelConfig(1.0, 1.0, "raised_cosine"), 0)
    narrow = P.position_ozawa_check(P.PositionModelConfig(1.0, 0.5, "raised_cosine"), 0)
    # halving ell doubles the momentum spread, so the bound drops by four
    assert narrow.bound / wide.bound == pytest.approx(0.25, rel=1e-9)
    assert narrow.momentum_var_pa / wide.momentum_var_pa == pytest.approx(4.0, rel=1e-9)


def test_grid_yanase_defect_positive():
    assert P.grid_yanase_defect() > 0.1


def test_report_table():
    rows = P.stein_shimony_report(1.0, [1, 2, 4, 8], grid_n=4096, threads=2)
    text = P.rows_to_csv(rows)
    lines = text.splitlines()
    assert lines[0] == "lambda,alpha,beta,epsilon_sq,bound"
    assert len(lines) == 5
    for r in rows:
        h = P.density_e(box(r.lam)).grid.h
        assert abs(r.alpha - np.exp(-r.lam)) <= h
        assert abs(r.beta - 1 / np.expm1(r.lam)) <= h
    assert all(a.alpha > b.alpha and a.beta > b.beta for a, b in zip(rows, rows[1:]))
    assert text == P.rows_to_csv(P.stein_shimony_report(1.0, [1, 2, 4, 8], threads=1))
