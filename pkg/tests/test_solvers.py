import numpy as np
import pytest

from bimlab import emcore, solvers
from bimlab.config import ProblemConfig
from bimlab.dataset import Cylinder, SceneSpec, rasterize
from conftest import random_contrast


def make_operator(config):
    ops = emcore.build_greens(config)
    e_inc = emcore.incident_fields(config)
    return ops, e_inc


# -------------------------------------------------------- assemble_observation

def test_assemble_single_transmitter(tiny_config):
    cfg = ProblemConfig(**{**tiny_config.to_dict(), "tx_count": 1})
    ops, e_inc = make_operator(cfg)
    e_tot = emcore.FieldSet(values=e_inc.values, kind="total")
    h = solvers.assemble_observation(ops, e_tot)
    assert np.array_equal(h, ops.g_rx * e_inc.values[0][None, :])


def test_assemble_matches_scattered_fields(tiny_config):
    ops, e_inc = make_operator(tiny_config)
    e_tot = emcore.solve_state(ops, random_contrast(tiny_config, 1, 0.5), e_inc,
                               n_iters=50, tol=1e-10)
    h = solvers.assemble_observation(ops, e_tot)
    t = random_contrast(tiny_config, 2)
    direct = emcore.scattered_fields(ops, t, e_tot)
    assert np.allclose(h @ t, direct, rtol=1e-12)


def test_assemble_rejects_incident(tiny_config):
    ops, e_inc = make_operator(tiny_config)
    with pytest.raises(ValueError):
        solvers.assemble_observation(ops, e_inc)


# ------------------------------------------------------------- power iteration

def test_power_iteration_identity():
    gamma, sigma = solvers.power_iteration(np.eye(4, dtype=complex), 3, seed=0)
    assert gamma == pytest.approx(1.0, abs=1e-12)
    assert sigma == pytest.approx(1.0, abs=1e-12)


def test_power_iteration_diagonal():
    h = np.diag([2.0 + 0j, 1.0])
    gamma, sigma = solvers.power_iteration(h, 20, seed=1)
    assert gamma == pytest.approx(0.25, abs=1e-6)


def test_power_iteration_vs_svd():
    rng = np.random.default_rng(8)
    h = rng.standard_normal((24, 16)) + 1j * rng.standard_normal((24, 16))
    smax = np.linalg.svd(h, compute_uv=False)[0]
    _, sigma = solvers.power_iteration(h, 20, seed=2)
    assert abs(sigma - smax) / smax < 0.01


def test_power_iteration_lower_bound():
    rng = np.random.default_rng(9)
    for k in range(20):
        h = rng.standard_normal((12, 10)) + 1j * rng.standard_normal((12, 10))
        smax = np.linalg.svd(h, compute_uv=False)[0]
        _, sigma = solvers.power_iteration(h, 5, seed=k)
        assert sigma <= smax * (1 + 1e-9)


def test_power_iteration_zero_operator():
    with pytest.raises(ValueError):
        solvers.power_iteration(np.zeros((3, 3), dtype=complex), 5)


def test_power_iteration_deterministic():
    rng = np.random.default_rng(10)
    h = rng.standard_normal((8, 6)) + 1j * rng.standard_normal((8, 6))
    assert solvers.power_iteration(h, 7, seed=5) == solvers.power_iteration(h, 7, seed=5)


# -------------------------------------------------------------- soft threshold

def test_soft_threshold_examples():
    assert solvers.soft_threshold(np.array([0.3 + 0.4j]), 0.1)[0] == \
        pytest.approx(0.24 + 0.32j, abs=1e-15)
    assert solvers.soft_threshold(np.array([0.05 + 0j]), 0.1)[0] == 0
    z = np.array([0.2 - 0.7j, -1.0, 0.0])
    assert np.array_equal(solvers.soft_threshold(z, 0.0), z)
    assert solvers.soft_threshold(np.array([0.0j]), 0.5)[0] == 0


def test_soft_threshold_negative_delta():
    with pytest.raises(ValueError):
        solvers.soft_threshold(np.array([1.0j]), -0.1)


# ------------------------------------------------------------- landweber step

def test_landweber_exact_solution_fixed_point():
    rng = np.random.default_rng(3)
    h = rng.standard_normal((6, 4)) + 1j * rng.standard_normal((6, 4))
    t = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    e = h @ t
    out = solvers.landweber_step(h, t, e, gamma=0.3)
    assert np.allclose(out, t, atol=1e-14)


def test_landweber_identity_from_zero():
    e = np.array([1.0 + 2j, -1.0])
    out = solvers.landweber_step(np.eye(2, dtype=complex), np.zeros(2, complex), e, 1.0)
    assert np.allclose(out, e, atol=1e-15)


def test_landweber_descent():
    rng = np.random.default_rng(4)
    for k in range(10):
        h = rng.standard_normal((12, 6)) + 1j * rng.standard_normal((12, 6))
        e = rng.standard_normal(12) + 1j * rng.standard_normal(12)
        t = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        gamma = 1.0 / np.linalg.svd(h, compute_uv=False)[0] ** 2
        before = np.linalg.norm(h @ t - e)
        after = np.linalg.norm(h @ solvers.landweber_step(h, t, e, gamma) - e)
        assert after < before


# ----------------------------------------------------------------------- tista

def test_tista_zero_fixed_point():
    h = np.eye(3, dtype=complex)
    out = solvers.tista(h, np.zeros(3, complex), 1.0,
                        solvers.SoftThresholdRegularizer(0.2), 4,
                        np.zeros(3, complex))
    assert np.all(out == 0)


def test_tista_identity_reg_equals_landweber(tiny_config):
    rng = np.random.default_rng(5)
    h = rng.standard_normal((10, 8)) + 1j * rng.standard_normal((10, 8))
    e = rng.standard_normal(10) + 1j * rng.standard_normal(10)
    gamma, _ = solvers.power_iteration(h, 15, seed=0)
    t = np.zeros(8, complex)
    for n in range(1, 7):
        via_tista = solvers.tista(h, e, gamma, solvers.IdentityRegularizer(), n,
                                  np.zeros(8, complex))
        assert np.array_equal(via_tista, solvers.landweber_step(h, t, e, gamma))
        t = solvers.landweber_step(h, t, e, gamma)


def test_tista_single_step_closed_form():
    e = np.array([0.3 + 0.4j, 0.05 + 0j, -2.0 + 0j])
    out = solvers.tista(np.eye(3, dtype=complex), e, 1.0,
                        solvers.SoftThresholdRegularizer(0.1), 1,
                        np.zeros(3, complex))
    assert np.allclose(out, solvers.soft_threshold(e, 0.1), atol=1e-15)


def test_ista_objective_descent():
    rng = np.random.default_rng(6)
    for k in range(20):
        h = rng.standard_normal((24, 16)) + 1j * rng.standard_normal((24, 16))
        e = rng.standard_normal(24) + 1j * rng.standard_normal(24)
        gamma, _ = solvers.power_iteration(h, 15, seed=k)
        delta = 0.05

        def objective(t):
            return (np.linalg.norm(h @ t - e) ** 2
                    + 2 * delta / gamma * np.abs(t).sum())

        t = np.zeros(16, complex)
        prev = objective(t)
        for _ in range(6):
            t = solvers.soft_threshold(solvers.landweber_step(h, t, e, gamma), delta)
            cur = objective(t)
            assert cur <= prev * (1 + 1e-12)
            prev = cur


def test_ista_scale_covariance():
    # scaling e_mea and delta by a power of two scales the iterates exactly
    rng = np.random.default_rng(12)
    h = rng.standard_normal((10, 8)) + 1j * rng.standard_normal((10, 8))
    e = rng.standard_normal(10) + 1j * rng.standard_normal(10)
    gamma, _ = solvers.power_iteration(h, 15, seed=0)
    delta, alpha = 0.02, 4.0
    a = solvers.tista(h, e, gamma, solvers.SoftThresholdRegularizer(delta), 6,
                      np.zeros(8, complex))
    b = solvers.tista(h, alpha * e, gamma,
                      solvers.SoftThresholdRegularizer(alpha * delta), 6,
                      np.zeros(8, complex))
    assert np.allclose(b, alpha * a, rtol=1e-13)


# ------------------------------------------------------------------ sbim/tbim

def test_sbim_zero_measurements(tiny_config):
    e_mea = np.zeros(tiny_config.rx_count * tiny_config.tx_count, complex)
    result = solvers.sbim(tiny_config, e_mea)
    assert np.all(result.final == 0)
    assert all(np.all(t == 0) for t in result.per_step)
    assert all(m == 0 for m in result.misfits)


def test_sbim_rejects_wrong_length(tiny_config):
    with pytest.raises(ValueError):
        solvers.sbim(tiny_config, np.zeros(7, complex))


def test_sbim_born_regime_recovery(small_config):
    scene = SceneSpec(cylinders=(Cylinder(0.3, -0.2, 0.6, 0.05),), seed=0)
    t_true = rasterize(scene, small_config)
    e_mea = emcore.forward_solve(small_config, t_true)
    result = solvers.sbim(small_config, e_mea)
    assert solvers.rne(result.final, t_true) < 50.0
    # at this tiny contrast the l1 bias is comparable to the per-step misfit
    # change, so allow a small slack on the step-to-step decrease
    assert result.misfits[-1] < result.misfits[0]
    assert all(m2 <= m1 * 1.05 for m1, m2 in
               zip(result.misfits, result.misfits[1:]))


def test_sbim_deterministic(small_config):
    t_true = rasterize(SceneSpec(cylinders=(Cylinder(0.0, 0.0, 0.5, 0.4),), seed=0),
                       small_config)
    e_mea = emcore.forward_solve(small_config, t_true)
    a = solvers.sbim(small_config, e_mea, seed=3)
    b = solvers.sbim(small_config, e_mea, seed=3)
    assert np.array_equal(a.final, b.final)
    assert a.gammas == b.gammas and a.misfits == b.misfits


def test_tbim_identity_reduces_to_landweber_bim(small_config):
    t_true = rasterize(SceneSpec(cylinders=(Cylinder(-0.3, 0.4, 0.5, 0.6),), seed=0),
                       small_config)
    e_mea = emcore.forward_solve(small_config, t_true)
    ops, e_inc = make_operator(small_config)
    regs = [solvers.IdentityRegularizer()] * small_config.n_bim
    via_tbim = solvers.tbim(small_config, e_mea, regs, ops=ops, e_inc=e_inc, seed=0)

    # reference unregularized BIM trace built from the primitives directly
    e_tot = emcore.FieldSet(values=e_inc.values.copy(), kind="total")
    t = np.zeros(small_config.n_pixels, complex)
    for i in range(small_config.n_bim):
        h = solvers.assemble_observation(ops, e_tot)
        gamma, _ = solvers.power_iteration(h, small_config.n_pow, seed=i)
        for _ in range(small_config.n_lwb):
            t = solvers.landweber_step(h, t, e_mea, gamma)
        assert np.array_equal(via_tbim.per_step[i], t)
        if i + 1 < small_config.n_bim:
            e_tot = emcore.solve_state(ops, t, e_inc, n_iters=small_config.n_bcg)


def test_tbim_requires_full_weight_list(small_config):
    e_mea = np.zeros(small_config.rx_count * small_config.tx_count, complex)
    with pytest.raises(ValueError):
        solvers.tbim(small_config, e_mea, [solvers.IdentityRegularizer()])


# ------------------------------------------------------------------------ rne

def test_rne_examples():
    assert solvers.rne([1.0, 1.0], [1.0, 1.0]) == 0.0
    assert solvers.rne([0.0, 0.0], [1.0, 1.0]) == 100.0
    assert solvers.rne([1.0, 0.0], [1.0, 1.0]) == pytest.approx(50.0)


def test_rne_errors():
    with pytest.raises(ValueError):
        solvers.rne([1.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        solvers.rne([1.0], [0.0])


def test_mrne_is_mean():
    xs = [np.array([1.0, 0.0]), np.array([0.0, 0.0])]
    refs = [np.array([1.0, 1.0]), np.array([1.0, 1.0])]
    assert solvers.mrne(xs, refs) == pytest.approx(75.0, abs=1e-12)
