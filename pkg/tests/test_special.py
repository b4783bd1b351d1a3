import mpmath
import numpy as np
import pytest

from bimlab.special import hankel2

mpmath.mp.dps = 30


def mp_hankel2(order, x):
    """High-precision oracle: J_order(x) - j*Y_order(x)."""
    return complex(mpmath.besselj(order, x)) - 1j * complex(mpmath.bessely(order, x))


def test_reference_value_at_one():
    # J0(1) - j*Y0(1), frozen from the 30-digit oracle
    assert hankel2(0, 1.0) == pytest.approx(0.7651976865579666 - 0.0882569642156769j,
                                            rel=1e-12)


@pytest.mark.parametrize("order", [0, 1])
def test_against_mpmath_spot_grid(order):
    xs = np.logspace(-6, 4, 41)
    for x in xs:
        ref = mp_hankel2(order, float(x))
        val = hankel2(order, float(x))
        assert abs(val - ref) / abs(ref) < 1e-9, f"x={x}"


def test_crossover_region_accuracy():
    # densest scrutiny where the series and asymptotic branches meet
    xs = np.linspace(13.0, 18.0, 200)
    for order in (0, 1):
        vals = hankel2(order, xs)
        for x, v in zip(xs, vals):
            ref = mp_hankel2(order, float(x))
            assert abs(v - ref) / abs(ref) < 1e-9


def test_large_argument_asymptotic_magnitude():
    expected = np.sqrt(2.0 / (np.pi * 100.0))
    assert abs(abs(hankel2(0, 100.0)) - expected) / expected < 0.005


def test_small_x_y1_singularity():
    x = 1e-6
    assert hankel2(1, x).imag == pytest.approx(2.0 / (np.pi * x), rel=1e-6)


def test_domain_errors():
    with pytest.raises(ValueError):
        hankel2(0, 0.0)
    with pytest.raises(ValueError):
        hankel2(0, -1.0)
    with pytest.raises(ValueError):
        hankel2(1, np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        hankel2(2, 1.0)


def test_vectorized_matches_scalar():
    xs = np.array([0.5, 5.0, 50.0])
    vec = hankel2(0, xs)
    assert vec.shape == xs.shape
    for x, v in zip(xs, vec):
        assert v == hankel2(0, float(x))
