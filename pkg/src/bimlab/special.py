"""Hankel functions of the second kind, orders 0 and 1.

H^(2)_nu(x) = J_nu(x) - j*Y_nu(x), evaluated for real positive arguments.
Ascending power series below the crossover, Hankel's asymptotic expansion
above it. The crossover sits where the two error floors meet in float64
(series cancellation grows like e^x/x, asymptotic floor decays like e^-2x).
"""

import numpy as np

_EULER_GAMMA = 0.5772156649015328606
_CROSSOVER = 15.0
_SERIES_TERMS = 40
_ASYMPT_TERMS = 28

# harmonic numbers H_0..H_{_SERIES_TERMS+1}
_HARMONIC = np.concatenate(([0.0], np.cumsum(1.0 / np.arange(1, _SERIES_TERMS + 2))))


def _series_jy(x):
    """J0, Y0, J1, Y1 via ascending series; x is a 1-D positive array."""
    q = 0.25 * x * x
    log_half_x = np.log(0.5 * x)

    j0 = np.ones_like(x)
    y0_sum = np.zeros_like(x)
    term = np.ones_like(x)
    for k in range(1, _SERIES_TERMS + 1):
        term = -term * q / (k * k)
        j0 += term
        y0_sum += term * _HARMONIC[k]
    y0 = (2.0 / np.pi) * ((log_half_x + _EULER_GAMMA) * j0 - y0_sum)

    s = np.ones_like(x)
    j1_sum = np.ones_like(x)
    y1_sum = np.full_like(x, _HARMONIC[1])  # (H_0 + H_1) * s_0
    for k in range(1, _SERIES_TERMS + 1):
        s = -s * q / (k * (k + 1))
        j1_sum += s
        y1_sum += s * (_HARMONIC[k] + _HARMONIC[k + 1])
    j1 = 0.5 * x * j1_sum
    y1 = ((2.0 / np.pi) * (log_half_x + _EULER_GAMMA) * j1
          - 2.0 / (np.pi * x)
          - (x / (2.0 * np.pi)) * y1_sum)
    return j0, y0, j1, y1


def _asymptotic_h2(order, x):
    """Hankel asymptotic expansion of H^(2)_order(x); x is a 1-D array > _CROSSOVER."""
    nu4 = 4.0 * order * order
    # sum_k (-j)^k a_k(order) / x^k with a_k = a_{k-1} (4 nu^2 - (2k-1)^2) / (8k)
    acc = np.ones_like(x, dtype=complex)
    term = np.ones_like(x, dtype=complex)
    inv_x = 1.0 / x
    for k in range(1, _ASYMPT_TERMS + 1):
        term = term * (-1j) * (nu4 - (2 * k - 1) ** 2) / (8.0 * k) * inv_x
        acc += term
    phase = x - 0.5 * order * np.pi - 0.25 * np.pi
    return np.sqrt(2.0 / (np.pi * x)) * np.exp(-1j * phase) * acc


def hankel2(order, x):
    """Hankel function of the second kind.

    Parameters
    ----------
    order : int
        0 or 1.
    x : float or ndarray
        Positive real argument(s).

    Returns
    -------
    complex or complex ndarray, matching the shape of ``x``.
    """
    if order not in (0, 1):
        raise ValueError(f"order must be 0 or 1, got {order}")
    x_arr = np.asarray(x, dtype=float)
    scalar = x_arr.ndim == 0
    flat = np.atleast_1d(x_arr).ravel()
    if flat.size and (not np.all(np.isfinite(flat)) or np.min(flat) <= 0.0):
        raise ValueError("hankel2 requires finite x > 0 (logarithmic singularity at 0)")

    out = np.empty(flat.shape, dtype=complex)
    small = flat <= _CROSSOVER
    if np.any(small):
        j0, y0, j1, y1 = _series_jy(flat[small])
        if order == 0:
            out[small] = j0 - 1j * y0
        else:
            out[small] = j1 - 1j * y1
    if np.any(~small):
        out[~small] = _asymptotic_h2(order, flat[~small])

    out = out.reshape(np.atleast_1d(x_arr).shape)
    return complex(out[0]) if scalar else out.reshape(x_arr.shape)
