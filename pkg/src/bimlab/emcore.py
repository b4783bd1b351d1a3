"""Discretized contrast-field operators, forward model and state-equation solver.

The imaging domain is a centered grid of square pixels; line-source
transmitters and receivers sit on a concentric circle outside the domain.
Scattered data: e_sca = G D(e_tot) t, state: (I + A D(t)) e_tot = e_inc.
Time convention e^{+j w t}, so outgoing waves carry H^(2).
"""

import dataclasses
import math

import numpy as np

from .config import ConfigError
from .special import hankel2


@dataclasses.dataclass(frozen=True)
class GreensOperators:
    """Receiver coupling g_rx (n_rx, N), domain coupling a_dom (N, N), wavenumber k0."""
    g_rx: np.ndarray
    a_dom: np.ndarray
    k0: float


@dataclasses.dataclass
class FieldSet:
    """Per-transmitter complex field vectors on the pixel grid, shape (n_tx, N)."""
    values: np.ndarray
    kind: str  # "incident" or "total"

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=complex))
        if self.kind not in ("incident", "total"):
            raise ValueError(f"unknown field kind {self.kind!r}")


def pixel_centers(config):
    """(N, 2) array of pixel-center coordinates, row-major over (iy, ix), centered at origin."""
    dd = config.pixel_size_m
    xs = (np.arange(config.grid_nx) + 0.5) * dd - 0.5 * config.grid_nx * dd
    ys = (np.arange(config.grid_ny) + 0.5) * dd - 0.5 * config.grid_ny * dd
    gx, gy = np.meshgrid(xs, ys)  # row-major: y varies slowest
    return np.column_stack([gx.ravel(), gy.ravel()])


def circle_positions(count, radius):
    """Equispaced points on a circle of given radius, starting at angle 0."""
    ang = 2.0 * np.pi * np.arange(count) / count
    return np.column_stack([radius * np.cos(ang), radius * np.sin(ang)])


def tx_positions(config):
    return circle_positions(config.tx_count, config.transceiver_radius_m)


def rx_positions(config):
    return circle_positions(config.rx_count, config.transceiver_radius_m)


def _self_term(k0, dd):
    """Analytic integral of k0*H2_0(k0 r)/(4j) over the equivalent disk of a pixel."""
    a = dd / math.sqrt(math.pi)
    return k0 / 4j * (2.0 * math.pi * a / k0 * hankel2(1, k0 * a) - 4j / k0 ** 2)


def greens_from_positions(config, positions):
    """Coupling matrix from every pixel to each external point (len(positions), N).

    Entry [m, n] = k0 * dd^2 * H2_0(k0 * d_mn) / (4j), midpoint quadrature over pixel n.
    """
    centers = pixel_centers(config)
    diff = positions[:, None, :] - centers[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    if dist.min() < 1e-9:
        raise ConfigError("external point coincides with a pixel center")
    k0 = config.k0
    return k0 * config.pixel_size_m ** 2 * hankel2(0, k0 * dist) / 4j


def build_greens(config):
    """Assemble the receiver and domain Green's operators for a configuration."""
    k0 = config.k0
    dd = config.pixel_size_m
    centers = pixel_centers(config)

    g_rx = greens_from_positions(config, rx_positions(config))

    diff = centers[:, None, :] - centers[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    n = dist.shape[0]
    a_dom = np.empty((n, n), dtype=complex)
    off = ~np.eye(n, dtype=bool)
    a_dom[off] = k0 * dd ** 2 * hankel2(0, k0 * dist[off]) / 4j
    a_dom[np.diag_indices(n)] = _self_term(k0, dd)
    return GreensOperators(g_rx=g_rx, a_dom=a_dom, k0=k0)


def incident_fields(config, positions=None):
    """Unit-strength line-source incident fields at the pixel centers.

    e_inc[n] = H2_0(k0 |r_n - r_tx|) / (4j) per transmitter.
    """
    if positions is None:
        positions = tx_positions(config)
    centers = pixel_centers(config)
    diff = positions[:, None, :] - centers[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    if dist.min() < 1e-9:
        raise ConfigError("transmitter coincides with a pixel center")
    vals = hankel2(0, config.k0 * dist) / 4j
    return FieldSet(values=vals, kind="incident")


_BREAKDOWN_EPS = 1e-30


def bicgstab(apply, b, x0=None, max_iters=100, tol=0.0):
    """BiCGStab for a square complex linear system given as an operator.

    Returns (x, relative_residual). Terminates at max_iters or when
    ||b - apply(x)|| / ||b|| <= tol. On numerical breakdown (rho or omega
    vanishing) restarts once from the current iterate; a second breakdown
    returns the current iterate with its actual residual.
    """
    b = np.asarray(b, dtype=complex)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=complex)
    if x.shape != b.shape:
        raise ValueError(f"x0 shape {x.shape} does not match b shape {b.shape}")
    b_norm = np.linalg.norm(b)
    if b_norm == 0.0:
        return np.zeros_like(b), 0.0

    r = b - apply(x)
    r_norm = np.linalg.norm(r)
    if r_norm == 0.0 or r_norm / b_norm <= tol:
        return x, r_norm / b_norm

    r_hat = r.copy()
    rho = alpha = omega = 1.0 + 0.0j
    v = np.zeros_like(b)
    p = np.zeros_like(b)
    restarts = 0
    it = 0
    while it < max_iters:
        rho_new = np.vdot(r_hat, r)
        if abs(rho_new) < _BREAKDOWN_EPS:
            if restarts >= 1:
                break
            restarts += 1
            r = b - apply(x)
            r_hat = r.copy()
            rho = alpha = omega = 1.0 + 0.0j
            v[:] = 0
            p[:] = 0
            continue
        beta = (rho_new / rho) * (alpha / omega)
        rho = rho_new
        p = r + beta * (p - omega * v)
        v = apply(p)
        denom = np.vdot(r_hat, v)
        if abs(denom) < _BREAKDOWN_EPS:
            if restarts >= 1:
                break
            restarts += 1
            r = b - apply(x)
            r_hat = r.copy()
            rho = alpha = omega = 1.0 + 0.0j
            v[:] = 0
            p[:] = 0
            continue
        alpha = rho / denom
        s = r - alpha * v
        t_vec = apply(s)
        tt = np.vdot(t_vec, t_vec).real
        if tt < _BREAKDOWN_EPS:
            x = x + alpha * p
            r = s
            it += 1
            if np.linalg.norm(r) / b_norm <= tol:
                break
            if restarts >= 1:
                break
            restarts += 1
            r_hat = r.copy()
            rho = alpha = omega = 1.0 + 0.0j
            v[:] = 0
            p[:] = 0
            continue
        omega = np.vdot(t_vec, s) / tt
        x = x + alpha * p + omega * s
        r = s - omega * t_vec
        it += 1
        if np.linalg.norm(r) / b_norm <= tol:
            break
        if abs(omega) < _BREAKDOWN_EPS:
            if restarts >= 1:
                break
            restarts += 1
            r = b - apply(x)
            r_hat = r.copy()
            rho = alpha = omega = 1.0 + 0.0j
            v[:] = 0
            p[:] = 0
    final_res = np.linalg.norm(b - apply(x)) / b_norm
    return x, final_res


# state-solve modes: reconstruction runs a fixed small iteration count (tol 0),
# data generation runs to tight tolerance so ground truth is accurate
ACCURATE_ITERS = 500
ACCURATE_TOL = 1e-10


def solve_state(ops, t, e_inc, n_iters, tol=0.0):
    """Solve (I + A D(t)) e_tot = e_inc per transmitter via BiCGStab, x0 = e_inc."""
    if e_inc.kind != "incident":
        raise ValueError("solve_state expects an incident FieldSet")
    t = np.asarray(t, dtype=complex)

    def apply(v):
        return v + ops.a_dom @ (t * v)

    totals = np.empty_like(e_inc.values)
    for i in range(e_inc.values.shape[0]):
        totals[i], _ = bicgstab(apply, e_inc.values[i], x0=e_inc.values[i],
                                max_iters=n_iters, tol=tol)
    return FieldSet(values=totals, kind="total")


def scattered_fields(ops, t, e_tot):
    """Cascaded scattered fields at the receivers, transmitter-major ordering."""
    if e_tot.kind != "total":
        raise ValueError("scattered_fields expects a total FieldSet")
    t = np.asarray(t, dtype=complex)
    if t.shape[0] != ops.g_rx.shape[1]:
        raise ValueError("contrast length does not match the operator grid")
    # row per transmitter: g_rx @ (e_tot_tr * t)
    per_tx = (e_tot.values * t) @ ops.g_rx.T
    return per_tx.ravel()


def forward_solve(config, t, ops=None, e_inc=None):
    """Noiseless measurements for a contrast image (accurate-mode state solve)."""
    if ops is None:
        ops = build_greens(config)
    if e_inc is None:
        e_inc = incident_fields(config)
    e_tot = solve_state(ops, t, e_inc, n_iters=ACCURATE_ITERS, tol=ACCURATE_TOL)
    return scattered_fields(ops, t, e_tot)


def add_noise(e_sca, snr_db, seed):
    """Add circular complex white Gaussian noise at the given SNR (dB).

    snr_db may be the string "noiseless", which returns the input unchanged.
    Deterministic for a fixed seed.
    """
    if snr_db == "noiseless":
        return np.asarray(e_sca, dtype=complex)
    e_sca = np.asarray(e_sca, dtype=complex)
    length = e_sca.size
    sigma2 = np.linalg.norm(e_sca) ** 2 / (length * 10.0 ** (snr_db / 10.0))
    rng = np.random.default_rng(seed)
    noise = np.sqrt(sigma2 / 2.0) * (rng.standard_normal(length)
                                     + 1j * rng.standard_normal(length))
    return e_sca + noise
