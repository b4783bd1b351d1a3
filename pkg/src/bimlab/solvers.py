"""Linear inverse machinery and the SBIM/TBIM outer loops.

The outer Born iteration alternates a linearized inversion (ISTA or its
trained variant TISTA) with a fixed-count state-equation update of the total
fields. Step lengths come from power iteration on the cascaded observation
matrix, gamma = 1 / sigma_max^2.
"""

import dataclasses

import numpy as np

from . import emcore


def assemble_observation(ops, e_tot):
    """Cascade g_rx * D(e_tot_tr) over transmitters into one observation matrix.

    Row block tr of the result maps contrast to the receivers of transmitter tr,
    matching the transmitter-major measurement ordering.
    """
    if e_tot.kind != "total":
        raise ValueError("assemble_observation expects a total FieldSet")
    if e_tot.values.shape[1] != ops.g_rx.shape[1]:
        raise ValueError("field length does not match the operator grid")
    blocks = [ops.g_rx * e_tot.values[i][None, :] for i in range(e_tot.values.shape[0])]
    return np.vstack(blocks)


_SM64_MASK = (1 << 64) - 1


def _splitmix64_stream(seed, count):
    """count doubles in [0, 1) from the splitmix64 bit generator.

    Implemented explicitly (not via numpy's generators) so that reference
    implementations in other languages can reproduce the identical stream.
    """
    state = seed & _SM64_MASK
    out = np.empty(count)
    for i in range(count):
        state = (state + 0x9E3779B97F4A7C15) & _SM64_MASK
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _SM64_MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _SM64_MASK
        z = z ^ (z >> 31)
        out[i] = (z >> 11) * 2.0 ** -53
    return out


def start_vector(n, seed):
    """Deterministic complex unit start vector for power iteration.

    splitmix64 uniforms fed through Box-Muller, two per entry (re, im), so the
    vector is reproducible across implementations from the seed alone.
    """
    u = _splitmix64_stream(seed, 2 * n)
    u1 = np.maximum(u[0::2], 1e-300)
    u2 = u[1::2]
    r = np.sqrt(-2.0 * np.log(u1))
    v = r * np.cos(2.0 * np.pi * u2) + 1j * r * np.sin(2.0 * np.pi * u2)
    return v / np.linalg.norm(v)


def power_iteration(h, n_pow, seed=0):
    """Estimate the largest singular value of h and the step length gamma = 1/sigma^2.

    Iterates v <- (h^H h) v / ||(h^H h) v|| from a seeded random unit start for
    n_pow counts, then takes sigma^2 = ||h^H h v||. The estimate is a lower
    bound on sigma_max^2.
    """
    if n_pow < 1:
        raise ValueError("n_pow must be >= 1")
    v = start_vector(h.shape[1], seed)
    for _ in range(n_pow):
        w = h.conj().T @ (h @ v)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            raise ValueError("power iteration on a zero operator: gamma undefined")
        v = w / norm
    sigma2 = np.linalg.norm(h.conj().T @ (h @ v))
    if sigma2 == 0.0:
        raise ValueError("power iteration on a zero operator: gamma undefined")
    return 1.0 / sigma2, np.sqrt(sigma2)


def soft_threshold(z, delta):
    """Complex soft-thresholding: shrink magnitudes by delta, keep phases."""
    if delta < 0:
        raise ValueError("delta must be >= 0")
    z = np.asarray(z, dtype=complex)
    mag = np.abs(z)
    scale = np.zeros_like(mag)
    nz = mag > 0
    scale[nz] = np.maximum(mag[nz] - delta, 0.0) / mag[nz]
    return z * scale


def landweber_step(h, t, e_mea, gamma):
    """One gradient step on the data misfit: t - gamma * h^H (h t - e_mea)."""
    return t - gamma * (h.conj().T @ (h @ t - e_mea))


class SoftThresholdRegularizer:
    def __init__(self, delta):
        self.delta = delta

    def __call__(self, t):
        return soft_threshold(t, self.delta)


class IdentityRegularizer:
    def __call__(self, t):
        return np.asarray(t, dtype=complex)


class NetworkRegularizer:
    """U-net denoiser applied image-wise: complex vector -> (re, im) channels -> net -> back."""

    def __init__(self, weights, grid_ny, grid_nx):
        from . import nn
        self._forward = nn.unet_forward
        nn.validate_weights(weights)
        self.weights = weights
        self.grid_ny = grid_ny
        self.grid_nx = grid_nx

    def __call__(self, t):
        t = np.asarray(t, dtype=complex)
        if t.size != self.grid_ny * self.grid_nx:
            raise ValueError("contrast length does not match the regularizer grid")
        img = t.reshape(self.grid_ny, self.grid_nx)
        x = np.stack([img.real, img.imag]).astype(np.float32)
        y = self._forward(self.weights, x)
        out = y[0].astype(np.float64) + 1j * y[1].astype(np.float64)
        return out.ravel()


def tista(h, e_mea, gamma, reg, n_lwb, t0):
    """n_lwb repetitions of a Landweber step followed by the regularizer."""
    if n_lwb < 1:
        raise ValueError("n_lwb must be >= 1")
    t = np.asarray(t0, dtype=complex)
    for _ in range(n_lwb):
        t = reg(landweber_step(h, t, e_mea, gamma))
    return t


@dataclasses.dataclass
class ReconstructionResult:
    final: np.ndarray
    per_step: list  # contrast after each outer step
    gammas: list
    misfits: list  # ||H_i t_i - e_mea||_2 per outer step


def _bim_loop(config, e_mea, regularizers, ops=None, e_inc=None, seed=0):
    """Shared outer loop: Born init, per-step {assemble, power iter, TISTA, state update}."""
    e_mea = np.asarray(e_mea, dtype=complex)
    expected = config.rx_count * config.tx_count
    if e_mea.size != expected:
        raise ValueError(f"measurement length {e_mea.size} != rx_count*tx_count = {expected}")
    if ops is None:
        ops = emcore.build_greens(config)
    if e_inc is None:
        e_inc = emcore.incident_fields(config)

    e_tot = emcore.FieldSet(values=e_inc.values.copy(), kind="total")
    t = np.zeros(config.n_pixels, dtype=complex)
    per_step, gammas, misfits = [], [], []
    for i in range(config.n_bim):
        h = assemble_observation(ops, e_tot)
        gamma, _sigma = power_iteration(h, config.n_pow, seed=seed + i)
        t = tista(h, e_mea, gamma, regularizers[i], config.n_lwb, t)
        per_step.append(t.copy())
        gammas.append(gamma)
        misfits.append(float(np.linalg.norm(h @ t - e_mea)))
        if i + 1 < config.n_bim:
            e_tot = emcore.solve_state(ops, t, e_inc, n_iters=config.n_bcg, tol=0.0)
    return ReconstructionResult(final=t, per_step=per_step, gammas=gammas, misfits=misfits)


def sbim(config, e_mea, ops=None, e_inc=None, seed=0):
    """Sparse Born iterative method: ISTA inner loop with absolute threshold sbim_delta."""
    regs = [SoftThresholdRegularizer(config.sbim_delta)] * config.n_bim
    return _bim_loop(config, e_mea, regs, ops=ops, e_inc=e_inc, seed=seed)


def tbim(config, e_mea, weights, ops=None, e_inc=None, seed=0):
    """Trained Born iterative method: one U-net regularizer per outer step.

    weights: list of n_bim UNetWeights (or ready regularizer callables, as a
    test hook for the identity-reduction check).
    """
    if len(weights) != config.n_bim:
        raise ValueError(f"need {config.n_bim} weight bundles, got {len(weights)}")
    regs = [w if callable(w) else NetworkRegularizer(w, config.grid_ny, config.grid_nx)
            for w in weights]
    return _bim_loop(config, e_mea, regs, ops=ops, e_inc=e_inc, seed=seed)


def rne(x, x_ref):
    """Relative norm error in percent: 100 * ||x - x_ref||^2 / ||x_ref||^2."""
    x = np.asarray(x).ravel()
    x_ref = np.asarray(x_ref).ravel()
    if x.shape != x_ref.shape:
        raise ValueError("vectors must have the same length")
    ref_norm2 = np.linalg.norm(x_ref) ** 2
    if ref_norm2 == 0.0:
        raise ValueError("reference vector must be nonzero")
    return 100.0 * np.linalg.norm(x - x_ref) ** 2 / ref_norm2


def mrne(xs, x_refs):
    """Mean RNE over a set of (reconstruction, reference) pairs."""
    if len(xs) != len(x_refs):
        raise ValueError("sets must have the same size")
    return float(np.mean([rne(x, r) for x, r in zip(xs, x_refs)]))
