"""Generate test fixtures for the trainer from the reconstruction package.

Produces, under trainer/testdata/:
  dataset/        tiny dataset (train/valid/test splits) at an 8x8 micro config
  emref/          reference vectors for the numerical pipeline agreement tests
  unet/weights    a random weight bundle saved by the reconstruction package
  unet/vectors    forward-pass outputs for those weights on seeded inputs
  reports/        sbim evaluation report on the tiny test split (noiseless)

Run from the repository root with the package installed:
  python trainer/scripts/make_fixtures.py
"""

import json
import os
import shutil
import subprocess
import sys

import numpy as np

from bimlab import config as cfg
from bimlab import dataset as ds
from bimlab import emcore, nn, solvers, tensorio
from bimlab.special import hankel2

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
OUT = os.path.join(ROOT, "testdata")

MICRO = {
    "frequency_hz": 110e6,
    "grid_nx": 8,
    "grid_ny": 8,
    "pixel_size_m": 0.15,
    "tx_count": 4,
    "rx_count": 8,
    "transceiver_radius_m": 1.5,
    "n_bim": 3,
    "n_lwb": 6,
    "n_bcg": 4,
    "n_pow": 5,
    "sbim_delta": 0.001,
    "snr_db": "noiseless",
}


def make_dataset():
    out = os.path.join(OUT, "dataset")
    shutil.rmtree(out, ignore_errors=True)
    config_path = os.path.join(OUT, "micro_config.json")
    os.makedirs(OUT, exist_ok=True)
    with open(config_path, "w", encoding="utf-8") as fh:
        json.dump(MICRO, fh)
    subprocess.run(
        [sys.executable, "-m", "bimlab", "generate", "--config", config_path,
         "--train", "24", "--valid", "8", "--test", "8",
         "--seed", "424242", "--out", out],
        check=True)
    return config_path


def make_emref():
    out = os.path.join(OUT, "emref")
    shutil.rmtree(out, ignore_errors=True)
    config = cfg.config_from_dict(MICRO)
    ops = emcore.build_greens(config)
    e_inc = emcore.incident_fields(config)

    scene = ds.SceneSpec(seed=7, cylinders=[
        ds.Cylinder(center_x=0.15, center_y=-0.1, radius=0.25, contrast=0.6),
        ds.Cylinder(center_x=-0.3, center_y=0.2, radius=0.18, contrast=0.3)])
    t = ds.rasterize(scene, config)
    e_tot = emcore.solve_state(ops, t, e_inc,
                               n_iters=emcore.ACCURATE_ITERS,
                               tol=emcore.ACCURATE_TOL)
    e_sca = emcore.scattered_fields(ops, t, e_tot)
    h = solvers.assemble_observation(ops, e_tot)
    gamma, sigma = solvers.power_iteration(h, config.n_pow, seed=123)
    start = solvers.start_vector(h.shape[1], seed=123)
    lw = solvers.landweber_step(h, t, e_sca, gamma)
    sbim_result = solvers.sbim(config, e_sca, ops=ops, e_inc=e_inc, seed=11)

    # fixed-count (reconstruction-mode) state solve for exact-agreement checks
    e_tot_fix = emcore.solve_state(ops, t, e_inc, n_iters=config.n_bcg, tol=0.0)

    # full-precision copies for the < 1e-8 pipeline-agreement checks (the
    # shared tensor format stores complex64, which is float32-limited)
    def c64(arr):
        arr = np.asarray(arr, dtype=complex)
        return {"shape": list(arr.shape),
                "re": arr.real.ravel().tolist(),
                "im": arr.imag.ravel().tolist()}

    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "emref64.json"), "w", encoding="utf-8") as fh:
        json.dump({
            "contrast": c64(t),
            "e_tot": c64(np.stack(e_tot.values)),
            "e_tot_fixed": c64(np.stack(e_tot_fix.values)),
            "e_sca": c64(e_sca),
            "h": c64(h),
            "start_vector": c64(start),
            "landweber": c64(lw),
            "sbim_final": c64(sbim_result.final),
            "g_rx": c64(ops.g_rx),
            "a_dom": c64(ops.a_dom),
            "e_inc": c64(np.stack(e_inc.values)),
        }, fh)

    # evaluate at the float32-rounded abscissae actually stored in the bundle
    xs = np.logspace(-3, 2, 64).astype(np.float32).astype(np.float64)
    tensorio.write_tensors(out, {
        "g_rx": ops.g_rx,
        "a_dom": ops.a_dom,
        "e_inc": np.stack(e_inc.values),
        "contrast": t,
        "e_tot": np.stack(e_tot.values),
        "e_tot_fixed": np.stack(e_tot_fix.values),
        "e_sca": e_sca,
        "h": h,
        "start_vector": start,
        "landweber": lw,
        "sbim_final": sbim_result.final,
        "sbim_per_step": np.stack(sbim_result.per_step),
        "hankel_x": xs.astype(np.float32),
        "hankel0": np.asarray([hankel2(0, x) for x in xs]),
        "hankel1": np.asarray([hankel2(1, x) for x in xs]),
    }, meta={"config": MICRO, "gamma": gamma, "sigma": sigma,
             "power_seed": 123, "sbim_seed": 11,
             "sbim_misfits": [float(v) for v in sbim_result.misfits],
             "sbim_gammas": [float(v) for v in sbim_result.gammas],
             "scene": scene.to_dict()})


def make_unet():
    wdir = os.path.join(OUT, "unet", "weights")
    vdir = os.path.join(OUT, "unet", "vectors")
    shutil.rmtree(os.path.join(OUT, "unet"), ignore_errors=True)
    weights = nn.random_weights(seed=7)
    nn.save_weights(weights, wdir, meta={"seed": 7})

    rng = np.random.default_rng(99)
    inputs = rng.normal(0.0, 0.5, (4, 2, 8, 8)).astype(np.float32)
    outputs = np.stack([nn.unet_forward(weights, x) for x in inputs])
    tensorio.write_tensors(vdir, {"inputs": inputs, "outputs": outputs},
                           payload_name="vectors.bin", meta={"seed": 99})


def make_reports(config_path):
    out = os.path.join(OUT, "reports")
    shutil.rmtree(out, ignore_errors=True)
    subprocess.run(
        [sys.executable, "-m", "bimlab", "reconstruct",
         "--dataset", os.path.join(OUT, "dataset"), "--split", "test",
         "--method", "sbim", "--snr", "noiseless", "--seed", "0",
         "--out", os.path.join(out, "sbim_test")],
        check=True)


def main():
    config_path = make_dataset()
    make_emref()
    make_unet()
    make_reports(config_path)
    print(f"fixtures written to {OUT}")


if __name__ == "__main__":
    main()
