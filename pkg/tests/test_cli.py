import json
import os

import numpy as np
import pytest

from bimlab import cli, dataset as ds, nn, tensorio
from bimlab.config import ProblemConfig, config_hash

MICRO = {
    "grid_nx": 8, "grid_ny": 8, "tx_count": 3, "rx_count": 5,
    "transceiver_radius_m": 1.5,
}


@pytest.fixture
def micro_config_path(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(MICRO))
    return str(path)


def _strip_timing(report):
    out = json.loads(json.dumps(report))
    out.pop("total_wall_time_s", None)
    for e in out["examples"]:
        e.pop("wall_time_s", None)
    return out


def test_generate_and_determinism(tmp_path, micro_config_path):
    out = tmp_path / "data"
    args = ["generate", "--config", micro_config_path, "--test", "3",
            "--seed", "1", "--out", str(out)]
    assert cli.main(args) == 0
    manifest = (out / "test" / "manifest.json").read_bytes()

    out2 = tmp_path / "data2"
    assert cli.main(args[:-1] + [str(out2)]) == 0
    assert (out2 / "test" / "manifest.json").read_bytes() == manifest


def test_generate_config_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({**MICRO, "grid_nx": 2, "grid_ny": 2}))
    code = cli.main(["generate", "--config", str(bad), "--test", "1",
                     "--out", str(tmp_path / "x")])
    assert code == cli.EXIT_USAGE


def test_unknown_config_key(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({**MICRO, "bogus_key": 1}))
    code = cli.main(["generate", "--config", str(bad), "--test", "1",
                     "--out", str(tmp_path / "x")])
    assert code == cli.EXIT_USAGE


def test_forward_command(tmp_path, micro_config_path):
    scene = {"seed": 0, "cylinders": [
        {"center_x": 0.1, "center_y": -0.2, "radius": 0.35, "contrast": 0.5}]}
    scene_path = tmp_path / "scene.json"
    scene_path.write_text(json.dumps(scene))
    out = tmp_path / "fwd"
    assert cli.main(["forward", "--config", micro_config_path,
                     "--scene", str(scene_path), "--out", str(out)]) == 0
    tensors, manifest = tensorio.read_tensors(out)
    assert tensors["measurement"].shape == (MICRO["tx_count"] * MICRO["rx_count"],)
    assert manifest["meta"]["scene"] == scene


@pytest.fixture
def micro_dataset(tmp_path, micro_config_path):
    out = tmp_path / "data"
    assert cli.main(["generate", "--config", micro_config_path, "--test", "4",
                     "--seed", "2", "--out", str(out)]) == 0
    return out


def test_reconstruct_sbim_report(tmp_path, micro_dataset):
    res = tmp_path / "res"
    assert cli.main(["reconstruct", "--method", "sbim", "--dataset",
                     str(micro_dataset), "--split", "test", "--examples", "3",
                     "--out", str(res)]) == 0
    report = json.loads((res / "report.json").read_text())
    assert len(report["examples"]) == 3
    assert all(e["rne_percent"] >= 0 for e in report["examples"])
    assert len(report["mrne_per_step_percent"]) == ProblemConfig().n_bim

    res2 = tmp_path / "res2"
    assert cli.main(["reconstruct", "--method", "sbim", "--dataset",
                     str(micro_dataset), "--split", "test", "--examples", "3",
                     "--out", str(res2)]) == 0
    report2 = json.loads((res2 / "report.json").read_text())
    assert _strip_timing(report) == _strip_timing(report2)
    # per-example tensors byte-identical
    assert (res / "ex00000" / "tensors.bin").read_bytes() == \
        (res2 / "ex00000" / "tensors.bin").read_bytes()


def test_reconstruct_tbim_missing_weights(tmp_path, micro_dataset):
    code = cli.main(["reconstruct", "--method", "tbim", "--dataset",
                     str(micro_dataset), "--out", str(tmp_path / "r")])
    assert code != 0


def test_reconstruct_landweber_bim(tmp_path, micro_dataset):
    res = tmp_path / "lwb"
    assert cli.main(["reconstruct", "--method", "landweber-bim", "--dataset",
                     str(micro_dataset), "--examples", "2", "--snr", "25",
                     "--out", str(res)]) == 0
    report = json.loads((res / "report.json").read_text())
    assert report["snr"] == 25.0


def _inject_results(results_dir, bundle, finals, n_bim):
    os.makedirs(results_dir, exist_ok=True)
    examples = []
    for idx, final in enumerate(finals):
        tensorio.write_tensors(
            os.path.join(results_dir, f"ex{idx:05d}"),
            {"final": final, "per_step": np.stack([final] * n_bim),
             "gammas": np.ones(n_bim, np.float32),
             "misfits": np.zeros(n_bim, np.float32)},
            meta={"index": idx})
        examples.append({"index": idx, "rne_percent": 0.0, "wall_time_s": 0.0})
    report = {"method": "sbim", "split": "test", "snr": "noiseless",
              "noise_seed": 0, "config_hash": bundle.meta["config_hash"],
              "examples": examples}
    with open(os.path.join(results_dir, "report.json"), "w") as fh:
        json.dump(report, fh)


def test_evaluate_perfect_and_zero(tmp_path, micro_dataset):
    bundle = ds.load_split(str(micro_dataset / "test"))
    n_bim = ProblemConfig().n_bim
    perfect = tmp_path / "perfect"
    _inject_results(perfect, bundle, list(bundle.contrasts), n_bim)
    zero = tmp_path / "zero"
    _inject_results(zero, bundle, [np.zeros_like(c) for c in bundle.contrasts], n_bim)

    table_path = tmp_path / "table.json"
    assert cli.main(["evaluate", "--results", str(perfect), str(zero),
                     "--dataset", str(micro_dataset), "--out", str(table_path)]) == 0
    table = json.loads(table_path.read_text())
    # complex64 storage rounding keeps "perfect" a hair above zero
    assert table["rows"][0]["mrne_percent"] < 1e-8
    assert table["rows"][1]["mrne_percent"] == pytest.approx(100.0, abs=1e-9)
    # MRNE is the mean of the per-example RNEs
    for row in table["rows"]:
        assert row["mrne_percent"] == pytest.approx(np.mean(row["rne_percent"]),
                                                    abs=1e-12)


def test_evaluate_hash_mismatch(tmp_path, micro_dataset):
    bundle = ds.load_split(str(micro_dataset / "test"))
    res = tmp_path / "res"
    _inject_results(res, bundle, [np.zeros_like(bundle.contrasts[0])],
                    ProblemConfig().n_bim)
    report = json.loads((res / "report.json").read_text())
    report["config_hash"] = "deadbeefdeadbeef"
    (res / "report.json").write_text(json.dumps(report))
    code = cli.main(["evaluate", "--results", str(res),
                     "--dataset", str(micro_dataset)])
    assert code == cli.EXIT_USAGE


def test_parity_check_command(tmp_path):
    weights = nn.random_weights(seed=9)
    bundle_dir = tmp_path / "bundle"
    nn.save_weights(weights, bundle_dir)
    rng = np.random.default_rng(10)
    inputs = rng.standard_normal((5, 2, 16, 16)).astype(np.float32)
    outputs = np.stack([nn.unet_forward(weights, x) for x in inputs])
    vec_dir = tmp_path / "vectors"
    tensorio.write_tensors(vec_dir, {"inputs": inputs, "outputs": outputs})
    assert cli.main(["parity-check", "--weights", str(bundle_dir),
                     "--vectors", str(vec_dir)]) == 0

    # corrupt the stored outputs: the check must fail numerically
    tensorio.write_tensors(vec_dir, {"inputs": inputs, "outputs": outputs + 1.0})
    assert cli.main(["parity-check", "--weights", str(bundle_dir),
                     "--vectors", str(vec_dir)]) == cli.EXIT_NUMERICAL


def test_usage_error_exit_code():
    assert cli.main(["reconstruct"]) == cli.EXIT_USAGE
    assert cli.main(["evaluate", "--results", "/nonexistent",
                     "--dataset", "/nonexistent"]) == cli.EXIT_IO
