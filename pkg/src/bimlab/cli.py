"""Command-line surface: generate, forward, reconstruct, evaluate, parity-check.

Exit codes: 0 success, 1 usage/config error, 2 IO error, 3 numerical failure.
"""

import argparse
import json
import os
import sys
import time

import numpy as np

from . import dataset as ds
from . import emcore, nn, solvers, tensorio
from .config import ConfigError, ProblemConfig, config_hash, load_config

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_NUMERICAL = 3

PARITY_TOL = 1e-4


class _Parser(argparse.ArgumentParser):
    # exit 1 (not argparse's default 2) on usage errors, per the exit-code contract
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _load_config_arg(path):
    if path is None:
        return ProblemConfig()
    return load_config(path)


def _jobs(args):
    env = os.environ.get("BIMLAB_THREADS")
    if env is not None:
        return max(1, int(env))
    return max(1, getattr(args, "jobs", 1))


def cmd_generate(args):
    config = _load_config_arg(args.config)
    sizes = {"train": args.train, "valid": args.valid, "test": args.test}

    def progress(split, done, total):
        if done % 50 == 0 or done == total:
            print(f"[generate] {split}: {done}/{total}", flush=True)

    dirs = ds.generate_dataset(config, sizes, args.seed, args.out, progress=progress)
    for split, path in dirs.items():
        print(f"{split}: {os.path.join(path, 'manifest.json')}")
    print(f"config_hash: {config_hash(config)}")
    return EXIT_OK


def cmd_forward(args):
    config = _load_config_arg(args.config)
    with open(args.scene, "r", encoding="utf-8") as fh:
        scene = ds.SceneSpec.from_dict(json.load(fh))
    t = ds.rasterize(scene, config)
    e_sca = emcore.forward_solve(config, t)
    tensorio.write_tensors(args.out, {"contrast": t, "measurement": e_sca},
                           meta={"config_hash": config_hash(config),
                                 "scene": scene.to_dict()})
    print(f"wrote {os.path.join(args.out, 'manifest.json')}")
    return EXIT_OK


def _reconstruct_one(method, config, e_mea, weights, ops, e_inc, seed):
    if method == "sbim":
        return solvers.sbim(config, e_mea, ops=ops, e_inc=e_inc, seed=seed)
    if method == "tbim":
        return solvers.tbim(config, e_mea, weights, ops=ops, e_inc=e_inc, seed=seed)
    if method == "landweber-bim":
        regs = [solvers.IdentityRegularizer()] * config.n_bim
        return solvers._bim_loop(config, e_mea, regs, ops=ops, e_inc=e_inc, seed=seed)
    raise ValueError(f"unknown method {method!r}")


_WORKER = {}


def _init_recon_worker(ctx):
    _WORKER.update(ctx)


def _recon_example(idx):
    w = _WORKER
    config, bundle = w["config"], w["bundle"]
    e_mea = emcore.add_noise(bundle.measurements[idx], w["snr"], seed=w["seed"] + idx)
    t0 = time.perf_counter()
    result = _reconstruct_one(w["method"], config, e_mea, w["weights"],
                              w["ops"], w["e_inc"], seed=w["seed"] + idx)
    wall = time.perf_counter() - t0
    err = solvers.rne(result.final, bundle.contrasts[idx])
    ex_dir = os.path.join(w["out"], f"ex{idx:05d}")
    tensorio.write_tensors(
        ex_dir,
        {"final": result.final,
         "per_step": np.stack(result.per_step),
         "gammas": np.asarray(result.gammas, dtype=np.float32),
         "misfits": np.asarray(result.misfits, dtype=np.float32)},
        meta={"index": idx, "rne_percent": err, "method": w["method"],
              "snr": w["snr"], "config_hash": bundle.meta["config_hash"]})
    return {"index": idx, "rne_percent": err, "wall_time_s": wall}


def cmd_reconstruct(args):
    split_dir = os.path.join(args.dataset, args.split)
    bundle = ds.load_split(split_dir)
    config = ds_config(bundle)
    snr = args.snr if args.snr == "noiseless" else float(args.snr)

    weights = None
    if args.method == "tbim":
        if args.weights is None:
            print("tbim requires --weights with per-step bundles", file=sys.stderr)
            return EXIT_USAGE
        weights = [nn.load_weights(os.path.join(args.weights, f"step{i + 1}"))
                   for i in range(config.n_bim)]

    count = bundle.contrasts.shape[0]
    if args.examples is not None:
        count = min(count, args.examples)
    ops = emcore.build_greens(config)
    e_inc = emcore.incident_fields(config)

    os.makedirs(args.out, exist_ok=True)
    ctx = {"config": config, "bundle": bundle, "snr": snr, "seed": args.seed,
           "method": args.method, "weights": weights, "ops": ops, "e_inc": e_inc,
           "out": args.out}
    t_start = time.perf_counter()
    jobs = _jobs(args)
    if jobs > 1:
        import concurrent.futures
        with concurrent.futures.ProcessPoolExecutor(
                max_workers=jobs, initializer=_init_recon_worker,
                initargs=(ctx,)) as pool:
            per_example = list(pool.map(_recon_example, range(count)))
    else:
        _init_recon_worker(ctx)
        per_example = [_recon_example(idx) for idx in range(count)]

    per_step_rne = np.zeros((count, config.n_bim))
    for idx in range(count):
        tensors, _ = tensorio.read_tensors(os.path.join(args.out, f"ex{idx:05d}"))
        for i in range(config.n_bim):
            per_step_rne[idx, i] = solvers.rne(tensors["per_step"][i],
                                               bundle.contrasts[idx])
    report = {
        "method": args.method,
        "split": args.split,
        "snr": snr,
        "noise_seed": args.seed,
        "config_hash": bundle.meta["config_hash"],
        "examples": per_example,
        "mrne_percent": float(np.mean([e["rne_percent"] for e in per_example])),
        "mrne_per_step_percent": [float(v) for v in per_step_rne.mean(axis=0)],
        "total_wall_time_s": time.perf_counter() - t_start,
    }
    report_path = os.path.join(args.out, "report.json")
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=1, sort_keys=True)
    print(f"wrote {report_path} (MRNE {report['mrne_percent']:.2f}%)")
    return EXIT_OK


def ds_config(bundle):
    from .config import config_from_dict
    return config_from_dict(bundle.meta["config"])


def cmd_evaluate(args):
    rows = []
    dataset_cache = {}
    for results_dir in args.results:
        with open(os.path.join(results_dir, "report.json"), "r", encoding="utf-8") as fh:
            report = json.load(fh)
        split_dir = os.path.join(args.dataset, report["split"])
        if split_dir not in dataset_cache:
            dataset_cache[split_dir] = ds.load_split(split_dir)
        bundle = dataset_cache[split_dir]
        if bundle.meta["config_hash"] != report["config_hash"]:
            print(f"config hash mismatch: dataset {bundle.meta['config_hash']} vs "
                  f"results {report['config_hash']}", file=sys.stderr)
            return EXIT_USAGE
        config = ds_config(bundle)
        indices = [e["index"] for e in report["examples"]]
        per_step = np.zeros((len(indices), config.n_bim))
        finals = np.zeros(len(indices))
        for row, idx in enumerate(indices):
            tensors, _ = tensorio.read_tensors(os.path.join(results_dir, f"ex{idx:05d}"))
            finals[row] = solvers.rne(tensors["final"], bundle.contrasts[idx])
            for i in range(config.n_bim):
                per_step[row, i] = solvers.rne(tensors["per_step"][i],
                                               bundle.contrasts[idx])
        rows.append({
            "results_dir": results_dir,
            "method": report["method"],
            "snr": report["snr"],
            "examples": len(indices),
            "rne_percent": [float(v) for v in finals],
            "mrne_percent": float(finals.mean()),
            "mrne_per_step_percent": [float(v) for v in per_step.mean(axis=0)],
        })

    table = {"rows": rows}
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(table, fh, indent=1, sort_keys=True)
    n_steps = len(rows[0]["mrne_per_step_percent"]) if rows else 0
    header = f"{'method':<14}{'SNR':>12}" + "".join(f"{f'i={i + 1}':>10}" for i in range(n_steps))
    print(header)
    for row in rows:
        snr = row["snr"] if row["snr"] == "noiseless" else f"{row['snr']:g} dB"
        cells = "".join(f"{v:>9.2f}%" for v in row["mrne_per_step_percent"])
        print(f"{row['method']:<14}{snr:>12}{cells}")
    return EXIT_OK


def cmd_parity_check(args):
    weights = nn.load_weights(args.weights)
    tensors, _ = tensorio.read_tensors(args.vectors)
    inputs, outputs = tensors["inputs"], tensors["outputs"]
    worst = 0.0
    for x, y_ref in zip(inputs, outputs):
        y = nn.unet_forward(weights, x)
        rel = np.linalg.norm(y - y_ref) / max(np.linalg.norm(y_ref), 1e-30)
        worst = max(worst, float(rel))
    print(f"parity: {inputs.shape[0]} vectors, max relative error {worst:.3e}")
    if worst > PARITY_TOL:
        print(f"parity check FAILED (tolerance {PARITY_TOL:g})", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="bimlab",
                     description="2D EM inverse-scattering reconstruction toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a synthetic dataset")
    p.add_argument("--config", default=None)
    p.add_argument("--train", type=int, default=0)
    p.add_argument("--valid", type=int, default=0)
    p.add_argument("--test", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("forward", help="noiseless measurements for one scene")
    p.add_argument("--config", default=None)
    p.add_argument("--scene", required=True, help="scene spec JSON file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_forward)

    p = sub.add_parser("reconstruct", help="run a reconstruction method over a split")
    p.add_argument("--method", choices=["sbim", "tbim", "landweber-bim"], required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", choices=["train", "valid", "test"], default="test")
    p.add_argument("--snr", default="noiseless", help='dB value or "noiseless"')
    p.add_argument("--weights", default=None, help="bundle set dir with step1/..stepN/")
    p.add_argument("--examples", type=int, default=None, help="limit to the first k")
    p.add_argument("--seed", type=int, default=0, help="noise/power-iteration seed")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("evaluate", help="recompute RNE/MRNE from stored results")
    p.add_argument("--results", nargs="+", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", default=None, help="write the table as JSON here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("parity-check", help="verify unet_forward against parity vectors")
    p.add_argument("--weights", required=True)
    p.add_argument("--vectors", required=True)
    p.set_defaults(func=cmd_parity_check)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, tensorio.TensorFormatError, json.JSONDecodeError) as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
