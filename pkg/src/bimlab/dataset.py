"""Randomized cylindrical-target scenes, rasterization and dataset generation.

Datasets store noiseless measurements; noise is added at consumption time so
one dataset serves every SNR condition. Each split lives in its own directory
{scenes.json, contrasts.bin, measurements.bin, manifest.json}; the manifest is
written last and marks a complete split.
"""

import dataclasses
import json
import os

import numpy as np

from . import emcore, tensorio
from .config import ConfigError, config_hash

SPLIT_OFFSETS = {"train": 0, "valid": 1, "test": 2}
_SPLIT_STRIDE = 10 ** 9

CONTRAST_MIN = 0.1
CONTRAST_MAX = 0.9
MAX_CYLINDERS = 3
_MAX_ATTEMPTS = 100


@dataclasses.dataclass(frozen=True)
class Cylinder:
    center_x: float
    center_y: float
    radius: float
    contrast: float


@dataclasses.dataclass(frozen=True)
class SceneSpec:
    cylinders: tuple
    seed: int

    def to_dict(self):
        return {"seed": self.seed,
                "cylinders": [dataclasses.asdict(c) for c in self.cylinders]}

    @classmethod
    def from_dict(cls, data):
        return cls(cylinders=tuple(Cylinder(**c) for c in data["cylinders"]),
                   seed=data["seed"])


@dataclasses.dataclass(frozen=True)
class SceneParams:
    half_width: float
    half_height: float
    r_min: float
    r_max: float

    def validate(self):
        if self.r_min <= 0 or self.r_max < self.r_min:
            raise ConfigError("need 0 < r_min <= r_max")
        if self.r_min > min(self.half_width, self.half_height):
            raise ConfigError("r_min exceeds the half-domain; no cylinder can fit")


def default_scene_params(config):
    """Radius range [2, 8] pixels, targets confined to the imaging domain."""
    wx, wy = config.domain_size_m
    dd = config.pixel_size_m
    return SceneParams(half_width=0.5 * wx, half_height=0.5 * wy,
                       r_min=2.0 * dd, r_max=8.0 * dd)


def random_scene(params, seed):
    """Sample a scene with 1-3 disjoint cylinders fully inside the domain.

    A candidate overlapping an already accepted cylinder is re-sampled up to
    100 times, after which the scene keeps the cylinders accepted so far.
    Deterministic per seed.
    """
    params.validate()
    rng = np.random.default_rng(seed)
    count = int(rng.integers(1, MAX_CYLINDERS + 1))
    accepted = []
    for _ in range(count):
        for _attempt in range(_MAX_ATTEMPTS):
            radius = float(rng.uniform(params.r_min, params.r_max))
            max_cx = params.half_width - radius
            max_cy = params.half_height - radius
            if max_cx < 0 or max_cy < 0:
                continue
            cx = float(rng.uniform(-max_cx, max_cx))
            cy = float(rng.uniform(-max_cy, max_cy))
            contrast = float(rng.uniform(CONTRAST_MIN, CONTRAST_MAX))
            disjoint = all(np.hypot(cx - c.center_x, cy - c.center_y)
                           >= radius + c.radius for c in accepted)
            if disjoint:
                accepted.append(Cylinder(cx, cy, radius, contrast))
                break
    return SceneSpec(cylinders=tuple(accepted), seed=seed)


def rasterize(scene, config):
    """Contrast image: pixel value = cylinder contrast where the pixel center
    lies inside the disk, zero elsewhere (real, stored as complex)."""
    centers = emcore.pixel_centers(config)
    t = np.zeros(config.n_pixels, dtype=complex)
    for cyl in scene.cylinders:
        inside = (np.hypot(centers[:, 0] - cyl.center_x,
                           centers[:, 1] - cyl.center_y) < cyl.radius)
        t[inside] = cyl.contrast
    return t


@dataclasses.dataclass
class DatasetBundle:
    split: str
    scenes: list
    contrasts: np.ndarray      # (n, N) complex
    measurements: np.ndarray   # (n, n_rx * n_tx) complex, noiseless
    meta: dict


def example_seed(base_seed, split, index):
    """Disjoint per-split seed streams: base + split_offset * 1e9 + index."""
    return base_seed + SPLIT_OFFSETS[split] * _SPLIT_STRIDE + index


def generate_split(config, split, size, base_seed, out_dir, params=None,
                   ops=None, e_inc=None, progress=None):
    """Generate one split on disk; returns its directory."""
    if params is None:
        params = default_scene_params(config)
    params.validate()
    if ops is None:
        ops = emcore.build_greens(config)
    if e_inc is None:
        e_inc = emcore.incident_fields(config)

    n_pix = config.n_pixels
    n_mea = config.rx_count * config.tx_count
    scenes = []
    contrasts = np.zeros((size, n_pix), dtype=complex)
    measurements = np.zeros((size, n_mea), dtype=complex)
    for i in range(size):
        seed = example_seed(base_seed, split, i)
        scene = random_scene(params, seed)
        t = rasterize(scene, config)
        scenes.append(scene)
        contrasts[i] = t
        measurements[i] = emcore.forward_solve(config, t, ops=ops, e_inc=e_inc)
        if progress is not None:
            progress(split, i + 1, size)

    split_dir = os.path.join(out_dir, split)
    os.makedirs(split_dir, exist_ok=True)
    with open(os.path.join(split_dir, "scenes.json"), "w", encoding="utf-8") as fh:
        json.dump([s.to_dict() for s in scenes], fh, indent=1)
    tensorio.write_tensors(split_dir, {"contrasts": contrasts},
                           payload_name="contrasts.bin",
                           manifest_name="_contrasts_manifest.json")
    tensorio.write_tensors(split_dir, {"measurements": measurements},
                           payload_name="measurements.bin",
                           manifest_name="_measurements_manifest.json")
    # merge into the single split manifest, written last as completion marker
    entries = []
    for name in ("_contrasts_manifest.json", "_measurements_manifest.json"):
        part = tensorio.read_manifest(split_dir, name)
        entries.extend(part["tensors"])
        os.remove(os.path.join(split_dir, name))
    meta = {
        "config": config.to_dict(),
        "config_hash": config_hash(config),
        "base_seed": base_seed,
        "split": split,
        "count": size,
        "scene_params": dataclasses.asdict(params),
        "noise": "noiseless (noise is added at consumption time)",
    }
    manifest = {"format": tensorio.FORMAT_NAME, "tensors": entries, "meta": meta}
    with open(os.path.join(split_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1)
    return split_dir


def generate_dataset(config, sizes, base_seed, out_dir, params=None, progress=None):
    """Generate all requested splits; sizes is a dict like {"train": 4000, ...}."""
    unknown = set(sizes) - set(SPLIT_OFFSETS)
    if unknown:
        raise ConfigError(f"unknown split names: {sorted(unknown)}")
    ops = emcore.build_greens(config)
    e_inc = emcore.incident_fields(config)
    dirs = {}
    for split in ("train", "valid", "test"):
        size = sizes.get(split, 0)
        if size > 0:
            dirs[split] = generate_split(config, split, size, base_seed, out_dir,
                                         params=params, ops=ops, e_inc=e_inc,
                                         progress=progress)
    return dirs


def load_split(split_dir):
    """Load one split; a missing manifest means an incomplete generation run."""
    if not os.path.exists(os.path.join(split_dir, "manifest.json")):
        raise FileNotFoundError(
            f"{split_dir}: no manifest.json (incomplete or missing split)")
    tensors, manifest = tensorio.read_tensors(split_dir)
    with open(os.path.join(split_dir, "scenes.json"), "r", encoding="utf-8") as fh:
        scenes = [SceneSpec.from_dict(d) for d in json.load(fh)]
    meta = manifest["meta"]
    contrasts = tensors["contrasts"].astype(complex)
    measurements = tensors["measurements"].astype(complex)
    if not (len(scenes) == contrasts.shape[0] == measurements.shape[0] == meta["count"]):
        raise ValueError(f"{split_dir}: inconsistent example counts")
    return DatasetBundle(split=meta["split"], scenes=scenes, contrasts=contrasts,
                         measurements=measurements, meta=meta)
