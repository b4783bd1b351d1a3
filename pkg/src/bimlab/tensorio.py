"""Binary tensor exchange format.

A manifest.json sidecar lists named tensors with shape, dtype and byte offset
into one or more raw little-endian payload files. complex64 tensors are stored
as interleaved (re, im) float32 pairs, row-major.
"""

import json
import os

import numpy as np

FORMAT_NAME = "bimlab-tensors-v1"

_DTYPES = {
    "float32": np.dtype("<f4"),
    "complex64": np.dtype("<c8"),
}


class TensorFormatError(Exception):
    """Base class for tensor bundle load failures."""


class MissingTensorError(TensorFormatError):
    pass


class TensorShapeError(TensorFormatError):
    pass


class TruncatedPayloadError(TensorFormatError):
    pass


class UnknownDtypeError(TensorFormatError):
    pass


def write_tensors(directory, tensors, payload_name="tensors.bin",
                  manifest_name="manifest.json", meta=None):
    """Write named tensors to directory/{payload_name} + manifest.

    tensors: dict name -> ndarray (float32 or complex64 castable).
    meta: optional JSON-serializable dict stored under "meta" in the manifest.
    The manifest is written last so its presence marks a complete bundle.
    """
    os.makedirs(directory, exist_ok=True)
    entries = []
    offset = 0
    with open(os.path.join(directory, payload_name), "wb") as fh:
        for name, array in tensors.items():
            arr = np.ascontiguousarray(array)
            if np.iscomplexobj(arr):
                arr = arr.astype(np.complex64)
                dtype = "complex64"
            else:
                arr = arr.astype(np.float32)
                dtype = "float32"
            raw = arr.astype(_DTYPES[dtype]).tobytes()
            entries.append({
                "name": name,
                "shape": list(arr.shape),
                "dtype": dtype,
                "offset": offset,
                "payload": payload_name,
            })
            fh.write(raw)
            offset += len(raw)
    manifest = {"format": FORMAT_NAME, "tensors": entries}
    if meta is not None:
        manifest["meta"] = meta
    manifest_path = os.path.join(directory, manifest_name)
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1)
    return manifest_path


def read_manifest(directory, manifest_name="manifest.json"):
    with open(os.path.join(directory, manifest_name), "r", encoding="utf-8") as fh:
        return json.load(fh)


def read_tensors(directory, manifest_name="manifest.json"):
    """Load every tensor of a bundle. Returns (dict name -> ndarray, manifest)."""
    manifest = read_manifest(directory, manifest_name)
    payload_cache = {}
    out = {}
    for entry in manifest["tensors"]:
        name = entry["name"]
        dtype_name = entry["dtype"]
        if dtype_name not in _DTYPES:
            raise UnknownDtypeError(f"tensor {name!r}: unknown dtype {dtype_name!r}")
        dtype = _DTYPES[dtype_name]
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        payload = entry.get("payload", "tensors.bin")
        if payload not in payload_cache:
            with open(os.path.join(directory, payload), "rb") as fh:
                payload_cache[payload] = fh.read()
        raw = payload_cache[payload]
        offset = entry["offset"]
        nbytes = count * dtype.itemsize
        if offset + nbytes > len(raw):
            raise TruncatedPayloadError(
                f"tensor {name!r}: payload {payload!r} has {len(raw)} bytes, "
                f"need {offset + nbytes}")
        out[name] = np.frombuffer(raw, dtype=dtype, count=count,
                                  offset=offset).reshape(shape).copy()
    return out, manifest
