/**
 * Binary tensor exchange format shared with the reconstruction package.
 *
 * A manifest.json sidecar lists named tensors with shape, dtype and byte
 * offset into raw little-endian payload files. complex64 tensors are stored
 * as interleaved (re, im) float32 pairs, row-major. The manifest is written
 * last so its presence marks a complete bundle.
 */

import * as fs from "node:fs";
import * as path from "node:path";

export const FORMAT_NAME = "bimlab-tensors-v1";

export type Dtype = "float32" | "complex64";

export interface Tensor {
  shape: number[];
  dtype: Dtype;
  /** complex64 tensors hold interleaved (re, im) pairs. */
  data: Float32Array;
}

export interface ManifestEntry {
  name: string;
  shape: number[];
  dtype: Dtype;
  offset: number;
  payload: string;
}

export interface Manifest {
  format: string;
  tensors: ManifestEntry[];
  meta?: Record<string, unknown>;
}

export class TensorFormatError extends Error {}
export class MissingTensorError extends TensorFormatError {}
export class TensorShapeError extends TensorFormatError {}
export class TruncatedPayloadError extends TensorFormatError {}
export class UnknownDtypeError extends TensorFormatError {}

const ITEM_BYTES: Record<Dtype, number> = { float32: 4, complex64: 8 };

export function numel(shape: number[]): number {
  return shape.reduce((a, b) => a * b, 1);
}

export function writeTensors(
  directory: string,
  tensors: Map<string, Tensor>,
  payloadName = "tensors.bin",
  manifestName = "manifest.json",
  meta?: Record<string, unknown>,
): string {
  fs.mkdirSync(directory, { recursive: true });
  const entries: ManifestEntry[] = [];
  const chunks: Buffer[] = [];
  let offset = 0;
  for (const [name, tensor] of tensors) {
    const expected =
      numel(tensor.shape) * (tensor.dtype === "complex64" ? 2 : 1);
    if (tensor.data.length !== expected) {
      throw new TensorShapeError(
        `tensor ${name}: data length ${tensor.data.length} does not match shape`,
      );
    }
    const raw = Buffer.from(
      tensor.data.buffer,
      tensor.data.byteOffset,
      tensor.data.byteLength,
    );
    entries.push({
      name,
      shape: [...tensor.shape],
      dtype: tensor.dtype,
      offset,
      payload: payloadName,
    });
    chunks.push(Buffer.from(raw)); // copy: caller may reuse the array
    offset += raw.length;
  }
  fs.writeFileSync(path.join(directory, payloadName), Buffer.concat(chunks));
  const manifest: Manifest = { format: FORMAT_NAME, tensors: entries };
  if (meta !== undefined) manifest.meta = meta;
  const manifestPath = path.join(directory, manifestName);
  fs.writeFileSync(manifestPath, JSON.stringify(manifest, null, 1));
  return manifestPath;
}

export function readManifest(
  directory: string,
  manifestName = "manifest.json",
): Manifest {
  const raw = fs.readFileSync(path.join(directory, manifestName), "utf-8");
  return JSON.parse(raw) as Manifest;
}

export function readTensors(
  directory: string,
  manifestName = "manifest.json",
): { tensors: Map<string, Tensor>; manifest: Manifest } {
  const manifest = readManifest(directory, manifestName);
  const payloads = new Map<string, Buffer>();
  const tensors = new Map<string, Tensor>();
  for (const entry of manifest.tensors) {
    const dtype = entry.dtype;
    if (dtype !== "float32" && dtype !== "complex64") {
      throw new UnknownDtypeError(
        `tensor ${entry.name}: unknown dtype ${String(dtype)}`,
      );
    }
    const payload = entry.payload ?? "tensors.bin";
    if (!payloads.has(payload)) {
      payloads.set(payload, fs.readFileSync(path.join(directory, payload)));
    }
    const buf = payloads.get(payload)!;
    const nbytes = numel(entry.shape) * ITEM_BYTES[dtype];
    if (entry.offset + nbytes > buf.length) {
      throw new TruncatedPayloadError(
        `tensor ${entry.name}: payload ${payload} has ${buf.length} bytes, ` +
          `need ${entry.offset + nbytes}`,
      );
    }
    // copy into an aligned Float32Array
    const slice = Buffer.from(buf.subarray(entry.offset, entry.offset + nbytes));
    const data = new Float32Array(
      slice.buffer,
      slice.byteOffset,
      nbytes / 4,
    ).slice();
    tensors.set(entry.name, { shape: [...entry.shape], dtype, data });
  }
  return { tensors, manifest };
}
